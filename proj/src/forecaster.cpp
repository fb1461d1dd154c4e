#include "edgecache/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "edgecache/synthgen.hpp"

namespace edgecache {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

LstmModel::LstmModel(std::size_t input_dim, std::size_t hidden_dim)
    : mean(Vec::Zero(static_cast<Index>(input_dim))),
      scale(Vec::Ones(static_cast<Index>(input_dim))),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim) {
    if (input_dim == 0 || hidden_dim == 0) throw std::invalid_argument("LSTM dimensions must be positive");
    theta_ = Vec::Zero(off_br() + cols_in());
}

LstmModel LstmModel::random(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed, double scale) {
    LstmModel m(input_dim, hidden_dim);
    SeededRng rng(seed, "lstm/init");
    // Readout stays at zero so an untrained model predicts the training mean.
    for (Index i = 0; i < m.off_wr(); ++i) m.theta_[i] = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

bool LstmModel::all_finite() const {
    return theta_.allFinite() && mean.allFinite() && scale.allFinite() && (scale.array() > 0.0).all();
}

bool LstmModel::operator==(const LstmModel& o) const {
    return input_dim_ == o.input_dim_ && hidden_dim_ == o.hidden_dim_ && theta_ == o.theta_ && mean == o.mean &&
           scale == o.scale;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Everything the backward pass needs. Columns are time steps; hs/cs carry
/// the zero initial state in column 0.
struct ForwardCache {
    Mat x;      // F x T
    Mat gates;  // 4H x T, post-activation
    Mat cs;     // H x (T+1)
    Mat hs;     // H x (T+1)
    Mat y;      // F x T
};

ForwardCache forward_cached(const LstmModel& model, const Mat& inputs) {
    const Index T = inputs.rows();
    const Index F = static_cast<Index>(model.input_dim());
    const Index H = static_cast<Index>(model.hidden_dim());
    if (inputs.cols() != F)
        throw std::invalid_argument("lstm input has " + std::to_string(inputs.cols()) + " features, model expects " +
                                    std::to_string(F));
    if (T == 0) throw std::invalid_argument("lstm input sequence is empty");
    ForwardCache c;
    c.x = inputs.transpose();
    c.gates = model.W() * c.x;
    c.gates.colwise() += model.b();
    c.cs = Mat::Zero(H, T + 1);
    c.hs = Mat::Zero(H, T + 1);
    const auto U = model.Ur();
    Vec z(4 * H);
    for (Index t = 0; t < T; ++t) {
        z.noalias() = c.gates.col(t) + U * c.hs.col(t);
        for (Index k = 0; k < H; ++k) {
            const double f = sigmoid(z[k]);
            const double i = sigmoid(z[H + k]);
            const double g = std::tanh(z[2 * H + k]);
            const double o = sigmoid(z[3 * H + k]);
            const double cell = f * c.cs(k, t) + i * g;
            c.gates(k, t) = f;
            c.gates(H + k, t) = i;
            c.gates(2 * H + k, t) = g;
            c.gates(3 * H + k, t) = o;
            c.cs(k, t + 1) = cell;
            c.hs(k, t + 1) = o * std::tanh(cell);
        }
    }
    c.y = model.Wr() * c.hs.rightCols(T);
    c.y.colwise() += model.br();
    return c;
}

}  // namespace

ForwardResult lstm_forward(const LstmModel& model, const Mat& inputs) {
    auto c = forward_cached(model, inputs);
    return {c.hs.rightCols(inputs.rows()).transpose(), c.y.transpose()};
}

LstmState initial_state(const LstmModel& model) {
    const auto H = static_cast<Index>(model.hidden_dim());
    return {Vec::Zero(H), Vec::Zero(H)};
}

Vec lstm_step(const LstmModel& model, LstmState& state, const Vec& x) {
    const auto H = static_cast<Index>(model.hidden_dim());
    if (x.size() != static_cast<Index>(model.input_dim())) throw std::invalid_argument("lstm_step: input size mismatch");
    Vec z = model.W() * x + model.Ur() * state.h + model.b();
    for (Index k = 0; k < H; ++k) {
        const double f = sigmoid(z[k]);
        const double i = sigmoid(z[H + k]);
        const double g = std::tanh(z[2 * H + k]);
        const double o = sigmoid(z[3 * H + k]);
        state.c[k] = f * state.c[k] + i * g;
        state.h[k] = o * std::tanh(state.c[k]);
    }
    return model.Wr() * state.h + model.br();
}

LossGradient loss_and_gradient(const LstmModel& model, const Mat& inputs, const Mat& targets) {
    if (targets.rows() != inputs.rows() || targets.cols() != inputs.cols())
        throw std::invalid_argument("loss_and_gradient: targets shape mismatch");
    const auto c = forward_cached(model, inputs);
    const Index T = inputs.rows();
    const Index F = static_cast<Index>(model.input_dim());
    const Index H = static_cast<Index>(model.hidden_dim());

    const Mat diff = c.y - targets.transpose();
    const double norm = static_cast<double>(T * F);
    LossGradient out;
    out.loss = diff.squaredNorm() / norm;
    out.gradient = Vec::Zero(static_cast<Index>(model.parameter_count()));

    LstmModel grad_view = model;  // reuse the Map accessors over the gradient buffer
    grad_view.parameters().setZero();

    const Mat dy = (2.0 / norm) * diff;  // F x T
    grad_view.Wr().noalias() = dy * c.hs.rightCols(T).transpose();
    grad_view.br() = dy.rowwise().sum();
    const Mat dh_out = model.Wr().transpose() * dy;  // H x T

    Mat dz(4 * H, T);
    Vec dh_next = Vec::Zero(H);
    Vec dc_next = Vec::Zero(H);
    const auto U = model.Ur();
    for (Index t = T - 1; t >= 0; --t) {
        for (Index k = 0; k < H; ++k) {
            const double f = c.gates(k, t), i = c.gates(H + k, t), g = c.gates(2 * H + k, t), o = c.gates(3 * H + k, t);
            const double tc = std::tanh(c.cs(k, t + 1));
            const double dh = dh_out(k, t) + dh_next[k];
            const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dz(k, t) = dc * c.cs(k, t) * f * (1.0 - f);
            dz(H + k, t) = dc * g * i * (1.0 - i);
            dz(2 * H + k, t) = dc * i * (1.0 - g * g);
            dz(3 * H + k, t) = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        dh_next.noalias() = U.transpose() * dz.col(t);
    }
    grad_view.W().noalias() = dz * c.x.transpose();
    grad_view.Ur().noalias() = dz * c.hs.leftCols(T).transpose();
    grad_view.b() = dz.rowwise().sum();
    out.gradient = grad_view.parameters();
    return out;
}

double sequence_loss(const LstmModel& model, const Mat& inputs, const Mat& targets) {
    const auto r = lstm_forward(model, inputs);
    return (r.outputs - targets).squaredNorm() / static_cast<double>(targets.size());
}

double gradient_check(const LstmModel& model, const Mat& inputs, const Mat& targets, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
    const auto analytic = loss_and_gradient(model, inputs, targets).gradient;
    LstmModel probe = model;
    double worst = 0.0;
    for (Index p = 0; p < probe.parameters().size(); ++p) {
        const double saved = probe.parameters()[p];
        probe.parameters()[p] = saved + epsilon;
        const double up = sequence_loss(probe, inputs, targets);
        probe.parameters()[p] = saved - epsilon;
        const double down = sequence_loss(probe, inputs, targets);
        probe.parameters()[p] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[p] - numeric) / denom);
    }
    return worst;
}

void TrainConfig::validate() const {
    if (hidden_dim == 0) throw std::invalid_argument("hidden_dim must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
    if (!(train_fraction > 0.0 && validation_fraction > 0.0 && test_fraction > 0.0))
        throw std::invalid_argument("split fractions must be positive");
    if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");
}

SplitSizes split_sizes(std::size_t slots, const TrainConfig& cfg) {
    cfg.validate();
    const auto part = [&](double frac) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(slots))));
    };
    SplitSizes s;
    s.validation = part(cfg.validation_fraction);
    s.test = part(cfg.test_fraction);
    if (slots < s.validation + s.test + 2)
        throw std::invalid_argument("series of " + std::to_string(slots) + " slots is too short to split");
    s.train = slots - s.validation - s.test;
    return s;
}

namespace {

Mat to_eigen(const Dense<double>& d) {
    Mat m(static_cast<Index>(d.rows()), static_cast<Index>(d.cols()));
    for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = d(r, c);
    return m;
}

Mat standardize_rows(const LstmModel& model, const Mat& raw) {
    Mat z = raw;
    z.rowwise() -= model.mean.transpose();
    z.array().rowwise() /= model.scale.transpose().array();
    return z;
}

/// Loss of predictions for target rows [begin, end) of z, warmed on z[0, begin-1).
double window_loss(const LstmModel& model, const Mat& z, Index begin, Index end) {
    const auto r = lstm_forward(model, z.topRows(end - 1));
    const Mat pred = r.outputs.bottomRows(end - begin);
    return (pred - z.middleRows(begin, end - begin)).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace

LstmModel train(const Dense<double>& series, const TrainConfig& cfg, TrainReport* report) {
    const auto split = split_sizes(series.rows(), cfg);
    const Index F = static_cast<Index>(series.cols());
    if (F == 0) throw std::invalid_argument("train: series has no features");
    const Mat raw = to_eigen(series);
    const auto n_tr = static_cast<Index>(split.train);
    const auto n_va = static_cast<Index>(split.validation);

    LstmModel model = LstmModel::random(series.cols(), cfg.hidden_dim, cfg.seed,
                                        1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim)));
    model.mean = raw.topRows(n_tr).colwise().mean().transpose();
    const Vec var = (raw.topRows(n_tr).rowwise() - model.mean.transpose()).colwise().squaredNorm() /
                    static_cast<double>(n_tr);
    model.scale = var.cwiseSqrt().unaryExpr([](double s) { return s > 1e-8 ? s : 1.0; });

    const Mat z = standardize_rows(model, raw);
    const Mat train_in = z.topRows(n_tr - 1);
    const Mat train_out = z.middleRows(1, n_tr - 1);

    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    Vec m1 = Vec::Zero(model.parameters().size());
    Vec m2 = Vec::Zero(model.parameters().size());

    LstmModel best = model;
    double best_val = window_loss(model, z, n_tr, n_tr + n_va);
    std::size_t best_epoch = 0, since_best = 0, epoch = 0;
    TrainReport rep;
    for (epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto lg = loss_and_gradient(model, train_in, train_out);
        const double gnorm = lg.gradient.norm();
        if (gnorm > cfg.clip_norm) lg.gradient *= cfg.clip_norm / gnorm;
        m1 = beta1 * m1 + (1.0 - beta1) * lg.gradient;
        m2 = beta2 * m2 + (1.0 - beta2) * lg.gradient.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
        model.parameters().array() -=
            cfg.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + adam_eps);

        const double val = window_loss(model, z, n_tr, n_tr + n_va);
        rep.train_curve.push_back(lg.loss);
        rep.validation_curve.push_back(val);
        if (val < best_val) {
            best_val = val;
            best = model;
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    if (report) {
        rep.epochs_run = std::min(epoch, cfg.epochs);
        rep.best_epoch = best_epoch;
        rep.best_validation_loss = best_val;
        rep.test_loss = window_loss(best, z, n_tr + n_va, z.rows());
        *report = std::move(rep);
    }
    return best;
}

double one_step_mse(const LstmModel& model, const Dense<double>& series, std::size_t begin, std::size_t end) {
    if (begin < 1 || end <= begin || end > series.rows()) throw std::invalid_argument("one_step_mse: bad range");
    const Mat z = standardize_rows(model, to_eigen(series));
    const auto r = lstm_forward(model, z.topRows(static_cast<Index>(end - 1)));
    double sse = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
        const Vec pred = model.unstandardize(r.outputs.row(static_cast<Index>(t - 1)).transpose());
        for (std::size_t f = 0; f < series.cols(); ++f) {
            const double d = pred[static_cast<Index>(f)] - series(t, f);
            sse += d * d;
        }
    }
    return sse / static_cast<double>((end - begin) * series.cols());
}

Dense<Count> rollout(const LstmModel& model, const Dense<double>& history, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("rollout: horizon must be >= 1");
    if (history.rows() == 0) throw std::invalid_argument("rollout: empty history");
    if (history.cols() != model.input_dim()) throw std::invalid_argument("rollout: history width mismatch");
    const auto F = static_cast<Index>(history.cols());
    auto state = initial_state(model);
    Vec x(F), y;
    for (std::size_t t = 0; t < history.rows(); ++t) {
        for (Index f = 0; f < F; ++f) x[f] = history(t, static_cast<std::size_t>(f));
        y = lstm_step(model, state, model.standardize(x));
    }
    Dense<Count> out(horizon, history.cols(), 0);
    for (std::size_t h = 0; h < horizon; ++h) {
        const Vec pred = model.unstandardize(y);
        for (Index f = 0; f < F; ++f) {
            const Count n = std::max<Count>(0, std::llround(pred[f]));
            out(h, static_cast<std::size_t>(f)) = n;
            x[f] = static_cast<double>(n);
        }
        if (h + 1 < horizon) y = lstm_step(model, state, model.standardize(x));
    }
    return out;
}

BaselineKind parse_baseline_kind(const std::string& s) {
    if (s == "last-value") return BaselineKind::LastValue;
    if (s == "slot-mean") return BaselineKind::SlotMean;
    if (s == "static-zipf") return BaselineKind::StaticZipf;
    throw std::invalid_argument("unknown baseline '" + s + "'");
}

std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::LastValue: return "last-value";
        case BaselineKind::SlotMean: return "slot-mean";
        case BaselineKind::StaticZipf: return "static-zipf";
    }
    return "?";
}

double fit_zipf_exponent(std::vector<double> totals) {
    std::erase_if(totals, [](double v) { return !(v > 0.0); });
    if (totals.size() < 2) return 0.0;
    std::sort(totals.begin(), totals.end(), std::greater<>());
    const double n = static_cast<double>(totals.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t r = 0; r < totals.size(); ++r) {
        const double x = std::log(static_cast<double>(r + 1)), y = std::log(totals[r]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::max(0.0, -slope);
}

Dense<Count> baseline_forecast(BaselineKind kind, const Dense<double>& history, std::size_t horizon,
                               std::optional<double> zipf_gamma) {
    if (history.rows() == 0) throw std::invalid_argument("baseline_forecast: empty history");
    const std::size_t T = history.rows(), F = history.cols();
    std::vector<Count> row(F, 0);
    switch (kind) {
        case BaselineKind::LastValue:
            for (std::size_t f = 0; f < F; ++f) row[f] = std::max<Count>(0, std::llround(history(T - 1, f)));
            break;
        case BaselineKind::SlotMean:
            for (std::size_t f = 0; f < F; ++f) {
                double s = 0.0;
                for (std::size_t t = 0; t < T; ++t) s += history(t, f);
                row[f] = std::max<Count>(0, std::llround(s / static_cast<double>(T)));
            }
            break;
        case BaselineKind::StaticZipf: {
            std::vector<double> totals(F, 0.0);
            double grand = 0.0;
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t f = 0; f < F; ++f) totals[f] += history(t, f);
            for (double v : totals) grand += v;
            const double gamma = zipf_gamma ? *zipf_gamma : fit_zipf_exponent(totals);
            const auto pmf = zipf_pmf(F, gamma);
            std::vector<std::size_t> order(F);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
            const double mean_total = grand / static_cast<double>(T);
            for (std::size_t r = 0; r < F; ++r) row[order[r]] = std::max<Count>(0, std::llround(mean_total * pmf[r]));
            break;
        }
    }
    Dense<Count> out(horizon, F, 0);
    for (std::size_t h = 0; h < horizon; ++h) std::copy(row.begin(), row.end(), out.row(h).begin());
    return out;
}

namespace {
constexpr std::string_view kModelMagic = "edgecache-lstm v1";

void write_vec(std::ostream& out, const char* name, const Vec& v) {
    out << name << ' ' << v.size();
    for (Index i = 0; i < v.size(); ++i) out << ' ' << detail::format_double(v[i]);
    out << '\n';
}

Vec read_vec(std::istream& in, const char* name, Index expected, std::size_t lineno) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(lineno, std::string("missing '") + name + "' line");
    std::istringstream ss(line);
    std::string tag;
    Index n = 0;
    ss >> tag >> n;
    if (tag != name) throw ParseError(lineno, std::string("expected '") + name + "', got '" + tag + "'");
    if (n != expected) throw ParseError(lineno, std::string("'") + name + "' has wrong length");
    Vec v(n);
    std::string tok;
    for (Index i = 0; i < n; ++i) {
        if (!(ss >> tok)) throw ParseError(lineno, std::string("'") + name + "' is truncated");
        v[i] = detail::parse_double(tok, lineno);
    }
    return v;
}
}  // namespace

void save_model(std::ostream& out, const LstmModel& model) {
    out << kModelMagic << '\n';
    out << "input_dim " << model.input_dim() << '\n';
    out << "hidden_dim " << model.hidden_dim() << '\n';
    write_vec(out, "mean", model.mean);
    write_vec(out, "scale", model.scale);
    write_vec(out, "params", model.parameters());
}

LstmModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) throw ParseError(1, "not an edgecache LSTM model file");
    auto read_dim = [&](const char* name, std::size_t lineno) {
        if (!std::getline(in, line)) throw ParseError(lineno, std::string("missing ") + name);
        const auto parts = detail::split(line, ' ');
        if (parts.size() != 2 || parts[0] != name) throw ParseError(lineno, std::string("expected ") + name);
        return static_cast<std::size_t>(detail::parse_int(parts[1], lineno));
    };
    const auto F = read_dim("input_dim", 2);
    const auto H = read_dim("hidden_dim", 3);
    LstmModel m(F, H);
    m.mean = read_vec(in, "mean", static_cast<Index>(F), 4);
    m.scale = read_vec(in, "scale", static_cast<Index>(F), 5);
    m.parameters() = read_vec(in, "params", static_cast<Index>(m.parameter_count()), 6);
    if (!m.all_finite()) throw ParseError(6, "model contains non-finite values or non-positive scale");
    return m;
}

void save_model_file(const std::string& path, const LstmModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_model(out, model);
}

LstmModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_model(in);
}

}  // namespace edgecache
