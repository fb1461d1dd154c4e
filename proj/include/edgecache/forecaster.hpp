#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "edgecache/core.hpp"

namespace edgecache {

/// Single-layer LSTM with a linear readout, plus the per-feature
/// standardization it was trained under.
///
/// Parameters live in one flat vector so the optimizer, the gradient check
/// and persistence all see the same layout:
///   W  (4H x F)  input weights, gate blocks [forget; input; candidate; output]
///   Ur (4H x H)  recurrent weights, same block order
///   b  (4H)      gate biases
///   Wr (F x H)   readout weights
///   br (F)       readout bias
class LstmModel {
public:
    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;
    using MatMap = Eigen::Map<Mat>;
    using ConstMatMap = Eigen::Map<const Mat>;
    using VecMap = Eigen::Map<Vec>;
    using ConstVecMap = Eigen::Map<const Vec>;

    LstmModel() = default;
    /// All-zero parameters, identity scaling.
    LstmModel(std::size_t input_dim, std::size_t hidden_dim);
    /// Weights uniform on [-scale, scale]; readout starts at zero.
    static LstmModel random(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed, double scale);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden_dim() const { return hidden_dim_; }
    std::size_t parameter_count() const { return static_cast<std::size_t>(theta_.size()); }

    Vec& parameters() { return theta_; }
    const Vec& parameters() const { return theta_; }

    MatMap W() { return {theta_.data(), gates(), cols_in()}; }
    ConstMatMap W() const { return {theta_.data(), gates(), cols_in()}; }
    MatMap Ur() { return {theta_.data() + off_u(), gates(), cols_h()}; }
    ConstMatMap Ur() const { return {theta_.data() + off_u(), gates(), cols_h()}; }
    VecMap b() { return {theta_.data() + off_b(), gates()}; }
    ConstVecMap b() const { return {theta_.data() + off_b(), gates()}; }
    MatMap Wr() { return {theta_.data() + off_wr(), cols_in(), cols_h()}; }
    ConstMatMap Wr() const { return {theta_.data() + off_wr(), cols_in(), cols_h()}; }
    VecMap br() { return {theta_.data() + off_br(), cols_in()}; }
    ConstVecMap br() const { return {theta_.data() + off_br(), cols_in()}; }

    /// Standardization: z = (x - mean) / scale, per feature.
    Vec mean;
    Vec scale;

    Vec standardize(const Vec& x) const { return (x - mean).cwiseQuotient(scale); }
    Vec unstandardize(const Vec& z) const { return z.cwiseProduct(scale) + mean; }

    bool all_finite() const;
    bool operator==(const LstmModel& o) const;

private:
    Eigen::Index gates() const { return static_cast<Eigen::Index>(4 * hidden_dim_); }
    Eigen::Index cols_in() const { return static_cast<Eigen::Index>(input_dim_); }
    Eigen::Index cols_h() const { return static_cast<Eigen::Index>(hidden_dim_); }
    Eigen::Index off_u() const { return gates() * cols_in(); }
    Eigen::Index off_b() const { return off_u() + gates() * cols_h(); }
    Eigen::Index off_wr() const { return off_b() + gates(); }
    Eigen::Index off_br() const { return off_wr() + cols_in() * cols_h(); }

    std::size_t input_dim_ = 0;
    std::size_t hidden_dim_ = 0;
    Vec theta_;
};

struct ForwardResult {
    Eigen::MatrixXd hidden;   // T x H
    Eigen::MatrixXd outputs;  // T x F
};

/// Runs the recurrence from h0 = c0 = 0 over `inputs` (T x F, one step per row).
ForwardResult lstm_forward(const LstmModel& model, const Eigen::MatrixXd& inputs);

/// Recurrent state for step-by-step evaluation.
struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

LstmState initial_state(const LstmModel& model);
/// Advances `state` by one input and returns the readout.
Eigen::VectorXd lstm_step(const LstmModel& model, LstmState& state, const Eigen::VectorXd& x);

/// Mean squared error over all steps and features, and its gradient with
/// respect to the flat parameter vector (backpropagation through time).
struct LossGradient {
    double loss = 0.0;
    Eigen::VectorXd gradient;
};
LossGradient loss_and_gradient(const LstmModel& model, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets);
double sequence_loss(const LstmModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

/// Max relative error between analytic and central-difference gradients.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
double gradient_check(const LstmModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                      double epsilon);

struct TrainConfig {
    std::size_t hidden_dim = 64;
    std::size_t epochs = 200;
    double learning_rate = 1e-2;
    double clip_norm = 5.0;
    double train_fraction = 0.70;
    double validation_fraction = 0.15;
    double test_fraction = 0.15;
    std::uint64_t seed = 1;
    std::size_t patience = 20;
    void validate() const;
};

struct SplitSizes {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};
SplitSizes split_sizes(std::size_t slots, const TrainConfig& cfg);

struct TrainReport {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    double test_loss = 0.0;
    std::vector<double> train_curve;
    std::vector<double> validation_curve;
};

/// Fits one model to a T x F series by full-sequence BPTT with Adam and
/// gradient-norm clipping, on one-step-ahead standardized MSE. Returns the
/// parameters with the best validation loss.
LstmModel train(const Dense<double>& series, const TrainConfig& cfg, TrainReport* report = nullptr);

/// Teacher-forced one-step-ahead MSE (original units) over target slots
/// [begin, end) of `series`, with the state warmed up on everything before.
double one_step_mse(const LstmModel& model, const Dense<double>& series, std::size_t begin, std::size_t end);

/// Autoregressive forecast of `horizon` rows after `history`. Each emitted
/// row is rounded and clamped at zero, then fed back as the next input.
Dense<Count> rollout(const LstmModel& model, const Dense<double>& history, std::size_t horizon);

enum class BaselineKind { LastValue, SlotMean, StaticZipf };

BaselineKind parse_baseline_kind(const std::string& s);
std::string to_string(BaselineKind k);

/// Least-squares slope of log(count) against log(rank) over positive
/// descending counts, negated and floored at zero.
double fit_zipf_exponent(std::vector<double> totals);

Dense<Count> baseline_forecast(BaselineKind kind, const Dense<double>& history, std::size_t horizon,
                               std::optional<double> zipf_gamma = std::nullopt);

/// Text dump with a header; doubles are written in shortest round-trip form
/// so a reload is bit-exact.
void save_model(std::ostream& out, const LstmModel& model);
LstmModel load_model(std::istream& in);
void save_model_file(const std::string& path, const LstmModel& model);
LstmModel load_model_file(const std::string& path);

}  // namespace edgecache
