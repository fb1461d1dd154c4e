#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "edgecache/harness.hpp"

namespace py = pybind11;
using namespace edgecache;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Dense<double> to_dense(const DArray& a, const char* name) {
    if (a.ndim() != 2) throw std::invalid_argument(std::string(name) + " must be 2-D");
    Dense<double> m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

std::vector<double> to_vector(const DArray& a, const char* name) {
    if (a.ndim() != 1) throw std::invalid_argument(std::string(name) + " must be 1-D");
    return {a.data(), a.data() + a.size()};
}

DArray from_dense(const Dense<double>& m) {
    DArray out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

IArray from_requests(const RequestMatrix& m) {
    IArray out({m.slots(), m.users(), m.contents()});
    auto* p = out.mutable_data();
    for (std::size_t t = 0; t < m.slots(); ++t)
        for (std::size_t u = 0; u < m.users(); ++u)
            for (auto c : m.row(t, u)) *p++ = c;
    return out;
}

RequestMatrix to_requests(const IArray& a) {
    if (a.ndim() != 3) throw std::invalid_argument("request tensor must be slots x users x contents");
    RequestMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                    static_cast<std::size_t>(a.shape(2)));
    const auto* p = a.data();
    for (std::size_t t = 0; t < m.slots(); ++t)
        for (std::size_t u = 0; u < m.users(); ++u)
            for (auto& c : m.row(t, u)) {
                if (*p < 0) throw std::invalid_argument("request counts must be non-negative");
                c = *p++;
            }
    return m;
}

std::vector<Dense<double>> to_joints(const DArray& a) {
    if (a.ndim() != 3) throw std::invalid_argument("joints must be slots x users x contents");
    const auto T = static_cast<std::size_t>(a.shape(0)), U = static_cast<std::size_t>(a.shape(1)),
               F = static_cast<std::size_t>(a.shape(2));
    std::vector<Dense<double>> out;
    for (std::size_t t = 0; t < T; ++t) {
        Dense<double> m(U, F);
        std::copy(a.data() + t * U * F, a.data() + (t + 1) * U * F, m.data().begin());
        out.push_back(std::move(m));
    }
    return out;
}

py::dict tiers_dict(const AccessProbabilities& p) {
    py::dict d;
    d["own"] = p.own;
    d["d2d"] = p.d2d;
    d["serving_bs"] = p.serving_bs;
    d["cluster_bs"] = p.cluster_bs;
    d["local"] = p.local;
    d["cloud"] = p.cloud;
    return d;
}

py::tuple schedule_arrays(const IndicatorSchedule& s) {
    py::array_t<std::uint8_t> users({s.slots(), s.users(), s.contents()});
    py::array_t<std::uint8_t> bss({s.slots(), s.num_bs(), s.contents()});
    auto* pu = users.mutable_data();
    auto* pb = bss.mutable_data();
    for (std::size_t t = 0; t < s.slots(); ++t) {
        for (std::size_t u = 0; u < s.users(); ++u)
            for (std::size_t f = 0; f < s.contents(); ++f) *pu++ = s.user(t, u, f);
        for (std::size_t j = 0; j < s.num_bs(); ++j)
            for (std::size_t f = 0; f < s.contents(); ++f) *pb++ = s.bs(t, j, f);
    }
    return py::make_tuple(users, bss);
}

py::list rows_list(const std::vector<ResultRow>& rows) {
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["scheme"] = to_string(r.scheme);
        d["c_b"] = r.c_b;
        d["c_d"] = r.c_d;
        d["cost"] = r.cost;
        d["seed"] = r.seed;
        d["wall_time"] = r.wall_time;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_edgecache, m) {
    m.doc() = "Collaborative edge caching with learned user preferences";

    py::class_<TopologyConfig>(m, "TopologyConfig")
        .def(py::init([](std::size_t num_bs, std::size_t users_per_bs, std::size_t num_contents,
                         std::size_t bs_capacity, std::size_t user_capacity) {
                 return TopologyConfig{num_bs, users_per_bs, num_contents, bs_capacity, user_capacity};
             }),
             py::arg("num_bs") = 3, py::arg("users_per_bs") = 15, py::arg("num_contents") = 225,
             py::arg("bs_capacity") = 12, py::arg("user_capacity") = 4)
        .def_readwrite("num_bs", &TopologyConfig::num_bs)
        .def_readwrite("users_per_bs", &TopologyConfig::users_per_bs)
        .def_readwrite("num_contents", &TopologyConfig::num_contents)
        .def_readwrite("bs_capacity", &TopologyConfig::bs_capacity)
        .def_readwrite("user_capacity", &TopologyConfig::user_capacity);

    py::class_<CostParams>(m, "CostParams")
        .def(py::init<>())
        .def_readwrite("storage", &CostParams::storage)
        .def_readwrite("comm_d2d", &CostParams::comm_d2d)
        .def_readwrite("comm_serving_bs", &CostParams::comm_serving_bs)
        .def_readwrite("comm_cluster_bs", &CostParams::comm_cluster_bs)
        .def_readwrite("comm_cloud", &CostParams::comm_cloud)
        .def_property_readonly("phi_d2d", &CostParams::phi_d2d)
        .def_property_readonly("phi_serving_bs", &CostParams::phi_serving_bs)
        .def_property_readonly("phi_cluster_bs", &CostParams::phi_cluster_bs)
        .def_property_readonly("phi_cloud", &CostParams::phi_cloud)
        .def("violations", [](const CostParams& c) { return validate_cost_params(c).violations; });

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def("set", &set_config_value, py::arg("key"), py::arg("value"))
        .def("get", &get_config_value, py::arg("key"))
        .def("validate", &ExperimentConfig::validate)
        .def_readwrite("topology", &ExperimentConfig::topology)
        .def_readwrite("costs", &ExperimentConfig::costs)
        .def_static("keys", [] {
            std::vector<std::string> out;
            for (const auto& f : config_fields()) out.push_back(f.key);
            return out;
        })
        .def("to_text", [](const ExperimentConfig& c) {
            std::ostringstream out;
            write_config(out, c);
            return out.str();
        });

    m.def("zipf_pmf", &zipf_pmf, py::arg("num_contents"), py::arg("gamma"));

    m.def(
        "make_dataset",
        [](const ExperimentConfig& cfg, std::uint64_t seed) { return from_requests(make_dataset(cfg, seed)); },
        py::arg("config"), py::arg("seed"), "Requests as a slots x users x contents int64 array.");

    m.def(
        "slot_joints",
        [](const IArray& requests) {
            const auto joints = slot_joints(to_requests(requests));
            py::list out;
            for (const auto& j : joints) out.append(from_dense(j));
            return out;
        },
        py::arg("requests"));

    m.def(
        "aggregate_rho",
        [](const IArray& requests) {
            return from_dense(aggregate_preference(slot_profiles(to_requests(requests))).rho);
        },
        py::arg("requests"), "Normalized time-averaged preference rho (users x contents).");

    m.def(
        "het_access_probs",
        [](const DArray& a, const DArray& eta, const TopologyConfig& tc, std::size_t user, std::size_t content) {
            const auto topo = build_topology(tc);
            const auto p = make_het_placement(to_dense(a, "a"), to_dense(eta, "eta"), topo);
            return tiers_dict(het_access_probs(p, topo, user, content));
        },
        py::arg("a"), py::arg("eta"), py::arg("topology"), py::arg("user"), py::arg("content"));

    m.def(
        "hom_access_probs",
        [](const DArray& a, const DArray& eta, std::size_t users_per_cell, std::size_t num_bs, std::size_t content) {
            return tiers_dict(
                hom_access_probs(HomPlacement{to_vector(a, "a"), to_vector(eta, "eta")}, users_per_cell, num_bs, content));
        },
        py::arg("a"), py::arg("eta"), py::arg("users_per_cell"), py::arg("num_bs"), py::arg("content"));

    m.def(
        "average_cost_het",
        [](const DArray& a, const DArray& eta, const DArray& rho, const TopologyConfig& tc, const CostParams& c) {
            const auto topo = build_topology(tc);
            const auto p = make_het_placement(to_dense(a, "a"), to_dense(eta, "eta"), topo);
            return average_cost_het(p, to_dense(rho, "rho"), topo, c);
        },
        py::arg("a"), py::arg("eta"), py::arg("rho"), py::arg("topology"), py::arg("costs") = CostParams{});

    m.def(
        "average_cost_hom",
        [](const DArray& a, const DArray& eta, const DArray& rho, const TopologyConfig& tc, const CostParams& c) {
            const auto topo = build_topology(tc);
            const auto p = make_hom_placement(to_vector(a, "a"), to_vector(eta, "eta"), topo);
            return average_cost_hom(p, to_dense(rho, "rho"), topo, c);
        },
        py::arg("a"), py::arg("eta"), py::arg("rho"), py::arg("topology"), py::arg("costs") = CostParams{});

    m.def(
        "build_schedule",
        [](const std::string& scheme, const DArray& joints, const TopologyConfig& tc, std::optional<IArray> history) {
            const auto topo = build_topology(tc);
            const auto js = to_joints(joints);
            const RequestMatrix h = history ? to_requests(*history) : RequestMatrix{};
            return schedule_arrays(build_schedule(parse_scheme(scheme), js, h, topo));
        },
        py::arg("scheme"), py::arg("joints"), py::arg("topology"), py::arg("history") = py::none(),
        "Returns (user_indicators, bs_indicators) as uint8 arrays.");

    m.def(
        "run_experiment",
        [](const ExperimentConfig& cfg) {
            std::vector<ResultRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_experiment(cfg);
            }
            return rows_list(rows);
        },
        py::arg("config"));

    m.def(
        "compare_static_dynamic",
        [](const ExperimentConfig& cfg) {
            ComparisonTable t;
            {
                py::gil_scoped_release release;
                t = compare_static_dynamic(cfg);
            }
            py::list rows;
            for (const auto& r : t.rows) {
                py::dict d;
                d["c_b"] = r.c_b;
                d["c_d"] = r.c_d;
                d["seed"] = r.seed;
                for (std::size_t i = 0; i < t.schemes.size(); ++i) d[py::str(to_string(t.schemes[i]))] = r.costs[i];
                if (r.difference) d["difference"] = *r.difference;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config"));
}
