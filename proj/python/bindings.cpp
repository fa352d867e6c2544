#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xgbvar/complexity.hpp"
#include "xgbvar/estimator.hpp"
#include "xgbvar/harness.hpp"
#include "xgbvar/ingest.hpp"
#include "xgbvar/io.hpp"
#include "xgbvar/minimax.hpp"

namespace py = pybind11;
using namespace xgbvar;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses) {
    return Dataset(points, responses);
}

py::dict report_dict(const ComplexityReport& report) {
    py::dict out;
    out["v_xgb"] = report.v_xgb;
    py::dict hk;
    for (const auto& [anchor, value] : report.hk) hk[py::str(anchor)] = value;
    out["hk"] = hk;
    if (report.v_tilde)
        out["v_tilde"] = *report.v_tilde;
    else
        out["v_tilde"] = py::none();
    out["bounds_ok"] = report.bounds_ok;
    out["s"] = report.s_used;
    return out;
}

py::dict fit_dict(const FitResult& fit, int dims) {
    py::dict out;
    out["mode"] = fit.mode;
    out["c"] = fit.constant;
    out["rss"] = fit.rss;
    out["objective"] = fit.objective;
    out["active_l1"] = fit.active_l1;
    out["kkt_residual"] = fit.kkt_residual;
    out["iterations"] = fit.iterations;
    out["converged"] = fit.converged;
    out["ensemble"] = fit.to_ensemble(dims);
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact L1 complexity of depth-bounded tree ensembles, lattice least "
              "squares, and minimax-rate experiment tools";

    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<InfeasibleError>(m, "InfeasibleError");
    py::register_exception<BudgetError>(m, "BudgetError");

    py::class_<BasisAtom>(m, "BasisAtom")
        .def(py::init([](std::vector<int> lc, std::vector<double> lt, std::vector<int> uc,
                         std::vector<double> ut) {
                 BasisAtom atom;
                 atom.lower_coords = std::move(lc);
                 atom.lower_thresholds = std::move(lt);
                 atom.upper_coords = std::move(uc);
                 atom.upper_thresholds = std::move(ut);
                 return atom;
             }),
             py::arg("lower_coords") = std::vector<int>{},
             py::arg("lower_thresholds") = std::vector<double>{},
             py::arg("upper_coords") = std::vector<int>{},
             py::arg("upper_thresholds") = std::vector<double>{})
        .def_readonly("lower_coords", &BasisAtom::lower_coords)
        .def_readonly("lower_thresholds", &BasisAtom::lower_thresholds)
        .def_readonly("upper_coords", &BasisAtom::upper_coords)
        .def_readonly("upper_thresholds", &BasisAtom::upper_thresholds)
        .def("order", &BasisAtom::order)
        .def("__call__", [](const BasisAtom& atom, const Eigen::RowVectorXd& x) {
            return eval_atom(atom, x);
        });

    py::class_<SparseEnsemble>(m, "SparseEnsemble")
        .def(py::init<int, double>(), py::arg("dims"), py::arg("constant") = 0.0)
        .def_property_readonly("dims", &SparseEnsemble::dims)
        .def_property_readonly("constant", &SparseEnsemble::constant)
        .def("add_atom", &SparseEnsemble::add_atom, py::arg("atom"), py::arg("coef"))
        .def("add_constant", &SparseEnsemble::add_constant)
        .def("weight", &SparseEnsemble::weight)
        .def("max_order", &SparseEnsemble::max_order)
        .def("__len__", &SparseEnsemble::size)
        .def("__call__",
             [](const SparseEnsemble& ens, const Eigen::RowVectorXd& x) { return ens(x); })
        .def("thresholds", &SparseEnsemble::thresholds, py::arg("coordinate"))
        .def("atoms",
             [](const SparseEnsemble& ens) {
                 std::vector<std::pair<BasisAtom, double>> out(ens.atoms().begin(),
                                                               ens.atoms().end());
                 return out;
             })
        .def("scaled", &SparseEnsemble::scaled)
        .def("axpy", &SparseEnsemble::axpy, py::arg("scale"), py::arg("other"))
        .def("to_json", &ensemble_to_json)
        .def_static("from_json", &ensemble_from_json);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("points"), py::arg("responses"))
        .def_readonly("points", &Dataset::points)
        .def_readonly("responses", &Dataset::responses)
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("d", &Dataset::d);

    // Ingestion.
    m.def("parse_xgb_dump",
          [](const std::string& text) { return dump_to_ensemble(parse_xgb_dump(text)); },
          "Parse an XGBoost JSON dump into a merged ensemble");
    m.def("load_dataset", &load_dataset, py::arg("csv_text"), py::arg("response_column"));

    // Complexity measures.
    m.def("vxgb_ensemble",
          [](const SparseEnsemble& ens, int s) { return vxgb_ensemble(ens, s); },
          py::arg("ensemble"), py::arg("s"));
    m.def("vxgb_points",
          [](const Dataset& data, int s, const Eigen::VectorXd& z) {
              return vxgb_points(data, s, z);
          },
          py::arg("data"), py::arg("s"), py::arg("z"));
    m.def("vxgb_1d", &vxgb_1d, py::arg("ensemble"), py::arg("s"));
    m.def("total_variation_1d", &total_variation_1d);
    m.def("hk_variation",
          [](const SparseEnsemble& ens, const std::string& anchor) {
              return hk_variation(ens, Anchor::from_string(anchor));
          },
          py::arg("ensemble"), py::arg("anchor"));
    m.def("v_tilde",
          [](const SparseEnsemble& ens, int s) { return v_tilde(ens, s); },
          py::arg("ensemble"), py::arg("s"));
    m.def("infimal_conv_hk",
          [](const SparseEnsemble& ens, int s) { return infimal_conv_hk(ens, s); },
          py::arg("ensemble"), py::arg("s"));
    m.def("complexity_report",
          [](const SparseEnsemble& ens, int s, bool with_v_tilde) {
              return report_dict(complexity_report(ens, s, with_v_tilde));
          },
          py::arg("ensemble"), py::arg("s"), py::arg("with_v_tilde") = true);
    m.def("flip_axis", &flip_axis, py::arg("ensemble"), py::arg("coordinate"), py::arg("t"));
    m.def("lp_replication_penalty", &lp_replication_penalty, py::arg("leaf_weights"),
          py::arg("p"), py::arg("copies"));

    // Estimators.
    m.def("snap_to_midpoints",
          [](const SparseEnsemble& ens, const Dataset& data, int s) {
              return snap_to_midpoints(ens, grid_from_dataset(data), s);
          },
          py::arg("ensemble"), py::arg("data"), py::arg("s"));
    m.def("constrained_lse",
          [](const Dataset& data, int s, double v) {
              return fit_dict(constrained_lse(data, s, v), data.d());
          },
          py::arg("data"), py::arg("s"), py::arg("v"));
    m.def("penalized_lse",
          [](const Dataset& data, int s, double alpha) {
              return fit_dict(penalized_lse(data, s, alpha), data.d());
          },
          py::arg("data"), py::arg("s"), py::arg("alpha"));
    m.def("dual_alpha",
          [](const Dataset& data, int s, double v) { return dual_alpha(data, s, v); },
          py::arg("data"), py::arg("s"), py::arg("v"));
    m.def("greedy_boost",
          [](const Dataset& data, int max_depth, double alpha, double lambda, int rounds,
             double learning_rate, double min_gain) {
              BoostConfig config{max_depth, alpha, lambda, rounds, learning_rate, min_gain};
              const auto trees = greedy_boost(data, config);
              SparseEnsemble merged(data.d(), 0.0);
              for (const auto& tree : trees)
                  merged = merged.axpy(1.0, tree_to_ensemble(tree, data.d()));
              return merged;
          },
          py::arg("data"), py::arg("max_depth"), py::arg("alpha") = 0.0,
          py::arg("lambda_") = 0.0, py::arg("rounds") = 50, py::arg("learning_rate") = 0.3,
          py::arg("min_gain") = 0.0);
    m.def("objective_value", &objective_value, py::arg("data"), py::arg("ensemble"),
          py::arg("alpha"));

    // Packing family and the risk lower bound.
    m.def("psi", &psi, py::arg("m"), py::arg("k"), py::arg("x"));
    m.def("psi_primitive", &psi_primitive, py::arg("m"), py::arg("k"), py::arg("x"));
    m.def("haar_h", &haar_h, py::arg("m"), py::arg("k"), py::arg("x"));

    py::class_<PackingFamily>(m, "PackingFamily")
        .def(py::init<int, int, double, std::vector<double>, double>(), py::arg("s_bar"),
             py::arg("l"), py::arg("v"), py::arg("box"), py::arg("sigma"))
        .def_property_readonly("q_size", &PackingFamily::q_size)
        .def("f_eta",
             [](const PackingFamily& family, const std::vector<int>& eta,
                const Eigen::RowVectorXd& x) { return family.f_eta(eta, x); })
        .def("distance_squared", &PackingFamily::distance_squared)
        .def("measure_mass", &PackingFamily::measure_mass);

    m.def("family_checks",
          [](const PackingFamily& family, int pairs, std::uint64_t seed) {
              return family_report_to_json(family_checks(family, pairs, seed));
          },
          py::arg("family"), py::arg("pairs") = 8, py::arg("seed") = 1);
    m.def("assouad_bound",
          [](int s_bar, double v, double sigma, std::int64_t n) {
              const AssouadBound bound = assouad_bound(s_bar, v, sigma, n);
              py::dict out;
              out["bound"] = bound.bound;
              out["under_threshold"] = bound.under_threshold;
              out["l"] = bound.l;
              out["q"] = bound.q;
              out["sample_threshold"] = bound.sample_threshold;
              return out;
          },
          py::arg("s_bar"), py::arg("v"), py::arg("sigma"), py::arg("n"));

    // Rate experiments from a JSON config (mirrors the CLI surface).
    m.def("run_rate_experiment",
          [](const std::string& config_json) {
              const ExperimentConfig config = experiment_config_from_json(config_json);
              const RiskTable table = run_rate_experiment(config);
              py::dict out;
              out["csv"] = risk_table_to_csv(table);
              out["json"] = risk_table_to_json(table);
              out["slope_json"] = rate_fit_to_json(fit_rate(table));
              return out;
          },
          py::arg("config_json"));
}
