#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scca/datagen.hpp"
#include "scca/errors.hpp"
#include "scca/inference.hpp"
#include "scca/model.hpp"
#include "scca/nodewise.hpp"
#include "scca/oracle_suite.hpp"
#include "scca/pipeline.hpp"
#include "scca/simharness.hpp"

namespace py = pybind11;
using namespace scca;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// decodes them.
std::string fit_json(const Matrix& x, const Matrix& y, const std::string& config,
                     const std::vector<std::string>& x_names, const std::vector<std::string>& y_names) {
    const FitConfig cfg = fit_config_from_json(Json::parse(config));
    LabeledBlock xb{x, x_names};
    LabeledBlock yb{y, y_names};
    for (Index k = static_cast<Index>(xb.names.size()); k < x.cols(); ++k) xb.names.push_back("x" + std::to_string(k + 1));
    for (Index k = static_cast<Index>(yb.names.size()); k < y.cols(); ++k) yb.names.push_back("y" + std::to_string(k + 1));
    require(static_cast<Index>(xb.names.size()) == x.cols() && static_cast<Index>(yb.names.size()) == y.cols(),
            "fit: too many column names");
    PipelineFit fit;
    {
        py::gil_scoped_release release;
        fit = fit_blocks(xb, yb, cfg);
    }
    Json doc = fit_to_json(fit, xb.names, yb.names, cfg);
    doc["n"] = x.rows();
    return dump_json(doc);
}

std::string simulate_json(const std::string& experiment, std::optional<int> threads) {
    ExperimentSpec spec = spec_from_json(Json::parse(experiment));
    if (threads) spec.threads = *threads;
    spec.validate();
    AggregateResult result;
    {
        py::gil_scoped_release release;
        result = run_experiment(spec);
    }
    return dump_json(report_json(result));
}

py::dict colar_dict(const ColarFit& f) {
    py::dict d;
    d["alpha_hat"] = f.alpha_hat;
    d["beta_hat"] = f.beta_hat;
    d["rho_hat"] = f.rho_hat;
    d["x_hat"] = f.x_hat;
    d["y_hat"] = f.y_hat;
    d["no_signal"] = f.no_signal;
    d["stage1_iterations"] = f.diagnostics.stage1_iterations;
    d["stage1_converged"] = f.diagnostics.stage1_converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_scca, m) {
    m.doc() = "Sparse CCA with one-step de-biased inference";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<DegenerateRunError>(m, "DegenerateRunError", PyExc_RuntimeError);

    m.def("fit_json", &fit_json, py::arg("x"), py::arg("y"), py::arg("config") = "{}",
          py::arg("x_names") = std::vector<std::string>{}, py::arg("y_names") = std::vector<std::string>{});
    m.def("simulate_json", &simulate_json, py::arg("experiment"), py::arg("threads") = py::none());

    m.def(
        "fit_colar",
        [](const Matrix& x, const Matrix& y, const std::string& config) {
            const ColarConfig cfg = colar_config_from_json(Json::parse(config));
            Dataset d{x, y};
            return colar_dict(fit_colar(d, cfg));
        },
        py::arg("x"), py::arg("y"), py::arg("config") = "{}");

    m.def(
        "invert_nodewise",
        [](const Matrix& a, Index n, double c_mult, std::optional<double> lambda, int max_iter, double tol) {
            NodewiseConfig cfg;
            cfg.c_mult = c_mult;
            cfg.lambda = lambda;
            cfg.max_iter = max_iter;
            cfg.tol = tol;
            const PrecisionEstimate est = invert_nodewise(a, n, cfg);
            py::dict d;
            d["phi_hat"] = est.phi_hat;
            d["tau_sq"] = est.tau_sq;
            d["kkt_max"] = est.kkt_max;
            d["lambda"] = est.lambda;
            d["unconverged_columns"] = est.unconverged_columns;
            return d;
        },
        py::arg("a"), py::arg("n"), py::arg("c_mult") = 40.0, py::arg("lambda_") = py::none(),
        py::arg("max_iter") = 5000, py::arg("tol") = 1e-8);

    m.def(
        "oracle_matrices",
        [](const Matrix& sigma_x, const Matrix& sigma_y, const Matrix& raw_u, const Matrix& raw_v, const Vector& lambda) {
            const CcaModel model = build_model(sigma_x, sigma_y, raw_u, raw_v, lambda);
            const ScaledTruth t = scaled_truth(model);
            py::dict d;
            d["h0"] = oracle_H0(model);
            d["phi0"] = oracle_Phi0(model);
            d["x0"] = t.x0;
            d["y0"] = t.y0;
            d["rho0"] = model.rho0();
            d["eig_bound"] = hessian_min_eig_bound(model);
            return d;
        },
        py::arg("sigma_x"), py::arg("sigma_y"), py::arg("raw_u"), py::arg("raw_v"), py::arg("lambdas"));

    m.def(
        "simulate_dataset",
        [](Index p, Index q, Index n, double rho0, const std::string& cov_kind, std::uint64_t seed, std::uint64_t rep) {
            SimSetting s;
            s.p = p;
            s.q = q;
            s.n = n;
            s.rho0 = rho0;
            s.cov_kind = cov_kind_from_string(cov_kind);
            s.validate();
            const ExperimentContext ctx(s);
            Rng rng = replication_stream(seed, rep);
            const Dataset d = ctx.sampler.draw(n, rng);
            return py::make_tuple(d.x, d.y, ctx.truth.scaled.x0, ctx.truth.scaled.y0);
        },
        py::arg("p"), py::arg("q"), py::arg("n"), py::arg("rho0"), py::arg("cov_kind") = "identity",
        py::arg("seed") = 0, py::arg("rep") = 0);

    m.def("standardize_columns", [](const Matrix& x) { return standardize_columns(x, "X"); }, py::arg("x"));
    m.def("test_zero", &test_zero, py::arg("x_db"), py::arg("sigma"), py::arg("n"));
    m.def(
        "ci_squared",
        [](double x, double sigma, Index n, double level, bool conservative) {
            const Interval iv = ci_squared(x, sigma, n, level, conservative);
            return py::make_tuple(iv.lower, iv.upper);
        },
        py::arg("x_db"), py::arg("sigma"), py::arg("n"), py::arg("level") = 0.95, py::arg("conservative") = false);
    m.def(
        "fdr_adjust",
        [](const Vector& p, const std::string& method, double alpha) {
            require(method == "BH" || method == "BY", "method must be 'BH' or 'BY'");
            const FdrResult r = fdr_adjust(p, method == "BH" ? FdrMethod::BH : FdrMethod::BY, alpha);
            return py::make_tuple(r.adjusted, r.discoveries);
        },
        py::arg("pvalues"), py::arg("method") = "BH", py::arg("alpha") = 0.05);

    m.def(
        "oracle_check",
        [](int n_models, std::uint64_t seed, int mc_models, int mc_draws) {
            OracleSuiteOptions opts;
            opts.n_models = n_models;
            opts.seed = seed;
            opts.mc_models = mc_models;
            opts.mc_draws = mc_draws;
            std::vector<OracleCheck> checks;
            {
                py::gil_scoped_release release;
                checks = run_oracle_suite(opts);
            }
            py::list out;
            for (const auto& c : checks) {
                py::dict d;
                d["name"] = c.name;
                d["passed"] = c.passed;
                d["worst"] = c.worst;
                d["tolerance"] = c.tolerance;
                d["detail"] = c.detail;
                out.append(d);
            }
            return out;
        },
        py::arg("n_models") = 50, py::arg("seed") = 20240601, py::arg("mc_models") = 5, py::arg("mc_draws") = 1000000);

    m.def("schema_dir", &default_schema_dir);
}
