#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "scca/errors.hpp"
#include "scca/json_io.hpp"
#include "scca/oracle_suite.hpp"
#include "scca/pipeline.hpp"
#include "scca/simharness.hpp"

namespace fs = std::filesystem;
using namespace scca;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kValidation = 2, kDegenerate = 3 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<int> threads;
    std::string out = "scca_out";
    std::optional<double> alpha;
    std::optional<bool> conservative;
    bool no_header = false;
    bool quiet = false;
};

std::string schema_file(const std::string& name) { return (fs::path(default_schema_dir()) / name).string(); }

Json load_config(const std::string& path, const std::string& schema) {
    const Json doc = read_json_file(path);
    require_schema(doc, schema_file(schema));
    return doc;
}

// Output documents are checked against their own schema before writing.
void write_checked(const Json& doc, const std::string& schema, const fs::path& path) {
    const std::string err = validate_schema(doc, read_json_file(schema_file(schema)));
    if (!err.empty()) throw std::logic_error("output does not match " + schema + ": " + err);
    write_text_file(path.string(), dump_json(doc));
}

std::string resolve(const std::string& path, const std::string& config_path) {
    const fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(config_path).parent_path() / p).string();
}

int env_threads(int fallback) {
    const char* env = std::getenv("SCCA_THREADS");
    if (env == nullptr || *env == '\0') return fallback;
    try {
        std::size_t used = 0;
        const int k = std::stoi(env, &used);
        if (used == std::string(env).size() && k >= 1) return k;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("SCCA_THREADS must be a positive integer, got '") + env + "'");
}

void info(const Options& o, const std::string& msg) {
    if (!o.quiet) std::cerr << msg << "\n";
}

int cmd_simulate(const Options& o) {
    const Json cfg = load_config(o.config, "simulate_config.schema.json");
    ExperimentSpec spec = spec_from_json(cfg.at("experiment"));
    if (o.seed) spec.setting.seed = *o.seed;
    if (o.reps) spec.setting.n_reps = *o.reps;
    if (o.alpha) spec.alpha = *o.alpha;
    if (o.threads) spec.threads = *o.threads;
    spec.threads = env_threads(spec.threads);
    spec.validate();
    std::vector<std::string> formats{"csv", "json"};
    if (cfg.contains("formats")) formats = cfg["formats"].get<std::vector<std::string>>();

    const AggregateResult result = run_experiment(spec);
    fs::create_directories(o.out);
    for (const auto& f : formats) {
        if (f == "json") {
            write_checked(report_json(result), "report.schema.json", fs::path(o.out) / "report.json");
        } else {
            export_report(result, ReportFormat::Csv, o.out);
        }
    }
    info(o, "simulate: " + std::to_string(result.n_reps) + " replications (" + std::to_string(result.n_failed) +
                " failed), reports in " + o.out);
    return kOk;
}

int cmd_fit(const Options& o) {
    const Json cfg = load_config(o.config, "fit_config.schema.json");
    FitConfig fc = fit_config_from_json(cfg);
    if (o.alpha) fc.inference.alpha = *o.alpha;
    if (o.conservative) fc.conservative = *o.conservative;
    if (o.seed) fc.colar.split_seed = *o.seed;
    const bool header = o.no_header ? false : cfg.value("header", true);
    const LabeledBlock x = read_csv_block(resolve(cfg.at("x_csv").get<std::string>(), o.config), header, "x");
    const LabeledBlock y = read_csv_block(resolve(cfg.at("y_csv").get<std::string>(), o.config), header, "y");

    const PipelineFit fit = fit_blocks(x, y, fc);
    Json doc = fit_to_json(fit, x.names, y.names, fc);
    doc["n"] = x.values.rows();
    fs::create_directories(o.out);
    write_checked(doc, "fit.schema.json", fs::path(o.out) / "fit.json");
    if (fit.no_signal()) {
        info(o, "fit: no signal detected (COLAR returned zero directions); fit.json written without inference");
        return kOk;
    }
    Json inf;
    inf["schema_version"] = 1;
    inf["source"] = "fit";
    inf["n"] = x.values.rows();
    inf["p"] = x.values.cols();
    inf["q"] = y.values.cols();
    inf["inference"] = doc["inference"];
    write_checked(inf, "inference.schema.json", fs::path(o.out) / "inference.json");
    info(o, "fit: rho_hat = " + format_double(fit.colar.rho_hat) + ", BH discoveries " +
                std::to_string(fit.inference->bh.discoveries.size()) + ", BY discoveries " +
                std::to_string(fit.inference->by.discoveries.size()) + ", output in " + o.out);
    return kOk;
}

int cmd_infer(const Options& o) {
    const Json cfg = load_config(o.config, "infer_config.schema.json");
    const std::string fit_path = resolve(cfg.at("fit").get<std::string>(), o.config);
    const Json fit_doc = load_config(fit_path, "fit.schema.json");
    InferenceConfig ic;
    ic.level = cfg.value("level", ic.level);
    ic.alpha = cfg.value("alpha", ic.alpha);
    if (o.alpha) ic.alpha = *o.alpha;
    bool conservative = cfg.value("conservative", false);
    if (o.conservative) conservative = *o.conservative;
    ic.validate();

    const InferenceReport report = reinfer_from_fit_json(fit_doc, ic);
    const auto x_names = fit_doc.at("x_names").get<std::vector<std::string>>();
    const auto y_names = fit_doc.at("y_names").get<std::vector<std::string>>();
    Json inf;
    inf["schema_version"] = 1;
    inf["source"] = fit_path;
    inf["n"] = report.n;
    inf["p"] = report.p;
    inf["q"] = report.q;
    inf["inference"] = inference_to_json(report, x_names, y_names, conservative);
    fs::create_directories(o.out);
    write_checked(inf, "inference.schema.json", fs::path(o.out) / "inference.json");
    info(o, "infer: BH discoveries " + std::to_string(report.bh.discoveries.size()) + ", BY discoveries " +
                std::to_string(report.by.discoveries.size()) + ", output in " + o.out);
    return kOk;
}

int cmd_oracle_check(const Options& o) {
    OracleSuiteOptions opts;
    if (!o.config.empty()) {
        const Json cfg = load_config(o.config, "oracle_config.schema.json");
        opts.n_models = cfg.value("n_models", opts.n_models);
        opts.seed = cfg.value("seed", opts.seed);
        opts.mc_models = cfg.value("mc_models", opts.mc_models);
        opts.mc_draws = cfg.value("mc_draws", opts.mc_draws);
    }
    if (o.seed) opts.seed = *o.seed;
    const std::vector<OracleCheck> checks = run_oracle_suite(opts);
    bool all = true;
    Json doc;
    doc["schema_version"] = 1;
    Json arr = Json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": worst " << format_double(c.worst)
                  << " tolerance " << format_double(c.tolerance) << (c.detail.empty() ? "" : " (" + c.detail + ")")
                  << "\n";
        Json cj;
        cj["name"] = c.name;
        cj["passed"] = c.passed;
        cj["worst"] = c.worst;
        cj["tolerance"] = c.tolerance;
        cj["detail"] = c.detail;
        arr.push_back(cj);
    }
    doc["all_passed"] = all;
    doc["checks"] = arr;
    fs::create_directories(o.out);
    write_checked(doc, "oracle_report.schema.json", fs::path(o.out) / "oracle_check.json");
    return all ? kOk : kInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse canonical correlation analysis with de-biased inference"};
    app.require_subcommand(1);
    Options o;
    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment and write reports");
    auto* fit = app.add_subcommand("fit", "Fit X and Y CSV blocks and report inference");
    auto* infer = app.add_subcommand("infer", "Recompute inference from a fit.json");
    auto* oracle = app.add_subcommand("oracle-check", "Run the closed-form identity checks");

    for (auto* sub : {sim, fit, infer}) sub->add_option("--config", o.config, "JSON config file")->required();
    oracle->add_option("--config", o.config, "JSON config file (optional)");
    for (auto* sub : {sim, fit, infer, oracle}) {
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_flag("-q,--quiet", o.quiet, "Suppress progress messages");
    }
    for (auto* sub : {sim, fit, oracle}) sub->add_option("--seed", o.seed, "Random seed");
    sim->add_option("--reps", o.reps, "Number of replications")->check(CLI::PositiveNumber);
    sim->add_option("--threads", o.threads, "Worker threads (SCCA_THREADS overrides)")->check(CLI::PositiveNumber);
    for (auto* sub : {sim, fit, infer})
        sub->add_option("--alpha", o.alpha, "Test / FDR level")->check(CLI::Range(0.0, 1.0));
    for (auto* sub : {fit, infer})
        sub->add_option("--conservative", o.conservative, "Flag coordinates with the conservative interval");
    fit->add_flag("--no-header", o.no_header, "CSV files have no header row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (fit->parsed()) return cmd_fit(o);
        if (infer->parsed()) return cmd_infer(o);
        return cmd_oracle_check(o);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const DegenerateRunError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDegenerate;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
