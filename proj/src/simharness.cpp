#include "scca/simharness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <sstream>
#include <thread>

#include "scca/debias.hpp"
#include "scca/errors.hpp"
#include "scca/model.hpp"

namespace scca {

void ExperimentSpec::validate() const {
    setting.validate();
    colar.validate();
    nodewise.validate();
    require(!setting_id.empty() && setting_id.find_first_of(",\"\n\r") == std::string::npos,
            "experiment: setting_id must be nonempty without commas, quotes or newlines");
    require(!coords.empty(), "experiment: at least one coordinate is required");
    for (Index c : coords) require(c >= 1 && c <= setting.p, "experiment: coordinates must lie in [1, p]");
    require(level > 0.0 && level < 1.0, "experiment: level must lie in (0, 1)");
    require(alpha > 0.0 && alpha < 1.0, "experiment: alpha must lie in (0, 1)");
    require(threads >= 1, "experiment: threads must be positive");
    require(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0,
            "experiment: max_failure_fraction must lie in [0, 1]");
}

ExperimentContext::ExperimentContext(const SimSetting& setting)
    : truth(make_truth(setting)), sampler(truth.model) {}

ReplicationRecord run_replication(const ExperimentSpec& spec, int rep) {
    spec.validate();
    const ExperimentContext ctx(spec.setting);
    return run_replication(spec, ctx, rep);
}

ReplicationRecord run_replication(const ExperimentSpec& spec, const ExperimentContext& ctx, int rep) {
    require(rep >= 0, "run_replication: rep index must be nonnegative");
    ReplicationRecord rec;
    rec.rep = rep;
    Rng rng = replication_stream(spec.setting.seed, static_cast<std::uint64_t>(rep));
    const Dataset data = ctx.sampler.draw(spec.setting.n, rng);
    const Index n = data.n();

    try {
        const ColarFit fit = fit_colar(data, spec.colar);
        rec.rho_hat = fit.rho_hat;
        rec.admm_iterations = fit.diagnostics.stage1_iterations;
        if (fit.no_signal) {
            rec.failed = true;
            rec.failure = "no_signal";
            return rec;
        }
        const CovarianceTriple cov = empirical_covariances(data.x, data.y);
        const Matrix h = hessian_H(cov, fit.x_hat, fit.y_hat);
        const PrecisionEstimate prec = invert_nodewise(h, n, spec.nodewise);
        rec.kkt_max = prec.kkt_max;

        const DebiasResult db = debias(data, cov, fit.x_hat, fit.y_hat, std::abs(fit.rho_hat), prec.phi_hat);
        rec.rho_sq_db = db.rho_sq_db;
        rec.rho_ci = rho_sq_ci(db.rho_sq_db, db.sigma_rho_sq_pseudo, n, spec.level);
        const double rho0 = ctx.truth.model.rho0();
        rec.rho_covered = rec.rho_ci.contains(rho0 * rho0);

        for (Index c : spec.coords) {
            const Index i = c - 1;
            CoordOutcome out;
            out.coord = c;
            out.x_true = ctx.truth.scaled.x0[i];
            out.x_colar = fit.x_hat[i];
            out.x_db = db.x_db[i];
            out.sigma = db.sigma_hat[i];
            out.ordinary = ci_squared(out.x_db, out.sigma, n, spec.level, false);
            out.conservative = ci_squared(out.x_db, out.sigma, n, spec.level, true);
            const double target = out.x_true * out.x_true;
            out.covered_ordinary = out.ordinary.contains(target);
            out.covered_conservative = out.conservative.contains(target);
            if (!(out.sigma > 0.0)) {
                throw NumericalError("zero pseudo-observation variance at coordinate " + std::to_string(c));
            }
            out.p_value = test_zero(out.x_db, out.sigma, n);
            out.rejected = out.p_value < spec.alpha;
            rec.coords.push_back(out);
        }
    } catch (const NumericalError& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.coords.clear();
    }
    return rec;
}

namespace {

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    int count = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double mean() const { return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN(); }
    double sd() const {
        if (count < 2) return count == 1 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        const double m = mean();
        return std::sqrt(std::max(0.0, (sum_sq - count * m * m) / (count - 1)));
    }
};

}  // namespace

AggregateResult aggregate(const ExperimentSpec& spec, std::vector<ReplicationRecord> records) {
    AggregateResult res;
    res.spec = spec;
    res.n_reps = static_cast<int>(records.size());

    const std::size_t k = spec.coords.size();
    std::vector<Moments> cov_o(k), cov_c(k), len_o(k), len_c(k), rej(k), col(k), dbm(k);
    std::vector<double> x_true(k, 0.0);
    Moments rho_db, rho_cov, rho_hat;
    for (const auto& r : records) {
        if (r.failed) {
            ++res.n_failed;
            continue;
        }
        require(r.coords.size() == k, "aggregate: record coordinates do not match the experiment");
        rho_db.add(r.rho_sq_db);
        rho_cov.add(r.rho_covered ? 1.0 : 0.0);
        rho_hat.add(std::abs(r.rho_hat));
        for (std::size_t c = 0; c < k; ++c) {
            const CoordOutcome& o = r.coords[c];
            x_true[c] = o.x_true;
            cov_o[c].add(o.covered_ordinary ? 1.0 : 0.0);
            cov_c[c].add(o.covered_conservative ? 1.0 : 0.0);
            len_o[c].add(o.ordinary.length());
            len_c[c].add(o.conservative.length());
            rej[c].add(o.rejected ? 1.0 : 0.0);
            col[c].add(std::abs(o.x_colar));
            dbm[c].add(std::abs(o.x_db));
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        CoordAggregate a;
        a.coord = spec.coords[c];
        a.x_true = x_true[c];
        a.coverage_ordinary = cov_o[c].mean();
        a.coverage_conservative = cov_c[c].mean();
        a.mean_length_ordinary = len_o[c].mean();
        a.mean_length_conservative = len_c[c].mean();
        a.rejection_frequency = rej[c].mean();
        a.bias_colar = col[c].mean() - std::abs(a.x_true);
        a.sd_colar = col[c].sd();
        a.bias_db = dbm[c].mean() - std::abs(a.x_true);
        a.sd_db = dbm[c].sd();
        res.coords.push_back(a);
    }
    res.rho.mean_rho_sq_db = rho_db.mean();
    res.rho.sd_rho_sq_db = rho_db.sd();
    res.rho.coverage = rho_cov.mean();
    res.rho.mean_rho_hat = rho_hat.mean();
    res.records = std::move(records);
    return res;
}

AggregateResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const ExperimentContext ctx(spec.setting);
    const int total = spec.setting.n_reps;
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(total));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(total));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int rep = next++; rep < total; rep = next++) {
            try {
                records[static_cast<std::size_t>(rep)] = run_replication(spec, ctx, rep);
            } catch (...) {
                errors[static_cast<std::size_t>(rep)] = std::current_exception();
            }
        }
    };
    const int workers = std::min(spec.threads, total);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    AggregateResult res = aggregate(spec, std::move(records));
    if (res.n_failed > spec.max_failure_fraction * total) {
        std::ostringstream msg;
        msg << res.n_failed << " of " << total << " replications failed (limit "
            << spec.max_failure_fraction * 100.0 << "%)";
        for (const auto& r : res.records) {
            if (r.failed) {
                msg << "; first failure at rep " << r.rep << ": " << r.failure;
                break;
            }
        }
        throw DegenerateRunError(msg.str());
    }
    return res;
}

std::vector<MetricRow> metric_rows(const AggregateResult& result) {
    std::vector<MetricRow> rows;
    const double rho0 = result.spec.setting.rho0;
    rows.push_back({0, "n_reps", static_cast<double>(result.n_reps)});
    rows.push_back({0, "n_failed", static_cast<double>(result.n_failed)});
    rows.push_back({0, "rho0_sq", rho0 * rho0});
    rows.push_back({0, "rho_sq_db_mean", result.rho.mean_rho_sq_db});
    rows.push_back({0, "rho_sq_db_sd", result.rho.sd_rho_sq_db});
    rows.push_back({0, "rho_sq_coverage", result.rho.coverage});
    rows.push_back({0, "rho_hat_mean", result.rho.mean_rho_hat});
    for (const auto& c : result.coords) {
        rows.push_back({c.coord, "x_true", c.x_true});
        rows.push_back({c.coord, "coverage_ordinary", c.coverage_ordinary});
        rows.push_back({c.coord, "coverage_conservative", c.coverage_conservative});
        rows.push_back({c.coord, "mean_length_ordinary", c.mean_length_ordinary});
        rows.push_back({c.coord, "mean_length_conservative", c.mean_length_conservative});
        rows.push_back({c.coord, "rejection_frequency", c.rejection_frequency});
        rows.push_back({c.coord, "bias_colar", c.bias_colar});
        rows.push_back({c.coord, "sd_colar", c.sd_colar});
        rows.push_back({c.coord, "bias_db", c.bias_db});
        rows.push_back({c.coord, "sd_db", c.sd_db});
    }
    return rows;
}

std::string report_csv(const AggregateResult& result) {
    const SimSetting& s = result.spec.setting;
    std::ostringstream prefix;
    prefix << result.spec.setting_id << ',' << format_double(s.rho0) << ',' << to_string(s.cov_kind) << ',' << s.p
           << ',' << s.q << ',' << s.n << ',';
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& row : metric_rows(result)) {
        out += prefix.str() + std::to_string(row.coord) + ',' + row.metric + ',' + format_double(row.value) + "\n";
    }
    return out;
}

std::string replications_csv(const AggregateResult& result) {
    std::string out = std::string(kRepCsvHeader) + "\n";
    const std::string& id = result.spec.setting_id;
    auto line = [&](int rep, Index coord, const char* metric, double v) {
        out += id + ',' + std::to_string(rep) + ',' + std::to_string(coord) + ',' + metric + ',' + format_double(v) +
               "\n";
    };
    for (const auto& r : result.records) {
        line(r.rep, 0, "failed", r.failed ? 1.0 : 0.0);
        if (r.failed) continue;
        line(r.rep, 0, "rho_hat", r.rho_hat);
        line(r.rep, 0, "rho_sq_db", r.rho_sq_db);
        line(r.rep, 0, "rho_ci_lower", r.rho_ci.lower);
        line(r.rep, 0, "rho_ci_upper", r.rho_ci.upper);
        line(r.rep, 0, "kkt_max", r.kkt_max);
        line(r.rep, 0, "admm_iterations", r.admm_iterations);
        for (const auto& c : r.coords) {
            line(r.rep, c.coord, "x_colar", c.x_colar);
            line(r.rep, c.coord, "x_db", c.x_db);
            line(r.rep, c.coord, "sigma", c.sigma);
            line(r.rep, c.coord, "p_value", c.p_value);
            line(r.rep, c.coord, "ci_ordinary_lower", c.ordinary.lower);
            line(r.rep, c.coord, "ci_ordinary_upper", c.ordinary.upper);
            line(r.rep, c.coord, "ci_conservative_lower", c.conservative.lower);
            line(r.rep, c.coord, "ci_conservative_upper", c.conservative.upper);
        }
    }
    return out;
}

Json colar_config_to_json(const ColarConfig& cfg) {
    Json colar;
    colar["lambda1_mult"] = cfg.lambda1_mult;
    colar["lambda2_mult"] = cfg.lambda2_mult;
    if (cfg.lambda1) colar["lambda1"] = *cfg.lambda1;
    if (cfg.lambda2) colar["lambda2"] = *cfg.lambda2;
    colar["tol"] = cfg.tol;
    colar["max_iter_stage1"] = cfg.max_iter_stage1;
    colar["admm_penalty"] = cfg.admm_penalty;
    colar["max_iter_stage2"] = cfg.max_iter_stage2;
    colar["stage2_tol"] = cfg.stage2_tol;
    return colar;
}

ColarConfig colar_config_from_json(const Json& c) {
    require(c.is_object(), "colar settings must be a JSON object");
    ColarConfig cfg;
    cfg.lambda1_mult = c.value("lambda1_mult", cfg.lambda1_mult);
    cfg.lambda2_mult = c.value("lambda2_mult", cfg.lambda2_mult);
    if (c.contains("lambda1")) cfg.lambda1 = c["lambda1"].get<double>();
    if (c.contains("lambda2")) cfg.lambda2 = c["lambda2"].get<double>();
    cfg.tol = c.value("tol", cfg.tol);
    cfg.max_iter_stage1 = c.value("max_iter_stage1", cfg.max_iter_stage1);
    cfg.admm_penalty = c.value("admm_penalty", cfg.admm_penalty);
    cfg.max_iter_stage2 = c.value("max_iter_stage2", cfg.max_iter_stage2);
    cfg.stage2_tol = c.value("stage2_tol", cfg.stage2_tol);
    return cfg;
}

Json nodewise_config_to_json(const NodewiseConfig& cfg) {
    Json nw;
    nw["c_mult"] = cfg.c_mult;
    nw["b_mult"] = cfg.b_mult;
    if (cfg.lambda) nw["lambda"] = *cfg.lambda;
    nw["max_iter"] = cfg.max_iter;
    nw["tol"] = cfg.tol;
    return nw;
}

NodewiseConfig nodewise_config_from_json(const Json& c) {
    require(c.is_object(), "nodewise settings must be a JSON object");
    NodewiseConfig cfg;
    cfg.c_mult = c.value("c_mult", cfg.c_mult);
    cfg.b_mult = c.value("b_mult", cfg.b_mult);
    if (c.contains("lambda")) cfg.lambda = c["lambda"].get<double>();
    cfg.max_iter = c.value("max_iter", cfg.max_iter);
    cfg.tol = c.value("tol", cfg.tol);
    return cfg;
}

Json spec_to_json(const ExperimentSpec& spec) {
    Json j;
    j["setting_id"] = spec.setting_id;
    j["cov_kind"] = to_string(spec.setting.cov_kind);
    j["rho0"] = spec.setting.rho0;
    j["p"] = spec.setting.p;
    j["q"] = spec.setting.q;
    j["n"] = spec.setting.n;
    j["seed"] = spec.setting.seed;
    j["n_reps"] = spec.setting.n_reps;
    j["coords"] = spec.coords;
    j["level"] = spec.level;
    j["alpha"] = spec.alpha;
    j["max_failure_fraction"] = spec.max_failure_fraction;
    j["colar"] = colar_config_to_json(spec.colar);
    j["nodewise"] = nodewise_config_to_json(spec.nodewise);
    return j;
}

ExperimentSpec spec_from_json(const Json& j) {
    require(j.is_object(), "experiment must be a JSON object");
    ExperimentSpec spec;
    spec.setting_id = j.value("setting_id", spec.setting_id);
    spec.setting.cov_kind = cov_kind_from_string(j.value("cov_kind", std::string("identity")));
    spec.setting.rho0 = j.value("rho0", spec.setting.rho0);
    spec.setting.p = j.value("p", spec.setting.p);
    spec.setting.q = j.value("q", spec.setting.q);
    spec.setting.n = j.value("n", spec.setting.n);
    spec.setting.seed = j.value("seed", spec.setting.seed);
    spec.setting.n_reps = j.value("n_reps", spec.setting.n_reps);
    if (j.contains("coords")) {
        spec.coords = j["coords"].get<std::vector<Index>>();
    } else {
        spec.coords = {1, std::min<Index>(20, spec.setting.p)};
    }
    spec.level = j.value("level", spec.level);
    spec.alpha = j.value("alpha", spec.alpha);
    spec.threads = j.value("threads", spec.threads);
    spec.max_failure_fraction = j.value("max_failure_fraction", spec.max_failure_fraction);
    if (j.contains("colar")) spec.colar = colar_config_from_json(j["colar"]);
    if (j.contains("nodewise")) spec.nodewise = nodewise_config_from_json(j["nodewise"]);
    return spec;
}

namespace {

Json interval_json(const Interval& iv) { return Json::array({iv.lower, iv.upper}); }

Interval interval_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

double number_or_nan(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

Json report_json(const AggregateResult& result) {
    Json j;
    j["schema_version"] = 1;
    j["experiment"] = spec_to_json(result.spec);
    j["n_reps"] = result.n_reps;
    j["n_failed"] = result.n_failed;
    Json metrics = Json::array();
    for (const auto& row : metric_rows(result)) {
        Json m;
        m["coord"] = row.coord;
        m["metric"] = row.metric;
        m["value"] = row.value;
        metrics.push_back(m);
    }
    j["metrics"] = metrics;
    Json reps = Json::array();
    for (const auto& r : result.records) {
        Json rj;
        rj["rep"] = r.rep;
        rj["failed"] = r.failed;
        if (r.failed) rj["failure"] = r.failure;
        rj["rho_hat"] = r.rho_hat;
        rj["rho_sq_db"] = r.rho_sq_db;
        rj["rho_ci"] = interval_json(r.rho_ci);
        rj["rho_covered"] = r.rho_covered;
        rj["kkt_max"] = r.kkt_max;
        rj["admm_iterations"] = r.admm_iterations;
        Json cs = Json::array();
        for (const auto& c : r.coords) {
            Json cj;
            cj["coord"] = c.coord;
            cj["x_true"] = c.x_true;
            cj["x_colar"] = c.x_colar;
            cj["x_db"] = c.x_db;
            cj["sigma"] = c.sigma;
            cj["p_value"] = c.p_value;
            cj["ci_ordinary"] = interval_json(c.ordinary);
            cj["ci_conservative"] = interval_json(c.conservative);
            cj["covered_ordinary"] = c.covered_ordinary;
            cj["covered_conservative"] = c.covered_conservative;
            cj["rejected"] = c.rejected;
            cs.push_back(cj);
        }
        rj["coords"] = cs;
        reps.push_back(rj);
    }
    j["replications"] = reps;
    return j;
}

AggregateResult import_report_json(const Json& doc) {
    require(doc.is_object() && doc.value("schema_version", 0) == 1, "report: unsupported or missing schema_version");
    const ExperimentSpec spec = spec_from_json(doc.at("experiment"));
    std::vector<ReplicationRecord> records;
    for (const auto& rj : doc.at("replications")) {
        ReplicationRecord r;
        r.rep = rj.at("rep").get<int>();
        r.failed = rj.at("failed").get<bool>();
        r.failure = rj.value("failure", std::string());
        r.rho_hat = number_or_nan(rj.at("rho_hat"));
        r.rho_sq_db = number_or_nan(rj.at("rho_sq_db"));
        r.rho_ci = interval_from(rj.at("rho_ci"));
        r.rho_covered = rj.at("rho_covered").get<bool>();
        r.kkt_max = number_or_nan(rj.at("kkt_max"));
        r.admm_iterations = rj.at("admm_iterations").get<int>();
        for (const auto& cj : rj.at("coords")) {
            CoordOutcome c;
            c.coord = cj.at("coord").get<Index>();
            c.x_true = cj.at("x_true").get<double>();
            c.x_colar = cj.at("x_colar").get<double>();
            c.x_db = cj.at("x_db").get<double>();
            c.sigma = cj.at("sigma").get<double>();
            c.p_value = cj.at("p_value").get<double>();
            c.ordinary = interval_from(cj.at("ci_ordinary"));
            c.conservative = interval_from(cj.at("ci_conservative"));
            c.covered_ordinary = cj.at("covered_ordinary").get<bool>();
            c.covered_conservative = cj.at("covered_conservative").get<bool>();
            c.rejected = cj.at("rejected").get<bool>();
            r.coords.push_back(c);
        }
        records.push_back(std::move(r));
    }
    AggregateResult res = aggregate(spec, std::move(records));

    // The stored metric table must agree with the re-folded records.
    const auto rows = metric_rows(res);
    const Json& stored = doc.at("metrics");
    require(stored.size() == rows.size(), "report: metric table does not match replications");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double v = number_or_nan(stored[i].at("value"));
        const bool same = (std::isnan(v) && std::isnan(rows[i].value)) || v == rows[i].value;
        require(same && stored[i].at("metric").get<std::string>() == rows[i].metric,
                "report: metric '" + rows[i].metric + "' does not match replications");
    }
    return res;
}

void export_report(const AggregateResult& result, ReportFormat format, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    if (format == ReportFormat::Csv) {
        write_text_file((base / "report.csv").string(), report_csv(result));
        write_text_file((base / "replications.csv").string(), replications_csv(result));
    } else {
        write_text_file((base / "report.json").string(), dump_json(report_json(result)));
    }
}

}  // namespace scca
