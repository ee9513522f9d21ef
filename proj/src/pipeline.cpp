#include "scca/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scca/errors.hpp"
#include "scca/model.hpp"
#include "scca/simharness.hpp"

namespace scca {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_number(const std::string& cell, double& v) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

LabeledBlock parse_csv_block(const std::string& text, bool header, const std::string& prefix,
                             const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    LabeledBlock block;
    std::size_t width = 0;
    int line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (first) {
            width = fields.size();
            first = false;
            if (header) {
                block.names = fields;
                continue;
            }
        }
        if (fields.size() != width)
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                  " fields, found " + std::to_string(fields.size()));
        std::vector<double> row(width);
        for (std::size_t k = 0; k < width; ++k) {
            if (!parse_number(fields[k], row[k]) || !std::isfinite(row[k]))
                throw ValidationError(origin + ":" + std::to_string(line_no) + ": non-numeric cell '" + fields[k] +
                                      "' in column " + std::to_string(k + 1));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(origin + ": no data rows");
    if (block.names.empty()) {
        for (std::size_t k = 0; k < width; ++k) block.names.push_back(prefix + std::to_string(k + 1));
    }
    block.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < width; ++k) block.values(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    return block;
}

LabeledBlock read_csv_block(const std::string& path, bool header, const std::string& prefix) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open CSV file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv_block(ss.str(), header, prefix, path);
}

Matrix standardize_columns(const Matrix& m, const std::string& label) {
    require(m.rows() >= 2, label + ": need at least two rows to standardize");
    Matrix out = center_columns(m);
    const double n = static_cast<double>(m.rows());
    for (Index k = 0; k < out.cols(); ++k) {
        const double sd = std::sqrt(out.col(k).squaredNorm() / n);
        const double scale = std::max(1.0, m.col(k).cwiseAbs().maxCoeff());
        if (!(sd > 1e-12 * scale))
            throw ValidationError(label + ": zero-variance column " + std::to_string(k + 1));
        out.col(k) /= sd;
    }
    return out;
}

void FitConfig::validate() const {
    colar.validate();
    nodewise.validate();
    inference.validate();
}

PipelineFit run_pipeline(const Dataset& data, const FitConfig& config) {
    config.validate();
    require(data.x.rows() == data.y.rows(), "fit: X and Y must have the same number of rows");
    require(data.n() >= 4, "fit: need at least 4 observations");
    PipelineFit out;
    out.colar = fit_colar(data, config.colar);
    if (out.colar.no_signal) return out;
    const CovarianceTriple cov = empirical_covariances(data.x, data.y);
    const Matrix h = hessian_H(cov, out.colar.x_hat, out.colar.y_hat);
    out.precision = invert_nodewise(h, data.n(), config.nodewise);
    out.debias = debias(data, cov, out.colar.x_hat, out.colar.y_hat, std::abs(out.colar.rho_hat),
                        out.precision->phi_hat);
    out.inference = build_inference(*out.debias, data.n(), config.inference);
    return out;
}

PipelineFit fit_blocks(const LabeledBlock& x, const LabeledBlock& y, const FitConfig& config) {
    if (x.values.rows() != y.values.rows())
        throw ValidationError("row count mismatch: X has " + std::to_string(x.values.rows()) + " rows, Y has " +
                              std::to_string(y.values.rows()));
    require(x.values.rows() >= 4, "fit: need at least 4 observations");
    require(x.values.cols() >= 1 && y.values.cols() >= 1, "fit: each block needs at least one column");
    Dataset data;
    data.x = config.standardize ? standardize_columns(x.values, "X") : x.values;
    data.y = config.standardize ? standardize_columns(y.values, "Y") : y.values;
    return run_pipeline(data, config);
}

FitConfig fit_config_from_json(const Json& doc) {
    require(doc.is_object(), "fit settings must be a JSON object");
    FitConfig cfg;
    if (doc.contains("colar")) cfg.colar = colar_config_from_json(doc["colar"]);
    if (doc.contains("nodewise")) cfg.nodewise = nodewise_config_from_json(doc["nodewise"]);
    cfg.inference.level = doc.value("level", cfg.inference.level);
    cfg.inference.alpha = doc.value("alpha", cfg.inference.alpha);
    cfg.standardize = doc.value("standardize", cfg.standardize);
    cfg.conservative = doc.value("conservative", cfg.conservative);
    if (doc.contains("split_seed")) cfg.colar.split_seed = doc["split_seed"].get<std::uint64_t>();
    return cfg;
}

namespace {

Json vec_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from(const Json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Json interval_json(const Interval& iv) { return Json::array({iv.lower, iv.upper}); }

struct CoordName {
    std::string name;
    std::string block;
    Index index;  // 1-based within its block
};

CoordName coord_name(Index i, const std::vector<std::string>& x_names, const std::vector<std::string>& y_names) {
    const Index p = static_cast<Index>(x_names.size());
    if (i < p) return {x_names[static_cast<std::size_t>(i)], "x", i + 1};
    return {y_names[static_cast<std::size_t>(i - p)], "y", i - p + 1};
}

Json discoveries_json(const InferenceReport& report, const FdrResult& fdr, const std::vector<std::string>& x_names,
                      const std::vector<std::string>& y_names) {
    Json list = Json::array();
    for (Index i : fdr.discoveries) {
        const CoordinateRecord& rec = report.coords[static_cast<std::size_t>(i)];
        const CoordName cn = coord_name(i, x_names, y_names);
        Json d;
        d["name"] = cn.name;
        d["block"] = cn.block;
        d["index"] = cn.index;
        d["p_value"] = rec.p_value;
        d["adjusted_p_value"] = fdr.adjusted[i];
        d["ci_ordinary"] = interval_json(rec.ordinary);
        d["ci_conservative"] = interval_json(rec.conservative);
        list.push_back(d);
    }
    return list;
}

}  // namespace

Json inference_to_json(const InferenceReport& report, const std::vector<std::string>& x_names,
                       const std::vector<std::string>& y_names, bool conservative) {
    require(static_cast<Index>(x_names.size()) == report.p && static_cast<Index>(y_names.size()) == report.q,
            "inference_to_json: name lists do not match p and q");
    Json j;
    j["level"] = report.level;
    j["alpha"] = report.alpha;
    j["flag_interval"] = conservative ? "conservative" : "ordinary";
    Json rho;
    rho["rho_sq_db"] = report.rho.rho_sq_db;
    rho["sigma_rho"] = report.rho.sigma_rho;
    rho["ci"] = interval_json(report.rho.ci);
    j["rho"] = rho;
    Json coords = Json::array();
    for (std::size_t k = 0; k < report.coords.size(); ++k) {
        const CoordinateRecord& rec = report.coords[k];
        const CoordName cn = coord_name(static_cast<Index>(k), x_names, y_names);
        const Interval& flag_ci = conservative ? rec.conservative : rec.ordinary;
        Json c;
        c["name"] = cn.name;
        c["block"] = cn.block;
        c["index"] = cn.index;
        c["x_db"] = rec.x_db;
        c["estimate"] = rec.estimate;
        c["sigma"] = rec.sigma;
        c["p_value"] = rec.p_value;
        c["test_defined"] = rec.test_defined;
        c["ci_ordinary"] = interval_json(rec.ordinary);
        c["ci_conservative"] = interval_json(rec.conservative);
        c["excludes_zero"] = flag_ci.lower > 0.0;
        coords.push_back(c);
    }
    j["coordinates"] = coords;
    Json disc;
    disc["BH"] = discoveries_json(report, report.bh, x_names, y_names);
    disc["BY"] = discoveries_json(report, report.by, x_names, y_names);
    j["discoveries"] = disc;
    return j;
}

Json fit_to_json(const PipelineFit& fit, const std::vector<std::string>& x_names,
                 const std::vector<std::string>& y_names, const FitConfig& config) {
    const Index p = fit.colar.x_hat.size();
    const Index q = fit.colar.y_hat.size();
    require(static_cast<Index>(x_names.size()) == p && static_cast<Index>(y_names.size()) == q,
            "fit_to_json: name lists do not match the fit dimensions");
    Json j;
    j["schema_version"] = 1;
    j["n"] = fit.inference ? fit.inference->n : Index{0};
    j["p"] = p;
    j["q"] = q;
    j["x_names"] = x_names;
    j["y_names"] = y_names;
    Json cfg;
    cfg["colar"] = colar_config_to_json(config.colar);
    cfg["nodewise"] = nodewise_config_to_json(config.nodewise);
    cfg["level"] = config.inference.level;
    cfg["alpha"] = config.inference.alpha;
    cfg["standardize"] = config.standardize;
    cfg["conservative"] = config.conservative;
    j["config"] = cfg;

    const ColarFit& c = fit.colar;
    Json colar;
    colar["no_signal"] = c.no_signal;
    colar["rho_hat"] = c.rho_hat;
    colar["alpha_hat"] = vec_json(c.alpha_hat);
    colar["beta_hat"] = vec_json(c.beta_hat);
    colar["x_hat"] = vec_json(c.x_hat);
    colar["y_hat"] = vec_json(c.y_hat);
    Json diag;
    diag["stage1_iterations"] = c.diagnostics.stage1_iterations;
    diag["stage1_converged"] = c.diagnostics.stage1_converged;
    diag["stage1_primal_residual"] = c.diagnostics.stage1_primal_residual;
    diag["stage1_dual_residual"] = c.diagnostics.stage1_dual_residual;
    diag["stage2_sweeps_alpha"] = c.diagnostics.stage2_sweeps_alpha;
    diag["stage2_sweeps_beta"] = c.diagnostics.stage2_sweeps_beta;
    diag["lambda1"] = c.diagnostics.lambda1;
    diag["lambda2_alpha"] = c.diagnostics.lambda2_alpha;
    diag["lambda2_beta"] = c.diagnostics.lambda2_beta;
    diag["sign_flipped"] = c.diagnostics.sign_flipped;
    colar["diagnostics"] = diag;
    j["colar"] = colar;

    if (!fit.precision) {
        j["nodewise"] = nullptr;
        j["debias"] = nullptr;
        j["inference"] = nullptr;
        return j;
    }
    Json nw;
    nw["lambda"] = fit.precision->lambda;
    nw["kkt_max"] = fit.precision->kkt_max;
    nw["unconverged_columns"] = fit.precision->unconverged_columns;
    j["nodewise"] = nw;
    const DebiasResult& db = *fit.debias;
    Json d;
    d["x_db"] = vec_json(db.x_db);
    d["y_db"] = vec_json(db.y_db);
    d["sigma_hat"] = vec_json(db.sigma_hat);
    d["rho_sq_raw"] = db.rho_sq_raw;
    d["rho_sq_db"] = db.rho_sq_db;
    d["sigma_rho_sq_hat"] = db.sigma_rho_sq_hat;
    d["sigma_rho_clamped"] = db.sigma_rho_clamped;
    d["sigma_rho_sq_pseudo"] = db.sigma_rho_sq_pseudo;
    j["debias"] = d;
    j["inference"] = inference_to_json(*fit.inference, x_names, y_names, config.conservative);
    return j;
}

InferenceReport reinfer_from_fit_json(const Json& fit_doc, const InferenceConfig& config) {
    require(fit_doc.is_object() && fit_doc.contains("debias"), "fit document lacks a debias section");
    const Json& d = fit_doc["debias"];
    if (d.is_null()) throw ValidationError("fit document is a no-signal fit; there is nothing to infer");
    DebiasResult db;
    db.x_db = vec_from(d.at("x_db"));
    db.y_db = vec_from(d.at("y_db"));
    db.sigma_hat = vec_from(d.at("sigma_hat"));
    db.rho_sq_raw = d.at("rho_sq_raw").get<double>();
    db.rho_sq_db = d.at("rho_sq_db").get<double>();
    db.sigma_rho_sq_hat = d.at("sigma_rho_sq_hat").get<double>();
    db.sigma_rho_clamped = d.at("sigma_rho_clamped").get<bool>();
    db.sigma_rho_sq_pseudo = d.at("sigma_rho_sq_pseudo").get<double>();
    const Index n = fit_doc.at("n").get<Index>();
    require(n >= 4, "fit document: n must be at least 4");
    require(db.x_db.size() == fit_doc.at("p").get<Index>() && db.y_db.size() == fit_doc.at("q").get<Index>(),
            "fit document: de-biased vectors do not match p and q");
    return build_inference(db, n, config);
}

}  // namespace scca
