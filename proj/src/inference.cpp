#include "scca/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "scca/errors.hpp"

namespace scca {

double normal_critical(double level) {
    require(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

Interval ci_squared(double x_db, double sigma, Index n, double level, bool conservative) {
    require(sigma >= 0.0, "ci_squared: sigma must be nonnegative");
    require(n >= 1, "ci_squared: n must be positive");
    const double z = normal_critical(level);
    const double w = conservative ? std::max(std::abs(x_db), 1.0) : std::abs(x_db);
    const double half = 4.0 * z * w * sigma / std::sqrt(static_cast<double>(n));
    const double est = x_db * x_db;
    return {std::max(0.0, est - half), est + half};
}

double test_statistic(double x_db, double sigma, Index n) {
    require(sigma > 0.0, "test_zero: sigma must be positive for the test to be defined");
    require(n >= 1, "test_zero: n must be positive");
    return static_cast<double>(n) * x_db * x_db / (4.0 * sigma * sigma);
}

double test_zero(double x_db, double sigma, Index n) {
    const double t = test_statistic(x_db, sigma, n);
    return std::erfc(std::sqrt(t / 2.0));
}

CrossTermInterval cross_term_ci(double x_i, double x_j, double sigma_i, double sigma_j, double sigma_ij, Index n,
                                double level) {
    require(sigma_i >= 0.0 && sigma_j >= 0.0, "cross_term_ci: sigmas must be nonnegative");
    require(n >= 1, "cross_term_ci: n must be positive");
    CrossTermInterval out;
    out.estimate = x_i * x_j;
    const double var =
        4.0 * (x_i * x_i * sigma_j * sigma_j + x_j * x_j * sigma_i * sigma_i + 2.0 * x_i * x_j * sigma_ij);
    out.variance_clamped = var < 0.0;
    out.variance = std::max(0.0, var);
    out.null_regime = x_i == 0.0 && x_j == 0.0;
    const double half = normal_critical(level) * std::sqrt(out.variance / static_cast<double>(n));
    out.ci = {out.estimate - half, out.estimate + half};
    return out;
}

std::string to_string(FdrMethod method) { return method == FdrMethod::BH ? "BH" : "BY"; }

FdrResult fdr_adjust(const Vector& pvalues, FdrMethod method, double alpha) {
    const Index m = pvalues.size();
    for (Index i = 0; i < m; ++i) {
        require(pvalues[i] >= 0.0 && pvalues[i] <= 1.0, "fdr_adjust: p-values must lie in [0, 1]");
    }
    FdrResult out;
    out.adjusted = Vector::Zero(m);
    if (m == 0) return out;

    double factor = 1.0;
    if (method == FdrMethod::BY) {
        factor = 0.0;
        for (Index k = 1; k <= m; ++k) factor += 1.0 / static_cast<double>(k);
    }
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return pvalues[a] < pvalues[b]; });

    double running = 1.0;
    for (Index rank = m; rank >= 1; --rank) {
        const Index idx = order[static_cast<std::size_t>(rank - 1)];
        const double val = std::min(1.0, pvalues[idx] * static_cast<double>(m) * factor / static_cast<double>(rank));
        running = std::min(running, val);
        out.adjusted[idx] = running;
    }
    for (Index i = 0; i < m; ++i) {
        if (out.adjusted[i] <= alpha) out.discoveries.push_back(i);
    }
    return out;
}

FdrResult fdr_adjust_blocks(const Vector& pvalues, Index p, FdrMethod method, double alpha) {
    require(p >= 0 && p <= pvalues.size(), "fdr_adjust_blocks: split point out of range");
    const Index q = pvalues.size() - p;
    const FdrResult fx = fdr_adjust(pvalues.head(p), method, alpha);
    const FdrResult fy = fdr_adjust(pvalues.tail(q), method, alpha);
    FdrResult out;
    out.adjusted.resize(p + q);
    out.adjusted << fx.adjusted, fy.adjusted;
    out.discoveries = fx.discoveries;
    for (Index i : fy.discoveries) out.discoveries.push_back(p + i);
    return out;
}

Interval rho_sq_ci(double rho_sq_db, double sigma_rho_sq, Index n, double level) {
    require(sigma_rho_sq >= 0.0, "rho_sq_ci: variance must be nonnegative");
    require(n >= 1, "rho_sq_ci: n must be positive");
    const double half = normal_critical(level) * std::sqrt(sigma_rho_sq / static_cast<double>(n));
    return {std::max(0.0, rho_sq_db - half), std::min(1.0, rho_sq_db + half)};
}

void InferenceConfig::validate() const {
    require(level > 0.0 && level < 1.0, "inference: level must lie in (0, 1)");
    require(alpha > 0.0 && alpha < 1.0, "inference: alpha must lie in (0, 1)");
}

InferenceReport build_inference(const DebiasResult& db, Index n, const InferenceConfig& config) {
    config.validate();
    const Index p = db.x_db.size();
    const Index q = db.y_db.size();
    require(db.sigma_hat.size() == p + q, "build_inference: sigma_hat must have length p+q");

    InferenceReport rep;
    rep.n = n;
    rep.p = p;
    rep.q = q;
    rep.level = config.level;
    rep.alpha = config.alpha;
    Vector pvals(p + q);
    for (Index i = 0; i < p + q; ++i) {
        CoordinateRecord rec;
        rec.index = i;
        rec.x_db = i < p ? db.x_db[i] : db.y_db[i - p];
        rec.estimate = rec.x_db * rec.x_db;
        rec.sigma = db.sigma_hat[i];
        rec.ordinary = ci_squared(rec.x_db, rec.sigma, n, config.level, false);
        rec.conservative = ci_squared(rec.x_db, rec.sigma, n, config.level, true);
        rec.test_defined = rec.sigma > 0.0;
        rec.p_value = rec.test_defined ? test_zero(rec.x_db, rec.sigma, n) : 1.0;
        pvals[i] = rec.p_value;
        rep.coords.push_back(rec);
    }
    rep.rho.rho_sq_db = db.rho_sq_db;
    rep.rho.sigma_rho = std::sqrt(std::max(0.0, db.sigma_rho_sq_pseudo));
    rep.rho.ci = rho_sq_ci(db.rho_sq_db, db.sigma_rho_sq_pseudo, n, config.level);
    rep.bh = fdr_adjust_blocks(pvals, p, FdrMethod::BH, config.alpha);
    rep.by = fdr_adjust_blocks(pvals, p, FdrMethod::BY, config.alpha);
    return rep;
}

}  // namespace scca
