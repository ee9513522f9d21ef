#include "scca/nodewise.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "scca/errors.hpp"

namespace scca {

void NodewiseConfig::validate() const {
    require(c_mult >= 0.0, "nodewise: c_mult must be nonnegative");
    require(b_mult > 0.0, "nodewise: b_mult must be positive");
    require(!lambda || *lambda >= 0.0, "nodewise: lambda must be nonnegative");
    require(max_iter > 0, "nodewise: max_iter must be positive");
    require(tol > 0.0, "nodewise: tol must be positive");
}

double NodewiseConfig::resolved_lambda(Index m, Index n) const {
    if (lambda) return *lambda;
    require(n >= 1 && m >= 2, "nodewise: need n >= 1 and m >= 2");
    return c_mult * std::sqrt(std::log(static_cast<double>(m)) / static_cast<double>(n));
}

double NodewiseConfig::radius(double lam) const {
    if (lam <= 0.0) return std::numeric_limits<double>::infinity();
    return b_mult / lam;
}

namespace {

double spectral_norm_sym(const Matrix& a) {
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues();
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

}  // namespace

NodewiseColumn nodewise_column(const Matrix& a, Index j, double lambda, double radius, int max_iter, double tol,
                               double spectral_bound) {
    const Index m = a.rows();
    require(a.cols() == m && m >= 2, "nodewise_column: need a square matrix of size >= 2");
    require(j >= 0 && j < m, "nodewise_column: column index out of range");
    require(lambda >= 0.0, "nodewise_column: lambda must be nonnegative");
    require(radius > 0.0, "nodewise_column: radius must be positive");

    // Work in full coordinates with eta_j pinned at zero.
    if (spectral_bound <= 0.0) {
        Matrix sub(m - 1, m - 1);
        for (Index r = 0, rr = 0; r < m; ++r) {
            if (r == j) continue;
            for (Index c = 0, cc = 0; c < m; ++c) {
                if (c == j) continue;
                sub(rr, cc++) = a(r, c);
            }
            ++rr;
        }
        spectral_bound = spectral_norm_sym(sub);
    }
    NodewiseColumn out;
    out.eta = Vector::Zero(m - 1);
    const double lip = spectral_bound > 0.0 ? spectral_bound : 1.0;
    const double thresh = lambda / (2.0 * lip);

    Vector eta = Vector::Zero(m);
    Vector a_eta = Vector::Zero(m);  // A * eta, maintained incrementally
    Vector next(m);
    for (int it = 1; it <= max_iter; ++it) {
        for (Index k = 0; k < m; ++k) {
            next[k] = k == j ? 0.0 : soft_threshold(eta[k] - (a_eta[k] - a(k, j)) / lip, thresh);
        }
        if (next.lpNorm<1>() > radius) next = project_l1_ball(next, radius);
        double change = 0.0;
        for (Index k = 0; k < m; ++k) {
            const double delta = next[k] - eta[k];
            if (delta != 0.0) {
                a_eta += delta * a.col(k);
                change = std::max(change, std::abs(delta));
            }
        }
        eta = next;
        out.iterations = it;
        if (change < tol) {
            out.converged = true;
            break;
        }
    }
    for (Index k = 0, kk = 0; k < m; ++k) {
        if (k != j) out.eta[kk++] = eta[k];
    }
    return out;
}

Vector nodewise_gamma(const Vector& eta, Index j) {
    const Index m = eta.size() + 1;
    require(j >= 0 && j < m, "nodewise_gamma: column index out of range");
    Vector gamma(m);
    for (Index k = 0, kk = 0; k < m; ++k) gamma[k] = k == j ? 1.0 : -eta[kk++];
    return gamma;
}

double tau_hat_sq(const Matrix& a, const Vector& eta, double lambda, Index j) {
    require(a.rows() == a.cols() && a.rows() == eta.size() + 1, "tau_hat_sq: dimension mismatch");
    const Vector gamma = nodewise_gamma(eta, j);
    const double tau = gamma.dot(a * gamma) + 0.5 * lambda * eta.lpNorm<1>();
    if (!(tau > 1e-10)) {
        throw NumericalError("nodewise: degenerate column " + std::to_string(j) + " (tau^2 = " +
                             std::to_string(tau) + ")");
    }
    return tau;
}

PrecisionEstimate invert_nodewise(const Matrix& a, Index n, const NodewiseConfig& config) {
    config.validate();
    const Index m = a.rows();
    require(a.cols() == m && m >= 2, "invert_nodewise: need a square matrix of size >= 2");
    require(a.allFinite(), "invert_nodewise: matrix has non-finite entries");
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()),
            "invert_nodewise: matrix must be symmetric");

    PrecisionEstimate out;
    out.lambda = config.resolved_lambda(m, n);
    const double radius = config.radius(out.lambda);
    // Cauchy interlacing: ||A|| bounds every principal submatrix.
    const double bound = spectral_norm_sym(a);

    out.phi_hat = Matrix::Zero(m, m);
    out.tau_sq = Vector::Zero(m);
    out.eta.reserve(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
        NodewiseColumn col = nodewise_column(a, j, out.lambda, radius, config.max_iter, config.tol, bound);
        if (!col.converged) ++out.unconverged_columns;
        const double tau = tau_hat_sq(a, col.eta, out.lambda, j);
        out.tau_sq[j] = tau;
        out.phi_hat.col(j) = nodewise_gamma(col.eta, j) / tau;
        out.eta.push_back(std::move(col.eta));
    }
    out.kkt_max = (out.phi_hat.transpose() * a - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
    return out;
}

TuneResult tune_c_mult(const Matrix& a, Index n, const std::vector<double>& candidates, const NodewiseConfig& base) {
    require(!candidates.empty(), "tune_c_mult: candidate list is empty");
    TuneResult out;
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double c : candidates) {
        NodewiseConfig cfg = base;
        cfg.c_mult = c;
        cfg.lambda.reset();
        double kkt = std::numeric_limits<double>::infinity();
        try {
            kkt = invert_nodewise(a, n, cfg).kkt_max;
        } catch (const NumericalError&) {
        }
        out.kkt_max.push_back(kkt);
        if (std::isfinite(kkt)) {
            if (!any || kkt < best || (kkt == best && c < out.best_c_mult)) {
                best = kkt;
                out.best_c_mult = c;
            }
            any = true;
        }
    }
    if (!any) throw NumericalError("tune_c_mult: every candidate produced a degenerate column");
    return out;
}

}  // namespace scca
