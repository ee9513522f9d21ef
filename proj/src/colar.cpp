#include "scca/colar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "scca/errors.hpp"

namespace scca {

void ColarConfig::validate() const {
    require(lambda1_mult > 0.0 && lambda2_mult > 0.0, "colar: penalty multipliers must be positive");
    require(!lambda1 || *lambda1 >= 0.0, "colar: lambda1 must be nonnegative");
    require(!lambda2 || *lambda2 >= 0.0, "colar: lambda2 must be nonnegative");
    require(tol > 0.0 && stage2_tol > 0.0, "colar: tolerances must be positive");
    require(max_iter_stage1 > 0 && max_iter_stage2 > 0, "colar: iteration caps must be positive");
    require(admm_penalty > 0.0, "colar: admm_penalty must be positive");
    require(root_ridge >= 0.0, "colar: root_ridge must be nonnegative");
}

double ColarConfig::resolved_lambda1(Index p, Index n) const {
    if (lambda1) return *lambda1;
    return lambda1_mult * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double ColarConfig::resolved_lambda2(Index dim, Index n) const {
    if (lambda2) return *lambda2;
    return lambda2_mult * std::sqrt((1.0 + std::log(static_cast<double>(dim))) / static_cast<double>(n));
}

std::pair<Dataset, Dataset> split_data(const Dataset& data, std::optional<std::uint64_t> permute_seed) {
    const Index n = data.n();
    require(n >= 4, "split_data: need n >= 4");
    require(data.y.rows() == n, "split_data: X and Y row counts differ");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    if (permute_seed) {
        // Fisher-Yates driven directly by the engine so the order is portable
        Rng rng(*permute_seed);
        for (Index i = n - 1; i > 0; --i) {
            const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
    }

    const Index n0 = (n + 1) / 2;
    auto take = [&](Index begin, Index count) {
        Dataset part{Matrix(count, data.x.cols()), Matrix(count, data.y.cols())};
        for (Index r = 0; r < count; ++r) {
            const Index src = order[static_cast<std::size_t>(begin + r)];
            part.x.row(r) = data.x.row(src);
            part.y.row(r) = data.y.row(src);
        }
        return part;
    };
    return {take(0, n0), take(n0, n - n0)};
}

Stage1Result stage1_solve(const CovarianceTriple& cov0, double lambda1, const ColarConfig& config) {
    require(lambda1 >= 0.0, "stage1_solve: lambda1 must be nonnegative");
    const Index p = cov0.p();
    const Index q = cov0.q();
    const Matrix rx = sym_sqrt_pair(cov0.sxx + config.root_ridge * Matrix::Identity(p, p), false).root;
    const Matrix ry = sym_sqrt_pair(cov0.syy + config.root_ridge * Matrix::Identity(q, q), false).root;

    // K(F) = Rx F Ry is self-adjoint in the trace inner product; ||K|| = ||Rx|| ||Ry||.
    const double kx = Eigen::SelfAdjointEigenSolver<Matrix>(rx, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double ky = Eigen::SelfAdjointEigenSolver<Matrix>(ry, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double k_norm_sq = std::max(kx * kx * ky * ky, 1e-300);
    const double nu = 1.0 / config.admm_penalty;
    const double mu = nu / k_norm_sq;

    Matrix f = Matrix::Zero(p, q);
    Matrix z = Matrix::Zero(p, q);
    Matrix w = Matrix::Zero(p, q);  // scaled dual
    Matrix kf = Matrix::Zero(p, q);

    Stage1Result out;
    for (int it = 1; it <= config.max_iter_stage1; ++it) {
        const Matrix resid = kf - z + w;
        const Matrix step = f - (mu / nu) * (rx * resid * ry) + mu * cov0.sxy;
        f = soft_threshold(step, mu * lambda1);
        kf = rx * f * ry;
        const Matrix z_prev = z;
        z = project_nuclear_ball(kf + w);
        w += kf - z;

        out.iterations = it;
        out.primal_residual = (kf - z).norm();
        out.dual_residual = (rx * (z - z_prev) * ry).norm() / nu;
        if (std::max(out.primal_residual, out.dual_residual) < config.tol) {
            out.converged = true;
            break;
        }
    }
    const double nuc = nuclear_norm(kf);
    out.f = nuc > 1.0 ? Matrix(f / nuc) : f;
    return out;
}

SingularDirections stage1_singvecs(const Matrix& f) {
    SingularDirections out;
    if (f.size() == 0 || f.cwiseAbs().maxCoeff() == 0.0) {
        out.alpha0 = Vector::Zero(f.rows());
        out.beta0 = Vector::Zero(f.cols());
        out.zero = true;
        return out;
    }
    const SingularPair top = top_singular_pair(f);
    out.alpha0 = top.left;
    out.beta0 = top.right;
    for (Index i = 0; i < out.alpha0.size(); ++i) {
        if (std::abs(out.alpha0[i]) > 1e-14) {
            if (out.alpha0[i] < 0.0) out.alpha0 = -out.alpha0;
            break;
        }
    }
    if (out.alpha0.dot(f * out.beta0) < 0.0) out.beta0 = -out.beta0;
    return out;
}

LassoResult lasso_quadratic(const Matrix& gram, const Vector& linear, double lambda, int max_sweeps, double tol) {
    require(gram.rows() == gram.cols() && gram.rows() == linear.size(), "lasso_quadratic: dimension mismatch");
    require(lambda >= 0.0, "lasso_quadratic: lambda must be nonnegative");
    require(linear.allFinite(), "lasso_quadratic: linear term must be finite");
    const Index p = linear.size();
    const double half = lambda / 2.0;

    LassoResult out;
    out.x = Vector::Zero(p);
    Vector gx = Vector::Zero(p);  // gram * x
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index k = 0; k < p; ++k) {
            const double diag = gram(k, k);
            if (!(diag > 0.0)) continue;  // degenerate column stays at zero
            const double partial = linear[k] - (gx[k] - diag * out.x[k]);
            const double updated = soft_threshold(partial, half) / diag;
            const double delta = updated - out.x[k];
            if (delta != 0.0) {
                gx += delta * gram.col(k);
                out.x[k] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        out.sweeps = sweep;
        if (max_change < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

LassoResult stage2_lasso(const CovarianceTriple& cov1, const Vector& partner, double lambda2, const ColarConfig& config) {
    require(partner.size() == cov1.q(), "stage2_lasso: partner must have length q");
    return lasso_quadratic(cov1.sxx, cov1.sxy * partner, lambda2, config.max_iter_stage2, config.stage2_tol);
}

Vector stage3_normalize(const Vector& x_tilde, const Matrix& sigma) {
    require(sigma.rows() == x_tilde.size(), "stage3_normalize: dimension mismatch");
    const double quad = x_tilde.dot(sigma * x_tilde);
    if (!(quad > 0.0)) return Vector::Zero(x_tilde.size());
    return x_tilde / std::sqrt(quad);
}

ColarFit assemble_fit(const CovarianceTriple& full, Vector alpha_hat, Vector beta_hat) {
    ColarFit fit;
    fit.alpha_hat = std::move(alpha_hat);
    fit.beta_hat = std::move(beta_hat);
    const double qa = fit.alpha_hat.dot(full.sxx * fit.alpha_hat);
    const double qb = fit.beta_hat.dot(full.syy * fit.beta_hat);
    if (!(qa > 0.0) || !(qb > 0.0)) {
        fit.no_signal = true;
        fit.rho_hat = 0.0;
        fit.x_hat = Vector::Zero(fit.alpha_hat.size());
        fit.y_hat = Vector::Zero(fit.beta_hat.size());
        return fit;
    }
    fit.rho_hat = fit.alpha_hat.dot(full.sxy * fit.beta_hat) / (std::sqrt(qa) * std::sqrt(qb));
    const double scale = std::sqrt(std::abs(fit.rho_hat));
    fit.x_hat = scale * fit.alpha_hat;
    fit.y_hat = scale * fit.beta_hat;
    if (fit.x_hat.dot(full.sxy * fit.y_hat) < 0.0) {
        fit.x_hat = -fit.x_hat;
        fit.diagnostics.sign_flipped = true;
    }
    return fit;
}

ColarFit fit_colar(const Dataset& data, const ColarConfig& config) {
    config.validate();
    const Index n = data.n();
    require(n >= 4, "fit_colar: need n >= 4");
    const Index p = data.x.cols();
    const Index q = data.y.cols();

    const auto [half0, half1] = split_data(data, config.split_seed);
    const CovarianceTriple cov0 = empirical_covariances(half0.x, half0.y);
    const CovarianceTriple cov1 = empirical_covariances(half1.x, half1.y);
    const CovarianceTriple full = empirical_covariances(data.x, data.y);

    ColarDiagnostics diag;
    diag.lambda1 = config.resolved_lambda1(p, n);
    diag.lambda2_alpha = config.resolved_lambda2(p, n);
    diag.lambda2_beta = config.resolved_lambda2(q, n);

    const Stage1Result s1 = stage1_solve(cov0, diag.lambda1, config);
    diag.stage1_iterations = s1.iterations;
    diag.stage1_primal_residual = s1.primal_residual;
    diag.stage1_dual_residual = s1.dual_residual;
    diag.stage1_converged = s1.converged;
    const SingularDirections dirs = stage1_singvecs(s1.f);

    const LassoResult xa = lasso_quadratic(cov1.sxx, cov1.sxy * dirs.beta0, diag.lambda2_alpha,
                                           config.max_iter_stage2, config.stage2_tol);
    const LassoResult yb = lasso_quadratic(cov1.syy, cov1.sxy.transpose() * dirs.alpha0, diag.lambda2_beta,
                                           config.max_iter_stage2, config.stage2_tol);
    diag.stage2_sweeps_alpha = xa.sweeps;
    diag.stage2_sweeps_beta = yb.sweeps;

    ColarFit fit = assemble_fit(full, stage3_normalize(xa.x, full.sxx), stage3_normalize(yb.x, full.syy));
    const bool flipped = fit.diagnostics.sign_flipped;
    fit.diagnostics = diag;
    fit.diagnostics.sign_flipped = flipped;
    fit.f_hat = s1.f;
    fit.alpha0_hat = dirs.alpha0;
    fit.beta0_hat = dirs.beta0;
    return fit;
}

}  // namespace scca
