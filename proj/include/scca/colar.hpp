#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "scca/datagen.hpp"
#include "scca/linalg.hpp"

namespace scca {

/// Tuning for the three-stage preliminary estimator. When the explicit
/// penalties are unset they follow
///   lambda1 = lambda1_mult * sqrt(log(p) / n),
///   lambda2 = lambda2_mult * sqrt((1 + log(dim)) / n),
/// with n the full sample size and dim = p for alpha, q for beta.
struct ColarConfig {
    double lambda1_mult = 0.55;
    double lambda2_mult = 1.0;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    double tol = 1e-4;
    int max_iter_stage1 = 200;
    double admm_penalty = 1.0;
    int max_iter_stage2 = 10000;
    double stage2_tol = 1e-8;
    double root_ridge = 1e-8;
    std::optional<std::uint64_t> split_seed;  // permute rows before splitting

    void validate() const;
    double resolved_lambda1(Index p, Index n) const;
    double resolved_lambda2(Index dim, Index n) const;
};

struct Stage1Result {
    Matrix f;  // feasible: ||Sx^{1/2} F Sy^{1/2}||_* <= 1
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;
};

struct ColarDiagnostics {
    int stage1_iterations = 0;
    double stage1_primal_residual = 0.0;
    double stage1_dual_residual = 0.0;
    bool stage1_converged = false;
    int stage2_sweeps_alpha = 0;
    int stage2_sweeps_beta = 0;
    double lambda1 = 0.0;
    double lambda2_alpha = 0.0;
    double lambda2_beta = 0.0;
    bool sign_flipped = false;
};

struct ColarFit {
    Vector alpha_hat;
    Vector beta_hat;
    double rho_hat = 0.0;
    Vector x_hat;  // |rho_hat|^{1/2} alpha_hat, sign-aligned
    Vector y_hat;
    Matrix f_hat;
    Vector alpha0_hat;  // stage-1 singular vectors
    Vector beta0_hat;
    bool no_signal = false;
    ColarDiagnostics diagnostics;
};

/// First ceil(n/2) rows to part 0, the rest to part 1; rows are permuted
/// first when a seed is given.
std::pair<Dataset, Dataset> split_data(const Dataset& data, std::optional<std::uint64_t> permute_seed = {});

/// Linearized ADMM for max tr(Syx F) - lambda1 ||F||_1 over the nuclear
/// ball {||Sx^{1/2} F Sy^{1/2}||_* <= 1}.
Stage1Result stage1_solve(const CovarianceTriple& cov0, double lambda1, const ColarConfig& config = {});

struct SingularDirections {
    Vector alpha0;
    Vector beta0;
    bool zero = false;
};

/// Unit top singular pair of F with the first nonzero entry of alpha0
/// positive and alpha0' F beta0 >= 0. A zero F yields zero vectors.
SingularDirections stage1_singvecs(const Matrix& f);

struct LassoResult {
    Vector x;
    int sweeps = 0;
    bool converged = false;
};

/// Coordinate descent for min x'Gx - 2 x'b + lambda ||x||_1.
LassoResult lasso_quadratic(const Matrix& gram, const Vector& linear, double lambda, int max_sweeps = 10000,
                            double tol = 1e-8);

/// Stage 2 for alpha: gram Sx^{(1)}, linear term Sxy^{(1)} partner.
LassoResult stage2_lasso(const CovarianceTriple& cov1, const Vector& partner, double lambda2,
                         const ColarConfig& config = {});

/// x / sqrt(x' S x) when the quadratic form is positive, else zero.
Vector stage3_normalize(const Vector& x_tilde, const Matrix& sigma);

ColarFit fit_colar(const Dataset& data, const ColarConfig& config = {});

/// Preliminary fit from the full-sample covariances and given directions
/// (shared by fit_colar and callers supplying their own alpha/beta).
ColarFit assemble_fit(const CovarianceTriple& full, Vector alpha_hat, Vector beta_hat);

}  // namespace scca
