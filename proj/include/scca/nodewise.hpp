#pragma once

#include <optional>
#include <vector>

#include "scca/linalg.hpp"

namespace scca {

/// Penalty lambda = c_mult * sqrt(log(m) / n) for an m x m input, uniform
/// over columns, with l1 radius B = b_mult / lambda (unbounded at lambda = 0).
struct NodewiseConfig {
    double c_mult = 40.0;
    double b_mult = 10.0;
    std::optional<double> lambda;  // overrides the c_mult rule
    int max_iter = 5000;
    double tol = 1e-8;

    void validate() const;
    double resolved_lambda(Index m, Index n) const;
    double radius(double lambda) const;
};

struct NodewiseColumn {
    Vector eta;  // length m - 1, indexed by the coordinates other than j
    int iterations = 0;
    bool converged = false;
};

/// Stationary point of eta' A_{-j,-j} eta - 2 A_{-j,j}' eta + lambda ||eta||_1
/// subject to ||eta||_1 <= radius, by projected proximal gradient with step
/// 1/(2L). `spectral_bound` must dominate ||A_{-j,-j}||_2; pass a
/// nonpositive value to have it computed.
NodewiseColumn nodewise_column(const Matrix& a, Index j, double lambda, double radius, int max_iter = 5000,
                               double tol = 1e-8, double spectral_bound = -1.0);

/// Gamma_j: 1 at position j and -eta elsewhere.
Vector nodewise_gamma(const Vector& eta, Index j);

/// tau_j^2 = Gamma_j' A Gamma_j + lambda ||eta||_1 / 2. Throws NumericalError
/// when it does not exceed 1e-10.
double tau_hat_sq(const Matrix& a, const Vector& eta, double lambda, Index j);

struct PrecisionEstimate {
    Matrix phi_hat;  // column j is Gamma_j / tau_j^2
    Vector tau_sq;
    std::vector<Vector> eta;
    double kkt_max = 0.0;  // max |Phi' A - I|
    double lambda = 0.0;
    int unconverged_columns = 0;
};

/// Approximate inverse of a symmetric matrix, column by column. `n` is the
/// sample size entering the default penalty.
PrecisionEstimate invert_nodewise(const Matrix& a, Index n, const NodewiseConfig& config = {});

struct TuneResult {
    double best_c_mult = 0.0;
    std::vector<double> kkt_max;  // per candidate; +inf when degenerate
};

/// Candidate with the smallest kkt_max (ties to the smallest multiplier).
TuneResult tune_c_mult(const Matrix& a, Index n, const std::vector<double>& candidates,
                       const NodewiseConfig& base = {});

}  // namespace scca
