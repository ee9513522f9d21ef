#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scca/model.hpp"

namespace scca {

struct OracleCheck {
    std::string name;
    bool passed = false;
    double worst = 0.0;      // worst observed discrepancy (or margin)
    double tolerance = 0.0;
    std::string detail;
};

struct OracleSuiteOptions {
    int n_models = 50;
    std::uint64_t seed = 20240601;
    int mc_models = 5;
    int mc_draws = 1000000;
    PhiConstants constants;  // injected into the closed-form inverse
};

/// Local minimizer of h(., .; c) from `start`: Armijo gradient descent
/// followed by Newton polishing on a finite-difference Hessian.
Vector minimize_h(const CovarianceTriple& cov, double c, const Vector& start);

/// Max relative error between grad_h_general and central differences of
/// objective_h at (x, y).
double gradient_fd_error(const CovarianceTriple& cov, const Vector& x, const Vector& y, double c);

struct MonteCarloVariance {
    double variance = 0.0;
    double std_error = 0.0;
};

/// Empirical variance of the population pseudo-observation Z(i) (oracle
/// directions, Phi0, population moments) over `draws` Gaussian samples.
MonteCarloVariance monte_carlo_sigma_sq(const CcaModel& model, Index i, int draws, std::uint64_t seed);

/// Closed-form identities: Phi0 inverts H0, argmin of h, the eigenvalue
/// bound, and the variance lemma (closed form, composition, Monte Carlo).
std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& options = {});

}  // namespace scca
