#pragma once

#include <string>
#include <vector>

#include "scca/debias.hpp"
#include "scca/linalg.hpp"

namespace scca {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    double length() const { return upper - lower; }
    bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Two-sided standard normal quantile z_{(1+level)/2}.
double normal_critical(double level);

/// Interval for the squared coordinate: [max(0, x^2 - l), x^2 + l] with
/// l = 4 z w sigma / sqrt(n), w = |x| or max(|x|, 1) when conservative.
Interval ci_squared(double x_db, double sigma, Index n, double level = 0.95, bool conservative = false);

/// Chi-square(1) test of a zero coordinate: T = n x^2 / (4 sigma^2).
double test_statistic(double x_db, double sigma, Index n);
double test_zero(double x_db, double sigma, Index n);

struct CrossTermInterval {
    Interval ci;
    double estimate = 0.0;
    double variance = 0.0;  // plug-in asymptotic variance, clamped at zero
    bool variance_clamped = false;
    bool null_regime = false;  // both factors zero: the normal limit does not apply
};

/// Normal interval for the product x_i x_j with asymptotic variance
/// 4 (x_i^2 sigma_j^2 + x_j^2 sigma_i^2 + 2 x_i x_j sigma_ij).
CrossTermInterval cross_term_ci(double x_i, double x_j, double sigma_i, double sigma_j, double sigma_ij, Index n,
                                double level = 0.95);

enum class FdrMethod { BH, BY };
std::string to_string(FdrMethod method);

struct FdrResult {
    Vector adjusted;
    std::vector<Index> discoveries;  // ascending indices with adjusted <= alpha
};

/// Step-up adjusted p-values; BY multiplies by sum_{k<=m} 1/k.
FdrResult fdr_adjust(const Vector& pvalues, FdrMethod method, double alpha = 0.05);

/// Adjusts the first p and the remaining entries as separate families;
/// discovery indices refer to the stacked vector.
FdrResult fdr_adjust_blocks(const Vector& pvalues, Index p, FdrMethod method, double alpha = 0.05);

/// rho^2 +- z sigma / sqrt(n) intersected with [0, 1].
Interval rho_sq_ci(double rho_sq_db, double sigma_rho_sq, Index n, double level = 0.95);

struct CoordinateRecord {
    Index index = 0;  // 0-based over the stacked (x, y) vector
    double x_db = 0.0;
    double estimate = 0.0;  // x_db^2
    double sigma = 0.0;
    Interval ordinary;
    Interval conservative;
    double p_value = 1.0;
    bool test_defined = true;  // false when sigma is zero
};

struct RhoRecord {
    double rho_sq_db = 0.0;
    Interval ci;
    double sigma_rho = 0.0;
};

struct InferenceConfig {
    double level = 0.95;
    double alpha = 0.05;
    void validate() const;
};

struct InferenceReport {
    Index n = 0;
    Index p = 0;
    Index q = 0;
    double level = 0.95;
    double alpha = 0.05;
    std::vector<CoordinateRecord> coords;  // p + q entries
    RhoRecord rho;
    FdrResult bh;  // x and y coordinates adjusted as separate families
    FdrResult by;
};

InferenceReport build_inference(const DebiasResult& db, Index n, const InferenceConfig& config = {});

}  // namespace scca
