#pragma once

#include <cstdint>

#include "scca/linalg.hpp"

namespace scca {

/// Population CCA system: Sigma_xy = Sigma_x U diag(lambda) V^T Sigma_y with
/// U^T Sigma_x U = V^T Sigma_y V = I_r.
struct CcaModel {
    Matrix sigma_x;
    Matrix sigma_y;
    Matrix u;       // p x r
    Matrix v;       // q x r
    Vector lambda;  // descending canonical correlations
    Matrix sigma_xy;
    double m_bound = 1.0;  // max over both covariances of max(lambda_max, 1/lambda_min)

    Index p() const { return sigma_x.rows(); }
    Index q() const { return sigma_y.rows(); }
    Index rank() const { return lambda.size(); }
    double rho0() const { return lambda[0]; }
    double second_correlation() const { return rank() > 1 ? lambda[1] : 0.0; }

    /// Population moments packaged like an empirical triple (n = 0).
    CovarianceTriple covariances() const;
    /// Joint (p+q) x (p+q) covariance of (X, Y).
    Matrix joint_covariance() const;
};

/// Leading directions and their sqrt(rho0)-scaled versions.
struct ScaledTruth {
    Vector alpha0;
    Vector beta0;
    Vector x0;
    Vector y0;
};

inline constexpr double kDefaultEigengap = 1e-3;

/// Orthonormalizes the raw directions in the Sigma inner products and
/// assembles Sigma_xy. Requires lambda strictly decreasing in (0, 1) with
/// lambda_1 - lambda_2 > eigengap.
CcaModel build_model(const Matrix& sigma_x, const Matrix& sigma_y, const Matrix& raw_u,
                     const Matrix& raw_v, const Vector& lambda, double eigengap = kDefaultEigengap);

ScaledTruth scaled_truth(const CcaModel& model);

struct CanonicalSystem {
    Vector correlations;  // min(p, q) entries, descending
    Matrix u;             // Sigma_x-normalized directions, columns
    Matrix v;
};

/// Brute-force canonical analysis by SVD of Sigma_x^{-1/2} Sigma_xy Sigma_y^{-1/2}.
CanonicalSystem canonical_oracle(const Matrix& sigma_x, const Matrix& sigma_y, const Matrix& sigma_xy);
CanonicalSystem canonical_oracle(const CcaModel& model);

/// The smooth surrogate whose minimizers are +-(x0, y0):
/// (1 - C/2)(x'Sx x)(y'Sy y) + C (x'Sx x)^2/4 + C (y'Sy y)^2/4 - 2 x'Sxy y.
double objective_h(const CovarianceTriple& cov, const Vector& x, const Vector& y, double c = 2.0);

struct Gradient {
    Vector gx;
    Vector gy;
    Vector stacked() const;
};

/// Gradient of h for a general C > 0.
Gradient grad_h_general(const CovarianceTriple& cov, const Vector& x, const Vector& y, double c);

/// Gradient of h at C = 2: 2(x'Sx x) Sx x - 2 Sxy y and its mirror.
Gradient grad_h(const CovarianceTriple& cov, const Vector& x, const Vector& y);

/// Plug-in Hessian of h at C = 2, a (p+q) x (p+q) symmetric matrix.
Matrix hessian_H(const CovarianceTriple& cov, const Vector& x, const Vector& y);

/// Population Hessian at (x0, y0).
Matrix oracle_H0(const CcaModel& model);

/// Leading diagonal entries of the O3/O4 matrices in the closed-form inverse.
/// Exposed so tests can inject perturbed constants.
struct PhiConstants {
    double o3_lead = 1.0 / 8.0;
    double o4_lead = -5.0 / 8.0;
};

/// Closed-form inverse of H0:
/// (2 rho0)^{-1} [U O4 U' + Sx^{-1}, U O3 V'; V O3 U', V O4 V' + Sy^{-1}].
Matrix oracle_Phi0(const CcaModel& model, const PhiConstants& constants = {});

/// Lower bound 2(rho0 - lambda_2)/M on the smallest eigenvalue of H0.
double hessian_min_eig_bound(const CcaModel& model);

/// Variance of T = a'XX'b + c'YY'd - z'XY'd - b'XY'gamma for jointly
/// Gaussian (X, Y) with joint covariance `sigma` (the 20-term closed form).
double variance_quadratic(const Matrix& sigma, Index p, const Vector& a, const Vector& b,
                          const Vector& z, const Vector& c, const Vector& d, const Vector& gamma);

/// sigma_i^2 = var(Z(i)) under Gaussianity via the variance lemma applied to
/// the i-th column of Phi0. Valid for 0 <= i < p + q.
double sigma_sq_via_variance_lemma(const CcaModel& model, Index i);

/// sigma_i^2 for 0 <= i < p from the three-term closed form in U, Lambda and
/// an orthonormal completion of Sigma_x^{1/2} U (QR with seeded Gaussian
/// columns).
double oracle_sigma_sq_gaussian(const CcaModel& model, Index i, std::uint64_t completion_seed = 0);

/// min(20.58945, (1 - rho0^2)/rho0), the published floor for 4 sigma_i^2.
double four_sigma_sq_floor(double rho0);

}  // namespace scca
