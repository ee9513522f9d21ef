#pragma once

#include "scca/datagen.hpp"
#include "scca/linalg.hpp"

namespace scca {

struct DebiasedPair {
    Vector x_db;
    Vector y_db;
};

/// [x; y] - Phi' grad h(x, y) with the gradient taken at the given covariances.
DebiasedPair debias_directions(const Vector& x_hat, const Vector& y_hat, const Matrix& phi,
                               const CovarianceTriple& cov);

/// x' Sxy y_db + x_db' Sxy y - x' Sxy y.
double debias_rho_sq_raw(const Vector& x_hat, const Vector& y_hat, const Vector& x_db, const Vector& y_db,
                         const Matrix& sxy);

/// min(1, |raw|).
double clamp_rho_sq(double raw);

double debias_rho_sq(const Vector& x_hat, const Vector& y_hat, const Vector& x_db, const Vector& y_db,
                     const Matrix& sxy);

/// n x k matrix whose column i holds the pseudo-observations Z_j(i) built
/// from column i of Phi ((p+q) x k). Columns of the data are mean-centered
/// first unless `center` is false. `rho` is the (nonnegative) canonical
/// correlation estimate.
Matrix pseudo_observations(const Dataset& data, const Matrix& phi, const Vector& x_hat, const Vector& y_hat,
                           double rho, const CovarianceTriple& cov, bool center = true);

/// Variance (divisor n) of the pseudo-observations of column i.
double sigma_i_hat_sq(const Dataset& data, Index i, const Matrix& phi, const Vector& x_hat, const Vector& y_hat,
                      double rho, const CovarianceTriple& cov);

/// Column variances (divisor n) of a pseudo-observation matrix.
Vector column_variances(const Matrix& z);

struct SigmaRhoPlugin {
    double value = 0.0;   // clamped at zero
    double raw = 0.0;
    bool clamped = false;
};

/// mean((x'X_j)^2 (y'Y_j)^2) - rho^4 on centered rows.
SigmaRhoPlugin sigma_rho_sq_hat(const Dataset& data, const Vector& x_hat, const Vector& y_hat, double rho);

/// Variance (divisor n) of rho (x'X_j)^2 + rho (y'Y_j)^2 - 2 (x'X_j)(y'Y_j)
/// on centered rows; the influence-function estimate of the variance of
/// sqrt(n) times the de-biased rho^2.
double sigma_rho_sq_pseudo(const Dataset& data, const Vector& x_hat, const Vector& y_hat, double rho);

struct DebiasResult {
    Vector x_db;
    Vector y_db;
    double rho_sq_raw = 0.0;
    double rho_sq_db = 0.0;
    Vector sigma_hat;  // sqrt of pseudo-observation variances, length p+q
    Matrix pseudo;     // n x (p+q) pseudo-observations
    double sigma_rho_sq_hat = 0.0;
    bool sigma_rho_clamped = false;
    double sigma_rho_sq_pseudo = 0.0;
};

/// Full de-biasing step for a sign-aligned preliminary pair.
DebiasResult debias(const Dataset& data, const CovarianceTriple& cov, const Vector& x_hat, const Vector& y_hat,
                    double rho, const Matrix& phi);

}  // namespace scca
