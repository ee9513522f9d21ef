#pragma once

#include <Eigen/Dense>

namespace scca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Empirical second moments of a paired sample, all with divisor n.
struct CovarianceTriple {
    Matrix sxx;  // p x p
    Matrix syy;  // q x q
    Matrix sxy;  // p x q
    Index n = 0;

    Index p() const { return sxx.rows(); }
    Index q() const { return syy.rows(); }
};

/// Covariances of X (n x p) and Y (n x q). Columns are mean-centered first
/// when `center` is set; the divisor is always n.
CovarianceTriple empirical_covariances(const Matrix& x, const Matrix& y, bool center = true);

/// Column-mean-centered copy.
Matrix center_columns(const Matrix& m);

inline constexpr double kEigenClip = 1e-10;
inline constexpr double kInverseRootFloor = 1e-8;

struct SqrtPair {
    Matrix root;      // A^{1/2}
    Matrix inv_root;  // A^{-1/2}; empty when not requested
};

/// Symmetric square root P D^{1/2} P^T and, optionally, its inverse.
/// Eigenvalues above -1e-10 are clipped to zero; the inverse root requires
/// a minimum eigenvalue above 1e-8.
SqrtPair sym_sqrt_pair(const Matrix& a, bool with_inverse = true);

/// Euclidean projection of v onto {s >= 0, sum(s) <= radius}.
Vector project_capped_simplex(const Vector& v, double radius = 1.0);

/// Euclidean projection of v onto the l1 ball of the given radius.
Vector project_l1_ball(const Vector& v, double radius);

/// Frobenius-nearest matrix with nuclear norm <= radius.
Matrix project_nuclear_ball(const Matrix& h, double radius = 1.0);

double nuclear_norm(const Matrix& m);

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

/// Elementwise sign(m) * max(|m| - t, 0).
Matrix soft_threshold(const Matrix& m, double t);

/// Top singular value pair of m from a deterministic SVD.
struct SingularPair {
    Vector left;
    Vector right;
    double value = 0.0;
};
SingularPair top_singular_pair(const Matrix& m);

}  // namespace scca
