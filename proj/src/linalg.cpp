#include "scca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scca/errors.hpp"

namespace scca {

Matrix center_columns(const Matrix& m) {
    Matrix out = m;
    if (m.rows() == 0) return out;
    out.rowwise() -= m.colwise().mean();
    return out;
}

CovarianceTriple empirical_covariances(const Matrix& x, const Matrix& y, bool center) {
    require(x.rows() == y.rows(), "empirical_covariances: X and Y row counts differ");
    require(x.rows() >= 2, "empirical_covariances: need n >= 2");
    const double inv_n = 1.0 / static_cast<double>(x.rows());

    CovarianceTriple cov;
    cov.n = x.rows();
    if (center) {
        const Matrix xc = center_columns(x);
        const Matrix yc = center_columns(y);
        cov.sxx = inv_n * (xc.transpose() * xc);
        cov.syy = inv_n * (yc.transpose() * yc);
        cov.sxy = inv_n * (xc.transpose() * yc);
    } else {
        cov.sxx = inv_n * (x.transpose() * x);
        cov.syy = inv_n * (y.transpose() * y);
        cov.sxy = inv_n * (x.transpose() * y);
    }
    // exact symmetry; the products are symmetric only up to rounding
    cov.sxx = 0.5 * (cov.sxx + cov.sxx.transpose()).eval();
    cov.syy = 0.5 * (cov.syy + cov.syy.transpose()).eval();
    return cov;
}

SqrtPair sym_sqrt_pair(const Matrix& a, bool with_inverse) {
    require(a.rows() == a.cols(), "sym_sqrt_pair: matrix must be square");
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff()),
            "sym_sqrt_pair: matrix must be symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("sym_sqrt_pair: eigendecomposition failed");
    Vector ev = es.eigenvalues();
    require(ev.minCoeff() >= -kEigenClip, "sym_sqrt_pair: matrix is not positive semidefinite");
    ev = ev.cwiseMax(0.0);

    const Matrix& p = es.eigenvectors();
    SqrtPair out;
    out.root = p * ev.cwiseSqrt().asDiagonal() * p.transpose();
    if (with_inverse) {
        if (ev.minCoeff() <= kInverseRootFloor)
            throw NumericalError("sym_sqrt_pair: matrix is singular, inverse root undefined");
        out.inv_root = p * ev.cwiseSqrt().cwiseInverse().asDiagonal() * p.transpose();
    }
    return out;
}

Vector project_capped_simplex(const Vector& v, double radius) {
    require(radius >= 0.0, "project_capped_simplex: radius must be nonnegative");
    Vector pos = v.cwiseMax(0.0);
    if (pos.sum() <= radius) return pos;

    // sum constraint active: threshold theta so that sum(max(v - theta, 0)) = radius
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        const double t = (cumsum - radius) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

Vector project_l1_ball(const Vector& v, double radius) {
    require(radius >= 0.0, "project_l1_ball: radius must be nonnegative");
    if (v.lpNorm<1>() <= radius) return v;
    const Vector mag = project_capped_simplex(v.cwiseAbs(), radius);
    Vector out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = v[i] < 0.0 ? -mag[i] : mag[i];
    return out;
}

Matrix project_nuclear_ball(const Matrix& h, double radius) {
    if (h.size() == 0) return h;
    Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    if (s.sum() <= radius) return h;
    const Vector sp = project_capped_simplex(s, radius);
    return svd.matrixU() * sp.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

Matrix soft_threshold(const Matrix& m, double t) {
    require(t >= 0.0, "soft_threshold: threshold must be nonnegative");
    return m.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

SingularPair top_singular_pair(const Matrix& m) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SingularPair out;
    out.left = svd.matrixU().col(0);
    out.right = svd.matrixV().col(0);
    out.value = svd.singularValues()[0];
    return out;
}

}  // namespace scca
