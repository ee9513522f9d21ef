#include "scca/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scca/errors.hpp"

namespace scca {

namespace {

double extreme_eigen_ratio(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return std::max(hi, 1.0 / lo);
}

void require_spd(const Matrix& s, const char* name) {
    require(s.rows() == s.cols(), std::string(name) + " must be square");
    require((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()),
            std::string(name) + " must be symmetric");
    Eigen::LLT<Matrix> llt(s);
    require(llt.info() == Eigen::Success, std::string(name) + " must be positive definite");
}

// Modified Gram-Schmidt in the inner product <a, b> = a' S b.
Matrix sigma_orthonormalize(const Matrix& s, const Matrix& raw, const char* name) {
    Matrix out = raw;
    for (Index k = 0; k < raw.cols(); ++k) {
        const double before = std::sqrt(raw.col(k).dot(s * raw.col(k)));
        for (Index j = 0; j < k; ++j) out.col(k) -= out.col(j).dot(s * out.col(k)) * out.col(j);
        const double norm = std::sqrt(std::max(0.0, out.col(k).dot(s * out.col(k))));
        if (!(before > 0.0) || norm <= 1e-10 * before)
            throw ValidationError(std::string("build_model: ") + name + " directions are rank deficient");
        out.col(k) /= norm;
    }
    return out;
}

}  // namespace

CovarianceTriple CcaModel::covariances() const {
    return CovarianceTriple{sigma_x, sigma_y, sigma_xy, 0};
}

Matrix CcaModel::joint_covariance() const {
    const Index pp = p();
    const Index qq = q();
    Matrix joint(pp + qq, pp + qq);
    joint.topLeftCorner(pp, pp) = sigma_x;
    joint.bottomRightCorner(qq, qq) = sigma_y;
    joint.topRightCorner(pp, qq) = sigma_xy;
    joint.bottomLeftCorner(qq, pp) = sigma_xy.transpose();
    return joint;
}

CcaModel build_model(const Matrix& sigma_x, const Matrix& sigma_y, const Matrix& raw_u,
                     const Matrix& raw_v, const Vector& lambda, double eigengap) {
    require_spd(sigma_x, "sigma_x");
    require_spd(sigma_y, "sigma_y");
    const Index r = lambda.size();
    require(r >= 1, "build_model: need at least one canonical correlation");
    require(raw_u.rows() == sigma_x.rows() && raw_u.cols() == r, "build_model: raw_u must be p x r");
    require(raw_v.rows() == sigma_y.rows() && raw_v.cols() == r, "build_model: raw_v must be q x r");
    for (Index k = 0; k < r; ++k) {
        require(lambda[k] > 0.0 && lambda[k] < 1.0, "build_model: canonical correlations must lie in (0, 1)");
        if (k > 0) require(lambda[k] < lambda[k - 1], "build_model: canonical correlations must be strictly decreasing");
    }
    if (r > 1) require(lambda[0] - lambda[1] > eigengap, "build_model: eigengap rho0 - lambda_2 too small");

    CcaModel m;
    m.sigma_x = sigma_x;
    m.sigma_y = sigma_y;
    m.u = sigma_orthonormalize(sigma_x, raw_u, "u");
    m.v = sigma_orthonormalize(sigma_y, raw_v, "v");
    m.lambda = lambda;
    m.sigma_xy = sigma_x * m.u * lambda.asDiagonal() * m.v.transpose() * sigma_y;
    m.m_bound = std::max(extreme_eigen_ratio(sigma_x), extreme_eigen_ratio(sigma_y));
    return m;
}

ScaledTruth scaled_truth(const CcaModel& model) {
    ScaledTruth t;
    t.alpha0 = model.u.col(0);
    t.beta0 = model.v.col(0);
    const double s = std::sqrt(model.rho0());
    t.x0 = s * t.alpha0;
    t.y0 = s * t.beta0;
    return t;
}

CanonicalSystem canonical_oracle(const Matrix& sigma_x, const Matrix& sigma_y, const Matrix& sigma_xy) {
    const SqrtPair rx = sym_sqrt_pair(sigma_x);
    const SqrtPair ry = sym_sqrt_pair(sigma_y);
    const Matrix whitened = rx.inv_root * sigma_xy * ry.inv_root;
    Eigen::JacobiSVD<Matrix> svd(whitened, Eigen::ComputeThinU | Eigen::ComputeThinV);

    CanonicalSystem out;
    out.correlations = svd.singularValues();
    out.u = rx.inv_root * svd.matrixU();
    out.v = ry.inv_root * svd.matrixV();
    // joint sign convention: largest-magnitude entry of each u column positive
    for (Index k = 0; k < out.u.cols(); ++k) {
        Index arg = 0;
        out.u.col(k).cwiseAbs().maxCoeff(&arg);
        if (out.u(arg, k) < 0.0) {
            out.u.col(k) *= -1.0;
            out.v.col(k) *= -1.0;
        }
    }
    return out;
}

CanonicalSystem canonical_oracle(const CcaModel& model) {
    return canonical_oracle(model.sigma_x, model.sigma_y, model.sigma_xy);
}

namespace {
void require_dims(const CovarianceTriple& cov, const Vector& x, const Vector& y) {
    require(x.size() == cov.p() && y.size() == cov.q(), "dimension mismatch between directions and covariances");
}
}  // namespace

double objective_h(const CovarianceTriple& cov, const Vector& x, const Vector& y, double c) {
    require(c > 0.0, "objective_h: C must be positive");
    require_dims(cov, x, y);
    const double qx = x.dot(cov.sxx * x);
    const double qy = y.dot(cov.syy * y);
    return (1.0 - c / 2.0) * qx * qy + c * qx * qx / 4.0 + c * qy * qy / 4.0 - 2.0 * x.dot(cov.sxy * y);
}

Vector Gradient::stacked() const {
    Vector out(gx.size() + gy.size());
    out << gx, gy;
    return out;
}

Gradient grad_h_general(const CovarianceTriple& cov, const Vector& x, const Vector& y, double c) {
    require(c > 0.0, "grad_h: C must be positive");
    require_dims(cov, x, y);
    const Vector sx_x = cov.sxx * x;
    const Vector sy_y = cov.syy * y;
    const double qx = x.dot(sx_x);
    const double qy = y.dot(sy_y);
    Gradient g;
    g.gx = ((2.0 - c) * qy + c * qx) * sx_x - 2.0 * (cov.sxy * y);
    g.gy = ((2.0 - c) * qx + c * qy) * sy_y - 2.0 * (cov.sxy.transpose() * x);
    return g;
}

Gradient grad_h(const CovarianceTriple& cov, const Vector& x, const Vector& y) {
    require_dims(cov, x, y);
    const Vector sx_x = cov.sxx * x;
    const Vector sy_y = cov.syy * y;
    Gradient g;
    g.gx = 2.0 * x.dot(sx_x) * sx_x - 2.0 * (cov.sxy * y);
    g.gy = 2.0 * y.dot(sy_y) * sy_y - 2.0 * (cov.sxy.transpose() * x);
    return g;
}

Matrix hessian_H(const CovarianceTriple& cov, const Vector& x, const Vector& y) {
    require_dims(cov, x, y);
    const Index p = cov.p();
    const Index q = cov.q();
    const Vector sx_x = cov.sxx * x;
    const Vector sy_y = cov.syy * y;
    Matrix h(p + q, p + q);
    h.topLeftCorner(p, p) = 2.0 * (x.dot(sx_x) * cov.sxx + 2.0 * sx_x * sx_x.transpose());
    h.bottomRightCorner(q, q) = 2.0 * (y.dot(sy_y) * cov.syy + 2.0 * sy_y * sy_y.transpose());
    h.topRightCorner(p, q) = -2.0 * cov.sxy;
    h.bottomLeftCorner(q, p) = -2.0 * cov.sxy.transpose();
    return h;
}

Matrix oracle_H0(const CcaModel& model) {
    const Index p = model.p();
    const Index q = model.q();
    const double rho = model.rho0();
    const Vector sa = model.sigma_x * model.u.col(0);
    const Vector sb = model.sigma_y * model.v.col(0);
    Matrix h(p + q, p + q);
    h.topLeftCorner(p, p) = 2.0 * rho * (model.sigma_x + 2.0 * sa * sa.transpose());
    h.bottomRightCorner(q, q) = 2.0 * rho * (model.sigma_y + 2.0 * sb * sb.transpose());
    h.topRightCorner(p, q) = -2.0 * model.sigma_xy;
    h.bottomLeftCorner(q, p) = -2.0 * model.sigma_xy.transpose();
    return h;
}

Matrix oracle_Phi0(const CcaModel& model, const PhiConstants& constants) {
    const Index p = model.p();
    const Index q = model.q();
    const Index r = model.rank();
    const double rho = model.rho0();

    Vector o3(r), o4(r);
    o3[0] = constants.o3_lead;
    o4[0] = constants.o4_lead;
    for (Index k = 1; k < r; ++k) {
        const double lk = model.lambda[k];
        const double gap = rho * rho - lk * lk;
        if (!(gap > 0.0)) throw ValidationError("oracle_Phi0: rho0 must exceed the other canonical correlations");
        o3[k] = rho * lk / gap;
        o4[k] = lk * lk / gap;
    }

    const Matrix sx_inv = model.sigma_x.llt().solve(Matrix::Identity(p, p));
    const Matrix sy_inv = model.sigma_y.llt().solve(Matrix::Identity(q, q));
    Matrix phi(p + q, p + q);
    phi.topLeftCorner(p, p) = model.u * o4.asDiagonal() * model.u.transpose() + sx_inv;
    phi.bottomRightCorner(q, q) = model.v * o4.asDiagonal() * model.v.transpose() + sy_inv;
    phi.topRightCorner(p, q) = model.u * o3.asDiagonal() * model.v.transpose();
    phi.bottomLeftCorner(q, p) = model.v * o3.asDiagonal() * model.u.transpose();
    return phi / (2.0 * rho);
}

double hessian_min_eig_bound(const CcaModel& model) {
    return 2.0 * (model.rho0() - model.second_correlation()) / model.m_bound;
}

double variance_quadratic(const Matrix& sigma, Index p, const Vector& a, const Vector& b, const Vector& z,
                          const Vector& c, const Vector& d, const Vector& gamma) {
    const Index q = sigma.rows() - p;
    require(sigma.rows() == sigma.cols() && p > 0 && q > 0, "variance_quadratic: bad joint covariance shape");
    require(a.size() == p && b.size() == p && z.size() == p, "variance_quadratic: a, b, z must have length p");
    require(c.size() == q && d.size() == q && gamma.size() == q,
            "variance_quadratic: c, d, gamma must have length q");

    const auto sx = sigma.topLeftCorner(p, p);
    const auto sy = sigma.bottomRightCorner(q, q);
    const auto sxy = sigma.topRightCorner(p, q);
    auto fx = [&](const Vector& l, const Vector& r) { return l.dot(sx * r); };
    auto fy = [&](const Vector& l, const Vector& r) { return l.dot(sy * r); };
    auto fxy = [&](const Vector& l, const Vector& r) { return l.dot(sxy * r); };  // l in R^p, r in R^q

    double v = 0.0;
    v += fx(a, a) * fx(b, b) + std::pow(fx(a, b), 2);
    v += fy(c, c) * fy(d, d) + std::pow(fy(c, d), 2);
    v += fx(z, z) * fy(d, d) + std::pow(fxy(z, d), 2);
    v += fx(b, b) * fy(gamma, gamma) + std::pow(fxy(b, gamma), 2);
    v += 2.0 * fxy(a, c) * fxy(b, d) + 2.0 * fxy(a, d) * fxy(b, c);
    v += 2.0 * fx(z, b) * fy(d, gamma) + 2.0 * fxy(z, gamma) * fxy(b, d);
    v -= 2.0 * fx(a, z) * fxy(b, d) + 2.0 * fxy(a, d) * fx(b, z);
    v -= 2.0 * fx(a, b) * fxy(b, gamma) + 2.0 * fxy(a, gamma) * fx(b, b);
    v -= 2.0 * fxy(z, c) * fy(d, d) + 2.0 * fy(c, d) * fxy(z, d);
    v -= 2.0 * fxy(b, c) * fy(d, gamma) + 2.0 * fy(c, gamma) * fxy(b, d);
    return v;
}

double sigma_sq_via_variance_lemma(const CcaModel& model, Index i) {
    const Index p = model.p();
    const Index q = model.q();
    require(i >= 0 && i < p + q, "sigma_sq_via_variance_lemma: coordinate out of range");
    const double rho = model.rho0();
    const ScaledTruth t = scaled_truth(model);
    const Matrix phi = oracle_Phi0(model);
    const Vector phi_a = phi.col(i).head(p);
    const Vector phi_b = phi.col(i).tail(q);
    const double xi1 = phi_a.dot(model.sigma_x * t.x0);
    const double xi2 = phi_b.dot(model.sigma_y * t.y0);
    const Vector a = rho * phi_a + xi1 * t.x0;
    const Vector c = rho * phi_b + xi2 * t.y0;
    return variance_quadratic(model.joint_covariance(), p, a, t.x0, phi_a, c, t.y0, phi_b);
}

double oracle_sigma_sq_gaussian(const CcaModel& model, Index i, std::uint64_t completion_seed) {
    const Index p = model.p();
    const Index r = model.rank();
    require(i >= 0 && i < p, "oracle_sigma_sq_gaussian: coordinate must index the X block");
    const double rho = model.rho0();
    require(rho > 0.0 && rho < 1.0, "oracle_sigma_sq_gaussian: rho0 must lie in (0, 1)");
    const double rho2 = rho * rho;

    // nuisance canonical pairs k = 2..r
    double nuisance = 0.0;
    for (Index k = 1; k < r; ++k) {
        const double l2 = model.lambda[k] * model.lambda[k];
        const double uik = model.u(i, k);
        nuisance += (rho2 + l2 - 2.0 * rho2 * l2) / std::pow(rho2 - l2, 2) * uik * uik;
    }
    nuisance *= rho * (1.0 - rho2);

    const double x0i = std::sqrt(rho) * model.u(i, 0);
    const double leading = (3.0 * rho2 * rho2 - 2.0 * rho2 + 1.0) / (4.0 * rho2) * x0i * x0i;

    // orthonormal completion of Sigma_x^{1/2} U, mapped back by Sigma_x^{-1/2}
    double complement = 0.0;
    if (r < p) {
        const SqrtPair root = sym_sqrt_pair(model.sigma_x);
        Matrix basis(p, p);
        basis.leftCols(r) = root.root * model.u;
        std::mt19937_64 gen(completion_seed);
        std::normal_distribution<double> normal;
        for (Index j = r; j < p; ++j)
            for (Index k = 0; k < p; ++k) basis(k, j) = normal(gen);
        Eigen::HouseholderQR<Matrix> qr(basis);
        const Matrix qmat = qr.householderQ() * Matrix::Identity(p, p);
        const Matrix completed = root.inv_root * qmat.rightCols(p - r);
        complement = completed.row(i).squaredNorm();
    }
    complement *= (1.0 - rho2) / rho;

    return (nuisance + leading + complement) / 4.0;
}

double four_sigma_sq_floor(double rho0) {
    require(rho0 > 0.0 && rho0 < 1.0, "four_sigma_sq_floor: rho0 must lie in (0, 1)");
    return std::min(20.58945, (1.0 - rho0 * rho0) / rho0);
}

}  // namespace scca
