#include "scca/debias.hpp"

#include <algorithm>
#include <cmath>

#include "scca/errors.hpp"
#include "scca/model.hpp"

namespace scca {

DebiasedPair debias_directions(const Vector& x_hat, const Vector& y_hat, const Matrix& phi,
                               const CovarianceTriple& cov) {
    const Index p = cov.p();
    const Index q = cov.q();
    require(x_hat.size() == p && y_hat.size() == q, "debias_directions: direction dimensions do not match covariances");
    require(phi.rows() == p + q && phi.cols() == p + q, "debias_directions: Phi must be (p+q) x (p+q)");
    const Vector g = grad_h(cov, x_hat, y_hat).stacked();
    const Vector corrected = (Vector(p + q) << x_hat, y_hat).finished() - phi.transpose() * g;
    return {corrected.head(p), corrected.tail(q)};
}

double debias_rho_sq_raw(const Vector& x_hat, const Vector& y_hat, const Vector& x_db, const Vector& y_db,
                         const Matrix& sxy) {
    require(sxy.rows() == x_hat.size() && sxy.cols() == y_hat.size() && x_db.size() == x_hat.size() &&
                y_db.size() == y_hat.size(),
            "debias_rho_sq: dimension mismatch");
    return x_hat.dot(sxy * y_db) + x_db.dot(sxy * y_hat) - x_hat.dot(sxy * y_hat);
}

double clamp_rho_sq(double raw) { return std::min(1.0, std::abs(raw)); }

double debias_rho_sq(const Vector& x_hat, const Vector& y_hat, const Vector& x_db, const Vector& y_db,
                     const Matrix& sxy) {
    return clamp_rho_sq(debias_rho_sq_raw(x_hat, y_hat, x_db, y_db, sxy));
}

Matrix pseudo_observations(const Dataset& data, const Matrix& phi, const Vector& x_hat, const Vector& y_hat,
                           double rho, const CovarianceTriple& cov, bool center) {
    const Index n = data.n();
    const Index p = data.x.cols();
    const Index q = data.y.cols();
    require(n >= 2, "pseudo_observations: need n >= 2");
    require(data.y.rows() == n, "pseudo_observations: X and Y row counts differ");
    require(cov.p() == p && cov.q() == q, "pseudo_observations: covariance dimensions do not match data");
    require(x_hat.size() == p && y_hat.size() == q, "pseudo_observations: direction dimensions do not match data");
    require(phi.rows() == p + q, "pseudo_observations: Phi must have p+q rows");

    const Matrix xc = center ? center_columns(data.x) : data.x;
    const Matrix yc = center ? center_columns(data.y) : data.y;
    const Vector sx = xc * x_hat;
    const Vector sy = yc * y_hat;
    const Matrix phi_a = phi.topRows(p);
    const Matrix phi_b = phi.bottomRows(q);
    const Vector ca = phi_a.transpose() * (cov.sxx * x_hat);
    const Vector cb = phi_b.transpose() * (cov.syy * y_hat);

    const Vector wa = rho * sx - sy;
    const Vector wb = rho * sy - sx;
    Matrix z = wa.asDiagonal() * (xc * phi_a);
    z.noalias() += wb.asDiagonal() * (yc * phi_b);
    z.noalias() += sx.cwiseAbs2() * ca.transpose();
    z.noalias() += sy.cwiseAbs2() * cb.transpose();
    return z;
}

Vector column_variances(const Matrix& z) {
    require(z.rows() >= 1, "column_variances: empty matrix");
    const double n = static_cast<double>(z.rows());
    const Vector mean = z.colwise().mean().transpose();
    Vector out(z.cols());
    for (Index i = 0; i < z.cols(); ++i) out[i] = (z.col(i).array() - mean[i]).square().sum() / n;
    return out;
}

double sigma_i_hat_sq(const Dataset& data, Index i, const Matrix& phi, const Vector& x_hat, const Vector& y_hat,
                      double rho, const CovarianceTriple& cov) {
    require(i >= 0 && i < phi.cols(), "sigma_i_hat_sq: coordinate out of range");
    const Matrix col = phi.col(i);
    return column_variances(pseudo_observations(data, col, x_hat, y_hat, rho, cov))[0];
}

SigmaRhoPlugin sigma_rho_sq_hat(const Dataset& data, const Vector& x_hat, const Vector& y_hat, double rho) {
    require(data.n() >= 1, "sigma_rho_sq_hat: need n >= 1");
    // A single row cannot be centered meaningfully; use it as given.
    const Matrix xc = data.n() > 1 ? center_columns(data.x) : data.x;
    const Matrix yc = data.n() > 1 ? center_columns(data.y) : data.y;
    const Vector prod = (xc * x_hat).cwiseProduct(yc * y_hat);
    SigmaRhoPlugin out;
    out.raw = prod.squaredNorm() / static_cast<double>(data.n()) - std::pow(rho, 4);
    out.clamped = out.raw < 0.0;
    out.value = std::max(0.0, out.raw);
    return out;
}

double sigma_rho_sq_pseudo(const Dataset& data, const Vector& x_hat, const Vector& y_hat, double rho) {
    require(data.n() >= 2, "sigma_rho_sq_pseudo: need n >= 2");
    const Vector a = center_columns(data.x) * x_hat;
    const Vector b = center_columns(data.y) * y_hat;
    const Matrix s = (rho * a.cwiseAbs2() + rho * b.cwiseAbs2() - 2.0 * a.cwiseProduct(b));
    return column_variances(s)[0];
}

DebiasResult debias(const Dataset& data, const CovarianceTriple& cov, const Vector& x_hat, const Vector& y_hat,
                    double rho, const Matrix& phi) {
    DebiasResult out;
    const DebiasedPair pair = debias_directions(x_hat, y_hat, phi, cov);
    out.x_db = pair.x_db;
    out.y_db = pair.y_db;
    out.rho_sq_raw = debias_rho_sq_raw(x_hat, y_hat, out.x_db, out.y_db, cov.sxy);
    out.rho_sq_db = clamp_rho_sq(out.rho_sq_raw);
    out.pseudo = pseudo_observations(data, phi, x_hat, y_hat, rho, cov);
    out.sigma_hat = column_variances(out.pseudo).cwiseMax(0.0).cwiseSqrt();
    const SigmaRhoPlugin plug = sigma_rho_sq_hat(data, x_hat, y_hat, rho);
    out.sigma_rho_sq_hat = plug.value;
    out.sigma_rho_clamped = plug.clamped;
    out.sigma_rho_sq_pseudo = sigma_rho_sq_pseudo(data, x_hat, y_hat, rho);
    return out;
}

}  // namespace scca
