#include <doctest.h>

#include <cmath>

#include "scca/datagen.hpp"
#include "scca/errors.hpp"
#include "scca/model.hpp"
#include "scca/oracle_suite.hpp"
#include "test_helpers.hpp"

using namespace scca;
using testutil::max_abs;

TEST_CASE("build_model orthonormalizes in the covariance metric") {
    Rng rng(1);
    const CcaModel m = random_model(rng);
    CHECK(max_abs(m.u.transpose() * m.sigma_x * m.u - Matrix::Identity(m.rank(), m.rank())) < 1e-10);
    CHECK(max_abs(m.v.transpose() * m.sigma_y * m.v - Matrix::Identity(m.rank(), m.rank())) < 1e-10);
}

TEST_CASE("build_model rejects invalid inputs") {
    const Matrix i3 = Matrix::Identity(3, 3);
    Matrix u = Matrix::Identity(3, 2);
    Vector lam(2);
    lam << 0.5, 0.6;
    CHECK_THROWS_AS(build_model(i3, i3, u, u, lam), ValidationError);
    lam << 0.5, 0.4999;
    CHECK_THROWS_AS(build_model(i3, i3, u, u, lam), ValidationError);
    lam << 1.0, 0.4;
    CHECK_THROWS_AS(build_model(i3, i3, u, u, lam), ValidationError);
    lam << 0.8, 0.4;
    Matrix bad = i3;
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(build_model(bad, i3, u, u, lam), ValidationError);
    Matrix dup = Matrix::Zero(3, 2);
    dup.col(0) << 1, 1, 0;
    dup.col(1) << 2, 2, 0;
    CHECK_THROWS_AS(build_model(i3, i3, dup, u, lam), ValidationError);
}

TEST_CASE("canonical oracle recovers the generating system") {
    Rng rng(2);
    for (int k = 0; k < 10; ++k) {
        const CcaModel m = random_model(rng);
        const CanonicalSystem cs = canonical_oracle(m);
        for (Index j = 0; j < m.rank(); ++j) {
            CHECK(cs.correlations[j] == doctest::Approx(m.lambda[j]).epsilon(1e-10));
            CHECK(std::abs(cs.u.col(j).dot(m.sigma_x * m.u.col(j))) == doctest::Approx(1.0).epsilon(1e-8));
        }
        for (Index j = m.rank(); j < cs.correlations.size(); ++j) CHECK(cs.correlations[j] < 1e-10);
    }
}

TEST_CASE("gradient vanishes at the scaled truth") {
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
        const CcaModel m = random_model(rng);
        const ScaledTruth t = scaled_truth(m);
        const CovarianceTriple pop = m.covariances();
        CHECK(grad_h(pop, t.x0, t.y0).stacked().cwiseAbs().maxCoeff() < 1e-12);
        CHECK(grad_h_general(pop, t.x0, t.y0, 1.0).stacked().cwiseAbs().maxCoeff() < 1e-12);
        CHECK(grad_h_general(pop, -t.x0, -t.y0, 4.0).stacked().cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("analytic gradient matches finite differences") {
    Rng rng(4);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 10; ++k) {
        const CcaModel m = random_model(rng);
        Vector x(m.p()), y(m.q());
        for (Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
        for (Index i = 0; i < y.size(); ++i) y[i] = nd(rng);
        for (double c : {0.5, 1.0, 2.0, 4.0}) CHECK(gradient_fd_error(m.covariances(), x, y, c) < 1e-6);
    }
}

TEST_CASE("plug-in Hessian matches finite differences of the gradient") {
    Rng rng(5);
    std::normal_distribution<double> nd;
    const CcaModel m = random_model(rng);
    const CovarianceTriple pop = m.covariances();
    Vector x(m.p()), y(m.q());
    for (Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
    for (Index i = 0; i < y.size(); ++i) y[i] = nd(rng);
    const Matrix h = hessian_H(pop, x, y);
    const Index dim = m.p() + m.q();
    Matrix fd(dim, dim);
    const double eps = 1e-6;
    for (Index k = 0; k < dim; ++k) {
        Vector xu = x, xd = x, yu = y, yd = y;
        if (k < m.p()) {
            xu[k] += eps;
            xd[k] -= eps;
        } else {
            yu[k - m.p()] += eps;
            yd[k - m.p()] -= eps;
        }
        fd.col(k) = (grad_h(pop, xu, yu).stacked() - grad_h(pop, xd, yd).stacked()) / (2 * eps);
    }
    CHECK(max_abs(h - fd) < 1e-6 * std::max(1.0, max_abs(h)));
    CHECK(max_abs(h - h.transpose()) < 1e-12);
}

TEST_CASE("population Hessian at the truth") {
    Rng rng(6);
    for (int k = 0; k < 10; ++k) {
        const CcaModel m = random_model(rng);
        const ScaledTruth t = scaled_truth(m);
        CHECK(max_abs(hessian_H(m.covariances(), t.x0, t.y0) - oracle_H0(m)) < 1e-12);
    }
}

TEST_CASE("closed-form Phi0 inverts H0 and matches a dense inverse") {
    Rng rng(7);
    for (int k = 0; k < 20; ++k) {
        const CcaModel m = random_model(rng);
        const Matrix h0 = oracle_H0(m);
        const Matrix phi0 = oracle_Phi0(m);
        CHECK(max_abs(h0 * phi0 - Matrix::Identity(h0.rows(), h0.cols())) < 1e-9);
        CHECK(max_abs(phi0 - testutil::dense_inverse(h0)) < 1e-8 * std::max(1.0, max_abs(phi0)));
    }
}

TEST_CASE("perturbed O4 constant breaks the inverse identity") {
    Rng rng(8);
    const CcaModel m = random_model(rng);
    PhiConstants bad;
    bad.o4_lead = -5.0 / 7.0;
    const Matrix h0 = oracle_H0(m);
    CHECK(max_abs(h0 * oracle_Phi0(m, bad) - Matrix::Identity(h0.rows(), h0.cols())) > 1e-3);
    PhiConstants bad3;
    bad3.o3_lead = 1.0 / 7.0;
    CHECK(max_abs(h0 * oracle_Phi0(m, bad3) - Matrix::Identity(h0.rows(), h0.cols())) > 1e-3);
}

TEST_CASE("smallest Hessian eigenvalue respects the eigengap bound") {
    Rng rng(9);
    for (int k = 0; k < 30; ++k) {
        const CcaModel m = random_model(rng);
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Matrix>(oracle_H0(m), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        CHECK(lmin >= hessian_min_eig_bound(m) - 1e-8);
    }
}

TEST_CASE("numeric minimizers of the surrogate are the scaled directions") {
    Rng rng(10);
    RandomModelOptions opts;
    opts.max_p = 1;
    opts.max_q = 1;
    const CcaModel m = random_model(rng, opts);
    const ScaledTruth t = scaled_truth(m);
    Vector truth(2);
    truth << t.x0, t.y0;
    // coarse grid, then polish the best grid point
    const CovarianceTriple pop = m.covariances();
    for (double c : {1.0, 2.0, 4.0}) {
        double best = 1e300;
        Vector arg(2);
        for (double a = -3.0; a <= 3.0; a += 0.05) {
            for (double b = -3.0; b <= 3.0; b += 0.05) {
                Vector x(1), y(1);
                x << a;
                y << b;
                const double f = objective_h(pop, x, y, c);
                if (f < best) {
                    best = f;
                    arg << a, b;
                }
            }
        }
        const Vector z = minimize_h(pop, c, arg);
        CHECK(std::min((z - truth).norm(), (z + truth).norm()) < 1e-6);
    }
}

TEST_CASE("variance of a simple quadratic form") {
    // T = X1^2 with X1 ~ N(0, 1): var = 2
    Matrix sigma = Matrix::Identity(2, 2);
    Vector e1 = Vector::Zero(1);
    e1[0] = 1.0;
    Vector zero = Vector::Zero(1);
    CHECK(variance_quadratic(sigma, 1, e1, e1, zero, zero, zero, zero) == doctest::Approx(2.0));
    // T = X1 Y1 with corr r: var = 1 + r^2
    sigma(0, 1) = sigma(1, 0) = 0.3;
    CHECK(variance_quadratic(sigma, 1, zero, zero, -e1, zero, e1, zero) == doctest::Approx(1.09));
}

TEST_CASE("variance lemma closed form agrees with its composition") {
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        const CcaModel m = random_model(rng);
        for (Index i = 0; i < m.p(); ++i) {
            const double a = oracle_sigma_sq_gaussian(m, i);
            const double b = sigma_sq_via_variance_lemma(m, i);
            CHECK(a == doctest::Approx(b).epsilon(1e-8));
        }
        // the completion basis choice must not matter
        CHECK(oracle_sigma_sq_gaussian(m, 0, 1) == doctest::Approx(oracle_sigma_sq_gaussian(m, 0, 99)).epsilon(1e-10));
    }
}

TEST_CASE("variance lemma matches Monte Carlo") {
    Rng rng(13);
    const CcaModel m = random_model(rng);
    const MonteCarloVariance mc = monte_carlo_sigma_sq(m, 0, 200000, 77);
    CHECK(std::abs(mc.variance - oracle_sigma_sq_gaussian(m, 0)) < 4.0 * mc.std_error);
}

TEST_CASE("variance floor holds at strong signal on null coordinates") {
    const CcaModel m = testutil::identity_model(10, 10, 0.9);
    for (Index i = 2; i < 10; ++i) CHECK(4.0 * oracle_sigma_sq_gaussian(m, i) >= four_sigma_sq_floor(0.9) - 1e-12);
    CHECK(four_sigma_sq_floor(0.9) == doctest::Approx(0.19 / 0.9));
    CHECK(four_sigma_sq_floor(0.01) == doctest::Approx(20.58945));
}

TEST_CASE("oracle suite passes and detects a perturbed constant") {
    OracleSuiteOptions opts;
    opts.n_models = 10;
    opts.mc_models = 1;
    opts.mc_draws = 100000;
    for (const auto& c : run_oracle_suite(opts)) CHECK_MESSAGE(c.passed, c.name << ": " << c.worst);

    opts.constants.o4_lead = -5.0 / 7.0;
    opts.mc_models = 0;
    bool any_failed = false;
    for (const auto& c : run_oracle_suite(opts)) any_failed = any_failed || !c.passed;
    CHECK(any_failed);
}
