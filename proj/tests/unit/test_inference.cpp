#include <doctest.h>

#include <cmath>
#include <random>

#include "scca/debias.hpp"
#include "scca/errors.hpp"
#include "scca/inference.hpp"
#include "scca/model.hpp"
#include "test_helpers.hpp"

using namespace scca;

TEST_CASE("ordinary interval for a squared coordinate") {
    const Interval ci = ci_squared(0.5, 0.2, 400, 0.95, false);
    const double l = 4 * 1.959963984540054 * 0.5 * 0.2 / 20.0;
    CHECK(l == doctest::Approx(0.0391993).epsilon(1e-6));
    CHECK(ci.lower == doctest::Approx(0.25 - l).epsilon(1e-12));
    CHECK(ci.upper == doctest::Approx(0.25 + l).epsilon(1e-12));
    CHECK(ci.lower == doctest::Approx(0.21080).epsilon(1e-4));
    CHECK(ci.upper == doctest::Approx(0.28920).epsilon(1e-4));
}

TEST_CASE("conservative interval doubles the half length at x = 0.5") {
    const Interval o = ci_squared(0.5, 0.2, 400, 0.95, false);
    const Interval c = ci_squared(0.5, 0.2, 400, 0.95, true);
    CHECK(c.upper - 0.25 == doctest::Approx(0.0783986).epsilon(1e-6));
    CHECK(c.upper - 0.25 == doctest::Approx(2 * (o.upper - 0.25)));
}

TEST_CASE("zero estimate gives a zero-length ordinary interval") {
    const Interval ci = ci_squared(0.0, 0.3, 100);
    CHECK(ci.lower == 0.0);
    CHECK(ci.upper == 0.0);
    CHECK_THROWS_AS(ci_squared(0.1, 0.3, 100, 1.0), ValidationError);
    CHECK_THROWS_AS(ci_squared(0.1, 0.3, 100, 0.0), ValidationError);
}

TEST_CASE("interval containment properties") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int k = 0; k < 200; ++k) {
        const double x = u(rng);
        const double s = std::abs(u(rng));
        const Interval o = ci_squared(x, s, 250);
        const Interval c = ci_squared(x, s, 250, 0.95, true);
        CHECK(o.lower >= 0.0);
        CHECK(c.lower >= 0.0);
        if (std::abs(x) <= 1.0) {
            CHECK(c.lower <= o.lower);
            CHECK(c.upper >= o.upper);
        }
    }
    const Interval o1 = ci_squared(1.0, 0.4, 50);
    const Interval c1 = ci_squared(1.0, 0.4, 50, 0.95, true);
    CHECK(o1.lower == c1.lower);
    CHECK(o1.upper == c1.upper);
}

TEST_CASE("chi-square test of a zero coordinate") {
    CHECK(test_zero(0.0, 0.5, 100) == 1.0);
    // T = 3.841459 is the 0.95 quantile of chi-square(1)
    const double sigma = 0.5;
    const double x = std::sqrt(3.841458820694124 * 4 * sigma * sigma / 100.0);
    CHECK(test_zero(x, sigma, 100) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(test_zero(-x, sigma, 100) == test_zero(x, sigma, 100));
    CHECK_THROWS_AS(test_zero(0.1, 0.0, 100), ValidationError);
}

TEST_CASE("cross-term interval") {
    const CrossTermInterval a = cross_term_ci(0.4, 0.3, 0.5, 0.6, 0.1, 200);
    const CrossTermInterval b = cross_term_ci(0.3, 0.4, 0.6, 0.5, 0.1, 200);
    CHECK(a.ci.lower == b.ci.lower);
    CHECK(a.ci.upper == b.ci.upper);
    CHECK(a.estimate == doctest::Approx(0.12));
    const double var = 4 * (0.16 * 0.36 + 0.09 * 0.25 + 2 * 0.12 * 0.1);
    CHECK(a.variance == doctest::Approx(var));
    CHECK(a.ci.upper - a.estimate == doctest::Approx(1.959963984540054 * std::sqrt(var / 200)));
    CHECK_FALSE(a.null_regime);

    const CrossTermInterval z = cross_term_ci(0.0, 0.0, 0.5, 0.5, 0.1, 200);
    CHECK(z.null_regime);
    CHECK(z.ci.length() == 0.0);

    const CrossTermInterval neg = cross_term_ci(0.5, 0.5, 0.1, 0.1, -1.0, 200);
    CHECK(neg.variance_clamped);
    CHECK(neg.variance == 0.0);
}

TEST_CASE("cross-term interval covers the product under the Gaussian oracle") {
    const CcaModel m = testutil::identity_model(6, 6, 0.8);
    const ScaledTruth t = scaled_truth(m);
    const Matrix phi0 = oracle_Phi0(m);
    const double target = t.x0[0] * t.x0[1];
    int covered = 0;
    const int reps = 200;
    const Index n = 2000;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng = replication_stream(55, static_cast<std::uint64_t>(rep));
        const Dataset d = sample_gaussian(m, n, rng);
        const CovarianceTriple c = empirical_covariances(d.x, d.y);
        const DebiasedPair db = debias_directions(t.x0, t.y0, phi0, c);
        const Matrix z = pseudo_observations(d, phi0.leftCols(2), t.x0, t.y0, 0.8, c);
        const Vector var = column_variances(z);
        const double cov01 = ((z.col(0).array() - z.col(0).mean()) * (z.col(1).array() - z.col(1).mean())).mean();
        const CrossTermInterval ci =
            cross_term_ci(db.x_db[0], db.x_db[1], std::sqrt(var[0]), std::sqrt(var[1]), cov01, n);
        covered += ci.ci.contains(target) ? 1 : 0;
    }
    const double rate = static_cast<double>(covered) / reps;
    CHECK(rate >= 0.90);
    CHECK(rate <= 0.99);
}

TEST_CASE("Benjamini-Hochberg step-up") {
    Vector p(4);
    p << 0.01, 0.04, 0.03, 0.2;
    const FdrResult r = fdr_adjust(p, FdrMethod::BH, 0.05);
    CHECK(r.adjusted[0] == doctest::Approx(0.04));
    CHECK(r.adjusted[1] == doctest::Approx(0.0533333333));
    CHECK(r.adjusted[2] == doctest::Approx(0.0533333333));
    CHECK(r.adjusted[3] == doctest::Approx(0.2));
    REQUIRE(r.discoveries.size() == 1);
    CHECK(r.discoveries[0] == 0);
}

TEST_CASE("FDR edge cases") {
    const FdrResult ones = fdr_adjust(Vector::Ones(5), FdrMethod::BH);
    CHECK(ones.adjusted.minCoeff() == 1.0);
    CHECK(ones.discoveries.empty());
    Vector single(1);
    single << 0.03;
    CHECK(fdr_adjust(single, FdrMethod::BH).adjusted[0] == 0.03);
    CHECK(fdr_adjust(single, FdrMethod::BY).adjusted[0] == 0.03);
    Vector bad(1);
    bad << 1.5;
    CHECK_THROWS_AS(fdr_adjust(bad, FdrMethod::BH), ValidationError);
}

TEST_CASE("BY applies the harmonic factor") {
    Vector p(3);
    p << 0.01, 0.02, 0.5;
    const double h = 1.0 + 0.5 + 1.0 / 3.0;
    const FdrResult bh = fdr_adjust(p, FdrMethod::BH);
    const FdrResult by = fdr_adjust(p, FdrMethod::BY);
    CHECK(by.adjusted[0] == doctest::Approx(std::min(1.0, bh.adjusted[0] * h)));
    CHECK(by.adjusted[2] == doctest::Approx(0.5 * h));
}

TEST_CASE("FDR properties on random p-values") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vector p(30);
        for (Index i = 0; i < 30; ++i) p[i] = std::pow(u(rng), 3);
        const FdrResult bh = fdr_adjust(p, FdrMethod::BH, 0.1);
        const FdrResult by = fdr_adjust(p, FdrMethod::BY, 0.1);
        for (Index i = 0; i < 30; ++i) {
            CHECK(bh.adjusted[i] >= p[i] * (1 - 1e-15));
            CHECK(by.adjusted[i] >= bh.adjusted[i]);
            for (Index j = 0; j < 30; ++j)
                if (p[i] < p[j]) CHECK(bh.adjusted[i] <= bh.adjusted[j]);
        }
        for (Index d : by.discoveries) {
            CHECK(std::find(bh.discoveries.begin(), bh.discoveries.end(), d) != bh.discoveries.end());
        }
    }
}

TEST_CASE("block-wise FDR keeps the families separate") {
    Vector p(4);
    p << 0.01, 0.5, 0.02, 0.03;
    const FdrResult r = fdr_adjust_blocks(p, 2, FdrMethod::BH, 0.05);
    CHECK(r.adjusted[0] == doctest::Approx(0.02));
    CHECK(r.adjusted[2] == doctest::Approx(0.03));
    CHECK(r.adjusted[3] == doctest::Approx(0.03));
    CHECK(r.discoveries == std::vector<Index>{0, 2, 3});
}

TEST_CASE("rho squared interval stays in the unit interval") {
    const Interval a = rho_sq_ci(0.98, 0.5, 100);
    CHECK(a.upper == 1.0);
    const Interval b = rho_sq_ci(0.01, 0.5, 100);
    CHECK(b.lower == 0.0);
    const Interval c = rho_sq_ci(0.5, 0.25, 100);
    CHECK(c.upper - 0.5 == doctest::Approx(1.959963984540054 * 0.05));
}

TEST_CASE("inference report assembles every coordinate") {
    DebiasResult db;
    db.x_db = Vector::Zero(3);
    db.x_db << 0.6, 0.0, 0.05;
    db.y_db = Vector::Zero(2);
    db.y_db << 0.7, 0.01;
    db.sigma_hat = Vector::Constant(5, 0.3);
    db.sigma_hat[1] = 0.0;
    db.rho_sq_db = 0.4;
    db.sigma_rho_sq_pseudo = 0.2;
    const InferenceReport rep = build_inference(db, 500);
    REQUIRE(rep.coords.size() == 5);
    CHECK_FALSE(rep.coords[1].test_defined);
    CHECK(rep.coords[1].p_value == 1.0);
    CHECK(rep.coords[0].p_value < 1e-10);
    CHECK(rep.coords[3].estimate == doctest::Approx(0.49));
    CHECK(rep.bh.discoveries == std::vector<Index>{0, 3});
    CHECK(rep.rho.ci.contains(0.4));
    InferenceConfig bad;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(build_inference(db, 500, bad), ValidationError);
}
