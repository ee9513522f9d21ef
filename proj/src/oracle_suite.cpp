#include "scca/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "scca/datagen.hpp"
#include "scca/debias.hpp"
#include "scca/errors.hpp"

namespace scca {

namespace {

double h_at(const CovarianceTriple& cov, const Vector& z, double c) {
    const Index p = cov.p();
    return objective_h(cov, z.head(p), z.tail(cov.q()), c);
}

Vector grad_at(const CovarianceTriple& cov, const Vector& z, double c) {
    const Index p = cov.p();
    return grad_h_general(cov, z.head(p), z.tail(cov.q()), c).stacked();
}

}  // namespace

Vector minimize_h(const CovarianceTriple& cov, double c, const Vector& start) {
    const Index m = cov.p() + cov.q();
    require(start.size() == m, "minimize_h: start has the wrong length");
    Vector z = start;
    double f = h_at(cov, z, c);
    for (int it = 0; it < 20000; ++it) {
        const Vector g = grad_at(cov, z, c);
        if (g.norm() < 1e-7) break;
        double step = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            const Vector trial = z - step * g;
            const double ft = h_at(cov, trial, c);
            if (ft <= f - 1e-4 * step * g.squaredNorm()) {
                z = trial;
                f = ft;
                break;
            }
            step *= 0.5;
        }
    }
    const double eps = 1e-6;
    for (int it = 0; it < 50; ++it) {
        const Vector g = grad_at(cov, z, c);
        if (g.norm() < 1e-13) break;
        Matrix hess(m, m);
        for (Index k = 0; k < m; ++k) {
            Vector up = z;
            Vector dn = z;
            up[k] += eps;
            dn[k] -= eps;
            hess.col(k) = (grad_at(cov, up, c) - grad_at(cov, dn, c)) / (2.0 * eps);
        }
        hess = 0.5 * (hess + hess.transpose()).eval();
        const Vector delta = hess.ldlt().solve(g);
        if (!delta.allFinite()) break;
        const Vector trial = z - delta;
        if (h_at(cov, trial, c) > f + 1e-12) break;
        z = trial;
        f = h_at(cov, z, c);
    }
    return z;
}

double gradient_fd_error(const CovarianceTriple& cov, const Vector& x, const Vector& y, double c) {
    const Index p = cov.p();
    const Index m = p + cov.q();
    Vector z(m);
    z << x, y;
    const Vector g = grad_at(cov, z, c);
    Vector fd(m);
    for (Index k = 0; k < m; ++k) {
        const double step = 1e-5 * std::max(1.0, std::abs(z[k]));
        Vector up = z;
        Vector dn = z;
        up[k] += step;
        dn[k] -= step;
        fd[k] = (h_at(cov, up, c) - h_at(cov, dn, c)) / (2.0 * step);
    }
    return (g - fd).norm() / std::max(g.norm(), 1e-12);
}

MonteCarloVariance monte_carlo_sigma_sq(const CcaModel& model, Index i, int draws, std::uint64_t seed) {
    require(draws >= 2, "monte_carlo_sigma_sq: need at least two draws");
    const ScaledTruth truth = scaled_truth(model);
    const Matrix phi0 = oracle_Phi0(model);
    const CovarianceTriple pop = model.covariances();
    const GaussianSampler sampler(model);
    Rng rng(seed);

    // batches keep memory bounded for a million draws
    const int batch = 100000;
    double sum = 0.0;
    double sum2 = 0.0;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(draws));
    for (int done = 0; done < draws; done += batch) {
        const int size = std::min(batch, draws - done);
        const Dataset d = sampler.draw(size, rng);
        const Vector z = pseudo_observations(d, phi0.col(i), truth.x0, truth.y0, model.rho0(), pop, false).col(0);
        for (Index k = 0; k < z.size(); ++k) {
            values.push_back(z[k]);
            sum += z[k];
        }
    }
    const double n = static_cast<double>(values.size());
    const double mean = sum / n;
    double m4 = 0.0;
    for (double v : values) {
        const double d2 = (v - mean) * (v - mean);
        sum2 += d2;
        m4 += d2 * d2;
    }
    MonteCarloVariance out;
    out.variance = sum2 / n;
    m4 /= n;
    out.std_error = std::sqrt(std::max(0.0, m4 - out.variance * out.variance) / n);
    return out;
}

std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& options) {
    require(options.n_models >= 1 && options.mc_models >= 0, "oracle suite: model counts must be positive");
    std::vector<OracleCheck> checks;
    Rng rng(options.seed);

    std::vector<CcaModel> models;
    for (int k = 0; k < options.n_models; ++k) models.push_back(random_model(rng));

    {
        OracleCheck c{"phi0_inverts_h0", true, 0.0, 1e-8, ""};
        for (const auto& m : models) {
            const Matrix prod = oracle_H0(m) * oracle_Phi0(m, options.constants);
            const double err = (prod - Matrix::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff();
            c.worst = std::max(c.worst, err);
        }
        c.passed = c.worst < c.tolerance;
        c.detail = std::to_string(models.size()) + " models, max |H0 Phi0 - I|";
        checks.push_back(c);
    }
    {
        OracleCheck c{"hessian_eigen_bound", true, std::numeric_limits<double>::infinity(), 1e-8, ""};
        for (const auto& m : models) {
            const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(oracle_H0(m), Eigen::EigenvaluesOnly)
                                    .eigenvalues()
                                    .minCoeff();
            c.worst = std::min(c.worst, lmin - hessian_min_eig_bound(m));
        }
        c.passed = c.worst >= -c.tolerance;
        c.detail = "min over models of lambda_min(H0) - bound";
        checks.push_back(c);
    }
    {
        OracleCheck argmin{"surrogate_argmin", true, 0.0, 1e-4, ""};
        OracleCheck grad{"gradient_finite_difference", true, 0.0, 1e-6, ""};
        std::normal_distribution<double> normal;
        for (Index dim : {Index{1}, Index{2}}) {
            RandomModelOptions opts;
            opts.min_dim = dim;
            opts.max_p = dim;
            opts.max_q = dim;
            for (int rep = 0; rep < 5; ++rep) {
                const CcaModel m = random_model(rng, opts);
                const CovarianceTriple pop = m.covariances();
                const ScaledTruth t = scaled_truth(m);
                Vector truth(2 * dim);
                truth << t.x0, t.y0;
                for (double cc : {1.0, 2.0, 4.0}) {
                    Vector best;
                    double best_f = std::numeric_limits<double>::infinity();
                    for (int s = 0; s < 12; ++s) {
                        Vector start(2 * dim);
                        for (Index k = 0; k < start.size(); ++k) start[k] = 1.5 * normal(rng);
                        const Vector z = minimize_h(pop, cc, start);
                        const double f = h_at(pop, z, cc);
                        if (f < best_f) {
                            best_f = f;
                            best = z;
                        }
                    }
                    const double err = std::min((best - truth).cwiseAbs().maxCoeff(), (best + truth).cwiseAbs().maxCoeff());
                    argmin.worst = std::max(argmin.worst, err);

                    Vector x(dim), y(dim);
                    for (Index k = 0; k < dim; ++k) {
                        x[k] = normal(rng);
                        y[k] = normal(rng);
                    }
                    grad.worst = std::max(grad.worst, gradient_fd_error(pop, x, y, cc));
                }
            }
        }
        argmin.passed = argmin.worst < argmin.tolerance;
        argmin.detail = "p = q in {1, 2}, C in {1, 2, 4}: max distance of the numeric argmin to +-(x0, y0)";
        grad.passed = grad.worst < grad.tolerance;
        grad.detail = "relative error of the analytic gradient against central differences";
        checks.push_back(argmin);
        checks.push_back(grad);
    }
    {
        OracleCheck c{"variance_lemma_closed_form", true, 0.0, 1e-8, ""};
        for (const auto& m : models) {
            for (Index i = 0; i < m.p(); ++i) {
                const double a = oracle_sigma_sq_gaussian(m, i);
                const double b = sigma_sq_via_variance_lemma(m, i);
                c.worst = std::max(c.worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
            }
        }
        c.passed = c.worst < c.tolerance;
        c.detail = "closed form vs variance-lemma composition, all X coordinates";
        checks.push_back(c);
    }
    if (options.mc_models > 0) {
        OracleCheck c{"variance_lemma_monte_carlo", true, 0.0, 3.0, ""};
        std::ostringstream detail;
        detail << options.mc_draws << " draws per model, |closed - empirical| / SE:";
        for (int k = 0; k < options.mc_models; ++k) {
            const CcaModel& m = models[static_cast<std::size_t>(k) % models.size()];
            const double closed = oracle_sigma_sq_gaussian(m, 0);
            const MonteCarloVariance mc = monte_carlo_sigma_sq(m, 0, options.mc_draws, options.seed + 101 + k);
            const double z = std::abs(closed - mc.variance) / mc.std_error;
            c.worst = std::max(c.worst, z);
            detail << ' ' << z;
        }
        c.passed = c.worst <= c.tolerance;
        c.detail = detail.str();
        checks.push_back(c);
    }
    return checks;
}

}  // namespace scca
