#include "scca/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "scca/errors.hpp"

namespace scca {

std::string to_string(CovKind kind) {
    return kind == CovKind::Identity ? "identity" : "sparse_inverse";
}

CovKind cov_kind_from_string(const std::string& name) {
    if (name == "identity") return CovKind::Identity;
    if (name == "sparse_inverse") return CovKind::SparseInverse;
    throw ValidationError("unknown covariance kind '" + name + "'");
}

void SimSetting::validate() const {
    require(rho0 > 0.0 && rho0 < 1.0, "setting: rho0 must lie in (0, 1)");
    require(p >= 2 && q >= 2, "setting: p and q must be at least 2");
    require(n >= 4, "setting: n must be at least 4");
    require(n_reps >= 1, "setting: n_reps must be positive");
}

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace

Rng replication_stream(std::uint64_t master_seed, std::uint64_t rep) {
    std::uint64_t state = master_seed;
    const std::uint64_t a = splitmix64(state);
    state = a ^ (rep * 0xD1B54A32D192ED03ULL);
    std::seed_seq seq{splitmix64(state), splitmix64(state), splitmix64(state), splitmix64(state)};
    return Rng(seq);
}

Matrix sparse_inverse_sigma(Index p) {
    require(p >= 1, "sparse_inverse_sigma: p must be positive");
    Matrix omega = Matrix::Identity(p, p);
    for (Index i = 0; i < p; ++i) {
        if (i + 1 < p) omega(i, i + 1) = omega(i + 1, i) = 0.5;
        if (i + 2 < p) omega(i, i + 2) = omega(i + 2, i) = 0.4;
    }
    Eigen::LDLT<Matrix> ldlt(omega);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().cwiseAbs().minCoeff() > 1e-12))
        throw NumericalError("sparse_inverse_sigma: banded precision matrix is singular");
    Matrix sigma = ldlt.solve(Matrix::Identity(p, p));
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    const Vector scale = sigma.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = scale.asDiagonal() * sigma * scale.asDiagonal();
    corr.diagonal().setOnes();
    return corr;
}

Truth make_truth(const SimSetting& setting) {
    require(setting.p >= 2 && setting.q >= 2, "make_truth: p and q must be at least 2");
    const Matrix sx = setting.cov_kind == CovKind::Identity ? Matrix::Identity(setting.p, setting.p)
                                                            : sparse_inverse_sigma(setting.p);
    const Matrix sy = setting.cov_kind == CovKind::Identity ? Matrix::Identity(setting.q, setting.q)
                                                            : sparse_inverse_sigma(setting.q);
    Matrix a_star = Matrix::Zero(setting.p, 1);
    Matrix b_star = Matrix::Zero(setting.q, 1);
    a_star.topRows(2).setOnes();
    b_star.topRows(2).setOnes();
    Vector lambda(1);
    lambda << setting.rho0;

    Truth t{build_model(sx, sy, a_star, b_star, lambda), {}};
    t.scaled = scaled_truth(t.model);
    return t;
}

GaussianSampler::GaussianSampler(const Matrix& joint_covariance, Index p) : p_(p) {
    require(joint_covariance.rows() == joint_covariance.cols(), "GaussianSampler: covariance must be square");
    require(p > 0 && p < joint_covariance.rows(), "GaussianSampler: bad block split");
    Eigen::LLT<Matrix> llt(joint_covariance);
    if (llt.info() != Eigen::Success)
        throw NumericalError("sample_gaussian: joint covariance is not positive definite");
    lower_ = llt.matrixL();
}

GaussianSampler::GaussianSampler(const CcaModel& model) : GaussianSampler(model.joint_covariance(), model.p()) {}

Dataset GaussianSampler::draw(Index n, Rng& rng) const {
    require(n >= 1, "sample_gaussian: n must be positive");
    const Index m = lower_.rows();
    std::normal_distribution<double> normal;
    Matrix z(n, m);
    // row-major fill so the stream order is observation by observation
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) z(i, j) = normal(rng);
    const Matrix w = z * lower_.transpose();
    return Dataset{w.leftCols(p_), w.rightCols(m - p_)};
}

Dataset sample_gaussian(const CcaModel& model, Index n, Rng& rng) {
    return GaussianSampler(model).draw(n, rng);
}

Matrix random_spd(Index m, Rng& rng, double shift) {
    require(m >= 1 && shift > 0.0, "random_spd: need m >= 1 and a positive shift");
    std::normal_distribution<double> normal;
    Matrix w(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) w(i, j) = normal(rng);
    Matrix a = w * w.transpose() / static_cast<double>(m);
    a.diagonal().array() += shift;
    return 0.5 * (a + a.transpose());
}

CcaModel random_model(Rng& rng, const RandomModelOptions& options) {
    require(options.min_dim >= 1 && options.min_dim <= std::min(options.max_p, options.max_q),
            "random_model: bad dimension range");
    require(options.max_rank >= 1, "random_model: max_rank must be positive");
    require(options.min_gap > 0.0 && options.min_gap < 0.9, "random_model: min_gap must lie in (0, 0.9)");
    std::uniform_int_distribution<Index> pick_p(options.min_dim, options.max_p);
    std::uniform_int_distribution<Index> pick_q(options.min_dim, options.max_q);
    const Index p = pick_p(rng);
    const Index q = pick_q(rng);
    std::uniform_int_distribution<Index> pick_r(1, std::min({p, q, options.max_rank}));
    const Index r = pick_r(rng);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector lambda(r);
    lambda[0] = options.min_gap + 0.05 + (0.95 - options.min_gap - 0.05) * unif(rng);
    double upper = lambda[0] - options.min_gap;
    for (Index k = 1; k < r; ++k) {
        // strictly decreasing, kept away from zero and from the previous value
        lambda[k] = upper * (0.2 + 0.7 * unif(rng));
        upper = lambda[k] * 0.95;
    }

    std::normal_distribution<double> normal;
    Matrix u(p, r);
    Matrix v(q, r);
    for (Index i = 0; i < p; ++i)
        for (Index k = 0; k < r; ++k) u(i, k) = normal(rng);
    for (Index i = 0; i < q; ++i)
        for (Index k = 0; k < r; ++k) v(i, k) = normal(rng);
    const Matrix sx = random_spd(p, rng);
    const Matrix sy = random_spd(q, rng);
    return build_model(sx, sy, u, v, lambda);
}

}  // namespace scca
