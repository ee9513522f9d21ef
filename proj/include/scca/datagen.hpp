#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "scca/model.hpp"

namespace scca {

enum class CovKind { Identity, SparseInverse };

std::string to_string(CovKind kind);
CovKind cov_kind_from_string(const std::string& name);

/// Paired sample, rows are observations.
struct Dataset {
    Matrix x;  // n x p
    Matrix y;  // n x q

    Index n() const { return x.rows(); }
};

struct SimSetting {
    CovKind cov_kind = CovKind::Identity;
    double rho0 = 0.9;
    Index p = 80;
    Index q = 80;
    Index n = 500;
    std::uint64_t seed = 1;
    int n_reps = 200;

    void validate() const;
};

using Rng = std::mt19937_64;

/// Independent stream for replication `rep` of an experiment seeded with
/// `master_seed`; identical no matter which thread draws it.
Rng replication_stream(std::uint64_t master_seed, std::uint64_t rep);

/// Correlation matrix of Omega^{-1}, Omega banded with 0.5 on the first and
/// 0.4 on the second off-diagonal.
Matrix sparse_inverse_sigma(Index p);

struct Truth {
    CcaModel model;
    ScaledTruth scaled;
};

/// Rank-one truth with alpha* = beta* = (1, 1, 0, ..., 0).
Truth make_truth(const SimSetting& setting);

/// Draws rows of N(0, joint) through a Cholesky factor computed once.
class GaussianSampler {
public:
    GaussianSampler(const Matrix& joint_covariance, Index p);
    explicit GaussianSampler(const CcaModel& model);

    Dataset draw(Index n, Rng& rng) const;

private:
    Matrix lower_;
    Index p_;
};

Dataset sample_gaussian(const CcaModel& model, Index n, Rng& rng);

/// Random symmetric positive definite matrix W W'/m + shift I.
Matrix random_spd(Index m, Rng& rng, double shift = 0.5);

struct RandomModelOptions {
    Index min_dim = 1;
    Index max_p = 10;
    Index max_q = 10;
    Index max_rank = 3;
    double min_gap = 0.1;  // rho0 - lambda_2
};

/// Random CCA model with SPD covariances, random directions and canonical
/// correlations separated by at least min_gap at the top.
CcaModel random_model(Rng& rng, const RandomModelOptions& options = {});

}  // namespace scca
