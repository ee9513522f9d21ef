#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scca/colar.hpp"
#include "scca/datagen.hpp"
#include "scca/inference.hpp"
#include "scca/json_io.hpp"
#include "scca/nodewise.hpp"

namespace scca {

struct ExperimentSpec {
    std::string setting_id = "default";
    SimSetting setting;
    ColarConfig colar;
    NodewiseConfig nodewise;
    std::vector<Index> coords{1, 20};  // 1-based coordinates of x0
    double level = 0.95;
    double alpha = 0.05;  // test level for rejection frequencies
    int threads = 1;
    double max_failure_fraction = 0.2;

    void validate() const;
};

struct CoordOutcome {
    Index coord = 0;  // 1-based
    double x_true = 0.0;
    double x_colar = 0.0;
    double x_db = 0.0;
    double sigma = 0.0;
    double p_value = 1.0;
    Interval ordinary;
    Interval conservative;
    bool covered_ordinary = false;
    bool covered_conservative = false;
    bool rejected = false;
};

struct ReplicationRecord {
    int rep = 0;
    bool failed = false;
    std::string failure;
    double rho_hat = 0.0;  // preliminary estimate
    double rho_sq_db = 0.0;
    Interval rho_ci;
    bool rho_covered = false;
    double kkt_max = 0.0;
    int admm_iterations = 0;
    std::vector<CoordOutcome> coords;
};

/// Pipeline state shared across replications of one experiment.
struct ExperimentContext {
    Truth truth;
    GaussianSampler sampler;
    explicit ExperimentContext(const SimSetting& setting);
};

ReplicationRecord run_replication(const ExperimentSpec& spec, int rep);
ReplicationRecord run_replication(const ExperimentSpec& spec, const ExperimentContext& ctx, int rep);

struct CoordAggregate {
    Index coord = 0;
    double x_true = 0.0;
    double coverage_ordinary = 0.0;
    double coverage_conservative = 0.0;
    double mean_length_ordinary = 0.0;
    double mean_length_conservative = 0.0;
    double rejection_frequency = 0.0;
    double bias_colar = 0.0;  // mean(|x_hat|) - |x0|
    double sd_colar = 0.0;
    double bias_db = 0.0;
    double sd_db = 0.0;
};

struct RhoAggregate {
    double mean_rho_sq_db = 0.0;
    double sd_rho_sq_db = 0.0;
    double coverage = 0.0;
    double mean_rho_hat = 0.0;
};

struct AggregateResult {
    ExperimentSpec spec;
    int n_reps = 0;
    int n_failed = 0;
    std::vector<CoordAggregate> coords;
    RhoAggregate rho;
    std::vector<ReplicationRecord> records;  // rep-index order
};

/// Folds records in the given order; failed ones only count towards n_failed.
AggregateResult aggregate(const ExperimentSpec& spec, std::vector<ReplicationRecord> records);

/// Runs all replications on `spec.threads` workers. Throws DegenerateRunError
/// when more than max_failure_fraction of them fail.
AggregateResult run_experiment(const ExperimentSpec& spec);

/// Long-format metric rows: (coord, metric, value); coord 0 holds rho and
/// run-level metrics.
struct MetricRow {
    Index coord = 0;
    std::string metric;
    double value = 0.0;
};
std::vector<MetricRow> metric_rows(const AggregateResult& result);

inline constexpr const char* kCsvHeader = "setting_id,rho0,cov_kind,p,q,n,coord,metric,value";
inline constexpr const char* kRepCsvHeader = "setting_id,rep,coord,metric,value";

std::string report_csv(const AggregateResult& result);
std::string replications_csv(const AggregateResult& result);
Json report_json(const AggregateResult& result);

/// Inverse of report_json.
AggregateResult import_report_json(const Json& doc);

Json colar_config_to_json(const ColarConfig& cfg);
ColarConfig colar_config_from_json(const Json& doc);
Json nodewise_config_to_json(const NodewiseConfig& cfg);
NodewiseConfig nodewise_config_from_json(const Json& doc);

Json spec_to_json(const ExperimentSpec& spec);
/// Reads an experiment block (the shape written by spec_to_json). Without
/// "coords" the coordinates default to {1, min(20, p)}.
ExperimentSpec spec_from_json(const Json& doc);

enum class ReportFormat { Csv, Json };

/// Writes report.csv + replications.csv, or report.json, into `dir`.
void export_report(const AggregateResult& result, ReportFormat format, const std::string& dir);

}  // namespace scca
