#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scca/colar.hpp"
#include "scca/debias.hpp"
#include "scca/inference.hpp"
#include "scca/json_io.hpp"
#include "scca/nodewise.hpp"

namespace scca {

/// One data block read from CSV: rows are observations.
struct LabeledBlock {
    Matrix values;
    std::vector<std::string> names;
};

/// Parses comma-separated numeric text. Without a header the columns are
/// named prefix1, prefix2, ... `origin` labels error messages.
LabeledBlock parse_csv_block(const std::string& text, bool header, const std::string& prefix,
                             const std::string& origin = "<csv>");
LabeledBlock read_csv_block(const std::string& path, bool header, const std::string& prefix);

/// Centers each column and scales it to unit population (1/n) variance.
/// Throws ValidationError naming the 1-based column when it is constant.
Matrix standardize_columns(const Matrix& m, const std::string& label = "X");

struct FitConfig {
    ColarConfig colar;
    NodewiseConfig nodewise;
    InferenceConfig inference;
    bool standardize = true;
    bool conservative = false;  // interval used for the excludes-zero flag

    void validate() const;
};

struct PipelineFit {
    ColarFit colar;
    std::optional<PrecisionEstimate> precision;  // empty for a no-signal fit
    std::optional<DebiasResult> debias;
    std::optional<InferenceReport> inference;

    bool no_signal() const { return !precision; }
};

/// COLAR, nodewise inverse of the plug-in Hessian, one-step correction and
/// inference on data used as given (no standardization).
PipelineFit run_pipeline(const Dataset& data, const FitConfig& config = {});

/// Standardizes (if configured) and runs the pipeline on labeled blocks.
PipelineFit fit_blocks(const LabeledBlock& x, const LabeledBlock& y, const FitConfig& config = {});

FitConfig fit_config_from_json(const Json& doc);

/// fit.json document: estimates, diagnostics and the inference section.
Json fit_to_json(const PipelineFit& fit, const std::vector<std::string>& x_names,
                 const std::vector<std::string>& y_names, const FitConfig& config);

/// Inference section: per-coordinate records plus BH and BY discovery lists.
Json inference_to_json(const InferenceReport& report, const std::vector<std::string>& x_names,
                       const std::vector<std::string>& y_names, bool conservative);

/// Rebuilds the de-biased quantities stored in a fit.json document and
/// recomputes inference at a new level / alpha.
InferenceReport reinfer_from_fit_json(const Json& fit_doc, const InferenceConfig& config);

}  // namespace scca
