#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bmlr/estimators.hpp"
#include "bmlr/model.hpp"

namespace bmlr {

/// Ground-truth generation controls. Defaults reproduce the standard setup:
/// A* uniform [0,1) rows normalized to sum 1, B* uniform [0,1).
struct ParamGenOptions {
    double a_entry_low = 0.0;   // pre-normalization uniform range for A*
    double a_entry_high = 1.0;
    int a_row_nonzeros = 0;     // > 0: sparse A* rows with that many equal weights
    double b_entry_low = 0.0;   // uniform range for B*
    double b_entry_high = 1.0;
    double b_sparse_magnitude = 0.0;  // > 0: sparse B* with +-magnitude entries
    double b_sparse_density = 0.5;
};

struct TrialConfig {
    int n = 15, m = 13, p = 14, q = 12;
    long T = 1000;
    double sigma_r = 1.0, sigma_c = 1.0;
    DesignKind design = DesignKind::UniformIID;
    bool sparse = false;  // also run thresholded estimators and record support metrics
    double delta = 0.1;   // confidence level for the sparse thresholds
    ParamGenOptions gen;

    double sigma() const { return sigma_r * sigma_c; }
};

/// One Monte Carlo trial. In sparse mode the error columns measure the
/// thresholded estimators; otherwise the dense ones.
struct ErrorRecord {
    std::string param_name = "none";
    double param_value = 0.0;
    int trial = 0;
    uint64_t seed = 0;
    double errA_frob_sq = 0.0, errB_frob_sq = 0.0;
    double errA_op = 0.0, errB_op = 0.0;
    double errA_max = 0.0, errB_max = 0.0;
    int clip_count = 0;
    std::string status = "ok";

    bool sparse = false;
    long b_support_true = 0, b_support_est = 0;
    long a_support_true = 0, a_support_est = 0;
    bool b_support_match = false, a_support_match = false;

    bool ok() const { return status == "ok"; }
};

/// Ground truth drawn per the config's generation options.
ModelParameters make_parameters(const TrialConfig& cfg, uint64_t seed);

/// Generate parameters and data, fit every estimator, record error norms.
/// Module errors are captured in the status field, never thrown.
ErrorRecord run_trial(const TrialConfig& cfg, uint64_t seed);

/// Same but with the ground truth held fixed by the caller.
ErrorRecord run_trial_with_params(const TrialConfig& cfg, const ModelParameters& params,
                                  uint64_t seed);

struct SweepSpec {
    TrialConfig base;
    std::string param_name;  // n | m | p | q | T | sigma
    std::vector<double> values;
    int trials_per_point = 100;
    uint64_t master_seed = 0;
    int jobs = 0;  // 0 = hardware concurrency
};

/// One record per (value, trial), ordered by (point index, trial index);
/// trial seeds are derive_seed(master, point index, trial index).
std::vector<ErrorRecord> run_sweep(const SweepSpec& spec);

/// Mean / population standard deviation over successful trials, grouped per
/// swept value. All-failed groups carry NaN stats and the failure count.
struct SummaryRow {
    std::string param_name;
    double param_value = 0.0;
    long count = 0;     // successful trials
    long failures = 0;
    double mean_errA_frob_sq = 0.0, std_errA_frob_sq = 0.0;
    double mean_errB_frob_sq = 0.0, std_errB_frob_sq = 0.0;
    double mean_errA_op = 0.0, std_errA_op = 0.0;
    double mean_errB_op = 0.0, std_errB_op = 0.0;
    double mean_errA_max = 0.0, std_errA_max = 0.0;
    double mean_errB_max = 0.0, std_errB_max = 0.0;
};

std::vector<SummaryRow> aggregate_errors(const std::vector<ErrorRecord>& records);

/// Empirical check of one probability bound at one parameter point.
struct CoverageReport {
    std::string bound;
    std::string params;       // compact "n=..;m=..;..." snapshot
    double budget = 0.0;      // nominal failure budget (delta, 2*delta, or bound RHS)
    double empirical = 0.0;   // observed failure frequency
    long trials = 0;
    double slack = 0.0;       // 2*sqrt(budget*(1-budget)/trials)
    bool pass = false;        // empirical <= budget + slack
};

/// Bounds: B_max | B_op | B_frob | A_max | B_sparse_frob | B_sparse_support |
/// A_sparse_frob | A_sparse_support | gauss_max_tail. Regression bounds run
/// under an OrthogonalScaled design with ground truth fixed per grid point;
/// configs that violate an assumption of the checked bound raise ConfigError
/// naming it.
std::vector<CoverageReport> verify_bound_coverage(const std::string& bound,
                                                  const std::vector<TrialConfig>& grid,
                                                  long trials, double delta, uint64_t master_seed,
                                                  int jobs = 0);

enum class OutputFormat { Csv, Json };
OutputFormat format_from_string(const std::string& name);
std::string to_string(OutputFormat fmt);

/// Reproducibility metadata embedded in every output file.
struct RunMetadata {
    std::string command;
    std::string config_json;  // one-line JSON of the full config
    uint64_t seed = 0;
    long failures = -1;  // >= 0: failed-trial count to record
};

void emit_results(const std::vector<ErrorRecord>& records, const std::filesystem::path& path,
                  OutputFormat fmt, const RunMetadata& meta);
void emit_results(const std::vector<SummaryRow>& rows, const std::filesystem::path& path,
                  OutputFormat fmt, const RunMetadata& meta);
void emit_results(const std::vector<CoverageReport>& reports, const std::filesystem::path& path,
                  OutputFormat fmt, const RunMetadata& meta);

/// Parse a records CSV written by emit_results (inverse of the CSV writer).
std::vector<ErrorRecord> parse_records_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting; used for all numeric output so
/// identical runs produce byte-identical files.
std::string format_double(double v);

/// Index-parallel map; worker exceptions are rethrown on the caller thread.
void parallel_for(long count, int jobs, const std::function<void(long)>& fn);

}  // namespace bmlr
