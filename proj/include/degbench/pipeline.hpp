#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "degbench/data.hpp"
#include "degbench/learners.hpp"
#include "degbench/lsfit.hpp"
#include "degbench/metrics.hpp"

namespace degbench {

// ---- configuration ---------------------------------------------------------

struct BenchmarkConfig {
    std::vector<Family> families{Family::MVL, Family::RF, Family::GB, Family::NN};
    std::vector<double> train_fractions{0.6, 0.7, 0.8, 0.9};
    std::vector<std::uint64_t> seeds{0};  // replicate axis of the sweep
    std::vector<bool> pfi_variants{false, true};
    std::vector<double> time_cutoffs{30, 60, 90, 120, 150, 180};
    std::size_t search_budget = 2;
    std::uint64_t base_seed = 0;  // every derived seed hashes this in

    double pfi_threshold = 0.04;  // keep features >= this fraction of the max PFI
    std::size_t pfi_repeats = 5;
    std::size_t kfold = 5;
    double z_threshold = 2.0;
    std::size_t shapley_background = 16;
    std::size_t shapley_max_rows = 50;
    std::optional<std::string> holdout_group;
};

// key = value lines (lists comma-separated), '#' comments. Unknown keys and
// malformed values raise Error(config).
BenchmarkConfig parse_benchmark_config(const std::string& text);
BenchmarkConfig load_benchmark_config(const std::filesystem::path& path);
void validate_config(const BenchmarkConfig& config);
nlohmann::json to_json(const BenchmarkConfig& config);

// ---- sweep -----------------------------------------------------------------

struct BenchmarkEntry {
    double cutoff = 0;
    Family family = Family::RF;
    double train_fraction = 0;
    bool pfi = false;
    std::uint64_t seed = 0;

    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    std::optional<LearnerSpec> spec;
    std::vector<std::string> features;
    std::optional<MetricsBundle> train_metrics;
    std::optional<MetricsBundle> valid_metrics;
    std::string error;  // non-empty marks a failed cell

    [[nodiscard]] bool ok() const { return valid_metrics.has_value(); }
    [[nodiscard]] std::string label() const;  // e.g. "RF-90-10" or "RF-90-10-PFI"
};

struct CutoffChampion {
    double cutoff = 0;
    std::optional<std::size_t> entry;  // index into entries; empty if all failed
    std::vector<std::size_t> by_rmse;  // successful entries, ascending validation RMSE
    std::vector<std::size_t> by_r2;    // successful entries, descending validation R^2
};

struct SweepResult {
    std::vector<BenchmarkEntry> entries;  // ordered (cutoff, family, fraction, pfi, seed)
    std::vector<CutoffChampion> champions;
};

// Table restricted to the cutoff, the split used for the entry, and the
// trained model. Re-running it reproduces the sweep result exactly.
struct EntryFit {
    DataTable data;
    Split split;
    std::optional<TrainedModel> model;
    std::optional<FeatureImportance> selection_pfi;  // PFI variant only
};

EntryFit fit_entry(const DataTable& table, const BenchmarkConfig& config, BenchmarkEntry& entry);
SweepResult run_sweep(const DataTable& table, const BenchmarkConfig& config, std::size_t jobs);

// ---- verification ----------------------------------------------------------

struct VerificationResult {
    std::size_t n_train = 0, n_valid = 0;
    double model_rmse = 0;
    double ymean_rmse = 0;            // evaluation-partition mean as the prediction
    double ymean_trainmean_rmse = 0;  // training-target mean as the prediction
    double yshuffle_rmse = 0;
    std::optional<double> onehot_rmse;
    std::string onehot_error;
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> folds;
    std::vector<MetricsBundle> fold_metrics;
    MetricsBundle pooled;
};

// k disjoint, exhaustive folds of sizes differing by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

// Quartile binning of each feature using training-row cut points. Bins 2-4
// become indicator columns (bin 1 is the reference level); indicators that are
// constant on the training rows are omitted.
Design quartile_onehot(const Design& train, const Design& apply_to);

VerificationResult verify(const LearnerSpec& spec, const DataTable& table,
                          const SplitConfig& split_config, std::size_t k,
                          const std::vector<std::string>& features, std::size_t jobs = 1);
nlohmann::json to_json(const VerificationResult& v);

// ---- prediction helpers ----------------------------------------------------

struct PredictionRow {
    std::size_t row = 0;
    std::string group;
    double time = 0;
    double observed = 0;
    double predicted = 0;
};

struct ExternalResult {
    std::string group;
    MetricsBundle metrics;
    std::string r2_note;  // why R^2 is missing, if it is
    std::vector<PredictionRow> rows;  // ordered by time
    bool leakage = false;
};

// Error(leakage) if the model saw the group during training, unless the
// guard is disabled, in which case the result is flagged instead.
ExternalResult external_test(const TrainedModel& model, const DataTable& table,
                             const std::string& group, bool leakage_guard = true);
nlohmann::json to_json(const ExternalResult& r);

struct Outlier {
    std::size_t row = 0;
    double residual = 0;
    double z = 0;
};

// Rows whose standardized residual exceeds z_threshold, largest |z| first.
std::vector<Outlier> detect_outliers(const TrainedModel& model, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y, double z_threshold = 2.0);

// ---- attribution -----------------------------------------------------------

inline constexpr std::size_t kMaxShapleyFeatures = 20;

struct ShapleyResult {
    std::vector<std::string> features;
    Eigen::MatrixXd values;  // rows x features
    Eigen::VectorXd predictions;
    double baseline = 0;
    std::size_t background_size = 0;
    std::vector<std::size_t> background_rows;  // provenance, when known
    std::vector<std::size_t> explained_rows;
};

// Exact interventional Shapley values over all 2^m coalitions.
ShapleyResult shapley(const TrainedModel& model, const Eigen::MatrixXd& rows,
                      const Eigen::MatrixXd& background, std::size_t jobs = 1);
nlohmann::json to_json(const ShapleyResult& s);

// ---- synthetic data --------------------------------------------------------

struct SynthConfig {
    std::size_t n_cells = 5;
    std::size_t total_rows = 166;
    double max_day = 181;
    std::vector<double> days;  // explicit per-cell schedule; empty = evenly spaced
    std::optional<ParametricModel> decay;  // base curve; default gauss2 below
    double noise_sd = 0.02;
    std::uint64_t seed = 0;
};

ParametricModel default_decay();
Schema synth_schema();

struct SynthCell {
    std::string name;
    double solvent_ul = 0, p3ht_mg = 0, pcbm_mg = 0, ratio = 0;
    double stretch = 1;   // time-axis factor applied to the base decay
    double amplitude = 1; // initial PCE (fraction)
    ParametricModel curve;  // effective noiseless curve for this cell
};

struct SynthResult {
    DataTable table;
    std::vector<SynthCell> cells;
};

SynthResult synth_dataset(const SynthConfig& config);

// ---- report ----------------------------------------------------------------

struct BenchmarkReport {
    BenchmarkConfig config;
    std::vector<CurationEvent> curation;
    bool normalized_target = false;
    SweepResult sweep;
    std::optional<std::size_t> champion;  // entry of the largest cutoff's champion
    std::optional<VerificationResult> verification;
    std::optional<FeatureImportance> importance;
    std::optional<ShapleyResult> attribution;
    std::vector<Outlier> outliers;  // rows of the champion's cutoff table
    std::vector<PredictionRow> predictions;  // champion on its validation rows
    std::optional<ExternalResult> external;
    std::optional<TrainedModel> champion_model;
};

BenchmarkReport run_benchmark(const DataTable& table, const BenchmarkConfig& config,
                              std::size_t jobs);

nlohmann::json to_json(const BenchmarkReport& report);

// Rendering works from the JSON document so `report` can re-render a saved run.
std::string report_markdown(const nlohmann::json& report);
std::string predictions_csv(const nlohmann::json& predictions);
std::string scatter_svg(const nlohmann::json& predictions, const std::string& title);
std::string bar_svg(const std::vector<std::string>& names, const std::vector<double>& values,
                    const std::string& title);

// report.md, predicted_vs_observed.csv and the svg charts.
void render_report(const nlohmann::json& report, const std::filesystem::path& dir);
// report.json and champion_model.json, then render_report.
void write_report(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace degbench
