#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "degbench/data.hpp"
#include "degbench/metrics.hpp"
#include "degbench/tree.hpp"

namespace degbench {

enum class Family { MVL, RF, GB, NN };

inline constexpr Family kAllFamilies[] = {Family::MVL, Family::RF, Family::GB, Family::NN};

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

using Hyperparams = std::map<std::string, double>;

struct LearnerSpec {
    Family family = Family::RF;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;

    friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

// Hyperparameter names per family (0 means "unlimited" for max_depth):
//   RF  n_trees, max_depth, min_leaf, max_features_sqrt, bootstrap
//   GB  n_trees, learning_rate, max_depth, min_leaf
//   NN  hidden, learning_rate, epochs, momentum
//   MVL (none)
Hyperparams default_hyperparams(Family family);
// Fills missing keys from the defaults; Error(config) on unknown keys.
LearnerSpec complete_spec(LearnerSpec spec);
// Search grid; the first entry is the family default.
std::vector<Hyperparams> hyperparam_grid(Family family);
std::string describe(const LearnerSpec& spec);

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // zero-variance columns store 1

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    static Standardization fit(const Eigen::MatrixXd& x);
};

// OLS on standardized features: y = intercept + coef . z.
struct LinearState {
    Eigen::VectorXd coef;
    double intercept = 0;
};

struct ForestState {
    std::vector<RegressionTree> trees;
};

struct BoostState {
    double init = 0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;
};

// One hidden ReLU layer on standardized inputs and target.
struct MlpState {
    Eigen::MatrixXd w1;  // hidden x features
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;  // hidden
    double b2 = 0;
    double y_mean = 0;
    double y_sd = 1;
};

using FamilyState = std::variant<LinearState, ForestState, BoostState, MlpState>;

class TrainedModel {
public:
    TrainedModel(LearnerSpec spec, std::vector<std::string> feature_names, Standardization scaling,
                 FamilyState state);

    [[nodiscard]] const LearnerSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return names_; }
    [[nodiscard]] const Standardization& standardization() const noexcept { return scaling_; }
    [[nodiscard]] const FamilyState& state() const noexcept { return state_; }
    [[nodiscard]] const MetricsBundle& training_metrics() const noexcept { return training_metrics_; }
    void set_training_metrics(MetricsBundle m) { training_metrics_ = m; }

    // Group labels seen during training; external_test refuses them.
    [[nodiscard]] const std::vector<std::string>& training_groups() const noexcept {
        return training_groups_;
    }
    void set_training_groups(std::vector<std::string> groups);

    // Columns must already be in feature_names() order.
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    // Checks names and order; Error(prediction) on mismatch.
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& x,
                                          const std::vector<std::string>& names) const;
    [[nodiscard]] Eigen::VectorXd predict(const Design& design) const;

private:
    LearnerSpec spec_;
    std::vector<std::string> names_;
    Standardization scaling_;
    FamilyState state_;
    MetricsBundle training_metrics_;
    std::vector<std::string> training_groups_;
};

// Requires rows(x) == len(y) >= 5 and finite values. Deterministic in spec.seed.
// Error(training) for a rank-deficient MVL design or a diverging NN.
TrainedModel train(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::vector<std::string> feature_names);
TrainedModel train(const LearnerSpec& spec, const Design& design);

// GB prediction using only the first `stages` trees.
Eigen::VectorXd staged_predict(const TrainedModel& model, const Eigen::MatrixXd& x,
                               std::size_t stages);
// Per-tree predictions of a random forest (rows x trees).
Eigen::MatrixXd tree_predictions(const TrainedModel& model, const Eigen::MatrixXd& x);
// MVL coefficients in raw feature units: y = intercept + coef . x.
std::pair<Eigen::VectorXd, double> linear_coefficients(const TrainedModel& model);

// Loss 0.5 * mean((f(x) - y)^2) on standardized data and its gradient
// (same layout as MlpState; y_mean/y_sd untouched).
double mlp_loss_and_gradient(const MlpState& params, const Eigen::MatrixXd& z,
                             const Eigen::VectorXd& t, MlpState* gradient);
MlpState mlp_initial_state(std::size_t features, std::size_t hidden, std::uint64_t seed);

struct FeatureImportance {
    std::vector<std::string> features;
    std::vector<double> importance;  // mean RMSE increase
    std::vector<double> sd;          // across repeats
    double baseline_rmse = 0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
};

// Mean over `repeats` (>= 5) of RMSE(permuted column j) - RMSE(original).
FeatureImportance permutation_importance(const TrainedModel& model, const Eigen::MatrixXd& x,
                                         const Eigen::VectorXd& y, std::size_t repeats,
                                         std::uint64_t seed);
// Features whose importance is at least `fraction` of the maximum, in the
// model's order. Falls back to the single top feature if none qualifies.
std::vector<std::string> select_by_importance(const FeatureImportance& fi, double fraction = 0.04);
nlohmann::json to_json(const FeatureImportance& fi);

struct SearchTrial {
    LearnerSpec spec;
    std::optional<double> valid_rmse;  // empty when training failed
    std::string error;
};

struct SearchResult {
    LearnerSpec best;
    std::vector<SearchTrial> trials;
};

// Evaluates the first `budget` grid points in draw order (default first,
// then a seeded permutation of the rest) by validation RMSE.
SearchResult search_hyperparams(Family family, const Eigen::MatrixXd& x_train,
                                const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_valid,
                                const Eigen::VectorXd& y_valid, std::size_t budget,
                                std::uint64_t seed, const std::vector<std::string>& feature_names);
LearnerSpec hyperparam_search(Family family, const Eigen::MatrixXd& x_train,
                              const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_valid,
                              const Eigen::VectorXd& y_valid, std::size_t budget,
                              std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json spec_to_json(const LearnerSpec& spec);
LearnerSpec spec_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace degbench
