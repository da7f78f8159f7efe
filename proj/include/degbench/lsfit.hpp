#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "degbench/metrics.hpp"

namespace degbench {

// Closed-form degradation curves of PCE against elapsed days:
//   exp1   a e^{bx}
//   exp2   a e^{bx} + c e^{dx}
//   gauss1 a1 e^{-((x-b1)/c1)^2}
//   gauss2 a1 e^{-((x-b1)/c1)^2} + a2 e^{-((x-b2)/c2)^2}
//   poly3  p1 x^3 + p2 x^2 + p3 x + p4
enum class ModelKind { exp1, exp2, gauss1, gauss2, poly3 };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::exp1, ModelKind::exp2, ModelKind::gauss1,
                                               ModelKind::gauss2, ModelKind::poly3};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
std::size_t coefficient_count(ModelKind kind);
std::vector<std::string> coefficient_names(ModelKind kind);

class ParametricModel {
public:
    // Error(fit) if the coefficient count is wrong or a gauss width is zero.
    ParametricModel(ModelKind kind, std::vector<double> coeffs);

    [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] std::vector<double> eval(std::span<const double> x) const;
    // n x k matrix of partial derivatives with respect to each coefficient.
    [[nodiscard]] Eigen::MatrixXd jacobian(std::span<const double> x) const;

    // g(x) = f(s * x) and g(x) = m * f(x), both exactly representable in
    // the same family.
    [[nodiscard]] ParametricModel time_stretched(double s) const;
    [[nodiscard]] ParametricModel amplitude_scaled(double m) const;

    [[nodiscard]] nlohmann::json to_json() const;

    friend bool operator==(const ParametricModel&, const ParametricModel&) = default;

private:
    ModelKind kind_;
    std::vector<double> coeffs_;
};

struct FitOptions {
    int max_iter = 200;
    double tol_grad = 1e-10;
    double tol_step = 1e-10;
    double lambda0 = 1e-3;
    int n_restarts = 5;
    std::uint64_t seed = 0;
    // poly3 is linear in its coefficients; false forces the iterative path.
    bool closed_form_poly3 = true;
};

struct FitResult {
    ParametricModel model;
    MetricsBundle metrics;  // on the fitting data
    int iterations = 0;
    bool converged = false;
    double window_days = 0;
    double initial_sse = 0;
    int restart = 0;  // which start produced the result (0 = heuristic)
};

// Levenberg-Marquardt minimisation of the residual sum of squares.
// Error(fit) when there are fewer points than coefficients, x is constant,
// or every start produced non-finite residuals.
FitResult fit_lm(ModelKind kind, std::span<const double> x, std::span<const double> y,
                 const std::optional<std::vector<double>>& init = std::nullopt,
                 const FitOptions& options = {});

// Deterministic heuristic start for the given data (documented in README).
std::vector<double> heuristic_start(ModelKind kind, std::span<const double> x,
                                    std::span<const double> y);

struct DeviceSeries {
    std::string device;
    std::vector<double> x;  // days
    std::vector<double> y;  // PCE
};

// Reads a long-format CSV; without a group column every row belongs to "all".
std::vector<DeviceSeries> load_series(const std::filesystem::path& path, const std::string& x_col,
                                      const std::string& y_col,
                                      const std::optional<std::string>& group_col);

struct ForecastRow {
    std::string device;
    double window = 0;
    double horizon = 0;
    MetricsBundle metrics;  // on points with window < x <= horizon
};

struct ForecastFit {
    std::string device;
    double window = 0;
    FitResult fit;
};

struct ForecastSummaryRow {
    double window = 0;
    double horizon = 0;
    std::size_t devices = 0;
    double rmse_mean = 0, rmse_sd = 0;
    double sse_mean = 0, sse_sd = 0;
    double mae_mean = 0, mae_sd = 0;
};

struct ForecastResult {
    ModelKind kind = ModelKind::gauss2;
    std::vector<ForecastFit> fits;            // ordered by (device, window)
    std::vector<ForecastRow> rows;            // ordered by (device, window, horizon)
    std::vector<ForecastSummaryRow> summary;  // mean/SD across devices
};

// For each device and window: fit on x <= window, then score every horizon
// greater than the window on window < x <= horizon. Error(forecast) on an
// empty horizon interval; Error(fit) if a window is underdetermined.
ForecastResult forecast_experiment(ModelKind kind, const std::vector<DeviceSeries>& series,
                                   std::vector<double> windows, std::vector<double> horizons,
                                   const FitOptions& options = {}, std::size_t jobs = 1);

nlohmann::json to_json(const ForecastResult& result);
std::string to_markdown(const ForecastResult& result);

}  // namespace degbench
