#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace degbench {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// observed - predicted, elementwise. Error(metrics) on length mismatch or empty input.
std::vector<double> residuals(std::span<const double> observed, std::span<const double> predicted);

double sse(std::span<const double> observed, std::span<const double> predicted);
double rmse(std::span<const double> observed, std::span<const double> predicted);
double mae(std::span<const double> observed, std::span<const double> predicted);

// 1 - SSE/SS_tot. A constant (or single-element) observed vector has no
// defined R^2 and raises Error(metrics) instead of returning NaN.
double r2(std::span<const double> observed, std::span<const double> predicted);

struct MetricsBundle {
    std::optional<double> r2;  // empty when observed is constant
    double rmse = 0;
    double sse = 0;
    double mae = 0;
    std::size_t n = 0;

    friend bool operator==(const MetricsBundle&, const MetricsBundle&) = default;
};

MetricsBundle evaluate(std::span<const double> observed, std::span<const double> predicted);
inline MetricsBundle evaluate(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    return evaluate(as_span(observed), as_span(predicted));
}

// {r2, rmse, sse, mae, n}; r2 is null when undefined.
nlohmann::json to_json(const MetricsBundle& m);
MetricsBundle metrics_from_json(const nlohmann::json& j);

namespace detail {
// Compensated summation; error does not grow with the number of terms.
double accurate_sum(std::span<const double> values);
}  // namespace detail

}  // namespace degbench
