#include "degbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "degbench/error.hpp"

namespace degbench {

namespace detail {

double accurate_sum(std::span<const double> values) {
    // Neumaier's compensated summation.
    double s = 0.0, c = 0.0;
    for (double v : values) {
        const double t = s + v;
        c += std::fabs(s) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

}  // namespace detail

namespace {

void check_lengths(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size())
        throw Error(ErrorKind::metrics, "length mismatch: " + std::to_string(observed.size()) +
                                            " observed vs " + std::to_string(predicted.size()) +
                                            " predicted");
    if (observed.empty()) throw Error(ErrorKind::metrics, "metrics need at least one value");
}

std::vector<double> squared_residuals(std::span<const double> observed,
                                      std::span<const double> predicted) {
    auto r = residuals(observed, predicted);
    for (auto& v : r) v *= v;
    return r;
}

}  // namespace

std::vector<double> residuals(std::span<const double> observed, std::span<const double> predicted) {
    check_lengths(observed, predicted);
    std::vector<double> r(observed.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = observed[i] - predicted[i];
    return r;
}

double sse(std::span<const double> observed, std::span<const double> predicted) {
    return detail::accurate_sum(squared_residuals(observed, predicted));
}

double rmse(std::span<const double> observed, std::span<const double> predicted) {
    return std::sqrt(sse(observed, predicted) / static_cast<double>(observed.size()));
}

double mae(std::span<const double> observed, std::span<const double> predicted) {
    auto r = residuals(observed, predicted);
    for (auto& v : r) v = std::abs(v);
    return detail::accurate_sum(r) / static_cast<double>(r.size());
}

double r2(std::span<const double> observed, std::span<const double> predicted) {
    check_lengths(observed, predicted);
    if (std::all_of(observed.begin(), observed.end(),
                    [&](double v) { return v == observed.front(); }))
        throw Error(ErrorKind::metrics, "R^2 undefined: constant observed vector");
    const double mean = detail::accurate_sum(observed) / static_cast<double>(observed.size());
    std::vector<double> dev(observed.size());
    for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = (observed[i] - mean) * (observed[i] - mean);
    const double ss_tot = detail::accurate_sum(dev);
    return 1.0 - sse(observed, predicted) / ss_tot;
}

MetricsBundle evaluate(std::span<const double> observed, std::span<const double> predicted) {
    MetricsBundle m;
    m.n = observed.size();
    m.sse = sse(observed, predicted);
    m.rmse = std::sqrt(m.sse / static_cast<double>(m.n));
    m.mae = mae(observed, predicted);
    try {
        m.r2 = r2(observed, predicted);
    } catch (const Error&) {
        m.r2.reset();
    }
    return m;
}

nlohmann::json to_json(const MetricsBundle& m) {
    nlohmann::json j;
    j["r2"] = m.r2 ? nlohmann::json(*m.r2) : nlohmann::json(nullptr);
    j["rmse"] = m.rmse;
    j["sse"] = m.sse;
    j["mae"] = m.mae;
    j["n"] = m.n;
    return j;
}

MetricsBundle metrics_from_json(const nlohmann::json& j) {
    MetricsBundle m;
    if (!j.at("r2").is_null()) m.r2 = j.at("r2").get<double>();
    m.rmse = j.at("rmse").get<double>();
    m.sse = j.at("sse").get<double>();
    m.mae = j.at("mae").get<double>();
    m.n = j.at("n").get<std::size_t>();
    return m;
}

}  // namespace degbench
