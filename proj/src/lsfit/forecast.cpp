#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "common/text.hpp"
#include "degbench/data.hpp"
#include "degbench/error.hpp"
#include "degbench/lsfit.hpp"
#include "degbench/parallel.hpp"

namespace degbench {

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string days(double v) { return detail::format_double(v) + " days"; }

}  // namespace

std::vector<DeviceSeries> load_series(const std::filesystem::path& path, const std::string& x_col,
                                      const std::string& y_col,
                                      const std::optional<std::string>& group_col) {
    // Reuse the table reader: declare only the needed columns, ignoring others.
    const auto text = detail::read_file(path);
    const auto header_line = detail::trim(text.substr(0, text.find('\n')));
    Schema schema;
    for (const auto& raw : detail::split(header_line, ',')) {
        auto name = detail::trim(raw);
        ColumnSpec spec{name, ColumnKind::categorical, "", ColumnRole::feature};
        if (name == x_col) spec = {name, ColumnKind::numeric, "days", ColumnRole::time};
        if (name == y_col) spec = {name, ColumnKind::numeric, "", ColumnRole::target};
        if (group_col && name == *group_col)
            spec = {name, ColumnKind::categorical, "", ColumnRole::group_id};
        schema.push_back(spec);
    }
    auto has = [&](const std::string& n) {
        return std::any_of(schema.begin(), schema.end(), [&](const auto& s) { return s.name == n; });
    };
    if (!has(x_col)) throw Error(ErrorKind::parse, "series CSV lacks x column '" + x_col + "'");
    if (!has(y_col)) throw Error(ErrorKind::parse, "series CSV lacks y column '" + y_col + "'");
    if (group_col && !has(*group_col))
        throw Error(ErrorKind::parse, "series CSV lacks group column '" + *group_col + "'");

    const auto table = parse_csv(text, schema);
    const auto groups = table.group_ids();
    const auto& x = table.time_column()->numeric;
    const auto& y = table.target_column().numeric;
    std::map<std::string, DeviceSeries> by_device;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        auto& s = by_device[groups[i]];
        s.device = groups[i];
        s.x.push_back(x[i]);
        s.y.push_back(y[i]);
    }
    std::vector<DeviceSeries> out;
    for (auto& [_, s] : by_device) out.push_back(std::move(s));
    return out;
}

ForecastResult forecast_experiment(ModelKind kind, const std::vector<DeviceSeries>& series,
                                   std::vector<double> windows, std::vector<double> horizons,
                                   const FitOptions& options, std::size_t jobs) {
    if (series.empty()) throw Error(ErrorKind::forecast, "no series supplied");
    if (windows.empty() || horizons.empty())
        throw Error(ErrorKind::forecast, "need at least one window and one horizon");
    std::sort(windows.begin(), windows.end());
    std::sort(horizons.begin(), horizons.end());

    struct Job {
        std::size_t device;
        double window;
    };
    std::vector<Job> jobs_list;
    for (std::size_t d = 0; d < series.size(); ++d)
        for (double w : windows) jobs_list.push_back({d, w});

    std::vector<std::optional<ForecastFit>> fits(jobs_list.size());
    std::vector<std::vector<ForecastRow>> rows(jobs_list.size());

    parallel_for(jobs_list.size(), jobs, [&](std::size_t j) {
        const auto& s = series[jobs_list[j].device];
        const double w = jobs_list[j].window;
        std::vector<double> fx, fy;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.x[i] <= w) {
                fx.push_back(s.x[i]);
                fy.push_back(s.y[i]);
            }
        }
        FitResult fit = [&] {
            try {
                return fit_lm(kind, fx, fy, std::nullopt, options);
            } catch (const Error& e) {
                throw Error(e.kind(), "device '" + s.device + "', window " + days(w) + ": " + e.what());
            }
        }();
        fit.window_days = w;
        for (double h : horizons) {
            if (h <= w) continue;
            std::vector<double> hx, hy;
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (s.x[i] > w && s.x[i] <= h) {
                    hx.push_back(s.x[i]);
                    hy.push_back(s.y[i]);
                }
            }
            if (hx.empty())
                throw Error(ErrorKind::forecast, "empty horizon interval (" + days(w) + ", " + days(h) +
                                                     "] for device '" + s.device + "'");
            rows[j].push_back({s.device, w, h, evaluate(hy, fit.model.eval(hx))});
        }
        fits[j] = ForecastFit{s.device, w, std::move(fit)};
    });

    ForecastResult result;
    result.kind = kind;
    for (std::size_t j = 0; j < jobs_list.size(); ++j) {
        result.fits.push_back(std::move(*fits[j]));
        for (auto& r : rows[j]) result.rows.push_back(std::move(r));
    }

    std::map<std::pair<double, double>, std::vector<const ForecastRow*>> cells;
    for (const auto& r : result.rows) cells[{r.window, r.horizon}].push_back(&r);
    for (const auto& [key, members] : cells) {
        std::vector<double> rm, ss, ma;
        for (const auto* r : members) {
            rm.push_back(r->metrics.rmse);
            ss.push_back(r->metrics.sse);
            ma.push_back(r->metrics.mae);
        }
        ForecastSummaryRow s;
        s.window = key.first;
        s.horizon = key.second;
        s.devices = members.size();
        std::tie(s.rmse_mean, s.rmse_sd) = mean_sd(rm);
        std::tie(s.sse_mean, s.sse_sd) = mean_sd(ss);
        std::tie(s.mae_mean, s.mae_sd) = mean_sd(ma);
        result.summary.push_back(s);
    }
    return result;
}

nlohmann::json to_json(const ForecastResult& result) {
    nlohmann::json j;
    j["model"] = std::string(to_string(result.kind));
    j["fits"] = nlohmann::json::array();
    for (const auto& f : result.fits) {
        nlohmann::json item;
        item["device"] = f.device;
        item["window_days"] = f.window;
        item["model"] = f.fit.model.to_json();
        item["fit_metrics"] = to_json(f.fit.metrics);
        item["iterations"] = f.fit.iterations;
        item["converged"] = f.fit.converged;
        j["fits"].push_back(std::move(item));
    }
    j["forecast"] = nlohmann::json::array();
    for (const auto& r : result.rows) {
        nlohmann::json item;
        item["device"] = r.device;
        item["window_days"] = r.window;
        item["horizon_days"] = r.horizon;
        item["partition"] = "forecast interval (window, horizon]";
        item["metrics"] = to_json(r.metrics);
        j["forecast"].push_back(std::move(item));
    }
    j["summary_across_devices"] = nlohmann::json::array();
    for (const auto& s : result.summary) {
        nlohmann::json item;
        item["window_days"] = s.window;
        item["horizon_days"] = s.horizon;
        item["devices"] = s.devices;
        item["rmse"] = {{"mean", s.rmse_mean}, {"sd", s.rmse_sd}};
        item["sse"] = {{"mean", s.sse_mean}, {"sd", s.sse_sd}};
        item["mae"] = {{"mean", s.mae_mean}, {"sd", s.mae_sd}};
        j["summary_across_devices"].push_back(std::move(item));
    }
    return j;
}

std::string to_markdown(const ForecastResult& result) {
    std::string out;
    std::string device;
    for (const auto& r : result.rows) {
        if (r.device != device) {
            device = r.device;
            out += "\n### " + std::string(to_string(result.kind)) + " forecast, device " + device + "\n\n";
            out += "| Fitting data | Prediction | RMSE   | SSE    | MAE    |\n";
            out += "|-------------:|-----------:|-------:|-------:|-------:|\n";
        }
        out += "| " + days(r.window) + " | " + days(r.horizon) + " | " + fixed4(r.metrics.rmse) +
               " | " + fixed4(r.metrics.sse) + " | " + fixed4(r.metrics.mae) + " |\n";
    }
    return out;
}

}  // namespace degbench
