#include <algorithm>
#include <cmath>
#include <cstdio>

#include "common/text.hpp"
#include "degbench/error.hpp"
#include "degbench/pipeline.hpp"

namespace degbench {

using nlohmann::json;

namespace {

json prediction_json(const PredictionRow& p) {
    return {{"row", p.row}, {"group", p.group}, {"time", p.time}, {"observed", p.observed},
            {"predicted", p.predicted}};
}

json entry_json(const BenchmarkEntry& e, std::size_t index) {
    json j;
    j["index"] = index;
    j["label"] = e.label();
    j["cutoff_days"] = e.cutoff;
    j["family"] = std::string(to_string(e.family));
    j["train_fraction"] = e.train_fraction;
    j["pfi_filtered"] = e.pfi;
    j["seed"] = e.seed;
    j["n_train"] = e.n_train;
    j["n_valid"] = e.n_valid;
    j["status"] = e.ok() ? "ok" : "failed";
    if (!e.ok()) j["error"] = e.error;
    j["spec"] = e.spec ? spec_to_json(*e.spec) : json();
    j["features"] = e.features;
    j["training_metrics"] = e.train_metrics ? to_json(*e.train_metrics) : json();
    j["validation_metrics"] = e.valid_metrics ? to_json(*e.valid_metrics) : json();
    return j;
}

std::string fixed(const json& v, int digits = 4) {
    if (v.is_null()) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v.get<double>());
    return buf;
}

std::string num(double v) { return detail::format_double(v); }

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

json to_json(const BenchmarkReport& r) {
    json j;
    j["format"] = "degbench-report";
    j["format_version"] = 1;
    j["config"] = to_json(r.config);
    j["normalized_target"] = r.normalized_target;
    j["curation_log"] = curation_log_json(r.curation);
    j["metric_partitions"] = {{"training_metrics", "training rows of the entry's split"},
                              {"validation_metrics", "validation rows of the entry's split"}};

    j["entries"] = json::array();
    for (std::size_t i = 0; i < r.sweep.entries.size(); ++i)
        j["entries"].push_back(entry_json(r.sweep.entries[i], i));

    j["cutoffs"] = json::array();
    for (const auto& c : r.sweep.champions) {
        json item;
        item["cutoff_days"] = c.cutoff;
        item["champion"] = c.entry ? json(*c.entry) : json();
        item["selection"] = "minimum validation RMSE";
        item["order_by_rmse"] = c.by_rmse;
        item["order_by_r2"] = c.by_r2;
        j["cutoffs"].push_back(std::move(item));
    }

    j["champion"] = r.champion ? entry_json(r.sweep.entries[*r.champion], *r.champion) : json();
    j["verification"] = r.verification ? to_json(*r.verification) : json();
    j["permutation_importance"] = r.importance ? to_json(*r.importance) : json();
    j["shapley"] = r.attribution ? to_json(*r.attribution) : json();
    j["outliers"] = json::array();
    for (const auto& o : r.outliers)
        j["outliers"].push_back({{"row", o.row}, {"residual", o.residual}, {"z", o.z}});
    j["outlier_rule"] = {{"z_threshold", r.config.z_threshold},
                         {"rows", "champion cutoff window (training and validation)"}};
    j["predicted_vs_observed"] = json::array();
    for (const auto& p : r.predictions) j["predicted_vs_observed"].push_back(prediction_json(p));
    j["external_test"] = r.external ? to_json(*r.external) : json();
    return j;
}

std::string report_markdown(const json& r) {
    std::string md = "# Degradation benchmark report\n\n";
    md += "Target: " + std::string(r.value("normalized_target", false) ? "normalized to each device's first measurement"
                                                                     : "raw") + ".\n";
    md += "All entry metrics below are on the validation partition of the entry's own split.\n";

    const auto& entries = r.at("entries");
    for (const auto& c : r.at("cutoffs")) {
        md += "\n## Training data up to " + num(c.at("cutoff_days").get<double>()) + " days\n\n";
        md += "| Model | R2 | RMSE | SSE | MAE | n |\n|:------|---:|-----:|----:|----:|--:|\n";
        const json champion = c.at("champion");
        for (const auto& e : entries) {
            if (e.at("cutoff_days") != c.at("cutoff_days")) continue;
            const bool best = !champion.is_null() && e.at("index") == champion;
            const std::string label = best ? "**" + e.at("label").get<std::string>() + "**"
                                           : e.at("label").get<std::string>();
            if (e.at("status") != "ok") {
                md += "| " + label + " | failed: " + e.value("error", "") + " | | | | |\n";
                continue;
            }
            const auto& m = e.at("validation_metrics");
            md += "| " + label + " | " + fixed(m.at("r2"), 2) + " | " + fixed(m.at("rmse")) + " | " +
                  fixed(m.at("sse")) + " | " + fixed(m.at("mae")) + " | " +
                  std::to_string(m.at("n").get<std::size_t>()) + " |\n";
        }
        auto order = [&](const char* key) {
            std::string s;
            for (const auto& idx : c.at(key))
                s += (s.empty() ? "" : ", ") + entries.at(idx.get<std::size_t>()).at("label").get<std::string>();
            return s;
        };
        md += "\nBy RMSE (selection rule): " + order("order_by_rmse") + "\n\n";
        md += "By R2: " + order("order_by_r2") + "\n";
    }

    if (!r.at("champion").is_null()) {
        const auto& ch = r.at("champion");
        md += "\n## Champion\n\n" + ch.at("label").get<std::string>() + " at " +
              num(ch.at("cutoff_days").get<double>()) + " days; features: ";
        std::string f;
        for (const auto& n : ch.at("features")) f += (f.empty() ? "" : ", ") + n.get<std::string>();
        md += f + ".\n";
    }

    if (!r.at("verification").is_null()) {
        const auto& v = r.at("verification");
        md += "\n## Verification (validation partition)\n\n| Test | RMSE |\n|:-----|-----:|\n";
        md += "| model | " + fixed(v.at("model_rmse")) + " |\n";
        md += "| y-mean (validation mean) | " + fixed(v.at("ymean_rmse")) + " |\n";
        md += "| y-mean (training mean) | " + fixed(v.at("ymean_trainmean_rmse")) + " |\n";
        md += "| y-shuffle | " + fixed(v.at("yshuffle_rmse")) + " |\n";
        md += "| onehot (quartile bins) | " + fixed(v.at("onehot_rmse")) + " |\n";
        const auto& p = v.at("kfold").at("pooled");
        md += "\n" + std::to_string(v.at("kfold").at("k").get<std::size_t>()) +
              "-fold cross-validation, pooled out-of-fold: R2 " + fixed(p.at("r2"), 2) + ", RMSE " +
              fixed(p.at("rmse")) + ", MAE " + fixed(p.at("mae")) + ".\n";
        md += "\nThe onehot test replaces every feature with quartile-bin indicators.\n";
    }

    if (!r.at("permutation_importance").is_null()) {
        md += "\n## Permutation feature importance (validation partition)\n\n";
        md += "| Feature | RMSE increase | SD |\n|:--------|--------------:|---:|\n";
        for (const auto& f : r.at("permutation_importance").at("features"))
            md += "| " + f.at("name").get<std::string>() + " | " + fixed(f.at("importance"), 5) + " | " +
                  fixed(f.at("sd"), 5) + " |\n";
    }

    if (!r.at("shapley").is_null()) {
        const auto& s = r.at("shapley");
        md += "\n## Shapley attribution\n\nBaseline " + fixed(s.at("baseline")) + " over " +
              std::to_string(s.at("background_size").get<std::size_t>()) + " background rows.\n\n";
        md += "| Feature | mean abs attribution |\n|:--------|---------------------:|\n";
        for (std::size_t i = 0; i < s.at("features").size(); ++i)
            md += "| " + s.at("features")[i].get<std::string>() + " | " +
                  fixed(s.at("mean_abs_attribution")[i], 5) + " |\n";
    }

    md += "\n## Outliers\n\n";
    if (r.at("outliers").empty()) {
        md += "None above |z| = " + num(r.at("outlier_rule").at("z_threshold").get<double>()) + ".\n";
    } else {
        md += "| Row | Residual | z |\n|----:|---------:|--:|\n";
        for (const auto& o : r.at("outliers"))
            md += "| " + std::to_string(o.at("row").get<std::size_t>()) + " | " + fixed(o.at("residual")) +
                  " | " + fixed(o.at("z"), 2) + " |\n";
    }

    if (!r.at("external_test").is_null()) {
        const auto& e = r.at("external_test");
        const auto& m = e.at("metrics");
        md += "\n## External test: " + e.at("group").get<std::string>() + "\n\nR2 " + fixed(m.at("r2"), 2) +
              ", RMSE " + fixed(m.at("rmse")) + ", MAE " + fixed(m.at("mae")) + ", n " +
              std::to_string(m.at("n").get<std::size_t>()) + ".\n";
        if (e.value("leakage_warning", false)) md += "\nWARNING: the model saw this group during training.\n";
    }
    return md;
}

std::string predictions_csv(const json& predictions) {
    std::string out = "row,group,time,observed,predicted,residual\n";
    for (const auto& p : predictions) {
        const double o = p.at("observed").get<double>(), y = p.at("predicted").get<double>();
        out += std::to_string(p.at("row").get<std::size_t>()) + "," + p.at("group").get<std::string>() + "," +
               num(p.at("time").get<double>()) + "," + num(o) + "," + num(y) + "," + num(o - y) + "\n";
    }
    return out;
}

std::string scatter_svg(const json& predictions, const std::string& title) {
    const double size = 420, pad = 50;
    double lo = 0, hi = 1;
    bool first = true;
    for (const auto& p : predictions)
        for (const char* k : {"observed", "predicted"}) {
            const double v = p.at(k).get<double>();
            lo = first ? v : std::min(lo, v);
            hi = first ? v : std::max(hi, v);
            first = false;
        }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
    auto sx = [&](double v) { return pad + (v - lo) / (hi - lo) * (size - 2 * pad); };
    auto sy = [&](double v) { return size - pad - (v - lo) / (hi - lo) * (size - 2 * pad); };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(size) + "\" height=\"" +
                    svg_num(size) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + svg_num(size / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
    s += "<line x1=\"" + svg_num(sx(lo)) + "\" y1=\"" + svg_num(sy(lo)) + "\" x2=\"" + svg_num(sx(hi)) +
         "\" y2=\"" + svg_num(sy(hi)) + "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
    s += "<rect x=\"" + svg_num(pad) + "\" y=\"" + svg_num(pad) + "\" width=\"" + svg_num(size - 2 * pad) +
         "\" height=\"" + svg_num(size - 2 * pad) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(size / 2) + "\" y=\"" + svg_num(size - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">observed</text>\n";
    s += "<text x=\"14\" y=\"" + svg_num(size / 2) + "\" font-size=\"12\" transform=\"rotate(-90 14 " +
         svg_num(size / 2) + ")\" text-anchor=\"middle\">predicted</text>\n";
    for (double t : {lo, (lo + hi) / 2, hi}) {
        s += "<text x=\"" + svg_num(sx(t)) + "\" y=\"" + svg_num(size - pad + 14) +
             "\" text-anchor=\"middle\" font-size=\"10\">" + fixed(t, 3) + "</text>\n";
        s += "<text x=\"" + svg_num(pad - 4) + "\" y=\"" + svg_num(sy(t) + 3) +
             "\" text-anchor=\"end\" font-size=\"10\">" + fixed(t, 3) + "</text>\n";
    }
    for (const auto& p : predictions)
        s += "<circle cx=\"" + svg_num(sx(p.at("observed").get<double>())) + "\" cy=\"" +
             svg_num(sy(p.at("predicted").get<double>())) + "\" r=\"3\" fill=\"steelblue\"/>\n";
    s += "</svg>\n";
    return s;
}

std::string bar_svg(const std::vector<std::string>& names, const std::vector<double>& values,
                    const std::string& title) {
    const double width = 520, label_w = 160, bar_h = 18, gap = 6, top = 36;
    const double height = top + static_cast<double>(names.size()) * (bar_h + gap) + 20;
    double top_value = 0;
    for (double v : values) top_value = std::max(top_value, std::abs(v));
    if (top_value <= 0) top_value = 1;

    // Largest first, like the usual importance plots.
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) + "\" height=\"" +
                    svg_num(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + svg_num(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
    double y = top;
    for (std::size_t i : order) {
        const double w = std::abs(values[i]) / top_value * (width - label_w - 70);
        s += "<text x=\"" + svg_num(label_w - 6) + "\" y=\"" + svg_num(y + bar_h - 5) +
             "\" text-anchor=\"end\" font-size=\"11\">" + xml_escape(names[i]) + "</text>\n";
        s += "<rect x=\"" + svg_num(label_w) + "\" y=\"" + svg_num(y) + "\" width=\"" + svg_num(w) +
             "\" height=\"" + svg_num(bar_h) + "\" fill=\"" + (values[i] < 0 ? "indianred" : "steelblue") +
             "\"/>\n";
        s += "<text x=\"" + svg_num(label_w + w + 4) + "\" y=\"" + svg_num(y + bar_h - 5) +
             "\" font-size=\"10\">" + fixed(values[i], 4) + "</text>\n";
        y += bar_h + gap;
    }
    s += "</svg>\n";
    return s;
}

void render_report(const json& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "report.md", report_markdown(r));
    detail::write_file(dir / "predicted_vs_observed.csv", predictions_csv(r.at("predicted_vs_observed")));
    std::string title = "Champion: predicted vs observed (validation)";
    if (!r.at("champion").is_null())
        title = r.at("champion").at("label").get<std::string>() + ": predicted vs observed (validation)";
    detail::write_file(dir / "predicted_vs_observed.svg", scatter_svg(r.at("predicted_vs_observed"), title));

    if (!r.at("permutation_importance").is_null()) {
        std::vector<std::string> names;
        std::vector<double> values;
        for (const auto& f : r.at("permutation_importance").at("features")) {
            names.push_back(f.at("name").get<std::string>());
            values.push_back(f.at("importance").get<double>());
        }
        detail::write_file(dir / "pfi.svg", bar_svg(names, values, "Permutation feature importance"));
    }
    if (!r.at("shapley").is_null()) {
        const auto& s = r.at("shapley");
        detail::write_file(dir / "shapley.svg",
                           bar_svg(s.at("features").get<std::vector<std::string>>(),
                                   s.at("mean_abs_attribution").get<std::vector<double>>(),
                                   "Mean |Shapley attribution|"));
    }
    if (!r.at("external_test").is_null()) {
        const auto& e = r.at("external_test");
        json preds = json::array();
        for (const auto& p : e.at("predictions")) {
            auto q = p;
            q["group"] = e.at("group");
            preds.push_back(std::move(q));
        }
        detail::write_file(dir / "external_predicted_vs_observed.csv", predictions_csv(preds));
        detail::write_file(dir / "external_predicted_vs_observed.svg",
                           scatter_svg(preds, e.at("group").get<std::string>() + " (external test)"));
    }
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const json j = to_json(report);
    detail::write_file(dir / "report.json", j.dump(2) + "\n");
    if (report.champion_model) save_model(*report.champion_model, dir / "champion_model.json");
    render_report(j, dir);
}

}  // namespace degbench
