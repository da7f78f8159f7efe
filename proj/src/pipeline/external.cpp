#include <algorithm>

#include "degbench/error.hpp"
#include "degbench/pipeline.hpp"

namespace degbench {

ExternalResult external_test(const TrainedModel& model, const DataTable& table,
                             const std::string& group, bool leakage_guard) {
    const auto groups = table.group_ids();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (groups[i] == group) rows.push_back(i);
    if (rows.empty()) throw Error(ErrorKind::prediction, "group '" + group + "' is not present in the table");

    ExternalResult out;
    out.group = group;
    const auto& seen = model.training_groups();
    if (std::binary_search(seen.begin(), seen.end(), group)) {
        if (leakage_guard)
            throw Error(ErrorKind::leakage, "model was trained on rows of group '" + group +
                                                "'; an external test needs an unseen group");
        out.leakage = true;
    }

    if (const auto* t = table.time_column()) {
        std::stable_sort(rows.begin(), rows.end(),
                         [&](std::size_t a, std::size_t b) { return t->numeric[a] < t->numeric[b]; });
    }
    Design d;
    try {
        d = table.design(rows, model.feature_names());
    } catch (const Error& e) {
        throw Error(ErrorKind::prediction, std::string("feature mismatch: ") + e.what());
    }
    const Eigen::VectorXd pred = model.predict(d);
    out.metrics = evaluate(d.y, pred);
    if (!out.metrics.r2) out.r2_note = "R^2 undefined: constant observed vector";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out.rows.push_back({rows[i], group, d.time.empty() ? 0.0 : d.time[i], d.y(r), pred(r)});
    }
    return out;
}

nlohmann::json to_json(const ExternalResult& r) {
    nlohmann::json j;
    j["group"] = r.group;
    j["partition"] = "external (held-out group)";
    j["metrics"] = to_json(r.metrics);
    if (!r.r2_note.empty()) j["r2_note"] = r.r2_note;
    j["leakage_warning"] = r.leakage;
    j["predictions"] = nlohmann::json::array();
    for (const auto& p : r.rows)
        j["predictions"].push_back(
            {{"row", p.row}, {"time", p.time}, {"observed", p.observed}, {"predicted", p.predicted}});
    return j;
}

}  // namespace degbench
