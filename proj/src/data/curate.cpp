#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "common/text.hpp"
#include "degbench/data.hpp"
#include "degbench/error.hpp"

namespace degbench {

namespace {

constexpr const char* kOneHotUnit = "one-hot";

bool is_numeric_feature(const Column& c) {
    return !c.is_text() && (c.spec.role == ColumnRole::feature || c.spec.role == ColumnRole::time);
}

bool encode_categoricals(std::vector<Column>& cols, std::vector<CurationEvent>& log) {
    bool changed = false;
    std::vector<Column> out;
    for (auto& c : cols) {
        if (!(c.spec.kind == ColumnKind::categorical && c.spec.role == ColumnRole::feature)) {
            out.push_back(std::move(c));
            continue;
        }
        std::set<std::string> levels(c.text.begin(), c.text.end());
        for (const auto& level : levels) {
            Column ind{ColumnSpec{c.spec.name + "=" + level, ColumnKind::numeric, kOneHotUnit,
                                  ColumnRole::feature},
                       {},
                       {}};
            for (const auto& v : c.text) ind.numeric.push_back(v == level ? 1.0 : 0.0);
            out.push_back(std::move(ind));
        }
        log.push_back({"one_hot", c.spec.name,
                       "categorical column expanded into " + std::to_string(levels.size()) +
                           " indicator columns"});
        changed = true;
    }
    cols = std::move(out);
    return changed;
}

bool rows_equal(const std::vector<Column>& cols, std::size_t a, std::size_t b) {
    for (const auto& c : cols) {
        if (c.is_text() ? c.text[a] != c.text[b] : c.numeric[a] != c.numeric[b]) return false;
    }
    return true;
}

bool drop_duplicate_rows(std::vector<Column>& cols, std::vector<std::size_t>& origin,
                         std::vector<CurationEvent>& log) {
    const std::size_t n = origin.size();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        auto dup = std::find_if(keep.begin(), keep.end(),
                                [&](std::size_t k) { return rows_equal(cols, k, i); });
        if (dup == keep.end()) {
            keep.push_back(i);
        } else {
            log.push_back({"drop_row", "row " + std::to_string(origin[i]),
                           "exact duplicate of row " + std::to_string(origin[*dup])});
        }
    }
    if (keep.size() == n) return false;
    for (auto& c : cols) {
        Column s{c.spec, {}, {}};
        for (auto k : keep) {
            if (c.is_text())
                s.text.push_back(c.text[k]);
            else
                s.numeric.push_back(c.numeric[k]);
        }
        c = std::move(s);
    }
    std::vector<std::size_t> kept_origin;
    for (auto k : keep) kept_origin.push_back(origin[k]);
    origin = std::move(kept_origin);
    return true;
}

bool drop_correlated(std::vector<Column>& cols, double threshold, std::vector<CurationEvent>& log) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (is_numeric_feature(cols[i]) && cols[i].spec.unit != kOneHotUnit) candidates.push_back(i);

    std::set<std::size_t> dropped;
    for (std::size_t a = 0; a < candidates.size(); ++a) {
        const auto i = candidates[a];
        if (dropped.count(i)) continue;
        for (std::size_t b = a + 1; b < candidates.size(); ++b) {
            const auto j = candidates[b];
            if (dropped.count(j)) continue;
            auto r = pearson(cols[i].numeric, cols[j].numeric);
            if (!r || std::abs(*r) < threshold) continue;
            // Later-declared column goes, except the time axis which is always kept.
            const bool j_is_time = cols[j].spec.role == ColumnRole::time;
            const auto drop = j_is_time ? i : j;
            const auto keep = j_is_time ? j : i;
            dropped.insert(drop);
            log.push_back({"drop_column", cols[drop].spec.name,
                           "|pearson r| = " + detail::format_double(std::abs(*r)) +
                               " >= " + detail::format_double(threshold) + " with '" +
                               cols[keep].spec.name + "' (kept, declared " +
                               (keep < drop ? "earlier" : "as time axis") + ")"});
            if (drop == i) break;
        }
    }
    if (dropped.empty()) return false;
    std::vector<Column> out;
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (!dropped.count(i)) out.push_back(std::move(cols[i]));
    cols = std::move(out);
    return true;
}

}  // namespace

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return std::nullopt;
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CurationResult curate(const DataTable& table, const CurationOptions& options) {
    if (!(options.corr_threshold > 0.0 && options.corr_threshold <= 1.0))
        throw Error(ErrorKind::curation, "corr_threshold must lie in (0, 1]");

    std::vector<Column> cols = table.columns();
    std::vector<std::size_t> origin(table.n_rows());
    for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = i;
    std::vector<CurationEvent> log;

    // Row and column filters interact, so iterate to a fixed point; this makes
    // curate(curate(T)) == curate(T).
    for (bool changed = true; changed;) {
        changed = encode_categoricals(cols, log);
        if (options.dedup) changed = drop_duplicate_rows(cols, origin, log) || changed;
        changed = drop_correlated(cols, options.corr_threshold, log) || changed;
    }

    DataTable out(std::move(cols));
    if (out.n_rows() < 2)
        throw Error(ErrorKind::curation, "curation left " + std::to_string(out.n_rows()) +
                                             " rows; at least 2 are required");
    const auto& y = out.target_column().numeric;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); }))
        throw Error(ErrorKind::curation,
                    "target column '" + out.target_column().spec.name + "' is constant");
    return {std::move(out), std::move(log)};
}

nlohmann::json curation_log_json(const std::vector<CurationEvent>& log) {
    auto arr = nlohmann::json::array();
    for (const auto& e : log) {
        nlohmann::json item;
        item["action"] = e.action;
        item[e.action == "drop_row" ? "row" : "column"] = e.subject;
        item["reason"] = e.reason;
        arr.push_back(std::move(item));
    }
    return arr;
}

}  // namespace degbench
