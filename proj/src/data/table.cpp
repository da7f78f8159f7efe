#include "degbench/data.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "degbench/error.hpp"

namespace degbench {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::curation: return "curation";
    case ErrorKind::split: return "split";
    case ErrorKind::metrics: return "metrics";
    case ErrorKind::jv: return "jv";
    case ErrorKind::fit: return "fit";
    case ErrorKind::forecast: return "forecast";
    case ErrorKind::training: return "training";
    case ErrorKind::prediction: return "prediction";
    case ErrorKind::config: return "config";
    case ErrorKind::benchmark: return "benchmark";
    case ErrorKind::verification: return "verification";
    case ErrorKind::shapley: return "shapley";
    case ErrorKind::leakage: return "leakage";
    }
    return "unknown";
}

DataTable::DataTable(std::vector<Column> columns) : columns_(std::move(columns)) {
    Schema schema;
    for (const auto& c : columns_) schema.push_back(c.spec);
    validate_schema(schema);
    n_rows_ = columns_.empty() ? 0 : columns_.front().size();
    for (const auto& c : columns_) {
        if (c.size() != n_rows_)
            throw Error(ErrorKind::schema, "column '" + c.spec.name + "' has " +
                                               std::to_string(c.size()) + " rows, expected " +
                                               std::to_string(n_rows_));
    }
}

Schema DataTable::schema() const {
    Schema out;
    for (const auto& c : columns_) out.push_back(c.spec);
    return out;
}

std::optional<std::size_t> DataTable::find(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].spec.name == name) return i;
    return std::nullopt;
}

const Column& DataTable::column(const std::string& name) const {
    auto idx = find(name);
    if (!idx) throw Error(ErrorKind::schema, "no column named '" + name + "'");
    return columns_[*idx];
}

const Column& DataTable::target_column() const {
    for (const auto& c : columns_)
        if (c.spec.role == ColumnRole::target) return c;
    throw Error(ErrorKind::schema, "table has no target column");
}

const Column* DataTable::time_column() const {
    for (const auto& c : columns_)
        if (c.spec.role == ColumnRole::time) return &c;
    return nullptr;
}

const Column* DataTable::group_column() const {
    for (const auto& c : columns_)
        if (c.spec.role == ColumnRole::group_id) return &c;
    return nullptr;
}

std::vector<std::string> DataTable::feature_names() const {
    std::vector<std::string> names;
    for (const auto& c : columns_)
        if (c.spec.role == ColumnRole::feature || c.spec.role == ColumnRole::time)
            names.push_back(c.spec.name);
    return names;
}

std::vector<double> DataTable::target() const { return target_column().numeric; }

std::vector<std::string> DataTable::group_ids() const {
    if (const auto* g = group_column()) return g->text;
    return std::vector<std::string>(n_rows_, "all");
}

std::vector<double> DataTable::times() const {
    if (const auto* t = time_column()) return t->numeric;
    return {};
}

Design DataTable::design() const {
    std::vector<std::size_t> rows(n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) rows[i] = i;
    return design(rows);
}

Design DataTable::design(const std::vector<std::size_t>& rows) const {
    return design(rows, feature_names());
}

Design DataTable::design(const std::vector<std::size_t>& rows,
                         const std::vector<std::string>& names) const {
    Design d;
    d.feature_names = names;
    d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const Column& c = column(names[j]);
        if (c.is_text())
            throw Error(ErrorKind::schema,
                        "column '" + names[j] + "' is not numeric; curate the table first");
        for (std::size_t i = 0; i < rows.size(); ++i)
            d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.numeric.at(rows[i]);
    }
    const auto& target = target_column().numeric;
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    const auto groups = group_ids();
    const Column* time = time_column();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.y(static_cast<Eigen::Index>(i)) = target.at(rows[i]);
        d.groups.push_back(groups.at(rows[i]));
        if (time) d.time.push_back(time->numeric.at(rows[i]));
    }
    return d;
}

DataTable DataTable::subset(const std::vector<std::size_t>& rows) const {
    std::vector<Column> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column s{c.spec, {}, {}};
        if (c.is_text()) {
            for (auto r : rows) s.text.push_back(c.text.at(r));
        } else {
            for (auto r : rows) s.numeric.push_back(c.numeric.at(r));
        }
        out.push_back(std::move(s));
    }
    return DataTable(std::move(out));
}

DataTable DataTable::without_columns(const std::vector<std::string>& names) const {
    std::vector<Column> out;
    for (const auto& c : columns_)
        if (std::find(names.begin(), names.end(), c.spec.name) == names.end()) out.push_back(c);
    return DataTable(std::move(out));
}

DataTable DataTable::with_target(std::vector<double> values) const {
    if (values.size() != n_rows_)
        throw Error(ErrorKind::schema, "replacement target has wrong length");
    auto cols = columns_;
    for (auto& c : cols)
        if (c.spec.role == ColumnRole::target) c.numeric = std::move(values);
    return DataTable(std::move(cols));
}

std::vector<std::size_t> DataTable::rows_up_to(double cutoff) const {
    const Column* time = time_column();
    if (!time) throw Error(ErrorKind::benchmark, "table has no time column to apply a cutoff");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n_rows_; ++i)
        if (time->numeric[i] <= cutoff) rows.push_back(i);
    if (rows.empty())
        throw Error(ErrorKind::benchmark,
                    "empty cutoff window: no rows with time <= " + std::to_string(cutoff));
    return rows;
}

DataTable normalize_target(const DataTable& table) {
    const Column* time = table.time_column();
    if (!time) throw Error(ErrorKind::schema, "normalizing the target requires a time column");
    const auto groups = table.group_ids();
    const auto& y = table.target_column().numeric;

    std::map<std::string, std::pair<double, double>> initial;  // group -> (time, value)
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        auto [it, inserted] = initial.try_emplace(groups[i], time->numeric[i], y[i]);
        if (!inserted && time->numeric[i] < it->second.first) it->second = {time->numeric[i], y[i]};
    }
    std::vector<double> normalized(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        const double base = initial.at(groups[i]).second;
        if (base == 0.0)
            throw Error(ErrorKind::curation,
                        "group '" + groups[i] + "' has zero initial target; cannot normalize");
        normalized[i] = y[i] / base;
    }
    return table.with_target(std::move(normalized));
}

}  // namespace degbench
