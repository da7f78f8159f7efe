#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace degbench {

enum class ColumnKind { numeric, categorical };
enum class ColumnRole { feature, target, group_id, time };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::string unit;  // informational only
    ColumnRole role = ColumnRole::feature;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

using Schema = std::vector<ColumnSpec>;

// Throws Error(schema) unless: exactly one target, at most one group-id and
// time column, unique names, and target/time numeric.
void validate_schema(const Schema& schema);

// Parses the key-value schema text format, one column per line:
//   name=Temperature; kind=numeric; unit=C; role=feature
// Blank lines and lines starting with '#' are ignored.
Schema parse_schema(const std::string& text);
Schema load_schema(const std::filesystem::path& path);
std::string format_schema(const Schema& schema);

// Column-major store. Numeric columns hold values; categorical and group-id
// columns hold text. After curate(), no categorical feature columns remain.
struct Column {
    ColumnSpec spec;
    std::vector<double> numeric;
    std::vector<std::string> text;

    [[nodiscard]] bool is_text() const {
        return spec.kind == ColumnKind::categorical || spec.role == ColumnRole::group_id;
    }
    [[nodiscard]] std::size_t size() const { return is_text() ? text.size() : numeric.size(); }

    friend bool operator==(const Column&, const Column&) = default;
};

// Model-ready view: feature matrix, target and per-row provenance.
struct Design {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::string> feature_names;
    std::vector<std::string> groups;
    std::vector<double> time;  // empty when the table has no time column
};

class DataTable {
public:
    DataTable() = default;
    explicit DataTable(std::vector<Column> columns);

    [[nodiscard]] std::size_t n_rows() const noexcept { return n_rows_; }
    [[nodiscard]] const std::vector<Column>& columns() const noexcept { return columns_; }
    [[nodiscard]] Schema schema() const;

    [[nodiscard]] const Column& column(const std::string& name) const;
    [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const;
    [[nodiscard]] const Column& target_column() const;
    [[nodiscard]] const Column* time_column() const;
    [[nodiscard]] const Column* group_column() const;

    // Features in declaration order (time included, it is a predictor).
    [[nodiscard]] std::vector<std::string> feature_names() const;
    [[nodiscard]] std::vector<double> target() const;
    // Device label per row; "all" when the schema has no group-id column.
    [[nodiscard]] std::vector<std::string> group_ids() const;
    [[nodiscard]] std::vector<double> times() const;

    [[nodiscard]] Design design() const;
    [[nodiscard]] Design design(const std::vector<std::size_t>& rows) const;
    // Restricts features to `names` (in that order); throws on unknown names.
    [[nodiscard]] Design design(const std::vector<std::size_t>& rows,
                                const std::vector<std::string>& names) const;

    [[nodiscard]] DataTable subset(const std::vector<std::size_t>& rows) const;
    [[nodiscard]] DataTable without_columns(const std::vector<std::string>& names) const;
    [[nodiscard]] DataTable with_target(std::vector<double> values) const;

    // Rows whose time value is <= cutoff; Error(benchmark) when empty.
    [[nodiscard]] std::vector<std::size_t> rows_up_to(double cutoff) const;

    friend bool operator==(const DataTable&, const DataTable&) = default;

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

// Raw ingestion: validates header against schema, parses numerics, rejects
// missing or malformed cells with the 1-based data row and column name.
DataTable load_csv(const std::filesystem::path& path, const Schema& schema);
DataTable parse_csv(const std::string& text, const Schema& schema);
std::string to_csv(const DataTable& table);
void write_csv(const DataTable& table, const std::filesystem::path& path);

// Divides the target by the value at each group's earliest time point.
DataTable normalize_target(const DataTable& table);

struct CurationEvent {
    std::string action;  // "drop_row", "drop_column", "one_hot"
    std::string subject; // column name or "row <i>"
    std::string reason;
};

struct CurationOptions {
    double corr_threshold = 0.9;
    bool dedup = true;
};

struct CurationResult {
    DataTable table;
    std::vector<CurationEvent> log;
};

CurationResult curate(const DataTable& table, const CurationOptions& options = {});
nlohmann::json curation_log_json(const std::vector<CurationEvent>& log);

// Population Pearson correlation; nullopt when either column is constant.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

enum class SplitMode { random_row, leave_group_out };

struct SplitConfig {
    double train_fraction = 0.9;
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::random_row;
    std::vector<std::string> holdout_groups;  // leave-group-out only
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
};

Split split(const DataTable& table, const SplitConfig& config);
// Random-row split over `n` abstract rows.
Split split_rows(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace degbench
