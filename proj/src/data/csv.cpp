#include <algorithm>
#include <cmath>
#include <map>

#include "common/text.hpp"
#include "degbench/data.hpp"
#include "degbench/error.hpp"

namespace degbench {

namespace {

// Splits one CSV record, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line, std::size_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(detail::trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted)
        throw Error(ErrorKind::parse, "line " + std::to_string(lineno) + ": unterminated quote");
    fields.push_back(detail::trim(cur));
    return fields;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

DataTable parse_csv(const std::string& text, const Schema& schema) {
    validate_schema(schema);

    std::vector<std::string> lines;
    for (auto& l : detail::split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        lines.push_back(std::move(l));
    }
    while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw Error(ErrorKind::parse, "CSV is empty (no header row)");

    auto header = split_record(lines[0], 1);
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!position.emplace(header[i], i).second)
            throw Error(ErrorKind::parse, "header repeats column '" + header[i] + "'");
    }
    std::vector<std::string> missing, extra;
    for (const auto& spec : schema)
        if (!position.count(spec.name)) missing.push_back(spec.name);
    for (const auto& h : header)
        if (std::none_of(schema.begin(), schema.end(), [&](const auto& s) { return s.name == h; }))
            extra.push_back(h);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "header does not match schema";
        for (const auto& m : missing) msg += "; missing '" + m + "'";
        for (const auto& e : extra) msg += "; unexpected '" + e + "'";
        throw Error(ErrorKind::parse, msg);
    }

    std::vector<Column> columns;
    for (const auto& spec : schema) columns.push_back(Column{spec, {}, {}});

    std::size_t data_row = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (detail::trim(lines[li]).empty()) continue;
        ++data_row;
        auto fields = split_record(lines[li], li + 1);
        if (fields.size() != header.size())
            throw Error(ErrorKind::parse, "row " + std::to_string(data_row) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
        for (auto& col : columns) {
            const auto& cell = fields[position.at(col.spec.name)];
            if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan")
                throw Error(ErrorKind::parse, "row " + std::to_string(data_row) + ", column '" +
                                                  col.spec.name + "': missing value");
            if (col.is_text()) {
                col.text.push_back(cell);
                continue;
            }
            auto v = detail::parse_double(cell);
            if (!v || !std::isfinite(*v))
                throw Error(ErrorKind::parse, "row " + std::to_string(data_row) + ", column '" +
                                                  col.spec.name + "': non-numeric value '" + cell +
                                                  "'");
            col.numeric.push_back(*v);
        }
    }
    if (data_row == 0) throw Error(ErrorKind::parse, "CSV has a header but no data rows");
    return DataTable(std::move(columns));
}

DataTable load_csv(const std::filesystem::path& path, const Schema& schema) {
    if (!std::filesystem::exists(path))
        throw Error(ErrorKind::io, "input file '" + path.string() + "' does not exist");
    try {
        return parse_csv(detail::read_file(path), schema);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse)
            throw Error(ErrorKind::parse, path.string() + ": " + e.what());
        throw;
    }
}

std::string to_csv(const DataTable& table) {
    std::string out;
    const auto& cols = table.columns();
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (j) out += ',';
        out += quote_if_needed(cols[j].spec.name);
    }
    out += '\n';
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (j) out += ',';
            out += cols[j].is_text() ? quote_if_needed(cols[j].text[i])
                                     : detail::format_double(cols[j].numeric[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const DataTable& table, const std::filesystem::path& path) {
    detail::write_file(path, to_csv(table));
}

}  // namespace degbench
