#include <fstream>
#include <set>
#include <sstream>

#include "degbench/data.hpp"
#include "degbench/error.hpp"
#include "common/text.hpp"

namespace degbench {

namespace {

ColumnKind parse_kind(const std::string& v, std::size_t line) {
    if (v == "numeric") return ColumnKind::numeric;
    if (v == "categorical") return ColumnKind::categorical;
    throw Error(ErrorKind::schema, "line " + std::to_string(line) + ": unknown kind '" + v + "'");
}

ColumnRole parse_role(const std::string& v, std::size_t line) {
    if (v == "feature") return ColumnRole::feature;
    if (v == "target") return ColumnRole::target;
    if (v == "group-id" || v == "group_id" || v == "group") return ColumnRole::group_id;
    if (v == "time") return ColumnRole::time;
    throw Error(ErrorKind::schema, "line " + std::to_string(line) + ": unknown role '" + v + "'");
}

const char* kind_name(ColumnKind k) { return k == ColumnKind::numeric ? "numeric" : "categorical"; }

const char* role_name(ColumnRole r) {
    switch (r) {
    case ColumnRole::feature: return "feature";
    case ColumnRole::target: return "target";
    case ColumnRole::group_id: return "group-id";
    case ColumnRole::time: return "time";
    }
    return "feature";
}

}  // namespace

void validate_schema(const Schema& schema) {
    std::set<std::string> names;
    int targets = 0, groups = 0, times = 0;
    for (const auto& c : schema) {
        if (c.name.empty()) throw Error(ErrorKind::schema, "column with empty name");
        if (!names.insert(c.name).second)
            throw Error(ErrorKind::schema, "duplicate column name '" + c.name + "'");
        switch (c.role) {
        case ColumnRole::target: ++targets; break;
        case ColumnRole::group_id: ++groups; break;
        case ColumnRole::time: ++times; break;
        case ColumnRole::feature: break;
        }
        if ((c.role == ColumnRole::target || c.role == ColumnRole::time) &&
            c.kind != ColumnKind::numeric)
            throw Error(ErrorKind::schema, "column '" + c.name + "' must be numeric");
    }
    if (targets != 1)
        throw Error(ErrorKind::schema,
                    "schema needs exactly one target column, found " + std::to_string(targets));
    if (groups > 1) throw Error(ErrorKind::schema, "schema has more than one group-id column");
    if (times > 1) throw Error(ErrorKind::schema, "schema has more than one time column");
}

Schema parse_schema(const std::string& text) {
    Schema schema;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        ColumnSpec spec;
        bool has_name = false;
        for (const auto& field : detail::split(line, ';')) {
            auto f = detail::trim(field);
            if (f.empty()) continue;
            auto eq = f.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::schema,
                            "line " + std::to_string(lineno) + ": expected key=value, got '" + f + "'");
            auto key = detail::trim(f.substr(0, eq));
            auto value = detail::trim(f.substr(eq + 1));
            if (key == "name") {
                spec.name = value;
                has_name = true;
            } else if (key == "kind") {
                spec.kind = parse_kind(value, lineno);
            } else if (key == "unit") {
                spec.unit = value;
            } else if (key == "role") {
                spec.role = parse_role(value, lineno);
            } else {
                throw Error(ErrorKind::schema,
                            "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        }
        if (!has_name)
            throw Error(ErrorKind::schema, "line " + std::to_string(lineno) + ": missing name");
        schema.push_back(std::move(spec));
    }
    validate_schema(schema);
    return schema;
}

Schema load_schema(const std::filesystem::path& path) {
    return parse_schema(detail::read_file(path));
}

std::string format_schema(const Schema& schema) {
    std::string out;
    for (const auto& c : schema) {
        out += "name=" + c.name + "; kind=" + kind_name(c.kind) + "; unit=" + c.unit +
               "; role=" + role_name(c.role) + "\n";
    }
    return out;
}

}  // namespace degbench
