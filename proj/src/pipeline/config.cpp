#include <algorithm>
#include <cmath>
#include <set>

#include "common/text.hpp"
#include "degbench/error.hpp"
#include "degbench/pipeline.hpp"

namespace degbench {

namespace {

std::vector<std::string> list_items(const std::string& key, const std::string& value) {
    std::vector<std::string> out;
    for (const auto& raw : detail::split(value, ',')) {
        auto item = detail::trim(raw);
        if (item.empty()) throw Error(ErrorKind::config, "empty item in list '" + key + "'");
        out.push_back(std::move(item));
    }
    return out;
}

double number(const std::string& key, const std::string& text) {
    const auto v = detail::parse_double(text);
    if (!v || !std::isfinite(*v))
        throw Error(ErrorKind::config, "'" + key + "': '" + text + "' is not a number");
    return *v;
}

std::size_t count(const std::string& key, const std::string& text) {
    const double v = number(key, text);
    if (v < 0 || v != std::floor(v))
        throw Error(ErrorKind::config, "'" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::uint64_t seed_value(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw Error(ErrorKind::config, "'" + key + "': '" + text + "' is not a 64-bit seed");
    return v;
}

bool flag(const std::string& key, const std::string& text) {
    if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
    if (text == "off" || text == "false" || text == "0" || text == "no") return false;
    throw Error(ErrorKind::config, "'" + key + "': expected on/off, got '" + text + "'");
}

}  // namespace

BenchmarkConfig parse_benchmark_config(const std::string& text) {
    BenchmarkConfig c;
    std::set<std::string> seen;
    int line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        const auto line = detail::trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::config, "line " + std::to_string(line_no) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw Error(ErrorKind::config, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");

        if (key == "families") {
            c.families.clear();
            for (const auto& f : list_items(key, value)) c.families.push_back(parse_family(f));
        } else if (key == "train_fractions") {
            c.train_fractions.clear();
            for (const auto& f : list_items(key, value)) c.train_fractions.push_back(number(key, f));
        } else if (key == "seeds") {
            c.seeds.clear();
            for (const auto& s : list_items(key, value)) c.seeds.push_back(seed_value(key, s));
        } else if (key == "pfi_variants") {
            c.pfi_variants.clear();
            for (const auto& s : list_items(key, value)) c.pfi_variants.push_back(flag(key, s));
        } else if (key == "time_cutoffs") {
            c.time_cutoffs.clear();
            for (const auto& s : list_items(key, value)) c.time_cutoffs.push_back(number(key, s));
        } else if (key == "search_budget") {
            c.search_budget = count(key, value);
        } else if (key == "base_seed") {
            c.base_seed = seed_value(key, value);
        } else if (key == "pfi_threshold") {
            c.pfi_threshold = number(key, value);
        } else if (key == "pfi_repeats") {
            c.pfi_repeats = count(key, value);
        } else if (key == "kfold") {
            c.kfold = count(key, value);
        } else if (key == "z_threshold") {
            c.z_threshold = number(key, value);
        } else if (key == "shapley_background") {
            c.shapley_background = count(key, value);
        } else if (key == "shapley_max_rows") {
            c.shapley_max_rows = count(key, value);
        } else if (key == "holdout_group") {
            if (value.empty()) throw Error(ErrorKind::config, "'holdout_group' is empty");
            c.holdout_group = value;
        } else {
            throw Error(ErrorKind::config, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    validate_config(c);
    return c;
}

BenchmarkConfig load_benchmark_config(const std::filesystem::path& path) {
    return parse_benchmark_config(detail::read_file(path));
}

void validate_config(const BenchmarkConfig& c) {
    if (c.families.empty()) throw Error(ErrorKind::config, "no learner families configured");
    if (c.train_fractions.empty()) throw Error(ErrorKind::config, "no train fractions configured");
    if (c.seeds.empty()) throw Error(ErrorKind::config, "no seeds configured");
    if (c.pfi_variants.empty()) throw Error(ErrorKind::config, "no PFI variants configured");
    if (c.time_cutoffs.empty()) throw Error(ErrorKind::config, "no time cutoffs configured");
    for (double f : c.train_fractions)
        if (!(f > 0 && f < 1)) throw Error(ErrorKind::config, "train fraction must lie in (0, 1)");
    if (!std::is_sorted(c.time_cutoffs.begin(), c.time_cutoffs.end()) ||
        std::adjacent_find(c.time_cutoffs.begin(), c.time_cutoffs.end()) != c.time_cutoffs.end())
        throw Error(ErrorKind::config, "time cutoffs must be strictly ascending");
    if (c.search_budget < 1) throw Error(ErrorKind::config, "search budget must be at least 1");
    if (c.pfi_repeats < 5) throw Error(ErrorKind::config, "PFI needs at least 5 repeats");
    if (!(c.pfi_threshold >= 0 && c.pfi_threshold <= 1))
        throw Error(ErrorKind::config, "PFI threshold must lie in [0, 1]");
    if (c.kfold < 2) throw Error(ErrorKind::config, "k-fold needs k >= 2");
    if (!(c.z_threshold > 0)) throw Error(ErrorKind::config, "z threshold must be positive");
    if (c.shapley_background < 1) throw Error(ErrorKind::config, "Shapley background must be nonempty");
}

nlohmann::json to_json(const BenchmarkConfig& c) {
    nlohmann::json j;
    j["families"] = nlohmann::json::array();
    for (auto f : c.families) j["families"].push_back(std::string(to_string(f)));
    j["train_fractions"] = c.train_fractions;
    j["seeds"] = c.seeds;
    j["pfi_variants"] = nlohmann::json::array();
    for (bool v : c.pfi_variants) j["pfi_variants"].push_back(v);
    j["time_cutoffs"] = c.time_cutoffs;
    j["search_budget"] = c.search_budget;
    j["base_seed"] = c.base_seed;
    j["pfi_threshold"] = c.pfi_threshold;
    j["pfi_repeats"] = c.pfi_repeats;
    j["kfold"] = c.kfold;
    j["z_threshold"] = c.z_threshold;
    j["shapley_background"] = c.shapley_background;
    j["shapley_max_rows"] = c.shapley_max_rows;
    j["holdout_group"] = c.holdout_group ? nlohmann::json(*c.holdout_group) : nlohmann::json();
    return j;
}

}  // namespace degbench
