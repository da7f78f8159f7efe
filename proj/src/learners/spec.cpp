#include <algorithm>
#include <cmath>

#include "common/text.hpp"
#include "degbench/error.hpp"
#include "degbench/learners.hpp"

namespace degbench {

std::string_view to_string(Family family) {
    switch (family) {
    case Family::MVL: return "MVL";
    case Family::RF: return "RF";
    case Family::GB: return "GB";
    case Family::NN: return "NN";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (auto f : kAllFamilies)
        if (to_string(f) == name) return f;
    throw Error(ErrorKind::config,
                "unknown learner family '" + std::string(name) + "' (expected MVL, RF, GB or NN)");
}

Hyperparams default_hyperparams(Family family) { return hyperparam_grid(family).front(); }

std::vector<Hyperparams> hyperparam_grid(Family family) {
    std::vector<Hyperparams> grid;
    switch (family) {
    case Family::MVL: grid.push_back({}); break;
    case Family::RF:
        for (double trees : {100.0, 400.0})
            for (double depth : {0.0, 10.0})
                for (double leaf : {1.0, 3.0})
                    for (double sqrt_features : {0.0, 1.0})
                        grid.push_back({{"n_trees", trees},
                                        {"max_depth", depth},
                                        {"min_leaf", leaf},
                                        {"max_features_sqrt", sqrt_features},
                                        {"bootstrap", 1.0}});
        break;
    case Family::GB:
        for (double trees : {100.0, 300.0})
            for (double lr : {0.1, 0.05})
                for (double depth : {3.0, 2.0})
                    grid.push_back({{"n_trees", trees},
                                    {"learning_rate", lr},
                                    {"max_depth", depth},
                                    {"min_leaf", 1.0}});
        break;
    case Family::NN:
        for (double hidden : {32.0, 8.0})
            for (double lr : {1e-2, 1e-3})
                grid.push_back({{"hidden", hidden},
                                {"learning_rate", lr},
                                {"epochs", 2000.0},
                                {"momentum", 0.9}});
        break;
    }
    return grid;
}

LearnerSpec complete_spec(LearnerSpec spec) {
    const auto defaults = default_hyperparams(spec.family);
    for (const auto& [k, v] : spec.hyperparams) {
        if (!defaults.count(k))
            throw Error(ErrorKind::config, "hyperparameter '" + k + "' does not apply to " +
                                               std::string(to_string(spec.family)));
        if (!std::isfinite(v))
            throw Error(ErrorKind::config, "hyperparameter '" + k + "' must be finite");
    }
    for (const auto& [k, v] : defaults) spec.hyperparams.try_emplace(k, v);
    return spec;
}

std::string describe(const LearnerSpec& spec) {
    std::string out(to_string(spec.family));
    out += "{";
    bool first = true;
    for (const auto& [k, v] : spec.hyperparams) {
        if (!first) out += ", ";
        first = false;
        out += k + "=" + detail::format_double(v);
    }
    return out + "}";
}

}  // namespace degbench
