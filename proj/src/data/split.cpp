#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "degbench/data.hpp"
#include "degbench/error.hpp"
#include "degbench/rng.hpp"

namespace degbench {

Split split_rows(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error(ErrorKind::split, "train_fraction must lie in (0, 1)");
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n)
        throw Error(ErrorKind::split, "train fraction " + std::to_string(train_fraction) + " on " +
                                          std::to_string(n) +
                                          " rows leaves an empty train or validation set");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle_in_place(std::span(order), rng);

    Split s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    return s;
}

Split split(const DataTable& table, const SplitConfig& config) {
    const std::size_t n = table.n_rows();
    if (config.mode == SplitMode::random_row) {
        if (n < 5)
            throw Error(ErrorKind::split,
                        "random-row split needs at least 5 rows, table has " + std::to_string(n));
        return split_rows(n, config.train_fraction, config.seed);
    }

    const auto groups = table.group_ids();
    const std::set<std::string> distinct(groups.begin(), groups.end());
    if (distinct.size() < 2)
        throw Error(ErrorKind::split, "leave-group-out split needs at least 2 distinct groups");
    if (config.holdout_groups.empty())
        throw Error(ErrorKind::split, "leave-group-out split needs at least one held-out group");
    for (const auto& g : config.holdout_groups)
        if (!distinct.count(g)) throw Error(ErrorKind::split, "group '" + g + "' not present");

    Split s;
    for (std::size_t i = 0; i < n; ++i) {
        const bool held = std::find(config.holdout_groups.begin(), config.holdout_groups.end(),
                                    groups[i]) != config.holdout_groups.end();
        (held ? s.valid : s.train).push_back(i);
    }
    if (s.train.empty())
        throw Error(ErrorKind::split, "leave-group-out split holds out every row");
    return s;
}

}  // namespace degbench
