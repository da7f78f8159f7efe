#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "degbench/error.hpp"
#include "degbench/parallel.hpp"
#include "degbench/pipeline.hpp"
#include "degbench/rng.hpp"

namespace degbench {

namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

// The split depends only on (replicate, cutoff, fraction) so every family
// and variant of a cell sees the same partition.
std::uint64_t split_seed(const BenchmarkConfig& c, const BenchmarkEntry& e) {
    return derive_seed(c.base_seed, e.seed, bits(e.cutoff), bits(e.train_fraction), 0x5b1ULL);
}

std::uint64_t learner_seed(const BenchmarkConfig& c, const BenchmarkEntry& e) {
    return derive_seed(c.base_seed, e.seed, bits(e.cutoff), bits(e.train_fraction),
                       static_cast<std::uint64_t>(e.family), 0x1ea7ULL);
}

std::string percent(double f) { return std::to_string(static_cast<int>(std::lround(f * 100))); }

std::vector<std::size_t> sweep_rows(const DataTable& table, const BenchmarkConfig& c, double cutoff) {
    auto rows = table.rows_up_to(cutoff);
    if (c.holdout_group) {
        const auto groups = table.group_ids();
        std::erase_if(rows, [&](std::size_t r) { return groups[r] == *c.holdout_group; });
        if (rows.empty())
            throw Error(ErrorKind::benchmark, "no rows left after removing the held-out group");
    }
    return rows;
}

}  // namespace

std::string BenchmarkEntry::label() const {
    std::string out = std::string(to_string(family)) + "-" + percent(train_fraction) + "-" +
                      percent(1.0 - train_fraction);
    if (pfi) out += "-PFI";
    return out;
}

EntryFit fit_entry(const DataTable& table, const BenchmarkConfig& config, BenchmarkEntry& entry) {
    EntryFit fit;
    fit.data = table.subset(sweep_rows(table, config, entry.cutoff));
    SplitConfig sc;
    sc.train_fraction = entry.train_fraction;
    sc.seed = split_seed(config, entry);
    fit.split = split(fit.data, sc);
    entry.n_train = fit.split.train.size();
    entry.n_valid = fit.split.valid.size();

    const std::uint64_t seed = learner_seed(config, entry);
    auto train_d = fit.data.design(fit.split.train);
    auto valid_d = fit.data.design(fit.split.valid);
    auto search = search_hyperparams(entry.family, train_d.x, train_d.y, valid_d.x, valid_d.y,
                                     config.search_budget, seed, train_d.feature_names);
    TrainedModel model = train(search.best, train_d);

    if (entry.pfi) {
        fit.selection_pfi = permutation_importance(model, valid_d.x, valid_d.y, config.pfi_repeats,
                                                   derive_seed(seed, 0x9f1ULL));
        const auto keep = select_by_importance(*fit.selection_pfi, config.pfi_threshold);
        train_d = fit.data.design(fit.split.train, keep);
        valid_d = fit.data.design(fit.split.valid, keep);
        search = search_hyperparams(entry.family, train_d.x, train_d.y, valid_d.x, valid_d.y,
                                    config.search_budget, seed, keep);
        model = train(search.best, train_d);
    }

    entry.spec = model.spec();
    entry.features = model.feature_names();
    entry.train_metrics = model.training_metrics();
    entry.valid_metrics = evaluate(valid_d.y, model.predict(valid_d));
    fit.model = std::move(model);
    return fit;
}

SweepResult run_sweep(const DataTable& table, const BenchmarkConfig& config, std::size_t jobs) {
    validate_config(config);
    for (double cutoff : config.time_cutoffs) (void)sweep_rows(table, config, cutoff);

    SweepResult result;
    for (double cutoff : config.time_cutoffs)
        for (Family family : config.families)
            for (double fraction : config.train_fractions)
                for (bool pfi : config.pfi_variants)
                    for (std::uint64_t seed : config.seeds) {
                        BenchmarkEntry e;
                        e.cutoff = cutoff;
                        e.family = family;
                        e.train_fraction = fraction;
                        e.pfi = pfi;
                        e.seed = seed;
                        result.entries.push_back(std::move(e));
                    }

    parallel_for(result.entries.size(), jobs, [&](std::size_t i) {
        auto& e = result.entries[i];
        try {
            (void)fit_entry(table, config, e);
        } catch (const Error& err) {
            e.valid_metrics.reset();
            e.error = std::string(to_string(err.kind())) + ": " + err.what();
        }
    });

    for (double cutoff : config.time_cutoffs) {
        CutoffChampion c;
        c.cutoff = cutoff;
        for (std::size_t i = 0; i < result.entries.size(); ++i)
            if (result.entries[i].cutoff == cutoff && result.entries[i].ok()) c.by_rmse.push_back(i);
        c.by_r2 = c.by_rmse;
        const auto& es = result.entries;
        std::stable_sort(c.by_rmse.begin(), c.by_rmse.end(), [&](std::size_t a, std::size_t b) {
            return es[a].valid_metrics->rmse < es[b].valid_metrics->rmse;
        });
        std::stable_sort(c.by_r2.begin(), c.by_r2.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = es[a].valid_metrics->r2;
            const auto& rb = es[b].valid_metrics->r2;
            if (ra.has_value() != rb.has_value()) return ra.has_value();
            return ra && *ra > *rb;
        });
        if (!c.by_rmse.empty()) c.entry = c.by_rmse.front();
        result.champions.push_back(std::move(c));
    }
    return result;
}

BenchmarkReport run_benchmark(const DataTable& table, const BenchmarkConfig& config,
                              std::size_t jobs) {
    BenchmarkReport report;
    report.config = config;
    if (config.holdout_group) {
        const auto groups = table.group_ids();
        if (std::find(groups.begin(), groups.end(), *config.holdout_group) == groups.end())
            throw Error(ErrorKind::benchmark, "held-out group '" + *config.holdout_group + "' not in table");
    }
    report.sweep = run_sweep(table, config, jobs);

    for (auto it = report.sweep.champions.rbegin(); it != report.sweep.champions.rend(); ++it) {
        if (it->entry) {
            report.champion = it->entry;
            break;
        }
    }
    if (!report.champion) return report;

    BenchmarkEntry entry = report.sweep.entries[*report.champion];
    EntryFit fit = fit_entry(table, config, entry);
    const TrainedModel& model = *fit.model;
    const std::uint64_t seed = learner_seed(config, entry);

    SplitConfig sc;
    sc.train_fraction = entry.train_fraction;
    sc.seed = split_seed(config, entry);
    report.verification = verify(model.spec(), fit.data, sc, config.kfold, model.feature_names(), jobs);

    const auto train_d = fit.data.design(fit.split.train, model.feature_names());
    const auto valid_d = fit.data.design(fit.split.valid, model.feature_names());
    report.importance = permutation_importance(model, valid_d.x, valid_d.y, config.pfi_repeats,
                                               derive_seed(seed, 0x1a9ULL));

    // Background: a seeded sample of training rows; explained: validation rows.
    std::vector<std::size_t> bg(fit.split.train.size());
    std::iota(bg.begin(), bg.end(), std::size_t{0});
    if (bg.size() > config.shapley_background) {
        Rng rng(derive_seed(seed, 0xb9ULL));
        shuffle_in_place(std::span<std::size_t>(bg), rng);
        bg.resize(config.shapley_background);
        std::sort(bg.begin(), bg.end());
    }
    Eigen::MatrixXd background(static_cast<Eigen::Index>(bg.size()), train_d.x.cols());
    for (std::size_t i = 0; i < bg.size(); ++i)
        background.row(static_cast<Eigen::Index>(i)) = train_d.x.row(static_cast<Eigen::Index>(bg[i]));
    const std::size_t n_explain = std::min<std::size_t>(config.shapley_max_rows, fit.split.valid.size());
    if (n_explain > 0 && model.feature_names().size() <= kMaxShapleyFeatures) {
        report.attribution = shapley(model, valid_d.x.topRows(static_cast<Eigen::Index>(n_explain)),
                                     background, jobs);
        for (auto i : bg) report.attribution->background_rows.push_back(fit.split.train[i]);
        report.attribution->explained_rows.assign(fit.split.valid.begin(),
                                                  fit.split.valid.begin() + static_cast<long>(n_explain));
    }

    std::vector<std::size_t> all(fit.data.n_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto all_d = fit.data.design(all, model.feature_names());
    if (all_d.x.rows() >= 3)
        report.outliers = detect_outliers(model, all_d.x, all_d.y, config.z_threshold);

    const Eigen::VectorXd pred = model.predict(valid_d);
    for (std::size_t i = 0; i < fit.split.valid.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        report.predictions.push_back({fit.split.valid[i], valid_d.groups[i],
                                      valid_d.time.empty() ? 0.0 : valid_d.time[i], valid_d.y(r),
                                      pred(r)});
    }

    if (config.holdout_group) {
        const auto within = table.subset(table.rows_up_to(entry.cutoff));
        report.external = external_test(model, within, *config.holdout_group);
    }
    report.champion_model = model;
    return report;
}

}  // namespace degbench
