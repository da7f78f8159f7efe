#include <cmath>
#include <random>

#include "degbench/error.hpp"
#include "degbench/pipeline.hpp"
#include "degbench/rng.hpp"

namespace degbench {

namespace {

// Rounds to a fixed number of decimals so the CSV holds short literals.
double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

// Fast burn-in followed by a slow tail, scaled so f(0) = 1.
ParametricModel default_decay() {
    const ParametricModel raw(ModelKind::gauss2, {0.55, -10.0, 45.0, 0.6, 20.0, 260.0});
    return raw.amplitude_scaled(1.0 / raw(0.0));
}

Schema synth_schema() {
    using K = ColumnKind;
    using R = ColumnRole;
    return {
        {"cell", K::categorical, "", R::group_id},
        {"solvent_htl", K::numeric, "uL", R::feature},
        {"p3ht", K::numeric, "mg", R::feature},
        {"pcbm", K::numeric, "mg", R::feature},
        {"ratio_p3ht_pcbm", K::numeric, "", R::feature},
        {"temperature", K::numeric, "C", R::feature},
        {"humidity", K::numeric, "%", R::feature},
        {"dew_point", K::numeric, "C", R::feature},
        {"pressure", K::numeric, "hPa", R::feature},
        {"day", K::numeric, "days", R::time},
        {"pce", K::numeric, "fraction", R::target},
    };
}

SynthResult synth_dataset(const SynthConfig& config) {
    if (config.n_cells < 1) throw Error(ErrorKind::config, "synthetic data needs at least one cell");
    if (config.days.empty() && config.total_rows < config.n_cells)
        throw Error(ErrorKind::config, "fewer rows than cells");
    if (!(config.noise_sd >= 0)) throw Error(ErrorKind::config, "noise SD must be non-negative");
    const ParametricModel base = config.decay ? *config.decay : default_decay();

    const auto schema = synth_schema();
    std::vector<Column> cols;
    for (const auto& spec : schema) cols.push_back({spec, {}, {}});
    auto col = [&](std::size_t i) -> Column& { return cols[i]; };

    SynthResult result;
    for (std::size_t c = 0; c < config.n_cells; ++c) {
        Rng cell_rng(derive_seed(config.seed, c, 1));
        Rng env_rng(derive_seed(config.seed, c, 2));
        Rng noise_rng(derive_seed(config.seed, c, 3));
        std::normal_distribution<double> noise(0.0, 1.0);

        SynthCell cell{"Cell" + std::to_string(c + 1), 0, 0, 0, 0, 1, 1, base};
        cell.solvent_ul = round_to(uniform(cell_rng, 250, 1000), 0);
        cell.p3ht_mg = round_to(uniform(cell_rng, 1.0, 1.2), 3);
        cell.pcbm_mg = round_to(uniform(cell_rng, 0.8, 1.0), 3);
        cell.ratio = round_to(uniform(cell_rng, 1.0, 1.25), 3);

        // Fixed rule: more HTL solvent (and, weakly, a higher blend ratio)
        // slows the decay and raises the initial efficiency; PCBM slightly
        // lowers it. Environmental columns have no effect (encapsulated cells).
        const double us = (cell.solvent_ul - 250.0) / 750.0;
        const double ur = (cell.ratio - 1.0) / 0.25;
        const double up = (cell.p3ht_mg - 1.0) / 0.2;
        const double uc = (cell.pcbm_mg - 0.8) / 0.2;
        cell.stretch = 0.6 + 1.0 * (1.0 - us) + 0.25 * (1.0 - ur);
        cell.amplitude = 0.02 * (0.6 + 0.9 * us + 0.3 * ur + 0.1 * up - 0.1 * uc);
        cell.curve = base.time_stretched(cell.stretch).amplitude_scaled(cell.amplitude);

        std::vector<double> days = config.days;
        if (days.empty()) {
            const std::size_t n = config.total_rows / config.n_cells + (c < config.total_rows % config.n_cells);
            for (std::size_t k = 0; k < n; ++k)
                days.push_back(n == 1 ? 0.0
                                      : std::round(config.max_day * static_cast<double>(k) /
                                                   static_cast<double>(n - 1)));
        }

        for (double day : days) {
            col(0).text.push_back(cell.name);
            col(1).numeric.push_back(cell.solvent_ul);
            col(2).numeric.push_back(cell.p3ht_mg);
            col(3).numeric.push_back(cell.pcbm_mg);
            col(4).numeric.push_back(cell.ratio);
            col(5).numeric.push_back(round_to(uniform(env_rng, 12, 23), 1));
            col(6).numeric.push_back(round_to(uniform(env_rng, 33, 88), 1));
            col(7).numeric.push_back(round_to(uniform(env_rng, 3, 19), 1));
            col(8).numeric.push_back(round_to(uniform(env_rng, 997, 1022), 1));
            col(9).numeric.push_back(day);
            const double eps = config.noise_sd > 0 ? config.noise_sd * noise(noise_rng) : 0.0;
            col(10).numeric.push_back(cell.curve(day) + cell.amplitude * eps);
        }
        result.cells.push_back(std::move(cell));
    }
    result.table = DataTable(std::move(cols));
    return result;
}

}  // namespace degbench
