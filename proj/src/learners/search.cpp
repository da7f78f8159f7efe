#include <numeric>

#include "degbench/error.hpp"
#include "degbench/learners.hpp"
#include "degbench/rng.hpp"

namespace degbench {

SearchResult search_hyperparams(Family family, const Eigen::MatrixXd& x_train,
                                const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_valid,
                                const Eigen::VectorXd& y_valid, std::size_t budget,
                                std::uint64_t seed, const std::vector<std::string>& feature_names) {
    if (budget < 1) throw Error(ErrorKind::config, "search budget must be at least 1");
    const auto grid = hyperparam_grid(family);

    // Default first, then the remaining grid points in seeded order.
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5ea4c4ULL));
    shuffle_in_place(std::span<std::size_t>(order).subspan(1), rng);
    order.resize(std::min(budget, order.size()));

    SearchResult result;
    std::optional<double> best;
    for (std::size_t idx : order) {
        SearchTrial trial{complete_spec({family, grid[idx], seed}), std::nullopt, {}};
        try {
            const auto model = train(trial.spec, x_train, y_train, feature_names);
            trial.valid_rmse = rmse(as_span(y_valid), as_span(model.predict(x_valid)));
            if (!best || *trial.valid_rmse < *best) {
                best = trial.valid_rmse;
                result.best = trial.spec;
            }
        } catch (const Error& e) {
            trial.error = e.what();
        }
        result.trials.push_back(std::move(trial));
    }
    if (!best)
        throw Error(ErrorKind::training, "every " + std::string(to_string(family)) +
                                             " candidate failed: " + result.trials.front().error);
    return result;
}

LearnerSpec hyperparam_search(Family family, const Eigen::MatrixXd& x_train,
                              const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_valid,
                              const Eigen::VectorXd& y_valid, std::size_t budget,
                              std::uint64_t seed) {
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < x_train.cols(); ++j) names.push_back("x" + std::to_string(j));
    return search_hyperparams(family, x_train, y_train, x_valid, y_valid, budget, seed, names).best;
}

}  // namespace degbench
