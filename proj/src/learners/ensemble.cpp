#include <cmath>
#include <numeric>

#include "degbench/rng.hpp"
#include "learners/internal.hpp"

namespace degbench::detail {

namespace {

int as_int(const Hyperparams& hp, const char* key) {
    return static_cast<int>(std::lround(hp.at(key)));
}

}  // namespace

ForestState fit_forest(const Hyperparams& hp, std::uint64_t seed, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y) {
    const auto n = static_cast<std::size_t>(x.rows());
    const int m = static_cast<int>(x.cols());
    TreeParams params;
    params.max_depth = as_int(hp, "max_depth");
    params.min_leaf = std::max(1, as_int(hp, "min_leaf"));
    params.max_features =
        hp.at("max_features_sqrt") != 0.0
            ? std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(m)))))
            : 0;
    const bool bootstrap = hp.at("bootstrap") != 0.0;
    const int n_trees = std::max(1, as_int(hp, "n_trees"));
    std::span<const double> target(y.data(), n);

    ForestState state;
    state.trees.reserve(static_cast<std::size_t>(n_trees));
    std::vector<std::size_t> rows(n);
    for (int t = 0; t < n_trees; ++t) {
        // Each tree owns a stream derived from (seed, tree index).
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        if (bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (auto& r : rows) r = pick(rng);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        state.trees.push_back(fit_tree(x, target, rows, params, rng));
    }
    return state;
}

BoostState fit_boosting(const Hyperparams& hp, std::uint64_t seed, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& y) {
    const auto n = static_cast<std::size_t>(x.rows());
    TreeParams params;
    params.max_depth = as_int(hp, "max_depth");
    params.min_leaf = std::max(1, as_int(hp, "min_leaf"));
    const int n_trees = as_int(hp, "n_trees");

    BoostState state;
    state.learning_rate = hp.at("learning_rate");
    state.init = y.mean();

    Eigen::VectorXd prediction = Eigen::VectorXd::Constant(y.size(), state.init);
    std::vector<double> residual(n);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(seed);
    for (int t = 0; t < n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y(static_cast<Eigen::Index>(i)) - prediction(static_cast<Eigen::Index>(i));
        auto tree = fit_tree(x, residual, rows, params, rng);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            prediction(i) += state.learning_rate * tree.predict_row(x, i);
        state.trees.push_back(std::move(tree));
    }
    return state;
}

}  // namespace degbench::detail
