#include <algorithm>
#include <numeric>

#include "degbench/tree.hpp"

namespace degbench {

namespace {

struct Builder {
    const Eigen::MatrixXd& x;
    std::span<const double> y;
    const TreeParams& params;
    Rng& rng;
    std::vector<TreeNode> nodes;
    std::vector<int> features;

    struct Best {
        int feature = -1;
        double threshold = 0;
        double gain = 0;
    };

    int build(std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();

        double mean = 0;
        for (auto r : rows) mean += y[r];
        mean /= static_cast<double>(rows.size());
        nodes[static_cast<std::size_t>(id)].value = mean;

        const auto n = rows.size();
        const bool depth_ok = params.max_depth <= 0 || depth < params.max_depth;
        const bool pure = std::all_of(rows.begin(), rows.end(),
                                      [&](std::size_t r) { return y[r] == y[rows.front()]; });
        if (!depth_ok || pure || n < 2 * static_cast<std::size_t>(params.min_leaf)) return id;

        const Best best = find_split(rows, mean);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows)
            (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes[static_cast<std::size_t>(id)].feature = best.feature;
        nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
        const int l = build(left, depth + 1);
        const int r = build(right, depth + 1);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    Best find_split(const std::vector<std::size_t>& rows, double mean) {
        const auto m = static_cast<int>(x.cols());
        int n_candidates = m;
        if (params.max_features > 0 && params.max_features < m) {
            n_candidates = params.max_features;
            for (int i = 0; i < n_candidates; ++i) {
                std::uniform_int_distribution<int> pick(i, m - 1);
                std::swap(features[static_cast<std::size_t>(i)],
                          features[static_cast<std::size_t>(pick(rng))]);
            }
        } else {
            std::iota(features.begin(), features.end(), 0);
        }
        std::vector<int> candidates(features.begin(), features.begin() + n_candidates);
        std::sort(candidates.begin(), candidates.end());

        Best best;
        const std::size_t n = rows.size();
        const auto min_leaf = static_cast<std::size_t>(params.min_leaf);
        std::vector<std::pair<double, double>> pairs(n);  // (feature value, centred target)
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) total += y[rows[i]] - mean;

        for (int f : candidates) {
            for (std::size_t i = 0; i < n; ++i)
                pairs[i] = {x(static_cast<Eigen::Index>(rows[i]), f), y[rows[i]] - mean};
            std::sort(pairs.begin(), pairs.end());
            if (pairs.front().first == pairs.back().first) continue;
            double left_sum = 0;
            for (std::size_t i = 1; i < n; ++i) {
                left_sum += pairs[i - 1].second;
                if (i < min_leaf || n - i < min_leaf) continue;
                const double lo = pairs[i - 1].first, hi = pairs[i].first;
                if (lo == hi) continue;
                const double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr -
                                    total * total / static_cast<double>(n);
                if (gain > best.gain) {
                    double t = lo + (hi - lo) / 2.0;
                    if (!(t < hi)) t = lo;
                    best = {f, t, gain};
                }
            }
        }
        return best;
    }
};

}  // namespace

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x, i);
    return out;
}

bool RegressionTree::uses_feature(int feature) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [feature](const TreeNode& n) { return n.feature == feature; });
}

RegressionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const TreeParams& params, Rng& rng) {
    Builder b{x, y, params, rng, {}, std::vector<int>(static_cast<std::size_t>(x.cols()))};
    std::iota(b.features.begin(), b.features.end(), 0);
    std::vector<std::size_t> root(rows.begin(), rows.end());
    b.build(root, 0);
    return RegressionTree(std::move(b.nodes));
}

}  // namespace degbench
