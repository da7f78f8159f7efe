#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "degbench/rng.hpp"

namespace degbench {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
    int max_depth = 0;     // 0 = unlimited
    int min_leaf = 1;
    int max_features = 0;  // per-split candidate count; 0 = all
};

// CART regression tree with variance-reduction splits. Rows go left when
// x[feature] <= threshold.
class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    [[nodiscard]] double predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const {
        int n = 0;
        while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
            const auto& node = nodes_[static_cast<std::size_t>(n)];
            n = x(row, node.feature) <= node.threshold ? node.left : node.right;
        }
        return nodes_[static_cast<std::size_t>(n)].value;
    }

    [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] bool uses_feature(int feature) const;

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

// Fits on the given row subset (repeats allowed, as in a bootstrap sample).
// Exact enumeration over sorted unique feature values.
RegressionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const TreeParams& params, Rng& rng);

}  // namespace degbench
