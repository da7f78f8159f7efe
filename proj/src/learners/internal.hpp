#pragma once

#include <string>
#include <vector>

#include "degbench/learners.hpp"

namespace degbench::detail {

LinearState fit_linear(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                       const std::vector<std::string>& names, const Standardization& scaling);
ForestState fit_forest(const Hyperparams& hp, std::uint64_t seed, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y);
BoostState fit_boosting(const Hyperparams& hp, std::uint64_t seed, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& y);
MlpState fit_mlp(const Hyperparams& hp, std::uint64_t seed, const Eigen::MatrixXd& z,
                 const Eigen::VectorXd& y);

Eigen::VectorXd predict_mlp(const MlpState& s, const Eigen::MatrixXd& z);

}  // namespace degbench::detail
