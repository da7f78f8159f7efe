#include <algorithm>
#include <cmath>
#include <numeric>

#include "degbench/error.hpp"
#include "degbench/learners.hpp"
#include "degbench/rng.hpp"

namespace degbench {

FeatureImportance permutation_importance(const TrainedModel& model, const Eigen::MatrixXd& x,
                                         const Eigen::VectorXd& y, std::size_t repeats,
                                         std::uint64_t seed) {
    if (x.rows() == 0) throw Error(ErrorKind::prediction, "importance needs held-out rows");
    if (repeats < 5) throw Error(ErrorKind::config, "importance needs at least 5 repeats");
    FeatureImportance fi;
    fi.features = model.feature_names();
    fi.repeats = repeats;
    fi.seed = seed;
    fi.baseline_rmse = rmse(as_span(y), as_span(model.predict(x)));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    Eigen::MatrixXd permuted = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> deltas;
        for (std::size_t r = 0; r < repeats; ++r) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            Rng rng(derive_seed(seed, j, r));
            shuffle_in_place(std::span<Eigen::Index>(order), rng);
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                permuted(i, j) = x(order[static_cast<std::size_t>(i)], j);
            deltas.push_back(rmse(as_span(y), as_span(model.predict(permuted))) - fi.baseline_rmse);
        }
        permuted.col(j) = x.col(j);
        double mean = 0;
        for (double d : deltas) mean += d;
        mean /= static_cast<double>(repeats);
        double var = 0;
        for (double d : deltas) var += (d - mean) * (d - mean);
        fi.importance.push_back(mean);
        fi.sd.push_back(std::sqrt(var / static_cast<double>(repeats - 1)));
    }
    return fi;
}

std::vector<std::string> select_by_importance(const FeatureImportance& fi, double fraction) {
    if (fi.features.empty()) return {};
    const auto top = std::max_element(fi.importance.begin(), fi.importance.end());
    std::vector<std::string> keep;
    if (*top > 0) {
        for (std::size_t j = 0; j < fi.features.size(); ++j)
            if (fi.importance[j] >= fraction * *top) keep.push_back(fi.features[j]);
    }
    if (keep.empty()) keep.push_back(fi.features[static_cast<std::size_t>(top - fi.importance.begin())]);
    return keep;
}

nlohmann::json to_json(const FeatureImportance& fi) {
    nlohmann::json j;
    j["partition"] = "validation";
    j["metric"] = "mean RMSE increase after permutation";
    j["repeats"] = fi.repeats;
    j["seed"] = fi.seed;
    j["baseline_rmse"] = fi.baseline_rmse;
    j["features"] = nlohmann::json::array();
    for (std::size_t i = 0; i < fi.features.size(); ++i)
        j["features"].push_back(
            {{"name", fi.features[i]}, {"importance", fi.importance[i]}, {"sd", fi.sd[i]}});
    return j;
}

}  // namespace degbench
