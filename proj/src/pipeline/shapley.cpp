#include <algorithm>
#include <bit>
#include <cmath>

#include "degbench/error.hpp"
#include "degbench/parallel.hpp"
#include "degbench/pipeline.hpp"

namespace degbench {

namespace {

// Coalition values v(S) for one explained row, S encoded as a bitmask.
std::vector<double> coalition_values(const TrainedModel& model, const Eigen::RowVectorXd& x,
                                     const Eigen::MatrixXd& background) {
    const auto m = static_cast<int>(x.size());
    const std::size_t n_masks = std::size_t{1} << m;
    const auto b = background.rows();
    const std::size_t block = std::max<std::size_t>(1, 8192 / static_cast<std::size_t>(b));

    std::vector<double> v(n_masks);
    Eigen::MatrixXd batch;
    for (std::size_t start = 0; start < n_masks; start += block) {
        const std::size_t stop = std::min(n_masks, start + block);
        batch.resize(static_cast<Eigen::Index>((stop - start)) * b, m);
        for (std::size_t mask = start; mask < stop; ++mask) {
            const auto base = static_cast<Eigen::Index>(mask - start) * b;
            batch.middleRows(base, b) = background;
            for (int j = 0; j < m; ++j)
                if (mask >> j & 1U) batch.col(j).segment(base, b).setConstant(x(j));
        }
        const Eigen::VectorXd pred = model.predict(batch);
        for (std::size_t mask = start; mask < stop; ++mask)
            v[mask] = pred.segment(static_cast<Eigen::Index>(mask - start) * b, b).mean();
    }
    return v;
}

}  // namespace

ShapleyResult shapley(const TrainedModel& model, const Eigen::MatrixXd& rows,
                      const Eigen::MatrixXd& background, std::size_t jobs) {
    const auto m = static_cast<std::size_t>(model.feature_names().size());
    if (m > kMaxShapleyFeatures)
        throw Error(ErrorKind::shapley,
                    "exact Shapley enumeration is limited to " + std::to_string(kMaxShapleyFeatures) +
                        " features, model has " + std::to_string(m) +
                        "; use permutation importance instead");
    if (background.rows() == 0) throw Error(ErrorKind::shapley, "background set is empty");
    if (rows.cols() != static_cast<Eigen::Index>(m) || background.cols() != static_cast<Eigen::Index>(m))
        throw Error(ErrorKind::shapley, "explained rows and background must have the model's features");

    // weight(s) = s! (m-s-1)! / m! = 1 / (m * C(m-1, s))
    std::vector<double> weight(m);
    for (std::size_t s = 0; s < m; ++s) {
        double c = 1;
        for (std::size_t i = 1; i <= s; ++i)
            c = c * static_cast<double>(m - 1 - s + i) / static_cast<double>(i);
        weight[s] = 1.0 / (static_cast<double>(m) * c);
    }

    ShapleyResult out;
    out.features = model.feature_names();
    out.background_size = static_cast<std::size_t>(background.rows());
    out.baseline = model.predict(background).mean();
    out.values.resize(rows.rows(), static_cast<Eigen::Index>(m));
    out.predictions = model.predict(rows);

    parallel_for(static_cast<std::size_t>(rows.rows()), jobs, [&](std::size_t r) {
        const auto row = static_cast<Eigen::Index>(r);
        const auto v = coalition_values(model, rows.row(row), background);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t bit = std::size_t{1} << j;
            double phi = 0;
            for (std::size_t mask = 0; mask < v.size(); ++mask) {
                if (mask & bit) continue;
                phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (v[mask | bit] - v[mask]);
            }
            out.values(row, static_cast<Eigen::Index>(j)) = phi;
        }
    });
    return out;
}

nlohmann::json to_json(const ShapleyResult& s) {
    nlohmann::json j;
    j["method"] = "exact interventional Shapley values over all feature coalitions";
    j["features"] = s.features;
    j["baseline"] = s.baseline;
    j["background_size"] = s.background_size;
    j["background_rows"] = s.background_rows;
    j["explained_rows"] = s.explained_rows;
    std::vector<double> mean_abs(s.features.size(), 0.0);
    j["rows"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        std::vector<double> vals(static_cast<std::size_t>(s.values.cols()));
        for (Eigen::Index f = 0; f < s.values.cols(); ++f) {
            vals[static_cast<std::size_t>(f)] = s.values(i, f);
            mean_abs[static_cast<std::size_t>(f)] += std::abs(s.values(i, f));
        }
        j["rows"].push_back({{"prediction", s.predictions(i)}, {"attribution", vals}});
    }
    if (s.values.rows() > 0)
        for (auto& v : mean_abs) v /= static_cast<double>(s.values.rows());
    j["mean_abs_attribution"] = mean_abs;
    return j;
}

}  // namespace degbench
