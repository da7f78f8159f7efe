#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "degbench/error.hpp"
#include "degbench/parallel.hpp"
#include "degbench/pipeline.hpp"
#include "degbench/rng.hpp"

namespace degbench {

namespace {

double quantile(std::vector<double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double constant_rmse(const Eigen::VectorXd& y, double c) {
    const Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), c);
    return rmse(as_span(y), as_span(pred));
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::verification, "k-fold needs k >= 2");
    if (n < k)
        throw Error(ErrorKind::verification, std::to_string(k) + "-fold split needs at least " +
                                                 std::to_string(k) + " rows, have " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle_in_place(std::span<std::size_t>(order), rng);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

Design quartile_onehot(const Design& train, const Design& apply_to) {
    struct Indicator {
        Eigen::Index feature;
        int bin;
        std::string name;
    };
    std::vector<std::array<double, 3>> cuts;
    std::vector<Indicator> indicators;
    auto bin_of = [&](Eigen::Index j, double v) {
        const auto& c = cuts[static_cast<std::size_t>(j)];
        return v <= c[0] ? 0 : v <= c[1] ? 1 : v <= c[2] ? 2 : 3;
    };
    for (Eigen::Index j = 0; j < train.x.cols(); ++j) {
        std::vector<double> v(train.x.col(j).data(), train.x.col(j).data() + train.x.rows());
        std::sort(v.begin(), v.end());
        cuts.push_back({quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)});
        // Reference coding (first quartile implicit); indicators that never
        // fire, or always fire, on the training rows carry no information.
        for (int b = 1; b < 4; ++b) {
            Eigen::Index hits = 0;
            for (Eigen::Index i = 0; i < train.x.rows(); ++i) hits += bin_of(j, train.x(i, j)) == b;
            if (hits == 0 || hits == train.x.rows()) continue;
            indicators.push_back({j, b, train.feature_names[static_cast<std::size_t>(j)] + ":Q" +
                                            std::to_string(b + 1)});
        }
    }
    Design out;
    out.y = apply_to.y;
    out.groups = apply_to.groups;
    out.time = apply_to.time;
    out.x.resize(apply_to.x.rows(), static_cast<Eigen::Index>(indicators.size()));
    for (std::size_t c = 0; c < indicators.size(); ++c) {
        out.feature_names.push_back(indicators[c].name);
        for (Eigen::Index i = 0; i < apply_to.x.rows(); ++i)
            out.x(i, static_cast<Eigen::Index>(c)) =
                bin_of(indicators[c].feature, apply_to.x(i, indicators[c].feature)) == indicators[c].bin;
    }
    return out;
}

VerificationResult verify(const LearnerSpec& spec, const DataTable& table,
                          const SplitConfig& split_config, std::size_t k,
                          const std::vector<std::string>& features, std::size_t jobs) {
    VerificationResult v;
    const Split s = split(table, split_config);
    const auto train_d = table.design(s.train, features);
    const auto valid_d = table.design(s.valid, features);
    v.n_train = s.train.size();
    v.n_valid = s.valid.size();

    const auto model = train(spec, train_d);
    v.model_rmse = rmse(as_span(valid_d.y), as_span(model.predict(valid_d)));
    v.ymean_rmse = constant_rmse(valid_d.y, valid_d.y.mean());
    v.ymean_trainmean_rmse = constant_rmse(valid_d.y, train_d.y.mean());

    Eigen::VectorXd shuffled = train_d.y;
    Rng rng(derive_seed(split_config.seed, spec.seed, 0x5fULL));
    shuffle_in_place(std::span<double>(shuffled.data(), static_cast<std::size_t>(shuffled.size())), rng);
    const auto shuffled_model = train(spec, train_d.x, shuffled, features);
    v.yshuffle_rmse = rmse(as_span(valid_d.y), as_span(shuffled_model.predict(valid_d.x)));

    try {
        const auto oh_train = quartile_onehot(train_d, train_d);
        const auto oh_valid = quartile_onehot(train_d, valid_d);
        if (oh_train.x.cols() == 0) throw Error(ErrorKind::verification, "no informative quartile bins");
        const auto oh_model = train(spec, oh_train);
        v.onehot_rmse = rmse(as_span(oh_valid.y), as_span(oh_model.predict(oh_valid)));
    } catch (const Error& e) {
        v.onehot_error = e.what();
    }

    std::vector<std::size_t> all(table.n_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto full = table.design(all, features);
    v.k = k;
    v.folds = kfold_indices(table.n_rows(), k, derive_seed(split_config.seed, 0xf01dULL));
    std::vector<Eigen::VectorXd> fold_pred(k);
    parallel_for(k, jobs, [&](std::size_t f) {
        std::vector<std::size_t> rest;
        for (std::size_t g = 0; g < k; ++g)
            if (g != f) rest.insert(rest.end(), v.folds[g].begin(), v.folds[g].end());
        std::sort(rest.begin(), rest.end());
        const auto fold_model = train(spec, table.design(rest, features));
        fold_pred[f] = fold_model.predict(table.design(v.folds[f], features));
    });
    Eigen::VectorXd oof(full.y.size());
    for (std::size_t f = 0; f < k; ++f) {
        const auto fold_y = table.design(v.folds[f], features).y;
        auto m = evaluate(fold_y, fold_pred[f]);
        if (!m.r2)
            throw Error(ErrorKind::verification, "fold " + std::to_string(f + 1) + " has a constant target");
        v.fold_metrics.push_back(m);
        for (std::size_t i = 0; i < v.folds[f].size(); ++i)
            oof(static_cast<Eigen::Index>(v.folds[f][i])) = fold_pred[f](static_cast<Eigen::Index>(i));
    }
    v.pooled = evaluate(full.y, oof);
    return v;
}

nlohmann::json to_json(const VerificationResult& v) {
    nlohmann::json j;
    j["partition"] = "validation";
    j["n_train"] = v.n_train;
    j["n_valid"] = v.n_valid;
    j["model_rmse"] = v.model_rmse;
    j["ymean_rmse"] = v.ymean_rmse;
    j["ymean_note"] = "constant prediction equal to the validation-target mean";
    j["ymean_trainmean_rmse"] = v.ymean_trainmean_rmse;
    j["yshuffle_rmse"] = v.yshuffle_rmse;
    j["onehot_rmse"] = v.onehot_rmse ? nlohmann::json(*v.onehot_rmse) : nlohmann::json();
    j["onehot_note"] = "every feature replaced by quartile-bin indicators (training-row cut points)";
    if (!v.onehot_error.empty()) j["onehot_error"] = v.onehot_error;
    nlohmann::json kf;
    kf["k"] = v.k;
    kf["fold_sizes"] = nlohmann::json::array();
    for (const auto& f : v.folds) kf["fold_sizes"].push_back(f.size());
    kf["folds"] = nlohmann::json::array();
    for (const auto& m : v.fold_metrics) kf["folds"].push_back(to_json(m));
    kf["pooled"] = to_json(v.pooled);
    kf["pooled_note"] = "metrics over concatenated out-of-fold predictions";
    j["kfold"] = kf;
    return j;
}

}  // namespace degbench
