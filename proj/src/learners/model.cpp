#include <algorithm>
#include <cmath>

#include "degbench/error.hpp"
#include "learners/internal.hpp"

namespace degbench {

Standardization Standardization::fit(const Eigen::MatrixXd& x) {
    Standardization s;
    s.mean.resize(x.cols());
    s.sd.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto col = x.col(j);
        if ((col.array() == col(0)).all()) {
            s.mean(j) = col(0);
            s.sd(j) = 1.0;
            continue;
        }
        s.mean(j) = col.mean();
        const double var = (col.array() - s.mean(j)).square().mean();
        s.sd(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) z.col(j) = (x.col(j).array() - mean(j)) / sd(j);
    return z;
}

TrainedModel::TrainedModel(LearnerSpec spec, std::vector<std::string> feature_names,
                           Standardization scaling, FamilyState state)
    : spec_(std::move(spec)),
      names_(std::move(feature_names)),
      scaling_(std::move(scaling)),
      state_(std::move(state)) {}

void TrainedModel::set_training_groups(std::vector<std::string> groups) {
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    training_groups_ = std::move(groups);
}

Eigen::VectorXd TrainedModel::predict(const Eigen::MatrixXd& x) const {
    if (x.cols() != static_cast<Eigen::Index>(names_.size()))
        throw Error(ErrorKind::prediction, "expected " + std::to_string(names_.size()) +
                                               " feature columns, got " + std::to_string(x.cols()));
    return std::visit(
        [&](const auto& s) -> Eigen::VectorXd {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LinearState>) {
                return ((scaling_.apply(x) * s.coef).array() + s.intercept).matrix();
            } else if constexpr (std::is_same_v<S, ForestState>) {
                Eigen::VectorXd out(x.rows());
                const double count = static_cast<double>(s.trees.size());
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    double sum = 0;
                    for (const auto& t : s.trees) sum += t.predict_row(x, i);
                    out(i) = sum / count;
                }
                return out;
            } else if constexpr (std::is_same_v<S, BoostState>) {
                Eigen::VectorXd out(x.rows());
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    double p = s.init;
                    for (const auto& t : s.trees) p += s.learning_rate * t.predict_row(x, i);
                    out(i) = p;
                }
                return out;
            } else {
                return detail::predict_mlp(s, scaling_.apply(x));
            }
        },
        state_);
}

Eigen::VectorXd TrainedModel::predict(const Eigen::MatrixXd& x,
                                      const std::vector<std::string>& names) const {
    if (names != names_) {
        std::string expected, got;
        for (const auto& n : names_) expected += (expected.empty() ? "" : ",") + n;
        for (const auto& n : names) got += (got.empty() ? "" : ",") + n;
        throw Error(ErrorKind::prediction,
                    "feature columns do not match the model: expected [" + expected + "], got [" +
                        got + "]");
    }
    return predict(x);
}

Eigen::VectorXd TrainedModel::predict(const Design& design) const {
    return predict(design.x, design.feature_names);
}

TrainedModel train(const LearnerSpec& spec_in, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::vector<std::string> feature_names) {
    const LearnerSpec spec = complete_spec(spec_in);
    if (x.rows() != y.size())
        throw Error(ErrorKind::training, "feature rows and target length differ");
    if (x.rows() < 5)
        throw Error(ErrorKind::training,
                    "training needs at least 5 rows, got " + std::to_string(x.rows()));
    if (feature_names.size() != static_cast<std::size_t>(x.cols()))
        throw Error(ErrorKind::training, "feature name count does not match columns");
    if (!x.allFinite() || !y.allFinite())
        throw Error(ErrorKind::training, "training data contains non-finite values");

    auto scaling = Standardization::fit(x);
    FamilyState state;
    switch (spec.family) {
    case Family::MVL:
        state = detail::fit_linear(scaling.apply(x), y, feature_names, scaling);
        break;
    case Family::RF: state = detail::fit_forest(spec.hyperparams, spec.seed, x, y); break;
    case Family::GB: state = detail::fit_boosting(spec.hyperparams, spec.seed, x, y); break;
    case Family::NN:
        state = detail::fit_mlp(spec.hyperparams, spec.seed, scaling.apply(x), y);
        break;
    }
    TrainedModel model(spec, std::move(feature_names), std::move(scaling), std::move(state));
    const Eigen::VectorXd fitted = model.predict(x);
    if (!fitted.allFinite())
        throw Error(ErrorKind::training, "model produced non-finite training predictions");
    model.set_training_metrics(evaluate(y, fitted));
    return model;
}

TrainedModel train(const LearnerSpec& spec, const Design& design) {
    auto model = train(spec, design.x, design.y, design.feature_names);
    model.set_training_groups(design.groups);
    return model;
}

Eigen::VectorXd staged_predict(const TrainedModel& model, const Eigen::MatrixXd& x,
                               std::size_t stages) {
    const auto* s = std::get_if<BoostState>(&model.state());
    if (!s) throw Error(ErrorKind::prediction, "staged prediction needs a GB model");
    stages = std::min(stages, s->trees.size());
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double p = s->init;
        for (std::size_t t = 0; t < stages; ++t) p += s->learning_rate * s->trees[t].predict_row(x, i);
        out(i) = p;
    }
    return out;
}

Eigen::MatrixXd tree_predictions(const TrainedModel& model, const Eigen::MatrixXd& x) {
    const auto* s = std::get_if<ForestState>(&model.state());
    if (!s) throw Error(ErrorKind::prediction, "per-tree predictions need an RF model");
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(s->trees.size()));
    for (std::size_t t = 0; t < s->trees.size(); ++t)
        out.col(static_cast<Eigen::Index>(t)) = s->trees[t].predict(x);
    return out;
}

std::pair<Eigen::VectorXd, double> linear_coefficients(const TrainedModel& model) {
    const auto* s = std::get_if<LinearState>(&model.state());
    if (!s) throw Error(ErrorKind::prediction, "linear coefficients need an MVL model");
    const auto& sc = model.standardization();
    Eigen::VectorXd coef = s->coef.array() / sc.sd.array();
    const double intercept = s->intercept - coef.dot(sc.mean);
    return {coef, intercept};
}

}  // namespace degbench
