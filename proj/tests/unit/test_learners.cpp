#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "degbench/error.hpp"
#include "degbench/learners.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace degbench;

namespace {

// Held-out R^2 observed for the forest experiment below, kept as a regression value.
constexpr double kFrozenForestR2 = 0.99989149014773371;

struct Problem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Problem uniform_problem(int n, int m, std::uint64_t seed, const std::function<double(const Eigen::RowVectorXd&)>& f,
                        double noise = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Problem p{Eigen::MatrixXd(n, m), Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) p.x(i, j) = u(rng);
        p.y(i) = f(p.x.row(i)) + noise * g(rng);
    }
    return p;
}

std::vector<std::string> names(int m) {
    std::vector<std::string> out;
    for (int j = 0; j < m; ++j) out.push_back("f" + std::to_string(j));
    return out;
}

LearnerSpec spec(Family f, Hyperparams hp = {}, std::uint64_t seed = 0) { return {f, std::move(hp), seed}; }

// Small configurations so the suite stays fast.
LearnerSpec quick(Family f, std::uint64_t seed = 0) {
    switch (f) {
    case Family::RF: return spec(f, {{"n_trees", 20}}, seed);
    case Family::GB: return spec(f, {{"n_trees", 30}}, seed);
    case Family::NN: return spec(f, {{"epochs", 200}, {"hidden", 8}}, seed);
    case Family::MVL: return spec(f, {}, seed);
    }
    return spec(f);
}

}  // namespace

TEST_CASE("spec completion and grids") {
    for (auto f : kAllFamilies) {
        CHECK(parse_family(to_string(f)) == f);
        CHECK(complete_spec(spec(f)).hyperparams == default_hyperparams(f));
        CHECK(hyperparam_grid(f).front() == default_hyperparams(f));
    }
    CHECK(hyperparam_grid(Family::RF).size() == 16);
    CHECK(hyperparam_grid(Family::GB).size() == 8);
    CHECK(hyperparam_grid(Family::NN).size() == 4);
    CHECK(hyperparam_grid(Family::MVL).size() == 1);
    CHECK(complete_spec(spec(Family::GB, {{"learning_rate", 0.3}})).hyperparams.at("learning_rate") == 0.3);
    CHECK_THROWS_AS(complete_spec(spec(Family::GB, {{"hidden", 3}})), Error);
    CHECK_THROWS_AS(parse_family("SVM"), Error);
}

TEST_CASE("MVL recovers an exact linear law") {
    const auto p = uniform_problem(40, 2, 1, [](const Eigen::RowVectorXd& r) { return 3 * r(0) - 2 * r(1) + 1; });
    const auto m = train(spec(Family::MVL), p.x, p.y, names(2));
    const auto [coef, intercept] = linear_coefficients(m);
    CHECK(coef(0) == doctest::Approx(3).epsilon(1e-8));
    CHECK(coef(1) == doctest::Approx(-2).epsilon(1e-8));
    CHECK(intercept == doctest::Approx(1).epsilon(1e-8));

    // Standardized zero input is the feature mean; it maps to the intercept.
    const auto& sc = m.standardization();
    const auto& lin = std::get<LinearState>(m.state());
    Eigen::MatrixXd at_mean = sc.mean.transpose();
    CHECK(m.predict(at_mean)(0) == doctest::Approx(lin.intercept).epsilon(1e-12));
}

TEST_CASE("MVL matches the normal-equations oracle on noisy data") {
    const auto p = uniform_problem(80, 4, 2, [](const Eigen::RowVectorXd& r) { return r.sum(); }, 0.3);
    const auto m = train(spec(Family::MVL), p.x, p.y, names(4));
    const auto beta = oracle::normal_equations(p.x, p.y);
    const auto [coef, intercept] = linear_coefficients(m);
    CHECK(intercept == doctest::Approx(beta(0)).epsilon(1e-8));
    for (int j = 0; j < 4; ++j) CHECK(coef(j) == doctest::Approx(beta(j + 1)).epsilon(1e-8));
}

TEST_CASE("MVL reports a rank-deficient design") {
    auto p = uniform_problem(20, 3, 3, [](const Eigen::RowVectorXd& r) { return r(0); });
    p.x.col(2) = 2 * p.x.col(0) + p.x.col(1);
    try {
        (void)train(spec(Family::MVL), p.x, p.y, names(3));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::training);
        CHECK(std::string(e.what()).find("rank deficient") != std::string::npos);
    }
    p.x.col(2).setConstant(4.0);
    try {
        (void)train(spec(Family::MVL), p.x, p.y, names(3));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("f2") != std::string::npos);
    }
}

TEST_CASE("training preconditions") {
    const auto p = uniform_problem(4, 2, 4, [](const Eigen::RowVectorXd& r) { return r(0); });
    CHECK_THROWS_AS(train(spec(Family::RF), p.x, p.y, names(2)), Error);
    auto q = uniform_problem(10, 2, 4, [](const Eigen::RowVectorXd& r) { return r(0); });
    CHECK_THROWS_AS(train(spec(Family::RF), q.x, q.y.head(9), names(2)), Error);
    CHECK_THROWS_AS(train(spec(Family::RF), q.x, q.y, names(1)), Error);
    q.x(3, 1) = std::nan("");
    CHECK_THROWS_AS(train(spec(Family::RF), q.x, q.y, names(2)), Error);
}

TEST_CASE("RF on y = x1 generalises (frozen regression value)") {
    const auto p = uniform_problem(200, 2, 0, [](const Eigen::RowVectorXd& r) { return r(0); });
    const auto holdout = uniform_problem(200, 2, 1, [](const Eigen::RowVectorXd& r) { return r(0); });
    const auto m = train(spec(Family::RF, {{"n_trees", 200}}, 0), p.x, p.y, names(2));
    const double r = r2(as_span(holdout.y), as_span(m.predict(holdout.x)));
    CHECK(r >= 0.95);
    CHECK(r == doctest::Approx(kFrozenForestR2).epsilon(1e-12));
}

TEST_CASE("RF prediction is the mean of its trees") {
    const auto p = uniform_problem(60, 3, 5, [](const Eigen::RowVectorXd& r) { return r(0) * r(1) + r(2); }, 0.1);
    const auto m = train(quick(Family::RF, 9), p.x, p.y, names(3));
    const auto per_tree = tree_predictions(m, p.x);
    const Eigen::VectorXd mean = per_tree.rowwise().mean();
    const Eigen::VectorXd pred = m.predict(p.x);
    for (Eigen::Index i = 0; i < p.x.rows(); ++i) CHECK(pred(i) == doctest::Approx(mean(i)).epsilon(1e-14));
}

TEST_CASE("a single full-depth tree without sampling memorises the training set") {
    const auto p = uniform_problem(50, 3, 6, [](const Eigen::RowVectorXd& r) { return std::sin(6 * r(0)) + r(1); }, 0.2);
    const auto m = train(spec(Family::RF, {{"n_trees", 1}, {"bootstrap", 0}, {"max_features_sqrt", 0}, {"max_depth", 0}}),
                         p.x, p.y, names(3));
    CHECK(m.predict(p.x) == p.y);
}

TEST_CASE("GB with zero learning rate predicts the training mean") {
    const auto p = uniform_problem(30, 2, 7, [](const Eigen::RowVectorXd& r) { return r(0) - r(1); });
    const auto m = train(spec(Family::GB, {{"learning_rate", 0.0}, {"n_trees", 10}}), p.x, p.y, names(2));
    const auto other = uniform_problem(15, 2, 8, [](const Eigen::RowVectorXd& r) { return r(0); });
    const double mean = static_cast<double>(oracle::mean(std::vector<double>(p.y.data(), p.y.data() + p.y.size())));
    for (double v : m.predict(other.x)) CHECK(v == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("GB staged predictions telescope") {
    const auto p = uniform_problem(60, 3, 9, [](const Eigen::RowVectorXd& r) { return r(0) * r(0) + r(2); }, 0.05);
    const auto m = train(quick(Family::GB), p.x, p.y, names(3));
    const auto& s = std::get<BoostState>(m.state());
    for (std::size_t stage = 1; stage <= s.trees.size(); ++stage) {
        const Eigen::VectorXd expected =
            staged_predict(m, p.x, stage - 1) + s.learning_rate * s.trees[stage - 1].predict(p.x);
        CHECK(staged_predict(m, p.x, stage) == expected);
    }
    CHECK(staged_predict(m, p.x, s.trees.size()) == m.predict(p.x));
}

TEST_CASE("NN analytic gradient matches central differences") {
    const auto p = uniform_problem(5, 3, 10, [](const Eigen::RowVectorXd& r) { return r(0) - 2 * r(1); });
    const MlpState s = mlp_initial_state(3, 4, 11);
    MlpState g;
    (void)mlp_loss_and_gradient(s, p.x, p.y, &g);

    auto check = [&](auto&& get, double analytic) {
        MlpState hi = s, lo = s;
        double& a = get(hi);
        const double h = 1e-6 * std::max(1.0, std::fabs(a));
        a += h;
        get(lo) -= h;
        const double numeric =
            (mlp_loss_and_gradient(hi, p.x, p.y, nullptr) - mlp_loss_and_gradient(lo, p.x, p.y, nullptr)) / (2 * h);
        CHECK(std::fabs(analytic - numeric) <= 1e-4 * std::max(std::fabs(numeric), 1e-6));
    };
    for (Eigen::Index i = 0; i < s.w1.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.w1.cols(); ++j)
            check([&](MlpState& m) -> double& { return m.w1(i, j); }, g.w1(i, j));
        check([&](MlpState& m) -> double& { return m.b1(i); }, g.b1(i));
        check([&](MlpState& m) -> double& { return m.w2(i); }, g.w2(i));
    }
    check([&](MlpState& m) -> double& { return m.b2; }, g.b2);
}

TEST_CASE("NN learns a smooth function and reports divergence") {
    const auto p = uniform_problem(80, 2, 12, [](const Eigen::RowVectorXd& r) { return r(0) + r(1) * r(1); });
    const auto m = train(spec(Family::NN, {{"epochs", 1500}, {"hidden", 16}}), p.x, p.y, names(2));
    CHECK(*m.training_metrics().r2 > 0.95);
    try {
        (void)train(spec(Family::NN, {{"learning_rate", 50}, {"epochs", 500}}), p.x, p.y, names(2));
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::training);
    }
}

TEST_CASE("prediction checks feature names and order") {
    const auto p = uniform_problem(20, 2, 13, [](const Eigen::RowVectorXd& r) { return r(0); });
    const auto m = train(quick(Family::RF), p.x, p.y, names(2));
    CHECK_NOTHROW((void)m.predict(p.x, {"f0", "f1"}));
    try {
        (void)m.predict(p.x, {"f1", "f0"});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::prediction);
    }
    CHECK_THROWS_AS((void)m.predict(Eigen::MatrixXd(3, 3)), Error);
}

TEST_CASE("training is deterministic and persistence is bit-exact") {
    const auto p = uniform_problem(60, 3, 14, [](const Eigen::RowVectorXd& r) { return r(0) * r(1) - r(2); }, 0.05);
    const auto dir = testutil::scratch("models");
    for (auto f : kAllFamilies) {
        CAPTURE(to_string(f));
        const auto a = train(quick(f, 5), p.x, p.y, names(3));
        const auto b = train(quick(f, 5), p.x, p.y, names(3));
        CHECK(model_to_json(a).dump() == model_to_json(b).dump());
        CHECK(a.predict(p.x) == b.predict(p.x));

        const auto path = dir / (std::string(to_string(f)) + ".json");
        save_model(a, path);
        const auto loaded = load_model(path);
        CHECK(loaded.predict(p.x) == a.predict(p.x));
        CHECK(loaded.feature_names() == a.feature_names());
        CHECK(loaded.spec() == a.spec());
        CHECK(model_to_json(loaded).dump() == model_to_json(a).dump());
    }
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"format_version": 99})")), Error);
    CHECK_THROWS_AS(load_model(dir / "missing.json"), Error);
}

TEST_CASE("different seeds give different forests") {
    const auto p = uniform_problem(60, 3, 15, [](const Eigen::RowVectorXd& r) { return r(0); }, 0.1);
    const auto a = train(quick(Family::RF, 1), p.x, p.y, names(3));
    const auto b = train(quick(Family::RF, 2), p.x, p.y, names(3));
    CHECK(a.predict(p.x) != b.predict(p.x));
}

TEST_CASE("permutation importance of an unused feature is exactly zero") {
    auto p = uniform_problem(80, 3, 16, [](const Eigen::RowVectorXd& r) { return 2 * r(0) + r(1); }, 0.05);
    p.x.col(2).setConstant(0.5);  // never split on during training
    const auto m = train(quick(Family::RF), p.x, p.y, names(3));
    for (const auto& t : std::get<ForestState>(m.state()).trees) CHECK(!t.uses_feature(2));
    auto held = uniform_problem(40, 3, 17, [](const Eigen::RowVectorXd& r) { return 2 * r(0) + r(1); }, 0.05);
    const auto fi = permutation_importance(m, held.x, held.y, 5, 3);
    CHECK(fi.importance[2] == 0.0);
    CHECK(fi.sd[2] == 0.0);
    CHECK(fi.importance[0] > fi.importance[1]);
    CHECK(fi.importance[1] > 0);

    // A constant column on the evaluation data is also exactly zero, for any family.
    const auto lin = train(spec(Family::MVL), held.x, held.y, names(3));
    held.x.col(1).setConstant(0.25);
    CHECK(permutation_importance(lin, held.x, held.y, 5, 1).importance[1] == 0.0);
}

TEST_CASE("permutation importance on a linear law with an irrelevant input") {
    const auto p = uniform_problem(500, 2, 18, [](const Eigen::RowVectorXd& r) { return 5 * r(0); }, 0.1);
    const auto held = uniform_problem(500, 2, 19, [](const Eigen::RowVectorXd& r) { return 5 * r(0); }, 0.1);
    const auto m = train(spec(Family::MVL), p.x, p.y, names(2));
    const auto fi = permutation_importance(m, held.x, held.y, 10, 7);
    CHECK(fi.importance[0] > 1.0);
    CHECK(std::fabs(fi.importance[1]) < 1e-3);
    CHECK(select_by_importance(fi, 0.04) == std::vector<std::string>{"f0"});
    CHECK(permutation_importance(m, held.x, held.y, 10, 7).importance == fi.importance);
    CHECK_THROWS_AS(permutation_importance(m, held.x, held.y, 4, 7), Error);

    const auto j = to_json(fi);
    CHECK(j["repeats"] == 10);
    CHECK(j["features"][0]["name"] == "f0");
}

TEST_CASE("feature selection keeps the top feature as a fallback") {
    FeatureImportance fi{{"a", "b", "c"}, {-0.1, -0.2, -0.05}, {0, 0, 0}, 1.0, 5, 0};
    CHECK(select_by_importance(fi) == std::vector<std::string>{"c"});
    FeatureImportance mixed{{"a", "b", "c"}, {1.0, 0.039, 0.04}, {0, 0, 0}, 1.0, 5, 0};
    CHECK(select_by_importance(mixed) == std::vector<std::string>{"a", "c"});
}

TEST_CASE("hyperparameter search") {
    const auto train_p = uniform_problem(120, 3, 20, [](const Eigen::RowVectorXd& r) { return r(0); }, 0.3);
    const auto valid_p = uniform_problem(120, 3, 21, [](const Eigen::RowVectorXd& r) { return r(0); }, 0.3);

    // Budget 1 evaluates only the family default.
    for (auto f : {Family::GB, Family::MVL}) {
        const auto best = hyperparam_search(f, train_p.x, train_p.y, valid_p.x, valid_p.y, 1, 3);
        CHECK(best.hyperparams == default_hyperparams(f));
    }

    // The winner minimises validation RMSE even when another candidate fits the training data better.
    const auto all = search_hyperparams(Family::GB, train_p.x, train_p.y, valid_p.x, valid_p.y, 8, 4, names(3));
    REQUIRE(all.trials.size() == 8);
    std::size_t by_valid = 0, by_train = 0;
    std::vector<double> train_rmse;
    for (std::size_t i = 0; i < all.trials.size(); ++i) {
        const auto& t = all.trials[i];
        REQUIRE(t.valid_rmse.has_value());
        if (*t.valid_rmse < *all.trials[by_valid].valid_rmse) by_valid = i;
        train_rmse.push_back(train(t.spec, train_p.x, train_p.y, names(3)).training_metrics().rmse);
        if (train_rmse[i] < train_rmse[by_train]) by_train = i;
    }
    CHECK(all.best == all.trials[by_valid].spec);
    CHECK(by_train != by_valid);
    CHECK(train_rmse[by_train] < train_rmse[by_valid]);

    const auto again = search_hyperparams(Family::GB, train_p.x, train_p.y, valid_p.x, valid_p.y, 8, 4, names(3));
    CHECK(again.best == all.best);
    CHECK_THROWS_AS(search_hyperparams(Family::GB, train_p.x, train_p.y, valid_p.x, valid_p.y, 0, 4, names(3)),
                    Error);
}
