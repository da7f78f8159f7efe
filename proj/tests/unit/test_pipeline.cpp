#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "degbench/error.hpp"
#include "degbench/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace degbench;

namespace {

DataTable curated_synth(std::uint64_t seed = 0) {
    SynthConfig cfg;
    cfg.seed = seed;
    return curate(normalize_target(synth_dataset(cfg).table)).table;
}

BenchmarkConfig small_config() {
    BenchmarkConfig c;
    c.families = {Family::MVL, Family::GB};
    c.train_fractions = {0.8};
    c.time_cutoffs = {90, 180};
    c.search_budget = 1;
    return c;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = g(rng);
    return x;
}

std::vector<std::string> names(Eigen::Index m) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < m; ++j) out.push_back("f" + std::to_string(j));
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::io;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse_benchmark_config(R"(# sweep
families = RF, GB
train_fractions = 0.7, 0.9
seeds = 1, 2
pfi_variants = off
time_cutoffs = 60, 180
search_budget = 3
base_seed = 42
holdout_group = Cell4
)");
    CHECK(c.families == std::vector<Family>{Family::RF, Family::GB});
    CHECK(c.train_fractions == std::vector<double>{0.7, 0.9});
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(c.pfi_variants == std::vector<bool>{false});
    CHECK(c.search_budget == 3);
    CHECK(c.base_seed == 42);
    CHECK(c.holdout_group == "Cell4");
    CHECK(to_json(c)["families"] == nlohmann::json({"RF", "GB"}));

    CHECK(kind_of([] { parse_benchmark_config("colour = red\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { parse_benchmark_config("search_budget = 1\nsearch_budget = 2\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { parse_benchmark_config("time_cutoffs = 90, 30\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { parse_benchmark_config("families = SVM\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { parse_benchmark_config("train_fractions = 1.5\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { parse_benchmark_config("search_budget = 0\n"); }) == ErrorKind::config);
    CHECK(kind_of([] { parse_benchmark_config("families =\n"); }) == ErrorKind::config);
    CHECK_NOTHROW(validate_config(BenchmarkConfig{}));
}

TEST_CASE("synthetic dataset shape and determinism") {
    const auto r = synth_dataset({});
    const auto& t = r.table;
    CHECK(t.n_rows() == 166);
    CHECK(r.cells.size() == 5);
    const auto groups = t.group_ids();
    CHECK(std::set<std::string>(groups.begin(), groups.end()).size() == 5);
    for (const auto& name : {"solvent_htl", "p3ht", "pcbm", "ratio_p3ht_pcbm"}) {
        const auto& col = t.column(name).numeric;
        for (std::size_t i = 1; i < t.n_rows(); ++i)
            if (groups[i] == groups[i - 1]) CHECK(col[i] == col[i - 1]);
    }
    for (double v : t.column("solvent_htl").numeric) CHECK((v >= 250 && v <= 1000));
    for (double v : t.column("temperature").numeric) CHECK((v >= 12 && v <= 23));
    for (double v : t.column("humidity").numeric) CHECK((v >= 33 && v <= 88));
    for (double v : t.times()) CHECK((v >= 0 && v <= 181));
    CHECK(to_csv(synth_dataset({}).table) == to_csv(t));

    SynthConfig other;
    other.seed = 1;
    CHECK(to_csv(synth_dataset(other).table) != to_csv(t));
    CHECK(parse_csv(to_csv(t), synth_schema()) == t);
}

TEST_CASE("noiseless synthetic cells follow their documented curves") {
    SynthConfig cfg;
    cfg.noise_sd = 0;
    const auto r = synth_dataset(cfg);
    const auto groups = r.table.group_ids();
    const auto times = r.table.times();
    const auto y = r.table.target();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto& cell = *std::find_if(r.cells.begin(), r.cells.end(),
                                         [&](const SynthCell& c) { return c.name == groups[i]; });
        CHECK(y[i] == doctest::Approx(cell.curve(times[i])).epsilon(1e-12));
    }
}

TEST_CASE("k-fold indices partition the rows") {
    for (std::size_t n : {5u, 23u, 166u}) {
        for (std::size_t k : {2u, 5u}) {
            const auto folds = kfold_indices(n, k, 9);
            REQUIRE(folds.size() == k);
            std::set<std::size_t> seen;
            std::size_t lo = n, hi = 0;
            for (const auto& f : folds) {
                lo = std::min(lo, f.size());
                hi = std::max(hi, f.size());
                for (auto i : f) CHECK(seen.insert(i).second);
            }
            CHECK(seen.size() == n);
            CHECK(*seen.rbegin() == n - 1);
            CHECK(hi - lo <= 1);
        }
    }
    CHECK_THROWS_AS(kfold_indices(3, 5, 0), Error);
    CHECK_THROWS_AS(kfold_indices(10, 1, 0), Error);
}

TEST_CASE("quartile one-hot coding") {
    Design d;
    d.x.resize(8, 2);
    d.x.col(0) << 1, 2, 3, 4, 5, 6, 7, 8;
    d.x.col(1).setConstant(3.0);
    d.y = Eigen::VectorXd::LinSpaced(8, 0, 1);
    d.feature_names = {"a", "b"};
    const auto oh = quartile_onehot(d, d);
    CHECK(oh.feature_names == std::vector<std::string>{"a:Q2", "a:Q3", "a:Q4"});
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(oh.x.row(i).sum() <= 1.0);
    CHECK(oh.x.col(0).sum() == 2);
    CHECK(oh.x.col(2).sum() == 2);
}

TEST_CASE("verification battery") {
    const auto t = curated_synth();
    SplitConfig split_cfg{0.8, 17};
    const auto v = verify({Family::GB, {{"n_trees", 100}}, 3}, t, split_cfg, 5, t.feature_names());
    const auto s = split(t, split_cfg);
    const auto y_valid = t.design(s.valid).y;
    const std::vector<double> yv(y_valid.data(), y_valid.data() + y_valid.size());
    const double m = static_cast<double>(oracle::mean(yv));
    long double ss = 0;
    for (double y : yv) ss += (y - m) * (y - m);
    const double sd = std::sqrt(static_cast<double>(ss / yv.size()));
    CHECK(std::fabs(v.ymean_rmse - sd) < 1e-9);
    CHECK(v.yshuffle_rmse >= v.model_rmse);
    CHECK(v.ymean_rmse > v.model_rmse);
    CHECK(v.onehot_rmse.has_value());
    CHECK(v.fold_metrics.size() == 5);
    CHECK(v.pooled.n == t.n_rows());
    CHECK(v.n_train + v.n_valid == t.n_rows());
    const auto j = to_json(v);
    CHECK(j["kfold"]["k"] == 5);
}

TEST_CASE("verification rejects a fold with a constant target") {
    DataTable t({Column{ColumnSpec{"a", ColumnKind::numeric, "", ColumnRole::feature}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {}},
                 Column{ColumnSpec{"y", ColumnKind::numeric, "", ColumnRole::target}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, {}}});
    CHECK(kind_of([&] { verify({Family::MVL, {}, 0}, t, {0.7, 1}, 5, {"a"}); }) == ErrorKind::verification);
}

TEST_CASE("outlier detection") {
    const auto x = random_matrix(60, 2, 1);
    Eigen::VectorXd y = 2 * x.col(0) - x.col(1);
    const auto exact = train({Family::MVL, {}, 0}, x, y, names(2));
    CHECK(detect_outliers(exact, x, y).empty());
    CHECK(detect_outliers(exact, x, (y.array() + 3.0).matrix()).empty());

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 0.1);
    Eigen::VectorXd noisy = y;
    for (auto& v : noisy) v += g(rng);
    const auto model = train({Family::MVL, {}, 0}, x, noisy, names(2));
    Eigen::VectorXd corrupted = noisy;
    corrupted(17) += 10 * 0.1;
    const auto flagged = detect_outliers(model, x, corrupted, 2.0);
    // Rows already beyond 2 SD before corruption would be flagged regardless;
    // the corrupted row must be flagged and come first.
    REQUIRE(!flagged.empty());
    CHECK(flagged.front().row == 17);
    const auto base = detect_outliers(model, x, noisy, 2.0);
    CHECK(flagged.size() <= base.size() + 1);
    for (std::size_t i = 1; i < flagged.size(); ++i) CHECK(std::fabs(flagged[i - 1].z) >= std::fabs(flagged[i].z));
    CHECK_THROWS_AS(detect_outliers(model, x.topRows(2), noisy.head(2)), Error);
}

TEST_CASE("external test") {
    const auto t = curated_synth();
    std::vector<std::size_t> others, mine;
    const auto groups = t.group_ids();
    for (std::size_t i = 0; i < t.n_rows(); ++i) (groups[i] == "Cell4" ? mine : others).push_back(i);
    const auto model = train({Family::RF, {{"n_trees", 50}}, 0}, t.design(others));

    const auto ext = external_test(model, t, "Cell4");
    CHECK(!ext.leakage);
    CHECK(ext.rows.size() == mine.size());
    for (std::size_t i = 1; i < ext.rows.size(); ++i) CHECK(ext.rows[i - 1].time <= ext.rows[i].time);
    CHECK(ext.metrics.n == mine.size());

    CHECK(kind_of([&] { external_test(model, t, "Cell1"); }) == ErrorKind::leakage);
    const auto leaked = external_test(model, t, "Cell1", false);
    CHECK(leaked.leakage);
    CHECK(leaked.metrics.rmse < ext.metrics.rmse);
    CHECK(to_json(leaked)["leakage_warning"] == true);

    CHECK(kind_of([&] { external_test(model, t, "Cell9"); }) == ErrorKind::prediction);

    // A single-row group: R^2 is undefined but the error metrics are reported.
    const auto single = t.subset({mine.front()});
    const auto r = external_test(model, single, "Cell4");
    CHECK(!r.metrics.r2.has_value());
    CHECK(r.r2_note.find("constant observed vector") != std::string::npos);
    CHECK(r.metrics.n == 1);
    CHECK(r.metrics.rmse == doctest::Approx(r.metrics.mae).epsilon(1e-15));

    const auto narrow = t.without_columns({t.feature_names().front()});
    CHECK(kind_of([&] { external_test(model, narrow, "Cell4"); }) == ErrorKind::prediction);
}

TEST_CASE("Shapley values of a linear model have the closed form") {
    const auto x = random_matrix(40, 5, 2);
    Eigen::VectorXd w(5);
    w << 1.5, -2, 0.5, 3, 0;
    const Eigen::VectorXd y = (x * w).array() + 0.7;
    const auto model = train({Family::MVL, {}, 0}, x, y, names(5));
    const auto background = random_matrix(12, 5, 3);
    const auto rows = random_matrix(6, 5, 4);
    const auto s = shapley(model, rows, background);
    const auto [coef, intercept] = linear_coefficients(model);
    const Eigen::RowVectorXd bg_mean = background.colwise().mean();
    for (Eigen::Index r = 0; r < rows.rows(); ++r)
        for (Eigen::Index j = 0; j < 5; ++j)
            CHECK(std::fabs(s.values(r, j) - coef(j) * (rows(r, j) - bg_mean(j))) < 1e-9);
}

TEST_CASE("Shapley enumeration agrees with the permutation definition") {
    const auto x = random_matrix(60, 4, 5);
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < 60; ++i) y(i) = x(i, 0) * x(i, 1) + std::max(0.0, x(i, 2)) - x(i, 3);
    for (Family f : {Family::RF, Family::GB, Family::NN}) {
        LearnerSpec spec{f, {}, 1};
        if (f == Family::RF) spec.hyperparams = {{"n_trees", 15}};
        if (f == Family::NN) spec.hyperparams = {{"epochs", 300}, {"hidden", 8}};
        const auto model = train(spec, x, y, names(4));
        const auto background = random_matrix(5, 4, 6);
        const auto rows = random_matrix(3, 4, 7);
        const auto s = shapley(model, rows, background);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            const auto want = oracle::shapley_by_permutations(
                [&](const Eigen::RowVectorXd& z) { return model.predict(Eigen::MatrixXd(z))(0); }, rows.row(r),
                background);
            for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::fabs(s.values(r, j) - want[static_cast<std::size_t>(j)]) < 1e-9);
        }
    }
}

TEST_CASE("Shapley efficiency, constant models, symmetry and bounds") {
    const auto x = random_matrix(50, 3, 8);
    Eigen::VectorXd y = x.col(0) + x.col(1);
    const auto background = random_matrix(8, 3, 9);
    const auto rows = random_matrix(10, 3, 10);
    for (Family f : kAllFamilies) {
        const auto model = train({f, f == Family::NN ? Hyperparams{{"epochs", 200}} : Hyperparams{}, 0}, x, y, names(3));
        const auto s = shapley(model, rows, background, 3);
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
            CHECK(std::fabs(s.values.row(r).sum() - (s.predictions(r) - s.baseline)) < 1e-9);
        CHECK(s.background_size == 8);
    }

    // Constant target: GB with zero shrinkage is constant everywhere.
    const auto flat = train({Family::GB, {{"learning_rate", 0.0}, {"n_trees", 3}}, 0}, x, y, names(3));
    const auto sf = shapley(flat, rows, background);
    CHECK(sf.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sf.baseline == doctest::Approx(y.mean()).epsilon(1e-14));

    // f depends on x0 + x1 only; background marginals of x0 and x1 identical.
    Eigen::MatrixXd sym_bg(4, 3);
    sym_bg << 0.1, 0.1, 2, -1, -1, 0, 0.5, 0.5, -3, 2, 2, 1;
    const auto lin = train({Family::MVL, {}, 0}, x, y, names(3));
    Eigen::MatrixXd row(1, 3);
    row << 0.8, 0.8, -0.4;
    const auto ss = shapley(lin, row, sym_bg);
    CHECK(std::fabs(ss.values(0, 0) - ss.values(0, 1)) < 1e-9);

    const auto wide = random_matrix(30, 21, 11);
    const auto big = train({Family::RF, {{"n_trees", 2}}, 0}, wide, wide.col(0), names(21));
    try {
        (void)shapley(big, wide.topRows(1), wide.topRows(2));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::shapley);
        CHECK(std::string(e.what()).find("permutation importance") != std::string::npos);
    }
    CHECK_THROWS_AS(shapley(lin, row, Eigen::MatrixXd(0, 3)), Error);
    CHECK(to_json(ss)["baseline"].is_number());
}

TEST_CASE("sweep counting, champions and failures") {
    const auto t = curated_synth();
    BenchmarkConfig c;
    c.families = {Family::RF};
    c.train_fractions = {0.9};
    c.time_cutoffs = {180};
    c.search_budget = 1;
    const auto one = run_sweep(t, c, 1);
    REQUIRE(one.entries.size() == 2);
    CHECK(!one.entries[0].pfi);
    CHECK(one.entries[1].pfi);
    CHECK(one.entries[0].label() == "RF-90-10");
    CHECK(one.entries[1].label() == "RF-90-10-PFI");

    const auto sweep = run_sweep(t, small_config(), 1);
    CHECK(sweep.entries.size() == 2 * 2 * 1 * 2);
    for (const auto& champ : sweep.champions) {
        REQUIRE(champ.entry.has_value());
        const double best = sweep.entries[*champ.entry].valid_metrics->rmse;
        for (const auto& e : sweep.entries)
            if (e.cutoff == champ.cutoff && e.ok()) CHECK(e.valid_metrics->rmse >= best);
        CHECK(champ.by_rmse.front() == *champ.entry);
    }
    CHECK(run_sweep(t, small_config(), 3).entries.size() == sweep.entries.size());

    BenchmarkConfig early = small_config();
    early.time_cutoffs = {-5};
    try {
        (void)run_sweep(t, early, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("empty cutoff window") != std::string::npos);
    }
}

TEST_CASE("a failing sweep cell is recorded, not fatal") {
    // 'probe' is constant within the first 60 days, so MVL is rank deficient there.
    auto t = curated_synth();
    std::vector<Column> cols = t.columns();
    Column probe{ColumnSpec{"probe", ColumnKind::numeric, "", ColumnRole::feature}, {}, {}};
    const auto times = t.times();
    for (std::size_t i = 0; i < t.n_rows(); ++i) probe.numeric.push_back(times[i] <= 60 ? 1.0 : std::sin(static_cast<double>(i)));
    cols.insert(cols.begin() + 1, probe);
    const DataTable with_probe(cols);
    BenchmarkConfig c = small_config();
    c.time_cutoffs = {60};
    c.pfi_variants = {false};
    const auto sweep = run_sweep(with_probe, c, 2);
    REQUIRE(sweep.entries.size() == 2);
    CHECK(!sweep.entries[0].ok());
    CHECK(sweep.entries[0].error.find("rank deficient") != std::string::npos);
    CHECK(sweep.entries[1].ok());
    CHECK(sweep.champions[0].entry == std::optional<std::size_t>(1));
}

TEST_CASE("benchmark reports are deterministic and complete") {
    const auto t = curated_synth();
    BenchmarkConfig c = small_config();
    c.holdout_group = "Cell4";
    const auto a = run_benchmark(t, c, 1);
    const auto b = run_benchmark(t, c, 4);
    CHECK(to_json(a).dump() == to_json(b).dump());
    REQUIRE(a.champion.has_value());
    REQUIRE(a.external.has_value());
    CHECK(a.external->group == "Cell4");
    CHECK(a.attribution.has_value());
    CHECK(a.importance.has_value());
    CHECK(!a.predictions.empty());
    for (const auto& e : a.sweep.entries) CHECK(e.n_train + e.n_valid < t.n_rows());

    const auto j = to_json(a);
    CHECK(j["cutoffs"].size() == 2);
    CHECK(j["entries"].size() == a.sweep.entries.size());

    const auto dir = testutil::scratch("report");
    write_report(a, dir);
    for (const auto* f : {"report.json", "report.md", "predicted_vs_observed.csv", "predicted_vs_observed.svg",
                          "pfi.svg", "shapley.svg", "champion_model.json", "external_predicted_vs_observed.csv"})
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    CHECK(nlohmann::json::parse(testutil::slurp(dir / "report.json")) == j);
    const auto reloaded = load_model(dir / "champion_model.json");
    std::vector<std::size_t> all(t.n_rows());
    std::iota(all.begin(), all.end(), 0);
    const auto dc = t.design(all, reloaded.feature_names());
    CHECK(reloaded.predict(dc) == a.champion_model->predict(dc));
    CHECK(testutil::slurp(dir / "report.md").find("| ") != std::string::npos);

    BenchmarkConfig bad = c;
    bad.holdout_group = "Cell9";
    CHECK_THROWS_AS(run_benchmark(t, bad, 1), Error);
}
