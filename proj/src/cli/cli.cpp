#include "degbench/cli.hpp"

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "common/text.hpp"
#include "degbench/data.hpp"
#include "degbench/error.hpp"
#include "degbench/jv.hpp"
#include "degbench/learners.hpp"
#include "degbench/lsfit.hpp"
#include "degbench/pipeline.hpp"

namespace degbench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDefaultOut = "degbench-out";

struct Common {
    std::uint64_t seed = 0;
    std::vector<CLI::Option*> seed_opts;  // one per subcommand; at most one is parsed
    std::size_t jobs = 0;
    bool force = false;
};

void add_seed(CLI::App* app, Common& c) {
    c.seed_opts.push_back(app->add_option("--seed", c.seed,
                                 "Base seed for all randomness (falls back to $DEGBENCH_SEED, then 0)"));
}
void add_jobs(CLI::App* app, Common& c) {
    app->add_option("--jobs", c.jobs, "Worker threads (0 = hardware concurrency); results do not depend on it");
}
void add_force(CLI::App* app, Common& c) {
    app->add_flag("--force", c.force, "Overwrite existing outputs");
}

std::uint64_t resolve_seed(const Common& c) {
    for (const auto* o : c.seed_opts)
        if (o->count() > 0) return c.seed;
    if (const char* env = std::getenv("DEGBENCH_SEED"); env && *env) {
        std::uint64_t v = 0;
        const std::string s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw CLI::ValidationError("DEGBENCH_SEED", "'" + s + "' is not a 64-bit unsigned integer");
        return v;
    }
    return 0;
}

void claim_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "'" + dir.string() + "' exists and is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw Error(ErrorKind::io, "output directory '" + dir.string() + "' is not empty; pass --force to overwrite");
    }
    fs::create_directories(dir);
}

void claim_file(const fs::path& file, bool force) {
    if (fs::exists(file) && !force)
        throw Error(ErrorKind::io, "'" + file.string() + "' exists; pass --force to overwrite");
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

fs::path with_suffix(fs::path p, const std::string& suffix) {
    return p.replace_extension(suffix);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string metrics_line(const MetricsBundle& m) {
    return "R2=" + (m.r2 ? fmt(*m.r2) : std::string("n/a")) + " RMSE=" + fmt(m.rmse) + " SSE=" + fmt(m.sse) +
           " MAE=" + fmt(m.mae) + " n=" + std::to_string(m.n);
}

struct DataArgs {
    std::string csv;
    std::string schema;
    bool normalize = false;
    double corr_threshold = 0.9;
    bool no_dedup = false;
};

void add_data(CLI::App* app, DataArgs& d, bool curation_flags) {
    app->add_option("--csv", d.csv, "Input CSV (header row required)")->required();
    app->add_option("--schema", d.schema, "Schema file: one 'name=..; kind=..; unit=..; role=..' line per column")
        ->required()
        ;
    app->add_flag("--normalize-target", d.normalize, "Divide the target by each group's first (earliest) value");
    if (curation_flags) {
        app->add_option("--corr-threshold", d.corr_threshold, "Drop the later of two features with |r| >= this")
            ->check(CLI::Range(0.0, 1.0));
        app->add_flag("--no-dedup", d.no_dedup, "Keep exact duplicate rows");
    }
}

CurationResult load_curated(const DataArgs& d) {
    const auto table = load_csv(d.csv, load_schema(d.schema));
    if (d.corr_threshold <= 0) throw Error(ErrorKind::config, "--corr-threshold must be in (0, 1]");
    auto cur = curate(table, {d.corr_threshold, !d.no_dedup});
    if (d.normalize) cur.table = normalize_target(cur.table);
    return cur;
}

// Tables fed to an existing model: encode categoricals, keep every row.
DataTable load_for_model(const DataArgs& d) {
    auto table = load_csv(d.csv, load_schema(d.schema));
    table = curate(table, {1.0, false}).table;
    if (d.normalize) table = normalize_target(table);
    return table;
}

std::vector<std::size_t> all_rows(const DataTable& t) {
    std::vector<std::size_t> rows(t.n_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

struct SweepArgs {
    std::string config;
    std::vector<std::string> families;
    std::vector<double> fractions;
    std::vector<double> cutoffs;
    std::size_t budget = 0;
    std::string holdout;
};

void add_sweep(CLI::App* app, SweepArgs& s) {
    app->add_option("--config", s.config, "Benchmark config file (key = value lines)");
    app->add_option("--families", s.families, "Learner families, e.g. MVL,RF,GB,NN")->delimiter(',');
    app->add_option("--fractions", s.fractions, "Training fractions, e.g. 0.6,0.7,0.8,0.9")->delimiter(',');
    app->add_option("--cutoffs", s.cutoffs, "Time cutoffs in days, ascending")->delimiter(',');
    app->add_option("--budget", s.budget, "Hyperparameter candidates per cell (>= 1)");
    app->add_option("--holdout-group", s.holdout, "Group kept out of the sweep and used as external test");
}

BenchmarkConfig sweep_config(const SweepArgs& s, std::uint64_t seed) {
    BenchmarkConfig c = s.config.empty() ? BenchmarkConfig{} : load_benchmark_config(s.config);
    if (!s.families.empty()) {
        c.families.clear();
        for (const auto& f : s.families) c.families.push_back(parse_family(f));
    }
    if (!s.fractions.empty()) c.train_fractions = s.fractions;
    if (!s.cutoffs.empty()) c.time_cutoffs = s.cutoffs;
    if (s.budget > 0) c.search_budget = s.budget;
    if (!s.holdout.empty()) c.holdout_group = s.holdout;
    c.base_seed = seed;
    validate_config(c);
    return c;
}

std::string champion_line(const BenchmarkReport& r) {
    if (!r.champion) return "no successful sweep entry";
    const auto& e = r.sweep.entries[*r.champion];
    return "champion " + e.label() + " @" + detail::format_double(e.cutoff) + "d validation " +
           metrics_line(*e.valid_metrics);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Degradation modelling toolkit: parametric fits, J-V extraction and ML benchmarking", "degbench"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "degbench 1.0");

    Common common;
    DataArgs data;
    SweepArgs sweep;
    std::string out_path;
    std::string model_path;

    // curate
    auto* c_curate = app.add_subcommand("curate", "Ingest a CSV, deduplicate, one-hot encode and drop correlated features");
    add_data(c_curate, data, true);
    c_curate->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_force(c_curate, common);

    // lsfit
    std::string model_kind, input, x_col = "day", y_col = "pce", group_col;
    std::vector<double> windows, horizons;
    FitOptions fit_opts;
    auto* c_lsfit = app.add_subcommand("lsfit", "Windowed parametric fit-and-forecast experiment");
    c_lsfit->add_option("--model", model_kind, "exp1, exp2, gauss1, gauss2 or poly3")->required();
    c_lsfit->add_option("--input", input, "Long-format series CSV")->required();
    c_lsfit->add_option("--x-col", x_col, "Time column")->capture_default_str();
    c_lsfit->add_option("--y-col", y_col, "Response column")->capture_default_str();
    c_lsfit->add_option("--group-col", group_col, "Device column (omit for a single series)");
    c_lsfit->add_option("--windows", windows, "Fitting windows in days, e.g. 30,60,90,120")->required()->delimiter(',');
    c_lsfit->add_option("--horizons", horizons, "Forecast horizons in days")->required()->delimiter(',');
    c_lsfit->add_option("--max-iter", fit_opts.max_iter, "LM iteration cap")->capture_default_str();
    c_lsfit->add_option("--tol-grad", fit_opts.tol_grad, "Gradient infinity-norm tolerance")->capture_default_str();
    c_lsfit->add_option("--tol-step", fit_opts.tol_step, "Relative step tolerance")->capture_default_str();
    c_lsfit->add_option("--lambda0", fit_opts.lambda0, "Initial damping")->capture_default_str();
    c_lsfit->add_option("--restarts", fit_opts.n_restarts, "Starts (heuristic + random)")->capture_default_str();
    c_lsfit->add_option("--out", out_path, "Output JSON path (markdown written alongside)")
        ->default_str(std::string(kDefaultOut) + "/forecast.json");
    add_seed(c_lsfit, common);
    add_jobs(c_lsfit, common);
    add_force(c_lsfit, common);

    // extract-jv
    double irradiance = 100.0;
    std::string sign = "negative";
    auto* c_jv = app.add_subcommand("extract-jv", "Extract Jsc, Voc, Pmpp, FF and PCE from J-V sweeps");
    c_jv->add_option("--input", input, "J-V CSV file, or a directory of <cell>_<day>.csv files")
        ->required()
        ;
    c_jv->add_option("--irradiance", irradiance, "Incident irradiance G in mW/cm^2")->capture_default_str();
    c_jv->add_option("--sign", sign, "Photocurrent sign in the raw sweep")
        ->check(CLI::IsMember({"negative", "positive"}))
        ->capture_default_str();
    c_jv->add_option("--out", out_path, "Output CSV path")->default_str(std::string(kDefaultOut) + "/jv_params.csv");
    add_force(c_jv, common);

    // generate
    auto* c_gen = app.add_subcommand("generate", "Run the benchmark sweep and select champions");
    add_data(c_gen, data, true);
    add_sweep(c_gen, sweep);
    c_gen->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_seed(c_gen, common);
    add_jobs(c_gen, common);
    add_force(c_gen, common);

    // predict
    std::string group;
    bool allow_leakage = false;
    auto* c_pred = app.add_subcommand("predict", "Predict with a saved model; optionally score a held-out group");
    c_pred->add_option("--model", model_path, "Model JSON")->required();
    add_data(c_pred, data, false);
    c_pred->add_option("--group", group, "Score only this group as an external test");
    c_pred->add_flag("--allow-leakage", allow_leakage, "Score a group the model was trained on (flagged)");
    c_pred->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_force(c_pred, common);

    // verify
    double fraction = 0.9;
    std::size_t k = 5;
    auto* c_ver = app.add_subcommand("verify", "y-mean, y-shuffle, onehot and k-fold tests for a model's spec");
    c_ver->add_option("--model", model_path, "Model JSON (its spec and features are reused)")
        ->required()
        ;
    add_data(c_ver, data, false);
    c_ver->add_option("--fraction", fraction, "Training fraction of the split")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_ver->add_option("--k", k, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
    c_ver->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_seed(c_ver, common);
    add_jobs(c_ver, common);
    add_force(c_ver, common);

    // explain
    std::size_t background = 16, max_rows = 50, repeats = 5;
    double z = 2.0;
    auto* c_exp = app.add_subcommand("explain", "Permutation importance, exact Shapley values and outliers");
    c_exp->add_option("--model", model_path, "Model JSON")->required();
    add_data(c_exp, data, false);
    c_exp->add_option("--background", background, "Shapley background rows (seeded sample)")->capture_default_str();
    c_exp->add_option("--rows", max_rows, "Explain at most this many rows")->capture_default_str();
    c_exp->add_option("--repeats", repeats, "PFI permutations per feature (>= 5)")->capture_default_str();
    c_exp->add_option("--z", z, "Outlier |z| threshold")->capture_default_str();
    c_exp->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_seed(c_exp, common);
    add_jobs(c_exp, common);
    add_force(c_exp, common);

    // synth
    SynthConfig synth;
    std::string decay_kind;
    std::vector<double> decay_coeffs;
    auto* c_syn = app.add_subcommand("synth", "Write a synthetic dataset with the standard schema");
    c_syn->add_option("--cells", synth.n_cells, "Number of devices")->check(CLI::PositiveNumber)->capture_default_str();
    c_syn->add_option("--rows", synth.total_rows, "Total rows across devices")->capture_default_str();
    c_syn->add_option("--noise", synth.noise_sd, "Relative Gaussian noise SD")->capture_default_str();
    c_syn->add_option("--max-day", synth.max_day, "Last measurement day")->capture_default_str();
    c_syn->add_option("--decay-model", decay_kind, "Base decay family (default: built-in gauss2)");
    c_syn->add_option("--decay-coeffs", decay_coeffs, "Base decay coefficients")->delimiter(',');
    c_syn->add_option("--out", out_path, "Output CSV (schema written next to it as .schema.txt)")
        ->default_str(std::string(kDefaultOut) + "/synth.csv");
    add_seed(c_syn, common);
    add_force(c_syn, common);

    // report
    auto* c_rep = app.add_subcommand("report", "Re-render markdown, CSV and SVG artifacts from report.json");
    c_rep->add_option("--input", input, "report.json from generate or full")->required();
    c_rep->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_force(c_rep, common);

    // full
    auto* c_full = app.add_subcommand("full", "curate -> generate -> verify -> explain -> report");
    add_data(c_full, data, true);
    add_sweep(c_full, sweep);
    c_full->add_option("--out", out_path, "Output directory")->default_str(kDefaultOut);
    add_seed(c_full, common);
    add_jobs(c_full, common);
    add_force(c_full, common);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    if (out_path.empty()) {
        if (c_lsfit->parsed()) out_path = std::string(kDefaultOut) + "/forecast.json";
        else if (c_jv->parsed()) out_path = std::string(kDefaultOut) + "/jv_params.csv";
        else if (c_syn->parsed()) out_path = std::string(kDefaultOut) + "/synth.csv";
        else out_path = kDefaultOut;
    }

    try {
        const std::uint64_t seed = resolve_seed(common);
        const fs::path outp(out_path);

        if (c_curate->parsed()) {
            auto cur = load_curated(data);
            claim_dir(outp, common.force);
            write_csv(cur.table, outp / "curated.csv");
            detail::write_file(outp / "curated.schema.txt", format_schema(cur.table.schema()));
            detail::write_file(outp / "curation_log.json", curation_log_json(cur.log).dump(2) + "\n");
            out << "curated " << cur.table.n_rows() << " rows, " << cur.table.columns().size() << " columns, "
                << cur.log.size() << " curation events\n";
        } else if (c_lsfit->parsed()) {
            fit_opts.seed = seed;
            const auto series = load_series(input, x_col, y_col,
                                            group_col.empty() ? std::nullopt : std::optional<std::string>(group_col));
            const auto result =
                forecast_experiment(parse_model_kind(model_kind), series, windows, horizons, fit_opts, common.jobs);
            claim_file(outp, common.force);
            detail::write_file(outp, to_json(result).dump(2) + "\n");
            detail::write_file(with_suffix(outp, ".md"), to_markdown(result));
            const auto& last = result.summary.back();
            out << model_kind << ": " << result.fits.size() << " fits; window " << last.window << "d -> horizon "
                << last.horizon << "d mean RMSE=" << fmt(last.rmse_mean) << " SSE=" << fmt(last.sse_mean)
                << " MAE=" << fmt(last.mae_mean) << "\n";
        } else if (c_jv->parsed()) {
            const auto s = sign == "positive" ? PhotocurrentSign::positive : PhotocurrentSign::negative;
            std::vector<JVRecord> records;
            if (fs::is_directory(input)) {
                records = extract_directory(input, irradiance, s);
            } else {
                records.push_back({fs::path(input).stem().string(), 0.0,
                                   extract_params(load_jv_csv(input, irradiance), s)});
            }
            claim_file(outp, common.force);
            detail::write_file(outp, jv_records_csv(records));
            if (records.size() == 1) {
                const auto& p = records.front().params;
                out << "Jsc=" << fmt(p.jsc) << " Voc=" << fmt(p.voc) << " Pmpp=" << fmt(p.pmpp)
                    << " FF=" << fmt(p.ff) << " PCE=" << fmt(100 * p.pce) << "%\n";
            } else {
                out << "extracted " << records.size() << " J-V curves\n";
            }
        } else if (c_gen->parsed() || c_full->parsed()) {
            const auto config = sweep_config(sweep, seed);
            auto cur = load_curated(data);
            claim_dir(outp, common.force);
            BenchmarkReport report;
            if (c_full->parsed()) {
                report = run_benchmark(cur.table, config, common.jobs);
            } else {
                report.config = config;
                report.sweep = run_sweep(cur.table, config, common.jobs);
                for (auto it = report.sweep.champions.rbegin(); it != report.sweep.champions.rend(); ++it)
                    if (it->entry) {
                        report.champion = it->entry;
                        break;
                    }
                if (report.champion) {
                    auto entry = report.sweep.entries[*report.champion];
                    report.champion_model = fit_entry(cur.table, config, entry).model;
                }
            }
            report.curation = cur.log;
            report.normalized_target = data.normalize;
            write_csv(cur.table, outp / "curated.csv");
            detail::write_file(outp / "curated.schema.txt", format_schema(cur.table.schema()));
            write_report(report, outp);
            out << champion_line(report) << "\n";
        } else if (c_pred->parsed()) {
            const auto model = load_model(model_path);
            const auto table = load_for_model(data);
            claim_dir(outp, common.force);
            json result;
            if (!group.empty()) {
                const auto ext = external_test(model, table, group, !allow_leakage);
                result = to_json(ext);
                json preds = result["predictions"];
                for (auto& p : preds) p["group"] = group;
                detail::write_file(outp / "predictions.csv", predictions_csv(preds));
                if (ext.leakage) err << "warning: model was trained on group '" << group << "'\n";
                out << group << " external " << metrics_line(ext.metrics) << "\n";
            } else {
                const auto d = table.design(all_rows(table), model.feature_names());
                const Eigen::VectorXd pred = model.predict(d);
                const auto m = evaluate(d.y, pred);
                json preds = json::array();
                for (Eigen::Index i = 0; i < pred.size(); ++i)
                    preds.push_back({{"row", i}, {"group", d.groups[static_cast<std::size_t>(i)]},
                                     {"time", d.time.empty() ? 0.0 : d.time[static_cast<std::size_t>(i)]},
                                     {"observed", d.y(i)}, {"predicted", pred(i)}});
                result = {{"partition", "all rows of the input"}, {"metrics", to_json(m)}, {"predictions", preds}};
                detail::write_file(outp / "predictions.csv", predictions_csv(preds));
                out << "predicted " << pred.size() << " rows " << metrics_line(m) << "\n";
            }
            detail::write_file(outp / "predictions.json", result.dump(2) + "\n");
        } else if (c_ver->parsed()) {
            const auto model = load_model(model_path);
            const auto table = load_for_model(data);
            SplitConfig sc;
            sc.train_fraction = fraction;
            sc.seed = seed;
            const auto v = verify(model.spec(), table, sc, k, model.feature_names(), common.jobs);
            claim_dir(outp, common.force);
            detail::write_file(outp / "verification.json", to_json(v).dump(2) + "\n");
            out << "model RMSE=" << fmt(v.model_rmse) << " y-mean=" << fmt(v.ymean_rmse)
                << " y-shuffle=" << fmt(v.yshuffle_rmse)
                << " onehot=" << (v.onehot_rmse ? fmt(*v.onehot_rmse) : std::string("n/a")) << " " << k
                << "-fold pooled " << metrics_line(v.pooled) << "\n";
        } else if (c_exp->parsed()) {
            const auto model = load_model(model_path);
            const auto table = load_for_model(data);
            const auto d = table.design(all_rows(table), model.feature_names());
            if (background < 1) throw Error(ErrorKind::config, "--background must be at least 1");
            json result;
            const auto fi = permutation_importance(model, d.x, d.y, repeats, derive_seed(seed, 1));
            result["permutation_importance"] = to_json(fi);
            result["permutation_importance"]["partition"] = "all rows of the input";

            std::vector<std::size_t> bg = all_rows(table);
            Rng rng(derive_seed(seed, 2));
            shuffle_in_place(std::span<std::size_t>(bg), rng);
            bg.resize(std::min(background, bg.size()));
            std::sort(bg.begin(), bg.end());
            const auto bgd = table.design(bg, model.feature_names());
            const auto n_explain = static_cast<Eigen::Index>(std::min<std::size_t>(max_rows, table.n_rows()));
            auto sh = shapley(model, d.x.topRows(n_explain), bgd.x, common.jobs);
            sh.background_rows = bg;
            for (Eigen::Index i = 0; i < n_explain; ++i) sh.explained_rows.push_back(static_cast<std::size_t>(i));
            result["shapley"] = to_json(sh);

            result["outliers"] = json::array();
            if (d.x.rows() >= 3)
                for (const auto& o : detect_outliers(model, d.x, d.y, z))
                    result["outliers"].push_back({{"row", o.row}, {"residual", o.residual}, {"z", o.z}});
            claim_dir(outp, common.force);
            detail::write_file(outp / "explain.json", result.dump(2) + "\n");
            detail::write_file(outp / "pfi.svg", bar_svg(fi.features, fi.importance, "Permutation feature importance"));
            detail::write_file(outp / "shapley.svg",
                               bar_svg(sh.features, result["shapley"]["mean_abs_attribution"].get<std::vector<double>>(),
                                       "Mean |Shapley attribution|"));
            const auto top = std::max_element(fi.importance.begin(), fi.importance.end()) - fi.importance.begin();
            out << "top PFI feature " << fi.features[static_cast<std::size_t>(top)] << "; "
                << result["outliers"].size() << " outliers at |z| > " << z << "\n";
        } else if (c_syn->parsed()) {
            synth.seed = seed;
            if (!decay_kind.empty()) synth.decay = ParametricModel(parse_model_kind(decay_kind), decay_coeffs);
            else if (!decay_coeffs.empty()) throw Error(ErrorKind::config, "--decay-coeffs needs --decay-model");
            const auto result = synth_dataset(synth);
            const fs::path schema_path = with_suffix(outp, ".schema.txt");
            claim_file(outp, common.force);
            claim_file(schema_path, common.force);
            write_csv(result.table, outp);
            detail::write_file(schema_path, format_schema(synth_schema()));
            out << "wrote " << result.table.n_rows() << " rows for " << result.cells.size() << " cells to "
                << outp.string() << "\n";
        } else if (c_rep->parsed()) {
            json j;
            try {
                j = json::parse(detail::read_file(input));
            } catch (const json::exception& e) {
                throw Error(ErrorKind::parse, input + ": " + e.what());
            }
            claim_dir(outp, common.force);
            try {
                render_report(j, outp);
            } catch (const json::exception& e) {
                throw Error(ErrorKind::parse, input + " is not a benchmark report: " + e.what());
            }
            out << "rendered report into " << outp.string() << "\n";
        }
        return 0;
    } catch (const CLI::ValidationError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << json{{"error", e.what()}, {"kind", std::string(to_string(e.kind()))}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << json{{"error", e.what()}, {"kind", "internal"}}.dump() << "\n";
        return 1;
    }
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace degbench::cli
