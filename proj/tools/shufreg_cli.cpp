// shufreg: shuffled linear regression from the command line.
//
// Subcommands:
//   generate        synthesize a shuffled regression dataset (CSV + truth sidecar)
//   fit             fit OLS / Hard EM / Stochastic EM on a dataset CSV
//   experiment      run a named experiment preset and emit a report CSV
//   make-demo-data  write the bundled housing/sequence stand-in datasets
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shufreg/csv.hpp"
#include "shufreg/demo_data.hpp"
#include "shufreg/shufreg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace shufreg;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240613;  // documented default

std::string output_dir_or_default(std::string out) {
    if (!out.empty()) return out;
    if (const char* env = std::getenv("SHUFREG_OUT")) return env;
    return ".";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError(dir + ": cannot create output directory");
}

void write_manifest(const std::string& dir, const std::string& command,
                    const json& config,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_names) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    json inputs = json::object();
    for (const auto& path : input_paths) inputs[path] = file_digest(path);
    manifest["inputs"] = inputs;
    manifest["outputs"] = output_names;
    std::ofstream out(dir + "/manifest.json", std::ios::binary);
    if (!out) throw DataError(dir + "/manifest.json: cannot open for writing");
    out << manifest.dump(2) << '\n';
}

struct GenerateArgs {
    Index n = 100;
    Index d = 10;
    double sigma = 0.3;
    std::string shuffle = "full";
    Index groups = 1;
    double crossbin = 0.0;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
};

std::vector<Index> even_bounds(Index n, Index G) {
    if (G < 1 || G > n) throw ConfigError("groups must be in [1, n]");
    std::vector<Index> bounds(static_cast<std::size_t>(G) + 1, 0);
    const Index base = n / G;
    const Index rem = n % G;
    for (Index g = 0; g < G; ++g) {
        bounds[static_cast<std::size_t>(g) + 1] =
            bounds[static_cast<std::size_t>(g)] + base + (g < rem ? 1 : 0);
    }
    return bounds;
}

int cmd_generate(const GenerateArgs& args) {
    const std::string dir = output_dir_or_default(args.out);
    ensure_dir(dir);

    ShuffleMode mode = ShuffleMode::full();
    if (args.shuffle == "identity") {
        mode = ShuffleMode::identity();
    } else if (args.shuffle == "full") {
        mode = ShuffleMode::full();
    } else if (args.shuffle == "grouped") {
        mode = ShuffleMode::grouped(even_bounds(args.n, args.groups), args.crossbin);
    } else {
        throw ConfigError("unknown shuffle mode '" + args.shuffle +
                          "' (identity|full|grouped)");
    }
    const SyntheticInstance inst =
        generate(SyntheticSpec{args.n, args.d, args.sigma, args.seed}, mode);

    // dataset.csv: x0..x{d-1},y
    std::vector<std::string> header;
    for (Index j = 0; j < args.d; ++j) header.push_back("x" + std::to_string(j));
    header.push_back("y");
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < args.n; ++i) {
        std::vector<std::string> row;
        for (Index j = 0; j < args.d; ++j) {
            row.push_back(csv::format_double(inst.X(i, j)));
        }
        row.push_back(csv::format_double(inst.y_observed[i]));
        rows.push_back(std::move(row));
    }
    csv::write_file(dir + "/dataset.csv", header, rows);

    // truth.csv: generating weights, permutation, and noise level
    std::vector<std::vector<std::string>> truth;
    for (Index j = 0; j < args.d; ++j) {
        truth.push_back({"w", std::to_string(j), csv::format_double(inst.w_true[j])});
    }
    for (Index i = 0; i < args.n; ++i) {
        truth.push_back({"pi", std::to_string(i),
                         std::to_string(inst.pi_true.map[static_cast<std::size_t>(i)])});
    }
    truth.push_back({"sigma", "0", csv::format_double(args.sigma)});
    csv::write_file(dir + "/truth.csv", {"kind", "index", "value"}, truth);

    json config{{"n", args.n},          {"d", args.d},
                {"sigma", args.sigma},  {"shuffle", args.shuffle},
                {"groups", args.groups}, {"crossbin", args.crossbin},
                {"seed", args.seed}};
    write_manifest(dir, "generate", config, {}, {"dataset.csv", "truth.csv"});
    std::cout << "wrote " << dir << "/dataset.csv (" << args.n << "x" << args.d
              << ")\n";
    return 0;
}

struct FitArgs {
    std::string data;
    std::string label = "y";
    std::string method = "stochastic-em";
    std::string truth;
    Index groups = 1;
    std::string group_by = "label";
    std::string group_feature;
    bool intercept = false;
    bool non_cumulative = false;
    Index iterations = 50;
    Index steps = 0;
    Index burn = -1;
    Index gap = 0;
    Index restarts = 0;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
};

WeightVector read_truth_weights(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    std::vector<double> w;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r][0] == "w") {
            w.push_back(csv::parse_double(table.rows[r][2], path, r + 2, 3));
        }
    }
    WeightVector out(static_cast<Index>(w.size()));
    for (std::size_t j = 0; j < w.size(); ++j) out[static_cast<Index>(j)] = w[j];
    return out;
}

int cmd_fit(const FitArgs& args) {
    const std::string dir = output_dir_or_default(args.out);
    ensure_dir(dir);

    const Dataset data = load_numeric_dataset(args.data, args.label, args.intercept);

    EMConfig cfg;
    cfg.iterations = args.iterations;
    cfg.sampling_steps = args.steps;
    cfg.burn_steps = args.burn;
    cfg.sample_gap = args.gap;
    cfg.restarts = args.restarts;
    cfg.seed = args.seed;
    cfg.non_cumulative = args.non_cumulative;

    GroupedDataset grouped;
    if (args.groups > 1) {
        if (args.group_by == "label") {
            grouped = group_by_label_quantiles(data.X, data.y, args.groups);
        } else if (args.group_by == "feature") {
            Index feature_index = -1;
            for (std::size_t i = 0; i < data.feature_names.size(); ++i) {
                if (data.feature_names[i] == args.group_feature) {
                    feature_index = static_cast<Index>(i);
                }
            }
            if (feature_index < 0) {
                throw ConfigError("--group-feature must name a feature column");
            }
            grouped = group_by_feature(data.X, data.y, feature_index, args.groups);
        } else {
            throw ConfigError("--group-by must be label or feature");
        }
    } else {
        grouped = single_group(data.X, data.y);
    }

    FitResult fit;
    if (args.method == "ols") {
        fit = fit_ols_baseline(grouped.X, grouped.y);
    } else if (args.method == "hard-em") {
        fit = fit_hard_em_grouped(grouped, cfg);
    } else if (args.method == "stochastic-em") {
        fit = fit_stochastic_em_grouped(grouped, cfg);
    } else {
        throw ConfigError("unknown method '" + args.method +
                          "' (ols|hard-em|stochastic-em)");
    }

    // fit.csv: weights and noise estimate, one name/value row each
    std::vector<std::vector<std::string>> fit_rows;
    for (Index j = 0; j < fit.weights.size(); ++j) {
        fit_rows.push_back(
            {"weight_" + std::to_string(j), csv::format_double(fit.weights[j])});
    }
    fit_rows.push_back({"sigma2", csv::format_double(fit.sigma2)});
    fit_rows.push_back(
        {"residual_ss", csv::format_double(fit.trace.back().residual_ss)});
    double parameter_error = -1.0;
    if (!args.truth.empty()) {
        const WeightVector w_true = read_truth_weights(args.truth);
        if (w_true.size() != fit.weights.size()) {
            throw DataError(args.truth + ": truth has " +
                            std::to_string(w_true.size()) + " weights, fit has " +
                            std::to_string(fit.weights.size()));
        }
        parameter_error = (fit.weights - w_true).norm();
        fit_rows.push_back(
            {"parameter_error", csv::format_double(parameter_error)});
    }
    csv::write_file(dir + "/fit.csv", {"name", "value"}, fit_rows);

    // trace.csv: per-iteration diagnostics
    std::vector<std::string> trace_header{"iteration", "residual_ss",
                                          "acceptance_rate"};
    for (Index j = 0; j < fit.weights.size(); ++j) {
        trace_header.push_back("weight_" + std::to_string(j));
    }
    std::vector<std::vector<std::string>> trace_rows;
    for (std::size_t m = 0; m < fit.trace.size(); ++m) {
        std::vector<std::string> row{std::to_string(m),
                                     csv::format_double(fit.trace[m].residual_ss),
                                     csv::format_double(fit.trace[m].acceptance_rate)};
        for (Index j = 0; j < fit.weights.size(); ++j) {
            row.push_back(csv::format_double(fit.trace[m].weights[j]));
        }
        trace_rows.push_back(std::move(row));
    }
    csv::write_file(dir + "/trace.csv", trace_header, trace_rows);

    json config{{"data", args.data},
                {"label", args.label},
                {"method", args.method},
                {"groups", args.groups},
                {"group_by", args.group_by},
                {"group_feature", args.group_feature},
                {"intercept", args.intercept},
                {"non_cumulative", args.non_cumulative},
                {"iterations", args.iterations},
                {"steps", args.steps},
                {"burn", args.burn},
                {"gap", args.gap},
                {"restarts", args.restarts},
                {"seed", args.seed}};
    std::vector<std::string> inputs{args.data};
    if (!args.truth.empty()) inputs.push_back(args.truth);
    write_manifest(dir, "fit", config, inputs, {"fit.csv", "trace.csv"});

    std::cout << "method=" << args.method << " sigma2=" << fit.sigma2;
    if (parameter_error >= 0.0) std::cout << " parameter_error=" << parameter_error;
    std::cout << "\n";
    return 0;
}

struct ExperimentArgs {
    std::string preset;
    std::string scale = "desk";
    std::string dataset;
    std::string pipeline = "feature";
    std::string label_column = "lstat";
    std::string group_feature = "medv";
    Index groups = 3;
    double crossbin = -1.0;  // -1: pipeline default
    bool intercept = true;
    std::uint64_t seed = kDefaultSeed;
    Index jobs = 1;
    std::string out;
};

int cmd_experiment(const ExperimentArgs& args) {
    const std::string dir = output_dir_or_default(args.out);
    ensure_dir(dir);
    const bool desk = args.scale == "desk";
    if (!desk && args.scale != "paper") {
        throw ConfigError("--scale must be desk or paper");
    }

    EMConfig cfg;
    cfg.seed = args.seed;

    ExperimentReport report;
    std::vector<std::string> inputs;
    if (args.preset == "fig2") {
        const std::vector<Index> n_values =
            desk ? std::vector<Index>{100, 200}
                 : std::vector<Index>{100, 250, 500, 750, 1000};
        report = run_error_sweep(n_values, desk ? 10 : 30, 1.0, desk ? 5 : 10,
                                 cfg, args.jobs);
    } else if (args.preset == "fig3") {
        if (desk) {
            report = run_consistency(120, 10, 1.0, 8, cfg, args.jobs);
        } else {
            report = run_consistency(250, 20, 1.0, 25, cfg, args.jobs);
        }
    } else if (args.preset == "fig4") {
        report = run_partial_shuffle(200, 20, 0.3, desk ? 15 : 100, 5, 5, cfg,
                                     args.jobs);
    } else if (args.preset == "fig6") {
        if (args.dataset.empty()) {
            throw ConfigError("--preset fig6 requires --dataset");
        }
        RealDataOptions options;
        options.repeats = 5;
        RealDataPipeline pipeline;
        double crossbin = args.crossbin;
        if (args.pipeline == "label") {
            pipeline = RealDataPipeline::label_grouped;
            if (crossbin < 0.0) crossbin = 0.01;  // sorting-noise default
            options.add_intercept = false;  // 1-mer counts already span a constant
        } else if (args.pipeline == "feature") {
            pipeline = RealDataPipeline::feature_grouped;
            if (crossbin < 0.0) crossbin = 0.0;
            options.label_column = args.label_column;
            options.grouping_feature = args.group_feature;
            options.add_intercept = args.intercept;
        } else {
            throw ConfigError("--pipeline must be label or feature");
        }
        report = run_realdata(args.dataset, pipeline, args.groups, crossbin, cfg,
                              options, args.jobs);
        inputs.push_back(args.dataset);
    } else if (args.preset == "appendixB") {
        if (desk) {
            report = run_restart_study(100, {2, 20}, {1, 10, 100, 1000}, 0.3, 3,
                                       cfg, args.jobs);
        } else {
            report = run_restart_study(100, {2, 5, 10, 20},
                                       {1, 3, 10, 30, 100, 300, 1000}, 0.3, 5,
                                       cfg, args.jobs);
        }
    } else {
        throw ConfigError("unknown preset '" + args.preset +
                          "' (fig2|fig3|fig4|fig6|appendixB)");
    }

    report.write_csv(dir + "/report.csv");
    report.write_timings_csv(dir + "/timings.csv");

    json config{{"preset", args.preset},   {"scale", args.scale},
                {"dataset", args.dataset}, {"pipeline", args.pipeline},
                {"groups", args.groups},   {"crossbin", args.crossbin},
                {"seed", args.seed},       {"jobs", args.jobs}};
    write_manifest(dir, "experiment", config, inputs,
                   {"report.csv", "timings.csv"});
    std::cout << "wrote " << dir << "/report.csv (" << report.rows.size()
              << " rows)\n";
    return 0;
}

struct DemoDataArgs {
    std::string out;
    std::uint64_t seed = demo::kDefaultDataSeed;
};

int cmd_make_demo_data(const DemoDataArgs& args) {
    const std::string dir = output_dir_or_default(args.out);
    ensure_dir(dir);
    demo::write_text(dir + "/housing.csv", demo::housing_csv(args.seed));
    demo::write_text(dir + "/sequences.csv", demo::sequence_csv(1200, 30, args.seed));
    json config{{"seed", args.seed}};
    write_manifest(dir, "make-demo-data", config, {},
                   {"housing.csv", "sequences.csv"});
    std::cout << "wrote " << dir << "/housing.csv and " << dir
              << "/sequences.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shuffled linear regression estimators and experiments"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate_cmd =
        app.add_subcommand("generate", "synthesize a shuffled dataset");
    generate_cmd->add_option("--n", gen.n, "number of rows")->capture_default_str();
    generate_cmd->add_option("--d", gen.d, "number of features")->capture_default_str();
    generate_cmd->add_option("--sigma", gen.sigma, "noise standard deviation")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    generate_cmd->add_option("--shuffle", gen.shuffle, "identity|full|grouped")
        ->capture_default_str();
    generate_cmd->add_option("--groups", gen.groups, "groups for grouped shuffle")
        ->capture_default_str();
    generate_cmd->add_option("--crossbin", gen.crossbin,
                             "fraction swapped across groups")
        ->capture_default_str();
    generate_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    generate_cmd->add_option("--out", gen.out,
                             "output directory (default $SHUFREG_OUT or .)");

    FitArgs fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit an estimator to a dataset CSV");
    fit_cmd->add_option("--data", fit.data, "dataset CSV path")->required();
    fit_cmd->add_option("--label", fit.label, "label column name")->capture_default_str();
    fit_cmd->add_option("--method", fit.method, "ols|hard-em|stochastic-em")
        ->capture_default_str();
    fit_cmd->add_option("--truth", fit.truth, "truth sidecar for parameter error");
    fit_cmd->add_option("--groups", fit.groups, "shuffle groups (1 = whole dataset)")
        ->capture_default_str();
    fit_cmd->add_option("--group-by", fit.group_by, "label|feature")
        ->capture_default_str();
    fit_cmd->add_option("--group-feature", fit.group_feature,
                        "feature column for --group-by feature");
    fit_cmd->add_flag("--intercept", fit.intercept, "append a ones column");
    fit_cmd->add_flag("--non-cumulative", fit.non_cumulative,
                      "re-apply each soft permutation to the original labels");
    fit_cmd->add_option("--iterations", fit.iterations, "EM iterations k")
        ->capture_default_str();
    fit_cmd->add_option("--steps", fit.steps, "MH steps s per iteration (0 = n ln n)")
        ->capture_default_str();
    fit_cmd->add_option("--burn", fit.burn, "burn-in steps s' (-1 = n)")
        ->capture_default_str();
    fit_cmd->add_option("--gap", fit.gap, "sample gap g (0 = n/10)")
        ->capture_default_str();
    fit_cmd->add_option("--restarts", fit.restarts, "Hard EM restarts (0 = n)")
        ->capture_default_str();
    fit_cmd->add_option("--seed", fit.seed, "RNG seed")->capture_default_str();
    fit_cmd->add_option("--out", fit.out,
                        "output directory (default $SHUFREG_OUT or .)");

    ExperimentArgs exp;
    CLI::App* exp_cmd = app.add_subcommand("experiment", "run an experiment preset");
    exp_cmd->add_option("--preset", exp.preset, "fig2|fig3|fig4|fig6|appendixB")
        ->required();
    exp_cmd->add_option("--scale", exp.scale, "desk|paper")->capture_default_str();
    exp_cmd->add_option("--dataset", exp.dataset, "dataset CSV (fig6)");
    exp_cmd->add_option("--pipeline", exp.pipeline,
                        "fig6 grouping: label (sequence CSV) | feature (numeric CSV)")
        ->capture_default_str();
    exp_cmd->add_option("--label-column", exp.label_column, "fig6 label column")
        ->capture_default_str();
    exp_cmd->add_option("--group-feature", exp.group_feature,
                        "fig6 feature column to bin on")
        ->capture_default_str();
    exp_cmd->add_option("--groups", exp.groups, "fig6 group count G")
        ->capture_default_str();
    exp_cmd->add_option("--crossbin", exp.crossbin,
                        "fig6 cross-bin fraction (-1 = pipeline default)")
        ->capture_default_str();
    exp_cmd->add_flag("--intercept,!--no-intercept", exp.intercept,
                      "append a ones column (numeric pipeline)");
    exp_cmd->add_option("--seed", exp.seed, "RNG seed")->capture_default_str();
    exp_cmd->add_option("--jobs", exp.jobs, "worker threads for trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    exp_cmd->add_option("--out", exp.out,
                        "output directory (default $SHUFREG_OUT or .)");

    DemoDataArgs demo_args;
    CLI::App* demo_cmd =
        app.add_subcommand("make-demo-data", "write the bundled stand-in datasets");
    demo_cmd->add_option("--out", demo_args.out, "output directory");
    demo_cmd->add_option("--seed", demo_args.seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*generate_cmd) return cmd_generate(gen);
        if (*fit_cmd) return cmd_fit(fit);
        if (*exp_cmd) return cmd_experiment(exp);
        if (*demo_cmd) return cmd_make_demo_data(demo_args);
    } catch (const Error& e) {
        std::cerr << "error[" << category_name(e.category()) << "]: " << e.what()
                  << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error[numerical]: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::numerical);
    }
    return 0;
}
