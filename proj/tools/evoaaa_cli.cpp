// evoaaa: command-line front end for the architecture search engine.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error, 3 dataset error,
// 4 output directory error, 5 budget ran out before any evaluation.

#include "evoaaa/errors.hpp"
#include "evoaaa/experiment.hpp"
#include "evoaaa/serialization.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace evoaaa;
namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kOutput = 4, kBudget = 5 };

struct DatasetFlags {
    std::string location;
    std::string normalize = "none";
    std::string drop_column;
    bool header = false;
    double test_fraction = kDefaultTestFraction;

    void add(CLI::App* app, bool required) {
        auto* opt = app->add_option("--dataset", location, "CSV path or synthetic:{glass,sonar,spect}");
        if (required) opt->required();
        app->add_option("--normalize", normalize, "none or minmax")->check(CLI::IsMember({"none", "minmax"}));
        app->add_option("--drop-column", drop_column, "column name (needs --header) or index to drop");
        app->add_flag("--header", header, "first CSV row is a header");
        app->add_option("--test-fraction", test_fraction, "held-out fraction")->check(CLI::Range(0.0, 1.0));
    }

    DatasetSource source() const {
        DatasetSource s = DatasetSource::parse(location);
        s.load.has_header = header;
        s.load.normalize = normalize == "minmax" ? Normalization::minmax : Normalization::none;
        if (!drop_column.empty()) s.load.drop_column = drop_column;
        s.test_fraction = test_fraction;
        return s;
    }
};

struct SearchFlags {
    std::string strategy = "ga";
    double alpha = 1e-4;
    std::uint64_t seed = 1;
    int epochs = 20;
    int batch = 32;
    long long max_seconds = 600;
    long long max_evals = 500;
    int population = 0;
    int iterations = 0;
    unsigned workers = 1;
    bool no_memo = false;

    void add(CLI::App* app) {
        app->add_option("--strategy", strategy, "ga, es, de, exhaustive or random");
        app->add_option("--alpha", alpha, "complexity penalty coefficient");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--epochs", epochs, "training epochs per candidate");
        app->add_option("--batch", batch, "minibatch size");
        app->add_option("--max-seconds", max_seconds, "wall-clock budget");
        app->add_option("--max-evals", max_evals, "evaluation budget (0 = unlimited)");
        app->add_option("--population", population, "population size (strategy default if omitted)");
        app->add_option("--iterations", iterations, "generations (strategy default if omitted)");
        app->add_option("--workers", workers, "parallel training threads");
        app->add_flag("--no-memo", no_memo, "retrain repeated chromosomes");
    }

    // Overlays flags the user actually passed onto `cfg`.
    void apply(const CLI::App& app, SearchConfig& cfg) const {
        auto given = [&](const char* name) { return app.count(name) > 0; };
        if (given("--alpha")) cfg.alpha = alpha;
        if (given("--seed")) cfg.master_seed = seed;
        if (given("--epochs")) cfg.train.epochs = epochs;
        if (given("--batch")) cfg.train.batch_size = batch;
        if (given("--max-seconds")) cfg.budget.max_wall_clock = std::chrono::seconds(max_seconds);
        if (given("--max-evals")) {
            cfg.budget.max_evaluations = max_evals > 0 ? std::optional<std::uint64_t>(max_evals) : std::nullopt;
        }
        if (given("--population")) cfg.population_size = population;
        if (given("--iterations")) cfg.iterations = iterations;
        if (given("--workers")) cfg.workers = workers;
        if (given("--no-memo")) cfg.memoize = false;
    }

    Strategy parsed_strategy() const {
        std::optional<Strategy> s = parse_strategy(strategy);
        if (!s) throw ConfigError("unknown strategy \"" + strategy + "\" (ga, es, de, exhaustive, random)");
        return *s;
    }

    SearchConfig config(const CLI::App& app) const {
        SearchConfig cfg = harness_defaults(parsed_strategy());
        apply(app, cfg);
        cfg.validate();
        return cfg;
    }
};

Json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void print_best(const SearchResult& r) {
    const FitnessRecord& b = r.best;
    std::cout << "stop: " << to_string(r.stop_reason) << ", evaluations: " << r.evaluations
              << ", generations: " << r.generations << ", wall: " << r.wall_time_ms << " ms\n";
    std::cout << "best: " << b.chromosome.to_string() << "  fitness " << format_double(b.fitness) << "  train_mse "
              << (b.train_mse ? format_double(*b.train_mse) : "-") << "  test_mse "
              << (b.test_mse ? format_double(*b.test_mse) : "-") << "  penalty " << format_double(b.penalty) << '\n';
}

int cmd_search(const CLI::App& app, const DatasetFlags& data, const SearchFlags& flags, const std::string& config_path,
               const std::string& out) {
    SearchConfig cfg;
    DatasetSource source;
    if (!config_path.empty()) {
        Json j = read_json_file(config_path);
        cfg = config_from_json(j);
        if (app.count("--strategy")) {
            Strategy s = flags.parsed_strategy();
            if (s != cfg.strategy) throw ConfigError("--strategy conflicts with the config file");
        }
        flags.apply(app, cfg);
        cfg.validate();
        if (!data.location.empty()) {
            source = data.source();
        } else if (auto it = j.find("dataset"); it != j.end()) {
            source = source_from_json(*it);
        } else {
            throw ConfigError("no dataset: pass --dataset or use a config written by a previous run");
        }
    } else {
        if (data.location.empty()) throw ConfigError("--dataset is required");
        cfg = flags.config(app);
        source = data.source();
    }
    SearchResult r = run_search_to_dir(source, cfg, out);
    print_best(r);
    if (r.evaluations == 0) {
        std::cerr << "error: budget exhausted before any evaluation completed\n";
        return kBudget;
    }
    return kOk;
}

int cmd_sweep(const CLI::App& app, const DatasetFlags& data, const SearchFlags& flags, std::vector<double> alphas,
              const std::string& out) {
    SearchConfig cfg = flags.config(app);
    if (alphas.empty()) alphas = kDefaultSweepAlphas;
    ensure_writable_dir(out);
    const DatasetSource source = data.source();
    Dataset d = prepare_dataset(source, cfg.master_seed);
    {
        Json j = config_to_json(cfg);
        j["dataset"] = source_to_json(source);
        j["alphas"] = alphas;
        std::ofstream(fs::path(out) / RunFiles::kConfig) << j.dump(2) << '\n';
    }
    std::vector<SweepRow> rows = sweep_alpha(d, cfg, alphas, fs::path(out));
    write_sweep_csv(rows, fs::path(out) / "sweep.csv");
    std::cout << "alpha\tloss\tlayers\tcoding\tarchitecture\n";
    for (const auto& r : rows) {
        std::cout << format_double(r.alpha) << '\t';
        if (r.best) {
            std::cout << format_double(r.best->fitness) << '\t' << r.best->chromosome.layers() << '\t'
                      << r.best->chromosome.coding_units() << '\t' << r.spec->describe_layers() << '\n';
        } else {
            std::cout << "error: " << r.error << '\n';
        }
    }
    return kOk;
}

int cmd_compare(const CLI::App& app, const DatasetFlags& data, const std::vector<std::string>& locations,
                const SearchFlags& flags, const std::vector<std::string>& strategy_names, bool concurrent,
                const std::string& out) {
    SearchConfig base = flags.config(app);
    std::vector<DatasetSource> sources;
    for (const auto& loc : locations) {
        DatasetFlags copy = data;
        copy.location = loc;
        sources.push_back(copy.source());
    }
    std::vector<Strategy> strategies;
    for (const auto& name : strategy_names) {
        std::optional<Strategy> s = parse_strategy(name);
        if (!s) throw ConfigError("unknown strategy \"" + name + "\"");
        strategies.push_back(*s);
    }
    if (strategies.empty()) {
        strategies = {Strategy::de, Strategy::es, Strategy::exhaustive, Strategy::ga, Strategy::random};
    }
    ComparisonReport rep = compare(sources, strategies, base, out, concurrent);
    std::cout << "dataset\tstrategy\tindividuals\tlayers\tcoding\tcomplexity\terror\tbest_test_mse\n";
    for (const auto& r : rep.rows) {
        std::cout << r.dataset << '\t' << to_string(r.strategy) << '\t' << r.individuals << '\t' << r.layers << '\t'
                  << r.coding_units << '\t' << format_double(r.complexity) << '\t' << format_double(r.penalized_error)
                  << '\t' << format_double(r.best_test_mse) << '\n';
    }
    if (rep.ranking) {
        std::cout << "average rank:";
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            std::cout << ' ' << to_string(strategies[i]) << '=' << format_double(rep.ranking->average[i]);
        }
        std::cout << '\n';
    }
    if (rep.friedman) {
        std::cout << "friedman: statistic " << format_double(rep.friedman->statistic) << ", p "
                  << format_double(rep.friedman->p_value) << '\n';
    }
    if (!rep.note.empty()) std::cout << "note: " << rep.note << '\n';
    return kOk;
}

int cmd_space_size(int features) {
    std::cout << "free_combinations " << architecture_free_combinations() << '\n';
    if (features > 0) {
        std::uint64_t total = 0;
        std::cout << "features " << features << '\n';
        for (int layers = 0; layers <= gene::kMaxHiddenPairs; ++layers) {
            const std::uint64_t n = count_valid_unit_assignments(features, layers);
            total += n;
            std::cout << "valid_unit_assignments layers=" << layers << ' ' << n << '\n';
        }
        std::cout << "valid_unit_assignments total " << total << '\n';
    }
    return kOk;
}

int cmd_eval_one(const CLI::App& app, const DatasetFlags& data, const SearchFlags& flags, const std::string& text,
                 const std::string& model_out) {
    SearchConfig cfg = flags.config(app);
    Dataset d = prepare_dataset(data.source(), cfg.master_seed);
    const Chromosome c = Chromosome::parse(text, GeneBounds::for_features(d.feature_count()));
    if (!is_valid(c)) throw ConfigError("chromosome " + c.to_string() + " has increasing unit counts");

    EvaluationSettings settings;
    settings.alpha = cfg.alpha;
    settings.train = cfg.train;
    settings.master_seed = cfg.master_seed;
    settings.strategy_tag = "eval-one";
    Evaluator ev(d, settings, cfg.budget);
    FitnessRecord r = ev.evaluate(c);

    Json out = record_to_json(r);
    const ArchitectureSpec spec = decode(c, d.feature_count());
    out["spec"] = spec_to_json(spec);
    std::cout << out.dump(2) << '\n';

    if (!model_out.empty()) {
        const Matrix train_rows = d.train_matrix();
        TrainConfig tc = cfg.train;
        tc.batch_size = std::min<int>(tc.batch_size, static_cast<int>(train_rows.rows()));
        TrainResult tr = train(spec, train_rows, tc, training_seed(cfg.master_seed, c));
        std::ofstream f(model_out);
        if (!f) throw OutputError("cannot write " + model_out);
        f << model_to_json(spec, tr.params, tr.train_mse).dump(2) << '\n';
    }
    return r.ok() ? kOk : kUnexpected;
}

int cmd_export(const std::vector<std::string>& runs, const std::string& out) {
    std::vector<fs::path> dirs(runs.begin(), runs.end());
    for (const auto& e : export_trajectories(dirs, out)) {
        std::cout << e.run << ": " << e.time_rows << " points, best " << format_double(e.best_fitness) << '\n';
    }
    return kOk;
}

int cmd_generate(const std::string& shape_name, std::uint64_t seed, const std::string& out) {
    std::optional<SyntheticShape> shape = parse_synthetic_shape(shape_name);
    if (!shape) throw ConfigError("unknown shape \"" + shape_name + "\" (glass, sonar, spect)");
    Dataset d = synthetic_dataset(*shape, seed);
    write_csv(d, out, true);
    std::cout << "wrote " << d.rows() << " x " << d.feature_count() << " to " << out << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evolutionary search over autoencoder architectures"};
    app.require_subcommand(1);

    DatasetFlags data;
    SearchFlags flags;
    std::string out, config_path, chromosome, model_out, shape = "glass";
    std::vector<double> alphas;
    std::vector<std::string> locations, strategy_names, runs;
    bool concurrent = false;
    int features = 0;
    std::uint64_t gen_seed = 2020;

    auto* search = app.add_subcommand("search", "run one architecture search");
    data.add(search, false);
    flags.add(search);
    search->add_option("--config", config_path, "replay a config.json written by an earlier run");
    search->add_option("--out", out, "output directory")->required();

    auto* sweep = app.add_subcommand("sweep-alpha", "repeat one search across penalty coefficients");
    data.add(sweep, true);
    flags.add(sweep);
    sweep->add_option("--alphas", alphas, "alpha values, space- or comma-separated (default 1 0.1 0.01 0.001 0.0001 0)")->delimiter(',');
    sweep->add_option("--out", out, "output directory")->required();

    auto* cmp = app.add_subcommand("compare", "every strategy on every dataset, with ranking and Friedman test");
    cmp->add_option("--dataset", locations, "datasets (repeatable)")->required();
    cmp->add_option("--normalize", data.normalize)->check(CLI::IsMember({"none", "minmax"}));
    cmp->add_option("--drop-column", data.drop_column);
    cmp->add_flag("--header", data.header);
    flags.add(cmp);
    cmp->add_option("--strategies", strategy_names, "subset of strategies, space- or comma-separated (default all five)")->delimiter(',');
    cmp->add_flag("--concurrent", concurrent, "run cells in parallel");
    cmp->add_option("--out", out, "output directory")->required();

    auto* space = app.add_subcommand("space-size", "size of the architecture search space");
    space->add_option("--features", features, "also count valid unit assignments for this feature count")
        ->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval-one", "train and score a single chromosome");
    data.add(eval, true);
    flags.add(eval);
    eval->add_option("--chromosome", chromosome, "15 comma-separated genes")->required();
    eval->add_option("--model-out", model_out, "write trained weights as JSON");

    auto* plots = app.add_subcommand("export-plots", "plot-ready trajectory CSVs from run directories");
    plots->add_option("--runs", runs, "run directories holding solutions.csv")->required();
    plots->add_option("--out", out, "output directory")->required();

    auto* gen = app.add_subcommand("generate-data", "write a bundled synthetic dataset as CSV");
    gen->add_option("--shape", shape, "glass, sonar or spect");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", out, "CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*search) return cmd_search(*search, data, flags, config_path, out);
        if (*sweep) return cmd_sweep(*sweep, data, flags, alphas, out);
        if (*cmp) return cmd_compare(*cmp, data, locations, flags, strategy_names, concurrent, out);
        if (*space) return cmd_space_size(features);
        if (*eval) return cmd_eval_one(*eval, data, flags, chromosome, model_out);
        if (*plots) return cmd_export(runs, out);
        if (*gen) return cmd_generate(shape, gen_seed, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ParseError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return kData;
    } catch (const InvalidDataset& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return kData;
    } catch (const SplitError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return kData;
    } catch (const OutputError& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return kOutput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnexpected;
    }
    return kUnexpected;
}
