#include "evoaaa/experiment.hpp"

#include "evoaaa/errors.hpp"
#include "evoaaa/seeding.hpp"
#include "evoaaa/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

namespace evoaaa {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSyntheticPrefix = "synthetic:";
constexpr std::uint64_t kSyntheticContentSeed = 2020;
constexpr std::uint64_t kSplitSalt = 0x5117;

std::string alpha_label(double alpha) {
    std::ostringstream os;
    os << alpha;
    return os.str();
}

void write_json(const Json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw OutputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace

DatasetSource DatasetSource::parse(const std::string& location) {
    DatasetSource s;
    s.location = location;
    return s;
}

Dataset prepare_dataset(const DatasetSource& source, std::uint64_t seed) {
    Dataset d;
    if (source.location.rfind(kSyntheticPrefix, 0) == 0) {
        const std::string name = source.location.substr(kSyntheticPrefix.size());
        std::optional<SyntheticShape> shape = parse_synthetic_shape(name);
        if (!shape) throw InvalidDataset("unknown synthetic dataset \"" + name + "\" (glass, sonar, spect)");
        d = synthetic_dataset(*shape, kSyntheticContentSeed);
        if (source.load.normalize == Normalization::minmax) d.values = minmax_normalize(d.values);
    } else {
        d = load_csv(source.location, source.load);
    }
    return split(d, source.test_fraction, derive_seed(seed, kSplitSalt));
}

SearchConfig harness_defaults(Strategy s) {
    SearchConfig c = SearchConfig::defaults_for(s);
    c.alpha = 1e-4;
    c.budget.max_wall_clock = std::chrono::seconds(600);
    c.budget.max_evaluations = 500;
    c.budget.termination_cost = 0.0;
    return c;
}

void ensure_writable_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw OutputError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
    const fs::path probe = dir / ".evoaaa_write_probe";
    {
        std::ofstream out(probe);
        if (!out || !(out << "ok")) throw OutputError("output directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

SearchResult run_search_to_dir(const Dataset& dataset, const DatasetSource& source, const SearchConfig& cfg,
                               const fs::path& out_dir) {
    ensure_writable_dir(out_dir);
    Json config = config_to_json(cfg);
    config["dataset"] = source_to_json(source);
    write_json(config, out_dir / RunFiles::kConfig);

    std::ofstream log(out_dir / RunFiles::kSolutions);
    if (!log) throw OutputError("cannot write " + (out_dir / RunFiles::kSolutions).string());
    SolutionsLog sink(log);
    SearchResult result = run_search(dataset, cfg, &sink);
    write_json(best_to_json(result, dataset, cfg), out_dir / RunFiles::kBest);
    return result;
}

SearchResult run_search_to_dir(const DatasetSource& source, const SearchConfig& cfg, const fs::path& out_dir) {
    ensure_writable_dir(out_dir);
    Dataset dataset = prepare_dataset(source, cfg.master_seed);
    return run_search_to_dir(dataset, source, cfg, out_dir);
}

std::optional<int> SweepRow::complexity_units() const {
    if (!best) return std::nullopt;
    return best->chromosome.layers() * best->chromosome.coding_units();
}

std::vector<SweepRow> sweep_alpha(const Dataset& dataset, const SearchConfig& base, std::vector<double> alphas,
                                  const std::optional<fs::path>& out_dir) {
    if (alphas.empty()) throw ConfigError("alpha sweep needs at least one alpha");
    std::sort(alphas.begin(), alphas.end(), std::greater<>());
    std::vector<SweepRow> rows;
    for (double alpha : alphas) {
        SweepRow row;
        row.alpha = alpha;
        try {
            SearchConfig cfg = base;
            cfg.alpha = alpha;
            SearchResult r;
            if (out_dir) {
                const fs::path dir = *out_dir / ("alpha_" + alpha_label(alpha));
                ensure_writable_dir(dir);
                std::ofstream log(dir / RunFiles::kSolutions);
                SolutionsLog sink(log);
                r = run_search(dataset, cfg, &sink);
                write_json(best_to_json(r, dataset, cfg), dir / RunFiles::kBest);
            } else {
                r = run_search(dataset, cfg);
            }
            row.evaluations = r.evaluations;
            if (!r.trajectory.empty() && r.best.ok()) {
                row.best = r.best;
                row.spec = decode(r.best.chromosome, dataset.feature_count());
            } else {
                row.error = "no successful evaluation";
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw OutputError("cannot write " + path.string());
    out << "alpha,loss,train_mse,test_mse,penalty,layers,coding_units,complexity_units,architecture,chromosome,"
           "evaluations,error\n";
    for (const auto& r : rows) {
        out << format_double(r.alpha) << ',';
        if (r.best) {
            const FitnessRecord& b = *r.best;
            out << format_double(b.fitness) << ',' << format_double(*b.train_mse) << ','
                << (b.test_mse ? format_double(*b.test_mse) : "") << ',' << format_double(b.penalty) << ','
                << b.chromosome.layers() << ',' << b.chromosome.coding_units() << ',' << *r.complexity_units() << ",\""
                << r.spec->describe_layers() << "\",\"" << b.chromosome.to_string() << "\",";
        } else {
            out << ",,,,,,,,,";
        }
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        out << r.evaluations << ',' << err << '\n';
    }
}

ResultRow summarize(const std::string& dataset, Strategy strategy, const SearchResult& result) {
    ResultRow row;
    row.dataset = dataset;
    row.strategy = strategy;
    row.individuals = result.evaluations;
    const FitnessRecord& b = result.best;
    row.layers = b.chromosome.layers();
    row.coding_units = b.chromosome.coding_units();
    row.complexity = b.penalty;
    row.best_fitness = b.fitness;
    row.penalized_error = b.test_mse ? *b.test_mse + b.penalty : std::nan("");
    double best = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : result.trajectory) {
        if (!r.ok() || !r.test_mse) continue;
        best = std::min(best, *r.test_mse);
        sum += *r.test_mse;
        ++count;
    }
    row.best_test_mse = count ? best : std::nan("");
    row.average_test_mse = count ? sum / static_cast<double>(count) : std::nan("");
    return row;
}

ComparisonReport compare(const std::vector<DatasetSource>& datasets, const std::vector<Strategy>& strategies,
                         const SearchConfig& base, const fs::path& out_dir, bool concurrent) {
    if (datasets.empty() || strategies.empty()) throw ConfigError("comparison needs datasets and strategies");
    {
        std::map<std::string, int> seen;
        for (const auto& d : datasets) {
            if (seen[d.location]++) throw ConfigError("dataset listed twice: " + d.location);
        }
        std::map<Strategy, int> seen_s;
        for (Strategy s : strategies) {
            if (seen_s[s]++) throw ConfigError("strategy listed twice: " + std::string(to_string(s)));
        }
    }
    ensure_writable_dir(out_dir);

    std::vector<Dataset> prepared;
    for (const auto& src : datasets) prepared.push_back(prepare_dataset(src, base.master_seed));

    ComparisonReport report;
    report.strategies = strategies;
    for (const auto& d : prepared) report.datasets.push_back(d.name);

    auto cell = [&](std::size_t di, std::size_t si) {
        SearchConfig cfg = SearchConfig::defaults_for(strategies[si]);
        cfg.alpha = base.alpha;
        cfg.budget = base.budget;
        cfg.train = base.train;
        cfg.memoize = base.memoize;
        cfg.workers = base.workers;
        cfg.sweep_batch = base.sweep_batch;
        cfg.master_seed = derive_seed(base.master_seed, di * 101 + si);
        const fs::path dir = out_dir / prepared[di].name / std::string(to_string(strategies[si]));
        SearchResult r = run_search_to_dir(prepared[di], datasets[di], cfg, dir);
        return summarize(prepared[di].name, strategies[si], r);
    };

    if (concurrent) {
        std::vector<std::future<ResultRow>> futures;
        for (std::size_t di = 0; di < prepared.size(); ++di) {
            for (std::size_t si = 0; si < strategies.size(); ++si) futures.push_back(std::async(std::launch::async, cell, di, si));
        }
        for (auto& f : futures) report.rows.push_back(f.get());
    } else {
        for (std::size_t di = 0; di < prepared.size(); ++di) {
            for (std::size_t si = 0; si < strategies.size(); ++si) report.rows.push_back(cell(di, si));
        }
    }

    ScoreTable table(prepared.size(), std::vector<double>(strategies.size()));
    for (std::size_t di = 0; di < prepared.size(); ++di) {
        for (std::size_t si = 0; si < strategies.size(); ++si) {
            table[di][si] = report.rows[di * strategies.size() + si].best_test_mse;
        }
    }
    try {
        report.ranking = rank_methods(table);
        if (prepared.size() >= 2 && strategies.size() >= 2) {
            report.friedman = friedman_test(table);
        } else {
            report.note = "Friedman test needs at least two datasets and two strategies";
        }
    } catch (const IncompleteTable& e) {
        report.note = e.what();
    }
    write_comparison(report, out_dir);
    return report;
}

void write_comparison(const ComparisonReport& report, const fs::path& out_dir) {
    ensure_writable_dir(out_dir);
    {
        std::ofstream out(out_dir / "results.csv");
        out << "dataset,strategy,individuals,layers,coding_length,complexity,error_penalized,best_test_mse,"
               "average_test_mse,best_fitness\n";
        for (const auto& r : report.rows) {
            out << r.dataset << ',' << to_string(r.strategy) << ',' << r.individuals << ',' << r.layers << ','
                << r.coding_units << ',' << format_double(r.complexity) << ',' << format_double(r.penalized_error)
                << ',' << format_double(r.best_test_mse) << ',' << format_double(r.average_test_mse) << ','
                << format_double(r.best_fitness) << '\n';
        }
    }
    if (report.ranking) {
        std::ofstream out(out_dir / "ranking.csv");
        out << "dataset";
        for (Strategy s : report.strategies) out << ',' << to_string(s);
        out << '\n';
        for (std::size_t d = 0; d < report.datasets.size(); ++d) {
            out << report.datasets[d];
            for (double v : report.ranking->ranks[d]) out << ',' << format_double(v);
            out << '\n';
        }
        out << "average";
        for (double v : report.ranking->average) out << ',' << format_double(v);
        out << '\n';
    }
    Json f;
    f["ranked_on"] = "best_test_mse";
    if (report.friedman) {
        f["statistic"] = report.friedman->statistic;
        f["p_value"] = report.friedman->p_value;
        f["degrees_of_freedom"] = report.friedman->degrees_of_freedom;
    }
    if (!report.note.empty()) f["note"] = report.note;
    write_json(f, out_dir / "friedman.json");
}

std::int64_t parse_iso_timestamp_ms(std::string_view ts) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    const std::string text(ts);
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &y, &mo, &d, &h, &mi, &s, &ms) != 7) {
        throw ParseError(0, 0, "malformed timestamp \"" + text + "\"");
    }
    // Days since 1970-01-01 in the proleptic Gregorian calendar.
    y -= mo <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = y - era * 400;
    const int doy = (153 * (mo + (mo > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const std::int64_t days = static_cast<std::int64_t>(era) * 146097 + doe - 719468;
    return ((days * 24 + h) * 60 + mi) * 60000 + static_cast<std::int64_t>(s) * 1000 + ms;
}

std::vector<TrajectoryExport> export_trajectories(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
    ensure_writable_dir(out_dir);
    std::vector<TrajectoryExport> exports;
    std::map<std::string, int> used_names;
    for (const auto& dir : run_dirs) {
        const fs::path log_path = dir / RunFiles::kSolutions;
        std::ifstream in(log_path);
        if (!in) throw InvalidDataset("no solutions log at " + log_path.string());
        std::vector<FitnessRecord> records;
        try {
            records = read_solutions_log(in);
        } catch (const ParseError& e) {
            throw ParseError(e.row(), e.column(), log_path.string() + ": " + e.what());
        }

        fs::path clean = dir.lexically_normal();
        if (clean.filename().empty()) clean = clean.parent_path();
        std::string name = clean.filename().string();
        if (clean.has_parent_path() && !clean.parent_path().filename().empty()) {
            name = clean.parent_path().filename().string() + "_" + name;
        }
        if (int n = used_names[name]++; n > 0) name += "_" + std::to_string(n);

        TrajectoryExport ex;
        ex.run = name;
        ex.best_fitness = kWorstFitness;
        std::ofstream time_out(out_dir / (name + "_time.csv"));
        std::ofstream best_out(out_dir / (name + "_best.csv"));
        if (!time_out || !best_out) throw OutputError("cannot write trajectory exports for " + name);
        time_out << "elapsed_ms,fitness\n";
        best_out << "eval_index,best_so_far\n";
        std::optional<std::int64_t> start;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const FitnessRecord& r = records[i];
            std::int64_t t = 0;
            try {
                t = parse_iso_timestamp_ms(r.timestamp);
            } catch (const ParseError&) {
                throw ParseError(i + 2, 2, log_path.string() + ": row " + std::to_string(i + 2) + " has a malformed timestamp");
            }
            if (!start) start = t;
            if (!r.valid()) continue;
            ex.best_fitness = std::min(ex.best_fitness, r.fitness);
            time_out << (t - *start) << ',' << format_double(r.fitness) << '\n';
            best_out << r.eval_index << ',' << format_double(ex.best_fitness) << '\n';
            ++ex.time_rows;
            ++ex.best_rows;
        }
        exports.push_back(ex);
    }
    return exports;
}

} // namespace evoaaa
