#include "evoaaa/analytics.hpp"
#include "evoaaa/errors.hpp"
#include "evoaaa/experiment.hpp"
#include "evoaaa/serialization.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace evoaaa;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("evoaaa_harness_" + std::to_string(std::random_device{}()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EVOAAA_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<FitnessRecord> read_log(const fs::path& p) {
    std::ifstream in(p);
    return read_solutions_log(in);
}

SearchConfig quick(Strategy s) {
    SearchConfig c = SearchConfig::defaults_for(s);
    c.population_size = s == Strategy::es ? 2 : 6;
    c.elitism_count = 1;
    c.iterations = 3;
    c.train.epochs = 2;
    c.train.batch_size = 16;
    c.budget.max_evaluations = 20;
    c.master_seed = 5;
    return c;
}

// Transcribed results tables: rows are datasets, columns Dif, Evo, Exh, Gen, Ran.
const ScoreTable kResultsError = {
    {.0137, .0133, .0395, .0131, .0260},          {.0124, .0119, .0165, .0102, .0134},
    {444.8169, 565.4571, 4180.2370, 1881.0680, 782.3572},
    {24.8785, 5.4093, 29.2589, .4473, 1.2705},    {.0740, .0931, .2099, .0917, .1049},
    {192.5133, 431.6960, 4104.1400, 254.7397, 611.5036},
    {.0459, .0355, .1940, .0376, .0604},          {.0142, .0162, .0462, .0139, .0145},
    {.0959, .0834, .1829, .0703, .1145},
};

const ScoreTable kAveragesBest = {
    {.0020, .0080, .0394, .0090, .0047},          {.0131, .0080, .0164, .0055, .0021},
    {444.7913, 565.4449, 4180.2370, 1881.0210, 782.3502},
    {563.1547, 316.0380, 576.7005, .4468, 564.4037},
    {.0694, .0963, .2098, .0872, .0980},          {192.4971, 431.6296, 4104.1400, 254.7241, 564.2114},
    {.0323, .0221, .1939, .0266, .0339},          {.0106, .0128, .0461, .0115, .0114},
    {.0924, .0806, .1828, .0658, .1098},
};

} // namespace

TEST_CASE("ranking the transcribed tables") {
    SUBCASE("best block of the averages table gives the reported ranking") {
        Ranking r = rank_methods(kAveragesBest);
        const std::vector<double> expected = {18.0 / 9, 23.0 / 9, 45.0 / 9, 21.0 / 9, 28.0 / 9};
        for (std::size_t j = 0; j < 5; ++j) CHECK(r.average[j] == doctest::Approx(expected[j]).epsilon(1e-12));
        const std::vector<double> printed = {2.00, 2.56, 5.00, 2.33, 3.11};
        for (std::size_t j = 0; j < 5; ++j) CHECK(std::round(r.average[j] * 100) / 100 == printed[j]);
    }
    SUBCASE("the results table's error column ranks differently") {
        // Hand-ranked oracle: rows are ranked independently, sums 21, 22, 45, 15, 32.
        Ranking r = rank_methods(kResultsError);
        const std::vector<double> expected = {21.0 / 9, 22.0 / 9, 45.0 / 9, 15.0 / 9, 32.0 / 9};
        for (std::size_t j = 0; j < 5; ++j) CHECK(r.average[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }
    SUBCASE("ties share the average rank") {
        Ranking r = rank_methods({{0.5, 0.5, 0.5, 0.5}, {1, 2, 2, 3}});
        for (double v : r.ranks[0]) CHECK(v == 2.5);
        CHECK(r.ranks[1] == std::vector<double>{1, 2.5, 2.5, 4});
    }
    SUBCASE("a single method always ranks first") {
        Ranking r = rank_methods({{3.0}, {1.0}, {7.0}});
        CHECK(r.average == std::vector<double>{1.0});
    }
    SUBCASE("ragged and missing cells are rejected") {
        CHECK_THROWS_AS(rank_methods({{1, 2}, {1}}), IncompleteTable);
        CHECK_THROWS_AS(rank_methods({{1, std::nan("")}}), IncompleteTable);
        CHECK_THROWS_AS(rank_methods({}), IncompleteTable);
    }
    SUBCASE("ranks in each row are a permutation-average of 1..k") {
        Rng rng(3);
        std::uniform_int_distribution<int> v(0, 4);
        for (int t = 0; t < 500; ++t) {
            ScoreTable table(4, std::vector<double>(6));
            for (auto& row : table)
                for (auto& x : row) x = v(rng);
            Ranking r = rank_methods(table);
            for (const auto& row : r.ranks) CHECK(std::accumulate(row.begin(), row.end(), 0.0) == 21.0);
        }
    }
}

TEST_CASE("friedman test") {
    SUBCASE("reported p-value from the best block") {
        FriedmanResult f = friedman_test(kAveragesBest);
        CHECK(f.degrees_of_freedom == 4);
        CHECK(std::abs(f.p_value - 0.0004248178) < 1e-5);
        // Independent closed form from the rank sums 18, 23, 45, 21, 28 (n = 9, k = 5).
        const double sum_sq = (18.0 * 18 + 23 * 23 + 45 * 45 + 21 * 21 + 28 * 28) / 81.0;
        const double chi2 = 12.0 * 9 / (5 * 6) * (sum_sq - 5 * 36 / 4.0);
        CHECK(f.statistic == doctest::Approx(chi2).epsilon(1e-12));
        CHECK(f.statistic == doctest::Approx(20.355555555).epsilon(1e-8));
    }
    SUBCASE("one dominant method and the rest tied") {
        ScoreTable t(9, std::vector<double>{0.1, 0.5, 0.5, 0.5, 0.5});
        FriedmanResult f = friedman_test(t);
        // Ranks: 1 for the winner, 3.5 for each of the other four, on every row.
        const double sum_sq = 1.0 + 4 * 3.5 * 3.5;
        const double chi2 = 12.0 * 9 / 30 * (sum_sq - 45.0);
        CHECK(chi2 == doctest::Approx(18.0));
        CHECK(f.statistic == doctest::Approx(chi2));
        CHECK(f.p_value == doctest::Approx(std::exp(-chi2 / 2) * (1 + chi2 / 2)).epsilon(1e-10));
        CHECK(f.p_value < 0.05);
    }
    SUBCASE("identical methods") {
        FriedmanResult f = friedman_test(ScoreTable(6, std::vector<double>(4, 0.3)));
        CHECK(f.statistic == 0.0);
        CHECK(f.p_value == 1.0);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS(friedman_test({{1.0, 2.0}}));
        CHECK_THROWS(friedman_test({{1.0}, {2.0}}));
        CHECK_THROWS_AS(friedman_test({{1.0, 2.0}, {1.0}}), IncompleteTable);
    }
    SUBCASE("chi-square tail against closed forms") {
        for (double x : {0.0, 0.5, 2.0, 7.5, 20.0, 60.0}) {
            CHECK(chi_square_survival(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
            CHECK(chi_square_survival(x, 4) == doctest::Approx(std::exp(-x / 2) * (1 + x / 2)).epsilon(1e-12));
        }
    }
}

TEST_CASE("configuration round-trips through JSON") {
    SearchConfig c = SearchConfig::defaults_for(Strategy::de);
    c.alpha = 0.0123;
    c.master_seed = 0xFFFFFFFFFFFFull;
    c.train.epochs = 7;
    c.budget.max_evaluations.reset();
    c.budget.max_wall_clock = std::chrono::milliseconds(12345);
    c.workers = 3;
    c.memoize = false;
    SearchConfig back = config_from_json(Json::parse(config_to_json(c).dump()));
    CHECK(config_to_json(back).dump() == config_to_json(c).dump());
    CHECK(back.strategy == Strategy::de);
    CHECK(back.master_seed == c.master_seed);
    CHECK_FALSE(back.budget.max_evaluations.has_value());

    Json broken = config_to_json(c);
    broken["strategy"] = "anneal";
    CHECK_THROWS_AS(config_from_json(broken), ConfigError);
    broken = config_to_json(c);
    broken["alpha"] = "high";
    CHECK_THROWS_AS(config_from_json(broken), ConfigError);
    broken = config_to_json(c);
    broken["alpha"] = -1.0;
    CHECK_THROWS_AS(config_from_json(broken), ConfigError);
    // Absent fields fall back to the strategy defaults.
    Json partial = {{"schema", kConfigSchema}, {"strategy", "es"}};
    CHECK(config_from_json(partial).population_size == 4);
}

TEST_CASE("dataset sources") {
    DatasetSource s = DatasetSource::parse("synthetic:sonar");
    Dataset d = prepare_dataset(s, 1);
    CHECK(d.feature_count() == 60);
    CHECK(d.is_split());
    CHECK(prepare_dataset(s, 1).test_indices == d.test_indices);
    CHECK_THROWS(prepare_dataset(DatasetSource::parse("synthetic:mnist"), 1));
    CHECK_THROWS_AS(prepare_dataset(DatasetSource::parse("/no/such/file.csv"), 1), InvalidDataset);
}

TEST_CASE("single search writes replayable files") {
    TempDir tmp;
    const DatasetSource src = DatasetSource::parse("synthetic:glass");
    SearchConfig c = quick(Strategy::ga);
    SearchResult r = run_search_to_dir(src, c, tmp.path());
    for (const char* f : {RunFiles::kConfig, RunFiles::kSolutions, RunFiles::kBest}) CHECK(fs::exists(tmp / f));

    std::vector<FitnessRecord> log = read_log(tmp / RunFiles::kSolutions);
    CHECK(log.size() == r.trajectory.size());
    double min_fitness = kWorstFitness;
    for (const auto& rec : log) min_fitness = std::min(min_fitness, rec.fitness);
    Json best = read_json(tmp / RunFiles::kBest);
    CHECK(best["fitness"].get<double>() == min_fitness);
    CHECK(best["chromosome"] == r.best.chromosome.to_string());

    Json cfg = read_json(tmp / RunFiles::kConfig);
    CHECK(cfg["dataset"]["location"] == "synthetic:glass");
    CHECK(config_to_json(config_from_json(cfg)).dump() == config_to_json(c).dump());

    CHECK_THROWS_AS(ensure_writable_dir("/proc/evoaaa_forbidden"), OutputError);
}

TEST_CASE("alpha sweep") {
    const Dataset d = prepare_dataset(DatasetSource::parse("synthetic:glass"), 2);
    SearchConfig c = quick(Strategy::random);
    TempDir tmp;
    std::vector<SweepRow> rows = sweep_alpha(d, c, {0.0, 1.0, 0.01}, tmp.path());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].alpha == 1.0);
    CHECK(rows[1].alpha == 0.01);
    CHECK(rows[2].alpha == 0.0);
    for (const auto& row : rows) REQUIRE(row.best.has_value());
    CHECK(rows[2].best->penalty == 0.0);
    for (const auto& rec : read_log(tmp / "alpha_0" / RunFiles::kSolutions)) CHECK(rec.penalty == 0.0);
    // Shared seeds: a penalty can only add.
    CHECK(rows[2].best->fitness <= rows[1].best->fitness);
    CHECK(rows[2].best->fitness <= rows[0].best->fitness);
    CHECK(rows[0].complexity_units() == rows[0].best->chromosome.layers() * rows[0].best->chromosome.coding_units());

    write_sweep_csv(rows, tmp / "sweep.csv");
    std::istringstream lines(slurp(tmp / "sweep.csv"));
    std::string header, line;
    std::getline(lines, header);
    CHECK(header.rfind("alpha,loss,", 0) == 0);
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 3);
    CHECK_THROWS(sweep_alpha(d, c, {}));
}

TEST_CASE("comparison plan") {
    TempDir tmp;
    SearchConfig base = quick(Strategy::ga);
    base.budget.max_evaluations = 8;
    const std::vector<DatasetSource> sources = {DatasetSource::parse("synthetic:glass"),
                                                DatasetSource::parse("synthetic:spect")};
    const std::vector<Strategy> strategies = {Strategy::random, Strategy::exhaustive};
    ComparisonReport rep = compare(sources, strategies, base, tmp.path());
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.rows[0].dataset == rep.rows[1].dataset);
    for (const auto& row : rep.rows) {
        CHECK(row.individuals == 8);
        CHECK(row.complexity == doctest::Approx(base.alpha * row.layers * row.coding_units));
        CHECK(row.best_test_mse <= row.average_test_mse);
    }
    REQUIRE(rep.ranking.has_value());
    REQUIRE(rep.friedman.has_value());
    for (const char* f : {"results.csv", "ranking.csv", "friedman.json"}) CHECK(fs::exists(tmp / f));
    CHECK(fs::exists(tmp.path() / rep.datasets[0] / "random" / RunFiles::kSolutions));

    CHECK_THROWS_AS(compare(sources, {Strategy::ga, Strategy::ga}, base, tmp / "dup"), ConfigError);
    ComparisonReport one = compare({sources[0]}, {Strategy::random}, base, tmp / "one");
    CHECK_FALSE(one.friedman.has_value());
    CHECK_FALSE(one.note.empty());
}

TEST_CASE("summaries average over valid records only") {
    SearchResult r;
    FitnessRecord a, b, invalid;
    a.chromosome = Chromosome({1, 1, 3, 1, 1, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1});
    a.train_mse = 0.1;
    a.test_mse = 0.2;
    a.penalty = 0.5;
    a.fitness = 0.6;
    b = a;
    b.test_mse = 0.1;
    b.fitness = 0.7;
    invalid.status = RecordStatus::invalid;
    r.trajectory = {a, invalid, b};
    r.best = a;
    r.evaluations = 2;
    ResultRow row = summarize("x", Strategy::ga, r);
    CHECK(row.individuals == 2);
    CHECK(row.best_test_mse == 0.1);
    CHECK(row.average_test_mse == doctest::Approx(0.15));
    CHECK(row.penalized_error == doctest::Approx(0.7));
    CHECK(row.layers == 1);
    CHECK(row.coding_units == 2);
}

TEST_CASE("trajectory exports") {
    TempDir tmp;
    const DatasetSource src = DatasetSource::parse("synthetic:glass");
    run_search_to_dir(src, quick(Strategy::es), tmp / "runs" / "es");
    run_search_to_dir(src, quick(Strategy::de), tmp / "runs" / "de");
    std::vector<TrajectoryExport> out = export_trajectories({tmp / "runs" / "es", tmp / "runs" / "de"}, tmp / "plots");
    REQUIRE(out.size() == 2);
    for (const auto& e : out) {
        std::vector<FitnessRecord> log = read_log(tmp / "runs" / (e.run.substr(e.run.rfind('_') + 1)) / RunFiles::kSolutions);
        std::size_t valid = 0;
        double best = kWorstFitness;
        for (const auto& rec : log) {
            valid += rec.valid();
            best = std::min(best, rec.fitness);
        }
        CHECK(e.time_rows == valid);
        CHECK(e.best_rows == valid);
        CHECK(e.best_fitness == best);

        std::istringstream series(slurp(tmp / "plots" / (e.run + "_best.csv")));
        std::string line;
        std::getline(series, line);
        CHECK(line == "eval_index,best_so_far");
        double previous = kWorstFitness;
        std::size_t rows = 0;
        while (std::getline(series, line)) {
            const double v = std::stod(line.substr(line.find(',') + 1));
            CHECK(v <= previous);
            previous = v;
            ++rows;
        }
        CHECK(rows == valid);
        CHECK(previous == best);
    }

    CHECK(parse_iso_timestamp_ms("1970-01-01T00:00:01.250Z") == 1250);
    CHECK(parse_iso_timestamp_ms("2000-03-01T00:00:00.000Z") == 951868800000);
    CHECK_THROWS_AS(parse_iso_timestamp_ms("yesterday"), ParseError);

    fs::create_directories(tmp / "bad");
    std::string text = slurp(tmp / "runs" / "es" / RunFiles::kSolutions);
    text += "9,oops\n";
    std::ofstream(tmp / "bad" / RunFiles::kSolutions) << text;
    try {
        export_trajectories({tmp / "bad"}, tmp / "plots2");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row() > 1);
    }
}

TEST_CASE("command line") {
    TempDir tmp;
    const std::string out = (tmp / "o").string();
    SUBCASE("exit codes") {
        CHECK(run_cli("space-size") == 0);
        CHECK(run_cli("search --dataset synthetic:glass --strategy nope --out " + out) == 2);
        CHECK(run_cli("search --dataset /no/such.csv --strategy random --max-evals 1 --out " + out) == 3);
        CHECK(run_cli("search --dataset synthetic:glass --strategy random --max-evals 1 --out /proc/forbidden") == 4);
        CHECK(run_cli("eval-one --dataset synthetic:glass --chromosome 1,2,3") == 2);
        CHECK(run_cli("--bogus") == 2);
    }
    SUBCASE("one random evaluation") {
        REQUIRE(run_cli("search --dataset synthetic:glass --strategy random --max-evals 1 --epochs 2 --out " + out) == 0);
        std::vector<FitnessRecord> log = read_log(fs::path(out) / RunFiles::kSolutions);
        REQUIRE(log.size() == 1);
        CHECK(log[0].valid());
    }
    SUBCASE("alpha 0 makes fitness equal train MSE") {
        REQUIRE(run_cli("search --dataset synthetic:glass --strategy random --alpha 0 --max-evals 5 --epochs 2 --out " +
                        out) == 0);
        Json best = read_json(fs::path(out) / RunFiles::kBest);
        CHECK(best["fitness"].get<double>() == best["train_mse"].get<double>());
    }
    SUBCASE("de on a sonar-shaped file records the penalty arithmetic") {
        REQUIRE(run_cli("generate-data --shape sonar --out " + (tmp / "sonar.csv").string()) == 0);
        REQUIRE(run_cli("search --header --dataset " + (tmp / "sonar.csv").string() +
                        " --strategy de --alpha 0.0001 --population 6 --iterations 2 --max-evals 12 --epochs 2 --out " +
                        out) == 0);
        Json best = read_json(fs::path(out) / RunFiles::kBest);
        const double expected = 0.0001 * best["layers"].get<int>() * best["coding_units"].get<int>();
        CHECK(best["penalty"].get<double>() == doctest::Approx(expected).epsilon(1e-15));
        CHECK(best["spec"]["feature_count"] == 60);
    }
    SUBCASE("replaying the recorded config reproduces the log") {
        REQUIRE(run_cli("search --dataset synthetic:spect --strategy ga --population 8 --iterations 2 --max-evals 12 "
                        "--epochs 2 --seed 9 --out " + out) == 0);
        const std::string replay = (tmp / "replay").string();
        REQUIRE(run_cli("search --config " + out + "/config.json --out " + replay) == 0);
        std::vector<FitnessRecord> a = read_log(fs::path(out) / RunFiles::kSolutions);
        std::vector<FitnessRecord> b = read_log(fs::path(replay) / RunFiles::kSolutions);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].chromosome == b[i].chromosome);
            CHECK(format_double(a[i].fitness) == format_double(b[i].fitness));
        }
    }
    SUBCASE("space size with a feature count") {
        const std::string txt = (tmp / "space.txt").string();
        REQUIRE(std::system((std::string(EVOAAA_CLI) + " space-size --features 4 > " + txt).c_str()) == 0);
        const std::string s = slurp(txt);
        CHECK(s.find("free_combinations 1006632960") != std::string::npos);
        CHECK(s.find("valid_unit_assignments layers=0 4") != std::string::npos);
        CHECK(s.find("valid_unit_assignments layers=3 35") != std::string::npos);
    }
    SUBCASE("eval-one trains a given chromosome") {
        const std::string model = (tmp / "model.json").string();
        REQUIRE(run_cli("eval-one --dataset synthetic:glass --epochs 2 --chromosome 1,1,5,1,1,3,2,1,1,1,3,1,1,1,1 "
                        "--model-out " + model) == 0);
        Json m = read_json(model);
        CHECK(m["schema"] == kModelSchema);
    }
}
