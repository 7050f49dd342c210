#pragma once

#include "evoaaa/analytics.hpp"
#include "evoaaa/data.hpp"
#include "evoaaa/strategies.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace evoaaa {

// Where a dataset comes from: a CSV file or a bundled generator ("synthetic:glass").
struct DatasetSource {
    std::string location;
    LoadOptions load;
    double test_fraction = kDefaultTestFraction;

    static DatasetSource parse(const std::string& location);
};

// Loads and splits. The split seed derives from `seed`.
Dataset prepare_dataset(const DatasetSource& source, std::uint64_t seed);

// Harness defaults: desk-scale budget and the alpha settled on after the sweep.
SearchConfig harness_defaults(Strategy s);

struct RunFiles {
    static constexpr const char* kConfig = "config.json";
    static constexpr const char* kSolutions = "solutions.csv";
    static constexpr const char* kBest = "best.json";
};

// Fails with OutputError when the directory cannot be created or written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void ensure_writable_dir(const std::filesystem::path& dir);

// Runs one search and writes config.json, solutions.csv and best.json into out_dir.
SearchResult run_search_to_dir(const DatasetSource& source, const SearchConfig& cfg, const std::filesystem::path& out_dir);
SearchResult run_search_to_dir(const Dataset& dataset, const DatasetSource& source, const SearchConfig& cfg,
                               const std::filesystem::path& out_dir);

struct SweepRow {
    double alpha = 0.0;
    std::optional<FitnessRecord> best;
    std::optional<ArchitectureSpec> spec;
    std::uint64_t evaluations = 0;
    std::string error;

    // layers * coding units of the best architecture.
    std::optional<int> complexity_units() const;
};

inline const std::vector<double> kDefaultSweepAlphas = {1.0, 0.1, 0.01, 0.001, 0.0001, 0.0};

// One search per alpha, all sharing cfg.master_seed; rows sorted by descending alpha.
// A failing alpha records its error and the sweep continues. With out_dir set, each alpha
// logs its solutions to out_dir/alpha_<value>/solutions.csv.
std::vector<SweepRow> sweep_alpha(const Dataset& dataset, const SearchConfig& base, std::vector<double> alphas,
                                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

struct ResultRow {
    std::string dataset;
    Strategy strategy = Strategy::ga;
    std::uint64_t individuals = 0;
    int layers = 0;
    int coding_units = 0;
    double complexity = 0.0;
    double penalized_error = 0.0;  // best record's test MSE + penalty
    double best_test_mse = 0.0;    // minimum raw test MSE over valid records
    double average_test_mse = 0.0;
    double best_fitness = 0.0;
};

struct ComparisonReport {
    std::vector<std::string> datasets;
    std::vector<Strategy> strategies;
    std::vector<ResultRow> rows;  // dataset-major
    std::optional<Ranking> ranking;
    std::optional<FriedmanResult> friedman;
    std::string note;
};

// Every dataset x strategy cell; each cell gets a sub-directory and a derived seed.
ComparisonReport compare(const std::vector<DatasetSource>& datasets, const std::vector<Strategy>& strategies,
                         const SearchConfig& base, const std::filesystem::path& out_dir, bool concurrent = false);
void write_comparison(const ComparisonReport& report, const std::filesystem::path& out_dir);

ResultRow summarize(const std::string& dataset, Strategy strategy, const SearchResult& result);

struct TrajectoryExport {
    std::string run;
    std::size_t time_rows = 0;
    std::size_t best_rows = 0;
    double best_fitness = 0.0;
};

// Milliseconds since the epoch for "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::int64_t parse_iso_timestamp_ms(std::string_view ts);

// For every run directory holding solutions.csv, writes <run>_time.csv (elapsed_ms, fitness)
// and <run>_best.csv (eval_index, best_so_far) over valid records.
std::vector<TrajectoryExport> export_trajectories(const std::vector<std::filesystem::path>& run_dirs,
                                                  const std::filesystem::path& out_dir);

} // namespace evoaaa
