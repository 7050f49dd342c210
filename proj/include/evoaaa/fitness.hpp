#pragma once

#include "evoaaa/data.hpp"
#include "evoaaa/genome.hpp"
#include "evoaaa/neural.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evoaaa {

inline constexpr double kWorstFitness = std::numeric_limits<double>::infinity();

enum class RecordStatus { ok, invalid, failed };

struct FitnessRecord {
    Chromosome chromosome;
    RecordStatus status = RecordStatus::ok;
    std::optional<double> train_mse;
    std::optional<double> test_mse;
    double penalty = 0.0;
    double fitness = kWorstFitness;
    std::uint64_t eval_index = 0;
    std::int64_t wall_time_ms = 0;
    std::string strategy_tag;
    std::string timestamp;  // ISO-8601 UTC with milliseconds
    bool cache_hit = false;

    // Invalid chromosomes never count as evaluated; failed trainings do.
    bool valid() const { return status != RecordStatus::invalid; }
    bool ok() const { return status == RecordStatus::ok; }
};

struct Budget {
    std::chrono::milliseconds max_wall_clock{std::chrono::seconds(600)};
    std::optional<std::uint64_t> max_evaluations = 500;
    double termination_cost = 0.0;

    void validate() const;
};

// alpha * layers * coding_units.
double penalty(int layers, int coding_units, double alpha);

bool should_terminate(double best_fitness, std::chrono::milliseconds elapsed, std::uint64_t evaluations,
                      const Budget& budget);

struct EvaluationSettings {
    double alpha = 1e-4;
    TrainConfig train;
    std::uint64_t master_seed = 1;
    bool memoize = true;
    unsigned workers = 1;
    std::string strategy_tag;
};

// Per-chromosome training seed; independent of evaluation order.
std::uint64_t training_seed(std::uint64_t master_seed, const Chromosome& c);

// Receives each record in eval_index order.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void write(const FitnessRecord& r) = 0;
};

// Append-only CSV of every record.
class SolutionsLog : public RecordSink {
public:
    explicit SolutionsLog(std::ostream& out);
    void write(const FitnessRecord& r) override;

    static const std::vector<std::string>& columns();

private:
    std::ostream& out_;
};

// Parses one solutions-log data row. Throws ParseError naming `row`.
FitnessRecord parse_solution_row(std::string_view line, std::size_t row);
std::vector<FitnessRecord> read_solutions_log(std::istream& in);

// Formats doubles so that parsing returns the identical value.
std::string format_double(double v);
std::string iso_timestamp_now();

struct BatchResult {
    std::vector<FitnessRecord> records;  // prefix of the submitted batch, in order
    bool exhausted = false;              // budget stopped the batch early
};

// Validates, decodes, trains and penalizes chromosomes for one dataset.
class Evaluator {
public:
    // `dataset` must already be split; it must outlive the evaluator.
    Evaluator(const Dataset& dataset, EvaluationSettings settings, Budget budget, RecordSink* sink = nullptr);

    FitnessRecord evaluate(const Chromosome& c);
    BatchResult evaluate_batch(std::span<const Chromosome> batch);

    std::uint64_t evaluations() const { return evaluations_; }
    std::uint64_t records() const { return next_index_; }
    std::chrono::milliseconds elapsed() const;
    bool budget_exhausted() const;
    double best_fitness() const { return best_fitness_; }

    const EvaluationSettings& settings() const { return settings_; }
    const Budget& budget() const { return budget_; }
    const Dataset& dataset() const { return dataset_; }

private:
    struct Outcome {
        RecordStatus status = RecordStatus::ok;
        std::optional<double> train_mse;
        std::optional<double> test_mse;
        std::int64_t wall_time_ms = 0;
    };

    Outcome train_one(const Chromosome& c) const;
    FitnessRecord stamp(const Chromosome& c, const Outcome& o, bool cache_hit);

    const Dataset& dataset_;
    Matrix train_;
    Matrix test_;
    EvaluationSettings settings_;
    Budget budget_;
    RecordSink* sink_;
    std::chrono::steady_clock::time_point start_;
    std::map<Chromosome, Outcome> cache_;
    std::uint64_t next_index_ = 0;
    std::uint64_t evaluations_ = 0;
    double best_fitness_ = kWorstFitness;
};

} // namespace evoaaa
