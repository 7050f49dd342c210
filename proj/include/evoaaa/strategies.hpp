#pragma once

#include "evoaaa/fitness.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evoaaa {

enum class Strategy { ga, es, de, exhaustive, random };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

struct SearchConfig {
    Strategy strategy = Strategy::ga;
    int population_size = 50;
    int iterations = 100;
    double mutation_prob = 1.0 / 15.0;
    double crossover_prob = 1.0;
    int elitism_count = 5;
    double de_cr = 0.5;
    double de_f = 0.8;
    double alpha = 1e-4;
    Budget budget;
    std::uint64_t master_seed = 1;
    TrainConfig train;
    bool memoize = true;
    unsigned workers = 1;
    // Batch size used by exhaustive and random search when dispatching evaluations.
    int sweep_batch = 32;
    // Replaces the leading members of the initial population (GA, ES, DE).
    std::vector<Chromosome> initial_population;
    // Narrower gene bounds, e.g. pinned genes; must sit inside the dataset's bounds.
    std::optional<GeneBounds> bounds;

    // Population and iteration defaults for each strategy.
    static SearchConfig defaults_for(Strategy s);
    void validate() const;
};

enum class StopReason { iterations, termination_cost, budget, space_exhausted };

std::string_view to_string(StopReason r);

struct SearchResult {
    FitnessRecord best;
    std::vector<FitnessRecord> trajectory;  // every record in eval_index order
    std::uint64_t evaluations = 0;          // valid records
    int generations = 0;
    std::int64_t wall_time_ms = 0;
    StopReason stop_reason = StopReason::iterations;
};

// Running minimum of fitness over a trajectory.
std::vector<double> best_so_far(const std::vector<FitnessRecord>& trajectory);

// Gene-15-fastest odometer over bound-valid chromosomes, starting at all lower bounds.
class Odometer {
public:
    explicit Odometer(GeneBounds bounds);

    // Next bound-valid state, or nullopt once the space is exhausted.
    std::optional<Chromosome> next();
    // Next structurally valid state; jumps over whole blocks of invalid unit combinations.
    std::optional<Chromosome> next_valid();

private:
    bool advance_from(std::size_t position);

    GeneBounds bounds_;
    Chromosome current_;
    bool started_ = false;
    bool done_ = false;
};

// Minimization roulette weight: 1 / (fitness + 1e-9), zero for non-finite fitness.
double roulette_weight(double fitness);
std::size_t roulette_pick(std::span<const double> weights, Rng& rng);

// dataset must be split. Each run owns its evaluator; sink receives every record.
SearchResult run_ga(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink = nullptr);
SearchResult run_es(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink = nullptr);
SearchResult run_de(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink = nullptr);
SearchResult run_exhaustive(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink = nullptr);
SearchResult run_random(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink = nullptr);

// Dispatches on cfg.strategy.
SearchResult run_search(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink = nullptr);

} // namespace evoaaa
