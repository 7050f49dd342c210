#include "evoaaa/strategies.hpp"

#include "evoaaa/errors.hpp"
#include "evoaaa/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evoaaa {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::ga: return "ga";
    case Strategy::es: return "es";
    case Strategy::de: return "de";
    case Strategy::exhaustive: return "exhaustive";
    case Strategy::random: return "random";
    }
    return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
    for (Strategy s : {Strategy::ga, Strategy::es, Strategy::de, Strategy::exhaustive, Strategy::random}) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::iterations: return "iterations";
    case StopReason::termination_cost: return "termination_cost";
    case StopReason::budget: return "budget";
    case StopReason::space_exhausted: return "space_exhausted";
    }
    return "unknown";
}

SearchConfig SearchConfig::defaults_for(Strategy s) {
    SearchConfig c;
    c.strategy = s;
    switch (s) {
    case Strategy::ga:
        c.population_size = 50;
        c.iterations = 100;
        c.mutation_prob = 1.0 / 15.0;
        c.crossover_prob = 1.0;
        c.elitism_count = 5;
        break;
    case Strategy::es:
        c.population_size = 4;
        c.iterations = 500;
        c.mutation_prob = 1.0 / 15.0;
        break;
    case Strategy::de:
        c.population_size = 150;
        c.iterations = 30;
        c.de_cr = 0.5;
        c.de_f = 0.8;
        break;
    case Strategy::exhaustive:
    case Strategy::random: break;
    }
    return c;
}

void SearchConfig::validate() const {
    auto probability = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    probability(mutation_prob, "mutation probability");
    probability(crossover_prob, "crossover probability");
    probability(de_cr, "DE crossover rate");
    if (!(de_f >= 0.0)) throw ConfigError("DE differential weight must be non-negative");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    if (iterations < 0) throw ConfigError("iterations must be non-negative");
    if (sweep_batch < 1) throw ConfigError("sweep batch must be >= 1");
    budget.validate();
    switch (strategy) {
    case Strategy::ga:
        if (elitism_count < 0 || population_size < elitism_count + 2) {
            throw ConfigError("GA needs population_size >= elitism_count + 2");
        }
        break;
    case Strategy::es:
        if (population_size < 1) throw ConfigError("ES needs population_size >= 1");
        break;
    case Strategy::de:
        if (population_size < 3) throw ConfigError("DE needs population_size >= 3");
        break;
    default: break;
    }
    if (initial_population.size() > static_cast<std::size_t>(std::max(population_size, 0))) {
        throw ConfigError("initial population larger than population_size");
    }
}

std::vector<double> best_so_far(const std::vector<FitnessRecord>& trajectory) {
    std::vector<double> out;
    out.reserve(trajectory.size());
    double best = kWorstFitness;
    for (const auto& r : trajectory) {
        best = std::min(best, r.fitness);
        out.push_back(best);
    }
    return out;
}

Odometer::Odometer(GeneBounds bounds) : bounds_(std::move(bounds)) {
    std::array<int, kGeneCount> lows{};
    for (std::size_t i = 0; i < kGeneCount; ++i) lows[i] = bounds_[i].lo;
    current_ = Chromosome(lows);
}

bool Odometer::advance_from(std::size_t position) {
    for (std::size_t i = position + 1; i < kGeneCount; ++i) current_[i] = bounds_[i].lo;
    for (std::size_t i = position + 1; i-- > 0;) {
        if (current_[i] < bounds_[i].hi) {
            ++current_[i];
            return true;
        }
        current_[i] = bounds_[i].lo;
    }
    done_ = true;
    return false;
}

std::optional<Chromosome> Odometer::next() {
    if (done_) return std::nullopt;
    if (!started_) {
        started_ = true;
        return current_;
    }
    if (!advance_from(kGeneCount - 1)) return std::nullopt;
    return current_;
}

std::optional<Chromosome> Odometer::next_valid() {
    std::optional<Chromosome> s = next();
    // Validity depends only on genes 1-6, so an invalid prefix rules out every faster digit.
    while (s && !is_valid(*s)) {
        if (!advance_from(gene::kCodingUnits)) return std::nullopt;
        s = current_;
    }
    return s;
}

double roulette_weight(double fitness) {
    if (!std::isfinite(fitness)) return 0.0;
    return 1.0 / (std::max(fitness, 0.0) + 1e-9);
}

std::size_t roulette_pick(std::span<const double> weights, Rng& rng) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
        std::uniform_int_distribution<std::size_t> uniform(0, weights.size() - 1);
        return uniform(rng);
    }
    std::uniform_real_distribution<double> dist(0.0, total);
    double x = dist(rng);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        if (x < weights[i]) return i;
        x -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return 0;
}

namespace {

bool fitter(const FitnessRecord& a, const FitnessRecord& b) {
    return a.fitness < b.fitness;
}

class SearchRun {
public:
    SearchRun(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink)
        : cfg_(cfg),
          bounds_(resolve_bounds(dataset, cfg)),
          evaluator_(dataset, settings_for(cfg), cfg.budget, sink),
          rng_(derive_seed(cfg.master_seed, 0xE5 + static_cast<std::uint64_t>(cfg.strategy))) {}

    const GeneBounds& bounds() const { return bounds_; }
    Rng& rng() { return rng_; }

    // Evaluates the batch; a short result means the budget ran out.
    std::vector<FitnessRecord> evaluate(std::span<const Chromosome> batch) {
        BatchResult b = evaluator_.evaluate_batch(batch);
        for (const auto& r : b.records) {
            result_.trajectory.push_back(r);
            if (r.fitness < result_.best.fitness || result_.trajectory.size() == 1) result_.best = r;
        }
        if (b.exhausted) exhausted_ = true;
        return std::move(b.records);
    }

    bool should_stop() const {
        return exhausted_ || should_terminate(result_.best.fitness, evaluator_.elapsed(), evaluator_.evaluations(),
                                              cfg_.budget);
    }

    void next_generation() { ++result_.generations; }

    SearchResult finish(bool space_exhausted = false) {
        result_.evaluations = evaluator_.evaluations();
        result_.wall_time_ms = evaluator_.elapsed().count();
        if (!result_.trajectory.empty() && result_.best.fitness <= cfg_.budget.termination_cost) {
            result_.stop_reason = StopReason::termination_cost;
        } else if (exhausted_ || evaluator_.budget_exhausted()) {
            result_.stop_reason = StopReason::budget;
        } else if (space_exhausted) {
            result_.stop_reason = StopReason::space_exhausted;
        } else {
            result_.stop_reason = StopReason::iterations;
        }
        return std::move(result_);
    }

    std::vector<Chromosome> initial_chromosomes() {
        std::vector<Chromosome> pop = cfg_.initial_population;
        for (const auto& c : pop) {
            if (!bounds_.contains(c)) throw ConfigError("initial chromosome outside gene bounds: " + c.to_string());
        }
        while (pop.size() < static_cast<std::size_t>(cfg_.population_size)) pop.push_back(random_chromosome(bounds_, rng_));
        return pop;
    }

private:
    static GeneBounds resolve_bounds(const Dataset& dataset, const SearchConfig& cfg) {
        GeneBounds full = GeneBounds::for_features(dataset.feature_count());
        if (!cfg.bounds) return full;
        if (cfg.bounds->feature_count() != dataset.feature_count()) {
            throw ConfigError("gene bounds were built for a different feature count");
        }
        for (std::size_t i = 0; i < kGeneCount; ++i) {
            const GeneRange& r = (*cfg.bounds)[i];
            if (r.lo < full[i].lo || r.hi > full[i].hi) throw ConfigError("gene bounds exceed the dataset's bounds");
        }
        return *cfg.bounds;
    }

    static EvaluationSettings settings_for(const SearchConfig& cfg) {
        cfg.validate();
        EvaluationSettings s;
        s.alpha = cfg.alpha;
        s.train = cfg.train;
        s.master_seed = cfg.master_seed;
        s.memoize = cfg.memoize;
        s.workers = cfg.workers;
        s.strategy_tag = std::string(to_string(cfg.strategy));
        return s;
    }

    const SearchConfig& cfg_;
    GeneBounds bounds_;
    Evaluator evaluator_;
    Rng rng_;
    SearchResult result_;
    bool exhausted_ = false;
};

void require_strategy(const SearchConfig& cfg, Strategy s) {
    if (cfg.strategy != s) {
        throw ConfigError("configuration is for strategy " + std::string(to_string(cfg.strategy)) + ", not " +
                          std::string(to_string(s)));
    }
}

} // namespace

SearchResult run_ga(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink) {
    require_strategy(cfg, Strategy::ga);
    SearchRun run(dataset, cfg, sink);
    std::vector<Chromosome> initial = run.initial_chromosomes();
    std::vector<FitnessRecord> population = run.evaluate(initial);
    if (population.size() < initial.size()) return run.finish();

    const auto elites = static_cast<std::size_t>(cfg.elitism_count);
    const std::size_t offspring = static_cast<std::size_t>(cfg.population_size) - elites;
    std::bernoulli_distribution do_crossover(cfg.crossover_prob);
    for (int gen = 0; gen < cfg.iterations && !run.should_stop(); ++gen) {
        std::stable_sort(population.begin(), population.end(), fitter);
        std::vector<double> weights;
        for (std::size_t i = elites; i < population.size(); ++i) weights.push_back(roulette_weight(population[i].fitness));

        std::vector<Chromosome> children;
        while (children.size() < offspring) {
            const std::size_t first = roulette_pick(weights, run.rng());
            std::vector<double> others = weights;
            others[first] = 0.0;
            std::size_t second = first;
            if (others.size() > 1) {
                if (std::accumulate(others.begin(), others.end(), 0.0) > 0.0) {
                    second = roulette_pick(others, run.rng());
                } else {
                    std::uniform_int_distribution<std::size_t> pick(0, others.size() - 2);
                    second = pick(run.rng());
                    if (second >= first) ++second;
                }
            }
            const Chromosome& a = population[elites + first].chromosome;
            const Chromosome& b = population[elites + second].chromosome;
            auto [c1, c2] = do_crossover(run.rng()) ? crossover(a, b, run.rng()) : std::pair{a, b};
            children.push_back(mutate(c1, cfg.mutation_prob, run.bounds(), run.rng()));
            if (children.size() < offspring) children.push_back(mutate(c2, cfg.mutation_prob, run.bounds(), run.rng()));
        }

        std::vector<FitnessRecord> evaluated = run.evaluate(children);
        population.resize(elites);
        population.insert(population.end(), evaluated.begin(), evaluated.end());
        run.next_generation();
        if (evaluated.size() < children.size()) break;
    }
    return run.finish();
}

SearchResult run_es(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink) {
    require_strategy(cfg, Strategy::es);
    SearchRun run(dataset, cfg, sink);
    std::vector<Chromosome> initial = run.initial_chromosomes();
    std::vector<FitnessRecord> parents = run.evaluate(initial);
    if (parents.size() < initial.size()) return run.finish();

    constexpr int kChildrenPerParent = 2;
    const auto mu = static_cast<std::size_t>(cfg.population_size);
    for (int gen = 0; gen < cfg.iterations && !run.should_stop(); ++gen) {
        std::vector<Chromosome> offspring;
        for (const auto& p : parents) {
            for (int k = 0; k < kChildrenPerParent; ++k) {
                offspring.push_back(mutate(p.chromosome, cfg.mutation_prob, run.bounds(), run.rng()));
            }
        }
        std::vector<FitnessRecord> evaluated = run.evaluate(offspring);
        // Parents precede offspring, so ties keep the incumbents.
        std::vector<FitnessRecord> pool = parents;
        pool.insert(pool.end(), evaluated.begin(), evaluated.end());
        std::stable_sort(pool.begin(), pool.end(), fitter);
        pool.resize(mu);
        parents = std::move(pool);
        run.next_generation();
        if (evaluated.size() < offspring.size()) break;
    }
    return run.finish();
}

SearchResult run_de(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink) {
    require_strategy(cfg, Strategy::de);
    SearchRun run(dataset, cfg, sink);
    std::vector<Chromosome> initial = run.initial_chromosomes();
    std::vector<FitnessRecord> agents = run.evaluate(initial);
    if (agents.size() < initial.size()) return run.finish();

    const std::size_t n = agents.size();
    std::vector<UnitVector> positions;
    for (const auto& a : agents) positions.push_back(to_unit_vector(a.chromosome, run.bounds()));

    std::uniform_int_distribution<std::size_t> pick_agent(0, n - 1);
    std::uniform_int_distribution<std::size_t> pick_gene(0, kGeneCount - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int gen = 0; gen < cfg.iterations && !run.should_stop(); ++gen) {
        const auto best = static_cast<std::size_t>(
            std::min_element(agents.begin(), agents.end(), fitter) - agents.begin());
        std::vector<UnitVector> trials(n);
        std::vector<Chromosome> trial_chromosomes;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r1 = 0, r2 = 0;
            do r1 = pick_agent(run.rng()); while (r1 == i);
            do r2 = pick_agent(run.rng()); while (r2 == i || r2 == r1);
            const std::size_t forced = pick_gene(run.rng());
            const UnitVector& x = positions[i];
            for (std::size_t j = 0; j < kGeneCount; ++j) {
                const bool take = unit(run.rng()) < cfg.de_cr || j == forced;
                double v = x[j] + cfg.de_f * (positions[best][j] - x[j]) + cfg.de_f * (positions[r1][j] - positions[r2][j]);
                trials[i][j] = take ? std::clamp(v, 0.0, 1.0) : x[j];
            }
            trial_chromosomes.push_back(from_unit_vector(trials[i], run.bounds()));
        }
        std::vector<FitnessRecord> evaluated = run.evaluate(trial_chromosomes);
        for (std::size_t i = 0; i < evaluated.size(); ++i) {
            if (evaluated[i].fitness <= agents[i].fitness) {
                agents[i] = evaluated[i];
                positions[i] = trials[i];
            }
        }
        run.next_generation();
        if (evaluated.size() < trial_chromosomes.size()) break;
    }
    return run.finish();
}

SearchResult run_exhaustive(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink) {
    require_strategy(cfg, Strategy::exhaustive);
    SearchRun run(dataset, cfg, sink);
    Odometer odometer(run.bounds());
    bool space_done = false;
    while (!run.should_stop() && !space_done) {
        std::vector<Chromosome> batch;
        while (batch.size() < static_cast<std::size_t>(cfg.sweep_batch)) {
            std::optional<Chromosome> c = odometer.next_valid();
            if (!c) {
                space_done = true;
                break;
            }
            batch.push_back(*c);
        }
        if (batch.empty()) break;
        std::vector<FitnessRecord> evaluated = run.evaluate(batch);
        run.next_generation();
        if (evaluated.size() < batch.size()) break;
    }
    return run.finish(space_done);
}

SearchResult run_random(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink) {
    constexpr std::size_t kMaxRejections = 10'000'000;
    require_strategy(cfg, Strategy::random);
    SearchRun run(dataset, cfg, sink);
    while (!run.should_stop()) {
        std::vector<Chromosome> batch;
        std::size_t attempts = 0;
        while (batch.size() < static_cast<std::size_t>(cfg.sweep_batch)) {
            Chromosome c = random_chromosome(run.bounds(), run.rng());
            if (is_valid(c)) {
                batch.push_back(c);
            } else if (++attempts > kMaxRejections) {
                throw ConfigError("gene bounds admit no structurally valid chromosome");
            }
        }
        std::vector<FitnessRecord> evaluated = run.evaluate(batch);
        run.next_generation();
        if (evaluated.size() < batch.size()) break;
    }
    return run.finish();
}

SearchResult run_search(const Dataset& dataset, const SearchConfig& cfg, RecordSink* sink) {
    switch (cfg.strategy) {
    case Strategy::ga: return run_ga(dataset, cfg, sink);
    case Strategy::es: return run_es(dataset, cfg, sink);
    case Strategy::de: return run_de(dataset, cfg, sink);
    case Strategy::exhaustive: return run_exhaustive(dataset, cfg, sink);
    case Strategy::random: return run_random(dataset, cfg, sink);
    }
    throw ConfigError("unknown strategy");
}

} // namespace evoaaa
