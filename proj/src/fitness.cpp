#include "evoaaa/fitness.hpp"

#include "evoaaa/errors.hpp"
#include "evoaaa/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <istream>
#include <ostream>
#include <thread>

namespace evoaaa {

void Budget::validate() const {
    if (max_wall_clock.count() <= 0) throw ConfigError("wall-clock budget must be positive");
    if (max_evaluations && *max_evaluations == 0) throw ConfigError("evaluation budget must be positive");
}

double penalty(int layers, int coding_units, double alpha) {
    return alpha * static_cast<double>(layers) * static_cast<double>(coding_units);
}

bool should_terminate(double best_fitness, std::chrono::milliseconds elapsed, std::uint64_t evaluations,
                      const Budget& budget) {
    return best_fitness <= budget.termination_cost || elapsed >= budget.max_wall_clock ||
           (budget.max_evaluations && evaluations >= *budget.max_evaluations);
}

std::uint64_t training_seed(std::uint64_t master_seed, const Chromosome& c) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(ChromosomeHash{}(c)));
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string iso_timestamp_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

SolutionsLog::SolutionsLog(std::ostream& out) : out_(out) {
    const auto& cols = columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
}

const std::vector<std::string>& SolutionsLog::columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = {"eval_index", "timestamp", "strategy"};
        for (std::size_t g = 1; g <= kGeneCount; ++g) c.push_back("gene_" + std::to_string(g));
        for (const char* s : {"valid", "train_mse", "test_mse", "penalty", "fitness", "train_ms"}) c.emplace_back(s);
        return c;
    }();
    return cols;
}

void SolutionsLog::write(const FitnessRecord& r) {
    out_ << r.eval_index << ',' << r.timestamp << ',' << r.strategy_tag;
    for (int g : r.chromosome.genes()) out_ << ',' << g;
    out_ << ',' << (r.valid() ? 1 : 0) << ',' << (r.train_mse ? format_double(*r.train_mse) : "") << ','
         << (r.test_mse ? format_double(*r.test_mse) : "") << ',' << format_double(r.penalty) << ','
         << format_double(r.fitness) << ',' << r.wall_time_ms << '\n';
    out_.flush();
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t end = line.find(',', pos);
        if (end == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, end - pos));
        pos = end + 1;
    }
}

template <typename T>
T parse_field(std::string_view s, std::size_t row, std::size_t col) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError(row, col, "solutions log row " + std::to_string(row) + ", column " + std::to_string(col) +
                                       ": cannot parse \"" + std::string(s) + "\"");
    }
    return v;
}

} // namespace

FitnessRecord parse_solution_row(std::string_view line, std::size_t row) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> f = split_commas(line);
    const std::size_t expected = SolutionsLog::columns().size();
    if (f.size() != expected) {
        throw ParseError(row, f.size(), "solutions log row " + std::to_string(row) + " has " +
                                            std::to_string(f.size()) + " fields, expected " + std::to_string(expected));
    }
    FitnessRecord r;
    r.eval_index = parse_field<std::uint64_t>(f[0], row, 1);
    r.timestamp = std::string(f[1]);
    r.strategy_tag = std::string(f[2]);
    std::array<int, kGeneCount> genes{};
    for (std::size_t g = 0; g < kGeneCount; ++g) genes[g] = parse_field<int>(f[3 + g], row, 4 + g);
    r.chromosome = Chromosome(genes);
    std::size_t c = 3 + kGeneCount;
    const int valid = parse_field<int>(f[c], row, c + 1);
    if (valid != 0 && valid != 1) throw ParseError(row, c + 1, "valid column must be 0 or 1");
    if (!f[c + 1].empty()) r.train_mse = parse_field<double>(f[c + 1], row, c + 2);
    if (!f[c + 2].empty()) r.test_mse = parse_field<double>(f[c + 2], row, c + 3);
    r.penalty = parse_field<double>(f[c + 3], row, c + 4);
    r.fitness = parse_field<double>(f[c + 4], row, c + 5);
    r.wall_time_ms = parse_field<std::int64_t>(f[c + 5], row, c + 6);
    r.status = valid == 0 ? RecordStatus::invalid : (r.train_mse ? RecordStatus::ok : RecordStatus::failed);
    return r;
}

std::vector<FitnessRecord> read_solutions_log(std::istream& in) {
    std::vector<FitnessRecord> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (row == 1) {
            if (line.rfind("eval_index,", 0) != 0) throw ParseError(1, 1, "solutions log is missing its header");
            continue;
        }
        if (line.empty() || line == "\r") continue;
        out.push_back(parse_solution_row(line, row));
    }
    return out;
}

Evaluator::Evaluator(const Dataset& dataset, EvaluationSettings settings, Budget budget, RecordSink* sink)
    : dataset_(dataset),
      settings_(std::move(settings)),
      budget_(budget),
      sink_(sink),
      start_(std::chrono::steady_clock::now()) {
    if (!dataset.is_split()) throw ConfigError("dataset must be split before evaluation");
    if (dataset.train_indices.empty()) throw ConfigError("training partition is empty");
    if (settings_.alpha < 0.0) throw ConfigError("alpha must be non-negative");
    budget_.validate();
    train_ = dataset.train_matrix();
    test_ = dataset.test_matrix();
    TrainConfig probe = settings_.train;
    probe.batch_size = std::min<int>(probe.batch_size, static_cast<int>(train_.rows()));
    probe.validate(static_cast<std::size_t>(train_.rows()));
}

std::chrono::milliseconds Evaluator::elapsed() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
}

bool Evaluator::budget_exhausted() const {
    return elapsed() >= budget_.max_wall_clock || (budget_.max_evaluations && evaluations_ >= *budget_.max_evaluations);
}

Evaluator::Outcome Evaluator::train_one(const Chromosome& c) const {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    ArchitectureSpec spec = decode(c, dataset_.feature_count());
    TrainConfig cfg = settings_.train;
    cfg.batch_size = std::min<int>(cfg.batch_size, static_cast<int>(train_.rows()));
    TrainResult tr = train(spec, train_, cfg, training_seed(settings_.master_seed, c));
    if (tr.failed) {
        o.status = RecordStatus::failed;
    } else {
        o.train_mse = tr.train_mse;
        if (test_.rows() > 0) {
            try {
                double t = reconstruction_mse(tr.params, spec, test_);
                if (std::isfinite(t)) o.test_mse = t;
            } catch (const NumericOverflow&) {
            }
        }
    }
    o.wall_time_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

FitnessRecord Evaluator::stamp(const Chromosome& c, const Outcome& o, bool cache_hit) {
    FitnessRecord r;
    r.chromosome = c;
    r.status = o.status;
    r.train_mse = o.train_mse;
    r.test_mse = o.test_mse;
    r.penalty = penalty(c.layers(), c.coding_units(), settings_.alpha);
    r.fitness = o.status == RecordStatus::ok ? *o.train_mse + r.penalty : kWorstFitness;
    r.eval_index = next_index_++;
    r.wall_time_ms = cache_hit ? 0 : o.wall_time_ms;
    r.strategy_tag = settings_.strategy_tag;
    r.timestamp = iso_timestamp_now();
    r.cache_hit = cache_hit;
    if (r.valid()) ++evaluations_;
    best_fitness_ = std::min(best_fitness_, r.fitness);
    if (sink_) sink_->write(r);
    return r;
}

FitnessRecord Evaluator::evaluate(const Chromosome& c) {
    BatchResult b = evaluate_batch(std::span<const Chromosome>(&c, 1));
    if (b.records.empty()) throw Error("evaluation budget exhausted");
    return b.records.front();
}

BatchResult Evaluator::evaluate_batch(std::span<const Chromosome> batch) {
    BatchResult result;
    if (budget_exhausted()) {
        result.exhausted = !batch.empty();
        return result;
    }

    // Prefix admitted by the evaluation budget; invalid chromosomes are free.
    std::size_t admitted = 0;
    std::uint64_t planned = evaluations_;
    for (; admitted < batch.size(); ++admitted) {
        if (!is_valid(batch[admitted])) continue;
        if (budget_.max_evaluations && planned >= *budget_.max_evaluations) break;
        ++planned;
    }

    // One training job per distinct chromosome that needs it.
    std::vector<std::size_t> job_of(admitted, SIZE_MAX);
    std::vector<Chromosome> jobs;
    {
        std::map<Chromosome, std::size_t> pending;
        for (std::size_t i = 0; i < admitted; ++i) {
            const Chromosome& c = batch[i];
            if (!is_valid(c)) continue;
            if (settings_.memoize) {
                if (cache_.count(c)) continue;
                auto [it, inserted] = pending.try_emplace(c, jobs.size());
                if (inserted) jobs.push_back(c);
                job_of[i] = it->second;
            } else {
                job_of[i] = jobs.size();
                jobs.push_back(c);
            }
        }
    }

    const auto deadline = start_ + budget_.max_wall_clock;
    std::vector<std::optional<Outcome>> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            if (std::chrono::steady_clock::now() >= deadline) continue;
            outcomes[j] = train_one(jobs[j]);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(settings_.workers, static_cast<unsigned>(jobs.size())));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < admitted; ++i) {
        const Chromosome& c = batch[i];
        if (!is_valid(c)) {
            Outcome o;
            o.status = RecordStatus::invalid;
            result.records.push_back(stamp(c, o, false));
            continue;
        }
        if (job_of[i] == SIZE_MAX) {
            result.records.push_back(stamp(c, cache_.at(c), true));
            continue;
        }
        const std::optional<Outcome>& o = outcomes[job_of[i]];
        if (!o) {
            result.exhausted = true;
            return result;
        }
        bool first_use = !settings_.memoize || !cache_.count(c);
        if (settings_.memoize && first_use) cache_.emplace(c, *o);
        result.records.push_back(stamp(c, *o, !first_use));
    }
    result.exhausted = admitted < batch.size();
    return result;
}

} // namespace evoaaa
