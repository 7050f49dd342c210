#include "evoaaa/serialization.hpp"

#include "evoaaa/errors.hpp"

#include <cmath>

namespace evoaaa {

namespace {

Json optional_number(const std::optional<double>& v) {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

Json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

Json layer_to_json(const std::string& name, const DenseLayer& l) {
    Json j;
    j["name"] = name;
    j["rows"] = l.weights.rows();
    j["cols"] = l.weights.cols();
    j["activation"] = to_string(l.activation);
    Json w = Json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    j["weights"] = std::move(w);
    Json b = Json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias(r));
    j["bias"] = std::move(b);
    return j;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field \"") + key + "\": " + e.what());
    }
}

} // namespace

Json spec_to_json(const ArchitectureSpec& spec) {
    Json j;
    j["variant"] = to_string(spec.variant);
    j["feature_count"] = spec.feature_count;
    j["encoder_hidden_units"] = spec.encoder_hidden_units;
    j["coding_units"] = spec.coding_units;
    Json enc = Json::array(), dec = Json::array();
    for (auto a : spec.encoder_activations) enc.push_back(to_string(a));
    for (auto a : spec.decoder_activations) dec.push_back(to_string(a));
    j["encoder_activations"] = std::move(enc);
    j["coding_activation"] = to_string(spec.coding_activation);
    j["decoder_activations"] = std::move(dec);
    j["output_activation"] = to_string(spec.output_activation);
    j["loss"] = to_string(spec.loss);
    j["layer_sizes"] = spec.layer_sizes();
    j["layers"] = spec.describe_layers();
    return j;
}

Json record_to_json(const FitnessRecord& r) {
    Json j;
    j["eval_index"] = r.eval_index;
    j["chromosome"] = r.chromosome.to_string();
    j["genes"] = r.chromosome.genes();
    j["valid"] = r.valid();
    j["failed"] = r.status == RecordStatus::failed;
    j["train_mse"] = optional_number(r.train_mse);
    j["test_mse"] = optional_number(r.test_mse);
    j["penalty"] = r.penalty;
    j["fitness"] = number_or_null(r.fitness);
    j["train_ms"] = r.wall_time_ms;
    j["strategy"] = r.strategy_tag;
    return j;
}

Json model_to_json(const ArchitectureSpec& spec, const ModelParams& params, double train_mse) {
    Json j;
    j["schema"] = kModelSchema;
    j["spec"] = spec_to_json(spec);
    Json layers = Json::array();
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        std::string name = k < params.coding_layer                        ? "encoder_" + std::to_string(k + 1)
                           : k == params.coding_layer                     ? "coding"
                           : k + 1 == params.layers.size()                ? "output"
                                                                          : "decoder_" + std::to_string(k - params.coding_layer);
        if (k == params.coding_layer && params.logvar_head) name = "coding_mean";
        layers.push_back(layer_to_json(name, params.layers[k]));
        if (k == params.coding_layer && params.logvar_head) layers.push_back(layer_to_json("coding_logvar", *params.logvar_head));
    }
    j["layers"] = std::move(layers);
    j["train_mse"] = number_or_null(train_mse);
    return j;
}

Json best_to_json(const SearchResult& result, const Dataset& dataset, const SearchConfig& cfg) {
    Json j;
    j["schema"] = kBestSchema;
    j["dataset"] = dataset.name;
    j["strategy"] = to_string(cfg.strategy);
    j["alpha"] = cfg.alpha;
    j["seed"] = cfg.master_seed;
    const FitnessRecord& b = result.best;
    j["chromosome"] = b.chromosome.to_string();
    j["genes"] = b.chromosome.genes();
    if (b.valid() && is_valid(b.chromosome)) {
        j["spec"] = spec_to_json(decode(b.chromosome, dataset.feature_count()));
    } else {
        j["spec"] = nullptr;
    }
    j["layers"] = b.chromosome.layers();
    j["coding_units"] = b.chromosome.coding_units();
    j["train_mse"] = optional_number(b.train_mse);
    j["test_mse"] = optional_number(b.test_mse);
    j["penalty"] = b.penalty;
    j["fitness"] = number_or_null(b.fitness);
    j["test_mse_penalized"] = b.test_mse ? Json(*b.test_mse + b.penalty) : Json(nullptr);
    j["evaluations"] = result.evaluations;
    j["records"] = result.trajectory.size();
    j["generations"] = result.generations;
    j["wall_time_ms"] = result.wall_time_ms;
    j["stop_reason"] = to_string(result.stop_reason);
    return j;
}

Json config_to_json(const SearchConfig& cfg) {
    Json j;
    j["schema"] = kConfigSchema;
    j["strategy"] = to_string(cfg.strategy);
    j["population_size"] = cfg.population_size;
    j["iterations"] = cfg.iterations;
    j["mutation_prob"] = cfg.mutation_prob;
    j["crossover_prob"] = cfg.crossover_prob;
    j["elitism_count"] = cfg.elitism_count;
    j["de_cr"] = cfg.de_cr;
    j["de_f"] = cfg.de_f;
    j["alpha"] = cfg.alpha;
    j["master_seed"] = cfg.master_seed;
    j["memoize"] = cfg.memoize;
    j["workers"] = cfg.workers;
    j["sweep_batch"] = cfg.sweep_batch;
    Json budget;
    budget["max_wall_clock_ms"] = cfg.budget.max_wall_clock.count();
    budget["max_evaluations"] = cfg.budget.max_evaluations ? Json(*cfg.budget.max_evaluations) : Json(nullptr);
    budget["termination_cost"] = cfg.budget.termination_cost;
    j["budget"] = std::move(budget);
    Json train;
    train["epochs"] = cfg.train.epochs;
    train["batch_size"] = cfg.train.batch_size;
    train["learning_rate"] = cfg.train.optimizer.learning_rate;
    train["rho"] = cfg.train.optimizer.decay;
    train["epsilon"] = cfg.train.optimizer.epsilon;
    train["noise_stddev"] = cfg.train.variant.noise_stddev;
    train["sparsity_target"] = cfg.train.variant.sparsity_target;
    train["sparsity_weight"] = cfg.train.variant.sparsity_weight;
    train["contraction_weight"] = cfg.train.variant.contraction_weight;
    train["correntropy_bandwidth"] = cfg.train.variant.correntropy_bandwidth;
    train["kl_weight"] = cfg.train.variant.kl_weight;
    j["train"] = std::move(train);
    return j;
}

SearchConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (get_or<std::string>(j, "schema", "") != kConfigSchema) {
        throw ConfigError(std::string("config schema must be \"") + kConfigSchema + "\"");
    }
    std::string name = get_or<std::string>(j, "strategy", "");
    std::optional<Strategy> s = parse_strategy(name);
    if (!s) throw ConfigError("unknown strategy \"" + name + "\"");
    SearchConfig c = SearchConfig::defaults_for(*s);
    c.population_size = get_or(j, "population_size", c.population_size);
    c.iterations = get_or(j, "iterations", c.iterations);
    c.mutation_prob = get_or(j, "mutation_prob", c.mutation_prob);
    c.crossover_prob = get_or(j, "crossover_prob", c.crossover_prob);
    c.elitism_count = get_or(j, "elitism_count", c.elitism_count);
    c.de_cr = get_or(j, "de_cr", c.de_cr);
    c.de_f = get_or(j, "de_f", c.de_f);
    c.alpha = get_or(j, "alpha", c.alpha);
    c.master_seed = get_or(j, "master_seed", c.master_seed);
    c.memoize = get_or(j, "memoize", c.memoize);
    c.workers = get_or(j, "workers", c.workers);
    c.sweep_batch = get_or(j, "sweep_batch", c.sweep_batch);
    if (auto it = j.find("budget"); it != j.end()) {
        c.budget.max_wall_clock = std::chrono::milliseconds(get_or<std::int64_t>(*it, "max_wall_clock_ms", c.budget.max_wall_clock.count()));
        auto me = it->find("max_evaluations");
        if (me != it->end()) {
            c.budget.max_evaluations = me->is_null() ? std::nullopt : std::optional<std::uint64_t>(me->get<std::uint64_t>());
        }
        c.budget.termination_cost = get_or(*it, "termination_cost", c.budget.termination_cost);
    }
    if (auto it = j.find("train"); it != j.end()) {
        const Json& t = *it;
        c.train.epochs = get_or(t, "epochs", c.train.epochs);
        c.train.batch_size = get_or(t, "batch_size", c.train.batch_size);
        c.train.optimizer.learning_rate = get_or(t, "learning_rate", c.train.optimizer.learning_rate);
        c.train.optimizer.decay = get_or(t, "rho", c.train.optimizer.decay);
        c.train.optimizer.epsilon = get_or(t, "epsilon", c.train.optimizer.epsilon);
        c.train.variant.noise_stddev = get_or(t, "noise_stddev", c.train.variant.noise_stddev);
        c.train.variant.sparsity_target = get_or(t, "sparsity_target", c.train.variant.sparsity_target);
        c.train.variant.sparsity_weight = get_or(t, "sparsity_weight", c.train.variant.sparsity_weight);
        c.train.variant.contraction_weight = get_or(t, "contraction_weight", c.train.variant.contraction_weight);
        c.train.variant.correntropy_bandwidth = get_or(t, "correntropy_bandwidth", c.train.variant.correntropy_bandwidth);
        c.train.variant.kl_weight = get_or(t, "kl_weight", c.train.variant.kl_weight);
    }
    c.validate();
    return c;
}

Json source_to_json(const DatasetSource& source) {
    Json j;
    j["location"] = source.location;
    j["has_header"] = source.load.has_header;
    j["drop_column"] = source.load.drop_column ? Json(*source.load.drop_column) : Json(nullptr);
    j["normalize"] = source.load.normalize == Normalization::minmax ? "minmax" : "none";
    j["test_fraction"] = source.test_fraction;
    return j;
}

DatasetSource source_from_json(const Json& j) {
    DatasetSource s;
    s.location = get_or<std::string>(j, "location", "");
    if (s.location.empty()) throw ConfigError("dataset location missing from config");
    s.load.has_header = get_or(j, "has_header", false);
    if (auto it = j.find("drop_column"); it != j.end() && !it->is_null()) s.load.drop_column = it->get<std::string>();
    std::string norm = get_or<std::string>(j, "normalize", "none");
    if (norm != "none" && norm != "minmax") throw ConfigError("normalize must be none or minmax");
    s.load.normalize = norm == "minmax" ? Normalization::minmax : Normalization::none;
    s.test_fraction = get_or(j, "test_fraction", kDefaultTestFraction);
    return s;
}

} // namespace evoaaa
