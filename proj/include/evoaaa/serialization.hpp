#pragma once

#include "evoaaa/experiment.hpp"
#include "evoaaa/neural.hpp"
#include "evoaaa/strategies.hpp"

#include <nlohmann/json.hpp>

namespace evoaaa {

using Json = nlohmann::ordered_json;

inline constexpr const char* kModelSchema = "evoaaa-model/1";
inline constexpr const char* kBestSchema = "evoaaa-best/1";
inline constexpr const char* kConfigSchema = "evoaaa-config/1";

Json spec_to_json(const ArchitectureSpec& spec);
Json record_to_json(const FitnessRecord& r);
Json model_to_json(const ArchitectureSpec& spec, const ModelParams& params, double train_mse);
Json best_to_json(const SearchResult& result, const Dataset& dataset, const SearchConfig& cfg);

Json config_to_json(const SearchConfig& cfg);
// Absent fields take the strategy defaults. Throws ConfigError on malformed fields.
SearchConfig config_from_json(const Json& j);

Json source_to_json(const DatasetSource& source);
DatasetSource source_from_json(const Json& j);

} // namespace evoaaa
