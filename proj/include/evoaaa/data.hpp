#pragma once

#include "evoaaa/neural.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace evoaaa {

enum class AttributeKind { real, integer, binary };
enum class Normalization { none, minmax };

std::string_view to_string(AttributeKind k);

struct Dataset {
    std::string name;
    Matrix values;  // n x f
    AttributeKind attribute_kind = AttributeKind::real;
    std::vector<Eigen::Index> train_indices;
    std::vector<Eigen::Index> test_indices;

    int feature_count() const { return static_cast<int>(values.cols()); }
    Eigen::Index rows() const { return values.rows(); }
    bool is_split() const { return !train_indices.empty() || !test_indices.empty(); }

    Matrix train_matrix() const;
    Matrix test_matrix() const;
};

struct LoadOptions {
    bool has_header = false;
    // Column name (requires a header) or index; negative indices count from the end.
    std::optional<std::string> drop_column;
    Normalization normalize = Normalization::none;
};

// Throws ParseError (row/column named) or InvalidDataset.
Dataset load_csv(const std::filesystem::path& path, const LoadOptions& options = {});
Dataset dataset_from_matrix(std::string name, Matrix values, Normalization normalize = Normalization::none);

AttributeKind infer_attribute_kind(const Matrix& values);
// Per-feature min-max scaling to [0, 1]; constant features become 0.
Matrix minmax_normalize(const Matrix& values);

inline constexpr double kDefaultTestFraction = 0.2;

// Seeded shuffle; the first round(fraction * n) shuffled rows form the test partition.
Dataset split(const Dataset& d, double test_fraction, std::uint64_t seed);

// Bundled stand-ins shaped like the small benchmark corpora.
enum class SyntheticShape { glass, sonar, spect };
Dataset synthetic_dataset(SyntheticShape shape, std::uint64_t seed);
std::optional<SyntheticShape> parse_synthetic_shape(std::string_view name);

void write_csv(const Dataset& d, const std::filesystem::path& path, bool header = true);

} // namespace evoaaa
