#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evoaaa {

using Rng = std::mt19937_64;

inline constexpr std::size_t kGeneCount = 15;

// Zero-based gene positions. Gene numbering in user-facing text is 1-based.
namespace gene {
inline constexpr std::size_t kType = 0;
inline constexpr std::size_t kLayers = 1;
inline constexpr std::size_t kUnitsFirst = 2;  // outermost hidden pair
inline constexpr std::size_t kCodingUnits = 5;
inline constexpr std::size_t kEncoderActFirst = 6;
inline constexpr std::size_t kCodingAct = 9;
inline constexpr std::size_t kDecoderActFirst = 10;
inline constexpr std::size_t kOutputAct = 13;
inline constexpr std::size_t kLoss = 14;
inline constexpr int kMaxHiddenPairs = 3;
} // namespace gene

enum class AeVariant { basic = 1, denoising, contractive, robust, sparse, variational };

enum class Activation { linear = 1, sigmoid, tanh, relu, selu, elu, softplus, softsign };

enum class LossKind { mse = 1, mae, mape, bce, cosine };

inline constexpr int kActivationOptions = 8;
inline constexpr int kOutputActivationOptions = 4;
inline constexpr int kLossOptions = 5;
inline constexpr int kVariantOptions = 6;

std::string_view to_string(AeVariant v);
std::string_view to_string(Activation a);
std::string_view to_string(LossKind l);

// Gene 14 values 1..4 select linear, relu, elu, softplus.
Activation output_activation_from_gene(int value);
int output_activation_to_gene(Activation a);

struct GeneRange {
    int lo = 0;
    int hi = 0;

    int options() const { return hi - lo + 1; }
    bool contains(int v) const { return v >= lo && v <= hi; }
    friend bool operator==(const GeneRange&, const GeneRange&) = default;
};

class Chromosome;

// Inclusive per-gene bounds. Unit genes depend on the feature count.
class GeneBounds {
public:
    // Throws InvalidDataset when features < 1.
    static GeneBounds for_features(int features);

    const GeneRange& operator[](std::size_t i) const { return ranges_.at(i); }
    int feature_count() const { return features_; }

    // Restricts gene i to the single value v (which must lie in the current range).
    GeneBounds pinned(std::size_t i, int v) const;
    GeneBounds restricted(std::size_t i, GeneRange r) const;

    bool contains(const Chromosome& c) const;

private:
    GeneBounds() = default;
    std::array<GeneRange, kGeneCount> ranges_{};
    int features_ = 0;
};

class Chromosome {
public:
    Chromosome() = default;
    explicit Chromosome(const std::array<int, kGeneCount>& genes) : genes_(genes) {}

    // Parses "5,3,37,32,1,8,2,2,4,3,4,2,2,1,1"; checks bounds. Throws ConfigError.
    static Chromosome parse(std::string_view text, const GeneBounds& bounds);

    int operator[](std::size_t i) const { return genes_[i]; }
    int& operator[](std::size_t i) { return genes_[i]; }
    const std::array<int, kGeneCount>& genes() const { return genes_; }

    int layers() const { return genes_[gene::kLayers]; }
    int coding_units() const { return genes_[gene::kCodingUnits]; }

    std::string to_string() const;

    friend auto operator<=>(const Chromosome&, const Chromosome&) = default;

private:
    std::array<int, kGeneCount> genes_{};
};

struct ChromosomeHash {
    std::size_t operator()(const Chromosome& c) const noexcept;
};

struct ArchitectureSpec {
    AeVariant variant = AeVariant::basic;
    std::vector<int> encoder_hidden_units;  // outer -> inner
    int coding_units = 1;
    std::vector<Activation> encoder_activations;
    Activation coding_activation = Activation::linear;
    std::vector<Activation> decoder_activations;  // inner -> outer
    Activation output_activation = Activation::linear;
    LossKind loss = LossKind::mse;
    int feature_count = 1;

    int hidden_pairs() const { return static_cast<int>(encoder_hidden_units.size()); }
    // Input, encoder hidden, coding, decoder hidden, output.
    std::vector<int> layer_sizes() const;
    int layer_count() const { return 2 * hidden_pairs() + 3; }
    // "37, 32, 8, 32, 37": hidden and coding widths, input/output excluded.
    std::string describe_layers() const;
};

GeneBounds default_bounds(int features);

Chromosome random_chromosome(int features, Rng& rng);
Chromosome random_chromosome(const GeneBounds& bounds, Rng& rng);

// Used unit genes must be non-increasing outer -> inner; unused genes are ignored.
bool is_valid(const Chromosome& c);

// Throws DecodeError for structurally invalid chromosomes or a feature-count mismatch.
ArchitectureSpec decode(const Chromosome& c, int features);

// Writes the spec into the used gene positions; unused positions take lower bounds.
Chromosome encode(const ArchitectureSpec& spec);

// Positions that influence the decoded architecture.
std::vector<std::size_t> used_gene_positions(const Chromosome& c);

Chromosome mutate(const Chromosome& c, double probability, const GeneBounds& bounds, Rng& rng);

// Segment boundaries sit after genes 1, 2, 6, 13 and 14 (1-based).
inline constexpr std::size_t kCrossoverCuts = 5;
using CutMask = std::array<bool, kCrossoverCuts>;

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, const CutMask& cuts);
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng);

using UnitVector = std::array<double, kGeneCount>;

UnitVector to_unit_vector(const Chromosome& c, const GeneBounds& bounds);
Chromosome from_unit_vector(const UnitVector& v, const GeneBounds& bounds);

// Product of option counts for every gene except the unit genes.
std::uint64_t architecture_free_combinations();
std::uint64_t architecture_free_combinations(const GeneBounds& bounds);

// Non-increasing (layers + 1)-tuples over [1, features]: C(features + layers, layers + 1).
std::uint64_t count_valid_unit_assignments(int features, int layers);

} // namespace evoaaa
