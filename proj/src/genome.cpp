#include "evoaaa/genome.hpp"

#include "evoaaa/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace evoaaa {

std::string_view to_string(AeVariant v) {
    switch (v) {
    case AeVariant::basic: return "basic";
    case AeVariant::denoising: return "denoising";
    case AeVariant::contractive: return "contractive";
    case AeVariant::robust: return "robust";
    case AeVariant::sparse: return "sparse";
    case AeVariant::variational: return "variational";
    }
    return "unknown";
}

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::selu: return "selu";
    case Activation::elu: return "elu";
    case Activation::softplus: return "softplus";
    case Activation::softsign: return "softsign";
    }
    return "unknown";
}

std::string_view to_string(LossKind l) {
    switch (l) {
    case LossKind::mse: return "mse";
    case LossKind::mae: return "mae";
    case LossKind::mape: return "mape";
    case LossKind::bce: return "bce";
    case LossKind::cosine: return "cosine";
    }
    return "unknown";
}

namespace {

constexpr std::array<Activation, kOutputActivationOptions> kOutputActivations = {
    Activation::linear, Activation::relu, Activation::elu, Activation::softplus};

} // namespace

Activation output_activation_from_gene(int value) {
    if (value < 1 || value > kOutputActivationOptions) {
        throw DecodeError("output activation gene out of range: " + std::to_string(value));
    }
    return kOutputActivations[static_cast<std::size_t>(value - 1)];
}

int output_activation_to_gene(Activation a) {
    auto it = std::find(kOutputActivations.begin(), kOutputActivations.end(), a);
    if (it == kOutputActivations.end()) {
        throw DecodeError("activation not allowed on the output layer: " + std::string(to_string(a)));
    }
    return static_cast<int>(it - kOutputActivations.begin()) + 1;
}

GeneBounds GeneBounds::for_features(int features) {
    if (features < 1) {
        throw InvalidDataset("feature count must be >= 1, got " + std::to_string(features));
    }
    GeneBounds b;
    b.features_ = features;
    b.ranges_[gene::kType] = {1, kVariantOptions};
    b.ranges_[gene::kLayers] = {0, gene::kMaxHiddenPairs};
    for (std::size_t i = gene::kUnitsFirst; i <= gene::kCodingUnits; ++i) {
        b.ranges_[i] = {1, features};
    }
    for (std::size_t i = gene::kEncoderActFirst; i < gene::kOutputAct; ++i) {
        b.ranges_[i] = {1, kActivationOptions};
    }
    b.ranges_[gene::kOutputAct] = {1, kOutputActivationOptions};
    b.ranges_[gene::kLoss] = {1, kLossOptions};
    return b;
}

GeneBounds GeneBounds::pinned(std::size_t i, int v) const {
    return restricted(i, {v, v});
}

GeneBounds GeneBounds::restricted(std::size_t i, GeneRange r) const {
    const GeneRange& cur = ranges_.at(i);
    if (r.lo > r.hi || r.lo < cur.lo || r.hi > cur.hi) {
        throw ConfigError("restriction of gene " + std::to_string(i + 1) + " outside its bounds");
    }
    GeneBounds out = *this;
    out.ranges_[i] = r;
    return out;
}

bool GeneBounds::contains(const Chromosome& c) const {
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (!ranges_[i].contains(c[i])) {
            return false;
        }
    }
    return true;
}

GeneBounds default_bounds(int features) {
    return GeneBounds::for_features(features);
}

Chromosome Chromosome::parse(std::string_view text, const GeneBounds& bounds) {
    std::array<int, kGeneCount> genes{};
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view field = text.substr(pos, end - pos);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        if (count == kGeneCount) {
            throw ConfigError("chromosome has more than 15 genes: \"" + std::string(text) + "\"");
        }
        int value = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
            throw ConfigError("chromosome gene " + std::to_string(count + 1) + " is not an integer: \"" +
                              std::string(field) + "\"");
        }
        genes[count++] = value;
        pos = end + 1;
    }
    if (count != kGeneCount) {
        throw ConfigError("chromosome needs 15 genes, got " + std::to_string(count));
    }
    Chromosome c(genes);
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (!bounds[i].contains(c[i])) {
            throw ConfigError("gene " + std::to_string(i + 1) + " = " + std::to_string(c[i]) + " outside [" +
                              std::to_string(bounds[i].lo) + ", " + std::to_string(bounds[i].hi) + "]");
        }
    }
    return c;
}

std::string Chromosome::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (i != 0) out += ',';
        out += std::to_string(genes_[i]);
    }
    return out;
}

std::size_t ChromosomeHash::operator()(const Chromosome& c) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int g : c.genes()) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(g));
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
}

std::vector<int> ArchitectureSpec::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(feature_count);
    sizes.insert(sizes.end(), encoder_hidden_units.begin(), encoder_hidden_units.end());
    sizes.push_back(coding_units);
    sizes.insert(sizes.end(), encoder_hidden_units.rbegin(), encoder_hidden_units.rend());
    sizes.push_back(feature_count);
    return sizes;
}

std::string ArchitectureSpec::describe_layers() const {
    std::vector<int> sizes = layer_sizes();
    std::ostringstream os;
    for (std::size_t i = 1; i + 1 < sizes.size(); ++i) {
        if (i != 1) os << ", ";
        os << sizes[i];
    }
    return os.str();
}

Chromosome random_chromosome(const GeneBounds& bounds, Rng& rng) {
    std::array<int, kGeneCount> genes{};
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        std::uniform_int_distribution<int> dist(bounds[i].lo, bounds[i].hi);
        genes[i] = dist(rng);
    }
    return Chromosome(genes);
}

Chromosome random_chromosome(int features, Rng& rng) {
    return random_chromosome(GeneBounds::for_features(features), rng);
}

bool is_valid(const Chromosome& c) {
    const int layers = c.layers();
    int previous = c[gene::kUnitsFirst];
    for (int k = 1; k < layers; ++k) {
        int u = c[gene::kUnitsFirst + static_cast<std::size_t>(k)];
        if (u > previous) return false;
        previous = u;
    }
    return layers == 0 || c.coding_units() <= previous;
}

ArchitectureSpec decode(const Chromosome& c, int features) {
    if (!is_valid(c)) {
        throw DecodeError("structurally invalid chromosome: " + c.to_string());
    }
    if (c[gene::kUnitsFirst] > features || c.coding_units() > features) {
        throw DecodeError("unit gene exceeds feature count " + std::to_string(features));
    }
    const int type = c[gene::kType];
    const int layers = c.layers();
    if (type < 1 || type > kVariantOptions || layers < 0 || layers > gene::kMaxHiddenPairs) {
        throw DecodeError("chromosome outside gene bounds: " + c.to_string());
    }
    auto activation = [&](std::size_t pos) {
        int v = c[pos];
        if (v < 1 || v > kActivationOptions) {
            throw DecodeError("activation gene " + std::to_string(pos + 1) + " out of range");
        }
        return static_cast<Activation>(v);
    };

    ArchitectureSpec spec;
    spec.variant = static_cast<AeVariant>(type);
    spec.feature_count = features;
    for (int k = 0; k < layers; ++k) {
        std::size_t ks = static_cast<std::size_t>(k);
        spec.encoder_hidden_units.push_back(c[gene::kUnitsFirst + ks]);
        spec.encoder_activations.push_back(activation(gene::kEncoderActFirst + ks));
        spec.decoder_activations.push_back(activation(gene::kDecoderActFirst + ks));
    }
    spec.coding_units = c.coding_units();
    spec.coding_activation = activation(gene::kCodingAct);
    spec.output_activation = output_activation_from_gene(c[gene::kOutputAct]);
    int loss = c[gene::kLoss];
    if (loss < 1 || loss > kLossOptions) {
        throw DecodeError("loss gene out of range: " + std::to_string(loss));
    }
    spec.loss = static_cast<LossKind>(loss);
    return spec;
}

Chromosome encode(const ArchitectureSpec& spec) {
    std::array<int, kGeneCount> genes{};
    genes.fill(1);
    genes[gene::kType] = static_cast<int>(spec.variant);
    genes[gene::kLayers] = spec.hidden_pairs();
    for (std::size_t k = 0; k < spec.encoder_hidden_units.size(); ++k) {
        genes[gene::kUnitsFirst + k] = spec.encoder_hidden_units[k];
        genes[gene::kEncoderActFirst + k] = static_cast<int>(spec.encoder_activations.at(k));
        genes[gene::kDecoderActFirst + k] = static_cast<int>(spec.decoder_activations.at(k));
    }
    genes[gene::kCodingUnits] = spec.coding_units;
    genes[gene::kCodingAct] = static_cast<int>(spec.coding_activation);
    genes[gene::kOutputAct] = output_activation_to_gene(spec.output_activation);
    genes[gene::kLoss] = static_cast<int>(spec.loss);
    return Chromosome(genes);
}

std::vector<std::size_t> used_gene_positions(const Chromosome& c) {
    const auto layers = static_cast<std::size_t>(c.layers());
    std::vector<std::size_t> used = {gene::kType, gene::kLayers};
    for (std::size_t k = 0; k < layers; ++k) used.push_back(gene::kUnitsFirst + k);
    used.push_back(gene::kCodingUnits);
    for (std::size_t k = 0; k < layers; ++k) used.push_back(gene::kEncoderActFirst + k);
    used.push_back(gene::kCodingAct);
    for (std::size_t k = 0; k < layers; ++k) used.push_back(gene::kDecoderActFirst + k);
    used.push_back(gene::kOutputAct);
    used.push_back(gene::kLoss);
    return used;
}

Chromosome mutate(const Chromosome& c, double probability, const GeneBounds& bounds, Rng& rng) {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw ConfigError("mutation probability must lie in [0, 1]");
    }
    Chromosome out = c;
    std::bernoulli_distribution flip(probability);
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (!flip(rng)) continue;
        const GeneRange& r = bounds[i];
        if (r.options() < 2) continue;
        // Draw from the range with the current value removed.
        std::uniform_int_distribution<int> dist(r.lo, r.hi - 1);
        int v = dist(rng);
        if (v >= out[i]) ++v;
        out[i] = v;
    }
    return out;
}

namespace {

// Index of the first gene of each of the six segments, plus the end sentinel.
constexpr std::array<std::size_t, kCrossoverCuts + 2> kSegmentStarts = {0, 1, 2, 6, 13, 14, 15};

} // namespace

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, const CutMask& cuts) {
    Chromosome first = a;
    Chromosome second = b;
    bool swapped = false;
    for (std::size_t s = 0; s + 1 < kSegmentStarts.size(); ++s) {
        if (s > 0 && cuts[s - 1]) swapped = !swapped;
        if (!swapped) continue;
        for (std::size_t i = kSegmentStarts[s]; i < kSegmentStarts[s + 1]; ++i) {
            first[i] = b[i];
            second[i] = a[i];
        }
    }
    return {first, second};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
    std::bernoulli_distribution coin(0.5);
    CutMask cuts{};
    for (bool& cut : cuts) cut = coin(rng);
    return crossover(a, b, cuts);
}

UnitVector to_unit_vector(const Chromosome& c, const GeneBounds& bounds) {
    UnitVector v{};
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        const GeneRange& r = bounds[i];
        v[i] = r.hi == r.lo ? 0.0 : static_cast<double>(c[i] - r.lo) / static_cast<double>(r.hi - r.lo);
    }
    return v;
}

Chromosome from_unit_vector(const UnitVector& v, const GeneBounds& bounds) {
    std::array<int, kGeneCount> genes{};
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        const GeneRange& r = bounds[i];
        double x = std::isnan(v[i]) ? 0.0 : std::clamp(v[i], 0.0, 1.0);
        long g = std::lround(static_cast<double>(r.lo) + x * static_cast<double>(r.hi - r.lo));
        genes[i] = static_cast<int>(std::clamp<long>(g, r.lo, r.hi));
    }
    return Chromosome(genes);
}

std::uint64_t architecture_free_combinations(const GeneBounds& bounds) {
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (i >= gene::kUnitsFirst && i <= gene::kCodingUnits) continue;
        total *= static_cast<std::uint64_t>(bounds[i].options());
    }
    return total;
}

std::uint64_t architecture_free_combinations() {
    return architecture_free_combinations(GeneBounds::for_features(1));
}

std::uint64_t count_valid_unit_assignments(int features, int layers) {
    if (features < 1 || layers < 0 || layers > gene::kMaxHiddenPairs) {
        throw ConfigError("count_valid_unit_assignments needs features >= 1 and 0 <= layers <= 3");
    }
    // C(n, k) built incrementally; every partial product is itself a binomial coefficient.
    const auto n = static_cast<std::uint64_t>(features + layers);
    const auto k = static_cast<std::uint64_t>(layers + 1);
    unsigned __int128 result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return static_cast<std::uint64_t>(result);
}

} // namespace evoaaa
