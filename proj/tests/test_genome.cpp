#include "evoaaa/errors.hpp"
#include "evoaaa/genome.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

using namespace evoaaa;

namespace {

Chromosome genes(std::array<int, kGeneCount> g) { return Chromosome(g); }

// Counts non-increasing tuples of the given length over [1, f] by plain recursion.
std::uint64_t brute_force_tuples(int f, int length, int upper) {
    if (length == 0) return 1;
    std::uint64_t n = 0;
    for (int v = 1; v <= upper; ++v) n += brute_force_tuples(f, length - 1, v);
    return n;
}

} // namespace

TEST_CASE("gene bounds follow the feature count") {
    GeneBounds b = GeneBounds::for_features(9);
    CHECK(b[0] == GeneRange{1, 6});
    CHECK(b[1] == GeneRange{0, 3});
    for (std::size_t i = 2; i <= 5; ++i) CHECK(b[i] == GeneRange{1, 9});
    for (std::size_t i = 6; i <= 12; ++i) CHECK(b[i] == GeneRange{1, 8});
    CHECK(b[13] == GeneRange{1, 4});
    CHECK(b[14] == GeneRange{1, 5});
    CHECK_THROWS_AS(GeneBounds::for_features(0), InvalidDataset);
}

TEST_CASE("random chromosomes stay in bounds and are reproducible") {
    Rng rng(3);
    const GeneBounds b = GeneBounds::for_features(9);
    for (int i = 0; i < 1000; ++i) CHECK(b.contains(random_chromosome(9, rng)));

    Rng one(1);
    Chromosome c = random_chromosome(1, one);
    for (std::size_t i = 2; i <= 5; ++i) CHECK(c[i] == 1);

    Rng a(7), bb(7);
    CHECK(random_chromosome(60, a) == random_chromosome(60, bb));
    CHECK_THROWS_AS(random_chromosome(0, a), InvalidDataset);
}

TEST_CASE("validity compares only the used unit genes") {
    // Layers=2 uses genes 3, 4 and the coding gene 6; gene 5 (99) is dormant.
    CHECK(is_valid(genes({1, 2, 30, 20, 99, 10, 1, 1, 1, 1, 1, 1, 1, 1, 1})));
    CHECK_FALSE(is_valid(genes({1, 1, 5, 1, 1, 8, 1, 1, 1, 1, 1, 1, 1, 1, 1})));
    for (int k = 1; k <= 12; ++k) CHECK(is_valid(genes({1, 0, 3, 9, 2, k, 1, 1, 1, 1, 1, 1, 1, 1, 1})));
    CHECK_FALSE(is_valid(genes({1, 3, 10, 11, 5, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1})));
}

TEST_CASE("validity ignores unused unit and activation genes") {
    Rng rng(11);
    const GeneBounds b = GeneBounds::for_features(12);
    for (int t = 0; t < 2000; ++t) {
        Chromosome c = random_chromosome(b, rng);
        const bool before = is_valid(c);
        const std::vector<std::size_t> used = used_gene_positions(c);
        Chromosome d = random_chromosome(b, rng);
        for (std::size_t p : used) d[p] = c[p];
        CHECK(is_valid(d) == before);
    }
}

TEST_CASE("decode reproduces the reported architectures") {
    ArchitectureSpec s = decode(genes({5, 3, 37, 32, 16, 8, 2, 2, 4, 3, 4, 2, 2, 1, 1}), 60);
    CHECK(s.variant == AeVariant::sparse);
    CHECK(s.describe_layers() == "37, 32, 16, 8, 16, 32, 37");
    CHECK(s.layer_sizes() == std::vector<int>{60, 37, 32, 16, 8, 16, 32, 37, 60});
    CHECK(s.layer_count() == 9);
    CHECK(s.encoder_activations == std::vector<Activation>{Activation::sigmoid, Activation::sigmoid, Activation::relu});
    CHECK(s.coding_activation == Activation::tanh);
    CHECK(s.decoder_activations == std::vector<Activation>{Activation::relu, Activation::sigmoid, Activation::sigmoid});

    ArchitectureSpec two = decode(genes({1, 2, 37, 32, 1, 8, 1, 1, 1, 1, 1, 1, 1, 1, 1}), 60);
    CHECK(two.describe_layers() == "37, 32, 8, 32, 37");
    CHECK(two.layer_count() == 7);

    ArchitectureSpec coding_only = decode(genes({1, 0, 5, 5, 5, 1, 1, 1, 1, 3, 1, 1, 1, 2, 4}), 9);
    CHECK(coding_only.layer_count() == 3);
    CHECK(coding_only.coding_units == 1);
    CHECK(coding_only.coding_activation == Activation::tanh);
    CHECK(coding_only.output_activation == Activation::relu);
    CHECK(coding_only.loss == LossKind::bce);

    ArchitectureSpec one = decode(genes({1, 1, 23, 4, 4, 2, 6, 1, 1, 2, 7, 1, 1, 4, 1}), 60);
    CHECK(one.describe_layers() == "23, 2, 23");
    CHECK(one.encoder_activations == std::vector<Activation>{Activation::elu});
    CHECK(one.decoder_activations == std::vector<Activation>{Activation::softplus});
    CHECK(one.output_activation == Activation::softplus);

    CHECK_THROWS_AS(decode(genes({1, 1, 5, 1, 1, 8, 1, 1, 1, 1, 1, 1, 1, 1, 1}), 9), DecodeError);
}

TEST_CASE("decoder layers mirror the encoder") {
    Rng rng(5);
    const GeneBounds b = GeneBounds::for_features(20);
    for (int t = 0; t < 500; ++t) {
        Chromosome c = random_chromosome(b, rng);
        if (!is_valid(c)) continue;
        std::vector<int> sizes = decode(c, 20).layer_sizes();
        for (std::size_t i = 0; i < sizes.size(); ++i) CHECK(sizes[i] == sizes[sizes.size() - 1 - i]);
        CHECK(std::is_sorted(sizes.begin() + static_cast<long>(sizes.size() / 2), sizes.end()));
    }
}

TEST_CASE("encode restores every used gene") {
    Rng rng(17);
    const GeneBounds b = GeneBounds::for_features(15);
    int checked = 0;
    while (checked < 2000) {
        Chromosome c = random_chromosome(b, rng);
        if (!is_valid(c)) continue;
        ++checked;
        Chromosome back = encode(decode(c, 15));
        for (std::size_t p : used_gene_positions(c)) CHECK(back[p] == c[p]);
        CHECK(decode(back, 15).describe_layers() == decode(c, 15).describe_layers());
    }
}

TEST_CASE("chromosome text round-trips and is bounds-checked") {
    const GeneBounds b = GeneBounds::for_features(60);
    Chromosome c = Chromosome::parse("5,3,37,32,1,8,2,2,4,3,4,2,2,1,1", b);
    CHECK(c.to_string() == "5,3,37,32,1,8,2,2,4,3,4,2,2,1,1");
    CHECK(Chromosome::parse(" 5, 3,37,32,1,8,2,2,4,3,4,2,2,1,1 ", b) == c);
    CHECK_THROWS_AS(Chromosome::parse("5,3,37", b), ConfigError);
    CHECK_THROWS_AS(Chromosome::parse("7,3,37,32,1,8,2,2,4,3,4,2,2,1,1", b), ConfigError);
    CHECK_THROWS_AS(Chromosome::parse("5,3,x,32,1,8,2,2,4,3,4,2,2,1,1", b), ConfigError);
    CHECK_THROWS_AS(Chromosome::parse("5,3,37,32,1,8,2,2,4,3,4,2,2,1,1,1", b), ConfigError);
}

TEST_CASE("mutation") {
    const GeneBounds b = GeneBounds::for_features(9);
    Rng rng(23);
    const Chromosome c = random_chromosome(b, rng);

    SUBCASE("p = 0 is the identity") {
        for (int i = 0; i < 100; ++i) CHECK(mutate(c, 0.0, b, rng) == c);
    }
    SUBCASE("p = 1 changes every gene") {
        for (int t = 0; t < 200; ++t) {
            Chromosome m = mutate(c, 1.0, b, rng);
            for (std::size_t i = 0; i < kGeneCount; ++i) CHECK(m[i] != c[i]);
            CHECK(b.contains(m));
        }
    }
    SUBCASE("pinned genes never move") {
        GeneBounds pinned = b.pinned(0, 4);
        Chromosome p = c;
        p[0] = 4;
        for (int t = 0; t < 200; ++t) CHECK(mutate(p, 1.0, pinned, rng)[0] == 4);
    }
    SUBCASE("mean mutated-gene count at p = 1/15 is one") {
        // Binomial(15, 1/15): mean 1, variance 15 p (1 - p).
        constexpr int trials = 100000;
        const double p = 1.0 / 15.0;
        double total = 0.0;
        for (int t = 0; t < trials; ++t) {
            Chromosome m = mutate(c, p, b, rng);
            for (std::size_t i = 0; i < kGeneCount; ++i) total += m[i] != c[i];
        }
        const double mean = total / trials;
        const double sigma = std::sqrt(15.0 * p * (1.0 - p) / trials);
        CHECK(std::abs(mean - 1.0) < 3.0 * sigma);
    }
}

TEST_CASE("crossover") {
    const Chromosome a = genes({1, 2, 3, 4, 5, 6, 7, 8, 1, 2, 3, 4, 5, 1, 1});
    const Chromosome b = genes({6, 3, 9, 8, 7, 5, 1, 2, 3, 4, 5, 6, 7, 4, 5});

    SUBCASE("no active cut returns the parents") {
        auto [c1, c2] = crossover(a, b, CutMask{});
        CHECK(c1 == a);
        CHECK(c2 == b);
    }
    SUBCASE("all cuts alternate the five segments") {
        auto [c1, c2] = crossover(a, b, CutMask{true, true, true, true, true});
        CHECK(c1 == genes({1, 3, 3, 4, 5, 6, 1, 2, 3, 4, 5, 6, 7, 1, 5}));
        CHECK(c2 == genes({6, 2, 9, 8, 7, 5, 7, 8, 1, 2, 3, 4, 5, 4, 1}));
    }
    SUBCASE("single cut after the unit group") {
        auto [c1, c2] = crossover(a, b, CutMask{false, false, true, false, false});
        CHECK(c1 == genes({1, 2, 3, 4, 5, 6, 1, 2, 3, 4, 5, 6, 7, 4, 5}));
        CHECK(c2 == genes({6, 3, 9, 8, 7, 5, 7, 8, 1, 2, 3, 4, 5, 1, 1}));
    }
    SUBCASE("every cut pattern conserves each position") {
        for (int mask = 0; mask < 32; ++mask) {
            CutMask m{};
            for (std::size_t k = 0; k < kCrossoverCuts; ++k) m[k] = (mask >> k) & 1;
            auto [c1, c2] = crossover(a, b, m);
            for (std::size_t i = 0; i < kGeneCount; ++i) {
                CHECK(std::multiset<int>{c1[i], c2[i]} == std::multiset<int>{a[i], b[i]});
            }
        }
    }
    SUBCASE("segments never split") {
        Rng rng(29);
        const std::vector<std::pair<std::size_t, std::size_t>> segments = {{0, 0}, {1, 1}, {2, 5}, {6, 12}, {13, 13}, {14, 14}};
        for (int t = 0; t < 1000; ++t) {
            auto [c1, c2] = crossover(a, b, rng);
            for (auto [lo, hi] : segments) {
                const bool from_a = c1[lo] == a[lo];
                for (std::size_t i = lo; i <= hi; ++i) {
                    if (a[i] != b[i]) CHECK((c1[i] == a[i]) == from_a);
                }
            }
        }
    }
}

TEST_CASE("unit-vector mapping") {
    const GeneBounds b = GeneBounds::for_features(9);
    Chromosome lo = genes({1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
    Chromosome hi = genes({6, 3, 9, 9, 9, 9, 8, 8, 8, 8, 8, 8, 8, 4, 5});
    CHECK(to_unit_vector(lo, b)[0] == 0.0);
    CHECK(to_unit_vector(hi, b)[0] == 1.0);

    UnitVector v{};
    v.fill(2.7);
    CHECK(from_unit_vector(v, b) == hi);
    v.fill(-4.0);
    CHECK(from_unit_vector(v, b) == lo);

    // A degenerate range maps to zero.
    const GeneBounds one = GeneBounds::for_features(1);
    CHECK(to_unit_vector(genes({1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}), one)[2] == 0.0);

    Rng rng(31);
    for (int t = 0; t < 10000; ++t) {
        Chromosome c = random_chromosome(b, rng);
        CHECK(from_unit_vector(to_unit_vector(c, b), b) == c);
    }
}

TEST_CASE("search-space size") {
    CHECK(architecture_free_combinations() == 6ULL * 4 * 8 * 8 * 8 * 8 * 8 * 8 * 8 * 4 * 5);
    CHECK(architecture_free_combinations() == 1006632960ULL);

    GeneBounds b = GeneBounds::for_features(9);
    for (std::size_t i = 6; i <= 12; ++i) b = b.pinned(i, 1);
    CHECK(architecture_free_combinations(b) == 480);
    for (std::size_t i : {0, 1, 13, 14}) b = b.pinned(i, b[i].lo);
    CHECK(architecture_free_combinations(b) == 1);
}

TEST_CASE("valid unit assignments match brute force") {
    CHECK(count_valid_unit_assignments(9, 3) == 495);
    for (int f = 1; f <= 12; ++f) {
        CHECK(count_valid_unit_assignments(f, 0) == static_cast<std::uint64_t>(f));
        for (int layers = 0; layers <= 3; ++layers) {
            CHECK(count_valid_unit_assignments(f, layers) == brute_force_tuples(f, layers + 1, f));
        }
    }
    for (int layers = 0; layers <= 3; ++layers) CHECK(count_valid_unit_assignments(1, layers) == 1);

    // Counting through is_valid on whole chromosomes gives the same numbers.
    for (int f = 1; f <= 6; ++f) {
        for (int layers = 0; layers <= 3; ++layers) {
            std::uint64_t n = 0;
            std::array<int, kGeneCount> g{};
            g.fill(1);
            g[gene::kLayers] = layers;
            std::function<void(std::size_t)> rec = [&](std::size_t pos) {
                if (pos > gene::kCodingUnits) {
                    n += is_valid(Chromosome(g));
                    return;
                }
                const bool used = pos == gene::kCodingUnits || pos < gene::kUnitsFirst + static_cast<std::size_t>(layers);
                for (int v = 1; v <= (used ? f : 1); ++v) {
                    g[pos] = v;
                    rec(pos + 1);
                }
            };
            rec(gene::kUnitsFirst);
            CHECK(n == count_valid_unit_assignments(f, layers));
        }
    }
}

TEST_CASE("operators preserve bounds under heavy use") {
    Rng rng(37);
    std::uniform_int_distribution<int> feature(1, 64);
    std::uniform_real_distribution<double> wide(-1.0, 2.0);
    for (int t = 0; t < 20000; ++t) {
        const int f = feature(rng);
        const GeneBounds b = GeneBounds::for_features(f);
        Chromosome a = random_chromosome(b, rng), c = random_chromosome(b, rng);
        CHECK(b.contains(mutate(a, 0.3, b, rng)));
        auto [x, y] = crossover(a, c, rng);
        CHECK(b.contains(x));
        CHECK(b.contains(y));
        UnitVector v{};
        for (double& e : v) e = wide(rng);
        CHECK(b.contains(from_unit_vector(v, b)));
    }
}
