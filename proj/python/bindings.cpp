// Thin bindings; structured results cross the boundary as JSON text.
#include "evoaaa/analytics.hpp"
#include "evoaaa/errors.hpp"
#include "evoaaa/experiment.hpp"
#include "evoaaa/serialization.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace evoaaa;

namespace {

Chromosome to_chromosome(const std::vector<int>& genes) {
    if (genes.size() != kGeneCount) throw ConfigError("a chromosome has exactly 15 genes");
    std::array<int, kGeneCount> g{};
    std::copy(genes.begin(), genes.end(), g.begin());
    return Chromosome(g);
}

Dataset load(const std::string& location, bool header, const std::string& drop_column, const std::string& normalize,
             double test_fraction, std::uint64_t seed) {
    DatasetSource src = DatasetSource::parse(location);
    src.load.has_header = header;
    if (!drop_column.empty()) src.load.drop_column = drop_column;
    if (normalize == "minmax") {
        src.load.normalize = Normalization::minmax;
    } else if (normalize != "none") {
        throw ConfigError("normalize must be none or minmax");
    }
    src.test_fraction = test_fraction;
    return prepare_dataset(src, seed);
}

Dataset from_array(const std::string& name, const Matrix& values, double test_fraction, std::uint64_t seed) {
    return split(dataset_from_matrix(name, values), test_fraction, seed);
}

std::string evaluate_one(const Dataset& d, const std::string& config_json, const std::vector<int>& genes) {
    const SearchConfig cfg = config_from_json(Json::parse(config_json));
    const Chromosome c = to_chromosome(genes);
    if (!GeneBounds::for_features(d.feature_count()).contains(c)) throw ConfigError("gene outside its bounds");
    EvaluationSettings s;
    s.alpha = cfg.alpha;
    s.train = cfg.train;
    s.master_seed = cfg.master_seed;
    s.memoize = false;
    s.strategy_tag = "python";
    Evaluator ev(d, s, Budget{cfg.budget.max_wall_clock, std::nullopt, cfg.budget.termination_cost});
    return record_to_json(ev.evaluate(c)).dump();
}

std::string search(const Dataset& d, const std::string& config_json) {
    const SearchConfig cfg = config_from_json(Json::parse(config_json));
    SearchResult r;
    {
        py::gil_scoped_release release;
        r = run_search(d, cfg);
    }
    Json out = best_to_json(r, d, cfg);
    Json trajectory = Json::array();
    for (const auto& rec : r.trajectory) trajectory.push_back(record_to_json(rec));
    out["trajectory"] = std::move(trajectory);
    return out.dump();
}

} // namespace

PYBIND11_MODULE(_evoaaa, m) {
    m.doc() = "Evolutionary autoencoder architecture search (compiled core)";

    // Translators run newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvalidDataset>(m, "InvalidDataset", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
    py::register_exception<IncompleteTable>(m, "IncompleteTable", PyExc_ValueError);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("name", [](const Dataset& d) { return d.name; })
        .def_property_readonly("rows", &Dataset::rows)
        .def_property_readonly("features", &Dataset::feature_count)
        .def_property_readonly("values", [](const Dataset& d) { return d.values; })
        .def_property_readonly("train_rows", [](const Dataset& d) { return d.train_indices.size(); })
        .def_property_readonly("test_rows", [](const Dataset& d) { return d.test_indices.size(); });

    m.def("load_dataset", &load, py::arg("location"), py::arg("header") = false, py::arg("drop_column") = "",
          py::arg("normalize") = "none", py::arg("test_fraction") = kDefaultTestFraction, py::arg("seed") = 1);
    m.def("dataset_from_array", &from_array, py::arg("name"), py::arg("values"),
          py::arg("test_fraction") = kDefaultTestFraction, py::arg("seed") = 1);

    m.def("default_config_json", [](const std::string& strategy) {
        std::optional<Strategy> s = parse_strategy(strategy);
        if (!s) throw ConfigError("unknown strategy \"" + strategy + "\"");
        return config_to_json(harness_defaults(*s)).dump();
    });
    m.def("evaluate_json", &evaluate_one, py::arg("dataset"), py::arg("config_json"), py::arg("genes"));
    m.def("search_json", &search, py::arg("dataset"), py::arg("config_json"));

    m.def("space_size", [] { return architecture_free_combinations(); });
    m.def("count_valid_unit_assignments", &count_valid_unit_assignments, py::arg("features"), py::arg("layers"));
    m.def("penalty", &penalty, py::arg("layers"), py::arg("coding_units"), py::arg("alpha"));
    m.def("is_valid", [](const std::vector<int>& g) { return is_valid(to_chromosome(g)); });
    m.def("decode_json", [](const std::vector<int>& g, int features) {
        return spec_to_json(decode(to_chromosome(g), features)).dump();
    });
    m.def("random_chromosome", [](int features, std::uint64_t seed) {
        Rng rng(seed);
        const auto& g = random_chromosome(features, rng).genes();
        return std::vector<int>(g.begin(), g.end());
    });

    m.def("rank_methods", [](const ScoreTable& t) {
        Ranking r = rank_methods(t);
        return py::make_tuple(r.ranks, r.average);
    });
    m.def("friedman_test", [](const ScoreTable& t) {
        FriedmanResult f = friedman_test(t);
        return py::make_tuple(f.statistic, f.p_value, f.degrees_of_freedom);
    });
}
