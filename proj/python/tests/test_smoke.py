import math

import numpy as np
import pytest

import evoaaa


def test_space_size():
    assert evoaaa.space_size() == 1006632960
    assert evoaaa.count_valid_unit_assignments(4, 3) == 35


def test_penalty_and_validity():
    assert evoaaa.penalty(1, 38, 1e-4) == pytest.approx(0.0038)
    assert evoaaa.is_valid([1, 2, 5, 3, 1, 2] + [1] * 9)
    assert not evoaaa.is_valid([1, 1, 2, 1, 1, 3] + [1] * 9)
    spec = evoaaa.decode([1, 2, 37, 32, 1, 8, 2, 2, 4, 3, 4, 2, 2, 1, 1], 40)
    assert spec["layers"] == "37, 32, 8, 32, 37"


def test_bundled_dataset():
    d = evoaaa.load_dataset("synthetic:glass")
    assert (d.rows, d.features) == (214, 9)
    assert d.train_rows + d.test_rows == 214
    assert d.values.shape == (214, 9)


def test_evaluate_linear_autoencoder():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (200, 4)) @ rng.uniform(-1, 1, (4, 4))
    d = evoaaa.dataset_from_array("linear", x)
    rec = evoaaa.evaluate(d, [1, 0, 1, 1, 1, 4] + [1] * 9, alpha=0.0, epochs=200)
    assert rec["valid"]
    assert rec["fitness"] == rec["train_mse"]
    assert rec["fitness"] < 1e-2


def test_search_is_deterministic_and_monotone():
    d = evoaaa.load_dataset("synthetic:spect")
    kwargs = dict(population_size=6, elitism_count=1, iterations=50, epochs=2, max_evaluations=12, seed=3)
    a = evoaaa.search(d, "ga", **kwargs)
    b = evoaaa.search(d, "ga", **kwargs)
    assert [r["fitness"] for r in a["trajectory"]] == [r["fitness"] for r in b["trajectory"]]
    fitness = [r["fitness"] if r["fitness"] is not None else math.inf for r in a["trajectory"]]
    assert a["fitness"] == min(fitness)
    assert a["evaluations"] == 12


def test_analytics():
    ranks, average = evoaaa.rank_methods([[1.0, 2.0, 2.0], [3.0, 1.0, 2.0]])
    assert ranks[0] == [1.0, 2.5, 2.5]
    assert average == pytest.approx([2.0, 1.75, 2.25])
    stat, p, df = evoaaa.friedman_test([[0.1, 0.5, 0.5, 0.5, 0.5]] * 9)
    assert df == 4
    assert stat == pytest.approx(18.0)
    assert p == pytest.approx(math.exp(-9) * 10)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        evoaaa.load_dataset("/no/such/file.csv")
    with pytest.raises(ValueError):
        evoaaa.default_config("anneal")
    with pytest.raises(TypeError):
        evoaaa.search(evoaaa.load_dataset("synthetic:glass"), "ga", colour="blue")
