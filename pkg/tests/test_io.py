import json

import numpy as np
import pytest

from dgmeanfield.io import ModelFileError, load_model, model_from_dict, model_to_dict, save_model
from dgmeanfield.set_functions import (
    ConcaveOverModular,
    CutGraph,
    FlidModel,
    GibbsPolynomial,
    ModularFunction,
    SetCoverInstance,
    TableFunction,
    check_submodular,
)
from dgmeanfield.synth import SyntheticFlidSpec, synth_flid


def write(tmp_path, obj, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_minimal_flid_file(tmp_path):
    F = load_model(write(tmp_path, {"kind": "flid", "n": 2, "D": 1, "W": [[1], [2]], "u": [1, 2]}))
    assert isinstance(F, FlidModel)
    np.testing.assert_array_equal(F.u_prime, [0.0, 0.0])


def test_cut_file(tmp_path):
    F = load_model(write(tmp_path, {"kind": "cut", "directed": True, "n": 2, "edges": [[0, 1, 1.0]]}))
    assert isinstance(F, CutGraph) and F.edges == [(0, 1, 1.0)]
    np.testing.assert_array_equal(F.table(), [0.0, 1.0, 0.0, 0.0])


def test_negative_weight_is_named(tmp_path):
    p = write(tmp_path, {"kind": "flid", "n": 2, "D": 2, "W": [[1, 0.5], [2, -0.1]], "u": [1, 2]})
    with pytest.raises(ModelFileError, match=r"W\[1\]\[1\]"):
        load_model(p)


@pytest.mark.parametrize(
    "bad, match",
    [
        ({"kind": "flid", "n": 2, "D": 1, "W": [[1]], "u": [1, 2]}, "rows"),
        ({"kind": "flid", "n": 2, "D": 1, "W": [[1], [2, 3]], "u": [1, 2]}, "entries"),
        ({"kind": "flid", "n": 2, "D": 1, "W": [[1], [2]]}, "'u'"),
        ({"kind": "flid", "n": 2, "D": 1, "W": [[1], ["x"]], "u": [1, 2]}, "non-numeric"),
        ({"kind": "cut", "n": 2, "edges": [[0, 0, 1.0]]}, "self-loop"),
        ({"kind": "gibbs", "n": 2, "terms": [{"vars": [0, 1], "theta": 1.0}]}, "positive"),
        ({"kind": "modular", "n": 3, "weights": [1, 2]}, "does not match"),
        ({"kind": "table", "n": 1, "values": [0, 1, 2]}, "2\\*\\*n"),
        ({"kind": "dpp", "n": 1}, "unknown model kind"),
        ([1, 2], "JSON object"),
    ],
)
def test_invalid_files(tmp_path, bad, match):
    with pytest.raises(ModelFileError, match=match):
        load_model(write(tmp_path, bad))


def test_parse_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ModelFileError, match="invalid JSON"):
        load_model(p)


@pytest.mark.parametrize(
    "model",
    [
        FlidModel([[0.3, 0.1], [0.9, 0.4], [0.2, 0.7]], [0.5, -0.1, 1.0]),
        CutGraph(3, [(0, 1, 1.0), (2, 1, 0.5)], directed=True),
        CutGraph(3, [(0, 1, 1.0), (2, 1, 0.5)], directed=False),
        GibbsPolynomial(3, [((0,), 1.0), ((0, 2), -0.5), ((0, 1, 2), -0.25)]),
        SetCoverInstance(3, [(1.5, [0, 2]), (0.5, [1])]),
        ModularFunction([1.0, -2.0, 0.5]),
        TableFunction([0.0, 1.0, 0.5, 1.2, 0.3, 1.1, 0.7, 1.3]),
        ConcaveOverModular([1.0, 2.0], [[1.0, 2.0, 3.0], [0.0, 1.0, 1.0]], 0.5),
    ],
)
def test_round_trip(tmp_path, model):
    p = tmp_path / "model.json"
    save_model(model, p)
    again = load_model(p)
    assert type(again) is type(model)
    np.testing.assert_array_equal(again.table(), model.table())
    assert model_to_dict(again) == model_to_dict(model)


def test_model_to_dict_rejects_unknown():
    with pytest.raises(TypeError):
        model_to_dict(object())


def test_synth_flid_deterministic_and_shared_scale():
    spec = SyntheticFlidSpec(n=10, D=7, seed=3)
    a, b = synth_flid(spec), synth_flid(spec)
    np.testing.assert_array_equal(a.W, b.W)
    np.testing.assert_array_equal(a.u, b.u)
    assert np.all(a.W >= 0) and np.all(a.W < 1)
    r = a.u[0] / (0.1 * 7)
    assert 0 <= r < 1
    np.testing.assert_array_equal(a.u, np.full(10, a.u[0]))
    c = synth_flid(SyntheticFlidSpec(n=10, D=7, seed=4))
    assert not np.array_equal(a.W, c.W)


def test_synth_flid_per_coordinate_flag():
    F = synth_flid(SyntheticFlidSpec(n=6, D=3, seed=0, per_coordinate_u=True))
    assert len(set(F.u.tolist())) == 6
    with pytest.raises(ValueError):
        synth_flid(SyntheticFlidSpec(n=0, D=3))


@pytest.mark.parametrize("seed", range(3))
def test_synth_flid_is_submodular(seed):
    F = synth_flid(SyntheticFlidSpec(n=12, D=int(4 + seed), seed=seed))
    assert check_submodular(F, "exhaustive").submodular


def test_inline_model_dict():
    F = model_from_dict({"kind": "setcover", "n": 2, "concepts": [{"weight": 1.0, "items": [0, 1]}]})
    assert F({1}) == 1.0
