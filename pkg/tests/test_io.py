import json

import numpy as np
import pytest

from gpgm import io
from gpgm.ensemble import random_ensemble
from gpgm.errors import EnsembleValidationError, InputError, PreconditionError
from gpgm.pgm import build_gpgm
from gpgm.score import ScoreFunction


def test_matrix_roundtrip():
    a = np.array([[1.0, 0.5 - 0.25j], [0.5 + 0.25j, 0.0]])
    np.testing.assert_array_equal(io.decode_matrix(io.encode_matrix(a), "m"), a)


def test_real_matrix_accepted():
    np.testing.assert_array_equal(io.decode_matrix([[1, 0], [0, 0]], "m"), np.diag([1, 0]))


def test_bad_matrix():
    with pytest.raises(InputError, match="square"):
        io.decode_matrix([[1, 0, 0], [0, 1, 0]], "m")


def test_ensemble_roundtrip(tmp_path):
    e = random_ensemble(3, 4, 2, seed=1, label="rt")
    path = tmp_path / "e.json"
    path.write_text(json.dumps(io.ensemble_to_dict(e)))
    f = io.load_ensemble(path)
    np.testing.assert_allclose(f.states, e.states, atol=1e-15)
    np.testing.assert_array_equal(f.points, e.points)
    assert f.label == "rt"


def test_povm_roundtrip(tmp_path):
    p = build_gpgm(random_ensemble(2, 3, 1, seed=0))
    path = tmp_path / "p.json"
    path.write_text(json.dumps(io.povm_to_dict(p)))
    q = io.load_povm(path)
    np.testing.assert_allclose(q.elements, p.elements, atol=1e-15)
    assert q.cells == p.cells


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "weights": [0.5, 0.5,\n}')
    with pytest.raises(InputError, match="line 3 column 1"):
        io.load_ensemble(path)


def test_missing_field(tmp_path):
    path = tmp_path / "e.json"
    path.write_text(json.dumps({"weights": [1.0]}))
    with pytest.raises(InputError, match="'states'"):
        io.load_ensemble(path)


def test_corrupted_fixture(fixtures_dir):
    with pytest.raises(EnsembleValidationError, match="weights sum to 1"):
        io.load_ensemble(fixtures_dir / "corrupted_weights.json")


def test_bosonic_fixture(fixtures_dir):
    e = io.load_ensemble(fixtures_dir / "bosonic.json")
    assert e.dim == 30 and e.r == 5 and e.param_dim == 2


def test_generators():
    e = io.ensemble_from_dict({"generator": "random", "d": 3, "r": 2, "N": 1}, seed=4)
    assert e.dim == 3 and e.r == 2
    g = io.ensemble_from_dict({"generator": "gaussian_grid", "N": 1, "sigma_prior": 1.0,
                               "grid_half_width": 1.0, "points_per_axis": 3,
                               "family": {"kind": "bosonic", "fock_cutoff": 15,
                                          "base": {"kind": "thermal", "nbar": 0.2}}})
    assert g.r == 3 and g.dim == 15
    with pytest.raises(InputError, match="unknown generator"):
        io.ensemble_from_dict({"generator": "nope"})


def test_score_stanzas():
    assert isinstance(io.score_from_stanza({"kind": "delta"}, 1), ScoreFunction)
    s = io.score_from_stanza({"kind": "gaussian", "Sigma": 2.0}, 2)
    assert s.eval([0.0, 0.0], [2.0, 0.0]) == pytest.approx(np.exp(-1.0))
    assert io.score_from_stanza({"kind": "constant", "a": 0.3}, 1).eval([0.0], [5.0]) == 0.3
    with pytest.raises(InputError):
        io.score_from_stanza({"kind": "weird"}, 1)
    with pytest.raises(PreconditionError):
        io.score_from_stanza({"kind": "constant", "a": 2.0}, 1)
