"""
Tests for reading and writing triple specs, terms, field configs and atlases.
"""
import json

import numpy as np
import pytest

from acmcli.core import LatticeSpec, SpecParseError, verify_axioms
from acmcli.core.serialization import (
    SCHEMA_VERSION,
    atlas_from_dict,
    atlas_to_dict,
    decode_matrix,
    dumps,
    encode_matrix,
    field_config_from_dict,
    field_config_to_dict,
    load_atlas,
    load_field_config,
    load_terms,
    load_triple,
    locate_field,
    triple_from_dict,
    triple_to_dict,
)
from acmcli.core.cech import CechAtlas
from acmcli.core.lagrangian import FieldConfig
from tests.test_utils import ed_data, ed_dirac, ed_triple, triple_spec, write_json


@pytest.mark.unit
def test_emitted_matrix_reparses_exactly():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    text = json.dumps(encode_matrix(m))
    assert np.array_equal(decode_matrix(json.loads(text), "<memory>", "m"), m)


@pytest.mark.unit
@pytest.mark.parametrize(
    "obj, fragment",
    [
        ([[1, 2], [3, 4]], "[re, im]"),
        ([[[1, 0], [0, 0]]], "not square"),
        ("text", "expected"),
        ([[[1, 0]], [[0, 0], [1, 1]]], "expected"),
    ],
)
def test_decode_matrix_errors(obj, fragment):
    with pytest.raises(SpecParseError) as info:
        decode_matrix(obj, "in.json", "dirac")
    assert "in.json: dirac:" in str(info.value)
    assert fragment in str(info.value)


@pytest.mark.unit
def test_load_triple_roundtrip(tmp_path):
    t = ed_triple()
    path = write_json(tmp_path / "ed.json", triple_to_dict(t))
    loaded = load_triple(path)
    assert loaded.data == t.data
    assert np.array_equal(loaded.dirac, t.dirac)
    assert verify_axioms(loaded).passed


@pytest.mark.unit
def test_syntax_error_carries_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "dims": [1, 1],\n  "pairs": [[1, 2],\n}\n', encoding="utf-8")
    with pytest.raises(SpecParseError) as info:
        load_triple(path)
    assert info.value.line is not None and info.value.line >= 3
    assert str(info.value).startswith(f"{path}:{info.value.line}:")


@pytest.mark.unit
def test_missing_file(tmp_path):
    with pytest.raises(SpecParseError) as info:
        load_triple(tmp_path / "nope.json")
    assert "file not found" in str(info.value)


@pytest.mark.unit
def test_field_error_carries_line(tmp_path):
    doc = triple_spec(ed_data(), ed_dirac(0.5))
    doc["ko"] = 9
    path = write_json(tmp_path / "spec.json", doc)
    lines = path.read_text(encoding="utf-8").splitlines()
    ko_line = next(n for n, text in enumerate(lines, start=1) if text.strip().startswith('"ko"'))
    with pytest.raises(SpecParseError) as info:
        load_triple(path)
    assert info.value.field == "ko"
    assert info.value.line == ko_line
    assert str(info.value).startswith(f"{path}:{ko_line}: ko:")


@pytest.mark.unit
def test_locate_field_follows_nested_keys():
    text = '{\n  "s": 1,\n  "gravity": {\n    "euler": [],\n    "s": ["x"]\n  },\n  "triples": [[1, 2]]\n}'
    assert locate_field(text, "gravity.s") == 5
    assert locate_field(text, "s") == 2
    assert locate_field(text, "triples[0]") == 7
    assert locate_field(text, "missing") is None
    assert locate_field(text, "<file>") is None


@pytest.mark.unit
@pytest.mark.parametrize(
    "patch, field",
    [
        ({"dims": "2"}, "dims"),
        ({"pairs": [[1, 2, 3]]}, "pairs"),
        ({"ko": 9}, "ko"),
        ({"grading": [1, 1, 1, 1]}, "grading"),
        ({"pairs": [[1, 2], [2, 1], [2, 1]]}, "pairs"),
        ({"dirac": encode_matrix(np.eye(3))}, "dirac"),
    ],
)
def test_triple_field_errors(patch, field):
    doc = triple_spec(ed_data(), ed_dirac(0.5))
    doc.update(patch)
    with pytest.raises(SpecParseError) as info:
        triple_from_dict(doc, "spec.json")
    assert info.value.field == field


@pytest.mark.unit
def test_missing_required_field():
    doc = triple_spec(ed_data())
    del doc["ko"]
    with pytest.raises(SpecParseError) as info:
        triple_from_dict(doc)
    assert info.value.field == "ko"


@pytest.mark.unit
def test_load_terms(tmp_path):
    doc = {"terms": [{"a": {"blocks": [encode_matrix([[1]]), encode_matrix([[0]])]},
                      "b": {"blocks": [encode_matrix([[0.5j]]), encode_matrix([[2]])]}}]}
    terms = load_terms(write_json(tmp_path / "terms.json", doc), (1, 1))
    assert len(terms) == 1
    a, b = terms[0]
    assert np.allclose(a[0], 1) and np.allclose(b[0], 0.5j) and np.allclose(b[1], 2)

    doc["terms"][0]["b"]["blocks"] = doc["terms"][0]["b"]["blocks"][:1]
    with pytest.raises(SpecParseError) as info:
        load_terms(write_json(tmp_path / "bad.json", doc), (1, 1))
    assert info.value.field == "terms[0].b"


@pytest.mark.unit
def test_field_config_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    lattice = LatticeSpec((3, 4), spacing=0.25)
    phi = rng.standard_normal((3, 4, 2, 2)) + 1j * rng.standard_normal((3, 4, 2, 2))
    cfg = FieldConfig(lattice=lattice, dim_h=2, Phi=phi, s=rng.standard_normal((3, 4)))
    loaded = load_field_config(write_json(tmp_path / "fields.json", field_config_to_dict(cfg)))
    assert loaded.lattice == lattice
    assert np.array_equal(loaded.Phi, cfg.Phi)
    assert np.array_equal(loaded.s, cfg.s)
    assert not loaded.B.any()


@pytest.mark.unit
def test_field_config_errors():
    base = {"lattice": {"dims": [3, 3]}, "dim_h": 1}
    with pytest.raises(SpecParseError) as info:
        field_config_from_dict({"lattice": {"dims": [2, 3]}, "dim_h": 1})
    assert info.value.field == "lattice"
    with pytest.raises(SpecParseError) as info:
        field_config_from_dict({**base, "Phi": encode_matrix(np.zeros((4, 1, 1)))})
    assert info.value.field == "Phi"
    with pytest.raises(SpecParseError) as info:
        field_config_from_dict({**base, "gravity": {"s": [0.0] * 8}})
    assert info.value.field == "gravity.s"
    with pytest.raises(SpecParseError) as info:
        field_config_from_dict({**base, "dim_h": 0})
    assert info.value.field == "dim_h"


@pytest.mark.unit
def test_atlas_roundtrip(tmp_path):
    g = np.array([[0, 1j], [1j, 0]])
    atlas = CechAtlas(
        patches=(1, 2),
        overlaps={(1, 2): {"p": g}, (2, 1): {"p": g.conj().T}},
        triples=((1, 2, 1, ("p",)),),
        block_dims=(1, 1),
    )
    doc = atlas_to_dict(atlas)
    doc["target"] = atlas_to_dict(atlas)
    loaded, target = load_atlas(write_json(tmp_path / "atlas.json", doc))
    assert loaded.block_dims == (1, 1)
    assert loaded.triples == atlas.triples
    assert np.array_equal(loaded.element(1, 2, "p"), g)
    assert target is not None and set(target.overlaps) == {(1, 2), (2, 1)}


@pytest.mark.unit
def test_atlas_errors():
    with pytest.raises(SpecParseError) as info:
        atlas_from_dict({"patches": [1, 2], "overlaps": {"1-2": {}}})
    assert info.value.field == "overlaps"
    with pytest.raises(SpecParseError) as info:
        atlas_from_dict({"patches": [1, 2], "overlaps": {}, "triples": [[1, 2, 3]]})
    assert info.value.field == "triples[0]"


@pytest.mark.unit
def test_dumps_is_deterministic():
    payload = {"b": 1, "a": [1.5, 2]}
    text = dumps(payload, "check")
    assert text == dumps(dict(reversed(list(payload.items()))), "check")
    body = json.loads(text)
    assert body["schema_version"] == SCHEMA_VERSION
    assert body["command"] == "check"
