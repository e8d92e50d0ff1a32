"""
Tests for the acmcli command line: argument parsing, settings precedence, exit codes and output.
"""
import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from acmcli.__main__ import EXIT_FAIL, EXIT_OK, EXIT_USAGE, build_parser, main, resolve_settings, run
from acmcli.core import LatticeSpec, action_report, quotient_cocycle
from acmcli.core.lagrangian import Moments, ed_lagrangian, smooth_abelian_config
from acmcli.core.serialization import atlas_to_dict, element_to_obj, field_config_to_dict
from acmcli.core.cech import CechAtlas, join_blocks
from tests.test_utils import (
    ed_data,
    ed_dirac,
    ed_triple,
    moduli_rich_triple,
    random_hermitian,
    triple_spec,
    write_json,
    ym_data,
)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep ACMCLI_* settings from the developer's shell out of the tests."""
    for name in ("TOL", "FORMAT", "SEED", "F0", "F2", "F4", "LAMBDA", "LATTICE", "SPACING", "GAMMA_BASIS"):
        monkeypatch.delenv(f"ACMCLI_{name}", raising=False)


@pytest.fixture
def ed_spec(tmp_path):
    return write_json(tmp_path / "ed.json", triple_spec(ed_data(), ed_dirac(0.7 - 0.2j)))


def _json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.cli
@pytest.mark.unit
def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == EXIT_OK
    assert "dirac-moduli" in capsys.readouterr().out


@pytest.mark.cli
@pytest.mark.unit
def test_main_uses_sys_argv(capsys):
    with patch("sys.argv", ["acmcli", "--version"]):
        with pytest.raises(SystemExit) as info:
            main()
    assert info.value.code == EXIT_OK
    assert "acmcli" in capsys.readouterr().out


@pytest.mark.cli
@pytest.mark.unit
@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["check"], ["spectrum", "x.json", "--format", "yaml"]])
def test_usage_errors(argv):
    assert run(argv) == EXIT_USAGE


@pytest.mark.cli
@pytest.mark.unit
def test_settings_precedence():
    parser = build_parser()
    args = parser.parse_args(["check", "t.json"])
    assert resolve_settings(args, {}).tol == 1e-10
    assert resolve_settings(args, {"tol": "1e-6"}).tol == 1e-6
    args = parser.parse_args(["check", "t.json", "--tol", "1e-3"])
    settings = resolve_settings(args, {"tol": "1e-6", "f0": "2.5"})
    assert settings.tol == 1e-3
    assert settings.moments.f0 == 2.5


@pytest.mark.cli
@pytest.mark.unit
def test_environment_sets_format(ed_spec, monkeypatch, capsys):
    monkeypatch.setenv("ACMCLI_FORMAT", "json")
    assert run(["check", str(ed_spec)]) == EXIT_OK
    assert _json(capsys)["command"] == "check"
    assert run(["check", str(ed_spec), "--format", "text"]) == EXIT_OK
    out = capsys.readouterr().out
    with pytest.raises(json.JSONDecodeError):
        json.loads(out)
    assert "first_order" in out


@pytest.mark.cli
@pytest.mark.unit
@pytest.mark.parametrize("name, value", [("SEED", "abc"), ("TOL", "-1"), ("GAMMA_BASIS", "weyl"), ("FORMAT", "xml")])
def test_malformed_environment_is_usage_error(ed_spec, monkeypatch, capsys, name, value):
    monkeypatch.setenv(f"ACMCLI_{name}", value)
    assert run(["check", str(ed_spec)]) == EXIT_USAGE
    assert "❌" in capsys.readouterr().err


@pytest.mark.cli
@pytest.mark.integration
def test_check_json_report(ed_spec, capsys):
    assert run(["check", str(ed_spec), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    assert body["passed"] is True
    assert body["schema_version"] == "1.0"
    names = [c["name"] for c in body["reports"][0]["checks"]]
    assert "first_order" in names and "Jgamma" in names


@pytest.mark.cli
@pytest.mark.integration
def test_json_output_is_deterministic(ed_spec, capsys):
    run(["gauge-group", str(ed_spec), "--format", "json"])
    first = capsys.readouterr().out
    run(["gauge-group", str(ed_spec), "--format", "json"])
    assert capsys.readouterr().out == first


@pytest.mark.cli
@pytest.mark.integration
def test_check_failure_exit_code(tmp_path, capsys):
    bad = random_hermitian(4, np.random.default_rng(0))
    path = write_json(tmp_path / "bad.json", triple_spec(ed_data(), bad))
    assert run(["check", str(path), "--format", "json"]) == EXIT_FAIL
    assert _json(capsys)["passed"] is False


@pytest.mark.cli
@pytest.mark.integration
def test_check_with_covariance_samples(tmp_path, capsys):
    t = moduli_rich_triple(np.random.default_rng(1))
    path = write_json(tmp_path / "rich.json", triple_spec(t.data, t.dirac))
    assert run(["check", str(path), "--samples", "5", "--seed", "3", "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    assert body["reports"][1]["details"] == {"samples": 5, "seed": 3}


@pytest.mark.cli
@pytest.mark.unit
def test_corrupted_file_is_usage_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"dims": [1, 1], "pairs": ', encoding="utf-8")
    assert run(["check", str(path)]) == EXIT_USAGE
    assert str(path) in capsys.readouterr().err


@pytest.mark.cli
@pytest.mark.integration
def test_gauge_group_command(tmp_path, capsys):
    path = write_json(tmp_path / "ym.json", triple_spec(ym_data(2)))
    assert run(["gauge-group", str(path), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    assert body["gauge_lie_dim"] == 3
    assert body["tau_rank"] == 3
    assert len(body["aj_basis"]) == 1


@pytest.mark.cli
@pytest.mark.integration
def test_dirac_moduli_command(ed_spec, capsys):
    assert run(["dirac-moduli", str(ed_spec), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    assert body["real_dim"] == 2
    assert body["even"] is True
    assert len(body["basis"]) == 2
    assert run(["dirac-moduli", str(ed_spec), "--odd", "--format", "json"]) == EXIT_OK
    assert _json(capsys)["real_dim"] >= 2


@pytest.mark.cli
@pytest.mark.integration
def test_fluctuate_command(tmp_path, capsys):
    t = moduli_rich_triple(np.random.default_rng(2))
    spec = write_json(tmp_path / "rich.json", triple_spec(t.data, t.dirac))
    identity = element_to_obj([np.eye(n) for n in t.dims])
    terms = write_json(tmp_path / "terms.json", {"terms": [{"a": identity, "b": identity}]})
    assert run(["fluctuate", str(spec), str(terms), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    assert body["hermitian_residual"] == 0.0
    d_a = np.array(body["D_A"])
    assert np.allclose(d_a[..., 0] + 1j * d_a[..., 1], t.dirac)


@pytest.mark.cli
@pytest.mark.integration
def test_lagrangian_command(tmp_path, ed_spec, capsys):
    t = ed_triple()
    lattice = LatticeSpec((3, 4), spacing=0.5)
    cfg = smooth_abelian_config(
        t, lattice, [np.array([[1j]]), np.array([[0j]])], [None, lambda x0, x1: np.sin(x0)], phi=ed_dirac(0.5)
    )
    fields = write_json(tmp_path / "fields.json", field_config_to_dict(cfg))
    csv = tmp_path / "densities.csv"
    argv = ["lagrangian", str(ed_spec), str(fields), "--f2", "2", "--lambda", "1.5", "--densities", str(csv), "--format", "json"]
    assert run(argv) == EXIT_OK
    body = _json(capsys)
    expected = action_report(cfg, Moments(f2=2.0, Lambda=1.5))
    assert body["total"] == pytest.approx(expected.total, rel=1e-12)
    assert body["field_checks"]["passed"] is True
    table = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert table.shape == (12, 5)
    assert lattice.spacing ** 2 * table[:, 4].sum() == pytest.approx(expected.total, rel=1e-10)


@pytest.mark.cli
@pytest.mark.integration
def test_spectrum_command(ed_spec, tmp_path, capsys):
    out = tmp_path / "eigs.csv"
    argv = ["spectrum", str(ed_spec), "--lattice", "3x3x3x3", "--spacing", "0.7", "--check-ko",
            "--eigenvalues", str(out), "--format", "json"]
    assert run(argv) == EXIT_OK
    body = _json(capsys)
    assert body["dimension"] == 81 * 16
    assert body["ko"]["details"]["ko_row"] == 2
    eigenvalues = np.loadtxt(out)
    assert eigenvalues.shape == (81 * 16,)
    assert np.all(np.diff(eigenvalues) >= 0)


@pytest.mark.cli
@pytest.mark.integration
def test_spectrum_ko_check_needs_four_dimensions(ed_spec, capsys):
    assert run(["spectrum", str(ed_spec), "--lattice", "3x3", "--check-ko"]) == EXIT_USAGE
    assert "d=4" in capsys.readouterr().err


def _lift_document():
    phases = {1: (0.1, 0.4), 2: (1.3, -0.2), 3: (2.0, 0.9)}

    def u(i, j):
        return join_blocks([np.array([[np.exp(1j * (phases[i][k] - phases[j][k]))]]) for k in range(2)])

    overlaps = {(i, j): {"p": u(i, j)} for i, j in ((1, 2), (2, 3), (1, 3))}
    candidate = CechAtlas(patches=(1, 2, 3), overlaps=overlaps, triples=((1, 2, 3, ("p",)),), block_dims=(1, 1))
    doc = atlas_to_dict(candidate)
    doc["target"] = atlas_to_dict(quotient_cocycle(candidate, ed_triple()))
    return doc


@pytest.mark.cli
@pytest.mark.integration
def test_cech_lift_command(tmp_path, ed_spec, capsys):
    atlas = write_json(tmp_path / "atlas.json", _lift_document())
    assert run(["cech", str(atlas), "--triple", str(ed_spec), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    assert [r["title"] for r in body["reports"]] == ["atlas", "cocycle", "lift"]
    assert run(["cech", str(atlas)]) == EXIT_USAGE


@pytest.mark.cli
@pytest.mark.unit
def test_non_integer_pairs_are_usage_error(tmp_path, capsys):
    doc = triple_spec(ed_data(), ed_dirac(0.5))
    doc["pairs"][0] = ["a", 1]
    path = write_json(tmp_path / "pairs.json", doc)
    assert run(["check", str(path)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert str(path) in err
    assert "pairs" in err


@pytest.mark.cli
@pytest.mark.unit
def test_invalid_utf8_is_usage_error(tmp_path, capsys):
    path = tmp_path / "binary.json"
    path.write_bytes(b'\xff\xfe{"dims": [1]}')
    assert run(["check", str(path)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert str(path) in err
    assert "UTF-8" in err


@pytest.mark.cli
@pytest.mark.unit
def test_non_numeric_gravity_is_usage_error(tmp_path, ed_spec, capsys):
    cfg = smooth_abelian_config(ed_triple(), LatticeSpec((3, 3)), [np.array([[1j]]), np.array([[0j]])], [None, None])
    doc = field_config_to_dict(cfg)
    doc["gravity"]["s"] = ["x"] * 9
    fields = write_json(tmp_path / "fields.json", doc)
    assert run(["lagrangian", str(ed_spec), str(fields)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert str(fields) in err
    assert "gravity.s" in err


@pytest.mark.cli
@pytest.mark.unit
def test_non_numeric_atlas_indices_are_usage_error(tmp_path, ed_spec, capsys):
    doc = _lift_document()
    doc["triples"][0][0] = "one"
    atlas = write_json(tmp_path / "atlas.json", doc)
    assert run(["cech", str(atlas), "--triple", str(ed_spec)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert str(atlas) in err
    assert "triples[0]" in err


DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.mark.cli
@pytest.mark.integration
def test_bundled_examples(capsys):
    assert run(["check", str(DATA / "ed.json"), "--format", "json"]) == EXIT_OK
    assert _json(capsys)["passed"] is True
    assert run(["gauge-group", str(DATA / "ym2.json"), "--format", "json"]) == EXIT_OK
    assert _json(capsys)["gauge_lie_dim"] == 3
    assert run(["dirac-moduli", str(DATA / "two_point_ko7.json"), "--format", "json"]) == EXIT_OK
    assert _json(capsys)["real_dim"] == 7
    assert run(["cech", str(DATA / "u1_atlas.json"), "--format", "json"]) == EXIT_OK
    assert _json(capsys)["passed"] is True


@pytest.mark.cli
@pytest.mark.integration
def test_bundled_ed_fluctuation_and_lagrangian(capsys):
    assert run(["fluctuate", str(DATA / "ed.json"), str(DATA / "ed_terms.json"), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    d_a = np.array(body["D_A"])
    assert np.allclose(d_a[..., 0] + 1j * d_a[..., 1], ed_dirac(0.7 - 0.2j))

    assert run(["lagrangian", str(DATA / "ed.json"), str(DATA / "ed_fields.json"), "--format", "json"]) == EXIT_OK
    body = _json(capsys)
    closed = ed_lagrangian(0.5, 0.3, 0.0, Moments())
    assert body["volume"] == pytest.approx(2.25)
    assert body["total"] == pytest.approx(2.25 * closed["total"], rel=1e-10)
    assert body["boundary"] == pytest.approx(0.0, abs=1e-14)
