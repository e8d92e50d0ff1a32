"""
JSON-style text codecs for triple specs, one-form terms, field configs and atlases.

Complex scalars are written as [re, im] and matrices as nested arrays of such
pairs. Python's float repr is exact, so every emitted matrix re-parses unchanged.
Loaders report malformed input as SpecParseError with the offending field and,
when reading from a file, the line it sits on.
"""
import json
import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from .cech import CechAtlas
from .errors import AcmError, SpecParseError
from .lagrangian import FieldConfig, LatticeSpec
from .models import KOSignature, KrajewskiData
from .triple import FiniteTriple, build_triple

SCHEMA_VERSION = "1.0"

PathLike = Union[str, Path]
T = TypeVar("T")

# conversion failures on hand-edited input
_BAD_VALUE = (TypeError, ValueError, AttributeError)


def encode_matrix(m: np.ndarray) -> List:
    """Nested [re, im] arrays for any complex array."""
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def decode_matrix(obj: Any, path: str, field: str, ndim: int = 2) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except _BAD_VALUE:
        raise SpecParseError(path, field, "expected nested arrays of [re, im] pairs")
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise SpecParseError(path, field, f"expected a {ndim}-dimensional array of [re, im] pairs, got shape {arr.shape}")
    if ndim >= 2 and arr.shape[-3] != arr.shape[-2]:
        raise SpecParseError(path, field, f"matrix is not square: {arr.shape[-3]}x{arr.shape[-2]}")
    return arr[..., 0] + 1j * arr[..., 1]


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except FileNotFoundError:
        raise SpecParseError(path, "<file>", "file not found")
    except UnicodeDecodeError as exc:
        raise SpecParseError(path, "<file>", f"not valid UTF-8 text ({exc.reason} at byte {exc.start})")
    except OSError as exc:
        raise SpecParseError(path, "<file>", f"cannot read file ({exc.strerror})")


def _parse_text(text: str, path: str) -> Dict[str, Any]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(path, "<document>", exc.msg, line=exc.lineno)
    if not isinstance(doc, dict):
        raise SpecParseError(path, "<document>", "top level must be an object")
    return doc


def load_document(path: PathLike) -> Dict[str, Any]:
    """Read a JSON-style document, mapping syntax errors to SpecParseError with a line."""
    path = str(path)
    return _parse_text(_read_text(path), path)


def locate_field(text: str, field: str) -> Optional[int]:
    """1-based line of a dotted field such as 'gravity.s' or 'terms[0].b' in the source text.

    Each key is searched after the previous one; None when the first key is absent.
    """
    if field.startswith("<"):
        return None
    keys = [k for k in re.split(r"\.|\[\d+\]", field) if k]
    pos, found = 0, None
    for key in keys:
        match = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if match is None:
            break
        pos = found = match.start()
    return None if found is None else text.count("\n", 0, found) + 1


def _load(path: PathLike, build: Callable[[Dict[str, Any], str], T]) -> T:
    path = str(path)
    text = _read_text(path)
    doc = _parse_text(text, path)
    try:
        return build(doc, path)
    except SpecParseError as exc:
        if exc.line is not None:
            raise
        raise SpecParseError(exc.path, exc.field, exc.message, line=locate_field(text, exc.field)) from exc


def _require(doc: Dict[str, Any], key: str, path: str) -> Any:
    if key not in doc:
        raise SpecParseError(path, key, "missing required field")
    return doc[key]


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _to_int(value: Any, path: str, field: str) -> int:
    if not _is_int(value):
        raise SpecParseError(path, field, f"expected an integer, got {value!r}")
    return value


def _site_values(obj: Any, path: str, field: str) -> np.ndarray:
    try:
        return np.asarray(obj, dtype=float)
    except _BAD_VALUE:
        raise SpecParseError(path, field, "expected an array of numbers")


def data_from_dict(doc: Dict[str, Any], path: str = "<memory>") -> KrajewskiData:
    dims = _require(doc, "dims", path)
    pairs = _require(doc, "pairs", path)
    ko = _require(doc, "ko", path)
    if not isinstance(dims, list) or not all(_is_int(n) for n in dims):
        raise SpecParseError(path, "dims", "expected an array of integers")
    if not isinstance(pairs, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(_is_int(x) for x in p) for p in pairs
    ):
        raise SpecParseError(path, "pairs", "expected an array of [i, j] integer pairs")
    if not _is_int(ko) or not 0 <= ko <= 7:
        raise SpecParseError(path, "ko", "expected an integer 0-7")
    grading = doc.get("grading")
    if grading is not None and (not isinstance(grading, list) or not all(_is_int(s) for s in grading)):
        raise SpecParseError(path, "grading", "expected an array of +1/-1")
    try:
        return KrajewskiData(
            dims=tuple(dims),
            pairs=tuple(tuple(p) for p in pairs),
            ko=KOSignature.from_n(ko),
            grading=None if grading is None else tuple(grading),
        )
    except AcmError as exc:
        raise SpecParseError(path, "grading" if "grading" in str(exc) else "pairs", str(exc))


def triple_from_dict(doc: Dict[str, Any], path: str = "<memory>") -> FiniteTriple:
    data = data_from_dict(doc, path)
    dirac = None
    if doc.get("dirac") is not None:
        dirac = decode_matrix(doc["dirac"], path, "dirac")
        if dirac.shape != (data.dim_h, data.dim_h):
            raise SpecParseError(path, "dirac", f"expected a {data.dim_h}x{data.dim_h} matrix")
    return build_triple(data, dirac)


def triple_to_dict(t: FiniteTriple) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "dims": list(t.dims),
        "pairs": [[i, j] for i, j in t.data.pairs],
        "ko": t.ko.n,
        "dirac": encode_matrix(t.dirac),
    }
    if t.data.grading is not None:
        doc["grading"] = list(t.data.grading)
    return doc


def load_triple(path: PathLike) -> FiniteTriple:
    return _load(path, triple_from_dict)


def element_from_obj(obj: Any, dims: Sequence[int], path: str, field: str) -> List[np.ndarray]:
    if not isinstance(obj, dict) or "blocks" not in obj:
        raise SpecParseError(path, field, "expected an object with 'blocks'")
    blocks = obj["blocks"]
    if not isinstance(blocks, list) or len(blocks) != len(dims):
        raise SpecParseError(path, field, f"expected {len(dims)} blocks")
    out = []
    for k, (block, n) in enumerate(zip(blocks, dims)):
        m = decode_matrix(block, path, f"{field}.blocks[{k}]")
        if m.shape != (n, n):
            raise SpecParseError(path, f"{field}.blocks[{k}]", f"expected a {n}x{n} matrix")
        out.append(m)
    return out


def element_to_obj(element: Sequence[np.ndarray]) -> Dict[str, Any]:
    return {"blocks": [encode_matrix(b) for b in element]}


def terms_from_dict(
    doc: Dict[str, Any], dims: Sequence[int], path: str = "<memory>"
) -> List[Tuple[List[np.ndarray], List[np.ndarray]]]:
    terms = _require(doc, "terms", path)
    if not isinstance(terms, list):
        raise SpecParseError(path, "terms", "expected an array")
    out = []
    for k, term in enumerate(terms):
        if not isinstance(term, dict):
            raise SpecParseError(path, f"terms[{k}]", "expected an object with 'a' and 'b'")
        a = element_from_obj(term.get("a"), dims, path, f"terms[{k}].a")
        b = element_from_obj(term.get("b"), dims, path, f"terms[{k}].b")
        out.append((a, b))
    return out


def load_terms(path: PathLike, dims: Sequence[int]) -> List[Tuple[List[np.ndarray], List[np.ndarray]]]:
    """Read {"terms": [{"a": element, "b": element}, ...]}."""
    return _load(path, lambda doc, p: terms_from_dict(doc, dims, p))


def field_config_from_dict(doc: Dict[str, Any], path: str = "<memory>") -> FieldConfig:
    lattice_doc = _require(doc, "lattice", path)
    try:
        lattice = LatticeSpec(tuple(lattice_doc["dims"]), float(lattice_doc.get("spacing", 1.0)))
    except (KeyError,) + _BAD_VALUE as exc:
        raise SpecParseError(path, "lattice", f"malformed lattice description ({exc})")
    except AcmError as exc:
        raise SpecParseError(path, "lattice", str(exc))
    dim_h = _require(doc, "dim_h", path)
    if not _is_int(dim_h) or dim_h < 1:
        raise SpecParseError(path, "dim_h", "expected a positive integer")

    def sites(key: str, inner: Tuple[int, ...], ndim: int) -> Optional[np.ndarray]:
        if doc.get(key) is None:
            return None
        arr = decode_matrix(doc[key], path, key, ndim=ndim)
        if arr.shape != (lattice.n_sites,) + inner:
            raise SpecParseError(path, key, f"expected {lattice.n_sites} sites of shape {inner}, got {arr.shape}")
        return arr.reshape(lattice.dims + inner)

    b = sites("B", (lattice.d, dim_h, dim_h), 4)
    phi = sites("Phi", (dim_h, dim_h), 3)
    scalars: Dict[str, Optional[np.ndarray]] = {"s": None, "weyl_sq": None, "euler": None}
    gravity = doc.get("gravity") or {}
    if not isinstance(gravity, dict):
        raise SpecParseError(path, "gravity", "expected an object with 's', 'weyl_sq' and 'euler'")
    for key in scalars:
        if gravity.get(key) is not None:
            arr = _site_values(gravity[key], path, f"gravity.{key}")
            if arr.shape != (lattice.n_sites,):
                raise SpecParseError(path, f"gravity.{key}", f"expected {lattice.n_sites} site values")
            scalars[key] = arr.reshape(lattice.dims)
    return FieldConfig(lattice=lattice, dim_h=dim_h, B=b, Phi=phi, **scalars)


def field_config_to_dict(cfg: FieldConfig) -> Dict[str, Any]:
    n, d = cfg.lattice.n_sites, cfg.lattice.d
    return {
        "lattice": {"dims": list(cfg.lattice.dims), "spacing": cfg.lattice.spacing},
        "dim_h": cfg.dim_h,
        "B": encode_matrix(cfg.B.reshape((n, d, cfg.dim_h, cfg.dim_h))),
        "Phi": encode_matrix(cfg.Phi.reshape((n, cfg.dim_h, cfg.dim_h))),
        "gravity": {
            "s": cfg.s.ravel().tolist(),
            "weyl_sq": cfg.weyl_sq.ravel().tolist(),
            "euler": cfg.euler.ravel().tolist(),
        },
    }


def load_field_config(path: PathLike) -> FieldConfig:
    return _load(path, field_config_from_dict)


def _parse_key(key: str, path: str, field: str) -> Tuple[int, int]:
    try:
        i, j = (int(p) for p in key.split(","))
    except ValueError:
        raise SpecParseError(path, field, f"overlap key '{key}' is not of the form 'i,j'")
    return i, j


def _samples(obj: Any, path: str, field: str, ndim: int) -> Dict[str, np.ndarray]:
    if not isinstance(obj, dict):
        raise SpecParseError(path, field, "expected an object of point -> samples")
    return {str(p): decode_matrix(v, path, f"{field}.{p}", ndim=ndim) for p, v in obj.items()}


def _keyed(doc: Dict[str, Any], key: str, path: str) -> Dict[str, Any]:
    value = doc.get(key) or {}
    if not isinstance(value, dict):
        raise SpecParseError(path, key, "expected an object")
    return value


def atlas_from_dict(doc: Dict[str, Any], path: str = "<memory>") -> CechAtlas:
    patches = _require(doc, "patches", path)
    if not isinstance(patches, list):
        raise SpecParseError(path, "patches", "expected an array of patch labels")
    overlaps_doc = _require(doc, "overlaps", path)
    if not isinstance(overlaps_doc, dict):
        raise SpecParseError(path, "overlaps", "expected an object keyed by 'i,j'")
    overlaps = {
        _parse_key(k, path, "overlaps"): _samples(v, path, f"overlaps.{k}", 2) for k, v in overlaps_doc.items()
    }
    triples = []
    entries = doc.get("triples", [])
    if not isinstance(entries, list):
        raise SpecParseError(path, "triples", "expected an array")
    for n, entry in enumerate(entries):
        if not isinstance(entry, list) or len(entry) != 4 or not isinstance(entry[3], list):
            raise SpecParseError(path, f"triples[{n}]", "expected [i, j, k, [points]]")
        i, j, k = (_to_int(x, path, f"triples[{n}]") for x in entry[:3])
        triples.append((i, j, k, tuple(str(p) for p in entry[3])))
    derivatives = {
        _parse_key(k, path, "derivatives"): _samples(v, path, f"derivatives.{k}", 3)
        for k, v in _keyed(doc, "derivatives", path).items()
    }
    connections = {}
    for k, v in _keyed(doc, "connections", path).items():
        try:
            label = int(k)
        except ValueError:
            raise SpecParseError(path, "connections", f"patch label '{k}' is not an integer")
        connections[label] = _samples(v, path, f"connections.{k}", 3)
    block_dims = doc.get("block_dims")
    if block_dims is not None and not isinstance(block_dims, list):
        raise SpecParseError(path, "block_dims", "expected an array of integers")
    return CechAtlas(
        patches=tuple(_to_int(p, path, "patches") for p in patches),
        overlaps=overlaps,
        triples=tuple(triples),
        block_dims=None if block_dims is None else tuple(_to_int(n, path, "block_dims") for n in block_dims),
        derivatives=derivatives,
        connections=connections,
    )


def atlas_to_dict(atlas: CechAtlas) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "patches": list(atlas.patches),
        "overlaps": {
            f"{i},{j}": {p: encode_matrix(g) for p, g in samples.items()} for (i, j), samples in atlas.overlaps.items()
        },
        "triples": [[i, j, k, list(points)] for i, j, k, points in atlas.triples],
    }
    if atlas.block_dims is not None:
        doc["block_dims"] = list(atlas.block_dims)
    if atlas.derivatives:
        doc["derivatives"] = {
            f"{i},{j}": {p: encode_matrix(v) for p, v in s.items()} for (i, j), s in atlas.derivatives.items()
        }
    if atlas.connections:
        doc["connections"] = {str(i): {p: encode_matrix(v) for p, v in s.items()} for i, s in atlas.connections.items()}
    return doc


def atlases_from_dict(doc: Dict[str, Any], path: str = "<memory>") -> Tuple[CechAtlas, Optional[CechAtlas]]:
    target = doc.get("target")
    if target is not None and not isinstance(target, dict):
        raise SpecParseError(path, "target", "expected a nested atlas object")
    return atlas_from_dict(doc, path), None if target is None else atlas_from_dict(target, path)


def load_atlas(path: PathLike) -> Tuple[CechAtlas, Optional[CechAtlas]]:
    """Read an atlas and the optional nested target atlas."""
    return _load(path, atlases_from_dict)


def dumps(payload: Dict[str, Any], command: str) -> str:
    """Deterministic JSON report carrying the schema version and subcommand."""
    body = dict(payload)
    body["schema_version"] = SCHEMA_VERSION
    body["command"] = command
    return json.dumps(body, sort_keys=True, indent=2)
