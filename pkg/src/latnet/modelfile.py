"""JSON model files: parsing with path-aware errors and canonical export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .certify import StorageSpec, SupplySpec
from .errors import InvalidArgument, LatnetError
from .models import ChainParams, PlateParams, chain_spec, collocated, pinned, plate_spec
from .phonon import HamiltonianSpec, build_hamiltonian_model, hamiltonian_storage
from .stencil import MatrixStencil, NetworkModel

SCHEMA_VERSION = 1


class ModelFileError(InvalidArgument):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True, eq=False)
class ModelBundle:
    model: NetworkModel
    hamiltonian: HamiltonianSpec | None = None
    storage: StorageSpec | str | None = None   # stencil storage or the string "lyapunov"
    supply: SupplySpec | None = None


# -- canonical JSON ---------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def canonical_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits.

    Numeric leaf lists are written on one line so matrices stay readable.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_json(v, indent, _level + 1)}"
                 for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(canonical_json(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return ("[\n" + ",\n".join(pad + canonical_json(v, indent, _level + 1) for v in obj)
                + "\n" + end + "]")
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(obj)


# -- parsing helpers -----------------------------------------------------------------

def _get(obj, key, path, kind=None, default=...):
    if not isinstance(obj, dict):
        raise ModelFileError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise ModelFileError(f"{path}.{key}", "missing required field")
        return default
    val = obj[key]
    if kind is not None and not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ModelFileError(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return val


def _matrix(val, path, rows=None, cols=None) -> np.ndarray:
    if not isinstance(val, list) or not val or not all(isinstance(r, list) for r in val):
        raise ModelFileError(path, "expected a non-empty list of rows")
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise ModelFileError(path, "matrix entries must be numbers with equal row lengths")
    if arr.ndim != 2 or (rows is not None and arr.shape != (rows, cols)):
        raise ModelFileError(path, f"expected shape {(rows, cols)}, got {arr.shape}")
    return arr


def parse_stencil(obj, path: str) -> MatrixStencil:
    nu = _get(obj, "nu", path, int)
    rows = _get(obj, "rows", path, int)
    cols = _get(obj, "cols", path, int)
    blocks = _get(obj, "blocks", path, list)
    out = {}
    for i, blk in enumerate(blocks):
        bpath = f"{path}.blocks[{i}]"
        off = _get(blk, "offset", bpath, list)
        if len(off) != nu or not all(isinstance(o, int) and not isinstance(o, bool) for o in off):
            raise ModelFileError(f"{bpath}.offset", f"expected {nu} integers")
        if tuple(off) in out:
            raise ModelFileError(f"{bpath}.offset", "duplicate offset")
        out[tuple(off)] = _matrix(_get(blk, "matrix", bpath), f"{bpath}.matrix", rows, cols)
    try:
        return MatrixStencil(nu, rows, cols, out)
    except LatnetError as exc:
        raise ModelFileError(path, str(exc)) from exc


def _parse_supply(val, path, nu, m, r) -> SupplySpec:
    if val == "identity":
        if m != r:
            raise ModelFileError(path, "identity supply needs m == r")
        return SupplySpec.identity(nu, m)
    if val == "derivative":
        if m != r:
            raise ModelFileError(path, "derivative supply needs m == r")
        return SupplySpec.derivative(nu, m)
    if isinstance(val, dict) and "g" in val:
        g = parse_stencil(val["g"], f"{path}.g")
        higher = tuple(parse_stencil(h, f"{path}.higher[{i}]")
                       for i, h in enumerate(_get(val, "higher", path, list, [])))
        spec = SupplySpec(g, higher)
    elif isinstance(val, dict):
        spec = SupplySpec(parse_stencil(val, path))
    else:
        raise ModelFileError(path, "expected 'identity', 'derivative' or a stencil")
    if spec.shape != (m, r) or spec.g.dim_nu != nu:
        raise ModelFileError(path, f"supply must be an {m}x{r} stencil on Z^{nu}")
    return spec


def _parse_storage(val, path, nu, n, hamiltonian):
    if val == "lyapunov":
        return "lyapunov"
    if val == "hamiltonian":
        if hamiltonian is None:
            raise ModelFileError(path, "'hamiltonian' storage needs a Hamiltonian spec")
        return StorageSpec(hamiltonian_storage(hamiltonian))
    if not isinstance(val, dict):
        raise ModelFileError(path, "expected 'lyapunov', 'hamiltonian' or a stencil")
    v = parse_stencil(val, path)
    if v.shape != (n, n) or v.dim_nu != nu:
        raise ModelFileError(path, f"storage must be an {n}x{n} stencil on Z^{nu}")
    try:
        return StorageSpec(v)
    except LatnetError as exc:
        raise ModelFileError(path, str(exc)) from exc


def _parse_hamiltonian(obj, path) -> HamiltonianSpec:
    mass = _matrix(_get(obj, "mass", path), f"{path}.mass")
    stiff = parse_stencil(_get(obj, "stiffness", path), f"{path}.stiffness")
    try:
        return HamiltonianSpec(mass, stiff)
    except LatnetError as exc:
        raise ModelFileError(path, str(exc)) from exc


def _number(params, key, path, default):
    val = params.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ModelFileError(f"{path}.{key}", "expected a number")
    return float(val)


def _parse_preset(obj) -> tuple[NetworkModel, HamiltonianSpec]:
    preset = _get(obj, "preset", "$", str)
    params = _get(obj, "params", "$", dict, {})
    ppath = "$.params"
    known = {"chain": {"mass", "spring", "damping", "pinning", "sensing"},
             "plate": {"rho", "beta", "h", "damping", "pinning", "sensing"}}
    if preset not in known:
        raise ModelFileError("$.preset", f"unknown preset {preset!r} (expected chain or plate)")
    extra = set(params) - known[preset]
    if extra:
        raise ModelFileError(ppath, f"unknown parameters {sorted(extra)}")
    try:
        if preset == "chain":
            spec = chain_spec(ChainParams(_number(params, "mass", ppath, 1.0),
                                          _number(params, "spring", ppath, 1.0)))
        else:
            spec = plate_spec(PlateParams(_number(params, "rho", ppath, 1.0),
                                          _number(params, "beta", ppath, 2.0),
                                          _number(params, "h", ppath, 1.0)))
        eps = _number(params, "pinning", ppath, 0.0)
        if eps:
            spec = pinned(spec, eps)
        gamma = _number(params, "damping", ppath, 0.0)
        if gamma < 0:
            raise ModelFileError(f"{ppath}.damping", "must be nonnegative")
        sensing = params.get("sensing", "velocity")
        model = collocated(spec, sensing, gamma=gamma)
    except ModelFileError:
        raise
    except LatnetError as exc:
        raise ModelFileError(ppath, str(exc)) from exc
    return model, spec


def parse_model(obj: Any) -> ModelBundle:
    """Build a :class:`ModelBundle` from a decoded model-file object."""
    if not isinstance(obj, dict):
        raise ModelFileError("$", "model file must be a JSON object")
    schema = _get(obj, "schema", "$", int)
    if schema != SCHEMA_VERSION:
        raise ModelFileError("$.schema", f"unsupported schema {schema}, expected {SCHEMA_VERSION}")
    if "preset" in obj:
        model, ham = _parse_preset(obj)
        storage_default, supply_default = "hamiltonian", "identity"
    else:
        nu = _get(obj, "nu", "$", int)
        n = _get(obj, "n", "$", int)
        m = _get(obj, "m", "$", int)
        r = _get(obj, "r", "$", int)
        shapes = {"a": (n, n), "b": (n, m), "c": (r, n), "d": (r, m)}
        stencils = {}
        for key, shape in shapes.items():
            if key in obj:
                st = parse_stencil(obj[key], f"$.{key}")
                if st.shape != shape or st.dim_nu != nu:
                    raise ModelFileError(f"$.{key}", f"expected {shape[0]}x{shape[1]} blocks on Z^{nu}")
            elif key == "a":
                raise ModelFileError("$.a", "missing required field")
            else:
                st = MatrixStencil.zeros(nu, *shape)
            stencils[key] = st
        model = NetworkModel(**stencils)
        ham = _parse_hamiltonian(obj["hamiltonian"], "$.hamiltonian") if "hamiltonian" in obj else None
        storage_default, supply_default = None, None
    storage = obj.get("storage", storage_default)
    supply = obj.get("supply", supply_default)
    if supply == "identity" and model.m != model.r and "supply" not in obj:
        supply = None
    return ModelBundle(
        model=model,
        hamiltonian=ham,
        storage=None if storage is None else _parse_storage(storage, "$.storage", model.nu, model.n, ham),
        supply=None if supply is None else _parse_supply(supply, "$.supply", model.nu, model.m, model.r),
    )


def load_model(path) -> ModelBundle:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFileError("$", f"malformed JSON: {exc}") from exc
    return parse_model(obj)


def export_model(bundle: ModelBundle) -> dict:
    """Explicit-stencil form of a bundle; presets expand to their stencils."""
    m = bundle.model
    out: dict[str, Any] = {
        "schema": SCHEMA_VERSION, "nu": m.nu, "n": m.n, "m": m.m, "r": m.r,
        "a": m.a.to_json(), "b": m.b.to_json(), "c": m.c.to_json(), "d": m.d.to_json(),
    }
    if bundle.hamiltonian is not None:
        out["hamiltonian"] = {"mass": bundle.hamiltonian.mass.tolist(),
                              "stiffness": bundle.hamiltonian.stiffness.to_json()}
    if isinstance(bundle.storage, StorageSpec):
        out["storage"] = bundle.storage.v.to_json()
    elif bundle.storage is not None:
        out["storage"] = bundle.storage
    if bundle.supply is not None:
        sup = bundle.supply
        if sup.degree == 0:
            out["supply"] = sup.g.to_json()
        else:
            out["supply"] = {"g": sup.g.to_json(), "higher": [h.to_json() for h in sup.higher]}
    return out


def hamiltonian_bundle(spec: HamiltonianSpec) -> ModelBundle:
    return ModelBundle(build_hamiltonian_model(spec), spec)
