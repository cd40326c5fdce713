"""Instance files: measured graphs plus a form, in TOML.

Points carry explicit string ids so fixtures are diffable and error messages
can name the offending site. Bundled instances ship with the package and are
loadable by name; they are the fixtures every check suite runs on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .forms import FormInstance, FormSpec, PiecewisePhi
from .space import FiniteMeasuredSpace, SubsetMask

__all__ = ["Instance", "InstanceError", "parse_instance", "load_instance",
           "bundled_names", "load_bundled", "mask_from_ids", "read_fn_file",
           "NON_DIRICHLET", "GROUNDED_HOMOGENEOUS"]

# bundled fixtures that intentionally violate the structure checks
NON_DIRICHLET = frozenset({"bad_quadratic"})
# bundled fixtures that are grounded and p-homogeneous (smoothing targets)
GROUNDED_HOMOGENEOUS = frozenset({"two_point_p2_grounded", "grounded_path5_p2",
                                  "grounded_ring6_p3"})


class InstanceError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Instance:
    name: str
    ids: tuple[str, ...]
    space: FiniteMeasuredSpace
    form: FormInstance
    seed: int
    tol: float
    samples: int

    def index_of(self, point_id: str) -> int:
        try:
            return self.ids.index(point_id)
        except ValueError:
            raise InstanceError(f"unknown point id {point_id!r}") from None


def _line_of(text: str, needle: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def _require(cond: bool, text: str, message: str, needle: str | None = None):
    if not cond:
        raise InstanceError(message, _line_of(text, needle) if needle else None)


def parse_instance(text: str, name: str = "<memory>") -> Instance:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InstanceError(f"not valid TOML: {exc}") from exc
    name = doc.get("name", name)
    _require("space" in doc, text, "missing [space] section")
    _require("form" in doc, text, "missing [form] section")

    points = doc["space"].get("points", [])
    _require(isinstance(points, list) and points, text, "space.points must be a non-empty list")
    ids = []
    measures = []
    for pt in points:
        _require(isinstance(pt, dict) and "id" in pt and "measure" in pt, text,
                 "each point needs id and measure")
        pid = pt["id"]
        _require(isinstance(pid, str) and pid, text, "point id must be a non-empty string")
        _require(pid not in ids, text, f"duplicate point id {pid!r}", f'"{pid}"')
        mval = pt["measure"]
        _require(isinstance(mval, (int, float)) and math.isfinite(mval) and mval > 0,
                 text, f"measure of {pid!r} must be a positive finite number", f'"{pid}"')
        ids.append(pid)
        measures.append(float(mval))
    index = {pid: i for i, pid in enumerate(ids)}
    space = FiniteMeasuredSpace(np.array(measures))

    fsec = doc["form"]
    kind = fsec.get("kind")
    _require(kind in ("p_energy", "phi_energy", "nonlocal_kernel", "quadratic"),
             text, f"unknown form kind {kind!r}", "kind")

    def resolve_id(pid, where):
        _require(isinstance(pid, str) and pid in index, text,
                 f"{where} references unknown point id {pid!r}",
                 f'"{pid}"' if isinstance(pid, str) else None)
        return index[pid]

    edges = []
    for e in fsec.get("edges", []):
        _require(isinstance(e, dict) and {"i", "j", "w"} <= set(e), text,
                 "each edge needs i, j, w")
        a = resolve_id(e["i"], "edge")
        b = resolve_id(e["j"], "edge")
        _require(a != b, text, f"edge endpoints coincide at {e['i']!r}", f'"{e["i"]}"')
        w = e["w"]
        _require(isinstance(w, (int, float)) and math.isfinite(w) and w > 0, text,
                 "edge weight must be a positive finite number")
        edges.append((a, b, float(w)))

    killing = None
    if "killing" in fsec:
        killing = np.zeros(len(ids))
        for item in fsec["killing"]:
            _require(isinstance(item, dict) and {"i", "kappa"} <= set(item), text,
                     "each killing entry needs i and kappa")
            a = resolve_id(item["i"], "killing")
            kap = item["kappa"]
            _require(isinstance(kap, (int, float)) and math.isfinite(kap) and kap >= 0,
                     text, "kappa must be a nonnegative finite number")
            killing[a] = float(kap)

    kernel = None
    if "kernel" in fsec:
        kernel = np.asarray(fsec["kernel"], dtype=float)
        _require(kernel.shape == (len(ids), len(ids)), text,
                 f"kernel must be {len(ids)}x{len(ids)}", "kernel")

    quad = None
    if "quad" in fsec:
        quad = np.asarray(fsec["quad"], dtype=float)
        _require(quad.shape == (len(ids), len(ids)), text,
                 f"quad must be {len(ids)}x{len(ids)}", "quad")

    phi = None
    if "phi" in fsec:
        pieces = fsec["phi"].get("pieces", [])
        _require(isinstance(pieces, list) and pieces, text,
                 "form.phi.pieces must be a non-empty list", "phi")
        try:
            phi = PiecewisePhi(tuple(float(p["lo"]) for p in pieces),
                               tuple(tuple(float(c) for c in p["coeffs"]) for p in pieces))
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"malformed phi piece: {exc}",
                                _line_of(text, "pieces")) from exc

    try:
        spec = FormSpec(kind=kind, p=float(fsec.get("p", 2.0)),
                        edges=tuple(edges), kernel=kernel, phi=phi,
                        killing=killing,
                        killing_exponent=(float(fsec["killing_exponent"])
                                          if "killing_exponent" in fsec else None),
                        quad=quad)
        form = FormInstance(space, spec)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc

    dsec = doc.get("defaults", {})
    seed = dsec.get("seed", 0)
    tol = dsec.get("tol", 1e-9)
    samples = dsec.get("samples", 500)
    _require(isinstance(seed, int) and seed >= 0, text, "defaults.seed must be a nonnegative integer", "seed")
    _require(isinstance(tol, (int, float)) and 0 < tol < 1, text, "defaults.tol must be in (0,1)", "tol")
    _require(isinstance(samples, int) and samples > 0, text, "defaults.samples must be a positive integer", "samples")

    return Instance(name=name, ids=tuple(ids), space=space, form=form,
                    seed=int(seed), tol=float(tol), samples=int(samples))


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    return parse_instance(text, name=path.stem)


def _bundle_dir():
    return resources.files("dirlab") / "instances"


def bundled_names() -> list[str]:
    return sorted(entry.name[:-5] for entry in _bundle_dir().iterdir()
                  if entry.name.endswith(".toml"))


def load_bundled(name: str) -> Instance:
    entry = _bundle_dir() / f"{name}.toml"
    try:
        text = entry.read_text()
    except (FileNotFoundError, OSError):
        raise InstanceError(f"no bundled instance named {name!r}; "
                            f"available: {', '.join(bundled_names())}") from None
    return parse_instance(text, name=name)


def mask_from_ids(instance: Instance, spec: str) -> SubsetMask:
    """Comma-separated point ids to a subset mask; empty string is empty."""
    mask = np.zeros(instance.space.n, dtype=bool)
    spec = spec.strip()
    if not spec:
        return mask
    for token in spec.split(","):
        mask[instance.index_of(token.strip())] = True
    return mask


def read_fn_file(path, instance: Instance) -> np.ndarray:
    """One value per line in point-declaration order; # comments allowed."""
    values = []
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            raise InstanceError(f"{path}:{lineno}: not a number: {stripped!r}") from None
    if len(values) != instance.space.n:
        raise InstanceError(f"{path}: expected {instance.space.n} values, got {len(values)}")
    return np.array(values)
