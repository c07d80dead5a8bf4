"""Problem files and result documents.

A problem file is YAML (JSON is accepted too)::

    model:
      type: polynomial        # polynomial | points | logistic
      k: 6                    # or degree: 5
      domain: [-1, 1]
    c: e2                     # basis shorthand, explicit list, or turning_point
    optimizer:
      starts: 40
      seed: 1
    tolerances:
      span_tol: 1.0e-8
    output:
      format: json
      precision: 12

Unknown fields anywhere are errors, reported with their line number.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import DesignError, InvalidInputError
from .linalg import Tolerances
from .model import (
    PointSetModel,
    PolynomialModel,
    ProblemSpec,
    QuadraticLogisticModel,
    basis_vector,
    turning_point_c,
)
from .optimizer import SolveSettings

__all__ = [
    "ProblemFileError",
    "ProblemFile",
    "load_problem",
    "parse_problem",
    "parse_c",
    "round_sig",
    "dump_document",
    "SIG_DIGITS",
]

SIG_DIGITS = 12

_SCHEMA = {
    "model": {"type", "k", "degree", "domain", "theta_hat", "points"},
    "c": None,
    "optimizer": {f for f in SolveSettings.__dataclass_fields__},
    "tolerances": {"rank_tol", "span_tol", "merge_tol"},
    "output": {"format", "precision"},
}
_REQUIRED = ("model", "c")


class ProblemFileError(DesignError):
    exit_code = 1


@dataclass
class ProblemFile:
    """A parsed and validated problem file."""

    model: dict
    c: object
    optimizer: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"format": "json", "precision": SIG_DIGITS})
    source: str = "<string>"

    def settings(self, **overrides) -> SolveSettings:
        kw = dict(self.optimizer)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return SolveSettings(**kw)

    def tol(self) -> Tolerances:
        return Tolerances(**self.tolerances)

    @property
    def is_logistic(self) -> bool:
        return self.model["type"] == "logistic"

    def build_model(self):
        m = self.model
        if m["type"] == "polynomial":
            return PolynomialModel(k=m["k"], domain=tuple(m.get("domain", (-1.0, 1.0))))
        if m["type"] == "logistic":
            return QuadraticLogisticModel(
                domain=tuple(m.get("domain", (-1.0, 1.0))), theta_hat=tuple(m["theta_hat"])
            )
        return PointSetModel(np.asarray(m["points"], dtype=float))

    def target(self) -> np.ndarray:
        k = self.build_model().k
        if self.c == "turning_point":
            return turning_point_c(self.model["theta_hat"])
        return parse_c(self.c, k)

    def spec(self, **overrides) -> ProblemSpec:
        return ProblemSpec(
            model=self.build_model(), c=self.target(), settings=self.settings(**overrides), tol=self.tol()
        )

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("source")
        return d


def parse_c(value, k: int) -> np.ndarray:
    """``"e3"`` -> third basis vector of R^k; a list -> that vector."""
    if isinstance(value, str):
        m = re.fullmatch(r"\s*e(\d+)\s*", value)
        if not m:
            raise InvalidInputError(f"cannot read c = {value!r}; use e<j> or a list of numbers")
        return basis_vector(int(m.group(1)), k)
    c = np.asarray(value, dtype=float)
    if c.shape != (k,):
        raise InvalidInputError(f"c must have {k} entries, got {c.size}")
    return c


def _to_python(node, where, lines):
    """Convert a composed YAML node, recording the line of every field path."""
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            path = f"{where}.{key}" if where else key
            lines[path] = key_node.start_mark.line + 1
            if key in out:
                raise ProblemFileError(f"line {lines[path]}: duplicate field '{path}'")
            out[key] = _to_python(value_node, path, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, f"{where}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def _fail(lines, path, msg, source):
    line = lines.get(path)
    loc = f"{source}:{line}" if line else source
    raise ProblemFileError(f"{loc}: field '{path}': {msg}")


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def parse_problem(text: str, source: str = "<string>") -> ProblemFile:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as err:
        raise ProblemFileError(f"{source}: cannot parse: {err}") from None
    lines: dict = {}
    if node is None:
        raise ProblemFileError(f"{source}: empty problem file")
    data = _to_python(node, "", lines)
    if not isinstance(data, dict):
        raise ProblemFileError(f"{source}: top level must be a mapping")

    for key, value in data.items():
        if key not in _SCHEMA:
            _fail(lines, key, f"unknown field (allowed: {', '.join(_SCHEMA)})", source)
        allowed = _SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, dict):
                _fail(lines, key, "must be a mapping", source)
            for sub in value:
                if sub not in allowed:
                    _fail(lines, f"{key}.{sub}", f"unknown field (allowed: {', '.join(sorted(allowed))})", source)
    for key in _REQUIRED:
        if key not in data:
            raise ProblemFileError(f"{source}: missing required field '{key}'")

    model = dict(data["model"])
    mtype = model.get("type")
    if mtype not in ("polynomial", "points", "logistic"):
        _fail(lines, "model.type", "must be one of polynomial, points, logistic", source)
    if "domain" in model:
        dom = model["domain"]
        if not (isinstance(dom, list) and len(dom) == 2 and all(map(_number, dom)) and dom[0] < dom[1]):
            _fail(lines, "model.domain", "must be [lo, hi] with lo < hi", source)
        model["domain"] = [float(v) for v in dom]
    if mtype == "polynomial":
        if "k" in model and "degree" in model:
            _fail(lines, "model.degree", "give either k or degree, not both", source)
        if "degree" in model:
            model["k"] = model.pop("degree") + 1 if isinstance(model["degree"], int) else None
        if not isinstance(model.get("k"), int) or isinstance(model.get("k"), bool) or model["k"] < 1:
            _fail(lines, "model.k", "polynomial models need a positive integer k (or degree)", source)
        for bad in ("theta_hat", "points"):
            if bad in model:
                _fail(lines, f"model.{bad}", "not used by polynomial models", source)
    elif mtype == "logistic":
        th = model.get("theta_hat")
        if not (isinstance(th, list) and len(th) == 3 and all(map(_number, th))):
            _fail(lines, "model.theta_hat", "logistic models need theta_hat: [t1, t2, t3]", source)
        if not any(th):
            _fail(lines, "model.theta_hat", "must be nonzero", source)
        if model.get("k", 3) != 3:
            _fail(lines, "model.k", "the quadratic logistic model has k = 3", source)
        model["k"] = 3
        model["theta_hat"] = [float(v) for v in th]
        for bad in ("points", "degree"):
            if bad in model:
                _fail(lines, f"model.{bad}", "not used by logistic models", source)
    else:
        pts = model.get("points")
        if not (isinstance(pts, list) and pts and all(isinstance(p, list) for p in pts)):
            _fail(lines, "model.points", "points models need a list of vectors", source)
        if len({len(p) for p in pts}) != 1 or not all(_number(v) for p in pts for v in p):
            _fail(lines, "model.points", "all points must be numeric with equal length", source)
        if model.get("k", len(pts[0])) != len(pts[0]):
            _fail(lines, "model.k", "k must equal the length of the points", source)
        model["k"] = len(pts[0])
        for bad in ("theta_hat", "degree", "domain"):
            if bad in model:
                _fail(lines, f"model.{bad}", "not used by points models", source)

    c = data["c"]
    if c == "turning_point":
        if mtype != "logistic":
            _fail(lines, "c", "turning_point is only defined for logistic models", source)
    elif isinstance(c, str):
        if not re.fullmatch(r"e\d+", c.strip()):
            _fail(lines, "c", "use e<j>, turning_point or a list of numbers", source)
    elif not (isinstance(c, list) and all(map(_number, c))):
        _fail(lines, "c", "use e<j>, turning_point or a list of numbers", source)

    output = {"format": "json", "precision": SIG_DIGITS}
    output.update(data.get("output", {}))
    if output["format"] not in ("json", "csv", "text"):
        _fail(lines, "output.format", "must be json, csv or text", source)
    if not isinstance(output["precision"], int) or not 1 <= output["precision"] <= 17:
        _fail(lines, "output.precision", "must be an integer in 1..17", source)

    pf = ProblemFile(
        model=model,
        c=c,
        optimizer=dict(data.get("optimizer", {})),
        tolerances=dict(data.get("tolerances", {})),
        output=output,
        source=source,
    )
    try:
        pf.spec()
    except DesignError as err:
        if isinstance(err, InvalidInputError):
            raise ProblemFileError(f"{source}: {err}") from None
        raise
    except (TypeError, ValueError) as err:
        raise ProblemFileError(f"{source}: {err}") from None
    return pf


def load_problem(path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ProblemFileError(f"{path}: {err.strerror}") from None
    return parse_problem(text, str(path))


def round_sig(obj, digits: int = SIG_DIGITS):
    """Round every float in a nested structure to ``digits`` significant digits."""
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_sig(obj.tolist(), digits)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{digits}g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_document(doc: dict, digits: int = SIG_DIGITS) -> str:
    return json.dumps(round_sig(doc, digits), indent=2) + "\n"
