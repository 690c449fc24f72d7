"""Problem files and deterministic report output."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import expr as ex
from . import problems
from .errors import ValidationError
from .mde import ProblemDef, SolveSettings
from .regulated import Integrator

_NUM = {"type": "number"}
_INTERVAL = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

PROBLEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "T", "f", "g", "h", "lambda", "omega"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "f": {"type": "array", "items": {"type": "string"}},
        "g": {"type": "array", "items": {"type": "string"}},
        "h": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "density": {"type": "string"},
                "jumps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["t", "size"],
                        "properties": {"t": _NUM, "size": _NUM},
                    },
                },
                "T": _NUM,
            },
        },
        "lambda": _INTERVAL,
        "omega": {"type": "array", "items": _INTERVAL},
        "settings": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rk_tol": {"type": "number", "exclusiveMinimum": 0},
                "bisect_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_step": {"type": "number", "exclusiveMinimum": 0},
                "domain_check": {"type": "boolean"},
            },
        },
        "description": {"type": "string"},
        "reference_x0": {"type": "array", "items": _NUM},
    },
}

DEFAULT_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class ProblemFile:
    problem: ProblemDef
    settings: SolveSettings = SolveSettings()
    bisect_tol: float = DEFAULT_BISECT_TOL


def problem_from_dict(doc: dict) -> ProblemFile:
    """Validate ``doc`` against the schema and build the problem."""
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"problem file invalid at {where}: {exc.message}") from None
    T = float(doc["T"])
    hd = dict(doc["h"])
    if "T" in hd and float(hd["T"]) != T:
        raise ValidationError(f"h.T={hd['T']!r} differs from T={T!r}")
    hd["T"] = T
    h = Integrator.from_dict(hd)
    p = ProblemDef.from_strings(
        n=doc["n"], T=T, f=doc["f"], g=doc["g"], h=h,
        lambda_interval=doc["lambda"], omega_box=doc["omega"],
        description=doc.get("description", ""), reference_x0=doc.get("reference_x0"),
    )
    st = doc.get("settings", {})
    settings = SolveSettings(
        rk_tol=st.get("rk_tol", SolveSettings.rk_tol),
        max_step=st.get("max_step", math.inf),
        domain_check=st.get("domain_check", True),
    )
    return ProblemFile(p, settings, st.get("bisect_tol", DEFAULT_BISECT_TOL))


def problem_to_dict(pf: ProblemFile | ProblemDef) -> dict:
    if isinstance(pf, ProblemDef):
        pf = ProblemFile(pf)
    p, s = pf.problem, pf.settings
    settings = {"rk_tol": s.rk_tol, "bisect_tol": pf.bisect_tol, "domain_check": s.domain_check}
    if math.isfinite(s.max_step):
        settings["max_step"] = s.max_step
    doc = {
        "n": p.n,
        "T": p.T,
        "f": [ex.to_string(e) for e in p.f],
        "g": [ex.to_string(e) for e in p.g],
        "h": p.h.to_dict(),
        "lambda": list(p.lambda_interval),
        "omega": [list(b) for b in p.omega_box],
        "settings": settings,
        "description": p.description,
    }
    if p.reference_x0 is not None:
        doc["reference_x0"] = list(p.reference_x0)
    return doc


def load_problem(source: str, params: dict | None = None) -> ProblemFile:
    """Registry name or path to a JSON problem file."""
    params = params or {}
    if source in problems.REGISTRY:
        return ProblemFile(problems.get(source, **params))
    if params:
        raise ValidationError("--param only applies to built-in problems")
    path = Path(source)
    if not path.is_file():
        raise ValidationError(
            f"{source!r} is neither a built-in problem ({', '.join(problems.REGISTRY)}) nor a file"
        )
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}: not valid JSON ({exc})") from None
    return problem_from_dict(doc)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        s = format(v, ".17g")
        if "e" not in s and "." not in s and "n" not in s:
            s += ".0"
        return s
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_fmt(v) for v in seq) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _fmt(obj)


def write_text(path: str | os.PathLike, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")
