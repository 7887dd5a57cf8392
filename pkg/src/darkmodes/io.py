"""
JSON system descriptions, interconnection recipes and analysis reports.

System description::

    {
      "title": "...", "notes": "...",
      "n": 3, "n1": 2, "labels": ["a1", "a2", "m"],
      "G": [[...], ...]                      # or
      "G_summands": {"G_D": ..., "G_N": ..., "G_int": ...},
      "couplings": [[[re, im], ...], ...],   # one list of 2n complex entries per channel
      "tolerance": 1e-10                     # optional symmetry tolerance
    }

Recipe::

    {"kind": "cascade" | "direct" | "feedback1" | "cross_feedback",
     "operands": [<description or relative path>, <description or relative path>],
     "G_int": [[...]],                        # direct only
     "ports": {"plant": [[0], [1]]} | {"sys1": [[0], [1]], "sys2": [[0], [1]]},
     "title": "...", "notes": "..."}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .decomposition import (
    ModeDecomposition,
    check_dark_condition,
    check_invariance_condition,
    decompose,
    pbh_oracle,
)
from .errors import DarkModeError, InvalidInputError
from .model import QuantumLinearSystem, build_system
from .symplectic import DEFAULT_TOLERANCES, Tolerances, max_abs
from .synthesis import InterconnectionSpec, KINDS, interconnect

SIG_DIGITS = 12

EXIT_DARK = 0
EXIT_INPUT = 1
EXIT_NOT_DARK = 2
EXIT_NO_CANDIDATES = 3
EXIT_UNSTABLE = 4

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["n", "couplings"],
    "properties": {
        "title": {"type": "string"},
        "notes": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "n1": {"type": "integer", "minimum": 1},
        "labels": {"type": "array", "items": {"type": "string"}},
        "G": _MATRIX,
        "G_summands": {
            "type": "object",
            "required": ["G_D", "G_int"],
            "properties": {"G_D": _MATRIX, "G_N": _MATRIX, "G_int": _MATRIX},
            "additionalProperties": False,
        },
        "couplings": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
        "tolerance": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    "oneOf": [{"required": ["G"]}, {"required": ["G_summands"]}],
    "additionalProperties": False,
}

_PORT = {"type": "array", "items": {"type": "integer", "minimum": 0}}
RECIPE_SCHEMA = {
    "type": "object",
    "required": ["kind", "operands"],
    "properties": {
        "title": {"type": "string"},
        "notes": {"type": "string"},
        "kind": {"enum": list(KINDS)},
        "operands": {
            "type": "array", "minItems": 2, "maxItems": 2,
            "items": {"anyOf": [{"type": "string"}, {"type": "object"}]},
        },
        "G_int": _MATRIX,
        "ports": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": _PORT, "minItems": 2, "maxItems": 2},
        },
    },
    "additionalProperties": False,
}


class DescriptionError(InvalidInputError):
    """Invalid description or recipe file; the message names the offending field."""


def _validate(doc, schema, source):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DescriptionError(f"{source}: field '{where}': {exc.message}") from None


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DescriptionError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptionError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


@dataclass(eq=False)
class SystemDescription:
    n: int
    couplings: np.ndarray  # complex, shape (m, 2n)
    G: np.ndarray | None = None
    summands: dict | None = None
    n1: int | None = None
    labels: list[str] | None = None
    title: str = ""
    notes: str = ""
    tolerance: float | None = None
    source: str = field(default="<memory>", repr=False)

    @classmethod
    def from_dict(cls, doc: dict, source: str = "<memory>") -> "SystemDescription":
        _validate(doc, SYSTEM_SCHEMA, source)
        n = doc["n"]
        dim = 2 * n

        def matrix(value, where):
            M = np.array(value, dtype=float)
            if M.shape != (dim, dim):
                raise DescriptionError(f"{source}: field '{where}': expected {dim}x{dim} matrix, got shape {M.shape}")
            return M

        G = matrix(doc["G"], "G") if "G" in doc else None
        summands = None
        if "G_summands" in doc:
            summands = {k: matrix(v, f"G_summands/{k}") for k, v in doc["G_summands"].items()}
        rows = []
        for i, c in enumerate(doc["couplings"]):
            if len(c) != dim:
                raise DescriptionError(f"{source}: field 'couplings/{i}': expected {dim} entries, got {len(c)}")
            rows.append([complex(re, im) for re, im in c])
        couplings = np.array(rows, dtype=complex).reshape(len(rows), dim)
        labels = doc.get("labels")
        if labels is not None and len(labels) != n:
            raise DescriptionError(f"{source}: field 'labels': expected {n} labels, got {len(labels)}")
        n1 = doc.get("n1")
        if n1 is not None and n1 > n:
            raise DescriptionError(f"{source}: field 'n1': {n1} exceeds n = {n}")
        if summands is not None and n1 is None:
            raise DescriptionError(f"{source}: field 'n1': required when G_summands is given")
        return cls(
            n=n, couplings=couplings, G=G, summands=summands, n1=n1, labels=labels,
            title=doc.get("title", ""), notes=doc.get("notes", ""),
            tolerance=doc.get("tolerance"), source=source,
        )

    def to_dict(self) -> dict:
        doc = {}
        if self.title:
            doc["title"] = self.title
        if self.notes:
            doc["notes"] = self.notes
        doc["n"] = self.n
        if self.n1 is not None:
            doc["n1"] = self.n1
        if self.labels is not None:
            doc["labels"] = list(self.labels)
        if self.G is not None:
            doc["G"] = self.G.tolist()
        if self.summands is not None:
            doc["G_summands"] = {k: v.tolist() for k, v in self.summands.items()}
        doc["couplings"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.couplings]
        if self.tolerance is not None:
            doc["tolerance"] = self.tolerance
        return doc

    def to_system(self, tol: Tolerances | None = None) -> QuantumLinearSystem:
        if tol is None:
            tol = Tolerances(zero_abs=self.tolerance) if self.tolerance else DEFAULT_TOLERANCES
        s = self.summands or {}
        try:
            return build_system(
                self.G, list(self.couplings), self.n1,
                G_D=s.get("G_D"), G_N=s.get("G_N"), G_int=s.get("G_int"),
                labels=tuple(self.labels or ()), tol=tol,
            )
        except DarkModeError as exc:
            raise DescriptionError(f"{self.source}: {exc}") from None

    @classmethod
    def from_system(cls, sys: QuantumLinearSystem, title="", notes="", summands=None) -> "SystemDescription":
        """Describe `sys`; summands are written when the partition is a proper split."""
        if summands is None and sys.has_summands and sys.n1 < sys.n:
            summands = {"G_D": sys.G_D, "G_N": sys.G_N, "G_int": sys.G_int}
        default_labels = tuple(str(i + 1) for i in range(sys.n))
        return cls(
            n=sys.n, couplings=sys.couplings, G=None if summands else sys.G, summands=summands,
            n1=sys.n1, labels=None if sys.labels == default_labels else list(sys.labels),
            title=title, notes=notes,
        )


def load_description(path) -> SystemDescription:
    return SystemDescription.from_dict(_read_json(path), source=str(path))


def write_description(desc: SystemDescription, path=None) -> str:
    text = json.dumps(desc.to_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_system(path, tol: Tolerances | None = None) -> QuantumLinearSystem:
    return load_description(path).to_system(tol)


@dataclass(eq=False)
class Recipe:
    spec: InterconnectionSpec
    title: str = ""
    notes: str = ""


def load_recipe(path, tol: Tolerances = DEFAULT_TOLERANCES) -> Recipe:
    path = Path(path)
    doc = _read_json(path)
    _validate(doc, RECIPE_SCHEMA, str(path))
    operands = []
    for i, op in enumerate(doc["operands"]):
        if isinstance(op, str):
            operands.append(load_description(path.parent / op).to_system(tol))
        else:
            operands.append(SystemDescription.from_dict(op, f"{path}: operands/{i}").to_system(tol))
    G_int = np.array(doc["G_int"], dtype=float) if "G_int" in doc else None
    if doc["kind"] == "direct" and G_int is None:
        raise DescriptionError(f"{path}: field 'G_int': required for direct coupling")
    ports = {k: tuple(tuple(p) for p in v) for k, v in doc.get("ports", {}).items()}
    try:
        spec = InterconnectionSpec(doc["kind"], tuple(operands), G_int, ports or None)
    except DarkModeError as exc:
        raise DescriptionError(f"{path}: {exc}") from None
    return Recipe(spec, doc.get("title", ""), doc.get("notes", ""))


def synthesize(recipe: Recipe, tol: Tolerances = DEFAULT_TOLERANCES) -> SystemDescription:
    sys = interconnect(recipe.spec, tol)
    return SystemDescription.from_system(sys, title=recipe.title, notes=recipe.notes)


# ---------------------------------------------------------------- reports


def num(x):
    """Round to the report precision, recursing into containers."""
    if isinstance(x, dict):
        return {k: num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [num(v) for v in x]
    if isinstance(x, np.ndarray):
        return num(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not np.isfinite(x) else float(f"{x:.{SIG_DIGITS}g}")
    return x


def quadrature_names(labels) -> list[str]:
    return [f"{q}{lab}" for lab in labels for q in ("x", "p")]


def mode_expression(vec, labels, cutoff=1e-12) -> str:
    terms = []
    for c, name in zip(vec, quadrature_names(labels)):
        if abs(c) <= cutoff:
            continue
        mag = f"{abs(c):.{SIG_DIGITS}g}"
        sign = "-" if c < 0 else "+"
        terms.append((sign, f"{mag} {name}"))
    if not terms:
        return "0"
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, t in terms[1:]:
        out += f" {sign} {t}"
    return out


def _condition_dict(rep):
    return {
        "verdict": rep.verdict,
        "holds": rep.holds,
        "residual": rep.residual,
        "threshold": rep.threshold,
        "diagnostics": rep.diagnostics,
    }


def analyze(sys: QuantumLinearSystem, tol: Tolerances = DEFAULT_TOLERANCES, oracle: bool = False,
            title: str = "") -> dict:
    """Full analysis report as a JSON-ready dict; ``report['exit_code']`` follows the CLI contract."""
    dec = decompose(sys, tol)
    dark = check_dark_condition(dec, tol=tol)
    inv = check_invariance_condition(dec, tol=tol)
    if not dec.has_candidates:
        status, code = "no-candidates", EXIT_NO_CANDIDATES
    elif dark.holds:
        status, code = "dark-modes-verified", EXIT_DARK
    else:
        status, code = "dark-condition-failed", EXIT_NOT_DARK
    k = 2 * sys.n1
    modes = []
    D_cols = np.hstack([dec.P1, dec.P2[:, : dec.q]])
    for i, (label, vec) in enumerate(zip(dec.labels, D_cols.T)):
        modes.append({
            "index": i,
            "label": label,
            "coefficients": vec[:k],
            "expression": mode_expression(vec, sys.labels),
        })
    X = np.vstack([sys.C[:, :k], sys.G_int[:k, :].T])
    report = {
        "title": title,
        "n": sys.n,
        "m": sys.m,
        "n1": sys.n1,
        "labels": list(sys.labels),
        "tolerances": {
            "rank_rel": tol.rank_threshold((2 * X.shape[0], X.shape[1])),
            "zero_abs": tol.zero_abs,
        },
        "rank": dec.q,
        "dark_candidate_count": dec.dark_candidate_count,
        "rank_marginal": dec.rank_marginal,
        "singular_values": dec.singular_values,
        "status": status,
        "exit_code": code,
        "dark_condition": _condition_dict(dark),
        "invariance_condition": _condition_dict(inv),
        "modes": modes,
        "T": dec.T,
        "P1": dec.P1,
        "P2": dec.P2,
        "oracle": None,
    }
    if oracle:
        report["oracle"] = oracle_check(dec, tol, dark.holds)
    return num(report)


def oracle_check(dec: ModeDecomposition, tol: Tolerances, verified: bool) -> dict:
    res = pbh_oracle(dec.system, tol)
    resid = res.projection_residual(dec.P1) if verified else 0.0
    threshold = max(1e-8, tol.zero_abs)
    return {
        "dimension": res.dimension,
        "controllable_dim": res.controllable_dim,
        "observable_dim": res.observable_dim,
        "checked_modes": dec.dark_candidate_count if verified else 0,
        "max_projection_residual": resid,
        "threshold": threshold,
        "consistent": bool(resid <= threshold),
    }


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def format_text(report: dict) -> str:
    lines = []
    if report.get("title"):
        lines.append(report["title"])
    lines.append(f"oscillators n = {report['n']}, channels m = {report['m']}, subsystem D = first {report['n1']}")
    lines.append(
        f"P-matrix rank q = {report['rank']}, dark candidates = {report['dark_candidate_count']}"
        + ("  [rank-marginal]" if report["rank_marginal"] else "")
    )
    lines.append(f"status: {report['status']} (exit {report['exit_code']})")
    for key, name in (("dark_condition", "dark condition P1^T G_D P2 = 0"),
                      ("invariance_condition", "invariance condition P1^T G_D = 0")):
        c = report[key]
        lines.append(
            f"{name}: {c['verdict']}  residual {_fmt(c['residual'])}  threshold {_fmt(c['threshold'])}"
        )
    lines.append("modes of subsystem D:")
    for mode in report["modes"]:
        lines.append(f"  [{mode['label']}] {mode['expression']}")
    if report["oracle"] is not None:
        o = report["oracle"]
        lines.append(
            f"oracle: uncontrollable & unobservable dimension {o['dimension']}, "
            f"projection residual {_fmt(o['max_projection_residual'])}, "
            f"{'consistent' if o['consistent'] else 'INCONSISTENT'}"
        )
    return "\n".join(lines) + "\n"


def max_dark_deviation(trajectories, k: int) -> tuple[float, float]:
    """Largest difference of the first `k` transformed coordinates across trajectories."""
    ref = trajectories[0]
    dm = dv = 0.0
    for tr in trajectories[1:]:
        n = min(len(ref.times), len(tr.times))
        dm = max(dm, max_abs(ref.means[:n, :k] - tr.means[:n, :k]))
        dv = max(dv, max_abs(ref.covariances[:n, :k, :k] - tr.covariances[:n, :k, :k]))
    return dm, dv
