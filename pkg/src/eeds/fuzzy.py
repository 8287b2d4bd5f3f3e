"""Mamdani fuzzy inference with MIN-MAX rules and centroid defuzzification.

A :class:`FuzzyInferenceSystem` is an immutable bundle of input variables, one
output variable and a rule base. Evaluation goes through four steps:

1. fuzzify every crisp input (clamped into its universe),
2. fire each rule with the MIN of its antecedent degrees,
3. clip each rule's consequent term at its firing strength and aggregate the
   clipped sets with a pointwise MAX over a uniform sampling of the output
   universe,
4. take the centroid of the aggregate.

Systems round-trip through plain JSON documents (see :func:`fis_to_dict`).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_SAMPLES = 1001
MIN_SAMPLES = 101
COVERAGE_SAMPLES = 2001

TRIANGULAR = "triangular"
TRAPEZOIDAL = "trapezoidal"
_ARITY = {TRIANGULAR: 3, TRAPEZOIDAL: 4}


class FuzzyConfigError(ValueError):
    """Malformed membership function, variable, or system."""


class FuzzyInputError(ValueError):
    """Bad crisp input handed to an inference call."""


@dataclass(frozen=True)
class MembershipFunction:
    kind: str
    points: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in _ARITY:
            raise FuzzyConfigError(f"unknown membership kind {self.kind!r}")
        pts = tuple(float(p) for p in self.points)
        if len(pts) != _ARITY[self.kind]:
            raise FuzzyConfigError(
                f"{self.kind} membership needs {_ARITY[self.kind]} breakpoints, got {len(pts)}"
            )
        if not all(math.isfinite(p) for p in pts):
            raise FuzzyConfigError(f"non-finite breakpoint in {pts}")
        if any(b < a for a, b in zip(pts, pts[1:])):
            raise FuzzyConfigError(f"breakpoints must be non-decreasing, got {pts}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def triangular(cls, a: float, b: float, c: float) -> "MembershipFunction":
        return cls(TRIANGULAR, (a, b, c))

    @classmethod
    def trapezoidal(cls, a: float, b: float, c: float, d: float) -> "MembershipFunction":
        return cls(TRAPEZOIDAL, (a, b, c, d))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """Breakpoints in trapezoid form (a, b, c, d); a triangle has b == c."""
        if self.kind == TRIANGULAR:
            a, b, c = self.points
            return a, b, b, c
        return self.points  # type: ignore[return-value]

    @property
    def support(self) -> tuple[float, float]:
        return self.points[0], self.points[-1]

    def __call__(self, x):
        if np.ndim(x) == 0:
            return eval_membership(self, float(x))
        return membership_array(self, np.asarray(x, dtype=float))

    def shifted(self, delta: float) -> "MembershipFunction":
        return MembershipFunction(self.kind, tuple(p + delta for p in self.points))


def eval_membership(mf: MembershipFunction, x: float) -> float:
    """Degree of ``x`` in ``mf``; piecewise linear, zero outside the support."""
    a, b, c, d = mf.corners
    if x < a or x > d:
        return 0.0
    if b <= x <= c:
        return 1.0
    if x < b:
        return (x - a) / (b - a)
    return (d - x) / (d - c)


def membership_array(mf: MembershipFunction, xs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`eval_membership`."""
    a, b, c, d = mf.corners
    out = np.zeros_like(xs, dtype=float)
    out[(xs >= b) & (xs <= c)] = 1.0
    rising = (xs >= a) & (xs < b)
    if b > a:
        out[rising] = (xs[rising] - a) / (b - a)
    falling = (xs > c) & (xs <= d)
    if d > c:
        out[falling] = (d - xs[falling]) / (d - c)
    return out


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    universe: tuple[float, float]
    terms: tuple[tuple[str, MembershipFunction], ...]
    unit: str = ""

    def __post_init__(self) -> None:
        lo, hi = (float(v) for v in self.universe)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise FuzzyConfigError(f"{self.name}: bad universe {self.universe}")
        object.__setattr__(self, "universe", (lo, hi))
        terms = tuple((str(n), mf) for n, mf in self.terms)
        if not terms:
            raise FuzzyConfigError(f"{self.name}: no terms")
        names = [n for n, _ in terms]
        if len(set(names)) != len(names):
            raise FuzzyConfigError(f"{self.name}: duplicate term names {names}")
        object.__setattr__(self, "terms", terms)
        for n, mf in terms:
            s_lo, s_hi = mf.support
            if s_lo < lo or s_hi > hi:
                raise FuzzyConfigError(
                    f"{self.name}.{n}: support [{s_lo}, {s_hi}] leaves universe [{lo}, {hi}]"
                )
        # partition completeness, checked on a dense grid plus every breakpoint
        xs = np.union1d(
            np.linspace(lo, hi, COVERAGE_SAMPLES),
            [p for _, mf in terms for p in mf.points],
        )
        if np.any(self.degrees_array(xs).max(axis=1) <= 0.0):
            raise FuzzyConfigError(f"{self.name}: terms do not cover the universe")

    @property
    def term_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.terms)

    def term(self, name: str) -> MembershipFunction:
        for n, mf in self.terms:
            if n == name:
                return mf
        raise KeyError(f"{self.name} has no term {name!r}")

    def clamp(self, x):
        lo, hi = self.universe
        return np.clip(x, lo, hi)

    def degrees_array(self, xs: np.ndarray) -> np.ndarray:
        """(len(xs), n_terms) matrix of degrees. No clamping."""
        return np.stack([membership_array(mf, xs) for _, mf in self.terms], axis=1)


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "antecedent", tuple((str(v), str(t)) for v, t in self.antecedent)
        )
        v, t = self.consequent
        object.__setattr__(self, "consequent", (str(v), str(t)))

    def __str__(self) -> str:
        conds = " AND ".join(f"{v} is {t}" for v, t in self.antecedent)
        return f"IF {conds} THEN {self.consequent[0]} is {self.consequent[1]}"


@dataclass(frozen=True)
class _CompiledRules:
    term_index: np.ndarray  # (n_rules, n_inputs) antecedent term index per input
    consequent: np.ndarray  # (n_rules,) output term index
    xs: np.ndarray  # output samples
    out_mu: np.ndarray  # (n_out_terms, n_samples)


@dataclass(frozen=True)
class FuzzyInferenceSystem:
    """A Mamdani controller.

    Rule references are not checked at construction so that a broken rule base
    can still be loaded and inspected with :func:`validate_rulebase`; inference
    on such a system raises :class:`FuzzyConfigError`.
    """

    name: str
    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: tuple[FuzzyRule, ...]
    defuzz_samples: int = DEFAULT_SAMPLES
    description: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        names = [v.name for v in self.inputs]
        if len(set(names)) != len(names):
            raise FuzzyConfigError(f"duplicate input variables {names}")
        if int(self.defuzz_samples) < MIN_SAMPLES:
            raise FuzzyConfigError(f"defuzz_samples must be >= {MIN_SAMPLES}")
        object.__setattr__(self, "defuzz_samples", int(self.defuzz_samples))

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.inputs)

    def variable(self, name: str) -> LinguisticVariable:
        for v in self.inputs:
            if v.name == name:
                return v
        if self.output.name == name:
            return self.output
        raise KeyError(name)

    @cached_property
    def _compiled(self) -> _CompiledRules:
        report = validate_rulebase(self)
        if report.dangling or report.malformed:
            raise FuzzyConfigError(
                f"{self.name}: rule base has bad references: "
                + "; ".join(report.dangling + report.malformed)
            )
        pos = {v.name: i for i, v in enumerate(self.inputs)}
        term_index = np.zeros((len(self.rules), len(self.inputs)), dtype=np.intp)
        consequent = np.zeros(len(self.rules), dtype=np.intp)
        out_names = self.output.term_names
        for r, rule in enumerate(self.rules):
            for var, term in rule.antecedent:
                term_index[r, pos[var]] = self.inputs[pos[var]].term_names.index(term)
            consequent[r] = out_names.index(rule.consequent[1])
        xs = output_samples(self.output.universe, self.defuzz_samples)
        out_mu = self.output.degrees_array(xs).T
        return _CompiledRules(term_index, consequent, xs, out_mu)

    def with_samples(self, n: int) -> "FuzzyInferenceSystem":
        return FuzzyInferenceSystem(
            self.name, self.inputs, self.output, self.rules, n, self.description
        )


def output_samples(universe: tuple[float, float], n: int) -> np.ndarray:
    lo, hi = universe
    return np.linspace(lo, hi, n)


def _crisp(x, what: str) -> float:
    try:
        value = float(x)
    except (TypeError, ValueError):
        raise FuzzyInputError(f"{what}: not a number: {x!r}") from None
    if not math.isfinite(value):
        raise FuzzyInputError(f"{what}: non-finite input {value}")
    return value


def fuzzify(var: LinguisticVariable, x: float) -> list[tuple[str, float]]:
    """Degrees of the (clamped) crisp value ``x`` in every term of ``var``."""
    value = float(var.clamp(_crisp(x, var.name)))
    return [(n, eval_membership(mf, value)) for n, mf in var.terms]


def _input_matrix(fis: FuzzyInferenceSystem, inputs: Mapping[str, float]) -> np.ndarray:
    expected = set(fis.input_names)
    got = set(inputs)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise FuzzyInputError(f"{fis.name}: missing inputs {missing}, unexpected {extra}")
    return np.array([[_crisp(inputs[n], n) for n in fis.input_names]])


def firing_strengths(fis: FuzzyInferenceSystem, X: np.ndarray) -> np.ndarray:
    """(n_points, n_rules) MIN-conjunction firing strengths for a batch of inputs.

    ``X`` has one column per input variable, in ``fis.inputs`` order.
    """
    comp = fis._compiled
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(fis.inputs):
        raise FuzzyInputError(f"{fis.name}: expected {len(fis.inputs)} input columns")
    if not np.all(np.isfinite(X)):
        raise FuzzyInputError(f"{fis.name}: non-finite input")
    strength = np.ones((X.shape[0], len(fis.rules)))
    for j, var in enumerate(fis.inputs):
        deg = var.degrees_array(var.clamp(X[:, j]))
        np.minimum(strength, deg[:, comp.term_index[:, j]], out=strength)
    return strength


def infer_batch(fis: FuzzyInferenceSystem, X: np.ndarray) -> np.ndarray:
    """Aggregated output sets, shape (n_points, defuzz_samples)."""
    comp = fis._compiled
    strength = firing_strengths(fis, X)
    n_terms = comp.out_mu.shape[0]
    # max over rules sharing a consequent, then clip each term once: same result
    # as clipping every rule separately because min/max distribute.
    per_term = np.zeros((strength.shape[0], n_terms))
    for t in range(n_terms):
        hit = comp.consequent == t
        if hit.any():
            per_term[:, t] = strength[:, hit].max(axis=1)
    clipped = np.minimum(per_term[:, :, None], comp.out_mu[None, :, :])
    return clipped.max(axis=1)


def infer(fis: FuzzyInferenceSystem, inputs: Mapping[str, float]) -> np.ndarray:
    """Sampled aggregate output set for one set of crisp inputs."""
    return infer_batch(fis, _input_matrix(fis, inputs))[0]


def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def defuzzify_centroid(aggregate, universe: tuple[float, float]):
    """Centre of mass of a uniformly sampled fuzzy set.

    Uses trapezoidal quadrature weights, so a piecewise-linear set integrates
    without the half-cell bias a plain sample sum has at the universe ends.
    An all-zero set defuzzifies to the universe midpoint. Accepts a single
    set or a 2-D batch (one set per row).
    """
    mu = np.asarray(aggregate, dtype=float)
    n = mu.shape[-1]
    if n < MIN_SAMPLES:
        raise FuzzyInputError(f"aggregate needs >= {MIN_SAMPLES} samples, got {n}")
    if np.any(mu < 0) or not np.all(np.isfinite(mu)):
        raise FuzzyInputError("aggregate must be finite and non-negative")
    lo, hi = universe
    xs = np.linspace(lo, hi, n)
    w = _trapezoid_weights(n)
    # row-wise sums rather than a matmul: BLAS reorders additions by batch
    # shape, and a score must not depend on how many sets are scored together
    mass = (mu * w).sum(axis=-1)
    moment = (mu * (w * xs)).sum(axis=-1)
    mid = 0.5 * (lo + hi)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(mass > 0, moment / np.where(mass > 0, mass, 1.0), mid)
    out = np.clip(out, lo, hi)
    return float(out) if out.ndim == 0 else out


def evaluate(fis: FuzzyInferenceSystem, inputs: Mapping[str, float]) -> float:
    return defuzzify_centroid(infer(fis, inputs), fis.output.universe)


def evaluate_batch(fis: FuzzyInferenceSystem, X: np.ndarray) -> np.ndarray:
    return defuzzify_centroid(infer_batch(fis, X), fis.output.universe)


# --- rule-base validation -------------------------------------------------


@dataclass
class RuleBaseReport:
    rule_count: int
    expected_count: int
    missing: list[tuple[tuple[str, str], ...]]
    duplicates: list[tuple[tuple[str, str], ...]]
    dangling: list[str]
    malformed: list[str]

    @property
    def complete(self) -> bool:
        return not self.missing and not self.dangling and not self.malformed

    @property
    def ok(self) -> bool:
        return self.complete and not self.duplicates

    def summary(self) -> str:
        lines = [
            f"rules: {self.rule_count} (grid size {self.expected_count})",
            f"complete: {'yes' if self.complete else 'no'}",
            f"duplicates: {len(self.duplicates)}",
        ]
        lines += [f"  missing: {_fmt_ante(a)}" for a in self.missing]
        lines += [f"  duplicate: {_fmt_ante(a)}" for a in self.duplicates]
        lines += [f"  dangling: {m}" for m in self.dangling]
        lines += [f"  malformed: {m}" for m in self.malformed]
        return "\n".join(lines)


def _fmt_ante(ante) -> str:
    return ", ".join(f"{v}={t}" for v, t in ante)


def validate_rulebase(fis: FuzzyInferenceSystem) -> RuleBaseReport:
    """Check grid completeness, duplicate antecedents and dangling references."""
    known = {v.name: set(v.term_names) for v in fis.inputs}
    order = {v.name: i for i, v in enumerate(fis.inputs)}
    dangling: list[str] = []
    malformed: list[str] = []
    seen: dict[tuple, int] = {}
    duplicates = []
    for i, rule in enumerate(fis.rules):
        bad = False
        names = [v for v, _ in rule.antecedent]
        for var, term in rule.antecedent:
            if var not in known:
                dangling.append(f"rule {i}: unknown input variable {var!r}")
                bad = True
            elif term not in known[var]:
                dangling.append(f"rule {i}: {var} has no term {term!r}")
                bad = True
        out_var, out_term = rule.consequent
        if out_var != fis.output.name:
            dangling.append(f"rule {i}: unknown output variable {out_var!r}")
            bad = True
        elif out_term not in fis.output.term_names:
            dangling.append(f"rule {i}: {out_var} has no term {out_term!r}")
            bad = True
        if len(set(names)) != len(names):
            malformed.append(f"rule {i}: input referenced more than once")
            bad = True
        elif set(names) != set(known) and not bad:
            malformed.append(f"rule {i}: antecedent does not cover every input")
            bad = True
        if bad:
            continue
        key = tuple(sorted(rule.antecedent, key=lambda p: order[p[0]]))
        if key in seen:
            duplicates.append(key)
        else:
            seen[key] = i
    grid = [
        tuple(zip(fis.input_names, combo))
        for combo in itertools.product(*(v.term_names for v in fis.inputs))
    ]
    missing = [a for a in grid if a not in seen]
    return RuleBaseReport(len(fis.rules), len(grid), missing, duplicates, dangling, malformed)


# --- standard layouts and rule generation -----------------------------------


def ruspini_terms(
    names: Sequence[str], universe: tuple[float, float] = (0.0, 1.0), shoulders: bool = True
) -> tuple[tuple[str, MembershipFunction], ...]:
    """Evenly spaced overlapping partition: term i peaks at the i-th grid point
    and falls to zero at its neighbours' peaks.

    With ``shoulders`` the two end terms are trapezoids saturating at the
    universe ends; otherwise every term is triangular.
    """
    k = len(names)
    if k < 2:
        raise FuzzyConfigError("need at least two terms")
    lo, hi = universe
    peaks = [lo + (hi - lo) * i / (k - 1) for i in range(k)]
    peaks[-1] = hi
    terms = []
    for i, name in enumerate(names):
        left = peaks[max(i - 1, 0)]
        right = peaks[min(i + 1, k - 1)]
        if shoulders and i == 0:
            mf = MembershipFunction.trapezoidal(lo, lo, lo, right)
        elif shoulders and i == k - 1:
            mf = MembershipFunction.trapezoidal(left, hi, hi, hi)
        else:
            mf = MembershipFunction.triangular(left, peaks[i], right)
        terms.append((name, mf))
    return tuple(terms)


def graded_rules(
    inputs: Sequence[LinguisticVariable],
    output: LinguisticVariable,
    reversed_inputs: Iterable[str] = (),
    invert: bool = False,
) -> tuple[FuzzyRule, ...]:
    """Full-grid rule base whose consequents follow a term-index score.

    Each antecedent term scores ``index / (n_terms - 1)`` (reversed for the
    variables in ``reversed_inputs``); a rule's score is the mean over inputs
    and selects output term ``floor(score * (n_out - 1) + 1/2)``. With
    ``invert`` the score is replaced by ``1 - score`` before the lookup. The
    result is monotone in every input by construction.
    """
    reversed_inputs = set(reversed_inputs)
    out_names = output.term_names
    top = len(out_names) - 1
    rules = []
    for combo in itertools.product(*(range(len(v.terms)) for v in inputs)):
        scores = []
        for var, idx in zip(inputs, combo):
            s = idx / (len(var.terms) - 1)
            scores.append(1.0 - s if var.name in reversed_inputs else s)
        score = sum(scores) / len(scores)
        if invert:
            score = 1.0 - score
        # tiny guard keeps exact halves from sliding down on representation error
        out_idx = min(top, int(math.floor(score * top + 0.5 + 1e-12)))
        ante = tuple((var.name, var.term_names[idx]) for var, idx in zip(inputs, combo))
        rules.append(FuzzyRule(ante, (output.name, out_names[out_idx])))
    return tuple(rules)


# --- JSON -------------------------------------------------------------------


def _mf_to_dict(mf: MembershipFunction) -> dict:
    return {"kind": mf.kind, "points": list(mf.points)}


def variable_to_dict(var: LinguisticVariable) -> dict:
    return {
        "name": var.name,
        "universe": list(var.universe),
        "unit": var.unit,
        "terms": [{"name": n, **_mf_to_dict(mf)} for n, mf in var.terms],
    }


def variable_from_dict(doc: Mapping) -> LinguisticVariable:
    try:
        terms = tuple(
            (t["name"], MembershipFunction(t["kind"], tuple(t["points"]))) for t in doc["terms"]
        )
        return LinguisticVariable(
            doc["name"], tuple(doc["universe"]), terms, doc.get("unit", "")
        )
    except (KeyError, TypeError) as exc:
        raise FuzzyConfigError(f"malformed variable document: {exc}") from None


def fis_to_dict(fis: FuzzyInferenceSystem) -> dict:
    return {
        "name": fis.name,
        "description": fis.description,
        "defuzz_samples": fis.defuzz_samples,
        "inputs": [variable_to_dict(v) for v in fis.inputs],
        "output": variable_to_dict(fis.output),
        "rules": [
            {"if": [list(p) for p in r.antecedent], "then": r.consequent[1]} for r in fis.rules
        ],
    }


def fis_from_dict(doc: Mapping) -> FuzzyInferenceSystem:
    try:
        output = variable_from_dict(doc["output"])
        rules = tuple(
            FuzzyRule(tuple(tuple(p) for p in r["if"]), (output.name, r["then"]))
            for r in doc["rules"]
        )
        return FuzzyInferenceSystem(
            name=doc.get("name", "fis"),
            inputs=tuple(variable_from_dict(v) for v in doc["inputs"]),
            output=output,
            rules=rules,
            defuzz_samples=doc.get("defuzz_samples", DEFAULT_SAMPLES),
            description=doc.get("description", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FuzzyConfigError):
            raise
        raise FuzzyConfigError(f"malformed rule-base document: {exc}") from None


def dump_fis(fis: FuzzyInferenceSystem | Mapping[str, FuzzyInferenceSystem], path) -> Path:
    """Write one system, or a named bundle of systems, as JSON."""
    if isinstance(fis, FuzzyInferenceSystem):
        doc = fis_to_dict(fis)
    else:
        doc = {"systems": {k: fis_to_dict(v) for k, v in fis.items()}}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def load_fis(path) -> dict[str, FuzzyInferenceSystem]:
    """Read a rule-base file; always returns a name -> system mapping."""
    doc = json.loads(Path(path).read_text())
    if "systems" in doc:
        return {k: fis_from_dict(v) for k, v in doc["systems"].items()}
    fis = fis_from_dict(doc)
    return {fis.name: fis}
