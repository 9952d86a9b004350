"""Compilation of generator expressions into forward-time control sequences.

Targets are expression trees over the available generator set: sums compile
through the splitting formula, brackets through the group-commutator word
(duration t meaning e^{[G1,G2] t}, realized with step sqrt(t)/n), negative
scalings by inverting the whole sub-word.  The refinement order n doubles
until a held-out verification meets the requested accuracy or the budget is
exhausted; sequences are only ever returned verification-gated.

Reversed segments are realized by a recurrence inverter (physical) or, for
oracle studies, kept signed and evaluated by exact inverses; in that case the
result is a SignedWord, never a ControlSequence.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .propagate import (ControlSequence, EvolutionTable, evolve, evolve_signed,
                        expm_skew, fidelity, realize_word, state_error)
from .recurrence import ExactInverter

EXACT = "exact"


# -- expression trees ---------------------------------------------------------


@dataclass(frozen=True)
class Gen:
    k: int

    def __str__(self):
        return f"H{self.k}"


@dataclass(frozen=True)
class Sum:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Bracket:
    left: object
    right: object

    def __str__(self):
        return f"[{self.left}, {self.right}]"


@dataclass(frozen=True)
class Scale:
    factor: float
    inner: object

    def __str__(self):
        return f"({self.factor} * {self.inner})"


GeneratorExpr = (Gen, Sum, Bracket, Scale)


def expr_from_dict(data) -> object:
    """Parse {'op': 'gen'|'sum'|'bracket'|'scale', ...} JSON trees."""
    if isinstance(data, int):
        return Gen(data)
    op = data["op"]
    if op == "gen":
        return Gen(int(data["k"]))
    if op == "sum":
        return Sum(expr_from_dict(data["left"]), expr_from_dict(data["right"]))
    if op == "bracket":
        return Bracket(expr_from_dict(data["left"]), expr_from_dict(data["right"]))
    if op == "scale":
        return Scale(float(data["factor"]), expr_from_dict(data["inner"]))
    raise ValueError(f"unknown expression op {op!r}")


def expr_indices(expr) -> set:
    if isinstance(expr, Gen):
        return {expr.k}
    if isinstance(expr, (Sum, Bracket)):
        return expr_indices(expr.left) | expr_indices(expr.right)
    if isinstance(expr, Scale):
        return expr_indices(expr.inner)
    raise TypeError(f"not a generator expression: {expr!r}")


def expr_matrix(expr, table: EvolutionTable) -> np.ndarray:
    """Effective generator of the expression (skew-hermitian matrix)."""
    if isinstance(expr, Gen):
        return table.matrix(expr.k)
    if isinstance(expr, Sum):
        return expr_matrix(expr.left, table) + expr_matrix(expr.right, table)
    if isinstance(expr, Bracket):
        A = expr_matrix(expr.left, table)
        B = expr_matrix(expr.right, table)
        return A @ B - B @ A
    if isinstance(expr, Scale):
        return expr.factor * expr_matrix(expr.inner, table)
    raise TypeError(f"not a generator expression: {expr!r}")


def build_word(expr, duration: float, n: int) -> tuple:
    """Signed time-ordered word realizing e^{G(expr) * duration} at order n."""
    if isinstance(expr, Gen):
        return ((expr.k, float(duration)),)
    if isinstance(expr, Scale):
        return build_word(expr.inner, expr.factor * duration, n)
    if isinstance(expr, Sum):
        step = duration / n
        rep = build_word(expr.left, step, n) + build_word(expr.right, step, n)
        return rep * n
    if isinstance(expr, Bracket):
        left, right = expr.left, expr.right
        if duration < 0:
            left, right = right, left  # [A,B](-t) = [B,A] t
            duration = -duration
        s = math.sqrt(duration) / n
        rep = (build_word(right, s, n) + build_word(left, s, n)
               + build_word(right, -s, n) + build_word(left, -s, n))
        return rep * (n * n)
    raise TypeError(f"not a generator expression: {expr!r}")


# -- compilation ---------------------------------------------------------------


class CompileBudgetError(RuntimeError):
    def __init__(self, best_n, best_distance, epsilon):
        self.best_n = best_n
        self.best_distance = best_distance
        self.epsilon = epsilon
        super().__init__(
            f"budget exhausted: best distance {best_distance:.3e} at n={best_n} "
            f"(needed < {epsilon:.3e})"
        )


@dataclass(frozen=True)
class SignedWord:
    """Oracle word with signed durations; evaluable, not physically executable."""

    segments: tuple
    provenance: str = ""

    def __len__(self):
        return len(self.segments)


@dataclass
class CompileResult:
    sequence: object  # ControlSequence (physical) or SignedWord (oracle)
    n: int
    distance: float
    fidelity: float
    plans: dict = field(default_factory=dict)

    @property
    def physical(self) -> bool:
        return isinstance(self.sequence, ControlSequence)


def compile_sequence(expr, t: float, epsilon: float, n_budget: int, inverter,
                     psi0: np.ndarray, reps, verify_states: Sequence | None = None) -> CompileResult:
    """Compile e^{G(expr) t} psi0 to accuracy epsilon by doubling n.

    ``inverter`` realizes reversed segments: a recurrence inverter yields a
    physical ControlSequence; the ExactInverter keeps the word signed and
    evaluates reversed segments by exact inverses (oracle studies only).
    Verification is held out: the returned object met epsilon on psi0 and
    every extra verification state.  A finite-net inverter's net states are
    verified automatically unless ``verify_states`` overrides them.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if n_budget < 1:
        raise ValueError("n_budget must be >= 1")
    table = reps if isinstance(reps, EvolutionTable) else EvolutionTable(reps)
    psi0 = np.asarray(psi0, dtype=complex)
    if verify_states is None:
        verify_states = getattr(inverter, "net", None)
    states = [psi0] + [np.asarray(v, dtype=complex) for v in (verify_states or [])]

    G = expr_matrix(expr, table)
    targets = [expm_skew(G, t) @ v for v in states]

    exact = isinstance(inverter, ExactInverter) or getattr(inverter, "physical", True) is False
    best_n, best_distance = None, math.inf
    n = 1
    while n <= n_budget:
        word = build_word(expr, t, n)
        plans: dict = {}
        if exact:
            if all(s >= 0 for _, s in word):
                seq = ControlSequence(tuple(word), provenance=f"{expr} @ t={t}, n={n}")
            else:
                seq = SignedWord(tuple(word), provenance=f"{expr} @ t={t}, n={n} (oracle)")
            outs = [evolve_signed(word, v, table) for v in states]
        else:
            if any(s < 0 for _, s in word):
                segments, plans = realize_word(word, inverter)
                seq = ControlSequence(segments, provenance=f"{expr} @ t={t}, n={n}")
            else:
                seq = ControlSequence(tuple(word), provenance=f"{expr} @ t={t}, n={n}")
            outs = [evolve(seq, v, table) for v in states]
        distance = max(state_error(o, tgt) for o, tgt in zip(outs, targets))
        if distance < best_distance:
            best_n, best_distance = n, distance
        if distance <= epsilon:
            return CompileResult(seq, n, distance, fidelity(outs[0], targets[0]), plans)
        n *= 2
    raise CompileBudgetError(best_n, best_distance, epsilon)


def verify(seq, psi0: np.ndarray, target, reps, t: float | None = None):
    """Distance and fidelity of the executed sequence against a target.

    ``target`` is either a state vector or a generator expression (then ``t``
    gives the duration and the oracle state is e^{G t} psi0).
    """
    table = reps if isinstance(reps, EvolutionTable) else EvolutionTable(reps)
    psi0 = np.asarray(psi0, dtype=complex)
    if isinstance(target, GeneratorExpr):
        if t is None:
            raise ValueError("generator targets need a duration t")
        target_state = expm_skew(expr_matrix(target, table), t) @ psi0
    else:
        target_state = np.asarray(target, dtype=complex)
    if isinstance(seq, SignedWord):
        out = evolve_signed(seq.segments, psi0, table)
    elif isinstance(seq, ControlSequence):
        out = evolve(seq, psi0, table)
    else:
        out = evolve_signed(tuple(seq), psi0, table)
    distance = state_error(out, target_state)
    fid = fidelity(out, target_state)
    gram = 2.0 - 2.0 * float(np.real(np.vdot(out, target_state)))
    if abs(distance * distance - gram) > 1e-9:
        raise AssertionError("distance/overlap identity violated")
    return distance, fid


# -- reachability reports -------------------------------------------------------


@dataclass
class TargetRecord:
    label: str
    status: str
    n: int | None = None
    distance: float | None = None
    fidelity: float | None = None
    segments: int | None = None
    wall_time: float = 0.0
    error: str | None = None
    plans: list = field(default_factory=list)
    sequence: dict | None = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "status": self.status,
            "n": self.n,
            "distance": self.distance,
            "fidelity": self.fidelity,
            "segments": self.segments,
            "wall_time": self.wall_time,
            "error": self.error,
            "plans": self.plans,
            "sequence": self.sequence,
        }


@dataclass
class ReachabilityReport:
    records: list
    epsilon: float

    @property
    def all_ok(self) -> bool:
        return all(r.status == "ok" for r in self.records)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "all_ok": self.all_ok,
            "targets": [r.to_dict() for r in self.records],
        }

    def summary_rows(self):
        head = ["label", "status", "n", "segments", "distance", "fidelity", "wall_time"]
        rows = [head]
        for r in self.records:
            rows.append([r.label, r.status, r.n, r.segments,
                         r.distance, r.fidelity, round(r.wall_time, 4)])
        return rows


def reachability_report(reps, psi0: np.ndarray, targets: Sequence, epsilon: float,
                        n_budget: int, inverter, verify_states: Sequence | None = None,
                        jobs: int = 1) -> ReachabilityReport:
    """Compile every (expr, t) target and record the achieved accuracy.

    Per-target failures (budget, inverter) are captured in the report rather
    than raised; the report is always emitted.
    """
    table = reps if isinstance(reps, EvolutionTable) else EvolutionTable(reps)
    targets = list(targets)

    def run(item):
        expr, t = item
        rec = TargetRecord(label=f"{expr} @ t={t}", status="ok")
        start = time.monotonic()
        try:
            result = compile_sequence(expr, t, epsilon, n_budget, inverter,
                                      psi0, table, verify_states)
            rec.n = result.n
            rec.distance = result.distance
            rec.fidelity = result.fidelity
            rec.segments = len(result.sequence)
            rec.plans = [p.to_dict() for p in result.plans.values()]
            if result.physical:
                rec.sequence = result.sequence.to_dict()
        except (CompileBudgetError, RuntimeError, ValueError) as exc:
            rec.status = "failed"
            rec.error = str(exc)
            if isinstance(exc, CompileBudgetError):
                rec.n = exc.best_n
                rec.distance = exc.best_distance
        rec.wall_time = time.monotonic() - start
        return rec

    if jobs > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run, targets))
    else:
        records = [run(item) for item in targets]
    return ReachabilityReport(records, epsilon)
