"""Coupled-oscillator chains: interaction Hamiltonians, control systems, and
the end-to-end indirect-controllability demonstration.

The pair interaction between modes i and j with spring constant omega is

    H_ij = p_i^2 + q_i^2 + p_j^2 + q_j^2 + omega (p_i - p_j)^2 + omega (q_i - q_j)^2,

the always-on drift is sum a_ij H_ij over the coupling graph, and local
controls act on designated sites.  Controllability spreads along coupling
edges by the propagation criterion of :mod:`recurq.weyl`: if the capped local
algebra at one end of an edge together with one coupling bracket spans the
capped pair algebra, the next mode's local algebra becomes available there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import weyl
from .fock import TruncationSpec, represent
from .propagate import EvolutionTable
from .synth import reachability_report
from .weyl import (FAILS, PROPAGATES, UNKNOWN, PolyOp, as_hermitian,
                   algebraic_propagation_check, const, lie_closure,
                   local_skew_generators, p, q, skew_generator)

DEFAULT_CONTROL_POWERS = (1, 2, 3)  # q, q^2, q^3 plus p on each control site


@dataclass(frozen=True)
class ChainSpec:
    """Geometry and control layout of a coupled-oscillator chain."""

    n_modes: int
    omega: float
    couplings: tuple  # ((i, j, a_ij), ...) with i < j, a_ij >= 0
    control_sites: tuple
    control_degree_cap: int = 3

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        seen = set()
        cleaned = []
        for i, j, a in self.couplings:
            i, j, a = int(i), int(j), float(a)
            if i == j:
                raise ValueError("self-coupling a_ii is not allowed")
            if a < 0:
                raise ValueError("coupling strengths must be >= 0")
            i, j = min(i, j), max(i, j)
            if i < 0 or j >= self.n_modes:
                raise ValueError("coupling mode index out of range")
            if (i, j) in seen:
                raise ValueError(f"duplicate coupling ({i}, {j})")
            seen.add((i, j))
            cleaned.append((i, j, a))
        object.__setattr__(self, "couplings", tuple(sorted(cleaned)))
        sites = tuple(sorted(int(s) for s in set(self.control_sites)))
        if any(not 0 <= s < self.n_modes for s in sites):
            raise ValueError("control site out of range")
        object.__setattr__(self, "control_sites", sites)
        if self.control_degree_cap < 1:
            raise ValueError("control_degree_cap must be >= 1")

    @property
    def edges(self):
        return tuple((i, j) for i, j, a in self.couplings if a > 0)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "omega": self.omega,
            "couplings": [list(c) for c in self.couplings],
            "control_sites": list(self.control_sites),
            "control_degree_cap": self.control_degree_cap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChainSpec":
        return cls(
            n_modes=int(data["n_modes"]),
            omega=float(data["omega"]),
            couplings=tuple(tuple(c) for c in data["couplings"]),
            control_sites=tuple(data["control_sites"]),
            control_degree_cap=int(data.get("control_degree_cap", 3)),
        )


def coupling_hamiltonian(i: int, j: int, omega: float, n_modes: int | None = None) -> PolyOp:
    """Rotating-wave pair interaction between modes i and j."""
    if i == j:
        raise ValueError("coupling requires two distinct modes")
    m = n_modes if n_modes is not None else max(i, j) + 1
    qi, pi, qj, pj = q(i, m), p(i, m), q(j, m), p(j, m)
    H = pi * pi + qi * qi + pj * pj + qj * qj
    dp = pi - pj
    dq = qi - qj
    H = H + omega * (dp * dp) + omega * (dq * dq)
    return as_hermitian(H)


def drift(spec: ChainSpec) -> PolyOp:
    """Always-on interaction sum a_ij H_ij over the coupling graph."""
    total = const(0.0, spec.n_modes)
    for i, j, a in spec.couplings:
        if a == 0.0:
            continue
        total = total + a * coupling_hamiltonian(i, j, spec.omega, spec.n_modes)
    return as_hermitian(total)


def local_controls(spec: ChainSpec):
    """Per-site control polynomials: p plus q-powers up to the degree cap."""
    out = []
    for site in spec.control_sites:
        qs = q(site, spec.n_modes)
        out.append((f"p{site + 1}", p(site, spec.n_modes)))
        power = const(1.0, spec.n_modes)
        for k in DEFAULT_CONTROL_POWERS:
            if k > spec.control_degree_cap:
                break
            power = qs if k == 1 else power * qs
            label = f"q{site + 1}" + (f"^{k}" if k > 1 else "")
            out.append((label, as_hermitian(power)))
    return out


def control_system(spec: ChainSpec):
    """Directly implementable skew generators: drift alone and drift + control.

    Returns ``(labels, generators)``; every generator is the drift plus at
    most one local control, converted to skew-hermitian form.
    """
    if not spec.control_sites:
        raise ValueError("control sites must be nonempty")
    H0 = drift(spec)
    labels = ["drift"]
    gens = [skew_generator(H0)]
    for label, ctrl in local_controls(spec):
        labels.append(f"drift+{label}")
        gens.append(skew_generator(as_hermitian(H0 + ctrl)))
    return labels, gens


# -- propagation of controllability along the graph ---------------------------


@dataclass
class EdgeVerdict:
    edge: tuple
    verdict: str
    closure_dim: int
    missing: int

    def to_dict(self) -> dict:
        return {
            "edge": list(self.edge),
            "verdict": self.verdict,
            "closure_dim": self.closure_dim,
            "missing_targets": self.missing,
        }


@dataclass
class ChainControllabilityReport:
    spec: ChainSpec
    degree_cap: int
    edge_verdicts: list
    unreachable_modes: tuple
    site_closure_dims: dict = field(default_factory=dict)

    @property
    def controllable(self) -> bool:
        return (not self.unreachable_modes
                and bool(self.edge_verdicts)
                and all(v.verdict == PROPAGATES for v in self.edge_verdicts))

    @property
    def verdict(self) -> str:
        if self.controllable:
            return PROPAGATES
        if any(v.verdict == UNKNOWN for v in self.edge_verdicts):
            return UNKNOWN
        return FAILS

    def to_dict(self) -> dict:
        return {
            "chain": self.spec.to_dict(),
            "degree_cap": self.degree_cap,
            "verdict": self.verdict,
            "controllable": self.controllable,
            "edges": [v.to_dict() for v in self.edge_verdicts],
            "unreachable_modes": list(self.unreachable_modes),
            "site_closure_dims": {str(k): v for k, v in self.site_closure_dims.items()},
        }


def chain_controllability(spec: ChainSpec, degree_cap: int = 4,
                          dim_cap: int = 256) -> ChainControllabilityReport:
    """Edge-by-edge propagation verdicts from the control sites outward.

    Each coupling edge (u, v) reached in breadth-first order from a control
    site is tested with the capped single-mode generating set at u; the
    overall verdict is "propagates on every edge of a spanning structure".
    The per-site closure dimension of the bare controls (with the drift terms
    local to that site) is reported alongside as context, not as part of the
    verdict.
    """
    if not spec.control_sites:
        raise ValueError("control sites must be nonempty")
    adjacency: dict = {m: [] for m in range(spec.n_modes)}
    for i, j in spec.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)

    site_dims = {}
    H0 = drift(spec)
    for site in spec.control_sites:
        gens = [skew_generator(ctrl) for _, ctrl in local_controls(
            ChainSpec(spec.n_modes, spec.omega, spec.couplings, (site,),
                      spec.control_degree_cap))]
        local_drift_terms = {m: c for m, c in H0.terms.items()
                             if set(weyl._mono_support(m)) <= {site}}
        local_drift = PolyOp(spec.n_modes, local_drift_terms)
        if not local_drift.is_zero:
            gens.append(skew_generator(as_hermitian(local_drift)))
        site_dims[site] = lie_closure(gens, degree_cap=degree_cap, dim_cap=dim_cap).dim

    visited = set(spec.control_sites)
    frontier = list(spec.control_sites)
    verdicts = []
    while frontier:
        u = frontier.pop(0)
        for v in sorted(adjacency[u]):
            if v in visited:
                continue
            coupling = coupling_hamiltonian(u, v, spec.omega, spec.n_modes)
            local = local_skew_generators(u, spec.n_modes, degree_cap)
            result = algebraic_propagation_check(
                local, coupling, degree_cap=degree_cap, dim_cap=dim_cap, modes=(u, v))
            verdicts.append(EdgeVerdict((u, v), result.verdict,
                                        result.closure.dim, len(result.missing)))
            if result.verdict == PROPAGATES:
                visited.add(v)
                frontier.append(v)
    unreachable = tuple(sorted(set(range(spec.n_modes)) - visited))
    return ChainControllabilityReport(spec, degree_cap, verdicts, unreachable, site_dims)


# -- end-to-end demonstration --------------------------------------------------


def chain_demo(spec: ChainSpec, dims: Sequence[int], targets, epsilon: float,
               n_budget: int, inverter, psi0: np.ndarray | None = None,
               jobs: int = 1):
    """Compile and verify target evolutions on the truncated chain system.

    ``targets`` is a list of (GeneratorExpr, duration) pairs over the control
    system's generator indices (0 = drift).  Desk scale only: at most three
    modes at <= 16 levels each.
    """
    if spec.n_modes > 3:
        raise ValueError("chain demos are desk-scale: at most 3 modes")
    if len(dims) != spec.n_modes:
        raise ValueError("one Fock dimension per mode required")
    if any(d > 16 for d in dims):
        raise ValueError("chain demos are desk-scale: at most 16 levels per mode")
    tspec = TruncationSpec(tuple(dims))
    labels, gens = control_system(spec)
    reps = {k: represent(g_h, tspec).matrix
            for k, g_h in enumerate(_hermitian_counterparts(gens))}
    table = EvolutionTable({k: -1j * M for k, M in reps.items()})
    if psi0 is None:
        psi0 = np.zeros(tspec.dim, dtype=complex)
        psi0[0] = 1.0
    report = reachability_report(table, psi0, targets, epsilon, n_budget,
                                 inverter, jobs=jobs)
    return report, labels, table


def _hermitian_counterparts(skew_gens):
    """Hermitian H with G = -iH for each skew generator G."""
    out = []
    for g_op in skew_gens:
        herm = PolyOp(g_op.mode_count, {m: 1j * c for m, c in g_op.terms.items()})
        out.append(as_hermitian(herm))
    return out
