"""Unitary time evolution under switched generators and the two product formulas.

A control sequence is the only object the physics can execute: an ordered
list of (generator index, duration >= 0) pairs, applied in time order.  The
product formulas are

    (e^{H_k t/n} e^{H_l t/n})^n           -> e^{(H_k + H_l) t},
    (e^{-H_k s} e^{-H_l s} e^{H_k s} e^{H_l s})^{n^2} -> e^{[H_k, H_l] t^2},

with s = t/n.  The commutator word needs reversed segments; those are either
evaluated exactly (oracle-only signed evolution, negative durations never
leave this module) or replaced by forward recurrence surrogates supplied by
an inverter strategy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fock import TruncatedRep

SKEW_TOL = 1e-8
UNITARY_TOL = 1e-8
NORM_TOL = 1e-10


@dataclass(frozen=True)
class ControlSequence:
    """Physical switching schedule; every duration is non-negative."""

    segments: tuple
    provenance: str = ""

    def __post_init__(self):
        segs = []
        for k, t in self.segments:
            k = int(k)
            t = float(t)
            if k < 0:
                raise ValueError(f"generator index {k} is negative")
            if t < 0:
                raise ValueError(f"negative duration {t} in control sequence")
            segs.append((k, t))
        object.__setattr__(self, "segments", tuple(segs))

    def __len__(self):
        return len(self.segments)

    @property
    def total_time(self) -> float:
        return sum(t for _, t in self.segments)

    def to_dict(self) -> dict:
        return {
            "segments": [{"k": k, "t": t} for k, t in self.segments],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlSequence":
        segs = tuple((s["k"], s["t"]) for s in data["segments"])
        return cls(segs, data.get("provenance", ""))


def _as_matrix(H) -> np.ndarray:
    return H.matrix if isinstance(H, TruncatedRep) else np.asarray(H)


def _check_skew(M: np.ndarray):
    defect = float(np.max(np.abs(M + M.conj().T)))
    if defect > SKEW_TOL:
        raise ValueError(f"matrix is not skew-hermitian: defect {defect:.3e}")


class EvolutionTable:
    """Spectral factorizations of a generator family, reused across segments.

    Each generator H is skew-hermitian; iH is diagonalized once and
    e^{H t} = V e^{-i w t} V^dag is assembled per duration.
    """

    def __init__(self, reps: Mapping[int, object]):
        self._eig = {}
        self._mats = {}
        dim = None
        for k, H in reps.items():
            M = _as_matrix(H)
            _check_skew(M)
            if dim is None:
                dim = M.shape[0]
            elif M.shape[0] != dim:
                raise ValueError("all generators must share one dimension")
            self._mats[int(k)] = M
        self.dim = dim

    def indices(self):
        return sorted(self._mats)

    def matrix(self, k: int) -> np.ndarray:
        return self._mats[k]

    def _decomp(self, k: int):
        if k not in self._eig:
            if k not in self._mats:
                raise KeyError(f"unresolved generator index {k}")
            w, V = np.linalg.eigh(1j * self._mats[k])
            self._eig[k] = (w, V)
        return self._eig[k]

    def apply(self, k: int, t: float, psi: np.ndarray) -> np.ndarray:
        w, V = self._decomp(k)
        return V @ (np.exp(-1j * w * t) * (V.conj().T @ psi))

    def unitary(self, k: int, t: float) -> np.ndarray:
        w, V = self._decomp(k)
        return (V * np.exp(-1j * w * t)) @ V.conj().T


def _as_table(reps) -> EvolutionTable:
    return reps if isinstance(reps, EvolutionTable) else EvolutionTable(reps)


def expm_skew(H, t: float) -> np.ndarray:
    """Unitary e^{H t} for skew-hermitian H via spectral decomposition."""
    if t < 0:
        raise ValueError("expm_skew is restricted to forward durations")
    M = _as_matrix(H)
    _check_skew(M)
    w, V = np.linalg.eigh(1j * M)
    U = (V * np.exp(-1j * w * t)) @ V.conj().T
    defect = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if defect > UNITARY_TOL:
        raise AssertionError(f"propagator lost unitarity: {defect:.3e}")
    return U


def evolve(seq: ControlSequence, psi0: np.ndarray, reps) -> np.ndarray:
    """Apply the sequence in time order (first segment acts first)."""
    table = _as_table(reps)
    psi = np.asarray(psi0, dtype=complex)
    for k, t in seq.segments:
        psi = table.apply(k, t, psi)
    drift = abs(np.linalg.norm(psi) - np.linalg.norm(psi0))
    if drift > NORM_TOL:
        raise AssertionError(f"evolution norm drift {drift:.3e}")
    return psi


def evolve_signed(segments: Sequence, psi0: np.ndarray, reps) -> np.ndarray:
    """Oracle evolution of a signed word; negative durations apply the exact
    (matrix) inverse of the forward propagator.  Unphysical, test/verification
    use only."""
    table = _as_table(reps)
    psi = np.asarray(psi0, dtype=complex)
    for k, t in segments:
        psi = table.apply(k, float(t), psi)
    return psi


def trotter_sequence(k: int, l: int, t: float, n: int) -> ControlSequence:
    """2n alternating forward segments approximating e^{(H_k + H_l) t}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    step = t / n
    segs = [(k, step), (l, step)] * n
    return ControlSequence(tuple(segs), provenance=f"trotter(k={k}, l={l}, t={t}, n={n})")


def commutator_word(k: int, l: int, t: float, n: int):
    """Signed time-ordered word whose limit is e^{[H_k, H_l] t^2}.

    Each of the n^2 repetitions is the group-commutator block
    e^{-H_k s} e^{-H_l s} e^{H_k s} e^{H_l s} with s = t/n, emitted in time
    order (rightmost factor first).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    s = t / n
    block = ((l, s), (k, s), (l, -s), (k, -s))
    return block * (n * n)


def realize_word(word, inverter) -> tuple:
    """Replace reversed segments of a signed word by forward surrogates.

    ``inverter.duration(k, s)`` must return ``(t_star, plan)`` with
    e^{H_k t_star} ~ e^{-H_k s}; plans are collected for certification.
    Returns ``(segments, plans)`` with all durations >= 0.
    """
    segments = []
    plans = {}
    for k, t in word:
        if t >= 0:
            segments.append((k, t))
            continue
        t_star, plan = inverter.duration(k, -t)
        if t_star < 0:
            raise ValueError("inverter returned a negative duration")
        segments.append((k, t_star))
        plans.setdefault((k, -t), plan)
    return tuple(segments), plans


def commutator_sequence(k: int, l: int, t: float, n: int, inverter) -> ControlSequence:
    """Forward-time realization of the group-commutator word (4n^2 segments).

    Reversed segments are replaced by recurrence surrogates from ``inverter``;
    an inverter failure (no recurrence time within its horizon) propagates.
    """
    word = commutator_word(k, l, t, n)
    segments, plans = realize_word(word, inverter)
    prov = f"commutator(k={k}, l={l}, t={t}, n={n}; {len(plans)} inversions)"
    seq = ControlSequence(segments, provenance=prov)
    if len(seq) != 4 * n * n:
        raise AssertionError("commutator word must have 4 n^2 segments")
    return seq


def state_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(np.asarray(a), np.asarray(b))))


def trotter_errors(k: int, l: int, t: float, ns: Sequence[int], psi0: np.ndarray,
                   reps) -> list:
    """(n, error) table against the dense e^{(H_k+H_l)t} oracle."""
    table = _as_table(reps)
    target = expm_skew(table.matrix(k) + table.matrix(l), t) @ np.asarray(psi0)
    rows = []
    for n in ns:
        out = evolve(trotter_sequence(k, l, t, n), psi0, table)
        rows.append((int(n), state_error(out, target)))
    return rows
