"""Dense matrix representations of polynomial operators on truncated Fock spaces.

Each mode is truncated to its lowest ``D_i`` number states; operators are
built by substituting the truncated ladder matrices into canonical monomials
(truncate-then-multiply), so products and commutators agree with the symbolic
algebra exactly on the interior block and pick up quantifiable artifacts only
within ``degree`` levels of the cutoff.  States are plain complex ndarrays of
length ``prod(D_i)``; helpers below construct, normalize and embed them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .weyl import HERMITIAN, PolyOp

MAX_DIM = 4096


@dataclass(frozen=True)
class TruncationSpec:
    """Per-mode Fock dimensions plus the number of untrusted boundary levels."""

    dims: tuple
    buffer: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("dims must be nonempty")
        if any(d < 2 for d in dims):
            raise ValueError("every mode dimension must be >= 2")
        if not 0 <= self.buffer < min(dims):
            raise ValueError("buffer must satisfy 0 <= buffer < min(dims)")

    @property
    def mode_count(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def dominates(self, other: "TruncationSpec") -> bool:
        return self.mode_count == other.mode_count and all(
            a >= b for a, b in zip(self.dims, other.dims)
        )


@dataclass(frozen=True)
class TruncatedRep:
    """A PolyOp rendered as a dense complex matrix at a given truncation."""

    matrix: np.ndarray
    spec: TruncationSpec
    source: PolyOp | None = None
    hermiticity_defect: float | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _small_annihilator(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def _embed(op: np.ndarray, spec: TruncationSpec, mode: int) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) for d in spec.dims]
    mats[mode] = op
    return reduce(np.kron, mats)


def ladder_matrices(spec: TruncationSpec):
    """Embedded (a_i, a_i^dag) pairs, one per mode."""
    out = []
    for mode, d in enumerate(spec.dims):
        a = _embed(_small_annihilator(d), spec, mode)
        out.append((a, a.conj().T))
    return out


def q_matrix(spec: TruncationSpec, mode: int = 0) -> np.ndarray:
    a = _embed(_small_annihilator(spec.dims[mode]), spec, mode)
    return (a + a.conj().T) / math.sqrt(2.0)


def p_matrix(spec: TruncationSpec, mode: int = 0) -> np.ndarray:
    a = _embed(_small_annihilator(spec.dims[mode]), spec, mode)
    return 1j * (a.conj().T - a) / math.sqrt(2.0)


def hermitize(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2.0


def hermiticity_defect(M: np.ndarray) -> float:
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def represent(A: PolyOp, spec: TruncationSpec, max_dim: int = MAX_DIM) -> TruncatedRep:
    """Truncate-then-multiply representation of a canonical polynomial.

    Hermitian-role sources are hermitized after assembly; the pre-hermitize
    defect (a boundary artifact measure) is recorded on the result.
    """
    if A.mode_count != spec.mode_count:
        raise ValueError(
            f"operator has {A.mode_count} modes but spec has {spec.mode_count}"
        )
    if spec.dim > max_dim:
        raise ValueError(f"total dimension {spec.dim} exceeds limit {max_dim}")

    smalls = {}
    for mode, d in enumerate(spec.dims):
        a = _small_annihilator(d)
        qm = (a + a.conj().T) / math.sqrt(2.0)
        pm = 1j * (a.conj().T - a) / math.sqrt(2.0)
        smalls[mode] = (qm, pm, {})

    def mode_power(mode, q_exp, p_exp):
        qm, pm, cache = smalls[mode]
        key = (q_exp, p_exp)
        if key not in cache:
            d = spec.dims[mode]
            m = np.eye(d, dtype=complex)
            m = m @ np.linalg.matrix_power(qm, q_exp) if q_exp else m
            m = m @ np.linalg.matrix_power(pm, p_exp) if p_exp else m
            cache[key] = m
        return cache[key]

    M = np.zeros((spec.dim, spec.dim), dtype=complex)
    for mono, coeff in A.terms.items():
        factors = [mode_power(mode, a, b) for mode, (a, b) in enumerate(mono)]
        M += coeff * reduce(np.kron, factors)

    defect = None
    if A.role == HERMITIAN:
        defect = hermiticity_defect(M)
        M = hermitize(M)
    M.setflags(write=False)
    return TruncatedRep(M, spec, A, defect)


# -- states -----------------------------------------------------------------


def normalize(psi: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / n


def fock_state(spec: TruncationSpec, occupations) -> np.ndarray:
    """Product number state |n_1, ..., n_m>."""
    occupations = tuple(int(n) for n in occupations)
    if len(occupations) != spec.mode_count:
        raise ValueError("one occupation number per mode required")
    for n, d in zip(occupations, spec.dims):
        if not 0 <= n < d:
            raise ValueError(f"occupation {n} outside [0, {d})")
    idx = np.ravel_multi_index(occupations, spec.dims)
    psi = np.zeros(spec.dim, dtype=complex)
    psi[idx] = 1.0
    return psi


def ground_state(spec: TruncationSpec) -> np.ndarray:
    return fock_state(spec, (0,) * spec.mode_count)


def interior_mask(spec: TruncationSpec, buffer: int | None = None) -> np.ndarray:
    """Boolean mask of basis states with every mode level below D_i - buffer."""
    b = spec.buffer if buffer is None else buffer
    grids = np.indices(spec.dims).reshape(spec.mode_count, -1)
    mask = np.ones(spec.dim, dtype=bool)
    for mode, d in enumerate(spec.dims):
        mask &= grids[mode] < d - b
    return mask


def interior_block(M: np.ndarray, spec: TruncationSpec, buffer: int | None = None) -> np.ndarray:
    mask = interior_mask(spec, buffer)
    return M[np.ix_(mask, mask)]


def random_interior_state(spec: TruncationSpec, rng: np.random.Generator,
                          buffer: int | None = None) -> np.ndarray:
    """Normalized state supported on levels below the buffer region."""
    mask = interior_mask(spec, buffer)
    psi = np.zeros(spec.dim, dtype=complex)
    k = int(mask.sum())
    psi[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return normalize(psi)


def embed_state(psi: np.ndarray, spec_from: TruncationSpec, spec_to: TruncationSpec) -> np.ndarray:
    """Zero-pad a state into a componentwise larger truncation."""
    if not spec_to.dominates(spec_from):
        raise ValueError("target truncation must dominate the source per mode")
    block = np.asarray(psi).reshape(spec_from.dims)
    pad = [(0, dt - df) for df, dt in zip(spec_from.dims, spec_to.dims)]
    return np.pad(block, pad).reshape(spec_to.dim)


def truncation_probe(A: PolyOp, psi: np.ndarray, spec: TruncationSpec,
                     spec_larger: TruncationSpec) -> float:
    """Convergence diagnostic ||A_large emb(psi) - emb(A_small psi)||.

    Small for states supported away from the cutoff; grows when the state
    leaks amplitude into levels the smaller truncation cannot hold.
    """
    if not spec_larger.dominates(spec):
        raise ValueError("spec_larger must dominate spec per mode")
    small = represent(A, spec).matrix @ np.asarray(psi)
    large = represent(A, spec_larger).matrix @ embed_state(psi, spec, spec_larger)
    return float(np.linalg.norm(large - embed_state(small, spec, spec_larger)))


# -- binary export ----------------------------------------------------------


def save_rep(rep: TruncatedRep, path: str) -> None:
    """Write matrix as column-major complex128 pairs plus a JSON sidecar."""
    raw = np.asfortranarray(rep.matrix).ravel(order="F")
    raw.astype(np.complex128).tofile(path + ".bin")
    sidecar = {
        "dims": list(rep.spec.dims),
        "buffer": rep.spec.buffer,
        "shape": list(rep.matrix.shape),
        "source": rep.source.to_text() if rep.source is not None else None,
        "source_mode_count": rep.source.mode_count if rep.source is not None else None,
        "hermiticity_defect": rep.hermiticity_defect,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_rep(path: str) -> TruncatedRep:
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    shape = tuple(sidecar["shape"])
    raw = np.fromfile(path + ".bin", dtype=np.complex128)
    if raw.size != shape[0] * shape[1]:
        raise ValueError(f"binary payload size {raw.size} does not match shape {shape}")
    matrix = raw.reshape(shape, order="F")
    spec = TruncationSpec(tuple(sidecar["dims"]), sidecar["buffer"])
    source = None
    if sidecar["source"] is not None:
        source = PolyOp.from_text(sidecar["source"], sidecar["source_mode_count"])
    matrix.setflags(write=False)
    return TruncatedRep(matrix, spec, source, sidecar["hermiticity_defect"])
