"""Symbolic algebra of polynomial operators in canonical pairs (q_i, p_i).

Operators are complex polynomials in per-mode position and momentum symbols
subject to [q_i, p_j] = i*delta_ij (hbar = 1).  The normal form orders every
product as q_i^a p_i^b within each mode, modes ascending; reordering uses

    p^b q^c = sum_k k! C(b,k) C(c,k) (-i)^k q^(c-k) p^(b-k),

which keeps coefficients exact small complex numbers for the Hamiltonians
treated here.  On top of the polynomial arithmetic the module computes
real-linear Lie closures under explicit degree/dimension caps and the
coupling-propagation criterion used by the oscillator-chain tools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITIAN = "hermitian"
SKEW = "skew-hermitian"
GENERAL = "general"

# Relative tolerance for the rank-revealing independence test.  Coefficients
# here are exact small integers/rationals times powers of i, so numerical
# rank is robust at this level.
INDEPENDENCE_TOL = 1e-10

DEFAULT_DEGREE_CAP = 6
DEFAULT_DIM_CAP = 64

# Monomial: one ((a_i, b_i)) exponent pair per mode, meaning
# q_1^a1 p_1^b1 ... q_m^am p_m^bm in that (canonical) order.
Monomial = tuple

_PRUNE = 1e-14


def mono_degree(mono: Monomial) -> int:
    return sum(a + b for a, b in mono)


def _mono_support(mono: Monomial):
    return tuple(i for i, (a, b) in enumerate(mono) if a or b)


def _mode_pair_product(a: int, b: int, c: int, d: int):
    """Single-mode product (q^a p^b)(q^c p^d) as [(exponents, coeff)]."""
    out = []
    for k in range(min(b, c) + 1):
        coeff = math.comb(b, k) * math.comb(c, k) * math.factorial(k) * (-1j) ** k
        out.append(((a + c - k, b + d - k), coeff))
    return out


def _mono_product(m1: Monomial, m2: Monomial):
    """Product of two canonical monomials as a {Monomial: coeff} dict."""
    acc = {(): 1.0 + 0.0j}
    for (a, b), (c, d) in zip(m1, m2):
        nxt = {}
        for (ab, coeff) in _mode_pair_product(a, b, c, d):
            for prefix, pc in acc.items():
                key = prefix + (ab,)
                nxt[key] = nxt.get(key, 0.0j) + pc * coeff
        acc = nxt
    return acc


def _mono_adjoint(mono: Monomial):
    """Adjoint of a unit-coefficient monomial: reverse factors, recanonicalize."""
    # (q^a p^b)^dag = p^b q^a per mode; modes commute so no cross-mode work.
    acc = {(): 1.0 + 0.0j}
    for (a, b) in mono:
        nxt = {}
        for (ab, coeff) in _mode_pair_product(0, b, a, 0):
            for prefix, pc in acc.items():
                key = prefix + (ab,)
                nxt[key] = nxt.get(key, 0.0j) + pc * coeff
        acc = nxt
    return acc


@dataclass(frozen=True)
class PolyOp:
    """Canonically ordered complex polynomial in the q_i, p_i symbols.

    ``terms`` maps monomials to nonzero complex coefficients.  ``role``
    records whether the operator is known hermitian / skew-hermitian; it is
    metadata set by constructors that can vouch for it (arithmetic results
    default to ``general``).
    """

    mode_count: int
    terms: dict = field(default_factory=dict)
    role: str = GENERAL

    def __post_init__(self):
        if self.mode_count < 1:
            raise ValueError("mode_count must be positive")
        cleaned = {}
        for mono, coeff in self.terms.items():
            mono = tuple((int(a), int(b)) for a, b in mono)
            if len(mono) != self.mode_count:
                raise ValueError(f"monomial {mono} does not match mode_count {self.mode_count}")
            if any(a < 0 or b < 0 for a, b in mono):
                raise ValueError(f"negative exponent in monomial {mono}")
            c = complex(coeff)
            if c != 0:
                cleaned[mono] = cleaned.get(mono, 0.0j) + c
        cleaned = {m: c for m, c in cleaned.items() if c != 0}
        object.__setattr__(self, "terms", cleaned)
        if self.role not in (HERMITIAN, SKEW, GENERAL):
            raise ValueError(f"unknown role {self.role!r}")

    # -- basic queries ----------------------------------------------------

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(mono_degree(m) for m in self.terms)

    @property
    def support(self):
        modes = set()
        for m in self.terms:
            modes.update(_mono_support(m))
        return frozenset(modes)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient_norm(self) -> float:
        if not self.terms:
            return 0.0
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    # -- arithmetic -------------------------------------------------------

    def _require_same_modes(self, other: "PolyOp"):
        if self.mode_count != other.mode_count:
            raise ValueError(
                f"mode_count mismatch: {self.mode_count} vs {other.mode_count}"
            )

    def __add__(self, other):
        if isinstance(other, PolyOp):
            self._require_same_modes(other)
            terms = dict(self.terms)
            for m, c in other.terms.items():
                terms[m] = terms.get(m, 0.0j) + c
            return PolyOp(self.mode_count, terms)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, PolyOp):
            return self + (-other)
        return NotImplemented

    def __neg__(self):
        return PolyOp(self.mode_count, {m: -c for m, c in self.terms.items()}, self.role)

    def __mul__(self, other):
        if isinstance(other, PolyOp):
            self._require_same_modes(other)
            out: dict = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    for mono, coeff in _mono_product(m1, m2).items():
                        out[mono] = out.get(mono, 0.0j) + c1 * c2 * coeff
            return PolyOp(self.mode_count, out)
        if isinstance(other, (int, float, complex)):
            return PolyOp(self.mode_count, {m: c * other for m, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def adjoint(self) -> "PolyOp":
        out: dict = {}
        for mono, coeff in self.terms.items():
            for m2, c2 in _mono_adjoint(mono).items():
                out[m2] = out.get(m2, 0.0j) + coeff.conjugate() * c2
        return PolyOp(self.mode_count, out)

    def cleaned(self, rel_tol: float = _PRUNE) -> "PolyOp":
        """Drop coefficients below rel_tol times the largest magnitude."""
        if not self.terms:
            return self
        scale = max(abs(c) for c in self.terms.values())
        terms = {m: c for m, c in self.terms.items() if abs(c) > rel_tol * scale}
        return PolyOp(self.mode_count, terms, self.role)

    def isclose(self, other: "PolyOp", tol: float = 1e-10) -> bool:
        self._require_same_modes(other)
        diff = self - other
        scale = max(self.coefficient_norm(), other.coefficient_norm(), 1.0)
        return diff.coefficient_norm() <= tol * scale

    # -- textual form -----------------------------------------------------

    def to_text(self) -> str:
        """Serialize as a sum of 'coeff * q1^a p1^b ...' terms, coeff as (re,im)."""
        if not self.terms:
            return "(0,0)"
        parts = []
        for mono in sorted(self.terms, key=lambda m: (mono_degree(m), m)):
            c = self.terms[mono]
            factors = []
            for i, (a, b) in enumerate(mono):
                if a:
                    factors.append(f"q{i + 1}" + (f"^{a}" if a > 1 else ""))
                if b:
                    factors.append(f"p{i + 1}" + (f"^{b}" if b > 1 else ""))
            coeff = f"({c.real:.17g},{c.imag:.17g})"
            parts.append(coeff if not factors else coeff + " * " + " ".join(factors))
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str, mode_count: int, role: str = GENERAL) -> "PolyOp":
        terms: dict = {}
        for chunk in text.replace("\n", " ").split(" + "):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "*" in chunk:
                coeff_s, factors_s = chunk.split("*", 1)
            else:
                coeff_s, factors_s = chunk, ""
            coeff_s = coeff_s.strip()
            if not (coeff_s.startswith("(") and coeff_s.endswith(")")):
                raise ValueError(f"bad coefficient {coeff_s!r}; expected (re,im)")
            re_s, im_s = coeff_s[1:-1].split(",")
            coeff = complex(float(re_s), float(im_s))
            expo = [[0, 0] for _ in range(mode_count)]
            for tok in factors_s.split():
                kind = tok[0]
                if kind not in ("q", "p"):
                    raise ValueError(f"bad factor {tok!r}")
                body = tok[1:]
                if "^" in body:
                    idx_s, pow_s = body.split("^")
                else:
                    idx_s, pow_s = body, "1"
                mode = int(idx_s) - 1
                if not 0 <= mode < mode_count:
                    raise ValueError(f"mode index out of range in {tok!r}")
                expo[mode][0 if kind == "q" else 1] += int(pow_s)
            mono = tuple((a, b) for a, b in expo)
            terms[mono] = terms.get(mono, 0.0j) + coeff
        return cls(mode_count, terms, role)

    def __str__(self):
        return self.to_text()


# -- constructors ----------------------------------------------------------


def _unit_mono(mode_count: int, mode: int, q_exp: int, p_exp: int) -> Monomial:
    if not 0 <= mode < mode_count:
        raise ValueError(f"mode index {mode} out of range for mode_count {mode_count}")
    return tuple((q_exp, p_exp) if i == mode else (0, 0) for i in range(mode_count))


def q(mode: int, mode_count: int = 1) -> PolyOp:
    return PolyOp(mode_count, {_unit_mono(mode_count, mode, 1, 0): 1.0}, HERMITIAN)


def p(mode: int, mode_count: int = 1) -> PolyOp:
    return PolyOp(mode_count, {_unit_mono(mode_count, mode, 0, 1): 1.0}, HERMITIAN)


def const(value: complex, mode_count: int = 1) -> PolyOp:
    mono = tuple((0, 0) for _ in range(mode_count))
    role = HERMITIAN if complex(value).imag == 0 else GENERAL
    return PolyOp(mode_count, {mono: value}, role)


def canonicalize(raw: Iterable, mode_count: int) -> PolyOp:
    """Normal-order a sum of factor words.

    ``raw`` is an iterable of ``(factors, coeff)`` where ``factors`` is a
    sequence of ``("q"|"p", mode)`` pairs in operator order (leftmost factor
    acts last).  The result equals the input as an operator identity under
    [q, p] = i.
    """
    total = const(0.0, mode_count)
    for factors, coeff in raw:
        word = const(coeff, mode_count)
        for kind, mode in factors:
            if kind == "q":
                word = word * q(mode, mode_count)
            elif kind == "p":
                word = word * p(mode, mode_count)
            else:
                raise ValueError(f"unknown factor kind {kind!r}")
        total = total + word
    return total


def adjoint(A: PolyOp) -> PolyOp:
    return A.adjoint()


def is_hermitian(A: PolyOp, tol: float = 1e-9) -> bool:
    return (A - A.adjoint()).coefficient_norm() <= tol * max(A.coefficient_norm(), 1.0)


def is_skew_hermitian(A: PolyOp, tol: float = 1e-9) -> bool:
    return (A + A.adjoint()).coefficient_norm() <= tol * max(A.coefficient_norm(), 1.0)


def as_hermitian(A: PolyOp, tol: float = 1e-9) -> PolyOp:
    if not is_hermitian(A, tol):
        raise ValueError("operator is not hermitian at coefficient level")
    return PolyOp(A.mode_count, A.terms, HERMITIAN)


def as_skew(A: PolyOp, tol: float = 1e-9) -> PolyOp:
    if not is_skew_hermitian(A, tol):
        raise ValueError("operator is not skew-hermitian at coefficient level")
    return PolyOp(A.mode_count, A.terms, SKEW)


def skew_generator(H: PolyOp, tol: float = 1e-9) -> PolyOp:
    """Map a hermitian generator H to the skew-hermitian -i*H."""
    if not is_hermitian(H, tol):
        raise ValueError("skew_generator expects a hermitian operator")
    return PolyOp(H.mode_count, {m: -1j * c for m, c in H.terms.items()}, SKEW)


def bracket(A: PolyOp, B: PolyOp) -> PolyOp:
    """Commutator AB - BA in canonical form.

    When both inputs are tagged skew-hermitian the result is verified and
    tagged skew-hermitian as well.
    """
    A._require_same_modes(B)
    out = A * B - B * A
    if A.role == SKEW and B.role == SKEW:
        if not is_skew_hermitian(out, 1e-9):
            raise AssertionError("bracket of skew-hermitian operators must be skew-hermitian")
        return PolyOp(out.mode_count, out.terms, SKEW)
    return out


# -- monomial enumeration and vector coordinates ---------------------------


def enumerate_monomials(mode_count: int, support: Sequence[int], max_degree: int):
    """All monomials on the given support modes with total degree <= cap."""
    support = sorted(set(support))
    slots = 2 * len(support)
    monos = []

    def rec(pos, remaining, current):
        if pos == slots:
            mono = [[0, 0] for _ in range(mode_count)]
            for k, e in enumerate(current):
                mono[support[k // 2]][k % 2] = e
            monos.append(tuple(tuple(pair) for pair in mono))
            return
        for e in range(remaining + 1):
            rec(pos + 1, remaining - e, current + [e])

    rec(0, max_degree, [])
    monos.sort(key=lambda m: (mono_degree(m), m))
    return monos


class _RealSpan:
    """Incremental orthonormal basis of a real span in monomial coordinates."""

    def __init__(self, n_coords: int, tol: float = INDEPENDENCE_TOL):
        self.tol = tol
        self.q = np.zeros((0, n_coords))

    @property
    def dim(self):
        return self.q.shape[0]

    def residual(self, v: np.ndarray):
        r = v.copy()
        for _ in range(2):  # two-pass reorthogonalization
            if self.dim:
                r = r - self.q.T @ (self.q @ r)
        return r

    def try_add(self, v: np.ndarray) -> bool:
        nv = np.linalg.norm(v)
        if nv == 0:
            return False
        r = self.residual(v / nv)
        rn = np.linalg.norm(r)
        if rn <= self.tol:
            return False
        self.q = np.vstack([self.q, r / rn])
        return True

    def contains(self, v: np.ndarray, tol: float) -> bool:
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        return np.linalg.norm(self.residual(v / nv)) <= tol


def _vectorize(op: PolyOp, index: dict, n: int):
    """Complex coefficient vector of ``op`` over the monomial index, or None
    if some monomial falls outside the indexed set."""
    v = np.zeros(n, dtype=complex)
    for mono, coeff in op.terms.items():
        i = index.get(mono)
        if i is None:
            return None
        v[i] = coeff
    return v


def _to_real(v: np.ndarray):
    return np.concatenate([v.real, v.imag])


def _from_vector(v: np.ndarray, monomials, mode_count: int) -> PolyOp:
    terms = {}
    scale = np.max(np.abs(v)) if v.size else 0.0
    for i, c in enumerate(v):
        if abs(c) > _PRUNE * max(scale, 1.0):
            terms[monomials[i]] = complex(c)
    return PolyOp(mode_count, terms, SKEW)


# -- Lie closure ------------------------------------------------------------


@dataclass
class LieBasis:
    """Real-linear basis of a (possibly cap-truncated) dynamical Lie algebra."""

    generators: list
    basis: list
    degree_cap: int
    dim_cap: int
    saturated: bool
    degree_capped: bool = False
    dim_capped: bool = False
    _monomials: tuple = field(default=(), repr=False)
    _index: dict = field(default_factory=dict, repr=False)
    _span: object = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def mode_count(self) -> int:
        return self.generators[0].mode_count

    def contains(self, X: PolyOp, tol: float = 1e-8) -> bool:
        if X.mode_count != self.mode_count:
            raise ValueError("mode_count mismatch")
        if X.is_zero:
            return True
        v = _vectorize(X, self._index, len(self._monomials))
        if v is None:
            return False
        return self._span.contains(_to_real(v), tol)


def contains(basis: LieBasis, X: PolyOp, tol: float = 1e-8) -> bool:
    if not is_skew_hermitian(X):
        raise ValueError("membership test expects a skew-hermitian operator")
    return basis.contains(X, tol)


class _StructureTensor:
    """Cached brackets of basis monomials, split into in-cap and overflow parts."""

    _DENSE_LIMIT = 120

    def __init__(self, mode_count, monomials, index, degree_cap):
        self.mode_count = mode_count
        self.monomials = monomials
        self.index = index
        self.degree_cap = degree_cap
        n = len(monomials)
        self.n = n
        self.dense = n <= self._DENSE_LIMIT
        self.overflow_terms: dict = {}
        if self.dense:
            self.T = np.zeros((n, n, n), dtype=complex)
            self.overflow_flag = np.zeros((n, n), dtype=bool)
            for i in range(n):
                for j in range(i + 1, n):
                    vec, over = self._mono_bracket(i, j)
                    self.T[i, j] = vec
                    self.T[j, i] = -vec
                    if over:
                        self.overflow_flag[i, j] = True
                        self.overflow_flag[j, i] = True
                        self.overflow_terms[(i, j)] = over
        else:
            self._cache: dict = {}

    def _mono_bracket(self, i, j):
        mi, mj = self.monomials[i], self.monomials[j]
        acc = dict(_mono_product(mi, mj))
        for mono, coeff in _mono_product(mj, mi).items():
            acc[mono] = acc.get(mono, 0.0j) - coeff
        vec = np.zeros(self.n, dtype=complex)
        over = {}
        for mono, coeff in acc.items():
            if coeff == 0:
                continue
            k = self.index.get(mono)
            if k is not None:
                vec[k] = coeff
            else:
                over[mono] = coeff
        return vec, over

    def _pair(self, i, j):
        if i == j:
            return None
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -1.0
        entry = self._cache.get((i, j))
        if entry is None:
            entry = self._mono_bracket(i, j)
            self._cache[(i, j)] = entry
        vec, over = entry
        return sign * vec, over, sign

    def bracket_rows(self, X: np.ndarray, y: np.ndarray):
        """Brackets [X_r, y] for all rows of X.

        Returns ``(R, overflow)`` where R[r] is the in-cap coefficient vector
        and overflow[r] is True when the full bracket has terms of degree
        beyond the cap (checked exactly, cancellations included).
        """
        m = X.shape[0]
        scale_y = np.max(np.abs(y)) or 1.0
        ynz = np.abs(y) > 1e-13 * scale_y
        if self.dense:
            T2 = np.tensordot(self.T, y, axes=([1], [0]))
            R = X @ T2
            # rows whose norm sits at the cancellation floor are roundoff zeros
            floor = 1e-11 * max(np.linalg.norm(T2), 1e-300)
            noise = np.linalg.norm(R, axis=1) < floor * np.linalg.norm(X, axis=1)
            R[noise] = 0.0
            overflow = np.zeros(m, dtype=bool)
            col_flag = (self.overflow_flag[:, ynz]).any(axis=1)
            for r in range(m):
                xr = X[r]
                scale_x = np.max(np.abs(xr)) or 1.0
                xnz = np.abs(xr) > 1e-13 * scale_x
                if not (xnz & col_flag).any():
                    continue
                overflow[r] = self._exact_overflow(xr, y, xnz, ynz)
            return R, overflow
        # sparse fall-back: per-pair cached accumulation
        R = np.zeros((m, self.n), dtype=complex)
        overflow = np.zeros(m, dtype=bool)
        jidx = np.nonzero(ynz)[0]
        for r in range(m):
            xr = X[r]
            scale_x = np.max(np.abs(xr)) or 1.0
            iidx = np.nonzero(np.abs(xr) > 1e-13 * scale_x)[0]
            over_acc: dict = {}
            gross = 0.0
            for i in iidx:
                for j in jidx:
                    pr = self._pair(i, j)
                    if pr is None:
                        continue
                    vec, over, sign = pr
                    w = xr[i] * y[j]
                    R[r] += w * vec
                    gross += abs(w) * np.linalg.norm(vec)
                    if over:
                        for mono, coeff in over.items():
                            over_acc[mono] = over_acc.get(mono, 0.0j) + w * sign * coeff
            if np.linalg.norm(R[r]) < 1e-11 * gross:
                R[r] = 0.0
            if over_acc:
                lim = 1e-10 * max(np.linalg.norm(xr) * np.linalg.norm(y), 1e-300)
                overflow[r] = any(abs(c) > lim for c in over_acc.values())
        return R, overflow

    def _exact_overflow(self, x, y, xnz, ynz):
        acc: dict = {}
        for i in np.nonzero(xnz)[0]:
            row = self.overflow_flag[i]
            for j in np.nonzero(ynz & row)[0]:
                key = (i, j) if i < j else (j, i)
                sign = 1.0 if i < j else -1.0
                w = x[i] * y[j] * sign
                for mono, coeff in self.overflow_terms[key].items():
                    acc[mono] = acc.get(mono, 0.0j) + w * coeff
        if not acc:
            return False
        lim = 1e-10 * max(np.linalg.norm(x) * np.linalg.norm(y), 1e-300)
        return any(abs(c) > lim for c in acc.values())


def lie_closure(generators: Sequence[PolyOp], degree_cap: int = DEFAULT_DEGREE_CAP,
                dim_cap: int = DEFAULT_DIM_CAP) -> LieBasis:
    """Breadth-first bracket saturation of the real span of ``generators``.

    Brackets whose result carries terms of degree above ``degree_cap`` are
    discarded and flag the basis unsaturated; hitting ``dim_cap`` with a new
    direction pending stops early with the same flag.
    """
    generators = list(generators)
    if not generators:
        raise ValueError("empty generator list")
    if degree_cap < 1 or dim_cap < 1:
        raise ValueError("caps must be >= 1")
    mode_count = generators[0].mode_count
    for g in generators:
        if g.mode_count != mode_count:
            raise ValueError("generators must share mode_count")
        if not is_skew_hermitian(g):
            raise ValueError("generators must be skew-hermitian")
        if g.degree > degree_cap:
            raise ValueError(f"generator degree {g.degree} exceeds degree_cap {degree_cap}")

    support = set()
    for g in generators:
        support.update(g.support)
    if not support:
        support = {0}
    monomials = enumerate_monomials(mode_count, sorted(support), degree_cap)
    index = {m: i for i, m in enumerate(monomials)}
    n = len(monomials)

    span = _RealSpan(2 * n)
    vecs: list = []
    degree_capped = False
    dim_capped = False

    def try_add(v: np.ndarray) -> str:
        nonlocal dim_capped
        nv = np.linalg.norm(v)
        if nv == 0:
            return "zero"
        u = v / nv
        if not span.contains(_to_real(u), INDEPENDENCE_TOL):
            if len(vecs) >= dim_cap:
                dim_capped = True
                return "capped"
            span.try_add(_to_real(u))
            vecs.append(u)
            return "added"
        return "dependent"

    for g in generators:
        v = _vectorize(g, index, n)
        if v is None:  # cannot happen: degree validated above
            raise AssertionError("generator outside enumerated monomials")
        if try_add(v) == "capped":
            break

    tensor = _StructureTensor(mode_count, monomials, index, degree_cap)

    i = 0
    while i < len(vecs) and not dim_capped:
        if i == 0:
            i += 1  # [x, x] = 0; nothing to pair the first element with
            continue
        X = np.asarray(vecs[:i])
        R, over = tensor.bracket_rows(X, vecs[i])
        if over.any():
            degree_capped = True
        for r in range(R.shape[0]):
            if over[r]:
                continue
            if try_add(R[r]) == "capped":
                break
        i += 1

    basis_ops = [_from_vector(v, monomials, mode_count) for v in vecs]
    return LieBasis(
        generators=generators,
        basis=basis_ops,
        degree_cap=degree_cap,
        dim_cap=dim_cap,
        saturated=not (degree_capped or dim_capped),
        degree_capped=degree_capped,
        dim_capped=dim_capped,
        _monomials=tuple(monomials),
        _index=index,
        _span=span,
    )


# -- generating sets and algebraic propagation ------------------------------


def skew_monomial_generators(modes: Sequence[int], mode_count: int, degree_cap: int):
    """Basis of the skew-hermitian polynomials on ``modes`` up to the cap.

    For each monomial M the candidates i(M + M^dag) and (M - M^dag) are
    reduced to a real-linearly independent list whose span is the full capped
    skew-hermitian space on those modes (one element per monomial).
    """
    monomials = enumerate_monomials(mode_count, modes, degree_cap)
    index = {m: i for i, m in enumerate(monomials)}
    span = _RealSpan(2 * len(monomials))
    out = []
    for mono in monomials:
        m_op = PolyOp(mode_count, {mono: 1.0})
        m_adj = m_op.adjoint()
        for candidate in (1j * (m_op + m_adj), m_op - m_adj):
            candidate = candidate.cleaned()
            if candidate.is_zero:
                continue
            v = _vectorize(candidate, index, len(monomials))
            if span.try_add(_to_real(v / np.linalg.norm(v))):
                out.append(as_skew(candidate))
    return out


def local_skew_generators(mode: int, mode_count: int, degree_cap: int):
    """Degree-capped generating set for the single-mode skew algebra on ``mode``."""
    return skew_monomial_generators([mode], mode_count, degree_cap)


PROPAGATES = "propagates"
FAILS = "fails"
UNKNOWN = "unknown"


@dataclass
class PropagationResult:
    verdict: str
    closure: LieBasis
    target_modes: tuple
    missing: list

    @property
    def propagates(self) -> bool:
        return self.verdict == PROPAGATES


def algebraic_propagation_check(local, coupling: PolyOp, degree_cap: int,
                                dim_cap: int = 256, tol: float = 1e-8,
                                modes: Sequence[int] | None = None) -> PropagationResult:
    """Test whether local controls plus one coupling bracket span the pair algebra.

    ``local`` is a degree-capped generating list (or LieBasis) for the
    single-mode skew algebra on one mode; ``coupling`` is the hermitian
    two-mode interaction.  The closure of local ∪ {[X, -i*coupling]} is
    computed under the caps and the capped generating set of the pair algebra
    is tested for membership.  ``modes`` names the pair explicitly; when
    omitted it is inferred from the supports.  A positive verdict is sound
    regardless of cap hits; a negative one is only issued when it is provable
    (saturated closure, or no bracket ever acquires support on the new mode).
    """
    local_ops = list(local.basis) if isinstance(local, LieBasis) else list(local)
    if not local_ops:
        raise ValueError("empty local generating set")
    mode_count = local_ops[0].mode_count
    if not is_hermitian(coupling):
        raise ValueError("coupling must be hermitian")
    local_modes = set()
    for X in local_ops:
        local_modes.update(X.support)
    if modes is None:
        pair_modes = sorted(local_modes | set(coupling.support))
    else:
        pair_modes = sorted(set(modes) | local_modes)
    target_modes = tuple(sorted(set(pair_modes) - local_modes))

    coupling_skew = skew_generator(coupling) if not coupling.is_zero else None
    gens = list(local_ops)
    for X in local_ops:
        if coupling_skew is None:
            continue
        b = bracket(X, coupling_skew).cleaned()
        if not b.is_zero:
            gens.append(as_skew(b))

    closure = lie_closure(gens, degree_cap=degree_cap, dim_cap=dim_cap)

    if not target_modes:
        # no mode beyond the local ones is named or touched by the coupling,
        # hence nothing can propagate
        return PropagationResult(FAILS, closure, (), [])

    targets = skew_monomial_generators(pair_modes, mode_count, degree_cap)
    missing = [t for t in targets if not closure.contains(t, tol)]
    if not missing:
        verdict = PROPAGATES
    else:
        reached = set()
        for el in closure.basis:
            reached.update(el.support)
        if closure.saturated or not (reached & set(target_modes)):
            # brackets preserve mode support, so a closure that never touches
            # the target mode can never acquire it
            verdict = FAILS
        else:
            verdict = UNKNOWN
    return PropagationResult(verdict, closure, target_modes, missing)
