"""Independent oracles used by the tests: brute-force symbolic reordering and
matrix-level Lie closure.  These deliberately avoid the package's closed-form
reordering identity and structure-tensor machinery."""

from __future__ import annotations

import numpy as np

from recurq.weyl import PolyOp


def reorder_word(factors, coeff, mode_count):
    """Canonicalize one factor word by recursive adjacent rewrites.

    Uses only the local rules: factors on different modes commute, and
    p_i q_i -> q_i p_i - i.  Returns a {Monomial: coeff} dict.
    """
    factors = list(factors)
    for idx in range(len(factors) - 1):
        (k1, m1), (k2, m2) = factors[idx], factors[idx + 1]
        if m1 > m2:
            swapped = factors[:idx] + [factors[idx + 1], factors[idx]] + factors[idx + 2:]
            return reorder_word(swapped, coeff, mode_count)
        if m1 == m2 and k1 == "p" and k2 == "q":
            swapped = factors[:idx] + [factors[idx + 1], factors[idx]] + factors[idx + 2:]
            dropped = factors[:idx] + factors[idx + 2:]
            out = reorder_word(swapped, coeff, mode_count)
            for mono, c in reorder_word(dropped, coeff * (-1j), mode_count).items():
                out[mono] = out.get(mono, 0.0j) + c
            return {m: c for m, c in out.items() if c != 0}
    expo = [[0, 0] for _ in range(mode_count)]
    for kind, mode in factors:
        expo[mode][0 if kind == "q" else 1] += 1
    mono = tuple((a, b) for a, b in expo)
    return {mono: coeff}


def reorder_poly(raw, mode_count) -> PolyOp:
    terms: dict = {}
    for factors, coeff in raw:
        for mono, c in reorder_word(factors, coeff, mode_count).items():
            terms[mono] = terms.get(mono, 0.0j) + c
    return PolyOp(mode_count, terms)


def word_matrix(factors, coeff, mats):
    """Direct matrix product of a factor word, in operator order."""
    q_m, p_m = mats
    dim = q_m[0].shape[0]
    out = np.eye(dim, dtype=complex) * coeff
    for kind, mode in factors:
        out = out @ (q_m[mode] if kind == "q" else p_m[mode])
    return out


def matrix_lie_closure(generators, dim_cap=600, tol=1e-9):
    """Real-linear Lie closure of skew-hermitian matrices by direct brackets."""
    basis = []
    q_rows = None

    def vec(M):
        flat = M.ravel()
        return np.concatenate([flat.real, flat.imag])

    def try_add(M):
        nonlocal q_rows
        v = vec(M)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            return False
        u = v / nv
        if q_rows is not None:
            for _ in range(2):
                u = u - q_rows.T @ (q_rows @ u)
            rn = np.linalg.norm(u)
            if rn <= tol:
                return False
            u = u / rn
        else:
            u = u / np.linalg.norm(u)
        q_rows = u[None, :] if q_rows is None else np.vstack([q_rows, u])
        basis.append(M / nv)
        return True

    for g in generators:
        try_add(np.asarray(g, dtype=complex))

    i = 1
    while i < len(basis):
        if len(basis) >= dim_cap:
            break
        stack = np.asarray(basis[:i])
        B = basis[i]
        comms = np.einsum("rab,bc->rac", stack, B) - np.einsum("ab,rbc->rac", B, stack)
        for r in range(comms.shape[0]):
            if len(basis) >= dim_cap:
                break
            try_add(comms[r])
        i += 1

    def member(M, membership_tol=1e-6):
        v = vec(np.asarray(M, dtype=complex))
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        u = v / nv
        for _ in range(2):
            u = u - q_rows.T @ (q_rows @ u)
        return np.linalg.norm(u) <= membership_tol

    return basis, member
