import numpy as np
import pytest
from scipy.linalg import expm as scipy_expm

from recurq import fock, propagate as pr, recurrence as rc
from recurq.fock import TruncationSpec
from recurq.propagate import ControlSequence
from recurq.weyl import as_hermitian, p, q


@pytest.fixture(scope="module")
def qp_system():
    spec = TruncationSpec((32,))
    Hq = fock.represent(q(0), spec).matrix
    Hp = fock.represent(p(0), spec).matrix
    table = pr.EvolutionTable({1: -1j * Hq, 2: -1j * Hp})
    return spec, table


@pytest.fixture(scope="module")
def harmonic_pair():
    # two commensurate-spectrum generators: H and its unit-displaced sibling;
    # the pair has the nontrivial bracket [H_k, H_l] = i p
    spec = TruncationSpec((32,), buffer=8)
    ho = as_hermitian((p(0) * p(0) + q(0) * q(0)) * 0.5)
    disp = as_hermitian(ho + q(0))
    Hk = fock.represent(ho, spec).matrix
    Hl = fock.represent(disp, spec).matrix
    table = pr.EvolutionTable({1: -1j * Hk, 2: -1j * Hl})
    return spec, table


# -- ControlSequence -----------------------------------------------------------

def test_sequence_rejects_negative_duration():
    with pytest.raises(ValueError):
        ControlSequence(((1, -0.1),))


def test_sequence_rejects_negative_index():
    with pytest.raises(ValueError):
        ControlSequence(((-1, 0.1),))


def test_sequence_json_roundtrip():
    seq = ControlSequence(((1, 0.25), (2, 0.5)), provenance="demo")
    back = ControlSequence.from_dict(seq.to_dict())
    assert back == seq
    assert back.total_time == 0.75


# -- expm ----------------------------------------------------------------------

def test_expm_t0_identity(qp_system):
    _, table = qp_system
    U = pr.expm_skew(table.matrix(1), 0.0)
    assert np.allclose(U, np.eye(32))


def test_expm_diagonal_case():
    E = np.array([0.3, 1.1, 2.7])
    H = -1j * np.diag(E)
    U = pr.expm_skew(H, 0.9)
    assert np.allclose(np.diag(U), np.exp(-1j * E * 0.9))


def test_expm_group_property(qp_system):
    _, table = qp_system
    H = table.matrix(1)
    U = pr.expm_skew(H, 0.4) @ pr.expm_skew(H, 0.8)
    assert np.max(np.abs(U - pr.expm_skew(H, 1.2))) < 1e-9


def test_expm_matches_scipy(qp_system):
    _, table = qp_system
    H = table.matrix(1) + 0.3 * table.matrix(2)
    assert np.max(np.abs(pr.expm_skew(H, 0.83) - scipy_expm(0.83 * H))) < 1e-12


def test_expm_rejects_non_skew():
    with pytest.raises(ValueError):
        pr.expm_skew(np.eye(4), 1.0)


# -- evolve ----------------------------------------------------------------------

def test_evolve_empty_sequence(qp_system):
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    assert np.array_equal(pr.evolve(ControlSequence(()), psi0, table), psi0)


def test_evolve_single_segment(qp_system):
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    out = pr.evolve(ControlSequence(((1, 0.7),)), psi0, table)
    assert np.allclose(out, pr.expm_skew(table.matrix(1), 0.7) @ psi0)


def test_evolve_merges_equal_generators(qp_system):
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    two = pr.evolve(ControlSequence(((1, 0.3), (1, 0.4))), psi0, table)
    one = pr.evolve(ControlSequence(((1, 0.7),)), psi0, table)
    assert np.linalg.norm(two - one) < 1e-10


def test_evolve_is_isometry(qp_system, rng):
    spec, table = qp_system
    psi0 = fock.random_interior_state(spec, rng, 8)
    seq = ControlSequence(((1, 0.3), (2, 1.1), (1, 0.2)))
    assert abs(np.linalg.norm(pr.evolve(seq, psi0, table)) - 1.0) < 1e-10


def test_evolve_unresolved_index(qp_system):
    spec, table = qp_system
    with pytest.raises(KeyError):
        pr.evolve(ControlSequence(((9, 0.1),)), fock.ground_state(spec), table)


def test_evolve_time_order(qp_system):
    # first segment acts first: compare against explicit operator product
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    seq = ControlSequence(((1, 0.3), (2, 0.5)))
    out = pr.evolve(seq, psi0, table)
    U1 = pr.expm_skew(table.matrix(1), 0.3)
    U2 = pr.expm_skew(table.matrix(2), 0.5)
    assert np.allclose(out, U2 @ (U1 @ psi0))


# -- Trotter ---------------------------------------------------------------------

def test_trotter_sequence_shape():
    seq = pr.trotter_sequence(1, 2, 0.8, 3)
    assert len(seq) == 6
    assert seq.segments[0] == (1, 0.8 / 3)
    assert seq.segments[1] == (2, 0.8 / 3)


def test_trotter_commuting_exact_at_n1():
    spec = TruncationSpec((24,))
    Hq = fock.represent(q(0), spec).matrix
    Hq2 = fock.represent(as_hermitian(q(0) * q(0)), spec).matrix
    table = pr.EvolutionTable({1: -1j * Hq, 2: -1j * Hq2})
    psi0 = fock.ground_state(spec)
    out = pr.evolve(pr.trotter_sequence(1, 2, 0.9, 1), psi0, table)
    target = pr.expm_skew(table.matrix(1) + table.matrix(2), 0.9) @ psi0
    assert np.linalg.norm(out - target) < 1e-9


def test_trotter_t0_error_zero(qp_system):
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    rows = pr.trotter_errors(1, 2, 0.0, [1, 4], psi0, table)
    assert all(e < 1e-12 for _, e in rows)


def test_trotter_convergence_ladder(qp_system):
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    rows = dict(pr.trotter_errors(1, 2, 0.7, [4, 16, 64, 256], psi0, table))
    assert rows[16] <= rows[4] and rows[64] <= rows[16] and rows[256] <= rows[64]
    assert rows[64] <= rows[16] / 3
    assert rows[256] <= rows[64] / 3


# -- commutator word ---------------------------------------------------------------

def test_commutator_word_shape():
    word = pr.commutator_word(1, 2, 0.5, 3)
    assert len(word) == 4 * 9
    s = 0.5 / 3
    assert word[:4] == ((2, s), (1, s), (2, -s), (1, -s))


def test_commutator_scalar_bracket_fidelity(qp_system):
    # [H_k, H_l] = -i for the canonical pair: the word builds a global phase
    spec, table = qp_system
    psi0 = fock.ground_state(spec)
    t = 0.5
    for n in (2, 8):
        out = pr.evolve_signed(pr.commutator_word(1, 2, t, n), psi0, table)
        target = np.exp(-1j * t * t) * psi0
        assert pr.fidelity(out, target) > 0.999
        assert pr.state_error(out, target) < 1e-6


def test_commutator_squeezing_converges(harmonic_pair):
    # generic pair: error against the dense bracket oracle decreases with n
    spec, table = harmonic_pair
    psi0 = fock.ground_state(spec)
    t = 0.5
    A, B = table.matrix(1), table.matrix(2)
    target = pr.expm_skew(A @ B - B @ A, t * t) @ psi0
    errs = {}
    for n in (4, 8, 16):
        out = pr.evolve_signed(pr.commutator_word(1, 2, t, n), psi0, table)
        errs[n] = pr.state_error(out, target)
    assert errs[8] < errs[4]
    assert errs[16] < errs[8]


def test_commutator_sequence_physical_with_recurrence_inverter(harmonic_pair):
    spec, table = harmonic_pair
    psi0 = fock.ground_state(spec)
    delta = 1e-4
    inverter = rc.RecurrenceInverter.from_skew_reps(
        {1: table.matrix(1), 2: table.matrix(2)}, delta, mode="pointwise", state=psi0)
    n = 4
    seq = pr.commutator_sequence(1, 2, 0.5, n, inverter)
    assert len(seq) == 4 * n * n
    assert all(t >= 0 for _, t in seq.segments)
    # certified per-segment inversions: every plan achieved its delta
    for plan in inverter.plans().values():
        assert plan.guaranteed_distance < delta


def test_recurrence_vs_exact_inverter_accounting(harmonic_pair):
    # triangle-inequality accounting: the physical word stays within 4 n^2 delta
    # of the exact-inverse oracle word
    spec, table = harmonic_pair
    psi0 = fock.ground_state(spec)
    delta, t, n = 1e-4, 0.5, 4
    inverter = rc.RecurrenceInverter.from_skew_reps(
        {1: table.matrix(1), 2: table.matrix(2)}, delta, mode="pointwise", state=psi0)
    word = pr.commutator_word(1, 2, t, n)
    exact = pr.evolve_signed(word, psi0, table)
    seq = pr.commutator_sequence(1, 2, t, n, inverter)
    physical = pr.evolve(seq, psi0, table)
    assert pr.state_error(physical, exact) <= 4 * n * n * delta


def test_realize_word_keeps_forward_segments():
    word = ((1, 0.5), (2, 0.25))

    class NoInverter:
        def duration(self, k, s):
            raise AssertionError("must not be called for forward segments")

    segments, plans = pr.realize_word(word, NoInverter())
    assert segments == word and plans == {}
