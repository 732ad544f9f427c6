import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import full_rotating_linearization, lambert_roots, newton_rhp_count
from ringhopf.bifurcation import find_centers
from ringhopf.model import NodeState
from ringhopf.spectral import (
    CharMatrix,
    RootCountError,
    count_rhp_roots,
    crossing_number,
    linearization_releq,
    quasi_poly_equilibrium,
    sweep_csv,
    unstable_dimension,
)
from ringhopf.symmetry import IsotypicalIndex, all_indices, component_basis


def test_count_unstable_scalar():
    assert count_rhp_roots(CharMatrix([[1.0]], [[0.0]], 1.0)).count == 1


def test_count_stable_scalar():
    assert count_rhp_roots(CharMatrix([[-1.0]], [[0.0]], 1.0)).count == 0


def test_count_with_multiplicity():
    cm = CharMatrix(np.diag([0.5 + 2j, 0.5 + 2j, -1.0]), np.zeros((3, 3)), 1.0)
    assert count_rhp_roots(cm).count == 2


def test_count_reports_small_winding_residual():
    res = count_rhp_roots(CharMatrix([[0.3]], [[0.8]], 2.0))
    assert res.winding_residual < 0.1
    assert res.region[0] == 0.0


def test_empty_region_rejected():
    with pytest.raises(ValueError):
        count_rhp_roots(CharMatrix([[1.0]], [[0.0]], 1.0), re_max=-1.0)


def test_char_matrix_validation():
    with pytest.raises(ValueError):
        CharMatrix(np.eye(2), np.eye(3), 1.0)
    with pytest.raises(ValueError):
        CharMatrix([[1.0]], [[0.0]], 0.0)


@settings(max_examples=40, deadline=None)
@given(m0r=st.floats(-3, 3), m0i=st.floats(-3, 3), m1r=st.floats(-3, 3), m1i=st.floats(-3, 3),
       T=st.floats(0.5, 3.0))
def test_scalar_count_matches_lambert_branches(m0r, m0i, m1r, m1i, T):
    m0, m1 = complex(m0r, m0i), complex(m1r, m1i)
    assume(abs(m1) > 1e-3)
    roots = lambert_roots(m0, m1, T)
    assume(np.min(np.abs(roots.real)) > 1e-4)
    assert count_rhp_roots(CharMatrix([[m0]], [[m1]], T)).count == int(np.sum(roots.real > 0))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.integers(1, 3), T=st.floats(0.5, 3.0))
def test_count_stable_under_contour_enlargement(seed, d, T):
    rng = np.random.default_rng(seed)
    cm = CharMatrix(rng.normal(size=(d, d)), rng.normal(size=(d, d)), T)
    R = cm.bound()
    assert count_rhp_roots(cm).count == count_rhp_roots(cm, re_max=2 * R, im_max=2 * R).count


@pytest.mark.parametrize("seed", range(8))
def test_count_matches_newton_oracle(seed):
    rng = np.random.default_rng(seed)
    d = 1 + seed % 4
    cm = CharMatrix(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), rng.normal(size=(d, d)),
                    rng.uniform(0.5, 3.0))
    want, near = newton_rhp_count(cm.M0, cm.M1, cm.delay, cm.bound())
    assert near > 1e-6
    assert count_rhp_roots(cm).count == want


# -- equilibrium -------------------------------------------------------------------------------------

def test_zero_coupling_makes_modes_identical(p):
    p0 = p.replace(eta=0.0)
    lam = np.array([0.3 + 1j, -0.2 + 4j, 1.1])
    ref = quasi_poly_equilibrium(p0, 0.037, 0).det(lam)
    for j in range(1, 5):
        np.testing.assert_array_equal(quasi_poly_equilibrium(p0, 0.037, j).det(lam), ref)


def test_zero_coupling_unstable_dimension_independent_of_mode(p):
    p0 = p.replace(eta=0.0)
    per = [unstable_dimension(p0, 0.0362, j, "per-component") for j in range(5)]
    assert len(set(per)) == 1


def test_mode_two_has_no_coupling_term():
    from ringhopf.model import case_study_params
    for psi in (0.0, 1.0, 2.5):
        cm = quasi_poly_equilibrium(case_study_params(psi), 0.04, 2)
        assert cm.M0[0, 0] == pytest.approx(-15.0, abs=1e-13)


def test_quasi_poly_rejects_bad_mode(p):
    with pytest.raises(ValueError):
        quasi_poly_equilibrium(p, 0.04, 5)


@pytest.mark.parametrize("alpha, j, want", [
    (0.036068, 0, 2),   # first circled entry of the aligned row
    (0.03615, 2, 4),
    (0.03615, 4, 0),
])
def test_unstable_dimension_table_cells(p, alpha, j, want):
    assert unstable_dimension(p, alpha, j) == want


def test_stable_below_first_center(p):
    assert all(unstable_dimension(p, 0.035, j) == 0 for j in range(5))


def test_conventions(p):
    assert unstable_dimension(p, 0.03615, 2, "per-component") == 1
    with pytest.raises(ValueError):
        unstable_dimension(p, 0.03615, 2, "complex")


# -- rotating waves ----------------------------------------------------------------------------------

def test_zero_amplitude_factorization(p):
    alpha, w = 0.04, 0.7
    x0 = NodeState(alpha / p.gamma_g, p.q0 / p.gamma_q, 0j)
    cm = linearization_releq(p, alpha, w, x0, "D8", IsotypicalIndex("D8", 1, "+"))
    field = CharMatrix(cm.M0[2:, 2:], cm.M1[2:, 2:], p.T)
    for lam in (0.3 + 1j, -0.7 + 2.5j, 2.0):
        want = (lam + p.gamma_g) * (lam + p.gamma_q) * field.det(lam)
        assert cm.det(lam) == pytest.approx(want, rel=1e-12)


def test_aligned_block_has_zero_root(p, branch):
    re = branch(0)[5]
    cm = linearization_releq(p, re.alpha, re.w, re.node, "D8", IsotypicalIndex("D8", 0), deflate=False)
    scale = abs(cm.det(0.5j))
    assert abs(cm.det(0.0)) < 1e-10 * scale
    assert linearization_releq(p, re.alpha, re.w, re.node, "D8", IsotypicalIndex("D8", 0)).deflate


def test_residual_precondition(p, branch):
    re = branch(0)[5]
    with pytest.raises(ValueError, match="not a relative equilibrium"):
        linearization_releq(p, re.alpha, re.w + 1e-3, re.node, "D8", IsotypicalIndex("D8", 0))


@pytest.mark.parametrize("l, ambient", [(0, "D8"), (1, "Z8t1"), (4, "D8d")])
def test_block_product_identity(p, branch, l, ambient):
    re = branch(l)[4]
    M0, M1 = full_rotating_linearization(p, re.alpha, re.w, re.full_state())
    B = np.hstack([component_basis(ambient, idx) for idx in all_indices(ambient)])
    rng = np.random.default_rng(l)
    for lam in rng.uniform(-1, 1, 4) + 1j * rng.uniform(-5, 5, 4):
        full = np.linalg.det(M0 + M1 * np.exp(-lam * p.T) - lam * np.eye(32))
        prod = np.prod([linearization_releq(p, re.alpha, re.w, re.node, ambient, idx, deflate=False).det(lam)
                        for idx in all_indices(ambient)])
        assert abs(prod - full) <= 1e-8 * abs(full)
    assert np.allclose(B.conj().T @ B, np.eye(32))


@pytest.mark.parametrize("j", [0, 4])
def test_conjugate_symmetry_of_unsplit_blocks(p, branch, j):
    re = branch(0)[10]
    idx = IsotypicalIndex("D8", j)
    cm = linearization_releq(p, re.alpha, re.w, re.node, "D8", idx)
    for lam in (0.2 + 1.3j, -0.4 + 7j):
        assert cm.det(np.conj(lam)) == pytest.approx(np.conj(cm.det(lam)), rel=1e-12)
    R = cm.bound()
    upper = count_rhp_roots(cm, re_max=R, im_min=1e-7, im_max=R).count
    lower = count_rhp_roots(cm, re_max=R, im_min=-R, im_max=-1e-7).count
    assert upper == lower


# -- crossing numbers -------------------------------------------------------------------------------

def test_first_center_destabilizes(p):
    c = find_centers(p, (0.03, 0.04), 0)[0]
    rec = crossing_number(lambda a: quasi_poly_equilibrium(p, a, 0), c.alpha0, c.w0, 0.05)
    assert rec.t == -1
    assert rec.alpha0 == c.alpha0 and rec.w0 == c.w0


def test_engineered_restabilizing_root():
    fam = lambda a: CharMatrix([[(0.5 - a) + 2j]], [[0.0]], 1.0)  # noqa: E731
    assert crossing_number(fam, 0.5, 2.0, 0.1).t == 1


def test_no_root_near_axis_raises():
    fam = lambda a: CharMatrix([[-5.0 + 2j]], [[0.0]], 1.0)  # noqa: E731
    with pytest.raises(RootCountError):
        crossing_number(fam, 0.5, 2.0, 0.1)


def test_sweep_csv_columns():
    text = sweep_csv([(0.0361, "U2", 4, "real-dim", 1e-12)])
    head, row = text.strip().splitlines()
    assert head == "alpha,component,count,convention,winding_residual"
    assert row.split(",")[:4] == ["0.0361", "U2", "4", "real-dim"]
