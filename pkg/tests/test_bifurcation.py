import numpy as np
import pytest

from oracles import lambert_root_near
from ringhopf.bifurcation import (
    Center,
    RelativeEquilibrium,
    branch_from_center,
    center_residual,
    classify_equilibrium_hopf,
    compare_events,
    continue_releq,
    find_centers,
    golden,
    hopf_scan_releq,
    regularity_check,
    regularity_matrix,
    releq_at,
    reproduce_table,
    table_csv,
)
from ringhopf.model import NodeState, node_rhs
from ringhopf.spectral import coupling_coefficient, x_alpha, y_alpha
from ringhopf.symmetry import catalog

RANGE = (0.03, 0.04)


def all_centers(p, rng=RANGE):
    return [c for j in range(5) for c in find_centers(p, rng, j)]


# -- centers ------------------------------------------------------------------------------------

def test_center_residuals(p):
    cs = all_centers(p)
    assert cs
    for c in cs:
        assert center_residual(p, c) < 1e-10


def test_smallest_centers_per_mode(p):
    targets = {0: 0.03606, 1: 0.03607, 2: 0.0361, 3: 0.03613, 4: 0.0362}
    for j, a in targets.items():
        assert find_centers(p, RANGE, j)[0].alpha0 == pytest.approx(a, abs=5e-5)


def test_six_smallest_centers_match_table_boundaries(p):
    got = sorted(c.alpha0 for c in all_centers(p))[:6]
    np.testing.assert_allclose(got, golden()["centers"], atol=1e-5)


def test_center_count_grows_with_range(p):
    counts = [len(all_centers(p, (0.03, hi))) for hi in (0.036, 0.04, 0.06, 0.1, 0.2)]
    assert counts == sorted(counts)
    assert counts[-1] > counts[1]


def test_empty_range_rejected(p):
    with pytest.raises(ValueError):
        find_centers(p, (0.04, 0.03), 0)


def test_no_centers_where_discriminant_negative(p):
    assert find_centers(p, (0.0, 0.01), 0) == []


def _tracked_real_part(p, alpha, j, w0):
    c = coupling_coefficient(p, j)
    m0 = -p.gamma + c
    m1 = p.gamma * p.sqrt_kappa * np.exp(x_alpha(p, alpha) + 1j * y_alpha(p, alpha))
    return lambert_root_near(m0, m1, p.T, 1j * w0).real


@pytest.mark.parametrize("j", range(5))
def test_transversality_derivative_matches_root_tracking(p, j):
    c = find_centers(p, RANGE, j)[0]
    h = 1e-7
    fd = (_tracked_real_part(p, c.alpha0 + h, j, c.w0) - _tracked_real_part(p, c.alpha0 - h, j, c.w0)) / (2 * h)
    assert c.transversal and c.r_prime > 0
    assert c.r_prime == pytest.approx(fd, rel=1e-4)


# -- equilibrium predictions --------------------------------------------------------------------

def _names(pred):
    return [(t.name, k) for t, k in pred.orbit_types]


def test_prediction_mode_two(p):
    pred = classify_equilibrium_hopf(p, find_centers(p, RANGE, 2)[0])
    assert _names(pred) == [("Z8t2", 2), ("D4d", 2), ("D4d~", 2)]
    assert pred.crossing.t == -1


def test_prediction_mode_zero(p):
    assert _names(classify_equilibrium_hopf(p, find_centers(p, RANGE, 0)[0])) == [("D8", 1)]


def test_prediction_mode_four(p):
    assert _names(classify_equilibrium_hopf(p, find_centers(p, RANGE, 4)[0])) == [("D8d", 1)]


def test_prediction_withheld_without_transversality(p):
    c = find_centers(p, RANGE, 1)[0]
    flat = Center(c.alpha0, c.w0, c.j, False, 0.0)
    pred = classify_equilibrium_hopf(p, flat)
    assert pred.orbit_types == [] and pred.crossing is None
    assert "withheld" in pred.conditions


# -- rotating-wave branches -----------------------------------------------------------------------

EXPECTED_SYMMETRY = {0: "D8", 1: "Z8t1", 2: "Z8t2", 3: "Z8t3", 4: "D8d"}


@pytest.mark.parametrize("l", range(5))
def test_branch_points_are_rotating_waves(p, branch, l):
    br = branch(l) if l in (0, 1, 4) else branch(l, 0.05)
    assert len(br) > 5
    for re in br:
        assert re.node.a.real > 0 and re.node.a.imag == 0.0
        assert re.residual(p) < 1e-9
        assert re.network_residual(p) < 1e-8
        assert re.symmetry.name == EXPECTED_SYMMETRY[l]


def test_branch_emerges_from_the_laser_off_state(p, branch):
    br = branch(0)
    c = find_centers(p, RANGE, 0)[0]
    assert br[0].alpha == pytest.approx(c.alpha0, abs=2e-4)
    assert br[0].node.a.real < 0.2
    assert br[-1].node.a.real > 10 * br[0].node.a.real


def test_center_must_match_twist(p):
    with pytest.raises(ValueError):
        continue_releq(p, find_centers(p, RANGE, 1)[0], 0, (0.0, 0.04))


def test_releq_at_hits_requested_alpha(p, branch):
    re = releq_at(p, branch(0), 0.05)
    assert re.alpha == 0.05 and re.residual(p) < 1e-11
    with pytest.raises(ValueError):
        releq_at(p, branch(0), 0.5)


def test_decoupled_branches_agree_across_twists(p):
    p0 = p.replace(eta=0.0)
    pts = [releq_at(p0, branch_from_center(p0, l, 0.05), 0.045) for l in range(5)]
    for re in pts[1:]:
        assert re.w == pytest.approx(pts[0].w, abs=1e-9)
        assert re.node.a == pytest.approx(pts[0].node.a, abs=1e-9)
        assert re.node.g == pytest.approx(pts[0].node.g, abs=1e-9)


def test_decoupled_branch_solves_single_laser_equation(p):
    p0 = p.replace(eta=0.0)
    re = releq_at(p0, branch_from_center(p0, 2, 0.05), 0.045)
    now = re.node
    delayed = NodeState(now.g, now.q, now.a * np.exp(-1j * re.w * p.T))
    d = node_rhs(p0, re.alpha, now, delayed)
    assert abs(d.g) < 1e-9 and abs(d.q) < 1e-9
    assert abs(d.a - 1j * re.w * now.a) < 1e-9


# -- regularity ------------------------------------------------------------------------------------

def test_regularity_fails_at_zero_amplitude(p):
    # the laser-off state seen as a rotating wave at the center where the D8 branch is born
    c = find_centers(p, RANGE, 0)[0]
    re = RelativeEquilibrium(c.alpha0, c.w0, NodeState(c.alpha0 / p.gamma_g, p.q0 / p.gamma_q, 0j), 0)
    assert re.residual(p) < 1e-12
    rep = regularity_check(p, re)
    assert not rep.passed
    assert not np.any(rep.matrix[:, 0])


def test_regularity_passes_on_d8_branch(p, branch):
    for re in branch(0):
        assert regularity_check(p, re).passed, re.alpha


def test_regularity_fails_with_duplicated_column(p, branch):
    M = regularity_matrix(p, branch(0)[3])
    M[:, 1] = M[:, 2]
    M[:, 3] = M[:, 4]
    rep = regularity_check(p, branch(0)[3], matrix=M)
    assert not rep.passed


# -- secondary events ----------------------------------------------------------------------------

@pytest.mark.parametrize("l, ambient", [(0, "D8"), (1, "Z8t1"), (4, "D8d")])
def test_predictions_follow_catalog(scan, l, ambient):
    events, preds = scan(l)
    cat = dict(catalog(ambient))
    assert preds
    for pr in preds:
        assert [t for t, _ in pr.orbit_types] == cat[pr.component]
    hopf = [e for e in events if e.kind == "hopf"]
    assert len(preds) == len(hopf)


@pytest.mark.parametrize("l", [0, 1, 4])
def test_hopf_count_changes_equal_twice_crossing_number(scan, l):
    for e in scan(l)[0]:
        if e.kind == "hopf":
            # t counts roots leaving the right half plane, so it has the opposite sign
            assert e.t != 0 and e.delta_count == -2 * e.t, (e.alpha, e.component)


@pytest.mark.parametrize("l", [0, 1, 4])
def test_steady_events_make_no_predictions(scan, l):
    events, preds = scan(l)
    steady = {e.alpha for e in events if e.kind == "steady"}
    assert not steady & {pr.alpha0 for pr in preds}


def test_d8_branch_events(scan):
    assert compare_events(scan(0)[1], golden()["hopf_events"]["D8"]) == []


def test_z8t1_branch_has_z8c_event(scan):
    hits = [pr for pr in scan(1)[1] if any(t.name == "Z8c" for t, _ in pr.orbit_types)]
    assert hits and hits[0].alpha0 == pytest.approx(0.064, abs=2e-3)


def test_d8d_branch_has_two_d8d_events(scan):
    hits = [pr.alpha0 for pr in scan(4)[1] if any(t.name == "D8d" for t, _ in pr.orbit_types)]
    assert len(hits) == 2
    assert hits[0] == pytest.approx(0.066, abs=2e-3)
    assert hits[1] == pytest.approx(0.0731, abs=2e-3)


def test_scan_rejects_wrong_ambient(p, branch):
    with pytest.raises(ValueError):
        hopf_scan_releq(p, branch(0), ambient="D8d")


def test_compare_events_reports_differences():
    assert compare_events([], [{"orbit_types": ["D8"], "alpha": 0.06}]) == ["missing event ['D8'] at alpha=0.06"]


# -- tables ----------------------------------------------------------------------------------------

def test_table1_cells(p):
    t = reproduce_table(1, p)
    assert t.counts[0][5] == 4 and t.markers[0][5] == "hopf"
    assert t.totals[-1] == 22
    assert t.mismatches() == []


def test_table3_steady_entry(p, branch):
    t = reproduce_table(3, p, branch=branch(1))
    col = t.intervals.index((4.21, 6.39))
    assert t.counts[4][col] == 1
    assert t.markers[4][col] == "steady"


def test_table_csv_layout(p):
    text = table_csv(reproduce_table(1, p))
    lines = text.strip().splitlines()
    assert lines[0] == "alpha_lo,alpha_hi,component,count,marker"
    assert len(lines) == 1 + 6 * 7


def test_unknown_table(p):
    with pytest.raises(ValueError):
        reproduce_table(7, p)


def test_psi_override_changes_table(p):
    assert reproduce_table(1, p, psi_override=0.0).mismatches() != []
