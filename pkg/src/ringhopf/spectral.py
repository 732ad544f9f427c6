"""Characteristic functions on isotypic components and right-half-plane root counts.

A :class:`CharMatrix` holds ``M0, M1`` and the delay ``T`` of
``Delta(lam) = det(M0 + M1 exp(-lam T) - lam I)``.  Roots in a rectangle are
counted with the argument principle, sampling ``Delta`` on the boundary and
refining until successive phase increments are small.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import LaserParams
from .symmetry import IsotypicalIndex, ambient_twist, coupling_block

__all__ = [
    "CharMatrix",
    "RootCountResult",
    "CrossingRecord",
    "RootCountError",
    "x_alpha",
    "y_alpha",
    "coupling_coefficient",
    "quasi_poly_equilibrium",
    "node_jacobians",
    "reduced_residual",
    "rotating_frame_blocks",
    "linearization_releq",
    "count_rhp_roots",
    "unstable_dimension",
    "crossing_number",
    "locate_axis_root",
    "sweep_csv",
]

CONVENTIONS = ("real-dim", "per-component")


class RootCountError(RuntimeError):
    pass


@dataclass
class CharMatrix:
    M0: np.ndarray
    M1: np.ndarray
    delay: float
    deflate: bool = False  # divide out the forced root at the origin

    def __post_init__(self):
        self.M0 = np.atleast_2d(np.asarray(self.M0, dtype=complex))
        self.M1 = np.atleast_2d(np.asarray(self.M1, dtype=complex))
        if self.M0.shape != self.M1.shape or self.M0.shape[0] != self.M0.shape[1]:
            raise ValueError("M0 and M1 must be square and of equal shape")
        if not self.delay > 0:
            raise ValueError("delay must be positive")

    @property
    def d(self) -> int:
        return self.M0.shape[0]

    def matrix(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        eye = np.eye(self.d)
        return (self.M0 + self.M1 * np.exp(-lam * self.delay)[..., None, None]
                - lam[..., None, None] * eye)

    def det(self, lam):
        """``Delta(lam)``, vectorized over ``lam``."""
        return np.linalg.det(self.matrix(lam))

    def bound(self) -> float:
        """Every root with ``Re lam >= 0`` has ``|lam|`` below this value."""
        return float(np.linalg.norm(self.M0, 2) + np.linalg.norm(self.M1, 2) + 1.0)


@dataclass
class RootCountResult:
    count: int
    region: tuple[float, float, float, float]  # re_lo, re_hi, im_lo, im_hi
    winding_residual: float
    samples: int = 0


@dataclass
class CrossingRecord:
    alpha0: float
    w0: float
    component: IsotypicalIndex | None
    t: int
    delta: float = field(default=0.0, repr=False)


# -- equilibrium ----------------------------------------------------------------

def x_alpha(p: LaserParams, alpha):
    return alpha / (2 * p.gamma_g) - p.q0 / (2 * p.gamma_q)


def y_alpha(p: LaserParams, alpha):
    return p.eta_q * p.q0 / (2 * p.gamma_q) - p.eta_g * alpha / (2 * p.gamma_g)


def coupling_coefficient(p: LaserParams, j: int) -> complex:
    """``a_j + i b_j = 2 eta exp(i psi) cos(2 pi j / n)``."""
    return 2 * p.eta * np.exp(1j * p.psi) * np.cos(2 * np.pi * j / p.n)


def quasi_poly_equilibrium(p: LaserParams, alpha: float, j: int) -> CharMatrix:
    """Scalar characteristic function of the field direction of mode ``j`` at the laser-off state.

    Linearizing the network about ``a = 0`` gives
    ``lam + gamma - (a_j + i b_j) - gamma sqrt(kappa) exp(x + i y) exp(-lam T)``.
    """
    if not 0 <= j <= p.n // 2:
        raise ValueError(f"j must be in 0..{p.n // 2}")
    m0 = -p.gamma + coupling_coefficient(p, j)
    m1 = p.gamma * p.sqrt_kappa * np.exp(x_alpha(p, alpha) + 1j * y_alpha(p, alpha))
    return CharMatrix([[m0]], [[m1]], p.T)


# -- relative equilibria ----------------------------------------------------------

def _cmul(z: complex) -> np.ndarray:
    return np.array([[z.real, -z.imag], [z.imag, z.real]])


def node_jacobians(p: LaserParams, g, q, a, gd, qd, ad) -> tuple[np.ndarray, np.ndarray]:
    """Real 4x4 Jacobians of one node with respect to the current and the delayed state."""
    a, ad = complex(a), complex(ad)
    a2 = abs(a) ** 2
    eq, egm1 = np.exp(-q), np.expm1(g)
    A0 = np.zeros((4, 4))
    A0[0, 0] = -p.gamma_g - eq * np.exp(g) * a2 / p.E_g
    A0[0, 1] = eq * egm1 * a2 / p.E_g
    A0[0, 2:] = -eq * egm1 * 2 * np.array([a.real, a.imag]) / p.E_g
    A0[1, 1] = -p.gamma_q - eq * a2 / p.E_q
    A0[1, 2:] = np.expm1(-q) * 2 * np.array([a.real, a.imag]) / p.E_q
    A0[2:, 2:] = -p.gamma * np.eye(2)
    G = p.gamma * p.sqrt_kappa * np.exp(0.5 * ((1 - 1j * p.eta_g) * gd - (1 - 1j * p.eta_q) * qd))
    A1 = np.zeros((4, 4))
    vg = 0.5 * (1 - 1j * p.eta_g) * G * ad
    vq = -0.5 * (1 - 1j * p.eta_q) * G * ad
    A1[2:, 0] = vg.real, vg.imag
    A1[2:, 1] = vq.real, vq.imag
    A1[2:, 2:] = _cmul(G)
    return A0, A1


def _twist_factor(p: LaserParams, l: int) -> complex:
    return 2 * p.eta * np.exp(1j * p.psi) * np.cos(2 * np.pi * l / p.n)


def reduced_residual(p: LaserParams, alpha: float, w: float, g: float, q: float, a: complex,
                     l: int) -> np.ndarray:
    """Stationary equations of a discrete rotating wave with twist ``l`` in the rotating frame.

    Returns the four real residuals ``(g-eq, q-eq, Re, Im)`` of the node-0 equations.
    """
    a = complex(a)
    a2 = abs(a) ** 2
    rg = alpha - p.gamma_g * g - np.exp(-q) * np.expm1(g) * a2 / p.E_g
    rq = p.q0 - p.gamma_q * q + np.expm1(-q) * a2 / p.E_q
    G = np.exp(0.5 * ((1 - 1j * p.eta_g) * g - (1 - 1j * p.eta_q) * q))
    ra = (-1j * w - p.gamma + _twist_factor(p, l)) * a + p.gamma * p.sqrt_kappa * G * np.exp(-1j * w * p.T) * a
    return np.array([rg, rq, ra.real, ra.imag])


def rotating_frame_blocks(p: LaserParams, w: float, g: float, q: float, a: complex):
    """``(A0 - w J, A1 R(-w T))`` for a node of a rotating wave, without coupling."""
    a = complex(a)
    ad = a * np.exp(-1j * w * p.T)
    A0, A1 = node_jacobians(p, g, q, a, g, q, ad)
    J = np.zeros((4, 4))
    J[2:, 2:] = [[0, -1], [1, 0]]
    Rm = np.eye(4)
    Rm[2:, 2:] = _cmul(np.exp(-1j * w * p.T))
    return A0 - w * J, A1 @ Rm


def linearization_releq(p: LaserParams, alpha: float, w: float, x0, ambient: str,
                        idx: IsotypicalIndex, tol: float = 1e-9, deflate: bool | None = None) -> CharMatrix:
    """Characteristic matrix of the rotating wave on one isotypic component.

    ``x0`` is the node-0 state, either a ``NodeState`` or ``(g, q, a)``.  On the
    aligned component (``j = 0``) the forced root at the origin is deflated unless
    ``deflate`` says otherwise.
    """
    g, q, a = (x0.g, x0.q, x0.a) if hasattr(x0, "g") else x0
    l = ambient_twist(ambient)
    res = reduced_residual(p, alpha, w, g, q, a, l)
    if np.max(np.abs(res)) > tol:
        raise ValueError(f"x0 is not a relative equilibrium (residual {np.max(np.abs(res)):.3e})")
    M0, M1 = rotating_frame_blocks(p, w, g, q, a)
    M0 = M0 + coupling_block(ambient, idx, p)
    if deflate is None:
        deflate = idx.j == 0 and abs(complex(a)) > 0
    return CharMatrix(M0, M1, p.T, deflate=bool(deflate))


# -- argument principle -------------------------------------------------------------

def _contour(re_lo, re_hi, im_lo, im_hi, spacing, indent):
    """Counter-clockwise boundary nodes; the left edge optionally bulges around the origin."""
    def seg(z0, z1):
        k = max(8, int(np.ceil(abs(z1 - z0) / spacing)))
        return z0 + (z1 - z0) * np.linspace(0.0, 1.0, k, endpoint=False)
    parts = [seg(complex(re_lo, im_lo), complex(re_hi, im_lo)),
             seg(complex(re_hi, im_lo), complex(re_hi, im_hi)),
             seg(complex(re_hi, im_hi), complex(re_lo, im_hi))]
    if indent > 0 and im_lo < -indent and im_hi > indent:
        parts.append(seg(complex(re_lo, im_hi), complex(re_lo, indent)))
        th = np.linspace(np.pi / 2, -np.pi / 2, 64, endpoint=False)
        parts.append(re_lo + indent * np.exp(1j * th))
        parts.append(seg(complex(re_lo, -indent), complex(re_lo, im_lo)))
    else:
        parts.append(seg(complex(re_lo, im_hi), complex(re_lo, im_lo)))
    z = np.concatenate(parts)
    return np.append(z, z[0])


def _winding(f: Callable, z: np.ndarray, max_jump: float, max_rounds: int):
    """Accumulated argument of ``f`` along the closed polyline ``z`` (refined adaptively)."""
    fz = f(z)
    for _ in range(max_rounds):
        if not np.all(np.isfinite(fz)):
            raise RootCountError("characteristic function not finite on the contour")
        if np.any(fz == 0):
            raise RootCountError("root on the contour")
        d = np.angle(fz[1:] / fz[:-1])
        bad = np.abs(d) > max_jump
        if not bad.any():
            return float(d.sum()), len(z)
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (z[idx] + z[idx + 1])
        fm = f(mids)
        z = np.insert(z, idx + 1, mids)
        fz = np.insert(fz, idx + 1, fm)
        if len(z) > 4_000_000:
            break
    raise RootCountError("contour refinement did not converge; a root may lie on the contour")


def count_rhp_roots(cm: CharMatrix, re_max: float | None = None, im_max: float | None = None,
                    re_min: float = 0.0, im_min: float | None = None, *, indent: float = 1e-3,
                    n_init: int = 256, max_jump: float = np.pi / 4, max_rounds: int = 40,
                    ) -> RootCountResult:
    """Number of zeros of ``Delta`` in ``(re_min, re_max) x (im_min, im_max)``.

    Defaults cover the whole right half plane via :meth:`CharMatrix.bound`.  When
    ``cm.deflate`` is set, ``Delta(lam)/lam`` is counted and the left edge detours
    around the origin at radius ``indent`` so the forced zero root is never counted.

    The boundary is sampled no coarser than ``0.2 / (d T)`` (the phase of
    ``exp(-d lam T)`` turns by at most 0.2 rad per node) and refined where the
    phase jumps exceed ``max_jump``.  The count is accepted once it survives a
    doubling of the initial sampling.
    """
    R = cm.bound()
    re_max = R if re_max is None else re_max
    im_max = R if im_max is None else im_max
    im_min = -im_max if im_min is None else im_min
    if not (re_max > re_min and im_max > im_min):
        raise ValueError("empty region")
    f = (lambda z: cm.det(z) / z) if cm.deflate else cm.det
    side = max(re_max - re_min, im_max - im_min)
    base = min(side / n_init, 0.2 / (cm.d * cm.delay))
    shift = 0.0
    last_err = None
    for attempt in range(3):
        lo = re_min + shift
        ind = indent if cm.deflate and lo <= 0.0 <= re_max else 0.0
        try:
            prev, total_samples = None, 0
            for level in range(4):
                z = _contour(lo, re_max, im_min, im_max, base / 2 ** level, ind)
                total, ns = _winding(f, z, max_jump, max_rounds)
                total_samples += ns
                w = total / (2 * np.pi)
                k = int(round(w))
                if prev is not None and k == prev:
                    return RootCountResult(k, (lo, re_max, im_min, im_max), abs(w - k), total_samples)
                prev = k
            raise RootCountError("count not stable under contour refinement")
        except RootCountError as exc:
            last_err = exc
            shift = 1e-7 * (attempt + 1) * max(1.0, abs(R))  # nudge the left edge off a root
    raise RootCountError(f"argument principle failed: {last_err}")


def unstable_dimension(p: LaserParams, alpha: float, j: int, convention: str = "real-dim") -> int:
    """Unstable roots of the laser-off state in ``V_{j,1}``.

    ``real-dim`` counts real dimensions (the tabulated convention); ``per-component``
    returns the raw root count of the scalar quasi-polynomial.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    n = count_rhp_roots(quasi_poly_equilibrium(p, alpha, j)).count
    if convention == "per-component":
        return n
    return (2 if j in (0, p.n // 2) else 4) * n


def locate_axis_root(cm: CharMatrix, w_guess: float | None = None, im_max: float | None = None,
                     n_grid: int = 4000, tol: float = 1e-12):
    """Root of ``Delta`` closest to the imaginary axis, refined by Newton's method.

    With ``w_guess`` the search starts there; otherwise ``|Delta(i y)|`` is scanned.
    """
    f = (lambda z: cm.det(z) / z) if cm.deflate else cm.det
    if w_guess is None:
        R = cm.bound() if im_max is None else im_max
        y = np.linspace(-R, R, n_grid)
        if cm.deflate:
            y = y[np.abs(y) > 1e-3]
        vals = np.abs(f(1j * y))
        scale = np.abs(cm.M0).max() + np.abs(cm.M1).max() + np.abs(y)
        k = int(np.argmin(vals / scale ** cm.d))
        z = 1j * y[k]
    else:
        z = 1j * w_guess
    h = 1e-7
    for _ in range(60):
        fz = f(z)
        df = (f(z + h) - f(z - h)) / (2 * h)
        if df == 0:
            break
        step = fz / df
        z = z - step
        if abs(step) < tol * max(1.0, abs(z)):
            break
    return complex(z)


def crossing_number(family: Callable[[float], CharMatrix], alpha0: float, w0: float, window: float,
                    component: IsotypicalIndex | None = None, delta: float | None = None,
                    ) -> CrossingRecord:
    """Signed crossing number at ``alpha0`` of the root near ``i w0``.

    Counts roots in the box ``(0, window) x (w0 - window, w0 + window)`` at
    ``alpha0 -/+ delta``; ``t`` is the first count minus the second.
    """
    deltas = [delta] if delta is not None else [1e-5, 3e-6, 1e-6, 3e-7]

    def t_at(d):
        counts = [count_rhp_roots(family(a), re_max=window, im_min=w0 - window, im_max=w0 + window,
                                  indent=min(1e-3, window / 4)).count
                  for a in (alpha0 - d, alpha0 + d)]
        return counts[0] - counts[1]

    # accept once two successive deltas agree, so the count is not a contour artefact
    prev = None
    for d in deltas:
        t = t_at(d)
        if t != 0 and (len(deltas) == 1 or t == prev):
            return CrossingRecord(alpha0, w0, component, t, d)
        prev = t
    if prev:
        return CrossingRecord(alpha0, w0, component, prev, deltas[-1])
    raise RootCountError(f"no isolated crossing near i*{w0:.6g} at alpha={alpha0:.8g}")


def sweep_csv(rows) -> str:
    """CSV text for ``(alpha, component, count, convention, winding_residual)`` rows."""
    out = ["alpha,component,count,convention,winding_residual"]
    for alpha, comp, count, conv, resid in rows:
        out.append(f"{alpha:.12g},{comp},{int(count)},{conv},{resid:.12g}")
    return "\n".join(out) + "\n"
