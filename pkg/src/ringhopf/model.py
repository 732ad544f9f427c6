"""Rate equations of a passively mode-locked laser and the ring network built from them.

Each laser carries a saturable gain ``g``, a saturable loss ``q`` and a complex
field amplitude ``a``.  Nodes are coupled to their two ring neighbours through
the field only, ``eta * exp(i psi) * (a[k-1] + a[k+1])``.  The pump ``alpha``
plays the role of the unsaturated gain and is always passed explicitly.

Network states use the real chart ``(g, q, Re a, Im a)`` per node, stored as a
float array of shape ``(n, 4)``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "LaserParams",
    "NodeState",
    "load_params",
    "case_study_params",
    "node_rhs",
    "coupling_matrix",
    "apply_coupling",
    "network_rhs",
    "trivial_equilibrium",
    "pack",
    "unpack",
]


@dataclass(frozen=True)
class LaserParams:
    gamma_g: float
    gamma_q: float
    gamma: float
    kappa: float
    q0: float
    E_g: float
    E_q: float
    T: float
    eta_g: float
    eta_q: float
    psi: float = 0.0
    eta: float = 0.0
    n: int = 8

    def __post_init__(self):
        for name in ("gamma_g", "gamma_q", "gamma", "kappa", "E_g", "E_q", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be even and >= 2, got {self.n}")

    def replace(self, **changes) -> "LaserParams":
        return dataclasses.replace(self, **changes)

    @property
    def sqrt_kappa(self) -> float:
        return float(np.sqrt(self.kappa))


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(LaserParams)}


def load_params(path: str | Path) -> LaserParams:
    """Read ``key=value`` lines (``#`` starts a comment) into :class:`LaserParams`."""
    values: dict[str, float | int] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
        if key in values:
            raise ValueError(f"{path}:{lineno}: duplicate parameter {key!r}")
        try:
            values[key] = int(value) if key == "n" else float(value)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    missing = [name for name, f in ((f.name, f) for f in dataclasses.fields(LaserParams))
               if f.default is dataclasses.MISSING and name not in values]
    if missing:
        raise ValueError(f"{path}: missing parameters {missing}")
    return LaserParams(**values)


def case_study_params(psi: float | None = None) -> LaserParams:
    """Parameter set of the 8-laser case study (bundled ``paper.cfg``).

    ``psi`` overrides the coupling phase, which the bundled file leaves at 0.
    """
    p = load_params(Path(__file__).with_name("data") / "paper.cfg")
    return p if psi is None else p.replace(psi=psi)


@dataclass(frozen=True)
class NodeState:
    g: float
    q: float
    a: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.g, self.q, np.real(self.a), np.imag(self.a)], dtype=float)

    @classmethod
    def from_array(cls, v) -> "NodeState":
        return cls(float(v[0]), float(v[1]), complex(v[2], v[3]))


def _node_terms(p: LaserParams, alpha, g, q, a, gd, qd, ad):
    a2 = np.abs(a) ** 2
    # relaxation written against the laser-off levels so those are exact zeros in floating point
    dg = p.gamma_g * (alpha / p.gamma_g - g) - np.exp(-q) * np.expm1(g) * a2 / p.E_g
    dq = p.gamma_q * (p.q0 / p.gamma_q - q) + np.expm1(-q) * a2 / p.E_q
    gain = np.exp(0.5 * ((1 - 1j * p.eta_g) * gd - (1 - 1j * p.eta_q) * qd))
    da = -p.gamma * a + p.gamma * p.sqrt_kappa * gain * ad
    return dg, dq, da


def node_rhs(p: LaserParams, alpha: float, now: NodeState, delayed: NodeState) -> NodeState:
    """Time derivative of a single uncoupled laser."""
    # length-1 arrays take the same vectorized code path as network_rhs, so the
    # decoupled ring agrees with n copies of this function to the last bit
    args = (np.array([v]) for v in (now.g, now.q, now.a, delayed.g, delayed.q, delayed.a))
    dg, dq, da = _node_terms(p, alpha, *args)
    return NodeState(float(dg[0]), float(dq[0]), complex(da[0]))


def pack(g, q, a) -> np.ndarray:
    """Stack per-node ``g``, ``q`` and complex ``a`` into the ``(n, 4)`` real chart."""
    a = np.asarray(a, dtype=complex)
    return np.stack([np.broadcast_to(g, a.shape), np.broadcast_to(q, a.shape), a.real, a.imag],
                    axis=-1).astype(float)


def unpack(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1], x[..., 2] + 1j * x[..., 3]


def coupling_matrix(p: LaserParams) -> np.ndarray:
    """Real ``(4n, 4n)`` matrix of the ring coupling (without the ``eta`` factor).

    Node ``k`` receives ``C (x[k-1] + x[k+1])`` with ``C`` rotating the field by ``psi``.
    """
    if p.n < 3:
        raise ValueError("ring coupling needs n >= 3")
    c, s = np.cos(p.psi), np.sin(p.psi)
    block = np.zeros((4, 4))
    block[2:, 2:] = [[c, -s], [s, c]]
    ring = np.roll(np.eye(p.n), 1, axis=1) + np.roll(np.eye(p.n), -1, axis=1)
    return np.kron(ring, block)


def apply_coupling(p: LaserParams, x: np.ndarray) -> np.ndarray:
    """Coupling operator applied to a ``(n, 4)`` state; cheaper than the dense matrix."""
    g, q, a = unpack(x)
    out = np.exp(1j * p.psi) * (np.roll(a, 1, axis=-1) + np.roll(a, -1, axis=-1))
    return pack(np.zeros_like(g), np.zeros_like(q), out)


History = Callable[[float], np.ndarray]


def network_rhs(p: LaserParams, alpha: float, now: np.ndarray, history: History | np.ndarray) -> np.ndarray:
    """Right-hand side of the coupled ring.

    ``history`` is either a callable ``theta -> (n, 4)`` state on ``[-T, 0]`` or
    directly the delayed state ``x(t - T)``.
    """
    delayed = history(-p.T) if callable(history) else history
    g, q, a = unpack(now)
    gd, qd, ad = unpack(delayed)
    dg, dq, da = _node_terms(p, alpha, g, q, a, gd, qd, ad)
    out = pack(dg, dq, da)
    if p.eta != 0.0:
        out = out + p.eta * apply_coupling(p, now)
    return out


def trivial_equilibrium(p: LaserParams, alpha: float) -> np.ndarray:
    """Laser-off state: every node at ``(alpha/gamma_g, q0/gamma_q, 0)``."""
    return pack(np.full(p.n, alpha / p.gamma_g), np.full(p.n, p.q0 / p.gamma_q), np.zeros(p.n))
