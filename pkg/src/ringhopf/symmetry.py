"""Dihedral ring symmetry: group elements, twisted subgroups and isotypic blocks.

Phases in ``S^1`` that occur in the twisted subgroups below are all 8th roots
of unity, so they are stored as integers ``p`` meaning ``exp(2 pi i p / 8)``.

The isotypic components used for the spectral reduction are Fourier modes of
the ring written in the co-rotating coordinates of a discrete rotating wave
with twist ``l``: node ``k`` of a mode-``m`` vector equals
``R(2 pi l k / n) exp(2 pi i m k / n) z`` for ``z`` in the complexified chart
``(g, q, Re a, Im a)``, where ``R`` rotates the field plane.  For ``l = 0``
these are the ordinary discrete Fourier modes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import LaserParams, apply_coupling, coupling_matrix, unpack

__all__ = [
    "DihedralElement",
    "TwistedOrbitType",
    "IsotypicalIndex",
    "AMBIENTS",
    "ambient_twist",
    "all_indices",
    "table_rows",
    "catalog",
    "orbit_type",
    "branch_count",
    "classify_relative_equilibrium",
    "action_matrix",
    "ambient_generators",
    "component_basis",
    "coupling_block",
    "closed_form_coupling_block",
    "verify_coupling_blocks",
    "catalog_json",
]

N = 8


@dataclass(frozen=True, order=True)
class DihedralElement:
    """``xi**rotation_power`` followed by the reflection when ``reflected``."""

    rotation_power: int
    reflected: bool = False
    n: int = N

    def __post_init__(self):
        if not 0 <= self.rotation_power < self.n:
            object.__setattr__(self, "rotation_power", self.rotation_power % self.n)

    def __mul__(self, other: "DihedralElement") -> "DihedralElement":
        sign = -1 if self.reflected else 1
        return DihedralElement((self.rotation_power + sign * other.rotation_power) % self.n,
                               self.reflected != other.reflected, self.n)

    def permutation(self) -> np.ndarray:
        """Index map ``k -> h(k)`` with ``xi(k) = k - 1`` and ``kappa(k) = -k``."""
        k = np.arange(self.n)
        if self.reflected:
            k = -k
        return (k - self.rotation_power) % self.n

    def __str__(self):
        r = "1" if self.rotation_power == 0 else ("xi" if self.rotation_power == 1 else f"xi^{self.rotation_power}")
        if self.reflected:
            return "kappa" if self.rotation_power == 0 else f"{r}*kappa"
        return r


Element = tuple  # (DihedralElement, phase, ...) with integer phases mod 8


def _mul(x: Element, y: Element) -> Element:
    return (x[0] * y[0],) + tuple((a + b) % N for a, b in zip(x[1:], y[1:]))


@dataclass(frozen=True)
class TwistedOrbitType:
    name: str
    bold: bool
    elements: frozenset = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def spatial_projection_order(self) -> int:
        return len({e[0] for e in self.elements})

    @property
    def label(self) -> str:
        return f"bold {self.name}" if self.bold else self.name

    def is_closed(self) -> bool:
        return all(_mul(x, y) in self.elements for x in self.elements for y in self.elements)

    def to_dict(self) -> dict:
        els = sorted(self.elements, key=lambda e: (e[0].reflected, e[0].rotation_power) + tuple(e[1:]))
        return {
            "name": self.name,
            "bold": self.bold,
            "elements": [[str(e[0])] + [int(p) for p in e[1:]] for e in els],
            "order": self.order,
            "spatial_projection_order": self.spatial_projection_order,
        }


@dataclass(frozen=True)
class IsotypicalIndex:
    ambient: str
    j: int
    sign: str | None = None

    def __post_init__(self):
        if self.j in (0, N // 2):
            if self.sign is not None:
                raise ValueError(f"component {self.j} is not split, sign must be None")
        elif self.sign not in ("+", "-"):
            raise ValueError(f"component {self.j} needs sign '+' or '-'")

    @property
    def mode(self) -> int:
        return (-self.j if self.sign == "-" else self.j) % N

    def __str__(self):
        return f"U{self.j}{self.sign or ''}"


AMBIENTS = ("equilibrium", "D8", "Z8t1", "Z8t2", "Z8t3", "D8d")
_TWIST = {"equilibrium": 0, "D8": 0, "D8d": 4, "Z8t1": 1, "Z8t2": 2, "Z8t3": 3}


def _check_ambient(ambient: str):
    if ambient not in _TWIST:
        raise ValueError(f"unsupported ambient symmetry {ambient!r}; expected one of {AMBIENTS}")


def ambient_twist(ambient: str) -> int:
    _check_ambient(ambient)
    return _TWIST[ambient]


def all_indices(ambient: str) -> list[IsotypicalIndex]:
    _check_ambient(ambient)
    out = [IsotypicalIndex(ambient, 0)]
    for j in range(1, N // 2):
        out += [IsotypicalIndex(ambient, j, "+"), IsotypicalIndex(ambient, j, "-")]
    out.append(IsotypicalIndex(ambient, N // 2))
    return out


def table_rows(ambient: str) -> dict[int, list[IsotypicalIndex]]:
    """Group the split halves into the five rows ``U_{j,1}`` used by the tables."""
    rows: dict[int, list[IsotypicalIndex]] = {}
    for idx in all_indices(ambient):
        rows.setdefault(idx.j, []).append(idx)
    return rows


# -- twisted subgroup data -------------------------------------------------------

def _r(k):
    return DihedralElement(k % N)


def _s(k):
    return DihedralElement(k % N, True)


def _graph(pairs: Iterable) -> frozenset:
    return frozenset(tuple(p) for p in pairs)


def _first_level() -> dict[str, frozenset]:
    K = range(N)
    return {
        "D8": _graph([(_r(k), 0) for k in K] + [(_s(k), 0) for k in K]),
        "D8d": _graph([(_r(k), 4 * k % N) for k in K] + [(_s(k), 4 * k % N) for k in K]),
        "D4d~": _graph([(_r(0), 0), (_r(2), 4), (_r(4), 0), (_r(6), 4),
                        (_s(1), 0), (_s(3), 4), (_s(5), 0), (_s(7), 4)]),
        "D4d": _graph([(_r(0), 0), (_r(2), 4), (_r(4), 0), (_r(6), 4),
                       (_s(0), 0), (_s(2), 4), (_s(4), 0), (_s(6), 4)]),
        "D2d": _graph([(_r(0), 0), (_r(4), 4), (_s(0), 0), (_s(4), 4)]),
        "D2d~": _graph([(_r(0), 0), (_r(4), 4), (_s(1), 0), (_s(5), 4)]),
        "Z8t1": _graph([(_r(k), k % N) for k in K]),
        "Z8t2": _graph([(_r(k), 2 * k % N) for k in K]),
        "Z8t3": _graph([(_r(k), 3 * k % N) for k in K]),
    }


def _ambient_phase(ambient: str, h: DihedralElement) -> int:
    """Phase attached to ``h`` inside the isotropy group of the branch."""
    l = _TWIST[ambient]
    if ambient in ("D8", "equilibrium"):
        return 0
    if ambient == "D8d":
        return 4 * h.rotation_power % N
    return l * h.rotation_power % N


def _second_level(ambient: str) -> dict[str, frozenset]:
    K = range(N)
    ph = lambda h: _ambient_phase(ambient, h)  # noqa: E731
    lift = lambda pairs: _graph([(h, ph(h), p) for h, p in pairs])  # noqa: E731
    if ambient.startswith("Z8"):
        return {
            "Z8": lift([(_r(k), 0) for k in K]),
            "Z8t1": lift([(_r(k), k % N) for k in K]),
            "Z8t2": lift([(_r(k), 2 * k % N) for k in K]),
            "Z8t3": lift([(_r(k), 3 * k % N) for k in K]),
            "Z8c": lift([(_r(k), 4 * k % N) for k in K]),
        }
    first = _first_level()
    # same spatio-temporal pattern as at the equilibrium, now as the second phase
    return {name: lift([(e[0], e[1]) for e in first[name]])
            for name in ("D8", "D8d", "D4d", "D4d~", "D2d", "D2d~", "Z8t1", "Z8t2", "Z8t3")}


_CATALOG_NAMES = {
    "equilibrium": {0: ["D8"], 1: ["Z8t1", "D2d", "D2d~"], 2: ["Z8t2", "D4d", "D4d~"],
                    3: ["Z8t3", "D2d", "D2d~"], 4: ["D8d"]},
    "dihedral": {0: ["D8"], 1: ["Z8t1", "D2d", "D2d~"], 2: ["Z8t2", "D4d", "D4d~"],
                 3: ["Z8t3", "D2d", "D2d~"], 4: ["D8d"]},
    "cyclic": {0: ["Z8"], 1: ["Z8t1"], 2: ["Z8t2"], 3: ["Z8t3"], 4: ["Z8c"]},
}


def orbit_type(ambient: str, name: str) -> TwistedOrbitType:
    _check_ambient(ambient)
    if ambient == "equilibrium":
        return TwistedOrbitType(name, False, _first_level()[name])
    return TwistedOrbitType(name, True, _second_level(ambient)[name])


def catalog(ambient: str) -> list[tuple[int, list[TwistedOrbitType]]]:
    """Maximal twisted orbit types of each row ``j = 0..4`` for the given ambient symmetry."""
    _check_ambient(ambient)
    kind = "equilibrium" if ambient == "equilibrium" else ("cyclic" if ambient.startswith("Z8") else "dihedral")
    return [(j, [orbit_type(ambient, name) for name in names])
            for j, names in _CATALOG_NAMES[kind].items()]


def branch_count(t: TwistedOrbitType, ambient: str = "equilibrium") -> int:
    """Minimal number of branches with symmetry ``t`` (size of the group orbit)."""
    total = N if ambient.startswith("Z8") else 2 * N
    return total // t.spatial_projection_order


def catalog_json(ambients: Iterable[str] = AMBIENTS) -> str:
    doc = {}
    for amb in ambients:
        doc[amb] = [{"j": j, "orbit_types": [dict(t.to_dict(), branch_count=branch_count(t, amb))
                                             for t in types]}
                    for j, types in catalog(amb)]
    return json.dumps(doc, indent=2, sort_keys=True)


# -- relative equilibria ----------------------------------------------------------

def classify_relative_equilibrium(x: np.ndarray, tol: float = 1e-8) -> TwistedOrbitType | None:
    """Symmetry of a ring state, detected from its phase pattern.

    Returns ``None`` (the trivial type) when no pattern matches.
    """
    g, q, a = unpack(np.asarray(x))
    n = len(a)
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a)) == 0:
        raise ValueError("all field amplitudes vanish; not a relative equilibrium representative")
    first = _first_level()

    def same(u, v):
        return np.max(np.abs(u - v)) <= tol * scale

    if same(g, g[0]) and same(q, q[0]) and same(np.abs(a), np.abs(a[0])):
        for l in range(n):
            if same(a, a[0] * np.exp(2j * np.pi * l * np.arange(n) / n)):
                if l == 0:
                    return TwistedOrbitType("D8", False, first["D8"])
                if l == n // 2:
                    return TwistedOrbitType("D8d", False, first["D8d"])
                name = f"Z8t{l}" if l < n // 2 else None
                if name is None:
                    # twist n - l is the mirror image of twist l
                    name = f"Z8t{n - l}"
                return TwistedOrbitType(name, False, first[name])
    h = n // 2
    if same(g, np.roll(g, h)) and same(q, np.roll(q, h)) and same(a, -np.roll(a, h)):
        return TwistedOrbitType("D2d", False, first["D2d"])
    odd, even = slice(1, None, 2), slice(0, None, 2)
    if same(g[odd], g[even]) and same(q[odd], q[even]) and same(a[odd], -a[even]):
        return TwistedOrbitType("D2d~", False, first["D2d~"])
    return None


def action_matrix(h: DihedralElement, tau: float, n: int = N) -> np.ndarray:
    """Real ``(4n, 4n)`` matrix of ``(h, exp(i tau))``: node ``k`` becomes ``exp(i tau) x[h(k)]``.

    Substituting indices this way reverses products, ``A(g h) = A(h) A(g)``.
    """
    perm = np.zeros((n, n))
    perm[np.arange(n), h.permutation()] = 1.0
    rot = np.eye(4)
    c, s = np.cos(tau), np.sin(tau)
    rot[2:, 2:] = [[c, -s], [s, c]]
    return np.kron(perm, rot)


def ambient_generators(ambient: str) -> list[tuple[DihedralElement, float]]:
    _check_ambient(ambient)
    xi = DihedralElement(1)
    gens = [(xi, 2 * np.pi * _ambient_phase(ambient, xi) / N)]
    if not ambient.startswith("Z8"):
        gens.append((DihedralElement(0, True), 0.0))
    return gens


def _mode_basis(n: int, l: int, m: int) -> np.ndarray:
    k = np.arange(n)
    theta = 2 * np.pi * l * k / n
    phase = np.exp(2j * np.pi * m * k / n) / np.sqrt(n)
    B = np.zeros((n, 4, 4), dtype=complex)
    B[:, 0, 0] = phase
    B[:, 1, 1] = phase
    B[:, 2, 2] = np.cos(theta) * phase
    B[:, 3, 2] = np.sin(theta) * phase
    B[:, 2, 3] = -np.sin(theta) * phase
    B[:, 3, 3] = np.cos(theta) * phase
    return B.reshape(4 * n, 4)


def component_basis(ambient: str, idx: IsotypicalIndex | int) -> np.ndarray:
    """Orthonormal columns spanning one isotypic component of ``(C^4)^8``.

    A plain integer ``j`` in ``1..3`` returns both halves ``U_j^+ (+) U_j^-``,
    which is the component invariant under reflections.
    """
    l = ambient_twist(ambient)
    if isinstance(idx, IsotypicalIndex):
        return _mode_basis(N, l, idx.mode)
    j = int(idx)
    if j in (0, N // 2):
        return _mode_basis(N, l, j)
    return np.hstack([_mode_basis(N, l, j), _mode_basis(N, l, -j)])


def _rot4(angle) -> np.ndarray:
    R = np.eye(4, dtype=complex)
    c, s = np.cos(angle), np.sin(angle)
    R[2:, 2:] = [[c, -s], [s, c]]
    R[:2, :2] = 0.0
    return R


def coupling_block(ambient: str, idx: IsotypicalIndex, p: LaserParams) -> np.ndarray:
    """``eta * coupling`` restricted to ``component_basis(ambient, idx)`` (complex 4x4)."""
    l = ambient_twist(ambient)
    phi = 2 * np.pi * idx.mode / N
    theta = 2 * np.pi * l / N
    Jm = np.zeros((4, 4), dtype=complex)
    Jm[2:, 2:] = [[0, -1], [1, 0]]
    inner = 2 * np.cos(phi) * np.cos(theta) * _rot4(0.0) + 2j * np.sin(phi) * np.sin(theta) * Jm
    return p.eta * _rot4(p.psi) @ inner


def closed_form_coupling_block(ambient: str, idx: IsotypicalIndex, p: LaserParams) -> np.ndarray:
    """Coupling block as tabulated in closed form, ``2 eta a R(psi)`` on the field plane."""
    l = ambient_twist(ambient)
    n, r, j = N, N // 2, idx.j
    if ambient in ("D8", "equilibrium"):
        a = np.cos(2 * np.pi * j / n)
    elif ambient == "D8d":
        a = -np.cos(2 * np.pi * j / n)
    elif j == 0:
        a = np.cos(2 * np.pi * l / n)
    elif j == r:
        a = -np.cos(2 * np.pi * l / n)
    else:
        sj = j if idx.sign == "+" else -j
        a = np.cos(2 * np.pi * (sj - 1) * l / n)
    return p.eta * 2 * a * _rot4(p.psi)


@dataclass
class CouplingReport:
    ambient: str
    deviation: dict[str, float]
    closed_form_deviation: dict[str, float]
    tol: float

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.deviation.values())

    @property
    def mismatches(self) -> list[str]:
        return [k for k, v in self.deviation.items() if v > self.tol]

    @property
    def closed_form_errata(self) -> list[str]:
        return [k for k, v in self.closed_form_deviation.items() if v > self.tol]


def verify_coupling_blocks(ambient: str, p: LaserParams, tol: float = 1e-10) -> CouplingReport:
    """Compare each closed-form block with ``B^H (eta C) B`` computed from the dense matrix."""
    big = p.eta * coupling_matrix(p.replace(n=N))
    dev, closed_dev = {}, {}
    for idx in all_indices(ambient):
        B = component_basis(ambient, idx)
        numeric = B.conj().T @ big @ B
        dev[str(idx)] = float(np.max(np.abs(numeric - coupling_block(ambient, idx, p))))
        closed_dev[str(idx)] = float(np.max(np.abs(numeric - closed_form_coupling_block(ambient, idx, p))))
    return CouplingReport(ambient, dev, closed_dev, tol)
