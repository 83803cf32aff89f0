"""Normal modes, exact spectrum and PT phase of the 2D anisotropic oscillator

    H = p_x^2/2m + p_y^2/2m + m (wx^2 x^2 + wy^2 y^2)/2 + i lam x y

with hbar = 1. The potential matrix ``[[wx^2, i lam/m], [i lam/m, wy^2]]`` is
complex symmetric, so away from the exceptional point it is diagonalised by a
complex orthogonal rotation (R^T R = 1, no conjugation).
"""

from __future__ import annotations

import cmath
import dataclasses
import enum
import math
import operator
from collections import namedtuple
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ModesUnavailable

#: |lam| within this fraction of max(1, lam_c) from lam_c counts as critical.
CRITICAL_RTOL = 1e-9

ROTATION_CONVENTIONS = ("orthogonal", "printed")


class PhaseClass(str, enum.Enum):
    UNBROKEN = "unbroken"
    CRITICAL = "critical"
    BROKEN = "broken"
    ISOTROPIC_BROKEN = "isotropic_broken"
    DECOUPLED_ISOTROPIC = "decoupled"

    @property
    def has_modes(self) -> bool:
        return self is not PhaseClass.ISOTROPIC_BROKEN

    @property
    def real_spectrum(self) -> bool:
        return self in (PhaseClass.UNBROKEN, PhaseClass.CRITICAL,
                        PhaseClass.DECOUPLED_ISOTROPIC)


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs. ``beta`` is the minimal-length deformation (length^2)."""

    m: float = 1.0
    wx: float = 1.0
    wy: float = 2.0
    lam: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("m", "wx", "wy", "lam", "beta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m!r}")
        if self.wx < 0 or self.wy < 0:
            raise ValueError("frequencies must be non-negative")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta!r}")

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class StateIndex(namedtuple("StateIndex", "n1 n2")):
    """Quantum numbers (n1, n2) of the two normal modes."""

    __slots__ = ()

    def __new__(cls, n1, n2):
        n1, n2 = operator.index(n1), operator.index(n2)
        if n1 < 0 or n2 < 0:
            raise ValueError(f"quantum numbers must be non-negative, got ({n1}, {n2})")
        return super().__new__(cls, n1, n2)

    def swapped(self) -> "StateIndex":
        return StateIndex(self.n2, self.n1)


def states_up_to(nmax: int) -> list[StateIndex]:
    """All states with n1 + n2 <= nmax, ordered by total quantum number."""
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    return [StateIndex(n - j, j) for n in range(nmax + 1) for j in range(n + 1)]


@dataclass(frozen=True, eq=False)
class DerivedModes:
    """Normal-mode data derived from :class:`ModelParams`.

    ``c1``, ``c2``, ``alpha*_sq``, ``k_inv`` and ``rotation`` are ``None`` in the
    isotropic broken case where no finite formulas exist. At the critical
    coupling the potential matrix is defective; ``rotation`` is then the 45
    degree limiting convention and ``rotation_is_convention`` is set.
    """

    m: float
    omega_plus_sq: float
    omega_minus_sq: float
    lambda_crit: float
    phase: PhaseClass
    k_inv: Optional[complex] = None
    c1: Optional[complex] = None
    c2: Optional[complex] = None
    alpha1_sq: Optional[complex] = None
    alpha2_sq: Optional[complex] = None
    rotation: Optional[np.ndarray] = None
    rotation_is_convention: bool = False
    rotation_convention: str = "orthogonal"

    @property
    def available(self) -> bool:
        return self.c1 is not None

    def require(self) -> "DerivedModes":
        if not self.available:
            raise ModesUnavailable(
                f"no normal modes in phase {self.phase.value!r} "
                "(isotropic frequencies with nonzero coupling)")
        return self

    @property
    def k(self) -> complex:
        self.require()
        return complex(math.inf) if self.k_inv == 0 else 1 / self.k_inv

    @property
    def alpha1(self) -> complex:
        return cmath.sqrt(self.require().alpha1_sq)

    @property
    def alpha2(self) -> complex:
        return cmath.sqrt(self.require().alpha2_sq)


def classify_phase(params: ModelParams) -> PhaseClass:
    wm2 = params.wy ** 2 - params.wx ** 2
    if wm2 == 0:
        return PhaseClass.DECOUPLED_ISOTROPIC if params.lam == 0 else PhaseClass.ISOTROPIC_BROKEN
    lam_c = abs(params.m * wm2 / 2)
    lam = abs(params.lam)
    if abs(lam - lam_c) <= CRITICAL_RTOL * max(1.0, lam_c):
        return PhaseClass.CRITICAL
    return PhaseClass.UNBROKEN if lam < lam_c else PhaseClass.BROKEN


def derive_modes(params: ModelParams, rotation_convention: str = "orthogonal") -> DerivedModes:
    """Compute k^-1, c1, c2, alpha^2 = m c and the (x, y) -> (X, Y) rotation.

    All complex roots are principal. ``rotation_convention="printed"`` keeps
    the non-orthogonal sign of the Y row ``Y = s x - c y``; it exists only so
    the verification suite can show that it detects it.
    """
    if rotation_convention not in ROTATION_CONVENTIONS:
        raise ValueError(f"unknown rotation convention {rotation_convention!r}")
    m, wx, wy, lam = params.m, params.wx, params.wy, params.lam
    wp2 = wy ** 2 + wx ** 2
    wm2 = wy ** 2 - wx ** 2
    lam_c = abs(m * wm2 / 2)
    phase = classify_phase(params)
    base = dict(m=m, omega_plus_sq=wp2, omega_minus_sq=wm2, lambda_crit=lam_c, phase=phase,
                rotation_convention=rotation_convention)
    if phase is PhaseClass.ISOTROPIC_BROKEN:
        return DerivedModes(**base)

    convention = False
    if lam == 0:
        k_inv = 1 + 0j
        c1, c2 = complex(wx), complex(wy)
        rotation = np.eye(2, dtype=complex)
    else:
        if phase is PhaseClass.CRITICAL:
            k_inv = 0j
        else:
            k_inv = cmath.sqrt(1 - 4 * lam ** 2 / (m ** 2 * wm2 ** 2))
        c1 = cmath.sqrt((wp2 - wm2 * k_inv) / 2)
        c2 = cmath.sqrt((wp2 + wm2 * k_inv) / 2)
        if phase is PhaseClass.CRITICAL:
            rotation = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2)
            convention = True
        else:
            rotation = _mixing_rotation(k_inv, lam, m, wm2, rotation_convention)

    return DerivedModes(**base, k_inv=k_inv, c1=c1, c2=c2, alpha1_sq=m * c1, alpha2_sq=m * c2,
                        rotation=rotation, rotation_is_convention=convention)


def _mixing_rotation(k_inv, lam, m, wm2, convention):
    k = 1 / k_inv
    c = cmath.sqrt((1 + k) / 2)
    if convention == "printed":
        s = cmath.sqrt((1 - k) / 2)
        return np.array([[c, -s], [s, -c]], dtype=complex)
    # s^2 = (1 - k)/2; this branch of s also cancels the off-diagonal element.
    s = 1j * lam * k / (m * wm2 * c)
    return np.array([[c, -s], [s, c]], dtype=complex)


def energy(modes: DerivedModes, state: StateIndex) -> complex:
    modes.require()
    return (state.n1 + 0.5) * modes.c1 + (state.n2 + 0.5) * modes.c2


def spectrum(modes: DerivedModes, nmax: int) -> dict[StateIndex, complex]:
    return {s: energy(modes, s) for s in states_up_to(nmax)}


def rotate_to_normal(modes: DerivedModes, x, y):
    """Map lab coordinates to normal coordinates. Works elementwise on arrays."""
    r = modes.require().rotation
    x = np.asarray(x)
    y = np.asarray(y)
    return r[0, 0] * x + r[0, 1] * y, r[1, 0] * x + r[1, 1] * y


def rotate_from_normal(modes: DerivedModes, X, Y):
    rinv = np.linalg.inv(modes.require().rotation)
    X = np.asarray(X)
    Y = np.asarray(Y)
    return rinv[0, 0] * X + rinv[0, 1] * Y, rinv[1, 0] * X + rinv[1, 1] * Y


def potential_matrix(params: ModelParams) -> np.ndarray:
    """A with V = (m/2) r^T A r."""
    off = 1j * params.lam / params.m
    return np.array([[params.wx ** 2, off], [off, params.wy ** 2]], dtype=complex)


def normal_form_deviation(modes: DerivedModes, params: ModelParams) -> float:
    """Max deviation of R A R^T from diag(c1^2, c2^2) plus that of R^T R from 1."""
    r = modes.require().rotation
    target = np.diag([modes.c1 ** 2, modes.c2 ** 2])
    d1 = np.max(np.abs(r @ potential_matrix(params) @ r.T - target))
    d2 = np.max(np.abs(r.T @ r - np.eye(2)))
    return float(max(d1, d2))
