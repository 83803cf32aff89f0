"""First-order minimal-length corrections.

The deformation term is H_I = (beta/m) (d_x^4 + d_y^4 + 2 d_x^2 d_y^2). The
bracket is the squared Laplacian, which is invariant under the complex
orthogonal normal-mode rotation, so in normal coordinates

    d_X = sqrt(alpha1^2 / 2) (a1 - a1^dag),   d_Y = sqrt(alpha2^2 / 2) (a2 - a2^dag)

and every matrix element is a polynomial in alpha1^2, alpha2^2. In the broken
phase those polynomials are evaluated at complex alpha^2 (bilinear pairing, no
conjugation of mode parameters).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import AsymmetricGrid, DegeneracyError
from .hermite import hermite_eval
from .model import (DerivedModes, ModelParams, PhaseClass, StateIndex, energy,
                    rotate_to_normal)

#: |E_n - E_m| below this fraction of max(1, |E_n|) is treated as a collision.
DEGENERACY_RTOL = 1e-9

ERRATUM_MODES = ("corrected", "printed")

#: Offsets (m1 - n1, m2 - n2) reachable by H_I, including the diagonal.
ALLOWED_OFFSETS = frozenset(
    (d1, d2)
    for d1 in (-4, -2, 0, 2, 4)
    for d2 in (-4, -2, 0, 2, 4)
    if abs(d1) + abs(d2) <= 4
)


@lru_cache(maxsize=None)
def _ladder_integer_image(power: int, n: int) -> dict:
    # (a - a^dag)^power acting on the unnormalised state |n) = (a^dag)^n |0>,
    # where a^dag|j) = |j+1) and a|j) = j|j-1) keep everything integral.
    state = {n: 1}
    for _ in range(power):
        nxt = {}
        for j, c in state.items():
            if j:
                nxt[j - 1] = nxt.get(j - 1, 0) + j * c
            nxt[j + 1] = nxt.get(j + 1, 0) - c
        state = {j: c for j, c in nxt.items() if c}
    return state


def ladder_element_exact(power: int, m: int, n: int) -> tuple[int, Fraction]:
    """<m|(a - a^dag)^power|n> as (C, r) meaning C * sqrt(r), both exact."""
    c = _ladder_integer_image(power, n).get(m, 0)
    return c, Fraction(math.factorial(m), math.factorial(n))


def ladder_element(power: int, m: int, n: int) -> float:
    c, ratio = ladder_element_exact(power, m, n)
    if c == 0:
        return 0.0
    if ratio.denominator == 1 and ratio.numerator == 1:
        return float(c)
    return c * math.sqrt(ratio)


@dataclass(frozen=True)
class LadderBlock:
    """Exact table of <m|(a - a^dag)^power|n> for one mode, m, n < size."""

    mode: int
    power: int
    size: int
    entries: dict = field(repr=False)

    @classmethod
    def build(cls, mode: int, power: int, size: int) -> "LadderBlock":
        entries = {}
        for n in range(size):
            for m in range(size):
                c, r = ladder_element_exact(power, m, n)
                if c:
                    entries[(m, n)] = (c, r)
        return cls(mode, power, size, entries)

    def as_array(self) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for (m, n), (c, r) in self.entries.items():
            out[m, n] = c * math.sqrt(r)
        return out


def delta_energy_coefficients(state: StateIndex, erratum: str = "corrected"):
    """Exact (a, b, c) with dE = beta/(2m) [a alpha1^4 + b alpha2^4 + c alpha1^2 alpha2^2].

    ``erratum="printed"`` reproduces the misprint that puts alpha1^4 on the
    second term as well, for fault-injection only.
    """
    if erratum not in ERRATUM_MODES:
        raise ValueError(f"unknown erratum mode {erratum!r}")
    n1, n2 = state
    a = 3 * (Fraction(n1 * n1 + n1) + Fraction(1, 2))
    b = 3 * (Fraction(n2 * n2 + n2) + Fraction(1, 2))
    c = Fraction((2 * n1 + 1) * (2 * n2 + 1))
    if erratum == "printed":
        return a + b, Fraction(0), c
    return a, b, c


def delta_energy(modes: DerivedModes, state: StateIndex, params: ModelParams,
                 erratum: str = "corrected") -> complex:
    """Closed-form first-order energy shift <psi_n|H_I|psi_n>."""
    modes.require()
    a, b, c = delta_energy_coefficients(state, erratum)
    a1, a2 = modes.alpha1_sq, modes.alpha2_sq
    bracket = float(a) * (a1 * a1) + float(b) * (a2 * a2) + float(c) * (a1 * a2)
    return params.beta / (2 * params.m) * bracket


def h_int_matrix_element(modes: DerivedModes, bra: StateIndex, ket: StateIndex,
                         params: ModelParams) -> complex:
    """<psi_bra|H_I|psi_ket> by ladder algebra in the normal-mode basis."""
    modes.require()
    d1, d2 = bra.n1 - ket.n1, bra.n2 - ket.n2
    if (d1, d2) not in ALLOWED_OFFSETS:
        return 0j
    a1, a2 = modes.alpha1_sq, modes.alpha2_sq
    value = 0j
    if d2 == 0:
        value += a1 * a1 / 4 * ladder_element(4, bra.n1, ket.n1)
    if d1 == 0:
        value += a2 * a2 / 4 * ladder_element(4, bra.n2, ket.n2)
    if abs(d1) <= 2 and abs(d2) <= 2:
        value += (a1 * a2 / 2) * ladder_element(2, bra.n1, ket.n1) * ladder_element(2, bra.n2, ket.n2)
    return params.beta / params.m * value


def coupled_states(state: StateIndex) -> list[StateIndex]:
    """Off-diagonal states that H_I connects to ``state`` (at most 12)."""
    out = []
    for d1, d2 in sorted(ALLOWED_OFFSETS):
        if (d1, d2) == (0, 0):
            continue
        m1, m2 = state.n1 + d1, state.n2 + d2
        if m1 >= 0 and m2 >= 0:
            out.append(StateIndex(m1, m2))
    return out


@dataclass(frozen=True)
class CorrectionReport:
    state: StateIndex
    delta_E: complex
    matrix_elements: dict
    M_coefficients: dict
    pt_preserved: bool


def check_nondegenerate(modes: DerivedModes, state: StateIndex) -> None:
    """Raise :class:`DegeneracyError` if any first-order denominator vanishes."""
    modes.require()
    if modes.phase is PhaseClass.CRITICAL:
        raise DegeneracyError(state, state.swapped(),
                              "critical coupling: c1 = c2 at an exceptional point")
    e_n = energy(modes, state)
    tol = DEGENERACY_RTOL * max(1.0, abs(e_n))
    for partner in coupled_states(state):
        if abs(e_n - energy(modes, partner)) < tol:
            raise DegeneracyError(state, partner, "vanishing energy denominator")


def correction_coefficients(modes: DerivedModes, state: StateIndex,
                            params: ModelParams) -> dict:
    """M_m = <psi_m|H_I|psi_n> / (E_n - E_m) for every coupled m."""
    check_nondegenerate(modes, state)
    e_n = energy(modes, state)
    return {m: h_int_matrix_element(modes, m, state, params) / (e_n - energy(modes, m))
            for m in coupled_states(state)}


def wavefunction_correction(modes: DerivedModes, state: StateIndex,
                            params: ModelParams) -> CorrectionReport:
    coeffs = correction_coefficients(modes, state, params)
    elements = {state: h_int_matrix_element(modes, state, state, params)}
    elements.update({m: h_int_matrix_element(modes, m, state, params) for m in coeffs})
    return CorrectionReport(
        state=state,
        delta_E=delta_energy(modes, state, params),
        matrix_elements=elements,
        M_coefficients=coeffs,
        pt_preserved=_pt_preserved(modes, state, params, coeffs),
    )


def normalization(modes: DerivedModes, state: StateIndex) -> complex:
    n1, n2 = state
    return cmath.sqrt(modes.alpha1 * modes.alpha2
                      / (math.factorial(n1) * math.factorial(n2) * math.pi * 2 ** (n1 + n2)))


def _normal_mode_function(modes, state, X, Y):
    a1, a2 = modes.alpha1, modes.alpha2
    gauss = np.exp(-(modes.alpha1_sq * X ** 2 + modes.alpha2_sq * Y ** 2) / 2)
    return normalization(modes, state) * gauss * hermite_eval(state.n1, a1 * X) * hermite_eval(state.n2, a2 * Y)


def evaluate_wavefunction(modes: DerivedModes, state: StateIndex, x, y,
                          params: ModelParams, include_correction: bool = False,
                          coefficients: dict | None = None):
    """psi_{n1,n2}(x, y), optionally plus the first-order correction sum M_m psi_m.

    The Gaussian carries alpha^2 = m c so that the Hermite argument is alpha X
    and the state is normalised to 1 (bilinearly in the complex phases).
    """
    modes.require()
    X, Y = rotate_to_normal(modes, x, y)
    psi = _normal_mode_function(modes, state, X, Y)
    if include_correction:
        if coefficients is None:
            coefficients = correction_coefficients(modes, state, params)
        for m, c in coefficients.items():
            psi = psi + c * _normal_mode_function(modes, m, X, Y)
    return psi


def _check_symmetric(axis_values, name):
    v = np.asarray(axis_values, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
    if v.size == 0 or np.max(np.abs(v + v[::-1])) > 1e-12 * scale:
        raise AsymmetricGrid(f"{name} grid is not symmetric about 0")


def pt_apply(samples, xs, ys, parity_axis: str = "x"):
    """(PT psi)(x, y) = conj(psi(-x, y)) (or with y flipped) on a tensor grid.

    ``samples[i, j]`` holds psi(xs[i], ys[j]).
    """
    samples = np.asarray(samples)
    if parity_axis == "x":
        _check_symmetric(xs, "x")
        return np.conj(samples[::-1, :])
    if parity_axis == "y":
        _check_symmetric(ys, "y")
        return np.conj(samples[:, ::-1])
    raise ValueError(f"parity axis must be 'x' or 'y', got {parity_axis!r}")


def pt_eigenvalue(samples, xs, ys, parity_axis: str = "x") -> tuple[complex, float]:
    """Least-squares eta with PT psi = eta psi, and the max pointwise residual
    relative to max |psi|."""
    samples = np.asarray(samples)
    image = pt_apply(samples, xs, ys, parity_axis)
    norm = np.vdot(samples, samples).real
    if norm == 0:
        return 0j, 0.0
    eta = np.vdot(samples, image) / norm
    dev = np.max(np.abs(image - eta * samples)) / np.max(np.abs(samples))
    return complex(eta), float(dev)


def symmetric_grid(modes: DerivedModes, points: int = 21, extent: float | None = None):
    if extent is None:
        scale = min(abs(modes.alpha1_sq), abs(modes.alpha2_sq))
        extent = 3.0 / math.sqrt(scale) if scale > 0 else 3.0
    xs = np.linspace(-extent, extent, points)
    xs = (xs - xs[::-1]) / 2  # exact mirror symmetry
    return xs, xs.copy()


def _pt_preserved(modes, state, params, coeffs, tol=1e-10) -> bool:
    if not modes.phase.real_spectrum:
        return False
    xs, ys = symmetric_grid(modes, points=11)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    base = evaluate_wavefunction(modes, state, gx, gy, params)
    full = evaluate_wavefunction(modes, state, gx, gy, params, True, coeffs)
    for axis in ("x", "y"):
        eta0, dev0 = pt_eigenvalue(base, xs, ys, axis)
        eta1, dev1 = pt_eigenvalue(full, xs, ys, axis)
        if dev0 < tol and (dev1 > tol or abs(eta1 - eta0) > tol):
            return False
        if dev0 < tol:
            return True
    return False
