"""Brute-force checks that share no code path with the closed forms.

The full deformed Hamiltonian is written in the product eigenbasis of the
*decoupled* oscillators (frequencies wx, wy), truncated to n1, n2 < N, and
diagonalised with a dense general complex eigensolver. Nothing here uses the
normal-mode rotation, so the oracle can falsify it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import (BrokenPhaseUnsupported, ConvergenceFailure, CutoffTooSmall,
                     ResourceGuard, TrackingAmbiguous, TruncationZoneError, ZeroFrequency)
from .hermite import gauss_hermite_rule, gaussian_derivative_eval, hermite_eval
from .model import (CRITICAL_RTOL, DerivedModes, ModelParams, PhaseClass, StateIndex, derive_modes,
                    energy, states_up_to)
from .perturbation import delta_energy, evaluate_wavefunction

DEFAULT_CUTOFF = 30
MIN_CUTOFF = 8
MAX_ROWS = 4096
OVERLAP_MIN = 0.9


@dataclass(frozen=True, eq=False)
class TruncatedHamiltonian:
    cutoff: int
    params: ModelParams
    matrix: np.ndarray = field(repr=False)

    @property
    def index(self) -> np.ndarray:
        """Row r holds the basis state (n1, n2) = (r // N, r % N)."""
        n = np.arange(self.cutoff)
        return np.stack(np.meshgrid(n, n, indexing="ij"), -1).reshape(-1, 2)

    def row_of(self, state: StateIndex) -> int:
        if max(state) >= self.cutoff:
            raise IndexError(f"{tuple(state)} lies outside cutoff {self.cutoff}")
        return state.n1 * self.cutoff + state.n2

    def parity_sectors(self) -> list[np.ndarray]:
        total = self.index.sum(axis=1) % 2
        return [np.flatnonzero(total == p) for p in (0, 1)]


def _single_mode_operators(size, mass, omega):
    # Products are formed in a padded space so the truncated x^2, d^2, d^4
    # carry exact operator matrix elements rather than products of truncations.
    pad = size + 4
    a = np.diag(np.sqrt(np.arange(1, pad)), 1)
    x = (a + a.T) / math.sqrt(2 * mass * omega)
    d = math.sqrt(mass * omega / 2) * (a - a.T)
    d2 = d @ d
    d4 = d2 @ d2
    x2 = x @ x
    cut = slice(0, size)
    return x[cut, cut], x2[cut, cut], d2[cut, cut], d4[cut, cut]


def _assemble(params: ModelParams, cutoff: int):
    if params.wx <= 0 or params.wy <= 0:
        raise ZeroFrequency("reference basis needs wx > 0 and wy > 0")
    if cutoff < MIN_CUTOFF:
        raise CutoffTooSmall(f"cutoff must be >= {MIN_CUTOFF}, got {cutoff}")
    m = params.m
    x1, xx1, dd1, d41 = _single_mode_operators(cutoff, m, params.wx)
    x2, xx2, dd2, d42 = _single_mode_operators(cutoff, m, params.wy)
    eye = np.eye(cutoff)
    k1 = -dd1 / (2 * m) + m * params.wx ** 2 * xx1 / 2
    k2 = -dd2 / (2 * m) + m * params.wy ** 2 * xx2 / 2
    h0 = (np.kron(k1, eye) + np.kron(eye, k2)).astype(complex)
    if params.lam:
        h0 += 1j * params.lam * np.kron(x1, x2)
    unit_deformation = (np.kron(d41, eye) + np.kron(eye, d42) + 2 * np.kron(dd1, dd2)) / m
    return h0, unit_deformation


def build_hamiltonian(params: ModelParams, cutoff: int = DEFAULT_CUTOFF) -> TruncatedHamiltonian:
    """H = -(d_x^2 + d_y^2)/2m + m(wx^2 x^2 + wy^2 y^2)/2 + i lam x y
           + (beta/m)(d_x^4 + d_y^4 + 2 d_x^2 d_y^2)."""
    h0, unit = _assemble(params, cutoff)
    if params.beta:
        h0 = h0 + params.beta * unit
    return TruncatedHamiltonian(cutoff, params, h0)


def diagonalize(h: TruncatedHamiltonian, vectors: bool = False, max_rows: int = MAX_ROWS,
                split_parity: bool = True):
    """Eigenvalues (and right eigenvectors as columns) sorted by (Re, Im).

    The total parity (-1)^(n1+n2) is conserved by both couplings, so by default
    each parity sector is solved separately; the off-sector blocks are checked
    to be exactly zero first.
    """
    mat = h.matrix
    rows = mat.shape[0]
    if rows > max_rows:
        raise ResourceGuard(f"matrix has {rows} rows, guard is {max_rows}")
    if not np.all(np.isfinite(mat)):
        raise ConvergenceFailure("matrix has non-finite entries")
    sectors = h.parity_sectors() if split_parity else [np.arange(rows)]
    if split_parity and np.any(mat[np.ix_(sectors[0], sectors[1])]) \
            or split_parity and np.any(mat[np.ix_(sectors[1], sectors[0])]):
        sectors = [np.arange(rows)]

    vals = np.empty(rows, dtype=complex)
    vecs = np.zeros((rows, rows), dtype=complex) if vectors else None
    start = 0
    try:
        for idx in sectors:
            block = mat[np.ix_(idx, idx)]
            stop = start + len(idx)
            if vectors:
                w, v = scipy.linalg.eig(block, check_finite=False)
                vecs[idx, start:stop] = v
            else:
                w = scipy.linalg.eigvals(block, check_finite=False)
            vals[start:stop] = w
            start = stop
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc

    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    if not vectors:
        return vals
    vecs = vecs[:, order]
    resid = np.linalg.norm(mat @ vecs - vecs * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    bad = resid > 1e-8 * np.maximum(1.0, np.abs(vals))
    if np.any(bad):
        raise ConvergenceFailure(f"eigenpair residual {resid.max():.3e} too large")
    return vals, vecs


@dataclass(frozen=True)
class SpectrumComparison:
    states: list
    analytic: np.ndarray
    numeric: np.ndarray
    max_abs_dev: float
    max_rel_dev: float
    cutoff: int

    @property
    def count(self) -> int:
        return len(self.states)

    @property
    def pairs(self):
        return list(zip(self.states, self.analytic, self.numeric))


def check_truncation_zone(nmax: int, cutoff: int) -> None:
    if 2 * nmax > cutoff:
        raise TruncationZoneError(
            f"states with n1 + n2 = {nmax} exceed the truncation-safe zone n1 + n2 <= "
            f"{cutoff // 2} for cutoff {cutoff}")


def compare_spectrum(params: ModelParams, cutoff: int = DEFAULT_CUTOFF, nmax: int = 4,
                     first_order: bool = False, numeric=None,
                     modes: DerivedModes | None = None) -> SpectrumComparison:
    """Match closed-form energies for n1 + n2 <= nmax to the truncated spectrum.

    Matching is a minimum-cost assignment on |E_analytic - E_numeric|, so it
    is injective. With ``first_order`` the analytic side is E + dE.
    """
    check_truncation_zone(nmax, cutoff)
    if modes is None:
        modes = derive_modes(params)
    states = states_up_to(nmax)
    analytic = np.array([energy(modes, s) for s in states])
    if first_order:
        analytic = analytic + np.array([delta_energy(modes, s, params) for s in states])
    if numeric is None:
        numeric = diagonalize(build_hamiltonian(params, cutoff))
    cost = np.abs(analytic[:, None] - numeric[None, :])
    rows, cols = linear_sum_assignment(cost)
    matched = np.empty_like(analytic)
    matched[rows] = numeric[cols]
    dev = np.abs(analytic - matched)
    rel = dev / np.maximum(np.abs(analytic), 1e-300)
    return SpectrumComparison(states, analytic, matched, float(dev.max()), float(rel.max()), cutoff)


def conjugate_pair_deviation(eigenvalues, count: int = 10) -> float:
    """Worst distance from one of the ``count`` lowest eigenvalues (by real part)
    to the complex conjugate of any eigenvalue in the list."""
    eig = np.asarray(eigenvalues)
    low = eig[np.argsort(eig.real, kind="stable")[:count]]
    dist = np.abs(low[:, None] - np.conj(eig)[None, :])
    return float(dist.min(axis=1).max())


def _overlaps(prev, vecs):
    num = np.abs(prev.conj().T @ vecs)
    return num / np.outer(np.linalg.norm(prev, axis=0), np.linalg.norm(vecs, axis=0))


def _follow(prev, vals, vecs, labels, what):
    ov = _overlaps(prev, vecs)
    picks = ov.argmax(axis=1)
    best = ov[np.arange(len(picks)), picks]
    if np.any(best < OVERLAP_MIN) or len(set(picks)) != len(picks):
        worst = int(best.argmin())
        raise TrackingAmbiguous(
            f"lost track of {tuple(labels[worst])} while stepping {what} "
            f"(best overlap {best[worst]:.3f})")
    return vals[picks], vecs[:, picks]


def track_states(params: ModelParams, states, cutoff: int = DEFAULT_CUTOFF,
                 lambda_step: float | None = None):
    """Follow basis states (n1, n2) of the lam = 0 problem to ``params.lam``.

    Returns eigenvalues and right eigenvectors (columns, ordered like
    ``states``) of the beta = 0 truncated Hamiltonian at the target coupling.
    The default step is lam_c / 6 and each step must keep an eigenvector
    overlap of at least 0.9. Targets at or beyond lam_c are refused: the
    labelled levels have coalesced there, and floating-point eigenvectors stay
    distinct enough to pass the overlap test, so it cannot catch this itself.
    """
    lam_c = abs(params.m * (params.wy ** 2 - params.wx ** 2) / 2)
    if params.lam and abs(params.lam) >= lam_c * (1 - CRITICAL_RTOL):
        raise TrackingAmbiguous(
            f"lambda = {params.lam:g} is not below the critical coupling {lam_c:g}; "
            "state labels are not defined past the coalescence")
    if lambda_step is None:
        lambda_step = lam_c / 6 if lam_c > 0 else 0.25
    states = [StateIndex(*s) for s in states]
    base = params.replace(lam=0.0, beta=0.0)
    h0 = build_hamiltonian(base, cutoff)
    rows = [h0.row_of(s) for s in states]
    vecs = np.eye(h0.matrix.shape[0], dtype=complex)[:, rows]
    vals = np.diag(h0.matrix)[rows]
    steps = max(1, math.ceil(abs(params.lam) / lambda_step)) if params.lam else 0
    for lam in np.linspace(0.0, params.lam, steps + 1)[1:]:
        w, v = diagonalize(build_hamiltonian(base.replace(lam=float(lam)), cutoff), vectors=True)
        vals, vecs = _follow(vecs, w, v, states, f"lambda to {lam:.4g}")
    return vals, vecs


def beta_slopes(params: ModelParams, states, cutoff: int = DEFAULT_CUTOFF, h: float = 1e-5,
                lambda_step: float | None = None) -> np.ndarray:
    """Central differences dE/dbeta at beta = 0 for several tracked states."""
    states = [StateIndex(*s) for s in states]
    for s in states:
        if 2 * (s.n1 + s.n2) > cutoff:
            raise TrackingAmbiguous(f"{tuple(s)} is outside the truncation-safe zone")
    _, vecs0 = track_states(params, states, cutoff, lambda_step)
    h0, unit = _assemble(params.replace(beta=0.0), cutoff)
    ends = []
    # -h is a finite-difference probe only; it never passes through ModelParams
    for beta in (h, -h):
        mat = TruncatedHamiltonian(cutoff, params, h0 + beta * unit)
        w, v = diagonalize(mat, vectors=True)
        e, _ = _follow(vecs0, w, v, states, f"beta to {beta:g}")
        ends.append(e)
    return (ends[0] - ends[1]) / (2 * h)


def beta_slope(params: ModelParams, state: StateIndex, cutoff: int = DEFAULT_CUTOFF,
               h: float = 1e-5) -> complex:
    return complex(beta_slopes(params, [state], cutoff, h)[0])


def quadrature_matrix_element(modes: DerivedModes, bra: StateIndex, ket: StateIndex,
                              params: ModelParams, order: int | None = None) -> complex:
    """<psi_bra|H_I|psi_ket> by 2D Gauss-Hermite quadrature in normal coordinates.

    Derivatives of e^{-s^2/2} H_n(s) come from the Leibniz blocks, not from
    ladder operators. Requires real alpha (no broken phase).
    """
    modes.require()
    if not modes.phase.real_spectrum:
        raise BrokenPhaseUnsupported("quadrature path needs real alpha; use the ladder path")
    if order is None:
        order = sum(bra) + sum(ket) + 8
    if order < sum(bra) + sum(ket) + 8:
        raise ValueError("quadrature order must be >= n + m + 8")
    rule = gauss_hermite_rule(order)
    s, w = rule.nodes, rule.weights
    a1, a2 = modes.alpha1_sq.real, modes.alpha2_sq.real

    def h(n):
        return hermite_eval(n, s)

    bra1, bra2 = h(bra.n1) * w, h(bra.n2) * w
    p4_1, p4_2 = gaussian_derivative_eval(ket.n1, 4, s), gaussian_derivative_eval(ket.n2, 4, s)
    p2_1, p2_2 = gaussian_derivative_eval(ket.n1, 2, s), gaussian_derivative_eval(ket.n2, 2, s)
    h1, h2 = h(ket.n1), h(ket.n2)
    integrand = (a1 ** 2 * np.outer(p4_1, h2) + a2 ** 2 * np.outer(h1, p4_2)
                 + 2 * a1 * a2 * np.outer(p2_1, p2_2))
    total = bra1 @ integrand @ bra2
    norm = math.pi * math.sqrt(2.0 ** (sum(bra) + sum(ket)) * math.factorial(bra.n1)
                               * math.factorial(bra.n2) * math.factorial(ket.n1)
                               * math.factorial(ket.n2))
    return complex(params.beta / params.m * total / norm)


def _oscillator_basis(nmax, s):
    """Normalised e^{-s^2/2} H_n(s) / sqrt(2^n n! sqrt(pi)) for n < nmax, rows = n."""
    out = np.empty((nmax, len(s)))
    out[0] = np.pi ** -0.25 * np.exp(-s ** 2 / 2)
    if nmax > 1:
        out[1] = math.sqrt(2) * s * out[0]
    for n in range(1, nmax - 1):
        out[n + 1] = math.sqrt(2 / (n + 1)) * s * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def project_onto_basis(modes: DerivedModes, state: StateIndex, params: ModelParams,
                       cutoff: int = DEFAULT_CUTOFF, points: int = 241) -> np.ndarray:
    """Coefficients of the closed-form psi_{n1,n2} in the decoupled product basis
    (trapezoid rule on a wide grid), flattened in :class:`TruncatedHamiltonian` order."""
    m = params.m
    widths = [1 / math.sqrt(m * params.wx), 1 / math.sqrt(m * params.wy)]
    lo = min(abs(modes.alpha1_sq), abs(modes.alpha2_sq), m * params.wx, m * params.wy)
    extent = 9 / math.sqrt(lo) + 1.5 * math.sqrt(2 * max(state) + 1) / math.sqrt(lo)
    xs = np.linspace(-extent, extent, points)
    dx = xs[1] - xs[0]
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    psi = evaluate_wavefunction(modes, state, gx, gy, params)
    bx = _oscillator_basis(cutoff, xs / widths[0]) / math.sqrt(widths[0])
    by = _oscillator_basis(cutoff, xs / widths[1]) / math.sqrt(widths[1])
    return (bx @ psi @ by.T * dx * dx).reshape(-1)


def eigenvector_overlap(modes: DerivedModes, state: StateIndex, params: ModelParams,
                        cutoff: int = DEFAULT_CUTOFF, spectrum=None, cluster_tol: float = 1e-8) -> float:
    """|P c| / |c| where c projects the closed-form eigenfunction onto the
    truncated basis and P is the orthogonal projector onto the span of the
    eigenvectors whose eigenvalues lie within ``cluster_tol`` of the nearest
    one to E_{n1,n2} (degenerate levels are compared as a subspace)."""
    if spectrum is None:
        spectrum = diagonalize(build_hamiltonian(params, cutoff), vectors=True)
    vals, vecs = spectrum
    target = energy(modes, state)
    nearest = vals[int(np.argmin(np.abs(vals - target)))]
    cluster = np.abs(vals - nearest) <= cluster_tol * max(1.0, abs(nearest))
    q, _ = np.linalg.qr(vecs[:, cluster])
    coeffs = project_onto_basis(modes, state, params, cutoff)
    return float(np.linalg.norm(q.conj().T @ coeffs) / np.linalg.norm(coeffs))


def eigenfunction_residual(modes: DerivedModes, state: StateIndex, params: ModelParams,
                           step: float = 1e-3, points: int = 7) -> float:
    """max |H0 psi - E psi| / max |E psi| on a grid, with H0 applied by 5-point
    finite differences to the closed-form psi."""
    modes.require()
    lo = min(abs(modes.alpha1_sq), abs(modes.alpha2_sq))
    extent = 1.5 / math.sqrt(lo)
    xs = np.linspace(-extent, extent, points)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")

    def psi(dx=0.0, dy=0.0):
        return evaluate_wavefunction(modes, state, gx + dx, gy + dy, params)

    stencil = {-2: -1 / 12, -1: 16 / 12, 0: -30 / 12, 1: 16 / 12, 2: -1 / 12}
    lap = sum(c * (psi(dx=j * step) + psi(dy=j * step)) for j, c in stencil.items()) / step ** 2
    m = params.m
    pot = m * (params.wx ** 2 * gx ** 2 + params.wy ** 2 * gy ** 2) / 2 + 1j * params.lam * gx * gy
    centre = psi()
    e = energy(modes, state)
    resid = -lap / (2 * m) + pot * centre - e * centre
    return float(np.max(np.abs(resid)) / np.max(np.abs(e * centre)))
