"""Cross-checks of the closed forms against the brute-force oracle.

Each check produces a :class:`Check` with the worst deviation and the
tolerance it was held to. ``faults`` deliberately re-introduces the printed
rotation sign or the printed alpha1^4 term so callers can confirm that the
suite notices.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DegeneracyError, ResourceGuard, TruncationZoneError
from .model import (ModelParams, PhaseClass, StateIndex, derive_modes, energy,
                    states_up_to)
from .oracle import (DEFAULT_CUTOFF, MAX_ROWS, beta_slopes, build_hamiltonian,
                     check_truncation_zone, compare_spectrum, conjugate_pair_deviation,
                     diagonalize, eigenfunction_residual, eigenvector_overlap,
                     quadrature_matrix_element)
from .perturbation import (correction_coefficients, delta_energy, evaluate_wavefunction,
                           h_int_matrix_element, pt_eigenvalue, symmetric_grid,
                           wavefunction_correction)

log = logging.getLogger(__name__)

FAULTS = ("printed-rotation", "printed-erratum")
DEFAULT_LAMBDAS = (0.0, 0.5, 1.0, 2.0)
DEFAULT_BETAS = (0.0, 1e-3)
SLOPE_STATES = [StateIndex(0, 0), StateIndex(0, 1), StateIndex(1, 0), StateIndex(1, 1)]


@dataclass
class Check:
    name: str
    passed: bool
    max_dev: Optional[float]
    tolerance: float
    message: str = ""

    def as_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        if out["max_dev"] is not None and not math.isfinite(out["max_dev"]):
            out["max_dev"] = None
        return out


def _check(name, dev, tol, message=""):
    dev = float(dev)
    return Check(name, bool(dev <= tol), dev, tol, message)


def random_unbroken_params(rng: np.random.Generator) -> ModelParams:
    """Parameters drawn well inside the unbroken phase (|lam| <= 0.9 lam_c)."""
    while True:
        m = rng.uniform(0.5, 2.0)
        wx, wy = rng.uniform(0.5, 3.0, size=2)
        if abs(wx - wy) < 0.2:
            continue
        lam_c = abs(m * (wy ** 2 - wx ** 2) / 2)
        lam = rng.uniform(-0.9, 0.9) * lam_c
        return ModelParams(m=m, wx=wx, wy=wy, lam=lam, beta=rng.uniform(1e-3, 1e-1))


def pt_correction_deviation(params: ModelParams, states: Iterable[StateIndex],
                            rotation_convention: str = "orthogonal") -> float:
    """Worst relative deviation of PT(psi + dpsi) from eta0 (psi + dpsi), where
    eta0 = (-1)^n1 (x parity) or (-1)^n2 (y parity) is the uncorrected value."""
    modes = derive_modes(params, rotation_convention)
    xs, ys = symmetric_grid(modes, points=15)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    worst = 0.0
    for state in states:
        coeffs = correction_coefficients(modes, state, params)
        full = evaluate_wavefunction(modes, state, gx, gy, params, True, coeffs)
        for axis, n in (("x", state.n1), ("y", state.n2)):
            image_dev = np.max(np.abs(_pt(full, axis) - (-1) ** n * full)) / np.max(np.abs(full))
            worst = max(worst, float(image_dev))
    return worst


def _pt(samples, axis):
    return np.conj(samples[::-1, :] if axis == "x" else samples[:, ::-1])


def run_verification(base: ModelParams, lambdas=DEFAULT_LAMBDAS, betas=DEFAULT_BETAS,
                     cutoff: int = DEFAULT_CUTOFF, nmax: int = 4, seed: int = 0,
                     faults: Iterable[str] = (), max_rows: int = MAX_ROWS) -> list[Check]:
    faults = set(faults)
    unknown = faults - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown fault(s): {sorted(unknown)}")
    if cutoff * cutoff > max_rows:
        raise ResourceGuard(f"cutoff {cutoff} gives {cutoff * cutoff} rows, guard is {max_rows}")
    rotation = "printed" if "printed-rotation" in faults else "orthogonal"
    erratum = "printed" if "printed-erratum" in faults else "corrected"
    probe_betas = [b for b in betas if b > 0] or [1.0]

    checks = []
    try:
        check_truncation_zone(nmax, cutoff)
        zone_ok = True
        checks.append(Check("truncation_zone", True, float(nmax), cutoff / 2))
    except TruncationZoneError as exc:
        zone_ok = False
        checks.append(Check("truncation_zone", False, float(nmax), cutoff / 2, str(exc)))

    for lam in lambdas:
        params = base.replace(lam=float(lam), beta=0.0)
        modes = derive_modes(params, rotation)
        tag = f"lambda={lam:g}"
        log.info("verifying %s (%s)", tag, modes.phase.value)
        if not modes.available:
            checks.append(Check(f"modes[{tag}]", True, None, 0.0,
                                f"phase {modes.phase.value}: no normal modes, spectrum checks skipped"))
            continue
        if modes.phase is PhaseClass.CRITICAL:
            checks.append(_critical_check(modes, tag))
            continue

        hmat = build_hamiltonian(params, cutoff)
        vals, vecs = diagonalize(hmat, vectors=True, max_rows=max_rows)
        if zone_ok:
            cmp = compare_spectrum(params, cutoff, nmax, numeric=vals, modes=modes)
            checks.append(_check(f"spectrum[{tag}]", cmp.max_abs_dev, 1e-7))

        low = vals[np.argsort(vals.real, kind="stable")[:10]]
        if modes.phase.real_spectrum:
            checks.append(_check(f"real_spectrum[{tag}]", np.max(np.abs(low.imag)), 1e-8))
            low_states = [s for s in SLOPE_STATES if 2 * sum(s) <= cutoff]
            dev = max(1 - eigenvector_overlap(modes, s, params, cutoff, (vals, vecs))
                      for s in low_states)
            checks.append(_check(f"eigenvector_consistency[{tag}]", dev, 1e-6))
            dev = max(eigenfunction_residual(modes, s, params) for s in low_states)
            checks.append(_check(f"eigenfunction_residual[{tag}]", dev, 1e-6))
        else:
            checks.append(_check(f"conjugate_closure[{tag}]", conjugate_pair_deviation(vals, 10), 1e-7))

        for beta in probe_betas:
            p = params.replace(beta=beta)
            btag = f"{tag},beta={beta:g}"
            checks.extend(_perturbation_checks(modes, p, btag, nmax, erratum))

        if modes.phase is PhaseClass.UNBROKEN or modes.phase is PhaseClass.DECOUPLED_ISOTROPIC:
            checks.append(_slope_check(modes, params, cutoff, tag, erratum))

    rng = np.random.default_rng(seed)
    dev = max(pt_correction_deviation(random_unbroken_params(rng), states_up_to(2), rotation)
              for _ in range(5))
    checks.append(_check(f"pt_preservation_random[seed={seed}]", dev, 1e-10))
    return checks


def _critical_check(modes, tag):
    pair = StateIndex(1, 0)
    split = abs(energy(modes, pair) - energy(modes, pair.swapped()))
    try:
        correction_coefficients(modes, pair, ModelParams(beta=1.0))
    except DegeneracyError:
        return _check(f"critical_degeneracy[{tag}]", split, 1e-12)
    return Check(f"critical_degeneracy[{tag}]", False, split, 1e-12,
                 "no DegeneracyError at the critical coupling")


def _perturbation_checks(modes, params, tag, nmax, erratum):
    states = states_up_to(min(nmax, 4))
    out = []
    closed = np.array([delta_energy(modes, s, params, erratum) for s in states])
    ladder = np.array([h_int_matrix_element(modes, s, s, params) for s in states])
    out.append(_check(f"delta_energy_vs_ladder[{tag}]",
                      np.max(np.abs(closed - ladder) / np.abs(ladder)), 1e-12))

    if modes.phase.real_spectrum:
        dev = 0.0
        for ket in states:
            for bra in states_up_to(min(nmax, 4) + 4):
                q = quadrature_matrix_element(modes, bra, ket, params)
                lad = h_int_matrix_element(modes, bra, ket, params)
                scale = max(abs(lad), abs(ladder).max())
                dev = max(dev, abs(q - lad) / scale)
        out.append(_check(f"quadrature_vs_ladder[{tag}]", dev, 1e-9))

        imag = 0.0
        for s in states_up_to(2):
            report = wavefunction_correction(modes, s, params)
            vals = [report.delta_E, *report.M_coefficients.values()]
            imag = max(imag, max(abs(v.imag) / max(1.0, abs(v)) for v in vals))
        out.append(_check(f"correction_reality[{tag}]", imag, 1e-12))
        out.append(_check(f"pt_preservation[{tag}]",
                          pt_correction_deviation(params, states_up_to(2), modes.rotation_convention),
                          1e-10))
    else:
        dev = 0.0
        for n1 in range(5):
            for n2 in range(5):
                a = delta_energy(modes, StateIndex(n1, n2), params, erratum)
                b = delta_energy(modes, StateIndex(n2, n1), params, erratum)
                dev = max(dev, abs(a - b.conjugate()))
        out.append(_check(f"broken_pair_conjugacy[{tag}]", dev, 1e-12))
    return out


def _slope_check(modes, params, cutoff, tag, erratum):
    states = [s for s in SLOPE_STATES if 2 * sum(s) <= cutoff]
    slopes = beta_slopes(params, states, cutoff)
    unit = params.replace(beta=1.0)
    expected = np.array([delta_energy(modes, s, unit, erratum) for s in states])
    # |slope - dE/beta| <= max(1e-5, 1e-3 |dE/beta|)  <=>  scaled dev <= 1e-3
    scaled = np.abs(slopes - expected) / np.maximum(1e-2, np.abs(expected))
    return _check(f"beta_slope[{tag}]", scaled.max(), 1e-3)
