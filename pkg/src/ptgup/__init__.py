"""Exact spectrum, PT phase and first-order minimal-length corrections for the
2D anisotropic oscillator with imaginary ``i lam x y`` coupling, with a
truncated-basis diagonalisation oracle."""

__version__ = "0.1.0"

from .errors import (DegeneracyError, ModesUnavailable, PTGupError)  # noqa: E402
from .model import (DerivedModes, ModelParams, PhaseClass, StateIndex,  # noqa: E402
                    classify_phase, derive_modes, energy, rotate_to_normal, states_up_to)
from .perturbation import (CorrectionReport, delta_energy, evaluate_wavefunction,  # noqa: E402
                           h_int_matrix_element, pt_apply, wavefunction_correction)

__all__ = [
    "CorrectionReport", "DegeneracyError", "DerivedModes", "ModelParams", "ModesUnavailable",
    "PTGupError", "PhaseClass", "StateIndex", "classify_phase", "delta_energy", "derive_modes",
    "energy", "evaluate_wavefunction", "h_int_matrix_element", "pt_apply", "rotate_to_normal",
    "states_up_to", "wavefunction_correction",
]
