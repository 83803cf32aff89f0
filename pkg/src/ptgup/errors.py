"""Exception types shared across the package."""


class PTGupError(Exception):
    """Base class for domain errors raised by this package."""


class ModesUnavailable(PTGupError):
    """Normal-mode frequencies do not exist for the requested parameters."""


class DegeneracyError(PTGupError):
    """A first-order denominator E_n - E_m vanishes.

    Attributes
    ----------
    state, partner : StateIndex
        The unperturbed state and the colliding state reachable from it.
    """

    def __init__(self, state, partner, detail=""):
        self.state = state
        self.partner = partner
        msg = f"degenerate pair {tuple(state)} <-> {tuple(partner)}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class DegreeTooLarge(ValueError):
    pass


class OrderOutOfRange(ValueError):
    pass


class AsymmetricGrid(ValueError):
    pass


class ZeroFrequency(ValueError):
    pass


class CutoffTooSmall(ValueError):
    pass


class TruncationZoneError(ValueError):
    """Requested states lie outside the truncation-safe zone n1 + n2 <= N/2."""


class BrokenPhaseUnsupported(PTGupError):
    pass


class ConvergenceFailure(PTGupError):
    pass


class ResourceGuard(PTGupError):
    pass


class TrackingAmbiguous(PTGupError):
    pass
