class BiphotonSynthError(Exception):
    """ Base class for every error raised by `biphoton_synth`.

        The CLI treats any `BiphotonSynthError` as a usage/validation problem (exit code 2).
    """
    pass


class NonUnitBloch(BiphotonSynthError, ValueError):
    """ Bloch vector handed to `biphoton_synth.quantum.observable_from_bloch` is not unit length
        (within 1e-9), or is the zero vector.
    """
    pass


class NonNormalizedState(BiphotonSynthError, ValueError):
    pass


class InvalidCriticality(BiphotonSynthError, ValueError):
    pass


class LengthMismatch(BiphotonSynthError, ValueError):
    pass


class EmptyChains(BiphotonSynthError, ValueError):
    """ Overlay quality is undefined for zero-length chains, so we refuse to compute it. """
    pass


class ChainFormatError(BiphotonSynthError, ValueError):
    pass


class InvalidStrategy(BiphotonSynthError, ValueError):
    pass


class InvalidConfig(BiphotonSynthError, ValueError):
    pass
