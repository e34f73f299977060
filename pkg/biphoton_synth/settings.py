from xsettings import EnvVarSettings
from xsentinels import Default


SPEED_OF_LIGHT = 2.998e8
""" Meters per second; default propagation speed for CPU broadcasts and site-to-site messages. """


class SynthSettings(EnvVarSettings):
    """
    Library wide settings, shared via the current `xinject.XContext`.

    Grab the current instance via `SynthSettings.grab()`.  Since this is an
    `xsettings.EnvVarSettings` subclass, each field can also be supplied via an upper-cased
    environment variable with the same name as the field (ie: `SIGNAL_SPEED=1e8`); none are
    required.

    Values can be changed for the current context by setting them on the grabbed instance:

    >>> SynthSettings.grab().decimals = 6

    In unit tests a blank context is created for each test, so changes like the one above
    won't leak into other tests.

    Functions that accept `xsentinels.Default` for a parameter will consult these settings at
    call time, so whatever settings object is current at that moment wins.
    """

    signal_speed: float = SPEED_OF_LIGHT
    """ Propagation speed used by `biphoton_synth.distsim.TimelineConfig` when none is given.
    """

    decimals: int = 9
    """ Number of decimals used for every number the CLI prints or writes. """

    default_seed: int = 0
    """ Seed used by CLI commands when `--seed` is not passed. """

    timeline_steps: int = 1000
    """ Default number of steps for the `timeline` and `compare` commands. """

    settings_variant: str = "corrected"
    """
    Default `biphoton_synth.quantum.SettingsVariant` value, by name.

    Keep it as `corrected` unless you are specifically reproducing the sign slip in the
    published observables; see `docs/sign-analysis.md`.
    """


def resolve(value, name: str):
    """ Returns `value`, unless it's `xsentinels.Default`; in that case the current
        `SynthSettings` value for the field called `name` is returned.
    """
    if value is Default:
        return getattr(SynthSettings.grab(), name)
    return value
