"""Exception types shared across the package."""


class VolsimError(Exception):
    """Base class for all package-specific errors."""


class InvalidConfigError(VolsimError):
    """A configuration value violates its constraint; message names the field."""


class ConfigParseError(VolsimError):
    """A config document is malformed or contains unknown keys."""


class ZeroRateError(VolsimError):
    """Uplink rate is exactly zero; offloading to this RSU is infeasible."""


class NonFiniteFitnessError(VolsimError):
    """A fitness evaluation returned NaN or infinity."""

    def __init__(self, particle_index, value):
        super().__init__(f"fitness returned non-finite value {value!r} "
                         f"for particle {particle_index}")
        self.particle_index = particle_index


class DegenerateDatasetError(VolsimError):
    """A training dataset contains a single class."""


class MissingModelError(VolsimError):
    """A strategy requires trained model files that were not supplied."""
