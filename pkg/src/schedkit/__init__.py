"""Noise schedules for diffusion models, read as Ornstein-Uhlenbeck observation times."""

from . import equivalence, io, ou_core, sampler_design, schedules
from ._kernels import BACKEND
from .errors import (
    DomainError,
    InversionError,
    NonIntegrableError,
    ParameterError,
    SchedkitError,
    ScheduleValidationError,
    SingularTimeError,
)
from .equivalence import EnsembleConfig, GaussianInit, run_equivalence, scaling_check
from .ou_core import DDPM_PRESET, InitialDispersion, OUParams
from .schedules import NoiseSchedule, ObservationTimes, ScheduleSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DDPM_PRESET",
    "DomainError",
    "EnsembleConfig",
    "GaussianInit",
    "InitialDispersion",
    "InversionError",
    "NoiseSchedule",
    "NonIntegrableError",
    "OUParams",
    "ObservationTimes",
    "ParameterError",
    "SchedkitError",
    "ScheduleSpec",
    "ScheduleValidationError",
    "SingularTimeError",
    "equivalence",
    "generate",
    "io",
    "ou_core",
    "run_equivalence",
    "sampler_design",
    "scaling_check",
    "schedules",
]
