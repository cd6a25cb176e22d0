"""Output two-photon states of a two-level emitter in one or two waveguide channels."""

from .errors import BoundaryLeak, ConfigError, GridTooShort, NoConvergence, ScaleMismatch, Tls2pError
from .lti_response import EmitterParams, TwoChannelParams, convolve_matrix, convolve_scalar
from .numerics import Grid1D, Grid2D, adaptive_quad, cumexp, fourier2d, inverse_fourier2d
from .one_channel import TwoPhotonAmplitude, eta_freq, eta_time, lemma_oracle, time_density, zeta
from .pulse_shapes import Gaussian, RisingExp, Sampled, TwoPhotonInput, overlap
from .two_channel import (
    ChannelResolvedAmplitude,
    T_ij_freq,
    appendix_oracle,
    channel_probabilities,
    chi,
    eta_ij_time,
    hom_difference,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryLeak",
    "ChannelResolvedAmplitude",
    "ConfigError",
    "EmitterParams",
    "Gaussian",
    "Grid1D",
    "Grid2D",
    "GridTooShort",
    "NoConvergence",
    "RisingExp",
    "Sampled",
    "ScaleMismatch",
    "T_ij_freq",
    "Tls2pError",
    "TwoChannelParams",
    "TwoPhotonAmplitude",
    "TwoPhotonInput",
    "adaptive_quad",
    "appendix_oracle",
    "channel_probabilities",
    "chi",
    "convolve_matrix",
    "convolve_scalar",
    "cumexp",
    "eta_freq",
    "eta_ij_time",
    "eta_time",
    "fourier2d",
    "hom_difference",
    "inverse_fourier2d",
    "lemma_oracle",
    "overlap",
    "time_density",
    "zeta",
]
