"""Simulation and security analysis of squeezed-state continuous-variable key distribution."""

from ._errors import ContractViolation, ParameterError, ProtocolViolation
from .css_postprocess import CssPair, steane_css
from .gaussian_channel import Basis, ChannelModel, GaussianMarginal, SqueezedSource
from .protocol_sim import (EveModel, ProtocolConfig, ProtocolOutcome, Status,
                           estimate_error_rates, run_protocol)

__version__ = "0.1.0"

__all__ = [
    "Basis", "ChannelModel", "ContractViolation", "CssPair", "EveModel", "GaussianMarginal",
    "ParameterError", "ProtocolConfig", "ProtocolOutcome", "ProtocolViolation",
    "SqueezedSource", "Status", "estimate_error_rates", "run_protocol", "steane_css",
]
