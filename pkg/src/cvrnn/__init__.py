"""Conditional variational RNN: training objective and synthesis."""

from .model import CvrnnModel
from .network import (
    CvrnnParams,
    CvrnnState,
    RecurrentState,
    StepOutput,
    decode_step,
    init_params,
    latent_update,
    posterior_step,
    prior_step,
)
from .sampling import SampleResult, infer_style, reconstruct, restyle, sample_text

__all__ = [
    "CvrnnModel",
    "CvrnnParams",
    "CvrnnState",
    "RecurrentState",
    "StepOutput",
    "decode_step",
    "init_params",
    "latent_update",
    "posterior_step",
    "prior_step",
    "SampleResult",
    "infer_style",
    "reconstruct",
    "restyle",
    "sample_text",
]
