"""Pseudo-parabolic scale-space LBP texture descriptors."""

from .bench import Dataset, ExperimentReport, SplitProtocol, load_dataset, make_splits, run_experiment, sweep_steps
from .descriptor import Descriptor, DescriptorConfig, extract_descriptor
from .diffusion import (
    ConvergenceError,
    PentadiagonalSystem,
    SolverParams,
    assemble_system,
    diffusion_step,
    evolve,
    pcg_solve,
)
from .features import Classifier, KlTransform, LdaModel, kl_fit, kl_project, lda_fit, lda_predict
from .grid import GrayImage, InvalidMeshError, MeshParams, new_image, transpose
from .kernels import BACKEND
from .lbp import DEFAULT_LBP_SET, LbpConfig, LbpHistogram, lbp_histogram, lbp_riu2

__version__ = "0.1.0"
