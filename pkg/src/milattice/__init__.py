"""Travelling waves of a magneto-inductive lattice.

Fourier-series model of the travelling-wave equation, existence
certificates, small-amplitude asymptotics at resonance, Galerkin-Newton
solves with arclength continuation, and Floquet analysis on a finite ring.
"""

from ._backend import BACKEND
from .asymptotics import BranchPrediction, bif_coefficients, branch_thresholds, predict
from .errors import (ComplexBranch, ConfigError, DegenerateLinearPart, EigenFailure,
                     MassSingular, MILatticeError, NoConvergence, NonContraction, NotAdmissible,
                     NotSimpleResonance, SingularJacobian, SingularSymbol, StepUnderflow,
                     TailOverflow)
from .existence import ContractionResult, ExistenceCertificate, certify, solve_contraction
from .floquet import LatticeState, MonodromyResult, monodromy, simulate, step_lattice, step_linearized
from .galerkin import (ContinuationCurve, GalerkinSolution, continue_in_h0, newton_solve,
                       solve_on_curve)
from .model import ModelParams, resonance_scan, sigma, theta
from .series import TrigSeries

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BranchPrediction", "ComplexBranch", "ConfigError", "ContinuationCurve",
    "ContractionResult", "DegenerateLinearPart", "EigenFailure", "ExistenceCertificate",
    "GalerkinSolution", "LatticeState", "MILatticeError", "MassSingular", "ModelParams",
    "MonodromyResult", "NoConvergence", "NonContraction", "NotAdmissible", "NotSimpleResonance",
    "SingularJacobian", "SingularSymbol", "StepUnderflow", "TailOverflow", "TrigSeries",
    "bif_coefficients", "branch_thresholds", "certify", "continue_in_h0", "monodromy",
    "newton_solve", "predict", "resonance_scan", "sigma", "simulate", "solve_contraction",
    "solve_on_curve", "step_lattice", "step_linearized", "theta",
]
