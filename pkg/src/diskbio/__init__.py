"""Boundary integral operators on the disk, their closed-form inverses and Calderon-type identities."""
from .specfun import DomainError, ModeIndex, PolarPoint, lam, psh
from .kernels import KernelConfig, OperatorKind
from .diskgeom import QuadRule, TriangleMesh, mesh_disk
from .assembly import FunctionSpace, GalerkinMatrix, QuadConfig
from .solve import PrecondStudyResult, SpectrumReport, cg, lanczos_extremes, precond_study
from .spectral import IdentityReport

__all__ = [
    "DomainError", "ModeIndex", "PolarPoint", "lam", "psh", "KernelConfig", "OperatorKind",
    "QuadRule", "TriangleMesh", "mesh_disk", "FunctionSpace", "GalerkinMatrix", "QuadConfig",
    "PrecondStudyResult", "SpectrumReport", "cg", "lanczos_extremes", "precond_study",
    "IdentityReport",
]
