"""Use case services (Application layer)."""

from vwlab.use_cases.identity_service import IdentityService
from vwlab.use_cases.lemma_oracles import LemmaService
from vwlab.use_cases.solver_service import SolverService
from vwlab.use_cases.spectrum_service import SpectrumService

__all__ = ["IdentityService", "LemmaService", "SolverService", "SpectrumService"]
