from .plan import CostSpec, PhasePlan, TranscriptionError, VariableLayout
from .transcribe import Transcription, evaluate, transcribe
from . import collision, contacts, residuals

__all__ = [
    "CostSpec",
    "PhasePlan",
    "TranscriptionError",
    "VariableLayout",
    "Transcription",
    "transcribe",
    "evaluate",
    "collision",
    "contacts",
    "residuals",
]
