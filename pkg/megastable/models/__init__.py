from .base import BaseModel
from .params import SystemParams, PulseParams, IntegratorConfig, AveragedState
from .trajectory import HistorySegment, DenseTrajectory
from .orbit import RadialRoot, SpectrumPrediction, OrbitCandidate, OrbitRecord, OrbitCatalog
from .results import ResponseSpectrum, FitResult, TransitionResult, SweepResult

__all__ = [
    'BaseModel',
    'SystemParams', 'PulseParams', 'IntegratorConfig', 'AveragedState',
    'HistorySegment', 'DenseTrajectory',
    'RadialRoot', 'SpectrumPrediction', 'OrbitCandidate', 'OrbitRecord', 'OrbitCatalog',
    'ResponseSpectrum', 'FitResult', 'TransitionResult', 'SweepResult',
]
