from .integrator_service import IntegratorService, integrator_service
from .dynamics_service import DynamicsService, dynamics_service
from .averaging_service import AveragingService, averaging_service, UNBOUNDED
from .analysis_service import AnalysisService, analysis_service
from .catalog_service import CatalogService, catalog_service
from .experiment_service import ExperimentService, experiment_service
from .export_service import ExportService, export_service
