import logging
from typing import Optional

from app.classifiers.homogeneity_classifier import HomogeneityClassifier
from app.interfaces.geometry_interfaces import IGeometryEngine, IHomogeneityClassifier, IRunOrchestrator
from app.orchestrators.run_orchestrator import RunOrchestrator
from app.services.caching_service import CachingService
from app.services.geometry_service import GeometryEngine
from app.strategies.family_strategies import FamilyStrategyFactory
from config.app_config import settings
from config.geometry_config import GeometryConfig, geometry_config

logger = logging.getLogger(__name__)


class DependencyContainer:
    def __init__(
        self,
        caching_service: Optional[CachingService] = None,
        config: GeometryConfig = geometry_config,
    ):
        self._caching_service = caching_service or CachingService(max_entries=settings.CACHE_SIZE)
        self._config = config
        self._instances = {}

        logger.debug("DependencyContainer initialized")

    @property
    def caching_service(self) -> CachingService:
        return self._caching_service

    def get(self, interface):
        """Resolve dependencies by interface type."""
        if interface in self._instances:
            return self._instances[interface]

        if interface.__name__ == "IGeometryEngine":
            self._instances[interface] = GeometryEngine(caching_service=self._caching_service)
        elif interface.__name__ == "FamilyStrategyFactory":
            self._instances[interface] = FamilyStrategyFactory(engine=self.get(IGeometryEngine))
        elif interface.__name__ == "IHomogeneityClassifier":
            self._instances[interface] = HomogeneityClassifier(
                engine=self.get(IGeometryEngine),
                config=self._config,
            )
        elif interface.__name__ == "IRunOrchestrator":
            self._instances[interface] = RunOrchestrator(
                engine=self.get(IGeometryEngine),
                strategy_factory=self.get(FamilyStrategyFactory),
                classifier=self.get(IHomogeneityClassifier),
                logger=logging.getLogger("app.orchestrators.run_orchestrator"),
                config=self._config,
            )
        else:
            raise ValueError(f"No binding found for {interface}")

        return self._instances[interface]
