from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence

if TYPE_CHECKING:
    from app.classifiers.homogeneity_classifier import SampleSet
    from app.schemas.schemas import HomogeneityReport, InvariantTable, RunConfig, VerificationReport
    from app.services.geometry_service import ConnectionJet, MetricField
    from app.utils.tensors import Frame, TensorAtPoint


class IGeometryEngine(ABC):
    """Connection and curvature jets of a metric field at a point."""
    @abstractmethod
    def christoffel(self, g: "MetricField", p: Sequence[float], order: int = 0) -> "ConnectionJet":
        pass

    @abstractmethod
    def riemann(self, g: "MetricField", p: Sequence[float]) -> "TensorAtPoint":
        pass

    @abstractmethod
    def nabla_k_riemann(self, g: "MetricField", p: Sequence[float], k: int) -> "TensorAtPoint":
        pass

    @abstractmethod
    def nabla_riemann_series(self, g: "MetricField", p: Sequence[float], r: int) -> List["TensorAtPoint"]:
        pass


class IFamilyStrategy(ABC):
    """Everything the classifier needs to know about one metric family."""
    name: str

    @abstractmethod
    def metric(self) -> "MetricField":
        pass

    @abstractmethod
    def oracle(self, p: Sequence[float], k: int) -> "TensorAtPoint":
        """Closed-form nabla^k R at p in coordinates."""
        pass

    @abstractmethod
    def adapted_frame(self, p: Sequence[float], scale: float = 1.0) -> "Frame":
        pass

    @abstractmethod
    def hypothesis_failure(self, p: Sequence[float]) -> Optional[str]:
        """Reason the family hypothesis fails at p, or None."""
        pass

    @abstractmethod
    def epsilon(self, p: Sequence[float]) -> int:
        pass

    @abstractmethod
    def local_invariants(self, p: Sequence[float]) -> Dict[str, float]:
        pass

    @abstractmethod
    def quantities(self, p: Sequence[float]) -> Dict[str, float]:
        """Named derivatives of the defining function at p."""
        pass


class IHomogeneityClassifier(ABC):
    @abstractmethod
    def classify(
        self, strategy: "IFamilyStrategy", r: int, samples: "SampleSet", tol: float, max_workers: Optional[int] = None
    ) -> "HomogeneityReport":
        pass


class IRunOrchestrator(ABC):
    """Runs one CLI command over a grid."""
    @abstractmethod
    def verify(self, config: "RunConfig") -> "VerificationReport":
        pass

    @abstractmethod
    def classify(self, config: "RunConfig") -> "HomogeneityReport":
        pass

    @abstractmethod
    def invariants(self, config: "RunConfig") -> "InvariantTable":
        pass
