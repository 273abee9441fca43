"""Cross-modal state-space graph reasoning on a small numpy autodiff engine."""

from .config import RunConfig
from .data import GeneratorConfig, Sample
from .model import CSSGRModel

__all__ = ["CSSGRModel", "GeneratorConfig", "RunConfig", "Sample"]
__version__ = "0.1.0"
