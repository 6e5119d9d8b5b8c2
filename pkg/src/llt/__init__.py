"""Linear-law feature space transformation for time-series classification."""

from .types import Beat, Corpus, Label, LinearLaw, Role

__all__ = ["Beat", "Corpus", "Label", "LinearLaw", "Role"]
__version__ = "0.1.0"
