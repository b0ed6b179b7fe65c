"""Cross-field citation growth models evaluated by temporal bucket signatures."""

from citeflow.graph import (
    CitationGraph,
    Field,
    Paper,
    REPORTABLE_FIELDS,
)

__version__ = "0.1.0"

__all__ = [
    "CitationGraph",
    "Field",
    "Paper",
    "REPORTABLE_FIELDS",
    "__version__",
]
