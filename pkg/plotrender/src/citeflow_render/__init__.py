"""Stacked-bar rendering of temporal bucket signature tables."""

from citeflow_render.render import (
    SignatureGroup,
    SignatureTableError,
    build_figure,
    bucket_labels,
    load_signature_table,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "SignatureGroup",
    "SignatureTableError",
    "build_figure",
    "bucket_labels",
    "load_signature_table",
    "render",
    "__version__",
]
