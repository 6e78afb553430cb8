"""Teacher-target exporter: transformer probabilities to JSONL."""

from .exporter import (
    Claim,
    ExporterConfig,
    ExporterError,
    ExportResult,
    finetune_and_export,
    load_claims,
)

__version__ = "0.1.0"

__all__ = [
    "Claim",
    "ExporterConfig",
    "ExporterError",
    "ExportResult",
    "finetune_and_export",
    "load_claims",
    "__version__",
]
