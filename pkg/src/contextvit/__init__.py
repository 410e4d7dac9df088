"""contextvit: a global-context vision transformer classifier in pure numpy.

The package covers the full supervised pipeline at desk scale: dataset
ingestion and stratified splitting, seeded augmentation, a hierarchical
transformer whose attention fuses a learned global summary into keys and
values, manual analytic gradients verified against finite differences,
AdamW training with cosine/step schedules and early stopping, and a
classification-metrics suite with file export. See the ``contextvit``
console command for end-to-end orchestration.
"""

from . import data, evaluation, model, training
from .gradcheck import run_gradcheck

__version__ = "0.1.0"

__all__ = ["data", "evaluation", "model", "training", "run_gradcheck", "__version__"]
