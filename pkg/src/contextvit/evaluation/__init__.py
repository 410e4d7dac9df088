from .metrics import ClassificationReport, ConfusionMatrix, confusion_matrix, per_class_accuracy, report
from .runner import evaluate, export, format_report_table, read_confusion_csv

__all__ = [
    "ClassificationReport",
    "ConfusionMatrix",
    "confusion_matrix",
    "evaluate",
    "export",
    "format_report_table",
    "per_class_accuracy",
    "read_confusion_csv",
    "report",
]
