"""Binning-free (KS) calibration error and spline-based recalibration."""

from .curves import CumulativeCurves, cumulative, ks_error
from .dataset import CalibrationTarget, EvalSet, ScoredSamples, from_logits, from_probs, read_csv, score_target, write_csv
from .metrics import accuracy_topr, brier_top1, ece, mce
from .recalibrate import RecalibrationMap, apply, build, recalibrate_evalset
from .spline import KnotGrid, Spline, fit
from .synth import SynthSpec, generate

__all__ = [
    "CalibrationTarget", "CumulativeCurves", "EvalSet", "KnotGrid", "RecalibrationMap", "ScoredSamples",
    "Spline", "SynthSpec", "accuracy_topr", "apply", "brier_top1", "build", "cumulative", "ece", "fit",
    "from_logits", "from_probs", "generate", "ks_error", "mce", "read_csv", "recalibrate_evalset",
    "score_target", "write_csv",
]
