from .beats import beat_align, dance_beats
from .features import geometric_features, joint_speeds, kinetic_features
from .frechet import diversity, fid, frechet_distance
from .freeze import auc_f, pff
from .mpd import PredictorOracle, knn_predictor, mpd
from .report import METRIC_KEYS, EvalParams, MetricReport, evaluate_dirs, evaluate_motions

__all__ = [
    "METRIC_KEYS", "EvalParams", "MetricReport", "PredictorOracle", "auc_f", "beat_align", "dance_beats", "diversity",
    "evaluate_dirs", "evaluate_motions", "fid", "frechet_distance", "geometric_features",
    "joint_speeds", "kinetic_features", "knn_predictor", "mpd", "pff",
]
