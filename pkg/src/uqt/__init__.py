"""Risk-based predictive uncertainty measures for ensembles of classifiers."""

from uqt.bregman import bregman_div, expected_bregman_objective
from uqt.central import CentralPrediction, central_label, central_prediction, central_prediction_array
from uqt.energy import EnergyScores, class_covariance_sum, energy_pair, free_energy
from uqt.errors import (
    CentralPredictionUndefinedError,
    DegenerateLabelsError,
    InvariantViolation,
    UndefinedMeasureError,
    UQTError,
    ValidationError,
)
from uqt.estimators import (
    AuditReport,
    MeasureResult,
    MeasureSpec,
    Risk,
    bayes_variant,
    epbd_pairwise,
    evaluate,
    excess_variant,
    identity_audit,
    jensen_check,
    total_variant,
    total_variant_direct,
)
from uqt.harness import (
    DetectionReport,
    LabeledScores,
    auroc,
    misclassification_detect,
    ood_detect,
    score_samples,
)
from uqt.io import read_ensemble, read_labels, write_ensemble
from uqt.scoring import (
    ScoringRule,
    bayes_risk,
    excess_risk,
    generator,
    loss,
    subgradient,
    total_risk,
)
from uqt.simplex import EnsemblePredictions, LogitVector, PredictionKind, ProbVector, softmax

__version__ = "0.1.0"
