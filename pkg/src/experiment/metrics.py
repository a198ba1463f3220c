import logging

import numpy as np
from sklearn.metrics import accuracy_score, f1_score


def metrics(y_true, y_pred):
    """Accuracy and positive-class F1, zero F1 (with a warning) when precision or recall is undefined."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise ValueError("metrics need at least one prediction")
    predicted_positive = int(np.count_nonzero(y_pred == 1))
    actual_positive = int(np.count_nonzero(y_true == 1))
    if predicted_positive == 0 or actual_positive == 0:
        logging.warning(f"metrics: F1 undefined ({predicted_positive} predicted, {actual_positive} actual "
                        f"positives), reported as 0")
    accuracy = float(accuracy_score(y_true, y_pred))
    f1 = float(f1_score(y_true, y_pred, pos_label=1, zero_division=0))
    return accuracy, f1


def mean_std(values):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return float('nan'), float('nan')
    return float(values.mean()), float(values.std())
