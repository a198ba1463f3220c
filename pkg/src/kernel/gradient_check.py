import logging

import numpy as np

from src.custom_exception import GradientCheckError
from src.kernel.param_set import ParamSet

STEP = 1e-5
TOLERANCE = 1e-4
COORDINATES = 64


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)


def gradient_check(loss_fn, params: ParamSet, inputs, labels, h=STEP, tolerance=TOLERANCE,
                   coordinates=COORDINATES, seed=0):
    """
    Compare the analytic gradients of `loss_fn(params, inputs, labels) -> (loss, grads)`
    with central differences on a seeded subsample of every parameter.
    Returns the largest relative error, raises GradientCheckError on the first
    parameter above `tolerance`.
    """
    _, grads = loss_fn(params, inputs, labels)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in params.names():
        value = params.params[name]
        flat = value.reshape(-1)
        analytic = np.asarray(grads[name]).reshape(-1)
        if flat.size <= coordinates:
            picked = np.arange(flat.size)
        else:
            picked = np.sort(rng.choice(flat.size, size=coordinates, replace=False))
        name_worst = 0.0
        for index in picked:
            original = flat[index]
            flat[index] = original + h
            plus, _ = loss_fn(params, inputs, labels)
            flat[index] = original - h
            minus, _ = loss_fn(params, inputs, labels)
            flat[index] = original
            numeric = (plus - minus) / (2 * h)
            error = relative_error(analytic[index], numeric)
            if not np.isfinite(error):
                raise GradientCheckError(name, float('nan'), tolerance)
            name_worst = max(name_worst, error)
        logging.debug(f"gradient_check: {name} {len(picked)} coordinates, max relative error {name_worst:.3e}")
        if name_worst > tolerance:
            raise GradientCheckError(name, name_worst, tolerance)
        worst = max(worst, name_worst)
    return worst
