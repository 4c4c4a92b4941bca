import numpy as np


def _scalar_or_array(arr):
    return float(arr) if arr.ndim == 0 else arr


def db_to_linear(db):
    """Power ratio in dB to a linear ratio."""
    return _scalar_or_array(np.power(10.0, np.asarray(db, dtype=float) / 10.0))


def linear_to_db(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return _scalar_or_array(10.0 * np.log10(x))
