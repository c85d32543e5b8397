"""Published reference values for the two ChatGPT-generated TAM studies.

All values are as printed (rounded to 2-3 decimals). Study 2 construct names
follow the model presets: ``IMGM`` for imagination (printed as IMG/IMGGM in
places) and ``PEU`` for ease of use.
"""

from __future__ import annotations

import numpy as np

# -- study 1 -----------------------------------------------------------------

STUDY1_LOADINGS = {
    "BI1": 0.982, "BI2": 0.979,
    "CPLAY1": 0.947, "CPLAY2": 0.946, "CPLAY3": 0.927, "CPLAY4": 0.955,
    "PEOU1": 0.906, "PEOU2": 0.941, "PEOU3": 0.929, "PEOU4": 0.933, "PEOU5": 0.926, "PEOU6": 0.937,
    "PU1": 0.958, "PU2": 0.93, "PU3": 0.933, "PU4": 0.941, "PU5": 0.918, "PU6": 0.947,
}
# construct -> (alpha, rho_a, rho_c, ave)
STUDY1_RELIABILITY = {
    "BI": (0.96, 0.965, 0.98, 0.961),
    "CPLAY": (0.959, 0.96, 0.97, 0.891),
    "PEOU": (0.968, 0.971, 0.974, 0.862),
    "PU": (0.973, 0.973, 0.978, 0.88),
}
STUDY1_HTMT = {
    ("CPLAY", "BI"): 0.846,
    ("PEOU", "BI"): 0.769, ("PEOU", "CPLAY"): 0.86,
    ("PU", "BI"): 0.93, ("PU", "CPLAY"): 0.889, ("PU", "PEOU"): 0.861,
}
# (original, mean, stdev, t, p)
STUDY1_PATHS = {
    ("CPLAY", "BI"): (0.194, 0.197, 0.059, 3.275, 0.001),
    ("PEOU", "BI"): (-0.107, -0.108, 0.057, 1.86, 0.063),
    ("PEOU", "PU"): (0.839, 0.839, 0.024, 35.617, 0.000),
    ("PU", "BI"): (0.823, 0.822, 0.052, 15.719, 0.000),
}
# construct correlations with sqrt(AVE) on the diagonal
STUDY1_CORR_ORDER = ("BI", "CPLAY", "PEOU", "PU")
STUDY1_CORR_SQRT_AVE = np.array([
    [0.98, np.nan, np.nan, np.nan],
    [0.813, 0.944, np.nan, np.nan],
    [0.745, 0.83, 0.929, np.nan],
    [0.901, 0.859, 0.839, 0.938],
])
# variable -> ((n, mean, sd, ci_low, ci_high) male, ... female, published p)
STUDY1_GROUPS = {
    "chatgpt_exp": ((145, 1.79, 1.32, 1.57, 2.00), (149, 2.09, 1.30, 1.88, 2.30), 0.045),
    "PU": ((145, 4.49, 1.38, 4.27, 4.72), (149, 4.93, 1.42, 4.70, 5.16), 0.008),
    "PEOU": ((145, 4.32, 1.27, 4.12, 4.53), (149, 4.66, 1.25, 4.46, 4.86), 0.023),
    "CPLAY": ((145, 4.67, 1.36, 4.45, 4.90), (149, 5.01, 1.39, 4.78, 5.23), 0.040),
    "BI": ((145, 5.06, 1.43, 4.82, 5.29), (149, 5.47, 1.47, 5.23, 5.71), 0.016),
}
STUDY1_UNIQUE_ROWS = 295
STUDY1_DUPLICATE_RATE = 0.2625

# -- study 2 -----------------------------------------------------------------

STUDY2_LOADINGS = {
    "IMGM1": 0.848, "IMGM2": 0.923, "IMGM3": 0.857,
    "IMRN1": 0.962, "IMRN2": 0.898, "IMRN3": 0.93,
    "INTR1": 0.856, "INTR2": 0.861, "INTR3": 0.872,
    "ITU1": 0.837, "ITU2": 0.823, "ITU3": 0.845,
    "PEU1": 0.846, "PEU2": 0.858, "PEU3": 0.759,
    "PU1": 0.874, "PU2": 0.893,
}
# loadings of the items removed before the reported model
STUDY2_REMOVED_LOADINGS = {"PU3": 0.29, "PEU4": 0.57}
STUDY2_RELIABILITY = {
    "IMGM": (0.85, 0.863, 0.909, 0.769),
    "IMRN": (0.922, 0.925, 0.951, 0.865),
    "INTR": (0.83, 0.839, 0.898, 0.745),
    "ITU": (0.783, 0.783, 0.873, 0.697),
    "PEU": (0.761, 0.78, 0.862, 0.675),
    "PU": (0.719, 0.722, 0.877, 0.78),
}
STUDY2_HTMT = {
    ("IMRN", "IMGM"): 0.841,
    ("INTR", "IMGM"): 0.627, ("INTR", "IMRN"): 0.633,
    ("ITU", "IMGM"): 0.822, ("ITU", "IMRN"): 0.823, ("ITU", "INTR"): 0.749,
    ("PEU", "IMGM"): 0.703, ("PEU", "IMRN"): 0.757, ("PEU", "INTR"): 0.802, ("PEU", "ITU"): 1.065,
    ("PU", "IMGM"): 0.76, ("PU", "IMRN"): 0.841, ("PU", "INTR"): 0.89, ("PU", "ITU"): 0.952,
    ("PU", "PEU"): 1.006,
}
STUDY2_PATHS = {
    ("IMGM", "PEU"): (0.125, 0.123, 0.068, 1.845, 0.065),
    ("IMGM", "PU"): (0.078, 0.072, 0.091, 0.858, 0.391),
    ("IMRN", "PEU"): (0.33, 0.335, 0.073, 4.543, 0.000),
    ("IMRN", "PU"): (0.379, 0.383, 0.09, 4.239, 0.000),
    ("INTR", "PEU"): (0.396, 0.397, 0.058, 6.819, 0.000),
    ("INTR", "PU"): (0.441, 0.443, 0.05, 8.798, 0.000),
    ("PEU", "ITU"): (0.673, 0.661, 0.078, 8.672, 0.000),
    ("PU", "ITU"): (0.214, 0.22, 0.068, 3.129, 0.002),
}
STUDY2_CORR_ORDER = ("IMGM", "IMRN", "INTR", "ITU", "PEU", "PU")
STUDY2_CORR_SQRT_AVE = np.array([
    [0.877, np.nan, np.nan, np.nan, np.nan, np.nan],
    [0.749, 0.93, np.nan, np.nan, np.nan, np.nan],
    [0.543, 0.564, 0.863, np.nan, np.nan, np.nan],
    [0.674, 0.7, 0.609, 0.835, np.nan, np.nan],
    [0.587, 0.647, 0.65, 0.832, 0.822, np.nan],
    [0.601, 0.686, 0.697, 0.715, 0.744, 0.883],
])
STUDY2_GROUPS = {
    "english": ((90, 2.51, 0.86, 2.33, 2.69), (150, 2.93, 0.87, 2.79, 3.07), 0.000),
    "vr_familiarity": ((90, 2.58, 1.02, 2.36, 2.79), (150, 2.84, 0.99, 2.68, 3.00), 0.050),
    "IMRN": ((90, 5.38, 1.18, 5.13, 5.63), (150, 6.10, 0.95, 5.94, 6.25), 0.000),
    "INTR": ((90, 5.58, 0.98, 5.38, 5.79), (150, 6.08, 0.87, 5.94, 6.22), 0.000),
    "IMGM": ((90, 5.53, 1.22, 5.28, 5.79), (150, 5.98, 0.88, 5.84, 6.12), 0.001),
    "PU": ((90, 5.57, 0.89, 5.38, 5.75), (150, 5.80, 0.61, 5.70, 5.90), 0.017),
    "PEU": ((90, 6.10, 0.74, 5.95, 6.26), (150, 6.46, 0.36, 6.41, 6.52), 0.000),
    "ITU": ((90, 6.44, 0.69, 6.29, 6.58), (150, 6.76, 0.34, 6.70, 6.81), 0.000),
}
STUDY2_UNIQUE_ROWS = 240
STUDY2_DUPLICATE_RATE = 0.40


def htmt_matrix(pairs: dict, order) -> np.ndarray:
    """Symmetric matrix from lower-triangle pairs, NaN on the diagonal."""
    pos = {n: i for i, n in enumerate(order)}
    H = np.full((len(order), len(order)), np.nan)
    for (a, b), v in pairs.items():
        H[pos[a], pos[b]] = H[pos[b], pos[a]] = v
    return H


def block_loadings(loadings: dict, construct: str) -> np.ndarray:
    return np.array([v for k, v in loadings.items() if k.rstrip("0123456789") == construct])
