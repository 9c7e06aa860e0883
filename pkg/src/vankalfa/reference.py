"""Published reference values used by ``report`` and the acceptance suite.

``None`` marks a diverging run.  ``starred`` lists mesh sizes whose measured
value is a trailing average over an oscillating tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "ChebyshevRow", "RichardsonRow", "WeightRow", "CHEBYSHEV_TABLES", "RICHARDSON_TABLES",
    "WEIGHT_TABLES", "DISTORTED", "DISTORTION_EPS", "FILL_COUNTS", "COST_TABLES",
    "MULTIPLICATIVE", "RESIDUAL_MADDS", "DISTORTED_STARRED",
]


@dataclass(frozen=True)
class ChebyshevRow:
    patch: str
    weights: str
    k: int
    interval: tuple
    rho: float
    measured: dict = field(default_factory=dict)  # n -> periodic rho-hat
    dirichlet: dict = field(default_factory=dict)  # n -> Dirichlet rho-hat
    starred: tuple = ()
    trailing: int = 7

    @property
    def label(self):
        return self.patch + ("W" if self.weights == "geometric" else "")


def _rows(patch, weights, data, starred=(), trailing=7, ns=(20, 40, 80)):
    out = []
    for k, iv, rho, meas, dirich in data:
        meas = dict(zip(ns, meas)) if meas else {}
        dirich = dict(zip(ns, dirich)) if dirich else {}
        out.append(ChebyshevRow(patch, weights, k, iv, rho, meas, dirich,
                                tuple(n for (kk, n) in starred if kk == k), trailing))
    return out


CHEBYSHEV_TABLES = {
    "no-weights-p2p1": ("P2P1", _rows("VKI", "none", [
        (1, (0.1, 8.3), 0.672, (0.672, 0.671, 0.671), (0.699, 0.699, 0.699)),
        (2, (0.9, 7.8), 0.295, (0.296, 0.296, 0.296), (0.585, 0.585, 0.585)),
        (3, (0.9, 7.9), 0.120, (0.107, 0.133, 0.143), (0.148, 0.148, 0.148)),
        (4, (1.4, 7.2), 0.102, (0.102, 0.102, 0.102), (0.133, 0.133, 0.133)),
        (5, (1.3, 7.4), 0.051, (0.050, 0.049, 0.047), (0.074, 0.074, 0.074)),
    ], starred=[(3, 20), (3, 40), (3, 80)]) + _rows("VKE", "none", [
        (1, (0.3, 6.0), 0.475, (0.476, 0.491, 0.475), (0.571, 0.571, 0.571)),
        (2, (0.5, 4.7), 0.440, (0.412, 0.485, 0.388), (0.392, 0.419, 0.463)),
        (3, (1.2, 4.6), 0.168, (0.169, 0.169, 0.168), (0.175, 0.176, 0.176)),
        (4, (1.6, 4.6), 0.127, (0.125, 0.128, 0.127), (0.124, 0.127, 0.127)),
        (5, (2.6, 3.7), 0.112, (0.111, 0.111, 0.112), (0.108, 0.111, 0.111)),
    ])),
    "weights-p2p1": ("P2P1", _rows("VKI", "geometric", [
        (1, (0.9, 2.9), 0.518, (0.518,), (0.517,)),
        (2, (1.1, 1.7), 0.196, (0.197,), (0.196,)),
        (3, (1.4, 2.0), 0.106, (0.126,), (0.103,)),
        (4, (1.8, 2.2), 0.085, (0.085,), (0.085,)),
        (5, (1.3, 1.8), 0.070, (0.071,), (0.069,)),
    ], ns=(40,)) + _rows("VKE", "geometric", [
        (1, (1.3, 4.0), 0.584, (0.584,), (0.589,)),
        (2, (0.5, 3.5), 0.376, (0.426,), (0.279,)),
        (3, (1.3, 3.6), 0.233, (0.234,), (0.232,)),
        (4, (2.0, 3.5), 0.149, (0.149,), (0.148,)),
        (5, (2.5, 3.5), 0.108, (0.107,), (0.108,)),
    ], ns=(40,))),
    "no-weights-q2q1": ("Q2Q1", _rows("VKI", "none", [
        (1, (4.61, 4.81), 0.866, (0.864,), None),
        (2, (4.72, 4.73), 0.752, (0.752,), None),
        (3, (3.66, 5.82), 0.642, (0.635,), None),
        (4, (0.39, 9.14), 0.203, (0.201,), None),
        (5, (0.37, 11.42), 0.162, (0.166,), None),
    ], starred=[(5, 40)], trailing=5, ns=(40,)) + _rows("VKE", "none", [
        (1, (3.40, 3.49), 0.770, (0.769,), None),
        (2, (0.96, 5.99), 0.506, (0.509,), None),
        (3, (0.79, 6.18), 0.326, (0.327,), None),
        (4, (0.91, 6.03), 0.262, (0.263,), None),
        (5, (3.29, 3.67), 0.278, (0.277,), None),
    ], trailing=5, ns=(40,))),
    "weights-q2q1": ("Q2Q1", _rows("VKI", "geometric", [
        (1, (0.15, 2.95), 0.637, (0.636,), None),
        (2, (0.71, 1.97), 0.288, (0.290,), None),
        (3, (0.90, 1.42), 0.153, (0.161,), None),
        (4, (1.23, 1.24), 0.097, (0.098,), None),
        (5, (1.17, 1.40), 0.071, (0.072,), None),
    ], trailing=5, ns=(40,)) + _rows("VKE", "geometric", [
        (1, (1.32, 3.51), 0.681, (0.683,), None),
        (2, (1.50, 1.54), 0.271, (0.265,), None),
        (3, (1.93, 1.99), 0.234, (0.241,), None),
        (4, (2.38, 2.39), 0.217, (0.221,), None),
        (5, (1.57, 2.41), 0.129, (0.128,), None),
    ], starred=[(2, 40)], trailing=5, ns=(40,))),
}


@dataclass(frozen=True)
class RichardsonRow:
    patch: str
    weights: str
    omega: float
    rho_sym: tuple  # rho^(1,0), rho^(1,1), ..., rho^(5,5)
    omega_pair: tuple
    rho_pair: float

    @property
    def label(self):
        return self.patch + ("W" if self.weights == "geometric" else "")


RICHARDSON_TABLES = {
    "richardson-p2p1": ("P2P1", [
        RichardsonRow("VKI", "none", 0.24, (0.819, 0.670, 0.509, 0.411, 0.334, 0.273),
                      (0.14, 0.50), 0.556),
        RichardsonRow("VKI", "geometric", 0.78, (0.587, 1.061, 0.337, 0.386, 0.107, 0.106),
                      (0.16, 0.84), 0.507),
        RichardsonRow("VKE", "none", 0.36, (0.669, 0.497, 0.638, 0.298, 0.126, 0.149),
                      (0.22, 0.56), 0.356),
        RichardsonRow("VKE", "geometric", 0.68, (0.574, 1.507, 0.591, 0.919, 0.292, 0.473),
                      (0.00, 0.68), 0.574),
    ]),
    "richardson-q2q1": ("Q2Q1", [
        RichardsonRow("VKI", "none", 0.21, (0.931, 0.867, 0.752, 0.651, 0.565, 0.490),
                      (0.13, 0.60), 0.809),
        RichardsonRow("VKI", "geometric", 0.92, (0.712, 0.913, 0.574, 0.290, 0.155, 0.134),
                      (0.65, 0.65), 0.637),
        RichardsonRow("VKE", "none", 0.29, (0.878, 0.770, 0.602, 0.488, 0.403, 0.337),
                      (0.76, 0.17), 0.639),
        RichardsonRow("VKE", "geometric", 0.73, (0.697, 1.519, 0.507, 0.296, 0.577, 0.305),
                      (0.41, 0.41), 0.684),
    ]),
}


@dataclass(frozen=True)
class WeightRow:
    patch: str
    sweeps: int  # nu1 + nu2
    weights: tuple
    rho: float


WEIGHT_TABLES = {
    "3w-p2p1": ("P2P1", [
        WeightRow("VKI", 1, (0.19, 0.22, 0.71), 0.581),
        WeightRow("VKE", 1, (0.54, 0.26, 0.68), 0.456),
        WeightRow("VKI", 2, (0.22, 0.29, 0.47), 0.436),
        WeightRow("VKE", 2, (0.39, 0.29, 0.37), 0.406),
    ]),
    "5w-p2p1": ("P2P1", [
        WeightRow("VKI", 1, (0.19, 0.21, 0.17, 0.35, 0.74), 0.571),
        WeightRow("VKE", 1, (0.49, 0.25, 0.24, 0.30, 0.68), 0.452),
        WeightRow("VKI", 2, (0.22, 0.28, 0.28, 0.30, 0.51), 0.415),
        WeightRow("VKE", 2, (0.43, 0.33, 0.30, 0.32, 0.36), 0.408),
    ]),
    "3w-q2q1": ("Q2Q1", [
        WeightRow("VKI", 1, (0.10, 0.13, 1.00), 0.695),
        WeightRow("VKE", 1, (0.88, 0.20, 0.84), 0.648),
        WeightRow("VKI", 2, (0.15, 0.09, 0.79), 0.583),
        WeightRow("VKE", 2, (0.18, 0.22, 0.48), 0.646),
    ]),
}

DISTORTION_EPS = (0.0, 0.0125, 0.025, 0.05, 0.1)

# (patch, weights) -> k -> measured rho-hat per epsilon at n = 80
DISTORTED = {
    ("VKI", "none"): {1: (0.672, 0.673, 0.675, 0.679, 0.718),
                      2: (0.295, 0.347, 0.405, 0.525, 0.755),
                      3: (0.120, 0.176, 0.150, 0.166, 0.266),
                      4: (0.102, 0.103, 0.104, 0.109, 0.127),
                      5: (0.051, 0.062, 0.079, 0.159, 0.316)},
    ("VKE", "none"): {1: (0.475, 0.471, 0.479, 0.506, 0.557),
                      2: (0.440, 0.540, 0.663, None, None),
                      3: (0.168, 0.210, 0.265, 0.393, 0.668),
                      4: (0.127, 0.141, 0.161, 0.184, 0.405),
                      5: (0.112, 0.117, 0.124, 0.139, 0.255)},
    ("VKI", "geometric"): {1: (0.518, 0.540, 0.571, 0.636, 0.751),
                           2: (0.196, 0.268, 0.382, 0.701, None),
                           3: (0.106, 0.113, 0.126, 0.228, 0.614),
                           4: (0.085, 0.118, 0.140, 0.169, 0.357),
                           5: (0.070, 0.088, 0.113, 0.168, 0.548)},
    ("VKE", "geometric"): {1: (0.584, 0.586, 0.588, 0.607, 0.647),
                           2: (0.376, 0.644, None, None, None),
                           3: (0.233, 0.302, 0.408, 0.740, None),
                           4: (0.149, 0.175, 0.251, 0.440, None),
                           5: (0.108, 0.153, 0.185, 0.256, 0.668)},
}

# Starred (trailing-average) distorted entries: (patch, weights, k, eps)
DISTORTED_STARRED = {("VKI", "none", 3, 0.025), ("VKE", "none", 1, 0.05),
                     ("VKE", "none", 1, 0.1), ("VKI", "geometric", 3, 0.0125)}

FILL_COUNTS = {("P2P1", "VKI"): (284, 282), ("P2P1", "VKE"): (115, 115),
               ("Q2Q1", "VKI"): (617, 617), ("Q2Q1", "VKE"): (335, 337)}

RESIDUAL_MADDS = {"P2P1": 88, "Q2Q1": 104}

# Per method: (W_s, (k, nu1+nu2), rho, W_t, relative efficiency)
COST_TABLES = {
    "cost-p2p1": ("P2P1", {
        "VKI": (654, (3, 2), 0.120, 3924, 0.830),
        "VKE": (318, (1, 2), 0.356, 636, 0.571),
        "VKIW": (693, (1, 1), 0.571, 693, 0.757),
        "VKEW": (345, (1, 1), 0.452, 345, 0.452),
    }),
    "cost-q2q1": ("Q2Q1", {
        "VKI": (1338, (4, 2), 0.203, 10704, 0.886),
        "VKE": (776, (1, 2), 0.639, 1552, 0.791),
        "VKIW": (1389, (1, 1), 0.695, 1389, 0.809),
        "VKEW": (811, (1, 1), 0.648, 811, 0.648),
    }),
}

# Multiplicative Vanka, hybrid parallel runs: patch -> k -> (interval, rho)
MULTIPLICATIVE = {
    "VKI": {1: ((0.5, 3.6), 0.308), 2: ((1.2, 3.0), 0.068), 3: ((1.8, 2.5), 0.044),
            4: ((2.2, 2.3), 0.031)},
    "VKE": {1: ((0.5, 3.3), 0.338), 2: ((1.1, 2.7), 0.075), 3: ((1.3, 2.4), 0.047),
            4: ((1.5, 2.1), 0.038)},
}
