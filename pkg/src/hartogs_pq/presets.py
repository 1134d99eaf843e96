"""Bundled weight presets: two with Property (P) failing, two with it holding.

harmonic      phi = Re z            on the disk of radius 1/2   (lap phi = 0 everywhere)
quadratic     phi = |z|^2           on the disk of radius 0.7   (lap phi = 4)
flat_disk     radial-flat, rho=1/2  on the disk of radius 0.7   (lap phi = 0 on B(0, 1/2))
thin_segment  phi = 150 y^4         on the square (-1/2, 1/2)^2 (lap phi = 0 on y = 0)
"""
import copy

M_VALUES = list(range(33))
H = 1 / 128

PRESETS = {
    "harmonic": {
        "domain": {"kind": "disk", "params": [0.0, 0.0, 0.5]},
        "weight": {"family": "harmonic-linear", "a": 1.0, "b": 0.0},
        "diagnostics": {"widths": [0.2, 0.1, 0.05]},
    },
    "quadratic": {
        "domain": {"kind": "disk", "params": [0.0, 0.0, 0.7]},
        "weight": {"family": "polynomial", "terms": [[2, 0, 1.0], [0, 2, 1.0]]},
        "diagnostics": {"widths": [0.2, 0.1, 0.05]},
    },
    "flat_disk": {
        "domain": {"kind": "disk", "params": [0.0, 0.0, 0.7]},
        "weight": {"family": "radial-flat", "coef": 1.0, "radius": 0.5, "center": [0.0, 0.0]},
        "diagnostics": {"widths": [0.16, 0.08, 0.04, 0.02]},
    },
    "thin_segment": {
        "domain": {"kind": "rectangle", "params": [-0.5, 0.5, -0.5, 0.5]},
        "weight": {"family": "polynomial", "terms": [[0, 4, 150.0]]},
        "diagnostics": {"widths": [0.2, 0.1, 0.05, 0.025]},
    },
}

# the flat_disk ceiling: the disk where its Laplacian vanishes
FLAT_CORE = {"kind": "disk", "params": [0.0, 0.0, 0.5]}


def preset_config(name):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    from .config import DEFAULTS, deep_merge
    cfg = deep_merge(copy.deepcopy(DEFAULTS), copy.deepcopy(PRESETS[name]))
    cfg["name"] = name
    cfg["grid"]["h"] = H
    cfg["sweep"]["m_values"] = list(M_VALUES)
    return cfg
