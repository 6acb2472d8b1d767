"""Compactly supported blending bases.

The compact basis is the y-component of a degree-n Bezier curve whose
abscissae are fixed at i/n, so evaluating the y-polynomial at t gives
phi(t) directly. Pinning the first three ordinates to 1 and the last
three to 0 makes phi and its first two derivatives vanish at both ends
of [0, 1]; outside [0, 1] the basis extends as the constants 1 and 0,
so the extension is C2 everywhere. A global Gaussian variant covers the
approximating regime where compact supports cannot be sized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreeTooLow, NonMonotoneControls

_MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class BezierBasis:
    degree: int
    control_y: tuple  # n+1 ordinates, non-increasing, pinned 1,1,1,...,0,0,0

    def __post_init__(self):
        n = self.degree
        c = self.control_y
        if n < 5:
            raise DegreeTooLow(f"degree {n} < 5 cannot satisfy the C2 end constraints")
        if len(c) != n + 1:
            raise NonMonotoneControls(f"expected {n + 1} controls, got {len(c)}")
        if not (c[0] == c[1] == c[2] == 1.0 and c[n] == c[n - 1] == c[n - 2] == 0.0):
            raise NonMonotoneControls("end controls must be pinned to 1,1,1 / 0,0,0")
        arr = np.asarray(c, dtype=np.float64)
        if arr.min() < -_MONOTONE_SLACK or arr.max() > 1 + _MONOTONE_SLACK:
            raise NonMonotoneControls("control ordinates must lie in [0, 1]")
        if np.any(np.diff(arr) > _MONOTONE_SLACK):
            raise NonMonotoneControls("control polygon must be non-increasing")


@dataclass(frozen=True)
class GaussianBasis:
    """exp(-(c t)^2) on separation-normalized distance; never exactly zero."""

    c: float | None  # None = "auto": width is half the handle separation

    def __post_init__(self):
        if self.c is not None and not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"gaussian width constant must be positive, got {self.c}")


# "auto" Gaussian: phi(d) = exp(-(2 d / r_h)^2), i.e. width r_h / 2 on the
# separation-normalized axis t = d / r_h.
GAUSSIAN_AUTO_C = 2.0


def make_bezier_basis(n: int, interior_controls=None) -> BezierBasis:
    """Endpoint-constrained basis of degree n.

    Interior ordinates (slots 3..n-3) default to the uniform ramp from 1
    to 0 along the segment b_2 -> b_{n-2}; a single slot lands on 0.5.
    """
    if n < 5:
        raise DegreeTooLow(f"degree {n} < 5")
    n_interior = n - 5
    if interior_controls is None:
        interior = [1.0 - (i + 1) / (n - 4) for i in range(n_interior)]
    else:
        interior = [float(v) for v in interior_controls]
        if len(interior) != n_interior:
            raise NonMonotoneControls(
                f"degree {n} has {n_interior} interior slots, got {len(interior)}")
    controls = (1.0, 1.0, 1.0, *interior, 0.0, 0.0, 0.0)
    return BezierBasis(degree=n, control_y=controls)


def _de_casteljau(controls: np.ndarray, t: np.ndarray) -> np.ndarray:
    levels = [np.full(t.shape, c) for c in controls]
    one_minus = 1.0 - t
    for step in range(len(controls) - 1):
        for i in range(len(controls) - 1 - step):
            levels[i] = levels[i] * one_minus + levels[i + 1] * t
    return levels[0]


def eval_bezier(basis: BezierBasis, t):
    """phi(t): clamped to 1 for t <= 0 and exactly 0 for t >= 1."""
    tt = np.asarray(t, dtype=np.float64)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    out = np.empty_like(tt)
    out[tt <= 0.0] = 1.0
    out[tt >= 1.0] = 0.0
    inner = (tt > 0.0) & (tt < 1.0)
    if np.any(inner):
        out[inner] = _de_casteljau(np.asarray(basis.control_y), tt[inner])
    return float(out[0]) if scalar else out


def eval_bezier_derivative(basis: BezierBasis, t, order: int = 1):
    """Exact derivative by Bernstein degree reduction; 0 outside [0, 1]."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    n = basis.degree
    ctrl = np.asarray(basis.control_y)
    scale = float(n)
    diff = np.diff(ctrl)
    if order == 2:
        scale *= n - 1
        diff = np.diff(diff)

    tt = np.asarray(t, dtype=np.float64)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    out = np.zeros_like(tt)
    inner = (tt >= 0.0) & (tt <= 1.0)
    if np.any(inner):
        out[inner] = scale * _de_casteljau(diff, tt[inner])
    return float(out[0]) if scalar else out


def eval_gaussian(basis: GaussianBasis, t):
    c = GAUSSIAN_AUTO_C if basis.c is None else basis.c
    tt = np.asarray(t, dtype=np.float64)
    scalar = tt.ndim == 0
    out = np.exp(-np.square(c * tt))
    return float(out) if scalar else out


def basis_from_spec(spec: dict):
    """Parse the handle-file basis form:
    {"type":"bezier","n":int,"interior":[...]} or {"type":"gaussian","c":number|"auto"}.
    """
    kind = spec.get("type", "bezier")
    if kind == "bezier":
        return make_bezier_basis(int(spec.get("n", 5)), spec.get("interior"))
    if kind == "gaussian":
        c = spec.get("c", "auto")
        return GaussianBasis(c=None if c == "auto" else float(c))
    raise ValueError(f"unknown basis type {kind!r}")


def basis_to_spec(basis) -> dict:
    if isinstance(basis, BezierBasis):
        n = basis.degree
        return {"type": "bezier", "n": n, "interior": list(basis.control_y[3:n - 2])}
    if isinstance(basis, GaussianBasis):
        return {"type": "gaussian", "c": "auto" if basis.c is None else basis.c}
    raise ValueError(f"not a basis: {basis!r}")


DEFAULT_BASIS = make_bezier_basis(5)
