"""Simple convex sets with closed-form projections.

Every set here supports two operations used by the flow solver:

* ``project(x)`` — the nearest point of the set (Euclidean metric),
* ``project_tangent(x, v)`` — the projection of a direction ``v`` onto the
  tangent cone of the set at a point ``x`` of the set.

All variants (free space, nonnegative orthant, box, ball and products
thereof) admit cheap closed forms for both, which is the whole point: the
solver never projects onto the full feasible set of a problem, only onto
these simple pieces.
"""

from __future__ import annotations

import numpy as np

# A coordinate counts as sitting on a bound when |x_i - bound| is within this
# band (relative to the bound's magnitude).  Iterates produced by the solver
# land on bounds exactly; the band exists for external callers.
ACTIVITY_RTOL = 1e-9

# How far outside the set a point may be before project_tangent refuses it.
MEMBERSHIP_TOL = 1e-9


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"expected a vector of dimension {dim}, got shape {x.shape}")
    return x


class SimpleSet:
    """Base class: a closed convex subset of R^n with cheap projections."""

    dim: int

    def project(self, x) -> np.ndarray:
        """Nearest point of the set to ``x``."""
        raise NotImplementedError

    def project_tangent(self, x, v) -> np.ndarray:
        """Project ``v`` onto the tangent cone of the set at ``x``.

        ``x`` must belong to the set (within ``MEMBERSHIP_TOL``); a point in
        the interior leaves ``v`` unchanged.
        """
        x = _as_vector(x, self.dim)
        v = _as_vector(v, self.dim)
        self._require_member(x)
        return self._tangent(x, v)

    def _tangent(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Closed-form tangent-cone projection without membership checks.

        The solver calls this on iterates that are feasible by construction.
        """
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        """True iff the distance from ``x`` to the set is at most ``tol``."""
        x = _as_vector(x, self.dim)
        return float(np.linalg.norm(self.project(x) - x)) <= tol

    def _require_member(self, x: np.ndarray) -> None:
        if not self.contains(x, MEMBERSHIP_TOL):
            raise ValueError(
                f"point lies outside the set by more than {MEMBERSHIP_TOL:g}; "
                "tangent-cone projection is only defined on the set"
            )


class FreeSpace(SimpleSet):
    """All of R^n; both projections are the identity."""

    def __init__(self, dim: int):
        if dim < 0:
            raise ValueError("dimension must be nonnegative")
        self.dim = int(dim)

    def project(self, x) -> np.ndarray:
        return _as_vector(x, self.dim).copy()

    def _tangent(self, x, v) -> np.ndarray:
        return v.copy()

    def contains(self, x, tol: float = 0.0) -> bool:
        _as_vector(x, self.dim)
        return True

    def __repr__(self):
        return f"FreeSpace({self.dim})"


class NonnegativeOrthant(SimpleSet):
    """The set x >= 0 componentwise."""

    def __init__(self, dim: int):
        if dim < 0:
            raise ValueError("dimension must be nonnegative")
        self.dim = int(dim)

    def project(self, x) -> np.ndarray:
        return np.maximum(_as_vector(x, self.dim), 0.0)

    def _tangent(self, x, v) -> np.ndarray:
        # at the boundary x_i = 0 only outward (negative) motion is removed
        active = np.abs(x) <= ACTIVITY_RTOL
        return np.where(active, np.maximum(v, 0.0), v)

    def __repr__(self):
        return f"NonnegativeOrthant({self.dim})"


class Box(SimpleSet):
    """Componentwise bounds lower <= x <= upper; either bound may be infinite.

    A half-space like ``x_0 >= 2`` is a Box with ``upper = +inf``.  Bound
    comparisons short-circuit on infinite sentinels, so no arithmetic is ever
    performed on them.
    """

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper componentwise")
        if np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("box bounds leave an empty coordinate range")
        self.lower = lower
        self.upper = upper
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)
        self.dim = lower.size

    def project(self, x) -> np.ndarray:
        return np.clip(_as_vector(x, self.dim), self.lower, self.upper)

    def _tangent(self, x, v) -> np.ndarray:
        lo, hi = self.lower, self.upper
        at_lower = np.isfinite(lo) & (np.abs(x - lo) <= ACTIVITY_RTOL * (1.0 + np.abs(lo)))
        at_upper = np.isfinite(hi) & (np.abs(hi - x) <= ACTIVITY_RTOL * (1.0 + np.abs(hi)))
        w = np.where(at_lower, np.maximum(v, 0.0), v)
        w = np.where(at_upper, np.minimum(w, 0.0), w)
        return w

    def __repr__(self):
        return f"Box({self.lower!r}, {self.upper!r})"


class Ball(SimpleSet):
    """Euclidean ball ||x - center|| <= radius with radius > 0."""

    def __init__(self, center, radius: float):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1:
            raise ValueError("center must be a 1-d array")
        if not np.isfinite(center).all():
            raise ValueError("center must be finite")
        radius = float(radius)
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.center = center
        self.center.setflags(write=False)
        self.radius = radius
        self.dim = center.size

    def project(self, x) -> np.ndarray:
        x = _as_vector(x, self.dim)
        d = x - self.center
        r = float(np.linalg.norm(d))
        # the roundoff shell counts as inside so that projecting twice is
        # exactly idempotent (radial rescaling is only ulp-accurate)
        if r <= self.radius * (1.0 + 1e-14):
            return x.copy()
        return self.center + d * (self.radius / r)

    def _tangent(self, x, v) -> np.ndarray:
        d = x - self.center
        r = float(np.linalg.norm(d))
        if r == 0.0 or r < self.radius - ACTIVITY_RTOL * (1.0 + self.radius):
            return v.copy()
        # boundary: drop the positive part of the outward-radial component
        u = d / r
        outward = float(v @ u)
        if outward <= 0.0:
            return v.copy()
        return v - outward * u

    def __repr__(self):
        return f"Ball(center={self.center!r}, radius={self.radius})"


class Product(SimpleSet):
    """Cartesian product of simple sets over contiguous index ranges."""

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("product requires at least one component")
        for c in components:
            if not isinstance(c, SimpleSet):
                raise TypeError(f"product component {c!r} is not a SimpleSet")
        self.components = components
        self.dim = sum(c.dim for c in components)
        offsets = np.cumsum([0] + [c.dim for c in components])
        self._slices = tuple(
            slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])
        )

    def project(self, x) -> np.ndarray:
        x = _as_vector(x, self.dim)
        return np.concatenate(
            [c.project(x[s]) for c, s in zip(self.components, self._slices)]
        )

    def _tangent(self, x, v) -> np.ndarray:
        return np.concatenate(
            [c._tangent(x[s], v[s]) for c, s in zip(self.components, self._slices)]
        )

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _as_vector(x, self.dim)
        gaps = [c.project(x[s]) - x[s] for c, s in zip(self.components, self._slices)]
        return float(np.linalg.norm(np.concatenate(gaps))) <= tol

    def __repr__(self):
        return f"Product({list(self.components)!r})"


def tangent_quotient(set_: SimpleSet, x, v, delta: float) -> np.ndarray:
    """Difference quotient (P(x + delta*v) - x) / delta.

    Converges to ``project_tangent(x, v)`` as ``delta -> 0``; used in tests
    as an independent oracle for the closed forms.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    x = _as_vector(x, set_.dim)
    v = _as_vector(v, set_.dim)
    return (set_.project(x + delta * v) - x) / delta
