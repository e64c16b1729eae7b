"""Four-vector algebra with the (+,-,-,-) Minkowski product and causal classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import LuminalVelocity

__all__ = [
    "FourVector",
    "CausalClass",
    "mink_dot",
    "mdot",
    "classify",
    "gamma_of_velocity",
    "boost_matrix",
    "euclid4",
]


@dataclass(frozen=True)
class FourVector:
    """A point or tangent of Lorentz four-space, time component first (c = 1)."""

    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.t, self.x, self.y, self.z])):
            raise ValueError("FourVector components must be finite")

    @property
    def spatial(self):
        return np.array([self.x, self.y, self.z])

    def as_array(self):
        return np.array([self.t, self.x, self.y, self.z])

    def __array__(self, dtype=None, copy=None):
        arr = self.as_array()
        return arr.astype(dtype) if dtype is not None else arr

    @staticmethod
    def from_array(a):
        a = np.asarray(a, dtype=float)
        return FourVector(a[0], a[1], a[2], a[3])

    def __add__(self, other):
        return FourVector.from_array(self.as_array() + np.asarray(other))

    def __sub__(self, other):
        return FourVector.from_array(self.as_array() - np.asarray(other))

    def __mul__(self, c):
        return FourVector.from_array(c * self.as_array())

    __rmul__ = __mul__


class CausalClass(enum.Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


def mdot(a, b):
    """Minkowski product on trailing axes of ndarrays: a0*b0 - a.b (vectorized)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def mink_dot(a, b) -> float:
    """Minkowski pseudo-scalar product of two four-vectors."""
    return float(mdot(np.asarray(a), np.asarray(b)))


def euclid4(a):
    """Euclidean R^4 norm ||a||_4 (vectorized on the trailing axis)."""
    return np.linalg.norm(np.asarray(a, dtype=float), axis=-1)


def default_null_tolerance(a) -> float:
    a = np.asarray(a, dtype=float)
    return 1e-12 * max(1.0, float(np.sum(a * a)))


def classify(a, eps_null=None) -> CausalClass:
    """Causal trichotomy of a four-vector by the sign of its self-product.

    eps_null defaults to 1e-12 * max(1, ||a||_4^2); exact classification is a
    measure-zero statement that discrete arithmetic cannot honor.
    """
    if eps_null is None:
        eps_null = default_null_tolerance(a)
    if eps_null < 0:
        raise ValueError("eps_null must be nonnegative")
    s = mink_dot(a, a)
    if s > eps_null:
        return CausalClass.TIMELIKE
    if s < -eps_null:
        return CausalClass.SPACELIKE
    return CausalClass.LIGHTLIKE


def gamma_of_velocity(v) -> float:
    """Lorentz factor (1 - ||v||^2)^(-1/2) for a spatial three-velocity."""
    v = np.asarray(v, dtype=float)
    s = float(v @ v)
    if s >= 1.0:
        raise LuminalVelocity(f"||v|| = {np.sqrt(s):.6g} >= 1")
    return 1.0 / np.sqrt(1.0 - s)


def boost_matrix(v):
    """Matrix of the pure Lorentz boost taking the lab frame to one moving at v.

    Acts on column four-vectors (t, x, y, z); mink_dot is invariant under it.
    """
    v = np.asarray(v, dtype=float)
    v2 = float(v @ v)
    if v2 >= 1.0:
        raise LuminalVelocity("boost velocity must be subluminal")
    if v2 == 0.0:
        return np.eye(4)
    g = 1.0 / np.sqrt(1.0 - v2)
    L = np.eye(4)
    L[0, 0] = g
    L[0, 1:] = -g * v
    L[1:, 0] = -g * v
    L[1:, 1:] = np.eye(3) + (g - 1.0) * np.outer(v, v) / v2
    return L
