"""Smoothed step functions used to turn a level set into a material indicator.

Two families are provided.  The exponential profile is smooth with a
strictly positive derivative everywhere, which is what the saturated
descent direction's sign guarantee relies on.  The polynomial profile is
exactly 0/1 outside a band of width epsilon below the interface, so
gradient information concentrates near the boundary; it loses the strict
positivity and is flagged accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXPONENTIAL = "exponential"
POLYNOMIAL = "polynomial"
KINDS = (EXPONENTIAL, POLYNOMIAL)


@dataclass(frozen=True)
class SmoothedHeaviside:
    """Regularized Heaviside profile with value and derivative evaluators."""

    kind: str = EXPONENTIAL
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")

    @property
    def strictly_positive_derivative(self) -> bool:
        """Whether the derivative is positive everywhere (descent guarantee)."""
        return self.kind == EXPONENTIAL

    def value(self, r):
        """Profile value in [0, 1]."""
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        if self.kind == EXPONENTIAL:
            # evaluated via exp(-|r|/eps) so large arguments never overflow
            decay = 0.5 * np.exp(-np.abs(r) / eps)
            out = np.where(r >= 0.0, 1.0 - decay, decay)
        else:
            shifted = r + eps
            ramp = shifted * shifted * (eps - 2.0 * r) / eps**3
            out = np.where(r >= 0.0, 1.0, np.where(r <= -eps, 0.0, ramp))
        return out if out.ndim else float(out)

    def derivative(self, r):
        """Analytic derivative of :meth:`value`, nonnegative."""
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        if self.kind == EXPONENTIAL:
            out = np.exp(-np.abs(r) / eps) / (2.0 * eps)
        else:
            inside = (r > -eps) & (r < 0.0)
            out = np.where(inside, -6.0 * r * (r + eps) / eps**3, 0.0)
        return out if out.ndim else float(out)


def saturate(r):
    """Odd, strictly increasing squash of the real line onto ]-1, 1[.

    Used to bound a raw descent direction: the output keeps the sign of the
    input, so the pointwise product r * saturate(r) is never negative.
    """
    r = np.asarray(r, dtype=float)
    out = np.sign(r) * (1.0 - np.exp(-np.abs(r)))
    return out if out.ndim else float(out)
