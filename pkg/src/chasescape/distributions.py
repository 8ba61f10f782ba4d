"""Transmission-time laws for infection and patching."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class TimeDistribution:
    """Law of a positive transmission time.

    Supported kinds:
      dirac(tau)                    point mass at tau
      uniform(a, b)                 uniform on [a, b]
      shifted_exponential(s, rate)  s + Exp(rate)
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "dirac":
            if self.a <= 0.0:
                raise InvalidParameterError("dirac time must be positive")
        elif self.kind == "uniform":
            if not (0.0 < self.a <= self.b):
                raise InvalidParameterError(
                    f"uniform support must satisfy 0 < a <= b, got [{self.a}, {self.b}]"
                )
        elif self.kind == "shifted_exponential":
            if self.a < 0.0 or self.b <= 0.0:
                raise InvalidParameterError(
                    "shifted exponential needs shift >= 0 and rate > 0"
                )
        else:
            raise InvalidParameterError(f"unknown time distribution {self.kind!r}")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def dirac(tau: float) -> "TimeDistribution":
        return TimeDistribution("dirac", tau)

    @staticmethod
    def uniform(a: float, b: float) -> "TimeDistribution":
        return TimeDistribution("uniform", a, b)

    @staticmethod
    def shifted_exponential(shift: float, rate: float) -> "TimeDistribution":
        return TimeDistribution("shifted_exponential", shift, rate)

    @staticmethod
    def exponential(rate: float) -> "TimeDistribution":
        return TimeDistribution("shifted_exponential", 0.0, rate)

    # -- queries -----------------------------------------------------------

    @property
    def min_support(self) -> float:
        return self.a  # holds for all three kinds

    @property
    def is_dirac(self) -> bool:
        return self.kind == "dirac"

    def mean(self) -> float:
        if self.kind == "dirac":
            return self.a
        if self.kind == "uniform":
            return 0.5 * (self.a + self.b)
        return self.a + 1.0 / self.b

    def sample(self, rng, size=None):
        if self.kind == "dirac":
            return self.a if size is None else np.full(size, self.a)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size=size)
        draw = rng.exponential(1.0 / self.b, size=size)
        return self.a + draw

    def scaled(self, b: float) -> "TimeDistribution":
        """Law of T/b for T with this law (a speed-up for b > 1).

        The minimum of the support scales to min/b accordingly.
        """
        if b <= 0.0:
            raise InvalidParameterError(f"scale factor must be positive, got {b}")
        if self.kind == "dirac":
            return TimeDistribution.dirac(self.a / b)
        if self.kind == "uniform":
            return TimeDistribution.uniform(self.a / b, self.b / b)
        return TimeDistribution.shifted_exponential(self.a / b, self.b * b)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}

    @staticmethod
    def from_json_dict(d: dict) -> "TimeDistribution":
        return TimeDistribution(d["kind"], float(d.get("a", 0.0)), float(d.get("b", 0.0)))


def scale_distribution(dist: TimeDistribution, b: float) -> TimeDistribution:
    """Speed-up scaling: the returned law is that of T/b."""
    return dist.scaled(b)


def dirac_pair(t_infect: float, t_patch: float):
    """Convenience for fixed-time fixtures."""
    return TimeDistribution.dirac(t_infect), TimeDistribution.dirac(t_patch)
