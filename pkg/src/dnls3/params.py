"""Dispersion coefficients and solitary-wave parameters.

The model has three positive dispersion coefficients (alpha, beta, gamma).
A solitary wave is labelled by a frequency omega and a speed vector c; the
pair is admissible when omega > sigma*|c|^2/4, which makes the three
frequency-shifted resolvent symbols strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissibleParameters


@dataclass(frozen=True)
class PhysParams:
    """Dispersion coefficients of the three components.

    The sign-definite case alpha, beta, gamma > 0 is required; the
    all-negative case reduces to it by the reflection (t, x) -> (-t, -x)
    and is not handled here.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) <= 0:
            raise ValueError("dispersion coefficients must be positive")

    @property
    def sigma(self) -> float:
        """1 / min(2*alpha, beta, gamma); governs admissibility of (omega, c)."""
        return 1.0 / min(2.0 * self.alpha, self.beta, self.gamma)

    @property
    def sigma0(self) -> float:
        """min(2/alpha, 1/beta, 1/gamma); governs the exponential decay bound."""
        return min(2.0 / self.alpha, 1.0 / self.beta, 1.0 / self.gamma)


@dataclass(frozen=True)
class WaveParams:
    """Frequency omega and speed vector c of a solitary wave."""

    omega: float
    c: tuple = field(default=(0.0,))

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(ck) for ck in np.atleast_1d(self.c)))

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def c_array(self) -> np.ndarray:
        return np.asarray(self.c, dtype=float)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.c_array))

    def admissible(self, phys: PhysParams) -> bool:
        return self.omega > phys.sigma * self.speed**2 / 4.0

    def require_admissible(self, phys: PhysParams) -> None:
        if not self.admissible(phys):
            raise InadmissibleParameters(
                f"omega={self.omega} <= sigma*|c|^2/4={phys.sigma * self.speed ** 2 / 4.0}"
            )
