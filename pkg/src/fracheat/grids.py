"""Uniform grids in space (interval and truncated line) and time."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class FractionalOrder:
    s: float

    def __post_init__(self):
        s = float(self.s)
        if not (0.0 < s < 1.0) or not np.isfinite(s):
            raise UsageError(f"fractional order s must satisfy 0 < s < 1, got {self.s!r}")
        object.__setattr__(self, "s", s)

    def __float__(self):
        return self.s


def as_order(s) -> FractionalOrder:
    return s if isinstance(s, FractionalOrder) else FractionalOrder(s)


@dataclass(frozen=True)
class SpaceGrid:
    """Interior nodes x_i = a + (i+1) h of (a, b), h = (b - a) / (n + 1)."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise UsageError(f"need a < b, got ({self.a}, {self.b})")
        if int(self.n) != self.n or self.n < 2:
            raise UsageError(f"need n >= 2 interior nodes, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def length(self) -> float:
        return self.b - self.a

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + self.h * np.arange(1, self.n + 1)
        x.flags.writeable = False
        return x

    def snap(self, q: float) -> int:
        """Index of the node nearest to q; ties go to the lower index."""
        if not (self.a < q < self.b):
            raise UsageError(f"observation point q={q} is not inside ({self.a}, {self.b})")
        y = (q - self.a) / self.h - 1.0
        i = int(np.ceil(y - 0.5))
        return min(max(i, 0), self.n - 1)

    def inner(self, u, v) -> float:
        """Discrete L2 inner product (u, v)_h = h * sum u_i v_i."""
        return self.h * float(np.dot(u, v))


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise UsageError(f"need T > 0, got {self.T}")
        if int(self.M) != self.M or self.M < 2:
            raise UsageError(f"need M >= 2 time steps, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def dt(self) -> float:
        return self.T / self.M

    @cached_property
    def times(self) -> np.ndarray:
        t = self.dt * np.arange(self.M + 1)
        t[-1] = self.T
        t.flags.writeable = False
        return t

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.M * factor)


@dataclass(frozen=True)
class LineGrid:
    """Truncation [-L, L) of the real line with N equispaced nodes, dx = 2L/N.

    The node set is the periodic lattice used by the discrete Fourier
    transform; x = 0 is a node when N is even.
    """

    L: float = 40.0
    N: int = 1024

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise UsageError(f"need half-width L > 0, got {self.L}")
        if int(self.N) != self.N or self.N < 4:
            raise UsageError(f"need N >= 4 line nodes, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.N)
        x.flags.writeable = False
        return x

    @property
    def nyquist(self) -> float:
        return np.pi / self.dx

    def snap(self, q: float) -> int:
        if not (-self.L < q < self.L - self.dx):
            raise UsageError(f"observation point q={q} outside the line grid")
        y = (q + self.L) / self.dx
        return int(np.ceil(y - 0.5))
