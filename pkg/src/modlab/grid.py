"""Periodic grid, unitary discrete Fourier transform, and Lebesgue quadrature.

A torus of period ``L`` stands in for R^d.  All data used downstream is
localized well inside the box, so the periodization error sits far below the
tolerances of the estimates being measured.  Coordinates are centered,
``x_j = -L/2 + j h``, and the transform pair matches the continuum convention

    F(xi) = (2 pi)^{-d/2} \\int f(x) e^{-i x.xi} dx,

realized by an FFT with a per-axis ``(-1)^m`` phase twist.  With this
normalization the discrete Parseval identity ``h^d sum |f|^2 =
dxi^d sum |F|^2`` holds to round-off, which the modulation-norm layer relies
on for exact Plancherel checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SpectralField",
    "make_grid",
    "to_spectrum",
    "from_spectrum",
    "lp_norm",
    "spacetime_lp_norm",
    "trapezoid",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with ``n`` points per axis on [-L/2, L/2)^d."""

    d: int
    n: int
    length: float

    @property
    def h(self) -> float:
        """Spatial mesh width L/n."""
        return self.length / self.n

    @property
    def dxi(self) -> float:
        """Frequency lattice spacing 2*pi/L."""
        return 2.0 * np.pi / self.length

    @property
    def xi_max(self) -> float:
        """Nyquist frequency pi*n/L; representable band is [-xi_max, xi_max)."""
        return np.pi * self.n / self.length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def volume(self) -> float:
        return self.length**self.d

    @property
    def cell(self) -> float:
        """Quadrature weight h^d of one spatial cell."""
        return self.h**self.d

    def axis_coords(self) -> np.ndarray:
        """Physical coordinates of one axis, x_j = -L/2 + j*h."""
        return -0.5 * self.length + self.h * np.arange(self.n)

    def axis_freqs(self) -> np.ndarray:
        """Frequencies of one axis in FFT order, dxi * m with m in [-n/2, n/2)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        x = self.axis_coords()
        return [x.reshape(self._axis_shape(i)) for i in range(self.d)]

    def freqs(self) -> list[np.ndarray]:
        """Broadcastable frequency arrays in FFT order, one per axis."""
        xi = self.axis_freqs()
        return [xi.reshape(self._axis_shape(i)) for i in range(self.d)]

    def freq_sq(self) -> np.ndarray:
        """|xi|^2 on the full frequency lattice (FFT order)."""
        return _freq_sq(self)

    def _axis_shape(self, axis: int) -> tuple[int, ...]:
        shape = [1] * self.d
        shape[axis] = self.n
        return tuple(shape)


def make_grid(d: int, n: int, length: float) -> Grid:
    """Validated grid constructor; n must be a power of two >= 8, d in 1..4."""
    if d not in (1, 2, 3, 4):
        raise ValueError(f"spatial dimension must be 1..4, got {d}")
    if n < 8 or (n & (n - 1)) != 0:
        raise ValueError(f"points per axis must be a power of two >= 8, got {n}")
    if not (length > 0):
        raise ValueError(f"period length must be positive, got {length}")
    return Grid(d=d, n=int(n), length=float(length))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Field:
    """Complex samples on the physical lattice of a grid.  Immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", _freeze(self.values))

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    @staticmethod
    def zero(grid: Grid) -> "Field":
        return Field(grid, np.zeros(grid.shape, dtype=np.complex128))


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients on the frequency lattice (FFT order)."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        if self.coefficients.shape != self.grid.shape:
            raise ValueError(
                f"spectrum shape {self.coefficients.shape} does not match grid "
                f"{self.grid.shape}"
            )
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("spectrum contains non-finite coefficients")
        object.__setattr__(self, "coefficients", _freeze(self.coefficients))


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


@lru_cache(maxsize=64)
def _phase(grid: Grid) -> np.ndarray:
    # (-1)^(m_1+...+m_d): the centered-coordinate twist, exact by construction.
    alt = np.where(np.arange(grid.n) % 2 == 0, 1.0, -1.0)
    axes = [alt.reshape(grid._axis_shape(i)) for i in range(grid.d)]
    return reduce(np.multiply, axes)


@lru_cache(maxsize=64)
def _freq_sq(grid: Grid) -> np.ndarray:
    out = reduce(np.add, [xi**2 for xi in grid.freqs()])
    out.flags.writeable = False
    return out


def to_spectrum(f: Field) -> SpectralField:
    """Forward transform with unitary continuum normalization."""
    g = f.grid
    scale = g.cell * (2.0 * np.pi) ** (-g.d / 2.0)
    coeffs = scale * _phase(g) * np.fft.fftn(f.values)
    return SpectralField(g, coeffs)


def from_spectrum(F: SpectralField) -> Field:
    """Inverse transform; round-trips ``to_spectrum`` to machine precision."""
    g = F.grid
    scale = g.dxi**g.d * (2.0 * np.pi) ** (-g.d / 2.0) * g.size
    values = scale * np.fft.ifftn(_phase(g) * F.coefficients)
    return Field(g, values)


def spectrum_l2(F: SpectralField) -> float:
    """L^2 norm computed on the frequency side, (dxi^d sum |F|^2)^(1/2)."""
    return float(np.sqrt(F.grid.dxi ** F.grid.d * np.sum(np.abs(F.coefficients) ** 2)))


def lp_norm(f: Field, p: float) -> float:
    """Riemann-sum L^p quadrature, (h^d sum |f|^p)^(1/p); p = inf gives sup."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((f.grid.cell * np.sum(a**p)) ** (1.0 / p))


def trapezoid(values: np.ndarray, nodes: np.ndarray) -> float:
    """Composite trapezoid rule on strictly increasing nodes."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 1 or nodes.size != values.size:
        raise ValueError("nodes and values must be 1-d and of equal length")
    if nodes.size < 2:
        raise ValueError("need at least two time nodes")
    dt = np.diff(nodes)
    if np.any(dt <= 0):
        raise ValueError("time nodes must be strictly increasing")
    return float(np.sum(0.5 * dt * (values[1:] + values[:-1])))


def spacetime_lp_norm(samples: Iterable[tuple[float, Field]], p: float) -> float:
    """Space-time L^p norm of a sampled trajectory.

    Trapezoid rule in time applied to t -> ||u(t)||_p^p; for p = inf the sup
    over all nodes is returned.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    pairs = list(samples)
    times = np.array([t for t, _ in pairs], dtype=float)
    if np.isinf(p):
        return max((lp_norm(f, np.inf) for _, f in pairs), default=0.0)
    powers = np.array([lp_norm(f, p) ** p for _, f in pairs])
    return float(trapezoid(powers, times) ** (1.0 / p))
