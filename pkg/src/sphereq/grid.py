"""Pole-free colatitude/longitude grids on the unit sphere and the field
primitives built on them: sampling, quadrature, longitudinal spectral
calculus, rotations, reflections, and sector masks.

Colatitudes are Gauss-Legendre roots mapped through arccos, so no node ever
touches a pole and ring quadrature integrates band-limited integrands
exactly.  Longitudes are uniform on [0, 2pi) with no duplicated seam column;
periodicity is index arithmetic, never a ghost column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParameterError

TWO_PI = 2.0 * math.pi


def _legendre_and_derivative(n, x):
    """Values of P_n and P_n' at x via the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre(n, tol=1e-14, max_iter=100):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Roots of the degree-n Legendre polynomial, started from the Chebyshev
    guess and polished by Newton iteration until every update falls below
    ``tol``.  Weights are 2 / ((1 - x^2) P_n'(x)^2).
    """
    if n < 1:
        raise ParameterError("quadrature rule needs at least one node")
    if n == 1:
        return np.zeros(1), np.full(1, 2.0)
    k = np.arange(n, dtype=float)
    x = np.cos(math.pi * (4.0 * k + 3.0) / (4.0 * n + 2.0))
    for _ in range(max_iter):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < tol:
            break
    p, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Discretization of the sphere: Gauss-Legendre colatitude rings crossed
    with uniform longitudes.

    ``theta_nodes`` increase strictly inside (0, pi); ``theta_weights`` are
    the Gauss-Legendre weights in x = cos(theta), so the product quadrature
    sums to the sphere area 4*pi.
    """

    n_theta: int
    n_phi: int
    theta_nodes: np.ndarray
    theta_weights: np.ndarray

    @property
    def phi_nodes(self):
        return TWO_PI * np.arange(self.n_phi) / self.n_phi

    @property
    def phi_cell(self):
        """Longitudinal spacing 2*pi / n_phi."""
        return TWO_PI / self.n_phi

    def mesh(self):
        """(theta, phi) coordinate matrices of shape (n_theta, n_phi)."""
        return np.meshgrid(self.theta_nodes, self.phi_nodes, indexing="ij")

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return self.n_theta == other.n_theta and self.n_phi == other.n_phi

    def __hash__(self):
        return hash((self.n_theta, self.n_phi))


def make_grid(n_theta, n_phi):
    """Build a GridSpec with ``n_theta`` Gauss-Legendre colatitude rings and
    ``n_phi`` uniform longitudes.

    Requires n_theta >= 4 and even n_phi >= 8 (even counts keep half-grid
    reflections exact).
    """
    if not isinstance(n_theta, (int, np.integer)) or n_theta < 4:
        raise ParameterError("n_theta must be an integer >= 4, got %r" % (n_theta,))
    if not isinstance(n_phi, (int, np.integer)) or n_phi < 8 or n_phi % 2:
        raise ParameterError("n_phi must be an even integer >= 8, got %r" % (n_phi,))
    x, w = gauss_legendre(int(n_theta))
    theta = np.arccos(x[::-1])  # x descending -> theta ascending
    weights = w[::-1]
    return GridSpec(int(n_theta), int(n_phi), theta, weights)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real field u(theta, phi) sampled on a GridSpec.

    ``values[j, k] = u(theta_j, phi_k)`` with phi_k = 2*pi*k / n_phi.  The
    array is copied and frozen on construction; every operation returns a
    new field, so instances are safe to share across threads.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.shape != (self.grid.n_theta, self.grid.n_phi):
            raise ParameterError(
                "field shape %s does not match grid (%d, %d)"
                % (arr.shape, self.grid.n_theta, self.grid.n_phi)
            )
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise EvaluationError(
                "non-finite field value at ring %d, column %d" % (bad[0], bad[1])
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    @property
    def span(self):
        """max(u) - min(u) over the grid."""
        return float(np.max(self.values) - np.min(self.values))

    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ParameterError("fields live on different grids")
            return ScalarField(self.grid, op(self.values, other.values))
        return ScalarField(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return ScalarField(self.grid, other - self.values)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return ScalarField(self.grid, self.values / scalar)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


def eval_on_grid(grid, f):
    """Sample the pointwise function f(theta, phi) on every grid node.

    ``f`` may be vectorized over arrays or accept scalars only; both work.
    A non-finite result raises EvaluationError naming the offending node.
    """
    theta, phi = grid.mesh()
    try:
        vals = np.asarray(f(theta, phi), dtype=float)
        if vals.shape != theta.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.empty_like(theta)
        for j in range(grid.n_theta):
            for k in range(grid.n_phi):
                vals[j, k] = f(theta[j, k], phi[j, k])
    if not np.all(np.isfinite(vals)):
        j, k = np.argwhere(~np.isfinite(vals))[0]
        raise EvaluationError(
            "f(theta=%.17g, phi=%.17g) is not finite"
            % (grid.theta_nodes[j], grid.phi_nodes[k])
        )
    return ScalarField(grid, vals)


def integrate(field):
    """Quadrature of the field over the sphere.

    Exact for integrands polynomial of degree <= 2*n_theta - 1 in cos(theta)
    times trigonometric degree < n_phi in phi.
    """
    g = field.grid
    ring_sums = field.values.sum(axis=1)
    return float(np.dot(g.theta_weights, ring_sums) * g.phi_cell)


def quadrature_mean(field):
    """Area-weighted mean of the field, integrate(u) / (4*pi)."""
    return integrate(field) / (4.0 * math.pi)


def d_phi(field):
    """Longitudinal derivative, computed spectrally per ring.

    Exact for band-limited rings; the (unused for such rings) Nyquist mode
    is dropped, the standard choice for real even-length signals.
    """
    n = field.grid.n_phi
    coeffs = np.fft.rfft(field.values, axis=1)
    m = np.arange(coeffs.shape[1])
    coeffs *= 1j * m
    coeffs[:, -1] = 0.0
    return ScalarField(field.grid, np.fft.irfft(coeffs, n, axis=1))


def rotate_phi(field, delta):
    """Field v(theta, phi) = u(theta, phi + delta), by Fourier phase shift."""
    n = field.grid.n_phi
    coeffs = np.fft.fft(field.values, axis=1)
    m = np.fft.fftfreq(n, d=1.0 / n)
    coeffs *= np.exp(1j * m * delta)
    return ScalarField(field.grid, np.fft.ifft(coeffs, axis=1).real)


def reflect_phi(field, phi_c):
    """Mirror the field across the meridian at longitude ``phi_c``.

    Returns v with v(theta, phi) = u(theta, 2*phi_c - phi), computed per
    ring in Fourier space (conjugate-reverse plus phase), hence exact for
    band-limited rings and valid for arbitrary, off-grid phi_c.
    """
    n = field.grid.n_phi
    coeffs = np.fft.fft(field.values, axis=1)
    reversed_coeffs = coeffs[:, (-np.arange(n)) % n]
    m = np.fft.fftfreq(n, d=1.0 / n)
    reversed_coeffs *= np.exp(-2j * m * phi_c)
    return ScalarField(field.grid, np.fft.ifft(reversed_coeffs, axis=1).real)


def interp_phi(field, phis):
    """Trigonometric interpolation of every ring at arbitrary longitudes.

    Returns an array of shape (n_theta, len(phis)).
    """
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    n = field.grid.n_phi
    coeffs = np.fft.fft(field.values, axis=1) / n
    m = np.fft.fftfreq(n, d=1.0 / n)
    basis = np.exp(1j * np.outer(m, phis))
    return (coeffs @ basis).real


def oversample_phi(field, factor):
    """Resample every ring on a ``factor`` times finer uniform longitude grid
    by Fourier zero padding (exact trigonometric interpolation)."""
    if factor < 1 or int(factor) != factor:
        raise ParameterError("oversampling factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        return field.values.copy()
    n = field.grid.n_phi
    fine_n = factor * n
    coeffs = np.fft.rfft(field.values, axis=1)
    padded = np.zeros((field.grid.n_theta, fine_n // 2 + 1), dtype=complex)
    padded[:, : n // 2] = coeffs[:, : n // 2] * factor
    padded[:, n // 2] = coeffs[:, n // 2] * (0.5 * factor)
    return np.fft.irfft(padded, fine_n, axis=1)


@dataclass(frozen=True)
class SectorMask:
    """Open longitude sector (phi_lo, phi_hi) over the full colatitude range.

    ``columns[k]`` is True when grid longitude phi_k lies strictly inside
    the arc (wrapping across 2*pi allowed).  The sector area is 2 * width
    steradians; colatitude always spans the full [0, pi].
    """

    phi_lo: float
    phi_hi: float
    width: float
    area: float
    columns: np.ndarray

    @property
    def indices(self):
        return np.nonzero(self.columns)[0]

    @property
    def n_columns(self):
        return int(np.count_nonzero(self.columns))


def sector_mask(grid, phi_lo, phi_hi):
    """Mask of grid longitudes strictly inside the arc from phi_lo to phi_hi.

    The width phi_hi - phi_lo must lie in [0, 2*pi]; endpoints are excluded
    (open interval), so a boundary meridian that coincides with a grid
    column is never selected.  Width 2*pi selects every column.
    """
    width = float(phi_hi) - float(phi_lo)
    if width < 0.0:
        raise ParameterError("sector width is negative (phi_hi < phi_lo)")
    if width > TWO_PI + 1e-12:
        raise ParameterError("sector width exceeds 2*pi")
    if width >= TWO_PI - 1e-12:
        cols = np.ones(grid.n_phi, dtype=bool)
        width = TWO_PI
    else:
        rel = np.mod(grid.phi_nodes - phi_lo, TWO_PI)
        cols = (rel > 0.0) & (rel < width)
    return SectorMask(
        phi_lo=float(phi_lo) % TWO_PI,
        phi_hi=float(phi_hi) % TWO_PI,
        width=width,
        area=2.0 * width,
        columns=cols,
    )
