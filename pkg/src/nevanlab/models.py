"""Model Kähler manifolds with explicit heat kernels, volumes and Green functions.

Every model is a product of factors, each carrying one global real chart:

* ``EuclideanFactor(m)``: ℂᵐ with its flat metric, coordinates (Re z1, Im z1, ...).
* ``CylinderFactor()``: ℂ* in logarithmic coordinates w = s + iθ, θ ∈ [-π, π).
  The flat metric |dz|²/|z|² becomes ds² + dθ², base point z = 1.
* ``TorusFactor(L1, L2)``: a rectangular complex 1-torus, fundamental box
  [-L1/2, L1/2) × [-L2/2, L2/2).
* ``ProjectiveFactor(k, scale)``: ℙᵏ with scale·ω_FS in affine coordinates,
  holomorphic sectional curvature 4/scale. Heat kernel only for k = 1.
* ``PuncturedFactor(m)``: ℂᵐ∖{0} with ‖dz‖²/‖z‖², base point (1, 0, ..., 0).
  Distance, volume and Ricci only.

The heat equation is (Δ - ∂_t)u = 0 with Δ the Laplace-Beltrami operator, so
the Euclidean kernel is (4πt)^{-n/2} exp(-ρ²/4t) in real dimension n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special
from scipy.stats import qmc

from .errors import ConfigError, DomainError, PoleError, UnsupportedOperation

LOG_TINY = -745.0
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    return special.logsumexp(a, axis=axis)


def wrap_periodic(x: np.ndarray, period: float) -> np.ndarray:
    """Reduce to [-period/2, period/2)."""
    return x - period * np.floor(x / period + 0.5)


def log_circle_kernel(t: np.ndarray, delta: np.ndarray, period: float) -> np.ndarray:
    """Logarithm of the heat kernel of a circle of circumference ``period``.

    Uses lattice images for t <= L²/(4π) and the Fourier series above, each
    truncated at |k| <= 5 (omitted terms are below exp(-π·25) relative).
    """
    t = np.asarray(t, dtype=float)
    d = wrap_periodic(np.asarray(delta, dtype=float), period)
    t, d = np.broadcast_arrays(t, d)
    cut = period**2 / (4.0 * np.pi)
    ks = np.arange(-5, 6)
    small = t <= cut
    out = np.empty(t.shape)
    if np.any(small):
        ts = t[small][..., None]
        shifted = d[small][..., None] + ks * period
        out[small] = _logsumexp(-(shifted**2) / (4.0 * ts)) - 0.5 * np.log(4.0 * np.pi * ts[..., 0])
    if np.any(~small):
        tl = t[~small][..., None]
        kk = np.arange(1, 6)
        series = 1.0 + 2.0 * np.sum(
            np.exp(-4.0 * np.pi**2 * kk**2 * tl / period**2)
            * np.cos(2.0 * np.pi * kk * d[~small][..., None] / period),
            axis=-1,
        )
        out[~small] = np.log(series) - math.log(period)
    return out


def sample_unit_vectors(dim: int, n: int) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors in R^dim (n of them).

    Circle: equally spaced angles. Higher spheres: an unscrambled Halton set
    pushed through the Gaussian quantile and normalized.
    """
    if dim == 1:
        return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
    if dim == 2:
        phi = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    pts = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    g = special.ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# factors


class Factor:
    """One factor of a product model; all array methods are vectorized."""

    kind = "factor"
    real_dim = 0
    complex_dim = 0
    compact = False
    flat = True
    kahler = True
    kernel_supported = True
    growth_dim = 0  # exponent of volume growth contributed (non-compact part)

    # half widths of the fundamental box per chart coordinate
    def half_widths(self) -> np.ndarray:
        return np.full(self.real_dim, np.inf)

    def origin(self) -> np.ndarray:
        return np.zeros(self.real_dim)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        return x

    def dist(self, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def log_kernel(self, t, x, y=None) -> np.ndarray:
        raise UnsupportedOperation(f"heat kernel not available on {self.kind}")

    def sample(self, t: float, rng: np.random.Generator, n: int) -> np.ndarray:
        raise UnsupportedOperation(f"heat kernel sampling not available on {self.kind}")

    def ball_volume(self, r) -> np.ndarray:
        raise NotImplementedError

    def sphere_area(self, r) -> np.ndarray:
        raise NotImplementedError

    def kinks(self) -> list[float]:
        return []

    @property
    def diameter(self) -> float:
        return math.inf

    @property
    def total_volume(self) -> float:
        return math.inf

    def equilibration_time(self) -> float:
        return 0.0

    def complex_coords(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., 0::2] + 1j * x[..., 1::2]

    def log_det_metric(self, z: np.ndarray) -> np.ndarray:
        """log det g_{i j̄} in the complex chart (Riemannian metric 2 Re g dz dz̄)."""
        return np.full(np.shape(z)[:-1], self.complex_dim * math.log(0.5))

    def ricci_matrix(self, z: np.ndarray) -> np.ndarray:
        """R_{i j̄} = -∂_i ∂̄_j log det g, so that 𝓡 = (√-1/2π) Σ R_{ij̄} dz_i∧dz̄_j."""
        k = self.complex_dim
        return np.zeros(np.shape(z)[:-1] + (k, k), dtype=complex)

    def describe(self) -> dict[str, str]:
        raise NotImplementedError


class EuclideanFactor(Factor):
    kind = "euclidean"

    def __init__(self, m: int = 1):
        if m < 1:
            raise ConfigError("euclidean dimension m must be >= 1")
        self.m = int(m)
        self.complex_dim = self.m
        self.real_dim = 2 * self.m
        self.growth_dim = 2 * self.m

    def dist(self, x, y=None):
        d = np.asarray(x, dtype=float) if y is None else np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.sqrt(np.sum(d * d, axis=-1))

    def log_kernel(self, t, x, y=None):
        t = np.asarray(t, dtype=float)
        d2 = self.dist(x, y) ** 2
        return -self.m * np.log(4.0 * np.pi * t) - d2 / (4.0 * t)

    def sample(self, t, rng, n):
        return rng.normal(0.0, math.sqrt(2.0 * t), size=(n, self.real_dim))

    def ball_volume(self, r):
        r = np.asarray(r, dtype=float)
        return np.pi**self.m / math.factorial(self.m) * r ** (2 * self.m)

    def sphere_area(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 * np.pi**self.m / math.factorial(self.m - 1) * r ** (2 * self.m - 1)

    def describe(self):
        return {"base": "euclidean", "m": str(self.m)}


class CylinderFactor(Factor):
    """ℂ* in log coordinates (s, θ); flat, parabolic, linear volume growth."""

    kind = "cylinder"
    complex_dim = 1
    real_dim = 2
    growth_dim = 1

    def half_widths(self):
        return np.array([np.inf, np.pi])

    def wrap(self, x):
        x = np.array(x, dtype=float, copy=True)
        x[..., 1] = wrap_periodic(x[..., 1], 2.0 * np.pi)
        return x

    def dist(self, x, y=None):
        x = np.asarray(x, dtype=float)
        d = x if y is None else x - np.asarray(y, dtype=float)
        return np.hypot(d[..., 0], wrap_periodic(d[..., 1], 2.0 * np.pi))

    def log_kernel(self, t, x, y=None):
        x = np.asarray(x, dtype=float)
        d = x if y is None else x - np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        return -0.5 * np.log(4.0 * np.pi * t) - d[..., 0] ** 2 / (4.0 * t) + log_circle_kernel(
            t, d[..., 1], 2.0 * np.pi
        )

    def sample(self, t, rng, n):
        x = rng.normal(0.0, math.sqrt(2.0 * t), size=(n, 2))
        return self.wrap(x)

    def ball_volume(self, r):
        r = np.asarray(r, dtype=float)
        c = np.minimum(r, np.pi)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(r > 0, c / np.where(r > 0, r, 1.0), 0.0)
            v = 2.0 * c * np.sqrt(np.maximum(r * r - c * c, 0.0)) + 2.0 * r * r * np.arcsin(np.minimum(ratio, 1.0))
        return v

    def sphere_area(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(r > 0, np.pi / np.where(r > 0, r, 1.0), 1.0)
        return 4.0 * r * np.arcsin(np.minimum(1.0, ratio))

    def kinks(self):
        return [np.pi]

    def equilibration_time(self):
        return 4.0 * np.pi**2

    def log_det_metric_z(self, z: np.ndarray) -> np.ndarray:
        """log det g in the multiplicative coordinate z = e^w (used as an oracle)."""
        return np.log(0.5 / np.abs(z) ** 2)

    def describe(self):
        return {"base": "cylinder"}


class TorusFactor(Factor):
    """Flat rectangular complex 1-torus ℂ / (L1 ℤ + i L2 ℤ)."""

    kind = "torus"
    complex_dim = 1
    real_dim = 2
    compact = True

    def __init__(self, L1: float = 1.0, L2: float | None = None):
        L2 = L1 if L2 is None else L2
        if L1 <= 0 or L2 <= 0:
            raise ConfigError("torus lengths must be positive")
        self.L = np.array([float(L1), float(L2)])

    def half_widths(self):
        return self.L / 2.0

    def wrap(self, x):
        x = np.asarray(x, dtype=float)
        return wrap_periodic(x, self.L)

    def dist(self, x, y=None):
        x = np.asarray(x, dtype=float)
        d = x if y is None else x - np.asarray(y, dtype=float)
        d = wrap_periodic(d, self.L)
        return np.hypot(d[..., 0], d[..., 1])

    def log_kernel(self, t, x, y=None):
        x = np.asarray(x, dtype=float)
        d = x if y is None else x - np.asarray(y, dtype=float)
        return log_circle_kernel(t, d[..., 0], self.L[0]) + log_circle_kernel(t, d[..., 1], self.L[1])

    def sample(self, t, rng, n):
        return self.wrap(rng.normal(0.0, math.sqrt(2.0 * t), size=(n, 2)))

    def _quarter(self, r):
        a, b = self.L / 2.0
        r = np.asarray(r, dtype=float)

        def F(x):
            with np.errstate(invalid="ignore", divide="ignore"):
                s = np.where(r > 0, np.minimum(x / np.where(r > 0, r, 1.0), 1.0), 0.0)
            return 0.5 * (x * np.sqrt(np.maximum(r * r - x * x, 0.0)) + r * r * np.arcsin(s))

        x1 = np.sqrt(np.maximum(r * r - b * b, 0.0))
        xa = np.minimum(r, a)
        x1a = np.minimum(x1, a)
        return b * x1a + F(xa) - F(x1a)

    def ball_volume(self, r):
        return 4.0 * self._quarter(r)

    def sphere_area(self, r):
        a, b = self.L / 2.0
        r = np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            rr = np.where(r > 0, r, 1.0)
            ang = np.arcsin(np.minimum(1.0, b / rr)) - np.arccos(np.minimum(1.0, a / rr))
        return np.where(r > 0, 4.0 * r * np.maximum(ang, 0.0), 0.0)

    def kinks(self):
        a, b = self.L / 2.0
        return sorted({a, b, math.hypot(a, b)})

    @property
    def diameter(self):
        return float(math.hypot(*(self.L / 2.0)))

    @property
    def total_volume(self):
        return float(self.L[0] * self.L[1])

    def equilibration_time(self):
        return float(np.max(self.L) ** 2)

    def describe(self):
        return {"torus": f"{self.L[0]!r}x{self.L[1]!r}"}


class ProjectiveFactor(Factor):
    """ℙᵏ with the metric scale·ω_FS (holomorphic sectional curvature 4/scale)."""

    kind = "projective"
    compact = True
    flat = False
    growth_dim = 0
    _LMAX = 2000

    def __init__(self, k: int = 1, scale: float = 1.0):
        if k < 1 or scale <= 0:
            raise ConfigError("projective factor needs k >= 1 and scale > 0")
        self.k = int(k)
        self.scale = float(scale)
        self.complex_dim = self.k
        self.real_dim = 2 * self.k
        self.kernel_supported = self.k == 1

    @property
    def _sq(self):
        return math.sqrt(self.scale)

    def dist(self, x, y=None):
        x = np.asarray(x, dtype=float)
        zx = self.complex_coords(x)
        if y is None:
            return self._sq * np.arctan(np.sqrt(np.sum(np.abs(zx) ** 2, axis=-1)))
        zy = self.complex_coords(np.asarray(y, dtype=float))
        inner = 1.0 + np.sum(zx * np.conj(zy), axis=-1)
        nx = np.sqrt(1.0 + np.sum(np.abs(zx) ** 2, axis=-1))
        ny = np.sqrt(1.0 + np.sum(np.abs(zy) ** 2, axis=-1))
        return self._sq * np.arccos(np.clip(np.abs(inner) / (nx * ny), 0.0, 1.0))

    def ball_volume(self, r):
        r = np.asarray(r, dtype=float)
        s = np.sin(np.minimum(r / self._sq, np.pi / 2))
        return self.scale**self.k * np.pi**self.k / math.factorial(self.k) * s ** (2 * self.k)

    def sphere_area(self, r):
        r = np.asarray(r, dtype=float)
        u = np.minimum(r / self._sq, np.pi / 2)
        c = self.scale**self.k * np.pi**self.k / math.factorial(self.k)
        return c * 2 * self.k * np.sin(u) ** (2 * self.k - 1) * np.cos(u) / self._sq

    def kinks(self):
        return [self.diameter]

    @property
    def diameter(self):
        return self._sq * math.pi / 2

    @property
    def total_volume(self):
        return self.scale**self.k * math.pi**self.k / math.factorial(self.k)

    def equilibration_time(self):
        # spectral gap of the round sphere of radius R = sqrt(scale)/2 is 2/R²
        return 20.0 * self.scale / 4.0

    def log_kernel(self, t, x, y=None):
        if self.k != 1:
            raise UnsupportedOperation("heat kernel on ℙᵏ is only available for k = 1")
        R = self._sq / 2.0
        t = np.asarray(t, dtype=float)
        d = self.dist(x, y)
        t, d = np.broadcast_arrays(t, d)
        shape = t.shape
        t, d = t.reshape(-1), d.reshape(-1)
        gamma = np.clip(d / R, 0.0, np.pi)
        # parametrix (4πt)^{-1} e^{-d²/4t} sqrt(γ/sin γ) for very small t,
        # Legendre series otherwise
        out = np.empty(t.shape)
        t_ser = 41.0 * R * R / self._LMAX**2
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(gamma > 1e-8, gamma / np.sin(np.minimum(gamma, np.pi - 1e-15)), 1.0)
        par = -np.log(4.0 * np.pi * t) - d * d / (4.0 * t) + 0.5 * np.log(ratio)
        use_par = t < t_ser
        idx = np.nonzero(~use_par)
        if idx[0].size:
            ts = t[idx]
            cg = np.cos(gamma[idx])
            need = np.minimum(self._LMAX, np.ceil(R * np.sqrt(41.0 / ts)) + 8)
            # group nodes by series length (powers of two) so large t stays cheap
            group = np.ceil(np.log2(np.maximum(need, 16))).astype(int)
            res = np.empty(ts.shape)
            for gi in np.unique(group):
                sel = group == gi
                lmax = int(min(self._LMAX, 2**gi))
                res[sel] = self._legendre_log(ts[sel], cg[sel], par[idx][sel], R, lmax)
            out[idx] = res
        out[use_par] = par[use_par]
        return out.reshape(shape)

    @staticmethod
    def _legendre_log(ts, cg, par, R, lmax):
        p_prev = np.ones_like(cg)
        p_cur = cg.copy()
        total = 1.0 + 3.0 * np.exp(-2.0 * ts / R**2) * p_cur
        for l in range(1, lmax):
            p_next = ((2 * l + 1) * cg * p_cur - l * p_prev) / (l + 1)
            p_prev, p_cur = p_cur, p_next
            ll = l + 1
            total = total + (2 * ll + 1) * np.exp(-ll * (ll + 1) * ts / R**2) * p_cur
        val = total / (4.0 * np.pi * R * R)
        good = val > 1e-10 / (4.0 * np.pi * R * R)
        return np.where(good, np.log(np.where(good, val, 1.0)), par)

    def log_det_metric(self, z):
        n2 = np.sum(np.abs(z) ** 2, axis=-1)
        return self.k * math.log(self.scale / 2.0) - (self.k + 1) * np.log1p(n2)

    def ricci_matrix(self, z):
        z = np.asarray(z, dtype=complex)
        n2 = np.sum(np.abs(z) ** 2, axis=-1)[..., None, None]
        eye = np.eye(self.k)
        outer = np.conj(z)[..., :, None] * z[..., None, :]
        return (self.k + 1) * (eye / (1.0 + n2) - outer / (1.0 + n2) ** 2)

    def describe(self):
        return {"projective": str(self.k), "fs_scale": repr(self.scale)}


class PuncturedFactor(Factor):
    """ℂᵐ∖{0} with ‖dz‖²/‖z‖², isometric to ℝ × S^{2m-1}(1)."""

    kind = "punctured"
    flat = False
    kernel_supported = False
    growth_dim = 1

    def __init__(self, m: int = 2):
        if m < 1:
            raise ConfigError("punctured dimension m must be >= 1")
        self.m = int(m)
        self.complex_dim = self.m
        self.real_dim = 2 * self.m
        self.kahler = self.m == 1
        self.flat = self.m == 1
        k = 2 * self.m - 2
        self._sphere_const = 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)
        g, w = gauss_legendre(200)
        self._gx = 0.5 * (g + 1.0)
        self._gw = 0.5 * w

    def origin(self):
        o = np.zeros(self.real_dim)
        o[0] = 1.0
        return o

    def dist(self, x, y=None):
        x = np.asarray(x, dtype=float)
        y = self.origin() if y is None else np.asarray(y, dtype=float)
        nx = np.linalg.norm(x, axis=-1)
        ny = np.linalg.norm(y, axis=-1)
        if np.any(nx == 0) or np.any(ny == 0):
            raise DomainError("the puncture is not a point of the manifold")
        cosang = np.clip(np.sum(x * y, axis=-1) / (nx * ny), -1.0, 1.0)
        return np.hypot(np.log(nx / ny), np.arccos(cosang))

    def _profile(self, r, kind):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        phimax = np.arcsin(np.minimum(1.0, np.pi / np.where(r > 0, r, 1.0)))
        phi = phimax[:, None] * self._gx[None, :]
        wts = phimax[:, None] * self._gw[None, :]
        k = 2 * self.m - 2
        sn = np.sin(r[:, None] * np.sin(phi)) ** k
        if kind == "V":
            f = 2.0 * (r[:, None] * np.cos(phi)) ** 2 * sn
        else:
            f = 2.0 * r[:, None] * sn
        return self._sphere_const * np.sum(f * wts, axis=-1)

    def ball_volume(self, r):
        out = self._profile(r, "V")
        return out if np.ndim(r) else float(out[0])

    def sphere_area(self, r):
        out = self._profile(r, "S")
        return out if np.ndim(r) else float(out[0])

    def kinks(self):
        return [np.pi]

    def log_det_metric(self, z):
        n2 = np.sum(np.abs(z) ** 2, axis=-1)
        return self.m * np.log(0.5 / n2)

    def ricci_matrix(self, z):
        z = np.asarray(z, dtype=complex)
        n2 = np.sum(np.abs(z) ** 2, axis=-1)[..., None, None]
        eye = np.eye(self.m)
        outer = np.conj(z)[..., :, None] * z[..., None, :]
        return self.m * (eye / n2 - outer / n2**2)

    def describe(self):
        return {"base": "punctured", "m": str(self.m)}


# ---------------------------------------------------------------------------
# radial volume profiles of products


class _Profile:
    def V(self, r):
        raise NotImplementedError

    def S(self, r):
        raise NotImplementedError

    kinks: list[float] = []
    diameter = math.inf


class _FactorProfile(_Profile):
    def __init__(self, factor: Factor):
        self.factor = factor
        self.kinks = list(factor.kinks())
        self.diameter = factor.diameter

    def V(self, r):
        return np.asarray(self.factor.ball_volume(r), dtype=float)

    def S(self, r):
        return np.asarray(self.factor.sphere_area(r), dtype=float)


class _ProductProfile(_Profile):
    """V_{AB}(r) = ∫_0^{π/2} V_A(r cos φ) S_B(r sin φ) r cos φ dφ, split at kinks."""

    def __init__(self, a: _Profile, b: _Profile, nodes: int = 24):
        self.a, self.b = a, b
        ka, kb = a.kinks, b.kinks
        self.kinks = sorted(set(ka) | set(kb) | {math.hypot(x, y) for x in ka for y in kb})
        self.diameter = math.hypot(a.diameter, b.diameter) if math.isfinite(a.diameter + b.diameter) else math.inf
        g, w = gauss_legendre(nodes)
        # cosine map clusters nodes at both piece ends (sqrt-type kinks)
        tau = 0.5 * np.pi * (g + 1.0)
        self._u = 0.5 * (1.0 - np.cos(tau))
        self._du = 0.25 * np.pi * np.sin(tau) * w

    def _pieces(self, r: float) -> np.ndarray:
        br = [0.0, 0.5 * np.pi]
        for k in self.a.kinks:
            if 0 < k < r:
                br.append(math.acos(k / r))
        for k in self.b.kinks:
            if 0 < k < r:
                br.append(math.asin(k / r))
        return np.unique(np.array(br))

    def _integrate(self, r, which):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros(r.shape)
        for i, ri in enumerate(r):
            if ri <= 0:
                continue
            br = self._pieces(ri)
            lo, hi = br[:-1, None], br[1:, None]
            phi = (lo + (hi - lo) * self._u).ravel()
            wts = ((hi - lo) * self._du).ravel()
            c, s = np.cos(phi), np.sin(phi)
            if which == "V":
                f = self.a.V(ri * c) * self.b.S(ri * s) * ri * c
            else:
                f = self.a.S(ri * c) * self.b.S(ri * s) * ri
            out[i] = np.sum(f * wts)
        return out

    def V(self, r):
        return self._integrate(r, "V")

    def S(self, r):
        return self._integrate(r, "S")


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class LiYauConstants:
    """Heat-kernel constants (ε, c1, c2) and Green constants (A, B)."""

    epsilon: float
    c1: float
    c2: float
    A: float | None = None
    B: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise ConfigError("epsilon must lie in [0, 1)")
        if not (0 < self.c1 <= self.c2):
            raise ConfigError("Li-Yau constants need 0 < c1 <= c2")
        if self.A is not None and not (0 < self.A <= (self.B if self.B is not None else self.A)):
            raise ConfigError("Green constants need 0 < A <= B")

    @property
    def beta(self) -> float:
        return (1.0 + self.epsilon) / (1.0 - self.epsilon)

    @property
    def theta(self) -> float:
        return 2.0 * self.beta

    def describe(self) -> dict[str, str]:
        d = {"epsilon": repr(self.epsilon), "c1": repr(self.c1), "c2": repr(self.c2)}
        if self.A is not None:
            d["A"] = repr(self.A)
        if self.B is not None:
            d["B"] = repr(self.B)
        return d


# ---------------------------------------------------------------------------
# the manifold


class ModelManifold:
    """Product of factors with a single real chart (factor charts concatenated).

    The base point o is the concatenation of the factor origins.
    """

    def __init__(self, factors: Sequence[Factor], name: str | None = None):
        factors = tuple(factors)
        if not factors:
            raise ConfigError("a model needs at least one factor")
        if all(f.compact for f in factors):
            raise ConfigError("a model needs a non-compact factor")
        self.factors = factors
        dims = [f.real_dim for f in factors]
        offs = np.cumsum([0] + dims)
        self.slices = [slice(int(a), int(b)) for a, b in zip(offs[:-1], offs[1:])]
        self.real_dim = int(offs[-1])
        self.complex_dim = sum(f.complex_dim for f in factors)
        self.name = name or "x".join(f.kind for f in factors)
        prof: _Profile = _FactorProfile(factors[0])
        for f in factors[1:]:
            prof = _ProductProfile(prof, _FactorProfile(f))
        self._profile = prof

    # -- structure ---------------------------------------------------------
    @property
    def is_flat(self) -> bool:
        return all(f.flat for f in self.factors)

    @property
    def is_kahler(self) -> bool:
        return all(f.kahler for f in self.factors)

    @property
    def kernel_supported(self) -> bool:
        return all(f.kernel_supported for f in self.factors)

    @property
    def is_euclidean(self) -> bool:
        return len(self.factors) == 1 and isinstance(self.factors[0], EuclideanFactor)

    @property
    def growth_dim(self) -> int:
        return sum(f.growth_dim for f in self.factors)

    @property
    def compact_volume(self) -> float:
        v = 1.0
        for f in self.factors:
            if f.compact:
                v *= f.total_volume
        return v

    @property
    def base_factor(self) -> Factor:
        return self.factors[0]

    @cached_property
    def parabolic(self) -> bool:
        """Volume criterion: ∫^∞ t dt / V(t) diverges (Cauchy test over doubling)."""
        return not volume_criterion_converges(self)

    def origin(self) -> np.ndarray:
        return np.concatenate([f.origin() for f in self.factors])

    def half_widths(self) -> np.ndarray:
        return np.concatenate([f.half_widths() for f in self.factors])

    def wrap(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float, copy=True)
        for f, s in zip(self.factors, self.slices):
            x[..., s] = f.wrap(x[..., s])
        return x

    def complex_coords(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([f.complex_coords(np.asarray(x)[..., s]) for f, s in zip(self.factors, self.slices)], axis=-1)

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.real_dim:
            raise DomainError(f"points must have {self.real_dim} chart coordinates, got {x.shape[-1]}")
        return x

    # -- metric ------------------------------------------------------------
    def distance(self, x, y=None) -> np.ndarray:
        """Riemannian distance from y (default o) to x."""
        x = self._check_point(x)
        y = None if y is None else self._check_point(y)
        sq = 0.0
        for f, s in zip(self.factors, self.slices):
            d = f.dist(x[..., s], None if y is None else y[..., s])
            sq = sq + d * d
        return np.sqrt(sq)

    def volume(self, r) -> np.ndarray:
        """Volume V(r) of the geodesic ball B(o, r) (vectorized)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("radius must be >= 0")
        out = self._profile.V(r)
        return out.reshape(r.shape) if r.ndim else float(np.asarray(out).ravel()[0])

    def sphere_area(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = self._profile.S(r)
        return out.reshape(r.shape) if r.ndim else float(np.asarray(out).ravel()[0])

    def volume_quad(self, r: float, rtol: float = 1e-10) -> float:
        """Ball volume by adaptive slicing (reference path for product models)."""
        if len(self.factors) == 1:
            return float(self.volume(r))
        a = ModelManifold(self.factors[:-1])
        b = self.factors[-1]

        def f(s):
            return a.volume(math.sqrt(max(r * r - s * s, 0.0))) * float(b.sphere_area(s))

        pts = [k for k in b.kinks() if 0 < k < r]
        pts += [math.sqrt(r * r - k * k) for k in a._profile.kinks if 0 < k < r]
        val, _ = integrate.quad(f, 0.0, r, points=sorted(set(pts)) or None, epsrel=rtol, epsabs=0.0, limit=400)
        return float(val)

    # -- heat kernel -------------------------------------------------------
    def log_heat_kernel(self, t, x, y=None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("heat kernel needs t > 0")
        if not self.kernel_supported:
            raise UnsupportedOperation(f"heat kernel not available on {self.name}")
        x = self._check_point(x)
        y = None if y is None else self._check_point(y)
        out = 0.0
        for f, s in zip(self.factors, self.slices):
            out = out + f.log_kernel(t, x[..., s], None if y is None else y[..., s])
        return out

    def heat_kernel(self, t, x, y=None) -> np.ndarray:
        return np.exp(self.log_heat_kernel(t, x, y))

    def sample_heat(self, t: float, n: int, seed: int, block: int = 0) -> np.ndarray:
        """Exact samples from p(t, o, ·) in chart coordinates.

        The stream for (seed, block) is a Philox counter-based generator, so
        results do not depend on how blocks are scheduled.
        """
        rng = np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(block)]))
        parts = [f.sample(t, rng, n) for f in self.factors]
        return np.concatenate(parts, axis=-1)

    def li_yau_sandwich(self, constants: LiYauConstants, t, x):
        """(lower, value, upper) for the two-sided Gaussian bounds on p(t, o, x)."""
        lo, val, up = self.log_li_yau_sandwich(constants, t, x)
        return np.exp(lo), np.exp(val), np.exp(up)

    def log_li_yau_sandwich(self, constants: LiYauConstants, t, x):
        t = np.asarray(t, dtype=float)
        x = self._check_point(x)
        rho2 = self.distance(x) ** 2
        logv = np.log(2.0 * np.asarray(self.volume(np.sqrt(t))))
        eps = constants.epsilon
        lo = math.log(constants.c1) - logv - rho2 / (4.0 * (1.0 - eps) * t)
        up = math.log(constants.c2) - logv - rho2 / (4.0 * (1.0 + eps) * t)
        return lo, self.log_heat_kernel(t, x), up

    # -- Green functions ---------------------------------------------------
    def _time_integral(self, x: np.ndarray, t_max, y=None, panels: int = 40, nodes: int = 12) -> np.ndarray:
        """2 ∫_0^{t_max} p(t, y, x) dt by Gauss-Legendre in log t (points vectorized)."""
        x = np.atleast_2d(self._check_point(x))
        d = self.distance(x, y)
        t_max = np.broadcast_to(np.asarray(t_max, dtype=float), d.shape)
        out = np.full(d.shape, np.inf)
        ok = d > 0
        if not np.any(ok):
            return out
        dk = d[ok]
        u_hi = np.log(t_max[ok])
        u_lo = np.minimum(np.log(np.maximum(dk * dk / 2960.0, 1e-300)), u_hi - 1.0)
        g, w = gauss_legendre(nodes)
        e = (np.arange(panels)[:, None] + 0.5 * (g[None, :] + 1.0)).ravel() / panels
        we = np.tile(w, panels) / (2.0 * panels)
        u = u_lo[:, None] + (u_hi - u_lo)[:, None] * e[None, :]
        t = np.exp(u)
        xx = np.broadcast_to(x[ok][:, None, :], u.shape + (self.real_dim,))
        yy = None if y is None else np.broadcast_to(np.asarray(y, dtype=float), xx.shape)
        lp = self.log_heat_kernel(t, xx, yy)
        vals = np.exp(lp + u)
        out[ok] = 2.0 * (u_hi - u_lo) * np.sum(vals * we[None, :], axis=-1)
        return out

    def green(self, x, y=None) -> np.ndarray:
        """Minimal positive Green function G(y, x) = 2∫_0^∞ p(t, y, x) dt."""
        if self.parabolic:
            raise UnsupportedOperation(f"{self.name} is parabolic: no finite global Green function")
        x = self._check_point(x)
        d = self.distance(x, y)
        if np.any(d == 0):
            raise PoleError("Green function evaluated at its pole")
        base = self.factors[0]
        if self.is_euclidean:
            m = base.m
            return math.gamma(m - 1) / (2.0 * math.pi**m) * d ** (2 - 2 * m)
        if not isinstance(base, EuclideanFactor) or not self.kernel_supported:
            raise UnsupportedOperation(f"Green function not available on {self.name}")
        m = base.m
        T = 100.0 * max(max(f.equilibration_time() for f in self.factors), 1.0)
        T = np.maximum(T, 100.0 * d * d)
        head = self._time_integral(np.atleast_2d(x), T, None if y is None else np.atleast_2d(y))
        xb = np.atleast_2d(x)[..., self.slices[0]]
        yb = None if y is None else np.atleast_2d(y)[..., self.slices[0]]
        a = base.dist(xb, yb) ** 2 / 4.0
        x_ = a / T
        with np.errstate(divide="ignore", invalid="ignore"):
            tail_exact = a ** (1 - m) * special.gamma(m - 1) * special.gammainc(m - 1, x_)
        tail_small = T ** (1 - m) / (m - 1) * (1.0 - (m - 1) / m * x_)
        tail = np.where(x_ < 1e-6, tail_small, tail_exact) * 2.0 * (4.0 * math.pi) ** (-m) / self.compact_volume
        return (head + tail).reshape(np.shape(d))

    def truncated_green(self, r: float, x, y=None) -> np.ndarray:
        """G_r(y, x) = 2∫_0^r p(t, y, x) dt (finite in every model)."""
        if r <= 0:
            raise DomainError("r must be positive")
        x = self._check_point(x)
        d = self.distance(x, y)
        if self.is_euclidean:
            m = self.factors[0].m
            a = d * d / 4.0
            with np.errstate(divide="ignore"):
                if m == 1:
                    return special.exp1(a / r) / (2.0 * math.pi)
                return 2.0 * (4.0 * math.pi) ** (-m) * a ** (1 - m) * special.gamma(m - 1) * special.gammaincc(m - 1, a / r)
        out = self._time_integral(np.atleast_2d(x), r, None if y is None else np.atleast_2d(y))
        return out.reshape(np.shape(d))

    # -- curvature ---------------------------------------------------------
    def ricci_form(self, x) -> np.ndarray:
        """Hermitian matrix R_{ij̄} of 𝓡 = -dd^c log det g in chart coordinates."""
        x = self._check_point(x)
        k = self.complex_dim
        out = np.zeros(x.shape[:-1] + (k, k), dtype=complex)
        c0 = 0
        for f, s in zip(self.factors, self.slices):
            z = f.complex_coords(x[..., s])
            kk = f.complex_dim
            out[..., c0 : c0 + kk, c0 : c0 + kk] = f.ricci_matrix(z)
            c0 += kk
        return out

    def log_det_metric(self, x) -> np.ndarray:
        x = self._check_point(x)
        return sum(f.log_det_metric(f.complex_coords(x[..., s])) for f, s in zip(self.factors, self.slices))

    # -- serialization -----------------------------------------------------
    def describe(self) -> dict[str, str]:
        d: dict[str, str] = {}
        tori = []
        for f in self.factors:
            fd = f.describe()
            if "torus" in fd:
                tori.append(fd["torus"])
            else:
                d.update(fd)
        if tori:
            d["torus"] = ", ".join(tori)
        return d

    def __repr__(self) -> str:
        return f"ModelManifold({self.name})"


def manifold_from_config(cfg: dict[str, str]) -> ModelManifold:
    """Build a model from a key = value block (see ``ModelManifold.describe``)."""
    base = cfg.get("base", "euclidean").strip().lower()
    factors: list[Factor] = []
    try:
        if base == "euclidean":
            factors.append(EuclideanFactor(int(cfg.get("m", "1"))))
        elif base == "cylinder":
            factors.append(CylinderFactor())
        elif base == "punctured":
            factors.append(PuncturedFactor(int(cfg.get("m", "2"))))
        else:
            raise ConfigError(f"unknown base model {base!r}")
        tor = cfg.get("torus", "").strip()
        if tor:
            for item in tor.split(","):
                parts = [float(p) for p in item.strip().lower().split("x")]
                if len(parts) == 1:
                    parts = parts * 2
                factors.append(TorusFactor(parts[0], parts[1]))
        proj = cfg.get("projective", "").strip()
        if proj:
            factors.append(ProjectiveFactor(int(proj), float(cfg.get("fs_scale", "1.0"))))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad manifold parameter: {exc}") from exc
    return ModelManifold(factors)


def euclidean(m: int = 1) -> ModelManifold:
    return ModelManifold([EuclideanFactor(m)])


def cylinder_torus(L: float = 1.0) -> ModelManifold:
    """ℂ* × T¹ with a square torus of side L."""
    return ModelManifold([CylinderFactor(), TorusFactor(L, L)])


# ---------------------------------------------------------------------------
# volume criterion and comparison


def volume_criterion_increments(M: ModelManifold, doublings: int = 14) -> np.ndarray:
    """I_k = ∫_{2^k}^{2^{k+1}} t dt / V(t) for k = 0, ..., doublings-1."""
    g, w = gauss_legendre(16)
    out = []
    for k in range(doublings):
        a, b = 2.0**k, 2.0 ** (k + 1)
        u = np.log(a) + (np.log(b) - np.log(a)) * 0.5 * (g + 1.0)
        t = np.exp(u)
        v = np.asarray(M.volume(t))
        out.append(0.5 * (np.log(b) - np.log(a)) * np.sum(w * t * t / v))
    return np.array(out)


def volume_criterion_converges(M: ModelManifold) -> bool:
    inc = volume_criterion_increments(M)
    ratios = inc[-4:] / inc[-5:-1]
    return bool(np.all(ratios < 0.75))


def bishop_gromov_ratio(M: ModelManifold, r) -> np.ndarray:
    """V(r) / (Euclidean ball volume in the same real dimension)."""
    n = M.real_dim
    r = np.asarray(r, dtype=float)
    omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return np.asarray(M.volume(r)) / (omega * r**n)


# ---------------------------------------------------------------------------
# constants: pinned and fitted


def pinned_constants(M: ModelManifold) -> LiYauConstants | None:
    """Exact constants on ℂᵐ: ε = 0, c1 = c2 = 2/(m! 4^m), A = B = 1/m (m >= 2)."""
    if not M.is_euclidean:
        return None
    m = M.factors[0].m
    c = 2.0 / (math.factorial(m) * 4.0**m)
    if m == 1:
        return LiYauConstants(0.0, c, c)
    return LiYauConstants(0.0, c, c, 1.0 / m, 1.0 / m)


def _fit_points(M: ModelManifold, rho_max: float, n_rho: int, n_dir: int) -> np.ndarray:
    dirs = sample_unit_vectors(M.real_dim, n_dir)
    lam = np.linspace(0.0, rho_max, n_rho)
    x = M.origin() + lam[None, :, None] * dirs[:, None, :]
    return M.wrap(x.reshape(-1, M.real_dim))


def fit_li_yau(
    M: ModelManifold,
    epsilon: float,
    t_range: tuple[float, float] = (1e-3, 1e3),
    rho_max: float = 20.0,
    n_t: int = 81,
    n_rho: int = 81,
    n_dir: int = 24,
    margin: float = 0.02,
) -> LiYauConstants:
    """Fit c1, c2 by a grid scan of the normalized kernel, then polish.

    c1 = min and c2 = max over the grid of 2V(√t) p(t,o,x) exp(ρ²/(4(1∓ε)t)),
    followed by local optimization in (log t, chart radius) from the extremal
    grid point; the result is widened by the relative ``margin``.
    """
    if M.is_euclidean and epsilon == 0.0:
        return pinned_constants(M)
    pts = _fit_points(M, rho_max, n_rho, n_dir)
    ts = np.geomspace(t_range[0], t_range[1], n_t)
    rho2 = M.distance(pts) ** 2
    logv = np.log(2.0 * np.asarray(M.volume(np.sqrt(ts))))
    lp = M.log_heat_kernel(ts[:, None], pts[None, :, :])
    base = logv[:, None] + lp
    low = base + rho2[None, :] / (4.0 * (1.0 - epsilon) * ts[:, None])
    upp = base + rho2[None, :] / (4.0 * (1.0 + epsilon) * ts[:, None])
    low = np.where(np.isfinite(low), low, np.inf)
    upp = np.where(np.isfinite(upp), upp, -np.inf)
    lmin = float(np.min(low))
    umax = float(np.max(upp))

    dirs = sample_unit_vectors(M.real_dim, n_dir)

    def objective(v, sgn, eps_sign, direction):
        t = math.exp(min(max(v[0], math.log(t_range[0])), math.log(t_range[1])))
        lam = min(max(v[1], 0.0), rho_max)
        x = M.wrap(M.origin() + lam * direction)[None, :]
        r2 = float(M.distance(x)[0] ** 2)
        val = math.log(2.0 * float(M.volume(math.sqrt(t)))) + float(M.log_heat_kernel(t, x)[0])
        val += r2 / (4.0 * (1.0 + eps_sign * epsilon) * t)
        return sgn * val

    for arr, sgn, es in ((low, 1.0, -1.0), (upp, -1.0, 1.0)):
        it, ip = np.unravel_index(np.argmin(sgn * arr), arr.shape)
        direction = dirs[ip // n_rho]
        lam0 = np.linspace(0.0, rho_max, n_rho)[ip % n_rho]
        res = optimize.minimize(
            objective,
            x0=[math.log(ts[it]), lam0],
            args=(sgn, es, direction),
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 400},
        )
        if sgn > 0:
            lmin = min(lmin, float(res.fun))
        else:
            umax = max(umax, float(-res.fun))
    c1 = math.exp(lmin) * (1.0 - margin)
    c2 = math.exp(umax) * (1.0 + margin)
    return LiYauConstants(float(epsilon), c1, c2)


def green_integral(M: ModelManifold, rho) -> np.ndarray:
    """∫_ρ^∞ t dt / V(t) (closed form on ℂᵐ, quadrature otherwise)."""
    rho = np.asarray(rho, dtype=float)
    if M.is_euclidean:
        m = M.factors[0].m
        if m == 1:
            return np.full(rho.shape, np.inf)
        return math.factorial(m) / ((2 * m - 2) * math.pi**m) * rho ** (2 - 2 * m)
    d = M.growth_dim
    if d <= 2:
        return np.full(rho.shape, np.inf)
    g, w = gauss_legendre(24)
    flat = np.atleast_1d(rho).ravel()
    out = np.empty(flat.shape)
    for i, a in enumerate(flat):
        # panels in log t from a to a·2^40, plus the power-law tail beyond
        edges = a * 2.0 ** np.arange(0, 41, 2)
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = np.log(lo) + (np.log(hi) - np.log(lo)) * 0.5 * (g + 1.0)
            t = np.exp(u)
            tot += 0.5 * (np.log(hi) - np.log(lo)) * np.sum(w * t * t / np.asarray(M.volume(t)))
        T = edges[-1]
        tot += T * T / float(M.volume(T)) / (d - 2)
        out[i] = tot
    return out.reshape(rho.shape)


def fit_green_constants(M: ModelManifold, rho_max: float = 20.0, n_rho: int = 60, n_dir: int = 16) -> tuple[float, float]:
    """(A, B) = (min, max) of G(o,x) / ∫_ρ^∞ t dt/V(t) over sampled points."""
    if M.is_euclidean:
        m = M.factors[0].m
        if m >= 2:
            return 1.0 / m, 1.0 / m
    if M.parabolic:
        raise UnsupportedOperation("Green constants need a non-parabolic model")
    dirs = sample_unit_vectors(M.real_dim, n_dir)
    lam = np.geomspace(0.05, rho_max, n_rho)
    x = M.wrap(M.origin() + lam[None, :, None] * dirs[:, None, :]).reshape(-1, M.real_dim)
    ratio = M.green(x) / green_integral(M, M.distance(x))
    return float(np.min(ratio)), float(np.max(ratio))
