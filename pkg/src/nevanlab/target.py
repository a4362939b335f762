"""Target geometry: ℙⁿ with the Fubini-Study form, divisor potentials and the
Carlson-Griffiths singular volume form.

Conventions: dd^c = (√-1/2π)∂∂̄ and ω = dd^c log(1 + ‖w‖²) in affine
coordinates, so ∫_{ℙ¹} ω = 1. A (1,1)-form (√-1/2π) Σ H_{ij̄} dw_i∧dw̄_j is
stored as its Hermitian coefficient matrix H; ω has Ω = ∂∂̄ log(1 + ‖w‖²) and
a top form with matrix H has Lebesgue density n! det H / πⁿ.

Divisors are hyperplanes {Σ A_k W_k = 0} in homogeneous coordinates W; on
ℙ¹ the point a is the covector (-a, 1) and ∞ is (1, 0). The potential
u(W) = log(‖W‖‖A‖ / |⟨W, A⟩|) is ≥ 0 and satisfies 2dd^c u = ω - [D].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, PreconditionError
from .models import gauss_legendre

INF = complex("inf")


def _is_inf(a) -> bool:
    if isinstance(a, str):
        return a.strip().lower() in ("inf", "infinity", "∞")
    return not np.isfinite(a)


def parse_point(text: str) -> complex:
    """Parse an affine point of ℙ¹ (``1``, ``-0.5+2j``, ``infinity``)."""
    t = text.strip()
    if _is_inf(t):
        return INF
    try:
        return complex(t.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse target point {text!r}") from exc


def point_label(a: complex) -> str:
    if _is_inf(a):
        return "inf"
    if a.imag == 0:
        v = a.real
        return str(int(v)) if v == int(v) else repr(v)
    return repr(a)


def homogeneous(w, n: int = 1) -> np.ndarray:
    """Affine point(s) to homogeneous coordinates (1, w); ∞ on ℙ¹ maps to (0, 1)."""
    w = np.asarray(w, dtype=complex)
    if n == 1 and (w.ndim == 0 or w.shape[-1:] != (1,)):
        w = w[..., None]
    out = np.concatenate([np.ones(w.shape[:-1] + (1,), dtype=complex), w], axis=-1)
    if n == 1:
        bad = ~np.isfinite(w[..., 0])
        if np.any(bad):
            out[bad] = np.array([0.0, 1.0])
    return out


@dataclass(frozen=True)
class TargetSpace:
    """ℙⁿ with ω = dd^c log(1 + ‖w‖²); c₁(K_N) represented by -(n+1)ω."""

    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("target dimension must be >= 1")

    @property
    def canonical_factor(self) -> int:
        return -(self.n + 1)

    def omega_matrix(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        if self.n == 1:
            w = w[..., None]
        n2 = np.sum(np.abs(w) ** 2, axis=-1)[..., None, None]
        outer = np.conj(w)[..., :, None] * w[..., None, :]
        return np.eye(self.n) / (1 + n2) - outer / (1 + n2) ** 2

    def omega_density(self, w) -> np.ndarray:
        """Lebesgue density of ωⁿ in the affine chart."""
        w = np.asarray(w, dtype=complex)
        if self.n == 1:
            return 1.0 / (math.pi * (1 + np.abs(w) ** 2) ** 2)
        n2 = np.sum(np.abs(w) ** 2, axis=-1)
        return math.factorial(self.n) / math.pi**self.n / (1 + n2) ** (self.n + 1)

    def canonical_matrix(self, w) -> np.ndarray:
        return self.canonical_factor * self.omega_matrix(w)

    def omega_total_p1(self, nodes: int = 200) -> float:
        """∫_{ℙ¹} ω by quadrature in |w| = tan(ϑ/2)."""
        g, wg = gauss_legendre(nodes)
        th = 0.5 * math.pi * (g + 1.0)
        wt = 0.5 * math.pi * wg
        s = np.tan(th / 2)
        ds = 0.5 / np.cos(th / 2) ** 2
        dens = 1.0 / (math.pi * (1 + s * s) ** 2)
        return float(np.sum(dens * 2 * math.pi * s * ds * wt))

    def anticanonical_bracket(self, samples: int = 64, tol: float = 1e-10) -> float:
        """inf{s : η < sω} for the anticanonical representative η = (n+1)ω.

        Found by bisection on positivity of sω - η at sampled points.
        """
        rng = np.random.Generator(np.random.Philox(key=[11, self.n]))
        w = rng.normal(size=(samples, self.n)) * 2 + 1j * rng.normal(size=(samples, self.n)) * 2
        W = self.omega_matrix(w if self.n > 1 else w[:, 0])
        eta = -self.canonical_matrix(w if self.n > 1 else w[:, 0])

        def positive(s):
            return bool(np.all(np.linalg.eigvalsh(s * W - eta) > 0))

        lo, hi = 0.0, 4.0 * (self.n + 1)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if positive(mid):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class DivisorData:
    """Hyperplane divisors D_1, ..., D_q on ℙⁿ with potentials u_j (+ gauge)."""

    covectors: np.ndarray
    labels: tuple[str, ...]
    n: int = 1
    gauge: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.covectors, dtype=complex)
        if A.ndim != 2 or A.shape[1] != self.n + 1:
            raise ConfigError("covectors must have shape (q, n+1)")
        if np.any(np.linalg.norm(A, axis=-1) == 0):
            raise ConfigError("zero covector")
        object.__setattr__(self, "covectors", A / np.linalg.norm(A, axis=-1, keepdims=True))
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("divisors must be distinct")

    @classmethod
    def points(cls, pts: Sequence, gauge: float = 0.0) -> "DivisorData":
        """Points of ℙ¹ given as complex numbers or ``"infinity"``."""
        rows, labels = [], []
        for a in pts:
            a = parse_point(a) if isinstance(a, str) else complex(a)
            rows.append([1.0, 0.0] if _is_inf(a) else [-a, 1.0])
            labels.append(point_label(a))
        return cls(np.array(rows, dtype=complex), tuple(labels), 1, gauge)

    @classmethod
    def hyperplanes(cls, rows: Sequence[Sequence[complex]], gauge: float = 0.0) -> "DivisorData":
        A = np.array(rows, dtype=complex)
        labels = tuple("H(" + ",".join(point_label(complex(c)) for c in row) + ")" for row in A)
        return cls(A, labels, A.shape[1] - 1, gauge)

    @property
    def q(self) -> int:
        return self.covectors.shape[0]

    def __len__(self) -> int:
        return self.q

    def point(self, j: int) -> complex:
        """Affine coordinate of the j-th point divisor on ℙ¹ (∞ allowed)."""
        if self.n != 1:
            raise DomainError("point coordinates are defined on ℙ¹")
        a0, a1 = self.covectors[j]
        return INF if a1 == 0 else complex(-a0 / a1)

    def homogeneous_point(self, j: int) -> np.ndarray:
        a0, a1 = self.covectors[j]
        return np.array([a1, -a0]) if self.n == 1 else None

    @cached_property
    def general_position(self) -> bool:
        A = self.covectors
        k = min(self.q, self.n + 1)
        for sub in itertools.combinations(range(self.q), k):
            if np.linalg.matrix_rank(A[list(sub)], tol=1e-10) < k:
                return False
        return True

    def pairing(self, j: int, W: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(W, dtype=complex), self.covectors[j], axes=([-1], [0]))

    def u_homogeneous(self, j: int, W) -> np.ndarray:
        """u_j at homogeneous points W (..., n+1); +∞ on D_j."""
        W = np.asarray(W, dtype=complex)
        num = np.linalg.norm(W, axis=-1)
        den = np.abs(self.pairing(j, W))
        with np.errstate(divide="ignore"):
            return np.log(num / den) + self.gauge

    def u(self, j: int, w) -> np.ndarray:
        """u_j at affine points (``np.inf`` allowed on ℙ¹)."""
        return self.u_homogeneous(j, homogeneous(w, self.n))

    def du(self, j: int, w) -> np.ndarray:
        """(∂u_j/∂w_i) in the affine chart (shape (..., n))."""
        w = np.asarray(w, dtype=complex)
        wv = w[..., None] if self.n == 1 else w
        n2 = np.sum(np.abs(wv) ** 2, axis=-1, keepdims=True)
        A = self.covectors[j]
        ell = A[0] + np.sum(A[1:] * wv, axis=-1, keepdims=True)
        return np.conj(wv) / (2 * (1 + n2)) - A[1:] / (2 * ell)


def sphere_grid(n: int = 64) -> np.ndarray:
    """Cell-centered grid on ℙ¹ = S² (polar × azimuth), as affine coordinates."""
    th = math.pi * (np.arange(n) + 0.5) / n
    ph = 2 * math.pi * (np.arange(n) + 0.5) / n
    T, P = np.meshgrid(th, ph, indexing="ij")
    return (np.tan(T / 2) * np.exp(1j * P)).ravel()


def complex_hessian_fd(f, w: np.ndarray, h: float) -> np.ndarray:
    """∂∂̄ f at affine points of ℂ¹ by the 5-point Laplacian (¼Δf)."""
    w = np.asarray(w, dtype=complex)
    lap = (f(w + h) + f(w - h) + f(w + 1j * h) + f(w - 1j * h) - 4 * f(w)) / (h * h)
    return 0.25 * lap


@dataclass(frozen=True, eq=False)
class SingularVolumeForm:
    """Ψ = ωⁿ / Π ũ_j² e^{-2ũ_j} with ũ_j = u_j + gauge.

    The gauge is a positive constant added to every potential; it keeps Ψ
    integrable (u_j vanishes at antipodes of a_j) and, when at least
    q/(q-n-1), makes -RicΨ positive everywhere.
    """

    divisors: DivisorData
    gauge: float | None = None

    def __post_init__(self):
        d = self.divisors
        n, q = d.n, d.q
        if q <= n + 1:
            raise PreconditionError(
                f"qω - Ric(ωⁿ) = ({q} - {n + 1})ω is not positive: need q > n + 1 divisors"
            )
        if not d.general_position:
            raise PreconditionError("divisors are not in general position")
        if self.gauge is None:
            object.__setattr__(self, "gauge", q / (q - n - 1))
        if self.gauge <= 0:
            raise ConfigError("the Ψ gauge must be positive")
        object.__setattr__(self, "target", TargetSpace(n))

    @property
    def n(self) -> int:
        return self.divisors.n

    @property
    def q(self) -> int:
        return self.divisors.q

    def utilde(self, j: int, w) -> np.ndarray:
        return self.divisors.u(j, w) - self.divisors.gauge + self.gauge

    def utilde_homogeneous(self, j: int, W) -> np.ndarray:
        return self.divisors.u_homogeneous(j, W) - self.divisors.gauge + self.gauge

    def log_product_homogeneous(self, W) -> np.ndarray:
        """log Π e^{2ũ_j}/ũ_j² at homogeneous points (the ratio Ψ/ωⁿ)."""
        tot = 0.0
        for j in range(self.q):
            ut = self.utilde_homogeneous(j, W)
            tot = tot + 2 * ut - 2 * np.log(ut)
        return tot

    def log_psi(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.log(self.target.omega_density(w)) + self.log_product_homogeneous(homogeneous(w, self.n))

    def psi(self, w) -> np.ndarray:
        """Lebesgue density of Ψ in the affine chart (+∞ on the divisors)."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_psi(w))

    def ric_matrix(self, w) -> np.ndarray:
        """Coefficient matrix of -RicΨ = dd^c log Ψ (analytic, off the divisors)."""
        w = np.asarray(w, dtype=complex)
        Om = self.target.omega_matrix(w)
        scal = (self.q - self.n - 1) * np.ones(np.shape(w) if self.n == 1 else np.shape(w)[:-1])
        extra = 0.0
        for j in range(self.q):
            ut = self.utilde(j, w)
            g = self.divisors.du(j, w)
            scal = scal - 1.0 / ut
            extra = extra + 2 * (g[..., :, None] * np.conj(g)[..., None, :]) / (ut**2)[..., None, None]
        return Om * scal[..., None, None] + extra

    def ric_eigenvalues(self, w) -> np.ndarray:
        """Eigenvalues of -RicΨ relative to ω."""
        H = self.ric_matrix(w)
        Om = self.target.omega_matrix(w)
        L = np.linalg.cholesky(Om)
        Li = np.linalg.inv(L)
        S = Li @ H @ np.conj(np.swapaxes(Li, -1, -2))
        return np.linalg.eigvalsh(S)

    def relative_curvature_homogeneous(self, W) -> np.ndarray:
        """λ = -RicΨ/ω on ℙ¹ at homogeneous points (chart free).

        Uses (1+|w|²)²|∂u_a|² = (e^{2u_a} - 1)/4 for the chordal potential.
        """
        if self.n != 1:
            raise DomainError("the scalar curvature ratio is defined on ℙ¹")
        lam = float(self.q - 2)
        for j in range(self.q):
            ut = self.utilde_homogeneous(j, W)
            u0 = ut - self.gauge
            with np.errstate(over="ignore"):
                lam = lam - 1.0 / ut + np.expm1(2.0 * u0) / (2.0 * ut**2)
        return lam

    def ric_fd(self, w, h: float = 1e-4) -> np.ndarray:
        """∂∂̄ log ψ by finite differences (ℙ¹ only), the oracle for ``ric_matrix``."""
        if self.n != 1:
            raise DomainError("finite-difference curvature implemented on ℙ¹")
        return complex_hessian_fd(self.log_psi, np.asarray(w, dtype=complex), h).real

    def cone_ratio(self, w) -> np.ndarray:
        """(-RicΨ)ⁿ / Ψ, with (-RicΨ)ⁿ of density n! det H / πⁿ."""
        H = self.ric_matrix(w)
        det = np.real(np.linalg.det(H))
        top = math.factorial(self.n) * det / math.pi**self.n
        return top / self.psi(w)

    def cone_check(self, grid: np.ndarray | None = None) -> tuple[float, float]:
        """(min eigenvalue of -RicΨ relative to ω, fitted c = min (-RicΨ)ⁿ/Ψ) on a grid."""
        if grid is None:
            if self.n != 1:
                raise DomainError("default grid is on ℙ¹")
            grid = sphere_grid(64)
        ev = self.ric_eigenvalues(grid)
        c = float(np.min(self.cone_ratio(grid)))
        return float(np.min(ev)), c

    def oppo_ratio(self, w) -> np.ndarray:
        """Π e^{2ũ}/ũ² divided by the relative eigenvalue λ of -RicΨ (ℙ¹).

        On ℙ¹ the pointwise bound ξ ≤ C·(-f*RicΨ∧α^{m-1}/α^m) reduces to
        c · ratio ≤ 1 with C = 1/c.
        """
        lam = self.ric_eigenvalues(w)[..., 0]
        lp = self.log_product_homogeneous(homogeneous(w, 1))
        with np.errstate(over="ignore"):
            return np.exp(lp) / lam

    # -- ∫(-RicΨ) on ℙ¹ --------------------------------------------------
    def _chart_density(self, j: int, L: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Density of -RicΨ in (L, φ) where the chart coordinate about a_j is ζ = e^{-L+iφ}.

        Finite a_j: w = a_j + ζ. a_j = ∞: w = 1/ζ.
        """
        a = self.divisors.point(j)
        L = np.asarray(L, dtype=float)
        phi = np.asarray(phi, dtype=float)
        g = self.gauge
        out = np.zeros(np.broadcast(L, phi).shape)
        L, phi = np.broadcast_arrays(L, phi)
        far = L > 150.0
        near = ~far
        if np.any(far):
            la = 0.0 if _is_inf(a) else math.log1p(abs(a) ** 2)
            ut = L[far] + la + g
            out[far] = 0.5 / ut**2 / math.pi
        if np.any(near):
            Ln, pn = L[near], phi[near]
            rho = np.exp(-Ln)
            if _is_inf(a):
                w = np.exp(Ln) * np.exp(-1j * pn)
                w2 = np.abs(w) ** 2
                scale = w2  # |dw/dζ|² ρ² = |w|²
                sing_ut = Ln + 0.5 * np.log1p(np.exp(-2 * Ln)) + g
                sing_g = w2 / (2 * (1 + w2))
            else:
                w = a + rho * np.exp(1j * pn)
                w2 = np.abs(w) ** 2
                scale = rho**2
                sing_ut = Ln + 0.5 * np.log1p(w2) + 0.5 * math.log1p(abs(a) ** 2) + g
                sing_g = np.abs(rho * np.conj(w) / (2 * (1 + w2)) - np.exp(-1j * pn) / 2)
            om = 1.0 / (1 + w2) ** 2
            scal = (self.q - 2) - 1.0 / sing_ut
            val = 2 * sing_g**2 / sing_ut**2
            for k in range(self.q):
                if k == j:
                    continue
                ut = self.utilde(k, w)
                gk = self.divisors.du(k, w)[..., 0]
                scal = scal - 1.0 / ut
                val = val + scale * 2 * np.abs(gk) ** 2 / ut**2
            val = val + scale * om * scal
            out[near] = val / math.pi
        return out

    def ric_integral(self, level: int) -> float:
        """∫_{ℙ¹∖D} (-RicΨ) at a refinement level (pole-adapted partition of unity).

        Each divisor point gets a bump of chart radius δ handled in
        double-exponential coordinates L = L₀ e^s; the rest is integrated in
        polar coordinates on a disk of the affine chart.
        """
        if self.n != 1:
            raise DomainError("pole-adapted integral implemented on ℙ¹")
        from .quad import smooth_bump

        pts = [self.divisors.point(j) for j in range(self.q)]
        finite = [p for p in pts if not _is_inf(p)]
        sep = min([abs(p - q) for p, q in itertools.combinations(finite, 2)] or [1.0])
        delta = min(0.5, 0.3 * sep)
        big = max([abs(p) for p in finite] or [0.0]) + 1.0
        delta_inf = 0.3 / big
        radii = [delta_inf if _is_inf(p) else delta for p in pts]

        ns = 16 * 2**level
        nphi = 32 * 2**level
        smax = 12.0 + 6.0 * level
        gq, gw = gauss_legendre(ns)
        phi = 2 * math.pi * (np.arange(nphi) + 0.5) / nphi
        total = 0.0
        for j, d in enumerate(radii):
            L0 = math.log(1.0 / d)
            # s in [0, smax], L = L0 e^s; bump weight χ(e^{-L}/d)
            edges = np.linspace(0.0, smax, 4 * (level + 2) + 1)
            for s0, s1 in zip(edges[:-1], edges[1:]):
                s = s0 + (s1 - s0) * 0.5 * (gq + 1)
                ws = (s1 - s0) * 0.5 * gw
                L = L0 * np.exp(s)
                chi = smooth_bump(np.exp(-L) / d)
                dens = self._chart_density(j, L[:, None], phi[None, :])
                total += float(np.sum((dens * (chi * L * ws)[:, None]).sum(axis=0)) * 2 * math.pi / nphi)

        # remainder on |w| < 2/δ_inf
        R = 2.0 / delta_inf
        edges = np.linspace(0.0, R, int(64 * R) * 2**level + 1)
        g8, w8 = gauss_legendre(8)
        rr = (edges[:-1, None] + 0.5 * np.diff(edges)[:, None] * (g8 + 1)).ravel()
        wr = (0.5 * np.diff(edges)[:, None] * w8).ravel()
        W = rr[:, None] * np.exp(1j * phi[None, :])
        rest = np.ones(W.shape)
        for p, d in zip(pts, radii):
            if _is_inf(p):
                with np.errstate(divide="ignore"):
                    rest = rest - smooth_bump(1.0 / (np.abs(W) * d))
            else:
                rest = rest - smooth_bump(np.abs(W - p) / d)
        mask = rest > 1e-15
        Hd = np.zeros(W.shape)
        Hd[mask] = self.ric_matrix(W[mask])[..., 0, 0].real / math.pi
        total += float(np.sum(np.sum(Hd * rest, axis=1) * 2 * math.pi / nphi * rr * wr))
        return total

    def ric_integral_sequence(self, levels: int = 4) -> list[float]:
        return [self.ric_integral(k) for k in range(levels)]
