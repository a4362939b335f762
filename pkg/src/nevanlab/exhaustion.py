"""Exhaustions Δ(r) by Green-function (non-parabolic) or heat-kernel (parabolic) weights.

Non-parabolic:  g_r(o,x) = G(o,x) - A ∫_r^∞ t dt/V(t),     Δ(r) = {g_r > 0}.
Parabolic:      h_r(o,x) = G_r(o,x) - c1 ∫_0^r e^{-r²/(4(1-ε)t)} dt / V(√t),
                with G_r(o,x) = 2 ∫_0^r p(t,o,x) dt.
Dirichlet:      the Green function of Δ/2 on the Euclidean ball (reference only).

The boundary measures are dπ_r = ½ ∂g_r/∂ν dσ_r and dΘ_r = ½ ∂h_r/∂ν dσ_r.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, DomainError, PoleError, UnsupportedOperation
from .models import (
    LiYauConstants,
    ModelManifold,
    fit_green_constants,
    fit_li_yau,
    green_integral,
    pinned_constants,
    sample_unit_vectors,
)


class Mode(str, Enum):
    NON_PARABOLIC = "non-parabolic"
    PARABOLIC = "parabolic"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        t = text.strip().lower().replace("_", "-")
        for m in cls:
            if m.value == t:
                return m
        raise ConfigError(f"unknown mode {text!r}")


def resolve_mode(M: ModelManifold, requested: str | Mode = "auto") -> Mode:
    """Resolve ``auto`` by the volume criterion and reject inconsistent requests."""
    if isinstance(requested, str) and requested.strip().lower() == "auto":
        return Mode.PARABOLIC if M.parabolic else Mode.NON_PARABOLIC
    mode = requested if isinstance(requested, Mode) else Mode.parse(requested)
    if mode is Mode.NON_PARABOLIC and M.parabolic:
        raise ConfigError(
            f"{M.name} is parabolic (∫^∞ t dt/V(t) diverges by the volume criterion): "
            "non-parabolic mode is unavailable"
        )
    if mode is Mode.PARABOLIC and not M.parabolic:
        raise ConfigError(
            f"{M.name} is non-parabolic (∫^∞ t dt/V(t) converges by the volume criterion): "
            "use non-parabolic mode"
        )
    if mode is Mode.DIRICHLET and not M.is_euclidean:
        raise ConfigError("the Dirichlet reference weight is only available on ℂᵐ")
    return mode


def default_constants(M: ModelManifold, mode: Mode, epsilon: float | None = None) -> LiYauConstants:
    """Pinned constants on ℂᵐ, fitted ones elsewhere (A defaults to the fitted lower Green constant)."""
    pinned = pinned_constants(M)
    if pinned is not None and (epsilon is None or epsilon == 0.0):
        return pinned
    eps = 0.1 if epsilon is None else float(epsilon)
    if not M.kernel_supported:
        raise UnsupportedOperation(f"no heat kernel on {M.name}: constants cannot be fitted")
    ly = fit_li_yau(M, eps)
    if mode is Mode.NON_PARABOLIC:
        A, B = fit_green_constants(M)
        return LiYauConstants(ly.epsilon, ly.c1, ly.c2, A, B)
    return ly


@dataclass
class BoundaryMesh:
    """Boundary points found by radial root-finding along a direction grid."""

    r: float
    directions: np.ndarray
    lam: np.ndarray
    points: np.ndarray
    rho: np.ndarray
    found: np.ndarray
    residual: np.ndarray

    @property
    def flagged(self) -> int:
        return int(np.sum(~self.found))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "direction", "boundary_rho", "weight_residual", "found"])
        for i in range(len(self.lam)):
            w.writerow([repr(float(self.r)), i, repr(float(self.rho[i])), repr(float(self.residual[i])), int(self.found[i])])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class ExhaustionWeight:
    """The weight w_r(o, ·) of Δ(r) together with its threshold and boundary tools."""

    manifold: ModelManifold
    mode: Mode
    r: float
    constants: LiYauConstants | None = None
    bisect_rtol: float = 1e-14

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise DomainError("exhaustion parameter r must be positive and finite")
        object.__setattr__(self, "mode", resolve_mode(self.manifold, self.mode))
        if self.mode is Mode.DIRICHLET:
            return
        if self.constants is None:
            object.__setattr__(self, "constants", default_constants(self.manifold, self.mode))
        if self.mode is Mode.NON_PARABOLIC and self.constants.A is None:
            raise ConfigError("non-parabolic mode needs the Green constant A")

    # -- construction helpers ---------------------------------------------
    def at(self, r: float) -> "ExhaustionWeight":
        """Same manifold, mode and constants at another parameter."""
        return ExhaustionWeight(self.manifold, self.mode, float(r), self.constants, self.bisect_rtol)

    @property
    def is_ball(self) -> bool:
        """True when Δ(r) is provably the geodesic ball B(r)."""
        M = self.manifold
        if not M.is_euclidean:
            return False
        if self.mode is Mode.DIRICHLET:
            return True
        m = M.factors[0].m
        c = self.constants
        if self.mode is Mode.PARABOLIC:
            return m == 1 and c.epsilon == 0.0 and abs(c.c1 - 0.5) < 1e-15
        return abs(c.A - 1.0 / m) < 1e-15

    # -- values ------------------------------------------------------------
    @cached_property
    def threshold(self) -> float:
        M, r = self.manifold, self.r
        if self.mode is Mode.DIRICHLET:
            return 0.0
        c = self.constants
        if self.mode is Mode.NON_PARABOLIC:
            return float(c.A * green_integral(M, r))
        a = r * r / (4.0 * (1.0 - c.epsilon))
        if M.is_euclidean and M.factors[0].m == 1:
            return float(c.c1 / math.pi * special.exp1(a / r))

        def f(u):
            t = math.exp(u)
            return math.exp(-a / t) / float(M.volume(math.sqrt(t))) * t

        lo = math.log(a / 740.0)
        val, _ = integrate.quad(f, lo, math.log(r), epsabs=0.0, epsrel=1e-12, limit=200)
        return float(c.c1 * val)

    def global_value(self, x) -> np.ndarray:
        """G(o,x) or G_r(o,x) (or the Dirichlet Green function)."""
        M = self.manifold
        if self.mode is Mode.NON_PARABOLIC:
            x = np.asarray(x, dtype=float)
            d = M.distance(x)
            out = np.full(d.shape, np.inf)
            ok = d > 0
            if np.any(ok):
                out[ok] = M.green(x[ok])
            return out
        if self.mode is Mode.PARABOLIC:
            return M.truncated_green(self.r, x)
        m = M.factors[0].m
        d = M.distance(x)
        with np.errstate(divide="ignore"):
            if m == 1:
                return np.log(self.r / d) / math.pi
            return math.gamma(m - 1) / (2.0 * math.pi**m) * (d ** (2 - 2 * m) - self.r ** (2 - 2 * m))

    def value(self, x) -> np.ndarray:
        """w_r(o, x) without domain checks (+∞ at o, negative outside Δ(r))."""
        return self.global_value(x) - self.threshold

    def contains(self, x) -> np.ndarray:
        return self.value(x) > 0

    def weight(self, x) -> np.ndarray:
        """w_r(o, x) for x in the closure of Δ(r) with x ≠ o."""
        x = np.asarray(x, dtype=float)
        d = self.manifold.distance(x)
        if np.any(d == 0):
            raise PoleError("the weight has a pole at the base point")
        v = self.value(x)
        scale = max(abs(self.threshold), 1e-300)
        if np.any(v < -1e-10 * scale):
            raise DomainError("point outside the closure of Δ(r)")
        return np.maximum(v, 0.0)

    def finite_part_at_origin(self) -> float:
        """lim_{x→o} [w_r(o,x) - (1/π) log(1/ρ(x))] on complex curves."""
        M = self.manifold
        if M.complex_dim != 1:
            raise UnsupportedOperation("the base-point finite part is defined for complex dimension 1")
        if M.is_euclidean:
            if self.mode is Mode.DIRICHLET:
                return math.log(self.r) / math.pi
            if self.mode is Mode.PARABOLIC:
                return (math.log(4.0 * self.r) - np.euler_gamma) / (2.0 * math.pi) - self.threshold
        eps = 1e-5
        u = sample_unit_vectors(M.real_dim, 8)
        x = M.origin() + eps * u
        return float(np.mean(self.value(x)) - math.log(1.0 / eps) / math.pi)

    # -- rays ---------------------------------------------------------------
    def _points(self, directions, lam):
        o = self.manifold.origin()
        return o + lam[..., None] * directions

    def box_exit(self, directions) -> np.ndarray:
        hw = self.manifold.half_widths()
        with np.errstate(divide="ignore"):
            lim = np.where(np.abs(directions) > 0, hw / np.abs(directions), np.inf)
        return np.min(lim, axis=-1)

    def _search_cap(self) -> float:
        c = self.constants
        beta = 1.0 if c is None else c.beta
        return 10.0 * beta * self.r + 10.0

    def _march_step(self) -> float:
        hw = self.manifold.half_widths()
        per = hw[np.isfinite(hw)]
        s = self.r if per.size == 0 else min(self.r, 2.0 * float(per.min()))
        # h_r varies on the heat scale √r
        scale = math.sqrt(self.r) / 8.0 if self.mode is Mode.PARABOLIC else 0.0
        return max(s / 16.0, scale)

    def ray_roots(self, directions: np.ndarray, clip: bool) -> tuple[np.ndarray, np.ndarray]:
        """First λ > 0 with w_r(o + λu) = 0 for each direction u.

        With ``clip`` the search stops at the exit of the fundamental box and
        the returned extent is min(root, exit); ``found`` marks true roots.
        Without ``clip`` points are wrapped (universal-cover rays).
        """
        M = self.manifold
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        k = u.shape[0]
        cap = np.full(k, self._search_cap())
        if clip:
            cap = np.minimum(cap, self.box_exit(u))
        lo = np.zeros(k)
        hi = np.full(k, np.nan)
        val = lambda lam, idx: self.value(M.wrap(self._points(u[idx], lam)))
        if self.is_ball or (M.is_euclidean and self.mode is not Mode.PARABOLIC):
            # monotone in λ: bracket by doubling
            hi_try = np.minimum(np.full(k, self.r), cap)
            for _ in range(80):
                todo = np.isnan(hi)
                if not np.any(todo):
                    break
                idx = np.nonzero(todo)[0]
                v = val(hi_try[idx], idx)
                neg = v <= 0
                hi[idx[neg]] = hi_try[idx[neg]]
                lo[idx[~neg]] = hi_try[idx[~neg]]
                stop = ~neg & (hi_try[idx] >= cap[idx])
                hi_try[idx] = np.minimum(hi_try[idx] * 2.0, cap[idx])
                if np.any(stop):
                    lo[idx[stop]] = cap[idx[stop]]
                    hi[idx[stop]] = np.inf
        else:
            step = self._march_step()
            nmax = int(np.ceil(np.max(cap) / step)) + 1
            prev = np.zeros(k)
            active = np.ones(k, dtype=bool)
            for j in range(1, nmax + 1):
                idx = np.nonzero(active)[0]
                if idx.size == 0:
                    break
                lam = np.minimum(j * step, cap[idx])
                v = val(lam, idx)
                neg = v <= 0
                hi[idx[neg]] = lam[neg]
                lo[idx[neg]] = prev[idx[neg]]
                ended = ~neg & (lam >= cap[idx])
                lo[idx[ended]] = cap[idx[ended]]
                hi[idx[ended]] = np.inf
                prev[idx] = lam
                active[idx[neg | ended]] = False
            hi[active] = np.inf
            lo[active] = cap[active]
        found = np.isfinite(hi)
        idx = np.nonzero(found)[0]
        lam = lo.copy()
        if idx.size:
            lam[idx] = self._refine(val, idx, lo[idx].copy(), hi[idx].copy())
        return lam, found

    def _refine(self, val, idx, a, b) -> np.ndarray:
        """Bracketed root refinement (Illinois; bisection while an end value is infinite)."""
        tol = self.bisect_rtol * max(1.0, self.r)
        fa, fb = val(a, idx), val(b, idx)
        exact = fb == 0
        a = np.where(exact, b, a)
        side = np.zeros(a.shape, dtype=int)
        c = np.full(a.shape, np.nan)
        for _ in range(200):
            if np.max(b - a) <= tol:
                return 0.5 * (a + b)
            c_old = c
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                c = b - fb * (b - a) / (fb - fa)
            c = np.where(np.isfinite(c) & (c > a) & (c < b), c, 0.5 * (a + b))
            fc = val(c, idx)
            pos = fc > 0
            # Illinois: halve the retained end's value after two same-side steps
            fb = np.where(pos & (side == 1), 0.5 * fb, fb)
            fa = np.where(~pos & (side == -1), 0.5 * fa, fa)
            a, fa = np.where(pos, c, a), np.where(pos, fc, fa)
            b, fb = np.where(pos, b, c), np.where(pos, fb, fc)
            side = np.where(pos, 1, -1)
            if np.all((np.abs(c - c_old) <= tol) | (fc == 0) | (b - a <= tol)):
                return np.where(b - a <= tol, 0.5 * (a + b), c)
        return 0.5 * (a + b)

    def boundary(self, n_dir: int = 256, directions: np.ndarray | None = None) -> BoundaryMesh:
        """Extract ∂Δ(r) along a quasi-uniform direction grid (wrapped rays)."""
        M = self.manifold
        u = sample_unit_vectors(M.real_dim, n_dir) if directions is None else np.atleast_2d(directions)
        lam, found = self.ray_roots(u, clip=False)
        pts = M.wrap(self._points(u, lam))
        rho = M.distance(pts)
        res = np.where(found, self.value(pts), np.nan)
        return BoundaryMesh(self.r, u, lam, pts, rho, found, res)

    # -- boundary measure ---------------------------------------------------
    def boundary_density_constant(self) -> float | None:
        """(A/2) r / V(r) when the harmonic measure has constant density (exact A)."""
        if self.mode is Mode.NON_PARABOLIC and self.is_ball:
            return 0.5 * self.constants.A * self.r / float(self.manifold.volume(self.r))
        if self.mode is Mode.PARABOLIC and self.is_ball:
            # ½ ∂_ρ E1(ρ²/4r)/(2π) at ρ = r
            return math.exp(-self.r / 4.0) / (2.0 * math.pi * self.r)
        if self.mode is Mode.DIRICHLET and self.manifold.factors[0].m == 1:
            return 1.0 / (2.0 * math.pi * self.r)
        return None

    def normal_derivatives(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(|∇w|, -∂_λ w) at boundary points by one-sided 4-point stencils.

        The gradient direction comes from central differences; both derivatives
        are then taken along inward directions with step 1e-4·r.
        """
        M = self.manifold
        h = 1e-4 * self.r
        pts = np.atleast_2d(points)
        u = np.atleast_2d(directions)
        D = M.real_dim
        grad = np.zeros(pts.shape)
        hc = 1e-3 * h
        for i in range(D):
            e = np.zeros(D)
            e[i] = hc
            grad[:, i] = (self.value(M.wrap(pts + e)) - self.value(M.wrap(pts - e))) / (2 * hc)
        nrm = np.linalg.norm(grad, axis=-1, keepdims=True)
        nu = -grad / np.where(nrm > 0, nrm, 1.0)

        def one_sided(direction):
            f = [self.value(M.wrap(pts + j * h * direction)) for j in range(4)]
            return (-11 * f[0] + 18 * f[1] - 9 * f[2] + 2 * f[3]) / (6 * h)

        return one_sided(nu), one_sided(-u)

    def boundary_density(self, points: np.ndarray, directions: np.ndarray | None = None) -> np.ndarray:
        """Density of dπ_r or dΘ_r with respect to dσ_r at boundary points."""
        pts = np.atleast_2d(points)
        vals = self.value(pts)
        scale = max(abs(self.threshold), 1e-300)
        if np.any(np.abs(vals) > 1e-8 * max(scale, 1.0)):
            raise DomainError("point not on ∂Δ(r) (weight too large)")
        const = self.boundary_density_constant()
        if const is not None:
            return np.full(pts.shape[0], const)
        if directions is None:
            o = self.manifold.origin()
            directions = (pts - o) / np.linalg.norm(pts - o, axis=-1, keepdims=True)
        grad, _ = self.normal_derivatives(pts, directions)
        return 0.5 * grad


def boundary_gradient_norm(w: ExhaustionWeight, t: float) -> float:
    """‖∇g_r‖ on ∂Δ(t), equal to A t / V(t)."""
    if w.mode is not Mode.NON_PARABOLIC:
        raise UnsupportedOperation("the gradient law is stated for the non-parabolic weight only")
    if not (0 < t <= w.r):
        raise DomainError("need 0 < t <= r")
    return float(w.constants.A * t / float(w.manifold.volume(t)))


def gradient_norm_fd(w: ExhaustionWeight, points: np.ndarray, h: float | None = None) -> np.ndarray:
    """Central finite-difference ‖∇w_r‖ at points."""
    M = w.manifold
    pts = np.atleast_2d(points)
    h = 1e-5 * w.r if h is None else h
    g = np.zeros(pts.shape)
    for i in range(M.real_dim):
        e = np.zeros(M.real_dim)
        e[i] = h
        g[:, i] = (w.value(pts + e) - w.value(pts - e)) / (2 * h)
    return np.linalg.norm(g, axis=-1)


# ---------------------------------------------------------------------------
# identities and reports built on quadrature


def green_dynkin_residual(
    w: ExhaustionWeight,
    phi: Callable[[np.ndarray], np.ndarray],
    laplacian_phi: Callable[[np.ndarray], np.ndarray],
    spec=None,
) -> dict:
    """Residual of the Green-Dynkin identity for a test function φ.

    non-parabolic: ∫ φ dπ_r - φ(o) - ½∫ g_r Δφ dv
    parabolic:     ∫ φ dΘ_r - φ(o) - ½∫ h_r Δφ dv + ∫ p(r,o,·) φ dv
    """
    from .quad import QuadratureSpec, integrate_boundary, integrate_domain

    spec = spec or QuadratureSpec()
    M = w.manifold
    phi_o = float(np.asarray(phi(M.origin()[None, :]))[0])
    if not math.isfinite(phi_o):
        raise DomainError("test function is singular at the base point")
    bnd = integrate_boundary(w, phi, spec)
    inner = integrate_domain(w, lambda x: w.value(x) * laplacian_phi(x), spec)
    res = bnd.value - phi_o - 0.5 * inner.value
    terms = {"boundary": bnd.value, "phi_o": phi_o, "inner": 0.5 * inner.value}
    if w.mode is Mode.PARABOLIC:
        heat = integrate_domain(w, lambda x: M.heat_kernel(w.r, x) * phi(x), spec)
        res += heat.value
        terms["heat"] = heat.value
    terms["residual"] = abs(res)
    terms["error"] = bnd.error + 0.5 * inner.error
    return terms


def calculus_factor(w: ExhaustionWeight, delta: float) -> float:
    """F(r, δ) of the parabolic calculus lemma."""
    M, r, c = w.manifold, w.r, w.constants
    eps = c.epsilon

    def num(u):
        t = math.exp(u)
        return math.exp(-r * r / (4 * (1 + eps) * t)) / math.sqrt(t) / float(M.volume(math.sqrt(t))) * t

    def den(u):
        t = math.exp(u)
        return math.exp(-r * r / (4 * (1 - eps) * t)) / float(M.volume(math.sqrt(t)))

    lo = math.log(r * r / (4 * 740.0))
    a, _ = integrate.quad(num, lo, math.log(r), epsrel=1e-11, epsabs=0.0, limit=200)
    b, _ = integrate.quad(den, lo, math.log(r), epsrel=1e-11, epsabs=0.0, limit=200)
    lognum = math.log(c.c2 * (1 - eps) / c.c1) + math.log(a)
    logden = (1 + delta) * math.log(r * b)
    return math.exp(lognum - logden)


@dataclass
class CalculusLemmaReport:
    r: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    satisfied: np.ndarray
    violating_measure: float
    growth_constant: float | None

    @property
    def fraction(self) -> float:
        return float(np.mean(self.satisfied))


def calculus_lemma_report(
    w: ExhaustionWeight,
    k: Callable[[np.ndarray], np.ndarray],
    r_grid: np.ndarray,
    delta: float,
    spec=None,
) -> CalculusLemmaReport:
    """Evaluate both sides of the calculus lemma over an r-grid.

    LHS = ∫_{∂Δ(r)} k dμ_r; RHS = ½(V(r)/r)^δ (∫ w k)^{(1+δ)²} (non-parabolic)
    or F(r,δ) (∫ w k)^{(1+δ)²} (parabolic). The violating set is measured by
    the grid cell widths of failing points.
    """
    from .quad import QuadratureSpec, integrate_boundary, integrate_domain

    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0:
        raise DomainError("empty r-grid")
    spec = spec or QuadratureSpec(rtol=1e-7)
    lhs, rhs, logF = [], [], []
    for r in r_grid:
        wr = w.at(r)
        L = integrate_boundary(wr, k, spec).value
        I = integrate_domain(wr, lambda x: wr.value(x) * k(x), spec).value
        I = max(I, 0.0)
        if wr.mode is Mode.NON_PARABOLIC:
            R = 0.5 * (float(wr.manifold.volume(r)) / r) ** delta * I ** ((1 + delta) ** 2)
        else:
            F = calculus_factor(wr, delta)
            logF.append(max(math.log(F), 0.0) / r)
            R = F * I ** ((1 + delta) ** 2)
        lhs.append(L)
        rhs.append(R)
    lhs, rhs = np.array(lhs), np.array(rhs)
    ok = lhs <= rhs * (1 + 1e-9) + 1e-300
    widths = np.gradient(r_grid) if r_grid.size > 1 else np.ones(1)
    growth = float(max(logF)) if logF else None
    return CalculusLemmaReport(r_grid, lhs, rhs, ok, float(np.sum(widths[~ok])), growth)


@dataclass
class GeometryCheck:
    r: np.ndarray
    rho_min: np.ndarray
    rho_max: np.ndarray
    flagged: np.ndarray
    beta: float
    holds: np.ndarray
    threshold: float | None


def parabolic_geometry_check(w: ExhaustionWeight, r, n_dir: int = 256) -> GeometryCheck:
    """Boundary radius range of Δ(r) compared with [r, βr] for each r.

    The reported threshold is the smallest grid r from which the bounds hold
    at every larger grid point.
    """
    if w.mode is not Mode.PARABOLIC:
        raise UnsupportedOperation("parabolic mode required")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    beta = w.constants.beta
    mins, maxs, flags = [], [], []
    for ri in r:
        b = w.at(ri).boundary(n_dir)
        rho = b.rho[b.found]
        mins.append(float(rho.min()) if rho.size else np.nan)
        maxs.append(float(rho.max()) if rho.size else np.nan)
        flags.append(b.flagged)
    mins, maxs = np.array(mins), np.array(maxs)
    tol = 1e-9 * r
    holds = (mins >= r - tol) & (maxs <= beta * r + tol)
    thr = None
    for i in range(len(r)):
        if np.all(holds[i:]):
            thr = float(r[i])
            break
    return GeometryCheck(r, mins, maxs, np.array(flags), beta, holds, thr)


@dataclass
class MeiReport:
    r: np.ndarray
    min_margin: np.ndarray
    holds: np.ndarray
    threshold: float | None


def mei_lower_bound_check(w: ExhaustionWeight, r, n_samples: int = 100, seed: int = 0) -> MeiReport:
    """h_{θr}(o,x) ≥ (c1/2)(1 - e^{-3/(16(1-ε))}) (r/V(√r)) e^{-θ² r/(8(1-ε))} on Δ(r).

    Samples are drawn uniformly in direction and in chart radius up to the
    boundary along each ray. The margin is log(LHS) - log(RHS).
    """
    if w.mode is not Mode.PARABOLIC:
        raise UnsupportedOperation("parabolic mode required")
    M = w.manifold
    c = w.constants
    eps, theta = c.epsilon, c.theta
    r = np.atleast_1d(np.asarray(r, dtype=float))
    rng = np.random.Generator(np.random.Philox(key=[seed, 7]))
    margins = []
    for ri in r:
        wr = w.at(ri)
        u = rng.normal(size=(n_samples, M.real_dim))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        lam, _ = wr.ray_roots(u, clip=True)
        x = M.origin() + (rng.uniform(0.0, 1.0, n_samples) * lam)[:, None] * u
        big = w.at(theta * ri)
        lhs = big.value(x)
        rhs = 0.5 * c.c1 * (1 - math.exp(-3 / (16 * (1 - eps)))) * ri / float(M.volume(math.sqrt(ri)))
        rhs *= math.exp(-theta**2 * ri / (8 * (1 - eps)))
        with np.errstate(divide="ignore"):
            margins.append(float(np.min(np.log(np.maximum(lhs, 1e-300)) - math.log(rhs))))
    margins = np.array(margins)
    holds = margins >= 0
    thr = None
    for i in range(len(r)):
        if np.all(holds[i:]):
            thr = float(r[i])
            break
    return MeiReport(r, margins, holds, thr)
