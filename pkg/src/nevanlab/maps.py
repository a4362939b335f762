"""Holomorphic test maps f: M → ℙⁿ in homogeneous form.

A map is evaluated at chart points x of a flat model through the complex
coordinates Z = M.complex_coords(x). It returns homogeneous values W(Z) and
holomorphic derivatives ∂W/∂Z_i, so poles cause no overflow. Energy density:

    e = 2 Σ_i (‖W_i‖²‖W‖² - |⟨W_i, W⟩|²) / ‖W‖⁴ = Δ(u_D∘f)  off f*D,

where Δ is the Laplacian of the flat metric |dZ|².
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, UnsupportedOperation
from .models import ModelManifold
from .target import INF, _is_inf, parse_point

MULT_TOL = 1e-8


@dataclass(frozen=True)
class Preimage:
    """A point (complex curves) or a coordinate slice {Z_coord = value} (m >= 2)."""

    point: complex
    multiplicity: int
    coord: int = 0
    kind: str = "point"

    def chart(self, M: ModelManifold) -> np.ndarray:
        x = M.origin().copy()
        x[2 * self.coord] = self.point.real
        x[2 * self.coord + 1] = self.point.imag
        return x


def _hdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * np.conj(b), axis=-1)


class MeromorphicMap:
    """Base class; subclasses provide ``values`` and ``derivatives`` on complex coordinates."""

    family = "map"
    n = 1

    def __init__(self, source: ModelManifold):
        if not source.is_flat:
            raise UnsupportedOperation("maps are supported on flat models")
        self.source = source
        self.m = source.complex_dim

    # -- evaluation --------------------------------------------------------
    def values(self, Z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, Z: np.ndarray) -> np.ndarray:
        """∂W/∂Z_i with shape (..., m, n+1)."""
        raise NotImplementedError

    def coords(self, x) -> np.ndarray:
        return self.source.complex_coords(np.asarray(x, dtype=float))

    def homogeneous(self, x) -> np.ndarray:
        return self.values(self.coords(x))

    def __call__(self, x) -> np.ndarray:
        """Affine values (ℙ¹: W₁/W₀ with ∞ at poles; ℙⁿ: (W_k/W₀))."""
        W = self.homogeneous(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = W[..., 1:] / W[..., :1]
        out = np.where(np.abs(W[..., :1]) == 0, INF, out)
        return out[..., 0] if self.n == 1 else out

    def pullback_matrix(self, x) -> np.ndarray:
        """P_{ij̄} with f*ω = (√-1/2π) Σ P_{ij̄} dZ_i∧dZ̄_j."""
        Z = self.coords(x)
        W = self.values(Z)
        D = self.derivatives(Z)
        n2 = np.real(_hdot(W, W))
        if W.shape[-1] == 2:
            # Lagrange identity: no cancellation
            v = W[..., None, 0] * D[..., 1] - W[..., None, 1] * D[..., 0]
            return v[..., :, None] * np.conj(v)[..., None, :] / (n2**2)[..., None, None]
        inner = np.einsum("...ik,...jk->...ij", D, np.conj(D))
        proj = np.einsum("...ik,...k->...i", D, np.conj(W))
        P = inner / n2[..., None, None] - proj[..., :, None] * np.conj(proj)[..., None, :] / (n2**2)[..., None, None]
        return P

    def energy_density(self, x) -> np.ndarray:
        """e_{f,ω} = 2 tr P ≥ 0 (Laplacian of u_D∘f off the preimages)."""
        P = self.pullback_matrix(x)
        e = 2.0 * np.real(np.trace(P, axis1=-2, axis2=-1))
        return np.maximum(e, 0.0)

    def u_pullback(self, divisors, j: int, x) -> np.ndarray:
        """u_j∘f at chart points."""
        return divisors.u_homogeneous(j, self.homogeneous(x))

    def xi(self, svf, x) -> np.ndarray:
        """ξ with f*Ψ ∧ α^{m-n} = ξ αᵐ, α = dd^c‖Z‖²."""
        n, m = svf.n, self.m
        if n > m:
            raise DomainError("ξ needs n <= m")
        P = self.pullback_matrix(x)
        ev = np.clip(np.linalg.eigvalsh(P), 0.0, None)
        sym = _elementary_symmetric(ev, n)
        coef = math.factorial(m - n) * math.factorial(n) / math.factorial(m)
        lp = svf.log_product_homogeneous(self.homogeneous(x))
        with np.errstate(over="ignore"):
            return coef * sym * np.exp(lp)

    def ric_pullback(self, svf, x) -> np.ndarray:
        """(-f*RicΨ ∧ α^{m-1}) / αᵐ on ℙ¹ targets: λ(f)·tr P / m."""
        if svf.n != 1:
            raise UnsupportedOperation("curvature pullback implemented for ℙ¹ targets")
        lam = svf.relative_curvature_homogeneous(self.homogeneous(x))
        P = self.pullback_matrix(x)
        return lam * np.real(np.trace(P, axis1=-2, axis2=-1)) / self.m

    def oppo_check(self, svf, x, c: float) -> np.ndarray:
        """ξ^{1/n} - C·(-f*RicΨ∧α^{m-1})/αᵐ with C = c^{-1/n}(m-n)!^{1/n}/(m-1)! (≤ 0 expected)."""
        n, m = svf.n, self.m
        C = c ** (-1.0 / n) * math.factorial(m - n) ** (1.0 / n) / math.factorial(m - 1)
        return self.xi(svf, x) ** (1.0 / n) - C * self.ric_pullback(svf, x)

    # -- structure ---------------------------------------------------------
    def nondegeneracy_probe(self, samples: int = 64, seed: int = 0) -> tuple[bool, np.ndarray | None]:
        """(True, witness) if the differential has rank n at a sampled point."""
        rng = np.random.Generator(np.random.Philox(key=[int(seed), 7]))
        x = self.source.wrap(rng.uniform(-2.0, 2.0, size=(samples, self.source.real_dim)))
        P = self.pullback_matrix(x)
        ev = np.linalg.eigvalsh(P)
        scale = np.maximum(np.max(np.abs(ev), axis=-1), 1e-300)
        rank = np.sum(ev > 1e-10 * scale[..., None], axis=-1) * (np.max(ev, axis=-1) > 1e-14)
        ok = np.nonzero(rank >= self.n)[0]
        if ok.size == 0:
            return False, None
        return True, x[ok[0]]

    def depends_on(self) -> tuple[int, ...] | None:
        """Complex coordinates the map depends on (None when unknown)."""
        return None

    def preimages(self, a, domain) -> list[Preimage]:
        raise UnsupportedOperation(f"no preimage solver for the {self.family} family")

    def multiplicity_at_origin(self, a) -> int:
        """Order of vanishing of f - a at the base point (0 if f(o) ≠ a)."""
        return 0

    def describe(self) -> dict[str, str]:
        return {"family": self.family}


def _elementary_symmetric(ev: np.ndarray, k: int) -> np.ndarray:
    e = [np.ones(ev.shape[:-1])] + [np.zeros(ev.shape[:-1]) for _ in range(k)]
    for i in range(ev.shape[-1]):
        for j in range(k, 0, -1):
            e[j] = e[j] + ev[..., i] * e[j - 1]
    return e[k]


def _target_covector(a) -> tuple[complex, complex]:
    """(A0, A1) with ⟨W, A⟩ = A0 W0 + A1 W1 vanishing exactly at f = a."""
    a = parse_point(a) if isinstance(a, str) else complex(a)
    return (1.0, 0.0) if _is_inf(a) else (-a, 1.0)


def _sort_key(p: Preimage):
    return (round(abs(p.point), 12), round(cmath.phase(p.point), 12))


def _source_is_plane(M: ModelManifold) -> bool:
    return M.is_euclidean


def _filter_inside(pts: list[Preimage], domain) -> list[Preimage]:
    """Keep preimages inside Δ(r); a preimage on ∂Δ(r) is an error."""
    M = domain.manifold
    keep = []
    for p in pts:
        if p.kind == "slice":
            keep.append(p)
            continue
        x = p.chart(M)
        if np.linalg.norm(x - M.origin()) == 0:
            keep.append(p)
            continue
        v = float(domain.value(x[None, :])[0])
        scale = max(abs(domain.threshold), 1.0)
        if abs(v) < 1e-12 * scale:
            raise DomainError(f"preimage {p.point} lies on ∂Δ(r); perturb r")
        if v > 0:
            keep.append(p)
    return sorted(keep, key=_sort_key)


def _slice_filter(pts: list[Preimage], domain) -> list[Preimage]:
    M = domain.manifold
    out = []
    for p in pts:
        x = p.chart(M)
        d = x - M.origin()
        lam = np.linalg.norm(d)
        if lam == 0:
            out.append(p)
            continue
        R, found = domain.ray_roots((d / lam)[None, :], clip=True)
        if found[0] and abs(float(R[0]) - lam) <= 1e-9 * max(1.0, lam):
            raise DomainError("a divisor slice is tangent to ∂Δ(r); perturb r")
        if domain.contains(x[None, :])[0]:
            out.append(p)
    return sorted(out, key=_sort_key)


class ConstantMap(MeromorphicMap):
    family = "constant"

    def __init__(self, source: ModelManifold, value=0.0):
        super().__init__(source)
        self.value = parse_point(value) if isinstance(value, str) else complex(value)
        self._W = np.array([0.0, 1.0] if _is_inf(self.value) else [1.0, self.value], dtype=complex)

    def depends_on(self):
        return ()

    def values(self, Z):
        Z = np.asarray(Z)
        return np.broadcast_to(self._W, Z.shape[:-1] + (2,)).copy()

    def derivatives(self, Z):
        Z = np.asarray(Z)
        return np.zeros(Z.shape[:-1] + (self.m, 2), dtype=complex)

    def preimages(self, a, domain):
        A0, A1 = _target_covector(a)
        if abs(A0 * self._W[0] + A1 * self._W[1]) == 0:
            raise DomainError("a constant map has the whole source as preimage")
        return []

    def describe(self):
        return {"family": "constant", "value": repr(self.value)}


class RationalMap(MeromorphicMap):
    """f = P(Z_k)/Q(Z_k) for one coordinate k; W = (Q, P).

    Coefficients are in numpy order (highest degree first).
    """

    family = "rational"

    def __init__(self, source: ModelManifold, num: Sequence[complex], den: Sequence[complex] = (1.0,), coord: int = 0):
        super().__init__(source)
        if not 0 <= coord < self.m:
            raise ConfigError(f"coordinate {coord} out of range for m = {self.m}")
        self.num = np.trim_zeros(np.asarray(num, dtype=complex), "f")
        self.den = np.trim_zeros(np.asarray(den, dtype=complex), "f")
        if self.den.size == 0:
            raise ConfigError("zero denominator")
        if self.num.size == 0:
            self.num = np.zeros(1, dtype=complex)
        self.coord = coord
        # common factors make the map ill-posed in homogeneous form
        if self.num.size > 1 and self.den.size > 1:
            rn, rd = np.roots(self.num), np.roots(self.den)
            if rn.size and rd.size and np.min(np.abs(rn[:, None] - rd[None, :])) < 1e-10:
                raise ConfigError("numerator and denominator share a root")

    def depends_on(self):
        return (self.coord,)

    def values(self, Z):
        z = np.asarray(Z)[..., self.coord]
        return np.stack([np.polyval(self.den, z), np.polyval(self.num, z)], axis=-1)

    def derivatives(self, Z):
        Z = np.asarray(Z)
        z = Z[..., self.coord]
        out = np.zeros(Z.shape[:-1] + (self.m, 2), dtype=complex)
        out[..., self.coord, 0] = np.polyval(np.polyder(self.den), z) if self.den.size > 1 else 0.0
        out[..., self.coord, 1] = np.polyval(np.polyder(self.num), z) if self.num.size > 1 else 0.0
        return out

    def _poly_for(self, a) -> np.ndarray:
        A0, A1 = _target_covector(a)
        return np.polyadd(A0 * self.den, A1 * self.num)

    def _roots(self, a) -> list[tuple[complex, int]]:
        g = np.trim_zeros(self._poly_for(a), "f")
        if g.size == 0:
            raise DomainError("f is constant with value a")
        if g.size == 1:
            return []
        roots = np.roots(g)
        # cluster repeated roots, then confirm orders by derivatives
        out: list[tuple[complex, int]] = []
        used = np.zeros(roots.size, dtype=bool)
        for i, z in enumerate(roots):
            if used[i]:
                continue
            tol = 1e-5 * max(1.0, abs(z))
            grp = np.nonzero(~used & (np.abs(roots - z) < tol))[0]
            used[grp] = True
            zc = _refine_root(g, complex(np.mean(roots[grp])), len(grp))
            out.append((zc, _multiplicity(g, zc)))
        return out

    def multiplicity_at_origin(self, a) -> int:
        g = np.trim_zeros(self._poly_for(a), "f")
        if g.size == 0:
            raise DomainError("f is constant with value a")
        k = 0
        for c in g[::-1]:
            if c != 0:
                break
            k += 1
        return k

    def preimages(self, a, domain):
        roots = self._roots(a)
        if self.m == 1:
            if not _source_is_plane(self.source):
                raise UnsupportedOperation("rational preimages are enumerated on ℂ")
            pts = [Preimage(z, k) for z, k in roots]
            return _filter_inside(pts, domain)
        if not _source_is_plane(self.source):
            raise UnsupportedOperation("slice preimages are supported on ℂᵐ")
        return _slice_filter([Preimage(z, k, self.coord, "slice") for z, k in roots], domain)

    def describe(self):
        return {
            "family": "rational",
            "num": " ".join(repr(complex(c)) for c in self.num),
            "den": " ".join(repr(complex(c)) for c in self.den),
            "coord": str(self.coord),
        }


def _multiplicity(g: np.ndarray, z: complex) -> int:
    """Lowest k >= 1 with |g^{(k)}(z)| >= MULT_TOL·max(1, |g^{(k+1)}(z)|)."""
    d = g
    k = 0
    while d.size > 1:
        nxt = np.polyder(d)
        val = abs(np.polyval(d, z))
        nv = abs(np.polyval(nxt, z)) if nxt.size > 1 else 0.0
        if k > 0 and val >= MULT_TOL * max(1.0, nv):
            return k
        d = nxt
        k += 1
    return max(k, 1)


def _refine_root(g: np.ndarray, z: complex, order: int, steps: int = 8) -> complex:
    """Newton on g^{(order-1)}, which has a simple root at an order-``order`` zero."""
    d = g
    for _ in range(order - 1):
        d = np.polyder(d)
    dd = np.polyder(d)
    for _ in range(steps):
        den = np.polyval(dd, z)
        if den == 0:
            break
        step = np.polyval(d, z) / den
        z = z - step
        if abs(step) < 1e-16 * max(1.0, abs(z)):
            break
    return complex(z)


class ExpMap(MeromorphicMap):
    """f = μ(exp(λ Z_k)) with μ(s) = (a s + b)/(c s + d) a Möbius map."""

    family = "exp"

    def __init__(
        self,
        source: ModelManifold,
        scale: complex = 1.0,
        mobius: Sequence[complex] = (1.0, 0.0, 0.0, 1.0),
        coord: int = 0,
    ):
        super().__init__(source)
        a, b, c, d = (complex(v) for v in mobius)
        if abs(a * d - b * c) < 1e-14:
            raise ConfigError("degenerate Möbius transformation")
        if complex(scale) == 0:
            raise ConfigError("exp scale must be nonzero")
        self.mobius = (a, b, c, d)
        self.scale = complex(scale)
        self.coord = coord

    def depends_on(self):
        return (self.coord,)

    def values(self, Z):
        a, b, c, d = self.mobius
        s = self.scale * np.asarray(Z)[..., self.coord]
        big = s.real > 0
        # W = (c e^s + d, a e^s + b) scaled by e^{-s} where Re s > 0
        e_pos = np.exp(np.where(big, -s, s))
        W0 = np.where(big, c + d * e_pos, c * e_pos + d)
        W1 = np.where(big, a + b * e_pos, a * e_pos + b)
        return np.stack([W0, W1], axis=-1)

    def derivatives(self, Z):
        a, b, c, d = self.mobius
        Z = np.asarray(Z)
        s = self.scale * Z[..., self.coord]
        big = s.real > 0
        e = np.exp(np.where(big, -s, s))
        # d/dZ of (c + d e^{-s}, a + b e^{-s}) or of (c e^s + d, a e^s + b)
        D0 = np.where(big, -d * e, c * e) * self.scale
        D1 = np.where(big, -b * e, a * e) * self.scale
        out = np.zeros(Z.shape[:-1] + (self.m, 2), dtype=complex)
        out[..., self.coord, 0] = D0
        out[..., self.coord, 1] = D1
        return out

    def _log_targets(self, a) -> complex | None:
        A0, A1 = _target_covector(a)
        ma, mb, mc, md = self.mobius
        # A0 (c s + d) + A1 (a s + b) = 0 → s = -(A0 d + A1 b)/(A0 c + A1 a)
        num = -(A0 * md + A1 * mb)
        den = A0 * mc + A1 * ma
        if num == 0 or den == 0:
            return None  # exp omits 0 and ∞
        return num / den

    def multiplicity_at_origin(self, a) -> int:
        s = self._log_targets(a)
        return 0 if s is None or abs(s - 1.0) > 1e-15 else 1

    def preimages(self, a, domain):
        s = self._log_targets(a)
        if s is None:
            return []
        if not _source_is_plane(self.source):
            raise UnsupportedOperation("exp preimages are enumerated on ℂᵐ")
        R = domain._search_cap()
        base = cmath.log(s)
        step = 2j * math.pi / self.scale
        kmax = int(math.ceil(R / abs(step))) + 1
        z0 = base / self.scale
        roots = [z0 + k * step for k in range(-kmax, kmax + 1)]
        roots = [z for z in roots if abs(z) <= R + abs(step)]
        if self.m == 1:
            return _filter_inside([Preimage(complex(z), 1) for z in roots], domain)
        return _slice_filter([Preimage(complex(z), 1, self.coord, "slice") for z in roots], domain)

    def describe(self):
        return {
            "family": "exp",
            "scale": repr(self.scale),
            "mobius": " ".join(repr(v) for v in self.mobius),
            "coord": str(self.coord),
        }


class ProjectionMap(MeromorphicMap):
    """Z ↦ [1 : Z_{k₁} : ... : Z_{kₙ}] into ℙⁿ."""

    family = "projection"

    def __init__(self, source: ModelManifold, coords: Sequence[int]):
        super().__init__(source)
        self.cidx = tuple(int(c) for c in coords)
        if not self.cidx or any(not 0 <= c < self.m for c in self.cidx):
            raise ConfigError("projection coordinates out of range")
        self.n = len(self.cidx)

    def depends_on(self):
        return self.cidx

    def values(self, Z):
        Z = np.asarray(Z)
        return np.concatenate([np.ones(Z.shape[:-1] + (1,), dtype=complex), Z[..., list(self.cidx)]], axis=-1)

    def derivatives(self, Z):
        Z = np.asarray(Z)
        out = np.zeros(Z.shape[:-1] + (self.m, self.n + 1), dtype=complex)
        for j, c in enumerate(self.cidx):
            out[..., c, j + 1] = 1.0
        return out

    def multiplicity_at_origin(self, a) -> int:
        if self.n != 1:
            return 0
        A0, A1 = _target_covector(a)
        return 1 if A0 == 0 else 0

    def preimages(self, a, domain):
        if self.n != 1:
            raise UnsupportedOperation("hyperplane preimages of ℙⁿ projections are not coordinate slices")
        z = parse_point(a) if isinstance(a, str) else complex(a)
        if _is_inf(z):
            return []
        if self.m == 1:
            return _filter_inside([Preimage(z, 1)], domain)
        if not _source_is_plane(self.source):
            raise UnsupportedOperation("slice preimages are supported on ℂᵐ")
        return _slice_filter([Preimage(z, 1, self.cidx[0], "slice")], domain)

    def describe(self):
        return {"family": "projection", "coords": " ".join(map(str, self.cidx))}


class CallableMap(MeromorphicMap):
    """User map Z ↦ W(Z) (homogeneous, ℙ¹ target) with finite-difference derivatives.

    Preimages on ℂ come from Newton iterations seeded on a grid, deduplicated
    within 1e-6·r; multiplicities are winding numbers on small circles.
    """

    family = "callable"

    def __init__(self, source: ModelManifold, func: Callable[[np.ndarray], np.ndarray], h: float = 1e-6):
        super().__init__(source)
        self.func = func
        self.h = h

    def values(self, Z):
        return np.asarray(self.func(np.asarray(Z, dtype=complex)), dtype=complex)

    def derivatives(self, Z):
        Z = np.asarray(Z, dtype=complex)
        out = []
        for i in range(self.m):
            e = np.zeros(self.m, dtype=complex)
            e[i] = self.h
            out.append((self.values(Z + e) - self.values(Z - e)) / (2 * self.h))
        return np.stack(out, axis=-2)

    def _g(self, a, z):
        A0, A1 = _target_covector(a)
        W = self.values(np.asarray(z)[..., None])
        return A0 * W[..., 0] + A1 * W[..., 1]

    def winding(self, a, z: complex, radius: float, n: int = 64) -> int:
        ph = 2 * math.pi * np.arange(n + 1) / n
        vals = self._g(a, z + radius * np.exp(1j * ph))
        ang = np.unwrap(np.angle(vals))
        return int(round((ang[-1] - ang[0]) / (2 * math.pi)))

    def multiplicity_at_origin(self, a) -> int:
        if abs(self._g(a, np.array(0j))) > 1e-12:
            return 0
        return max(self.winding(a, 0j, 1e-3), 1)

    def preimages(self, a, domain, grid: int = 48, iters: int = 60):
        if self.m != 1 or not _source_is_plane(self.source):
            raise UnsupportedOperation("Newton preimages are supported on ℂ")
        R = domain._search_cap()
        xs = np.linspace(-R, R, grid)
        z = (xs[:, None] + 1j * xs[None, :]).ravel()
        h = 1e-7 * max(1.0, R)
        with np.errstate(all="ignore"):
            for _ in range(iters):
                g = self._g(a, z)
                dg = (self._g(a, z + h) - self._g(a, z - h)) / (2 * h)
                z = z - np.where(np.abs(dg) > 0, g / dg, 0.0)
                z = np.where(np.isfinite(z), z, np.nan)
            g = self._g(a, z)
            ok = np.isfinite(z) & (np.abs(g) < 1e-9)
        found: list[complex] = []
        dedup = 1e-6 * max(domain.r, 1.0)
        for zz in z[ok]:
            if all(abs(zz - f) > dedup for f in found):
                found.append(complex(zz))
        pts = [Preimage(zz, max(self.winding(a, zz, 1e-4), 1)) for zz in found]
        return _filter_inside(pts, domain)


# ---------------------------------------------------------------------------
# construction from config


def _complex_list(text: str) -> list[complex]:
    try:
        return [complex(t.replace("i", "j")) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse coefficient list {text!r}") from exc


def map_from_config(source: ModelManifold, cfg: dict[str, str]) -> MeromorphicMap:
    """Build a map from a key = value block.

    family = constant | rational | exp | projection | z | z2 | mobius
    """
    fam = cfg.get("family", "").strip().lower()
    coord = int(cfg.get("coord", "0"))
    if fam == "constant":
        return ConstantMap(source, cfg.get("value", "0"))
    if fam == "z":
        return RationalMap(source, [1, 0], [1], coord)
    if fam == "z2":
        return RationalMap(source, [1, 0, 0], [1], coord)
    if fam == "mobius":
        a, b, c, d = _complex_list(cfg.get("mobius", "1 0 0 1"))
        return RationalMap(source, [a, b], [c, d], coord)
    if fam == "rational":
        return RationalMap(source, _complex_list(cfg.get("num", "1 0")), _complex_list(cfg.get("den", "1")), coord)
    if fam == "exp":
        mob = _complex_list(cfg.get("mobius", "1 0 0 1"))
        if len(mob) != 4:
            raise ConfigError("mobius needs four coefficients a b c d")
        return ExpMap(source, complex(cfg.get("scale", "1").replace("i", "j")), mob, coord)
    if fam == "projection":
        return ProjectionMap(source, [int(t) for t in cfg.get("coords", "0").replace(",", " ").split()])
    raise ConfigError(f"unknown map family {fam!r}")
