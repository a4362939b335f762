"""Nevanlinna functions for maps into ℙⁿ under either exhaustion.

With w = g_r (non-parabolic), h_r (parabolic) or the disk Green function
(Dirichlet reference) and μ_r the matching boundary measure:

    T(r)   = ½ ∫_{Δ(r)} w e_{f,ω} dv
    m(r,D) = ∫_{∂Δ(r)} u_D∘f dμ_r
    N(r,D) = (πᵐ/(m-1)!) ∫_{f*D ∩ Δ(r)} w α^{m-1}
    E(r,D) = ∫_{Δ(r)} p(r,o,x) u_D∘f(x) dv        (parabolic only)

and T + u_D(f(o)) = m + N (+ E).

On complex curves a preimage of D at o is allowed with ``renormalize``:
u_D(f(o)) is replaced by R(o) = lim [u_D∘f + k log ρ] and the charge at o is
π k times the finite part of w at o.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError, UnsupportedOperation
from .exhaustion import ExhaustionWeight, Mode
from .maps import MeromorphicMap
from .models import EuclideanFactor, ProjectiveFactor, euclidean, gauss_legendre
from .quad import (
    IntegralResult,
    QuadratureSpec,
    heat_expectation,
    integrate_boundary,
    integrate_disk,
    integrate_domain,
    integrate_slice,
)
from .target import DivisorData, SingularVolumeForm

BASE_RADIUS = 1e-5


def _scaled(res: IntegralResult, k: float) -> IntegralResult:
    return IntegralResult(
        k * res.value,
        abs(k) * res.error,
        res.evaluations,
        res.converged,
        res.method,
        None if res.mc_value is None else k * res.mc_value,
        None if res.mc_error is None else abs(k) * res.mc_error,
    )


def _divisor_point(divisors: DivisorData, j: int):
    if divisors.n != 1:
        raise UnsupportedOperation("preimages are computed for point divisors on ℙ¹")
    return divisors.point(j)


def _w_inside(w: ExhaustionWeight):
    return lambda x: np.maximum(w.value(x), 0.0)


# ---------------------------------------------------------------------------
# the four functions


def fibre_weight(w: ExhaustionWeight, s, panels: int = 40, nodes: int = 8) -> np.ndarray:
    """K(s) = ∫_{ℂ^{m-1}} w(√(s² + |y|²)) dv_y over Δ(r) on ℂᵐ (radial weights).

    K(s) = |S^{2m-3}| ∫_s^R w(ρ) (ρ² - s²)^{m-2} ρ dρ, integrated in log ρ.
    """
    M = w.manifold
    m = M.complex_dim
    e1 = np.zeros(M.real_dim)
    e1[0] = 1.0
    R = float(w.ray_roots(e1[None, :], clip=True)[0][0])
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros(s.shape)
    ok = (s > 0) & (s < R)
    if not np.any(ok):
        return out
    g, gw = gauss_legendre(nodes)
    frac = ((np.arange(panels)[:, None] + 0.5 * (g[None, :] + 1.0)) / panels).ravel()
    wf = np.tile(gw, panels) / (2.0 * panels)
    area = 2.0 * math.pi ** (m - 1) / math.factorial(m - 2)
    idx = np.nonzero(ok)[0]
    lb = math.log(R)
    for a in range(0, idx.size, 2048):
        sl = idx[a : a + 2048]
        la = np.log(s[sl])
        rho = np.exp(la[:, None] + (lb - la)[:, None] * frac[None, :])
        x = np.zeros(rho.shape + (M.real_dim,))
        x[..., 0] = rho
        vals = np.maximum(w.value(x), 0.0) * (rho**2 - s[sl][:, None] ** 2) ** (m - 2) * rho**2
        out[sl] = area * (lb - la) * np.sum(vals * wf[None, :], axis=-1)
    return out


def characteristic(f: MeromorphicMap, w: ExhaustionWeight, spec: QuadratureSpec | None = None) -> IntegralResult:
    """T_f(r, ω) = ½ ∫_{Δ(r)} w e_{f,ω} dv.

    On ℂᵐ (m >= 2) with a map of one coordinate the weight is integrated over
    the complementary fibres first, leaving a disk integral.
    """
    dep = f.depends_on()
    if dep == ():
        return IntegralResult(0.0, 0.0, 0, True)
    M = w.manifold
    if M.is_euclidean and M.complex_dim >= 2 and dep is not None and len(dep) == 1:
        k = dep[0]
        e1 = np.zeros(M.real_dim)
        e1[0] = 1.0
        R = float(w.ray_roots(e1[None, :], clip=True)[0][0])

        def integrand(y):
            x = np.zeros((y.shape[0], M.real_dim))
            x[:, 2 * k] = y[:, 0]
            x[:, 2 * k + 1] = y[:, 1]
            # polar nodes share radii across directions
            s, inv = np.unique(np.round(np.linalg.norm(y, axis=-1), 13), return_inverse=True)
            return f.energy_density(x) * fibre_weight(w, s)[inv]

        return _scaled(integrate_disk(R, integrand, spec), 0.5)
    wv = _w_inside(w)
    res = integrate_domain(w, lambda x: wv(x) * f.energy_density(x), spec)
    return _scaled(res, 0.5)


def canonical_characteristic(T: float, n: int) -> float:
    """T_f(r, K_N) with the representative -(n+1)ω of c₁(K_N) on ℙⁿ."""
    return -(n + 1) * T


def proximity(
    f: MeromorphicMap, divisors: DivisorData, j: int, w: ExhaustionWeight, spec: QuadratureSpec | None = None
) -> IntegralResult:
    """m_f(r, D_j) = ∫_{∂Δ(r)} u_j∘f dμ_r.

    On balls in ℂᵐ (m >= 2) with a map of one coordinate z_k, the uniform
    measure on the sphere pushes forward to the density
    (m-1)/(πR²) (1 - |ζ|²/R²)^{m-2} on the disk |z_k| < R.
    """
    M = w.manifold
    dep = f.depends_on()
    const = w.boundary_density_constant()
    if M.is_euclidean and M.complex_dim >= 2 and dep is not None and len(dep) == 1 and const is not None:
        m, k = M.complex_dim, dep[0]
        e1 = np.zeros(M.real_dim)
        e1[0] = 1.0
        R = float(w.ray_roots(e1[None, :], clip=True)[0][0])
        mass = const * R ** (2 * m - 1) * 2.0 * math.pi**m / math.factorial(m - 1)
        disk = ExhaustionWeight(euclidean(1), Mode.DIRICHLET, R)
        try:
            pts = _preimages(f, divisors, j, w)
        except UnsupportedOperation:
            pts = []
        centers = [np.array([p.point.real, p.point.imag]) for p in pts if p.kind == "slice"]

        def integrand(y):
            x = np.zeros((y.shape[0], M.real_dim))
            x[:, 2 * k] = y[:, 0]
            x[:, 2 * k + 1] = y[:, 1]
            fac = np.clip(1.0 - np.sum(y * y, axis=-1) / R**2, 0.0, None) ** (m - 2)
            return f.u_pullback(divisors, j, x) * fac

        res = integrate_domain(disk, integrand, spec, centers)
        return _scaled(res, mass * (m - 1) / (math.pi * R * R))
    return integrate_boundary(w, lambda x: f.u_pullback(divisors, j, x), spec)


def _preimages(f, divisors, j, w):
    return f.preimages(_divisor_point(divisors, j), w)


def counting(
    f: MeromorphicMap,
    divisors: DivisorData,
    j: int,
    w: ExhaustionWeight,
    simple: bool = False,
    spec: QuadratureSpec | None = None,
    renormalize: bool = False,
) -> float:
    """N_f(r, D_j) (or N̄ with ``simple``).

    Complex curves: π Σ mult·w(z_k). Coordinate slices in ℂᵐ: π·mult·∫ w
    over the slice, since α^{m-1} restricts to (m-1)!/π^{m-1} dv there.
    """
    M = w.manifold
    pts = _preimages(f, divisors, j, w)
    total = 0.0
    o = M.origin()
    for p in pts:
        k = 1 if simple else p.multiplicity
        x = p.chart(M)
        if p.kind == "slice":
            res = integrate_slice(w, p.coord, p.point, _w_inside(w), spec)
            total += math.pi * k * res.value
        elif np.linalg.norm(x - o) == 0:
            if not renormalize:
                raise PreconditionError("f(o) lies on the divisor; the First Main Theorem assumes f(o) ∉ Supp D")
            total += math.pi * k * w.finite_part_at_origin()
        else:
            total += math.pi * k * float(w.weight(x[None, :])[0])
    return total


def residual(
    f: MeromorphicMap,
    divisors: DivisorData,
    j: int,
    w: ExhaustionWeight,
    spec: QuadratureSpec | None = None,
) -> IntegralResult:
    """E_f(r, D_j) = ∫_{Δ(r)} p(r,o,·) u_j∘f dv (parabolic mode)."""
    if w.mode is not Mode.PARABOLIC:
        raise UnsupportedOperation("the residual function exists in parabolic mode only")
    M = w.manifold
    try:
        pts = _preimages(f, divisors, j, w)
    except UnsupportedOperation:
        pts = []
    centers = [p.chart(M) for p in pts if p.kind == "point"]
    return heat_expectation(w, lambda x: f.u_pullback(divisors, j, x), spec, centers)


def base_value(
    f: MeromorphicMap, divisors: DivisorData, j: int, w: ExhaustionWeight, renormalize: bool = False
) -> float:
    """u_j(f(o)), or the renormalized R(o) when f(o) ∈ D_j on a complex curve."""
    M = w.manifold
    o = M.origin()
    W = f.homogeneous(o[None, :])[0]
    A = divisors.covectors[j]
    on = abs(np.dot(W, A)) <= 1e-14 * np.linalg.norm(W)
    if not on:
        return float(divisors.u_homogeneous(j, W))
    if not renormalize or M.complex_dim != 1:
        raise PreconditionError("f(o) lies on the divisor; the First Main Theorem assumes f(o) ∉ Supp D")
    k = f.multiplicity_at_origin(_divisor_point(divisors, j))
    ph = 2 * math.pi * (np.arange(64) + 0.5) / 64
    x = o + BASE_RADIUS * np.stack([np.cos(ph), np.sin(ph)], axis=-1)
    vals = f.u_pullback(divisors, j, x) + k * math.log(BASE_RADIUS)
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# FMT


@dataclass
class FMTRecord:
    r: float
    T: float
    m: float
    N: float
    Nbar: float
    E: float
    base: float
    residual: float
    tolerance: float
    results: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.residual <= self.tolerance


def fmt_tolerance(T: float, rel: float = 1e-3) -> float:
    return max(rel * T, 1e-6)


def fmt_residual(
    f: MeromorphicMap,
    divisors: DivisorData,
    j: int,
    w: ExhaustionWeight,
    spec: QuadratureSpec | None = None,
    renormalize: bool = False,
    T: IntegralResult | None = None,
    rel: float = 1e-3,
) -> FMTRecord:
    """|T + u_j(f(o)) - m - N (- E)| with the tolerance max(rel·T, 1e-6)."""
    base = base_value(f, divisors, j, w, renormalize)
    Tr = T if T is not None else characteristic(f, w, spec)
    mr = proximity(f, divisors, j, w, spec)
    N = counting(f, divisors, j, w, False, spec, renormalize)
    Nb = counting(f, divisors, j, w, True, spec, renormalize)
    E = residual(f, divisors, j, w, spec) if w.mode is Mode.PARABOLIC else None
    ev = 0.0 if E is None else E.value
    res = abs(Tr.value + base - mr.value - N - ev)
    out = {"T": Tr, "m": mr}
    if E is not None:
        out["E"] = E
    return FMTRecord(w.r, Tr.value, mr.value, N, Nb, ev, base, res, fmt_tolerance(Tr.value, rel), out)


# ---------------------------------------------------------------------------
# Ricci characteristic


def ricci_characteristic(w: ExhaustionWeight, nodes: int = 8) -> float:
    """T(r, 𝓡) = ∫_{Δ(r)} w · ½ tr_g 𝓡 dv.

    Zero on flat models. On ℂᵏ × ℙ¹ (FS scale λ) the trace is the constant
    2/λ and the weight depends on the two factor radii only, so the integral
    is a two-dimensional profile quadrature.
    """
    M = w.manifold
    if M.is_flat:
        return 0.0
    fs = M.factors
    if not (len(fs) == 2 and isinstance(fs[0], EuclideanFactor) and isinstance(fs[1], ProjectiveFactor) and fs[1].k == 1):
        raise UnsupportedOperation(f"Ricci characteristic not implemented on {M.name}")
    E, P = fs
    lam = P.scale
    trace = 2.0 / lam
    sq = math.sqrt(lam)
    bmax = sq * math.pi / 2

    def point(a, b):
        x = np.zeros(np.broadcast(a, b).shape + (M.real_dim,))
        x[..., 0] = a
        x[..., E.real_dim] = np.tan(b / sq)
        return x

    g, gw = gauss_legendre(nodes)
    # geometric panels in b towards 0 and uniform ones beyond
    bedges = np.concatenate([[0.0], bmax * np.geomspace(1e-4, 0.25, 10), np.linspace(0.25, 1.0, 4)[1:] * bmax])
    bb = (bedges[:-1, None] + np.diff(bedges)[:, None] * 0.5 * (g + 1)).ravel()
    wb = (np.diff(bedges)[:, None] * 0.5 * gw).ravel()
    inside = w.value(point(np.full(bb.shape, 1e-12), bb)) > 0
    bb, wb = bb[inside], wb[inside]
    if bb.size == 0:
        return 0.0
    # outer extent in the Euclidean radius by bisection (w decreases in a)
    lo = np.zeros(bb.shape)
    hi = np.full(bb.shape, max(2.0 * w.r, 1.0))
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        pos = w.value(point(mid, bb)) > 0
        lo, hi = np.where(pos, mid, lo), np.where(pos, hi, mid)
    frac = np.concatenate([[0.0], np.geomspace(1e-4, 1.0, 12)])
    fa = (frac[:-1, None] + np.diff(frac)[:, None] * 0.5 * (g + 1)).ravel()
    fw = (np.diff(frac)[:, None] * 0.5 * gw).ravel()
    a = lo[:, None] * fa[None, :]
    wa = lo[:, None] * fw[None, :]
    vals = np.maximum(w.value(point(a, bb[:, None])), 0.0)
    inner = np.sum(vals * E.sphere_area(a) * wa, axis=-1)
    total = float(np.sum(wb * P.sphere_area(bb) * inner))
    return trace * total


# ---------------------------------------------------------------------------
# SMT and defects


def smt_scale(mode: Mode, r: float, T: float, T_theta: float | None, m: int, delta: float = 0.1) -> float:
    """Error-term scale: 1 + log⁺T + δ log⁺r, or rᵐ(1 + log⁺T(θr)) in parabolic mode."""
    lp = lambda v: math.log(v) if v > 1 else 0.0
    if mode is Mode.PARABOLIC:
        return r**m * (1.0 + lp(T_theta if T_theta is not None else T))
    return 1.0 + lp(T) + delta * lp(r)


def check_smt_hypotheses(f: MeromorphicMap, divisors: DivisorData) -> SingularVolumeForm:
    svf = SingularVolumeForm(divisors)  # q > n+1 and general position
    ok, _ = f.nondegeneracy_probe()
    if not ok:
        raise PreconditionError("f is not differentiably non-degenerate (Jacobian rank < n at all samples)")
    return svf


def is_monotone_increasing(ratio: Sequence[float]) -> bool:
    """True when the ratio increases strictly across the top half of the grid."""
    top = np.asarray(ratio, dtype=float)[len(ratio) // 2 :]
    return bool(top.size >= 2 and np.all(np.diff(top) > 0))


def is_bounded(ratio: Sequence[float]) -> bool:
    """Bounded-above test for the SMT gap ratio on a finite grid.

    The ratio fails only when it increases strictly across the top half of the
    grid while positive there; a rise towards a nonpositive value keeps the
    gap below Σ N̄ and is not growth.
    """
    v = np.asarray(ratio, dtype=float)
    if not np.all(np.isfinite(v)):
        return False
    top = v[len(v) // 2 :]
    return not (is_monotone_increasing(v) and np.max(top) > 0)


@dataclass
class DefectEstimate:
    r: np.ndarray
    curve: np.ndarray
    tail: float
    slope: float


def defect_estimate(r, T, Nbar, tail_fraction: float = 0.2) -> DefectEstimate:
    """δ̄(r) = 1 - N̄(r)/T(r); tail average over the top 20% of the grid and its trend slope."""
    r = np.asarray(r, dtype=float)
    T = np.asarray(T, dtype=float)
    Nb = np.asarray(Nbar, dtype=float)
    k = max(2, int(math.ceil(tail_fraction * r.size)))
    if np.any(T[-k:] <= 0):
        raise PreconditionError("degenerate map: T vanishes on the tail of the grid")
    with np.errstate(divide="ignore", invalid="ignore"):
        curve = np.where(T > 0, 1.0 - Nb / T, np.nan)
    tr, tc = r[-k:], curve[-k:]
    slope = float(np.polyfit(tr, tc, 1)[0]) if np.ptp(tr) > 0 else 0.0
    return DefectEstimate(r, curve, float(np.mean(tc)), slope)


# ---------------------------------------------------------------------------
# tables


@dataclass
class Row:
    r: float
    T: float
    T_K: float
    T_R: float
    per: dict[str, dict[str, float]]
    lhs: float | None = None
    rhs: float | None = None
    scale: float | None = None

    @property
    def ratio(self) -> float | None:
        if self.lhs is None or not self.scale:
            return None
        return (self.lhs - self.rhs) / self.scale


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return repr(float(v))


@dataclass
class NevanlinnaTable:
    """Per-r Nevanlinna data for one map and a list of divisors."""

    labels: tuple[str, ...]
    rows: list[Row]
    mode: str
    meta: dict = field(default_factory=dict)

    COLUMNS = ("m", "N", "Nbar", "E", "base", "fmt_residual", "fmt_tolerance", "fmt_ok", "defect")

    @property
    def r(self) -> np.ndarray:
        return np.array([row.r for row in self.rows])

    def column(self, name: str, label: str | None = None) -> np.ndarray:
        if label is None:
            return np.array([getattr(row, name) for row in self.rows], dtype=float)
        return np.array([row.per[label].get(name, np.nan) for row in self.rows], dtype=float)

    def max_fmt_residual(self) -> float:
        vals = [row.per[lb]["fmt_residual"] for row in self.rows for lb in self.labels if "fmt_residual" in row.per[lb]]
        return max(vals) if vals else 0.0

    def fmt_ok(self) -> bool:
        return all(row.per[lb].get("fmt_ok", True) for row in self.rows for lb in self.labels)

    def defects(self, tail_fraction: float = 0.2) -> dict[str, DefectEstimate]:
        T = self.column("T")
        return {lb: defect_estimate(self.r, T, self.column("Nbar", lb), tail_fraction) for lb in self.labels}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        head = ["r", "T", "T_K", "T_R"]
        for lb in self.labels:
            head += [f"{c}[{lb}]" for c in self.COLUMNS]
        head += ["smt_lhs", "smt_rhs", "smt_scale", "smt_ratio"]
        wr.writerow(head)
        for row in self.rows:
            line = [_fmt(row.r), _fmt(row.T), _fmt(row.T_K), _fmt(row.T_R)]
            for lb in self.labels:
                d = row.per[lb]
                line += [_fmt(d.get(c)) for c in self.COLUMNS]
            line += [_fmt(row.lhs), _fmt(row.rhs), _fmt(row.scale), _fmt(row.ratio)]
            wr.writerow(line)
        return buf.getvalue()

    def curves_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["r", "T"] + [f"Nbar[{lb}]" for lb in self.labels] + [f"defect[{lb}]" for lb in self.labels])
        for row in self.rows:
            wr.writerow(
                [_fmt(row.r), _fmt(row.T)]
                + [_fmt(row.per[lb].get("Nbar")) for lb in self.labels]
                + [_fmt(row.per[lb].get("defect")) for lb in self.labels]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "divisors": list(self.labels),
            "meta": self.meta,
            "rows": [
                {
                    "r": row.r,
                    "T": row.T,
                    "T_K": row.T_K,
                    "T_R": row.T_R,
                    "divisors": {lb: {k: (bool(v) if k == "fmt_ok" else v) for k, v in row.per[lb].items()} for lb in self.labels},
                    "smt": None
                    if row.lhs is None
                    else {"lhs": row.lhs, "rhs": row.rhs, "scale": row.scale, "ratio": row.ratio},
                }
                for row in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def admissible(f: MeromorphicMap, divisors: DivisorData, w: ExhaustionWeight, gap: float = 1e-6, tries: int = 20) -> ExhaustionWeight:
    """w, or w at r(1 + gap)ᵏ when a divisor preimage lies within gap·r of ∂Δ(r)."""
    M = w.manifold
    for _ in range(tries):
        try:
            wide = w.at(w.r * (1.0 + 2 * gap))
            near = False
            for j in range(divisors.q):
                try:
                    pts = _preimages(f, divisors, j, wide)
                except UnsupportedOperation:
                    continue
                for p in pts:
                    d = p.chart(M) - M.origin()
                    lam = np.linalg.norm(d)
                    if lam == 0:
                        continue
                    R, found = w.ray_roots((d / lam)[None, :], clip=True)
                    if found[0] and abs(float(R[0]) - lam) <= gap * w.r:
                        near = True
            if not near:
                return w
        except DomainError:
            pass
        w = w.at(w.r * (1.0 + gap))
    raise DomainError(f"no admissible radius near r = {w.r}")


def build_table(
    f: MeromorphicMap,
    divisors: DivisorData,
    weights: Sequence[ExhaustionWeight],
    spec: QuadratureSpec | None = None,
    renormalize: bool = False,
    smt: bool = False,
    delta: float = 0.1,
    theta_spec: QuadratureSpec | None = None,
    rel: float = 1e-3,
) -> NevanlinnaTable:
    """Evaluate every Nevanlinna function on the r-grid given by ``weights``.

    With ``smt`` the hypotheses are checked first and each row also carries
    LHS = qT + T(K_N) + T(𝓡), RHS = Σ N̄_j and the error scale.
    """
    spec = spec or QuadratureSpec()
    if smt:
        check_smt_hypotheses(f, divisors)
    n = divisors.n
    rows = []
    for w in weights:
        w = admissible(f, divisors, w)
        T = characteristic(f, w, spec)
        TR = ricci_characteristic(w)
        per: dict[str, dict[str, float]] = {}
        for j, lb in enumerate(divisors.labels):
            rec = fmt_residual(f, divisors, j, w, spec, renormalize, T, rel)
            d = {
                "m": rec.m,
                "N": rec.N,
                "Nbar": rec.Nbar,
                "E": rec.E if w.mode is Mode.PARABOLIC else None,
                "base": rec.base,
                "fmt_residual": rec.residual,
                "fmt_tolerance": rec.tolerance,
                "fmt_ok": rec.ok,
                "defect": (1.0 - rec.Nbar / rec.T) if rec.T > 0 else None,
            }
            per[lb] = {k: v for k, v in d.items() if v is not None}
        row = Row(w.r, T.value, canonical_characteristic(T.value, n), TR, per)
        if smt:
            q = divisors.q
            row.lhs = q * row.T + row.T_K + row.T_R
            row.rhs = sum(per[lb]["Nbar"] for lb in divisors.labels)
            Tt = None
            if w.mode is Mode.PARABOLIC:
                Tt = characteristic(f, w.at(w.constants.theta * w.r), theta_spec or QuadratureSpec(rtol=1e-4)).value
            row.scale = smt_scale(w.mode, w.r, row.T, Tt, w.manifold.complex_dim, delta)
        rows.append(row)
    meta = {
        "map": f.describe(),
        "manifold": w.manifold.describe() if weights else {},
        "constants": {} if not weights or weights[0].constants is None else weights[0].constants.describe(),
    }
    return NevanlinnaTable(tuple(divisors.labels), rows, weights[0].mode.value if weights else "", meta)
