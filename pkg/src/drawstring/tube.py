"""Solid-torus metric models around a closed geodesic, with grid distances.

Three metrics share one tube N(sigma, s0) in Fermi-type coordinates
(s, theta, t), identified by (s, theta, t) ~ (s, theta + theta_h, t + T):

* g0   : the constant-curvature background ds^2 + sinh^2 s dtheta^2
         + cosh^2 s dt^2;
* ghat : the glued drawstring metric pulled back through a reparametrization
         Phi(r, theta, t) = (phi(r), theta, t), agreeing with g0 on the
         outer collar;
* gi   : ghat with the t-warp replaced by e^{2w}, w >= max(u, -log 2), so
         the core's length element is exactly halved while gi >= ghat as
         quadratic forms everywhere.

Distances are shortest paths over a 26-neighbor grid on the quotient, with
Dijkstra runs delegated to scipy's sparse graph machinery.  The holonomy
angle is snapped to a grid multiple so the identification maps nodes to
nodes exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as cs_dijkstra

from .errors import GridError
from .piecewise import (
    ExprSegment,
    LogSplineSegment,
    PiecewiseC2Function,
    SplineSegment,
    bump,
    smoothstep,
)
from .warped import WarpedProfile

__all__ = ["TubeModel", "DistanceReport", "build_tube_metrics", "tube_distance",
           "project_to_core", "verify_squeeze_claims", "stencil_anisotropy_bound"]


# -- auxiliary profile functions ---------------------------------------------

def build_phi(ell: float, r0: float, r1: float) -> PiecewiseC2Function:
    """Monotone reparametrization [0, ell] -> [0, s0]: identity near 0,
    arcsinh(r + r0 - ell) on the collar [ell - r1, ell], positive-slope
    blend between (slopes are blended in log so positivity is structural)."""
    x_b = r0 - r1
    r_b = ell - r1
    phi_b = math.asinh(x_b)
    dphi_b = 1.0 / math.sqrt(1.0 + x_b * x_b)
    d2phi_b = -x_b / (1.0 + x_b * x_b) ** 1.5
    r_a = 0.4 * phi_b
    if not r_a < r_b:
        raise GridError("tube too short for the reparametrization blend")

    # C^1 Hermite data for log phi' on [r_a, r_b]
    span = r_b - r_a
    la, lb = 0.0, math.log(dphi_b)
    da, db = 0.0, d2phi_b / dphi_b

    def hermite(rr):
        tt = (np.asarray(rr, dtype=float) - r_a) / span
        h00 = 2 * tt**3 - 3 * tt**2 + 1
        h10 = tt**3 - 2 * tt**2 + tt
        h01 = -2 * tt**3 + 3 * tt**2
        h11 = tt**3 - tt**2
        return h00 * la + h10 * span * da + h01 * lb + h11 * span * db

    grid = np.linspace(r_a, r_b, 4097)
    bmp = bump(2.0 * (grid - r_a) / span - 1.0)

    from scipy.interpolate import CubicSpline

    def total(amp):
        slope = np.exp(hermite(grid) + amp * bmp)
        return float(CubicSpline(grid, slope).antiderivative()(r_b))

    target = phi_b - r_a
    t0 = total(0.0)
    lo, hi = (-40.0, 0.0) if t0 > target else (0.0, 40.0)
    amp = brentq(lambda a: total(a) - target, lo, hi, xtol=1e-15, rtol=8.9e-16)

    slope = np.exp(hermite(grid) + amp * bmp)
    anti = CubicSpline(grid, slope).antiderivative()
    vals = r_a + anti(grid)
    vals[-1] = phi_b  # closed by the amplitude solve; pin against rounding
    blend = SplineSegment(r_a, r_b, grid, vals, d1a=1.0, d1b=dphi_b)
    return PiecewiseC2Function(
        [
            ExprSegment(0.0, r_a, "identity"),
            blend,
            ExprSegment(r_b, ell, "arcsinh", arg_shift=r0 - ell),
        ],
        junctions=["C1,1", "C1,1"],
    )


def build_w(u: PiecewiseC2Function, ell: float, r1: float,
            core_u: float) -> PiecewiseC2Function:
    """t-stretch exponent w = -log2 + W(u + log2): W is a smooth ramp with
    W(v) = v for v >= gap and W(v) = 0 for v <= -gap, so w >= max(u, -log2)
    everywhere, w = u wherever u >= -log2 + gap (in particular on the outer
    collar), and w = -log2 near the core."""
    log2 = math.log(2.0)
    gap = min(0.3, 0.45 * abs(core_u + log2))
    if gap <= 0:
        raise GridError("core level too close to -log2 for a smooth max")

    def W(v):
        v = np.asarray(v, dtype=float)
        # antiderivative of the symmetric smoothstep S((v+gap)/(2 gap))
        out = np.zeros_like(v)
        hi = v >= gap
        out[hi] = v[hi]
        mid = (~hi) & (v > -gap)
        if np.any(mid):
            xs = np.linspace(-gap, gap, 513)
            from scipy.interpolate import CubicSpline

            anti = CubicSpline(xs, smoothstep((xs + gap) / (2 * gap))).antiderivative()
            out[mid] = anti(v[mid])
        return out

    # locate the transition zone in u (u is monotone through the dive)
    def u_minus(level, lam):
        return float(u(math.exp(lam))) - level

    lam_lo_bound = math.log(u.a if u.a > 0 else 1e-300)
    lam_hi_bound = math.log(ell)
    lam_lo = brentq(lambda l: u_minus(-log2 - gap, l), lam_lo_bound, lam_hi_bound,
                    xtol=1e-13)
    lam_hi = brentq(lambda l: u_minus(-log2 + gap, l), lam_lo_bound, lam_hi_bound,
                    xtol=1e-13)
    r_lo, r_hi = math.exp(lam_lo), math.exp(lam_hi)

    lam_grid = np.linspace(lam_lo, lam_hi, 4097)
    uv = u(np.exp(lam_grid))
    wv = -log2 + W(uv + log2)
    du = u.d1(np.exp(lam_grid)) * np.exp(lam_grid)  # du/dlam
    Sv = smoothstep((uv + log2 + gap) / (2 * gap))
    dwd = Sv * du                                    # dw/dlam by the chain rule
    trans = LogSplineSegment.through(r_lo, r_hi, lam_grid, wv,
                                     float(dwd[0]), float(dwd[-1]))
    tail = u.restrict(r_hi, ell)
    return PiecewiseC2Function(
        [ExprSegment(0.0, r_lo, "zero", val_offset=-log2), trans] + tail.segments,
        ["C1,1", "C1,1"] + tail.junctions,
    )


# -- models -------------------------------------------------------------------

@dataclass
class TubeModel:
    kind: str                      # "g0" | "ghat" | "gi"
    s0: float
    T: float
    theta_h: float
    s_I: float
    grid: Tuple[int, int, int]     # (n_r, n_theta, n_t)
    s_nodes: np.ndarray
    g_ss: np.ndarray
    g_thth: np.ndarray
    g_tt: np.ndarray
    core_tt: float                 # sqrt(g_tt) at s = 0
    meta: dict = field(default_factory=dict)
    _graph: Optional[csr_matrix] = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        n_r, n_th, n_t = self.grid
        return n_t + n_r * n_th * n_t

    def node_index(self, j: int, k: int, m: int) -> int:
        """Ring node (j >= 0) or core node (j == -1)."""
        n_r, n_th, n_t = self.grid
        if j < 0:
            return m % n_t
        return n_t + ((j * n_th + (k % n_th)) * n_t + (m % n_t))

    def nearest_node(self, point) -> int:
        s, th, t = point
        n_r, n_th, n_t = self.grid
        m = int(round((t % self.T) / self.T * n_t)) % n_t
        if s <= 0.5 * self.s_nodes[0]:
            return self.node_index(-1, 0, m)
        j = int(np.clip(round(s / self.s0 * n_r) - 1, 0, n_r - 1))
        k = int(round((th % (2 * math.pi)) / (2 * math.pi) * n_th)) % n_th
        return self.node_index(j, k, m)

    # -- graph construction ---------------------------------------------------

    def graph(self) -> csr_matrix:
        if self._graph is None:
            self._graph = _build_graph(self)
        return self._graph

    def distances_from(self, sources) -> np.ndarray:
        g = self.graph()
        return cs_dijkstra(g, directed=False, indices=np.asarray(sources))


def _build_graph(model: TubeModel) -> csr_matrix:
    n_r, n_th, n_t = model.grid
    ds = model.s0 / n_r
    dth = 2.0 * math.pi / n_th
    dt = model.T / n_t
    hol_units = int(round(model.theta_h / dth)) % n_th

    mss, mthth, mtt = model.g_ss, model.g_thth, model.g_tt

    rows, cols, data = [], [], []
    J, K, M = np.meshgrid(np.arange(n_r), np.arange(n_th), np.arange(n_t),
                          indexing="ij")
    J, K, M = J.ravel(), K.ravel(), M.ravel()
    base_idx = n_t + ((J * n_th + K) * n_t + M)

    offsets = []
    for dj in (0, 1):
        for dk in (-1, 0, 1):
            for dm in (-1, 0, 1):
                if (dj, dk, dm) <= (0, 0, 0):
                    continue
                offsets.append((dj, dk, dm))
    # 13 undirected offsets: (0,*,*) upper half plus all (1,*,*)

    for dj, dk, dm in offsets:
        J2 = J + dj
        valid = J2 < n_r
        j1, j2 = J[valid], J2[valid]
        k1, m1 = K[valid], M[valid]
        k2 = k1 + dk
        m2 = m1 + dm
        # crossing the t-seam twists theta by the holonomy
        wrap_up = m2 >= n_t
        wrap_dn = m2 < 0
        k2 = np.where(wrap_up, k2 + hol_units, k2)
        k2 = np.where(wrap_dn, k2 - hol_units, k2)
        k2 %= n_th
        m2 %= n_t
        idx1 = n_t + ((j1 * n_th + k1) * n_t + m1)
        idx2 = n_t + ((j2 * n_th + k2) * n_t + m2)
        a_ss = 0.5 * (mss[j1] + mss[j2])
        a_th = 0.5 * (mthth[j1] + mthth[j2])
        a_tt = 0.5 * (mtt[j1] + mtt[j2])
        length = np.sqrt(a_ss * (dj * ds) ** 2 + a_th * (dk * dth) ** 2
                         + a_tt * (dm * dt) ** 2)
        rows.append(idx1)
        cols.append(idx2)
        data.append(length)

    # core ring: along the core and out to the first radial layer
    m_core = np.arange(n_t)
    rows.append(m_core)
    cols.append((m_core + 1) % n_t)
    data.append(np.full(n_t, model.core_tt * dt))

    KK, MM = np.meshgrid(np.arange(n_th), np.arange(n_t), indexing="ij")
    KK, MM = KK.ravel(), MM.ravel()
    ring0 = n_t + ((0 * n_th + KK) * n_t + MM)
    s1 = model.s_nodes[0]
    for dm in (-1, 0, 1):
        m2 = MM + dm
        k_core = m2  # theta is degenerate on the core; index by t only
        wrap_up = m2 >= n_t
        wrap_dn = m2 < 0
        m2 = m2 % n_t
        a_ss = mss[0]          # midpoint: axis value equals first-ring value
        a_tt = 0.5 * (model.core_tt ** 2 + mtt[0])
        length = np.sqrt(a_ss * s1 ** 2 + a_tt * (dm * dt) ** 2)
        rows.append(ring0)
        cols.append(m2)
        data.append(np.full(ring0.size, length))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    n = model.n_nodes
    return csr_matrix((data, (rows, cols)), shape=(n, n))


def build_tube_metrics(i: int, glued: WarpedProfile, s_I: float = 1.0,
                       T: float = 2.0, theta_h: float = math.pi / 2.0,
                       grid: Tuple[int, int, int] = (96, 64, 64)
                       ) -> Tuple[TubeModel, TubeModel, TubeModel]:
    """Models (g0, ghat, gi) for the drawstring glued at eps = r0 = 1/i."""
    params = glued.meta.get("params", {})
    r0 = params.get("r0", 1.0 / i)
    if abs(r0 - 1.0 / i) > 1e-12:
        raise GridError("glued profile was not built with eps = r0 = 1/i")
    ell = glued.length
    r1 = glued.meta["r1"]
    s0 = math.asinh(r0)
    if not s0 < 0.5 * s_I:
        raise GridError("tube radius must stay below half the normal "
                        "injectivity radius")

    phi = build_phi(ell, r0, r1)
    w = build_w(glued.u, ell, r1, glued.meta["core_level"])

    n_r, n_th, n_t = grid
    s_nodes = np.linspace(s0 / n_r, s0, n_r)
    # invert phi at the radial nodes; the collar expression reproduces s0 at
    # r = ell only up to a rounding ulp, so guard the endpoints
    r_nodes = np.empty(n_r)
    phi_end = float(phi(ell))
    for j, s in enumerate(s_nodes):
        if s >= phi_end:
            r_nodes[j] = ell
        else:
            r_nodes[j] = brentq(lambda rr: float(phi(rr)) - s, 0.0, ell,
                                xtol=1e-15, rtol=8.9e-16)

    uv = glued.u(r_nodes)
    fv = glued.f(r_nodes)
    wv = w(r_nodes)
    dphi = phi.d1(r_nodes)

    ghat_ss = np.exp(-2 * uv) / dphi**2
    ghat_thth = np.exp(-2 * uv) * fv**2
    ghat_tt = np.exp(2 * uv)
    gi_tt = np.exp(2 * wv)

    common = dict(s0=s0, T=T, theta_h=theta_h, s_I=s_I, grid=grid,
                  s_nodes=s_nodes)
    meta = {"i": i, "r0": r0, "ell": ell, "r1": r1,
            "r_nodes_range": [float(r_nodes[0]), float(r_nodes[-1])]}

    g0 = TubeModel(kind="g0", core_tt=1.0,
                   g_ss=np.ones(n_r), g_thth=np.sinh(s_nodes) ** 2,
                   g_tt=np.cosh(s_nodes) ** 2, meta=dict(meta), **common)
    ghat = TubeModel(kind="ghat", core_tt=math.exp(glued.meta["core_level"]),
                     g_ss=ghat_ss, g_thth=ghat_thth, g_tt=ghat_tt,
                     meta=dict(meta), **common)
    gi = TubeModel(kind="gi", core_tt=0.5,
                   g_ss=ghat_ss, g_thth=ghat_thth, g_tt=gi_tt,
                   meta=dict(meta), **common)
    return g0, ghat, gi


# -- queries ------------------------------------------------------------------

def tube_distance(model: TubeModel, p, q) -> float:
    """Grid shortest-path distance between two (s, theta, t) points."""
    a = model.nearest_node(p)
    b = model.nearest_node(q)
    if a == b:
        return 0.0
    d = model.distances_from([a])[0, b]
    if not np.isfinite(d):
        raise GridError("grid is disconnected at the requested resolution")
    return float(d)


def project_to_core(model: TubeModel, p) -> Tuple[float, float, float]:
    """Nearest-point projection in Fermi coordinates: (s, th, t) -> (0, th, t)."""
    s, th, t = p
    return (0.0, th, t)


def core_distance(model: TubeModel, t1: float, t2: float) -> float:
    """Distance along the core circle (theta is degenerate there)."""
    d = abs((t1 - t2) % model.T)
    d = min(d, model.T - d)
    return model.core_tt * d


def core_length(model: TubeModel) -> float:
    return model.core_tt * model.T


def stencil_anisotropy_bound(model: TubeModel) -> float:
    """Worst-direction overestimate factor of the 26-neighbor stencil.

    For each radial layer, rescale the stencil steps by the local metric and
    take the support-function bound of the normalized step hull over a
    deterministic direction sample; the grid distance exceeds the true one
    by at most this factor (plus discretization of the profile itself).
    """
    n_r, n_th, n_t = model.grid
    steps = []
    for dj in (-1, 0, 1):
        for dk in (-1, 0, 1):
            for dm in (-1, 0, 1):
                if (dj, dk, dm) != (0, 0, 0):
                    steps.append((dj * model.s0 / n_r,
                                  dk * 2 * math.pi / n_th,
                                  dm * model.T / n_t))
    steps = np.asarray(steps)

    # deterministic spiral direction sample
    n_dir = 2000
    idx = np.arange(n_dir) + 0.5
    phi_g = math.pi * (3.0 - math.sqrt(5.0))
    z = 1.0 - 2.0 * idx / n_dir
    rad = np.sqrt(1.0 - z * z)
    dirs = np.stack([rad * np.cos(phi_g * idx), rad * np.sin(phi_g * idx), z],
                    axis=1)

    worst = 1.0
    layers = range(0, n_r, max(1, n_r // 12))
    for j in layers:
        scale = np.sqrt([model.g_ss[j], model.g_thth[j], model.g_tt[j]])
        local = steps * scale
        unit = local / np.linalg.norm(local, axis=1, keepdims=True)
        support = np.max(dirs @ unit.T, axis=1)
        worst = max(worst, float(np.max(1.0 / support)))
    return worst


# -- claim verification -------------------------------------------------------

@dataclass
class DistanceReport:
    i: int
    pairs: int
    c_i: float                      # realized per-crossing constant: twice the
                                    # worst boundary-to-projection cost under gi
    c_upper: float                  # max of d_gi - d_g0 over pairs (slack when <= 0)
    c_lower: float                  # max of d_g0/2 - d_gi over pairs
    sandwich_ok: bool               # both violations bounded by c_i
    monotone_violation: float       # max of d_ghat - d_gi over pairs (<= 0 ok)
    core_ratio_gi: float
    core_ratio_ghat: float
    boundary_to_core_ghat: float
    anisotropy_bound: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = dict(self.__dict__)
        d["details"] = dict(self.details)
        return d


def _sample_pairs(model: TubeModel, count: int, rng: np.random.Generator):
    """Interior node pairs: random sources/targets plus a structured block.

    The structured nodes pin down the directions where the models differ
    most cleanly (radial lines, where the drawstring's extra radial length
    shows up without any grid zigzag, and through-core antipodes); random
    pairs cover the rest of the tube.
    """
    n_r, n_th, n_t = model.grid
    n_src = max(4, count // 10)
    n_tgt = -(-count // n_src)

    def draw(n):
        j = rng.integers(0, n_r - 1, size=n)
        k = rng.integers(0, n_th, size=n)
        m = rng.integers(0, n_t, size=n)
        return np.array([model.node_index(int(a), int(b), int(c))
                         for a, b, c in zip(j, k, m)])

    structured = [
        model.node_index(0, 0, 0),
        model.node_index(n_r - 2, 0, 0),                # radial partner
        model.node_index(n_r - 2, n_th // 2, 0),        # through-core antipode
        model.node_index(0, 0, n_t // 2),
        model.node_index(n_r - 2, 0, n_t // 2),
    ]
    sources = np.concatenate([structured, draw(n_src)])
    targets = np.concatenate([structured, draw(n_tgt)])
    return sources, targets


def verify_squeeze_claims(models: Tuple[TubeModel, TubeModel, TubeModel],
                          sample_count: int = 200, seed: int = 0) -> DistanceReport:
    """Distance comparisons between the three models on sampled pairs.

    The realized constant c_i is the measured per-crossing projection cost,
    2 * max over boundary points p of d_{gi}(p, pi(p)): this is the
    quantity the distance-comparison argument consumes per tube entry (its
    a-priori version is the 100*r0 bound), it shrinks with the tube, and
    the sampled sandwich d_gi in [d0/2 - c_i, d0 + c_i] is checked against
    it directly.
    """
    g0, ghat, gi = models
    rng = np.random.default_rng(seed)
    sources, targets = _sample_pairs(g0, sample_count, rng)

    d0 = g0.distances_from(sources)[:, targets]
    dh = ghat.distances_from(sources)[:, targets]
    dg = gi.distances_from(sources)[:, targets]

    if not (np.all(np.isfinite(d0)) and np.all(np.isfinite(dh))
            and np.all(np.isfinite(dg))):
        raise GridError("grid is disconnected at this resolution")

    mono = float(np.max(dh - dg))
    c_upper = float(np.max(dg - d0))
    c_lower = float(np.max(0.5 * d0 - dg))

    # realized crossing cost: boundary ring sample to own projections
    n_r, n_th, n_t = g0.grid
    bnodes = [gi.node_index(n_r - 1, k, m)
              for k in range(0, n_th, max(1, n_th // 8))
              for m in range(0, n_t, max(1, n_t // 8))]
    dist_b = gi.distances_from(bnodes)[:, :n_t]
    # projection target of (s0, theta, t_m) is the core node at t_m
    proj_cost = 0.0
    col = 0
    for k in range(0, n_th, max(1, n_th // 8)):
        for m in range(0, n_t, max(1, n_t // 8)):
            proj_cost = max(proj_cost, float(dist_b[col, m]))
            col += 1
    c_i = 2.0 * proj_cost

    # boundary-to-core under ghat
    bsrc = ghat.node_index(n_r - 1, 0, 0)
    b2c = float(np.min(ghat.distances_from([bsrc])[0, :n_t]))

    report = DistanceReport(
        i=g0.meta.get("i", 0),
        pairs=int(d0.size),
        c_i=c_i,
        c_upper=c_upper,
        c_lower=c_lower,
        sandwich_ok=bool(c_upper <= c_i and c_lower <= c_i),
        monotone_violation=mono,
        core_ratio_gi=core_length(gi) / core_length(g0),
        core_ratio_ghat=core_length(ghat) / core_length(g0),
        boundary_to_core_ghat=b2c,
        anisotropy_bound=stencil_anisotropy_bound(g0),
        details={
            "r0": g0.meta.get("r0"),
            "median_d0": float(np.median(d0)),
            "max_d0": float(np.max(d0)),
            "seed": seed,
        },
    )
    return report
