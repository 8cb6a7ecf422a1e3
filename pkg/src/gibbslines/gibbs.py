"""Conditional resampling engine for Boltzmann-reweighted bridge ensembles.

A block of curves on a sub-interval, given entrance/exit values and the
curves (or infinite sentinels) directly above and below, is distributed as
independent Brownian bridges reweighted by

    W = exp( - sum_pairs integral over the interval of H(lower - upper) du )

where the pair sum runs over (upper boundary, curve 1), all adjacent curve
pairs, and (curve k, lower boundary); infinite sentinels drop their term.
W lies in (0, 1] and Z = E_free[W] normalizes the conditional law.

The off-window variant integrates only over [a, a'] union [b', b]; it is used
by estimators that leave the middle window unweighted.

For the hard ordering Hamiltonian, estimators can replace the grid-level
ordering indicator with the exact per-segment non-crossing probability of the
(gap) bridge between grid points, which removes the O(sqrt(spacing)) grid
bias exactly as in bridge_analytics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bridge_analytics import segment_log_survival
from .bridge_sampler import bridge_batch, free_ensemble_batch
from .core import (
    BoundaryData,
    Curve,
    Grid,
    Hamiltonian,
    LineEnsemble,
    McEstimate,
    OrderedHamiltonian,
    boundary_values,
)
from .errors import (
    GridMismatch,
    InvalidInterval,
    LengthMismatch,
    OrderViolationInput,
    RejectionBudgetExhausted,
)


@dataclass(frozen=True)
class ConditionalSpec:
    """Everything defining one conditional block: curve range, interval,
    boundary data, Hamiltonian, and an optional unweighted middle window."""

    k1: int
    k2: int
    interval: tuple[float, float]
    boundary: BoundaryData
    hamiltonian: Hamiltonian
    window: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < self.k1:
            raise LengthMismatch(f"bad curve range {self.k1}..{self.k2}")
        if self.boundary.k != self.k2 - self.k1 + 1:
            raise LengthMismatch(
                f"boundary holds {self.boundary.k} curves, block needs {self.k2 - self.k1 + 1}"
            )
        a, b = self.interval
        if not b > a:
            raise InvalidInterval(f"interval must satisfy a < b, got {self.interval}")
        if self.window is not None:
            ap, bp = self.window
            if not (a < ap < bp < b):
                raise InvalidInterval(
                    f"window {self.window} must sit strictly inside {self.interval}"
                )

    @property
    def n_curves(self) -> int:
        return self.k2 - self.k1 + 1


@dataclass(frozen=True)
class StoppingDomain:
    """A resampling interval located by first-hitting scans, with hit flags."""

    left: float
    right: float
    hit_left: bool
    hit_right: bool


def _slice_indices(grid: Grid, spec: ConditionalSpec) -> tuple[int, int]:
    a, b = spec.interval
    return grid.index_of(a), grid.index_of(b)


def _integration_columns(pts: np.ndarray, grid: Grid, spec: ConditionalSpec, ia: int):
    """Column index ranges (into the interval slice) that carry weight."""
    if spec.window is None:
        return [(0, pts.shape[0] - 1)]
    ap, bp = spec.window
    ja = grid.index_of(ap) - ia
    jb = grid.index_of(bp) - ia
    return [(0, ja), (jb, pts.shape[0] - 1)]


def _stack_with_boundaries(
    batch: np.ndarray, upper_vals: np.ndarray, lower_vals: np.ndarray
) -> np.ndarray:
    size, k, m = batch.shape
    stacked = np.empty((size, k + 2, m))
    stacked[:, 0, :] = upper_vals
    stacked[:, 1 : k + 1, :] = batch
    stacked[:, k + 1, :] = lower_vals
    return stacked


def _log_weight_batch(
    batch: np.ndarray,
    pts: np.ndarray,
    upper_vals: np.ndarray,
    lower_vals: np.ndarray,
    h: Hamiltonian,
    columns,
    crossing_correction: bool,
) -> np.ndarray:
    """Log Boltzmann weight of each ensemble in the batch, shape (size,)."""
    stacked = _stack_with_boundaries(batch, upper_vals, lower_vals)
    k = batch.shape[1]
    if isinstance(h, OrderedHamiltonian) and crossing_correction:
        return _log_ordered_survival_batch(stacked, pts, upper_vals, lower_vals, columns)
    # gap convention: lower row minus upper row; ordered configurations are negative
    gaps = stacked[:, 1:, :] - stacked[:, :-1, :]
    integrand = h.integrand(gaps).sum(axis=1)
    total = np.zeros(batch.shape[0])
    for j0, j1 in columns:
        total += np.trapezoid(integrand[:, j0 : j1 + 1], x=pts[j0 : j1 + 1], axis=1)
    return -total


def _log_ordered_survival_batch(stacked, pts, upper_vals, lower_vals, columns):
    """Sum of exact per-segment non-crossing log probabilities for every pair.

    Adjacent random curves have a gap process with diffusion parameter 2; a
    curve against a deterministic boundary curve has parameter 1. Sentinel
    boundaries contribute nothing.
    """
    size, rows, _ = stacked.shape
    k = rows - 2
    dt = np.diff(pts)
    out = np.zeros(size)
    for i in range(k + 1):
        hi = stacked[:, i, :]
        lo = stacked[:, i + 1, :]
        if i == 0:
            if not np.isfinite(upper_vals).any():
                continue
            sigma2 = 1.0
        elif i == k:
            if not np.isfinite(lower_vals).any():
                continue
            sigma2 = 1.0
        else:
            sigma2 = 2.0
        d = hi - lo  # positive where ordered
        for j0, j1 in columns:
            seg = segment_log_survival(
                d[:, j0:j1], d[:, j0 + 1 : j1 + 1], 1.0, sigma2 * dt[j0:j1]
            )
            out += seg.sum(axis=1)
    return out


def log_boltzmann_weight(
    ens: LineEnsemble, spec: ConditionalSpec, crossing_correction: bool = False
) -> float:
    """Log weight of one ensemble; 0 means weight 1, -inf means forbidden.

    The ensemble must hold exactly the block curves on `spec.interval`
    (its grid spans that interval, boundary curves live on the same grid).
    """
    if ens.k != spec.n_curves:
        raise LengthMismatch(f"ensemble has {ens.k} curves, spec wants {spec.n_curves}")
    grid = ens.grid
    ia, ib = grid.index_of(spec.interval[0]), grid.index_of(spec.interval[1])
    pts = grid.points[ia : ib + 1]
    upper = boundary_values(spec.boundary.upper, grid, ia, ib)
    lower = boundary_values(spec.boundary.lower, grid, ia, ib)
    columns = _integration_columns(pts, grid, spec, ia)
    lw = _log_weight_batch(
        ens.curves[None, :, ia : ib + 1], pts, upper, lower,
        spec.hamiltonian, columns, crossing_correction,
    )
    return float(lw[0])


def _prepared_slice(spec: ConditionalSpec, grid: Grid):
    ia, ib = _slice_indices(grid, spec)
    if ib - ia < 1:
        raise InvalidInterval("interval spans fewer than two grid points")
    pts = grid.points[ia : ib + 1]
    upper = boundary_values(spec.boundary.upper, grid, ia, ib)
    lower = boundary_values(spec.boundary.lower, grid, ia, ib)
    columns = _integration_columns(pts, grid, spec, ia)
    return ia, ib, pts, upper, lower, columns


def estimate_Z(
    spec: ConditionalSpec,
    grid: Grid,
    n: int,
    seed: int,
    crossing_correction: bool = True,
    batch: int = 5000,
) -> McEstimate:
    """MC estimate of the conditional normalizer Z = E_free[W] in (0, 1]."""
    ia, ib, pts, upper, lower, columns = _prepared_slice(spec, grid)
    rng = np.random.default_rng(seed)
    weights = []
    done = 0
    while done < n:
        m = min(batch, n - done)
        cand = free_ensemble_batch(pts, spec.boundary.x_vec, spec.boundary.y_vec, rng, m)
        lw = _log_weight_batch(cand, pts, upper, lower, spec.hamiltonian, columns, crossing_correction)
        weights.append(np.exp(lw))
        done += m
    return McEstimate.from_samples(np.concatenate(weights), seed)


def sample_conditional(
    spec: ConditionalSpec,
    grid: Grid,
    rng: np.random.Generator,
    budget: int = 10**6,
    crossing_correction: bool = True,
    batch: int = 32,
) -> tuple[LineEnsemble, int]:
    """Exact conditional draw by candidate/accept; returns (block, attempts).

    Candidates are free ensembles; a candidate with log weight lw is accepted
    when log U <= lw. The attempt count is geometric with mean 1/Z, so tiny
    normalizers exhaust the budget and raise instead of looping forever.
    """
    ia, ib, pts, upper, lower, columns = _prepared_slice(spec, grid)
    sub_grid = Grid(float(pts[0]), float(pts[-1]), pts.shape[0])
    done = 0
    while done < budget:
        m = min(batch, budget - done)
        cand = free_ensemble_batch(pts, spec.boundary.x_vec, spec.boundary.y_vec, rng, m)
        lw = _log_weight_batch(cand, pts, upper, lower, spec.hamiltonian, columns, crossing_correction)
        logu = np.log(rng.random(m))
        accepted = np.flatnonzero(logu <= lw)
        if accepted.size:
            idx = int(accepted[0])
            return LineEnsemble(sub_grid, cand[idx]), done + idx + 1
        done += m
    raise RejectionBudgetExhausted(budget, f"block {spec.k1}..{spec.k2} on {spec.interval}")


def mcmc_sweep(
    state: LineEnsemble,
    outer: BoundaryData,
    h: Hamiltonian,
    rng: np.random.Generator,
    block: tuple[int, int, float, float],
    budget: int = 10**6,
    crossing_correction: bool = True,
) -> LineEnsemble:
    """Replace one block (curve range, sub-interval) by an exact conditional draw.

    Boundary data for the block is read from the current state: entrance and
    exit values at the sub-interval ends, and the neighbor curves (or the
    outer boundary) above and below. A systematic scan over a covering list
    of blocks makes one full sweep.
    """
    i1, i2, a, b = block
    if not (1 <= i1 <= i2 <= state.k):
        raise LengthMismatch(f"block curves {i1}..{i2} outside 1..{state.k}")
    grid = state.grid
    ia, ib = grid.index_of(a), grid.index_of(b)
    if outer.k != state.k:
        raise LengthMismatch("outer boundary data must describe every curve of the state")
    upper = Curve(grid, state.curves[i1 - 2]) if i1 >= 2 else outer.upper
    lower = Curve(grid, state.curves[i2]) if i2 <= state.k - 1 else outer.lower
    sub_boundary = BoundaryData(
        x_vec=state.curves[i1 - 1 : i2, ia],
        y_vec=state.curves[i1 - 1 : i2, ib],
        upper=upper,
        lower=lower,
    )
    sub_spec = ConditionalSpec(
        k1=i1, k2=i2, interval=(a, b), boundary=sub_boundary, hamiltonian=h
    )
    draw, _ = sample_conditional(
        sub_spec, grid, rng, budget=budget, crossing_correction=crossing_correction
    )
    new_curves = state.curves.copy()
    new_curves[i1 - 1 : i2, ia : ib + 1] = draw.curves
    return LineEnsemble(grid, new_curves)


def run_block_sweeps(
    state: LineEnsemble,
    outer: BoundaryData,
    h: Hamiltonian,
    rng: np.random.Generator,
    blocks,
    n_sweeps: int,
    budget: int = 10**6,
    crossing_correction: bool = True,
) -> LineEnsemble:
    """n_sweeps systematic scans over the given block list."""
    for _ in range(n_sweeps):
        for block in blocks:
            state = mcmc_sweep(
                state, outer, h, rng, block, budget=budget,
                crossing_correction=crossing_correction,
            )
    return state


def first_hitting_domain(
    curve: Curve,
    level: float,
    left_search: tuple[float, float],
    right_search: tuple[float, float],
) -> StoppingDomain:
    """Scan for the level from the outside in; values >= level count as hits.

    Left scan: the returned point is the last grid point strictly below the
    level before the first hit inside [l0, l1]; right scan mirrors this on
    [r0, r1]. When the level is hit immediately (at l0 or r1) the sentinel is
    that endpoint with the hit flag true; when it is never hit inside a search
    window, the sentinel is the outer endpoint with the hit flag false.
    """
    grid = curve.grid
    l0, l1 = left_search
    r0, r1 = right_search
    il0, il1 = grid.index_of(l0), grid.index_of(l1)
    ir0, ir1 = grid.index_of(r0), grid.index_of(r1)
    if not (il0 < il1 <= ir0 < ir1):
        raise InvalidInterval(
            f"search windows must be ordered: {left_search} then {right_search}"
        )
    vals = curve.values
    pts = grid.points

    left_hits = np.flatnonzero(vals[il0 : il1 + 1] >= level)
    if left_hits.size == 0:
        left, hit_left = float(pts[il0]), False
    else:
        j = il0 + int(left_hits[0])
        left, hit_left = float(pts[max(j - 1, il0)]), True

    right_hits = np.flatnonzero(vals[ir0 : ir1 + 1] >= level)
    if right_hits.size == 0:
        right, hit_right = float(pts[ir1]), False
    else:
        j = ir0 + int(right_hits[-1])
        right, hit_right = float(pts[min(j + 1, ir1)]), True

    return StoppingDomain(left=left, right=right, hit_left=hit_left, hit_right=hit_right)


# ---------------------------------------------------------------------------
# Single-site heat bath and the monotone coupling built on shared uniforms.
# ---------------------------------------------------------------------------

LATTICE_POINTS = 1024
TAIL_MASS = 1e-12
LATTICE_HALF_WIDTH = 8.0  # in units of the free conditional standard deviation


def _site_gaussian(pts: np.ndarray, j: int):
    dt0 = pts[j] - pts[j - 1]
    dt1 = pts[j + 1] - pts[j]
    w1 = dt0 / (dt0 + dt1)
    sigma = math.sqrt(dt0 * dt1 / (dt0 + dt1))
    trap = 0.5 * (dt0 + dt1)  # quadrature mass carried by this site
    return w1, sigma, trap


def _site_log_density(vs, mu, sigma, above, below, trap, h: Hamiltonian):
    # vs (B, m); mu/above/below (B, 1)
    logd = -0.5 * ((vs - mu) / sigma) ** 2
    pen = h.integrand(vs - above) + h.integrand(below - vs)
    return logd - trap * pen


def _normalized_cdfs(log_dens_list):
    """Shared-lattice trapezoid CDFs in [0, 1] for each density; None on failure."""
    cdfs = []
    for logd in log_dens_list:
        peak = logd.max(axis=1, keepdims=True)
        if not np.isfinite(peak).all():
            return None
        d = np.exp(logd - peak)
        cells = 0.5 * (d[:, 1:] + d[:, :-1])
        c = np.concatenate([np.zeros((d.shape[0], 1)), np.cumsum(cells, axis=1)], axis=1)
        total = c[:, -1:]
        if (total <= 0).any():
            return None
        cdfs.append(c / total)
    return cdfs


def _edge_mass_bad(cdfs):
    bad = np.zeros(cdfs[0].shape[0], dtype=bool)
    for c in cdfs:
        bad |= c[:, 1] > TAIL_MASS
        bad |= (1.0 - c[:, -2]) > TAIL_MASS
    return bad


def _invert_cdf(vs, cdf, u):
    target = u[:, None]
    idx = (cdf < target).sum(axis=1)
    idx = np.clip(idx, 1, cdf.shape[1] - 1)
    rows = np.arange(cdf.shape[0])
    c0 = cdf[rows, idx - 1]
    c1 = cdf[rows, idx]
    v0 = vs[rows, idx - 1]
    v1 = vs[rows, idx]
    frac = np.where(c1 > c0, (u - c0) / np.maximum(c1 - c0, 1e-300), 0.0)
    return v0 + np.clip(frac, 0.0, 1.0) * (v1 - v0)


def _site_draw(mu_list, sigma, above_list, below_list, trap, h, u, max_widen: int = 40):
    """Inverse-CDF draws for one or two states on one shared value lattice.

    mu_list/above_list/below_list hold (B,) arrays, one per state. The lattice
    spans all states' means plus LATTICE_HALF_WIDTH standard deviations and is
    widened until the relative mass in the outermost cells drops below
    TAIL_MASS (hard-wall Hamiltonians leave zero-density edges, which pass).
    """
    lo = np.minimum.reduce(mu_list) - LATTICE_HALF_WIDTH * sigma
    hi = np.maximum.reduce(mu_list) + LATTICE_HALF_WIDTH * sigma
    # a hard ordering window may sit away from the free mean: cover it
    for above in above_list:
        fin = np.isfinite(above)
        lo = np.where(fin, np.minimum(lo, np.where(fin, above, lo) - 2 * sigma), lo)
    for below in below_list:
        fin = np.isfinite(below)
        hi = np.where(fin, np.maximum(hi, np.where(fin, below, hi) + 2 * sigma), hi)
    base = np.linspace(0.0, 1.0, LATTICE_POINTS)
    for _ in range(max_widen):
        vs = lo[:, None] + (hi - lo)[:, None] * base[None, :]
        log_dens = [
            _site_log_density(vs, mu[:, None], sigma, ab[:, None], be[:, None], trap, h)
            for mu, ab, be in zip(mu_list, above_list, below_list)
        ]
        cdfs = _normalized_cdfs(log_dens)
        if cdfs is None:
            width = hi - lo
            lo = lo - 0.5 * width
            hi = hi + 0.5 * width
            continue
        bad = _edge_mass_bad(cdfs)
        if not bad.any():
            break
        span = hi - lo
        lo = np.where(bad, lo - 0.5 * span, lo)
        hi = np.where(bad, hi + 0.5 * span, hi)
    else:
        raise OrderViolationInput("site density never fit on the value lattice")
    if len(cdfs) == 2:
        # exact pointwise dominance; rounding may break it by an ulp, clamp
        cdfs[1] = np.minimum(cdfs[1], cdfs[0])
    draws = [_invert_cdf(vs, c, u) for c in cdfs]
    if isinstance(h, OrderedHamiltonian):
        # the density jumps at the ordering window edges; linear interpolation
        # inside the jump cell can leak outside the support, so project back
        # (clip is monotone in all three arguments, coupling order survives)
        draws = [
            np.clip(v, be, ab) for v, ab, be in zip(draws, above_list, below_list)
        ]
    return draws


def _boundary_row(boundary, grid: Grid) -> np.ndarray:
    return boundary_values(boundary, grid, 0, grid.n - 1)


def heat_bath_scan_batch(
    curves: np.ndarray,
    grid: Grid,
    outer: BoundaryData,
    h: Hamiltonian,
    u: np.ndarray,
) -> np.ndarray:
    """One systematic single-site scan of a (B, k, n) batch; u has shape (B, k, n-2).

    Site order: curves top to bottom, interior grid points left to right.
    Endpoint values stay pinned. Returns a new array.
    """
    batch, k, n = curves.shape
    pts = grid.points
    upper_row = _boundary_row(outer.upper, grid)
    lower_row = _boundary_row(outer.lower, grid)
    out = curves.copy()
    for i in range(k):
        above_all = out[:, i - 1, :] if i > 0 else np.broadcast_to(upper_row, (batch, n))
        below_all = out[:, i + 1, :] if i < k - 1 else np.broadcast_to(lower_row, (batch, n))
        for j in range(1, n - 1):
            w1, sigma, trap = _site_gaussian(pts, j)
            mu = (1.0 - w1) * out[:, i, j - 1] + w1 * out[:, i, j + 1]
            (v,) = _site_draw(
                [mu], sigma, [above_all[:, j]], [below_all[:, j]], trap, h, u[:, i, j - 1]
            )
            out[:, i, j] = v
    return out


def heat_bath_sweep(
    state: LineEnsemble, outer: BoundaryData, h: Hamiltonian, rng: np.random.Generator
) -> LineEnsemble:
    """One single-site heat-bath sweep of a full ensemble."""
    u = rng.random((1, state.k, state.grid.n - 2))
    new = heat_bath_scan_batch(state.curves[None], state.grid, outer, h, u)
    return LineEnsemble(state.grid, new[0])


def _check_pointwise_order(lo_vals, hi_vals, what: str):
    if np.any(lo_vals > hi_vals):
        raise OrderViolationInput(f"{what}: lower state exceeds upper state somewhere")


def _boundary_le(b_lo, b_hi, grid: Grid, what: str):
    lo_row = _boundary_row(b_lo, grid)
    hi_row = _boundary_row(b_hi, grid)
    # -inf <= anything and anything <= +inf hold automatically
    finite = np.isfinite(lo_row) & np.isfinite(hi_row)
    if np.any(lo_row[finite] > hi_row[finite]):
        raise OrderViolationInput(f"{what}: boundaries are not ordered")
    if np.any(np.isposinf(lo_row) & ~np.isposinf(hi_row)):
        raise OrderViolationInput(f"{what}: lower +inf above finite upper")
    if np.any(np.isneginf(hi_row) & ~np.isneginf(lo_row)):
        raise OrderViolationInput(f"{what}: upper -inf below finite lower")


def coupled_scan_batch(
    lo_curves: np.ndarray,
    hi_curves: np.ndarray,
    grid: Grid,
    outer_lo: BoundaryData,
    outer_hi: BoundaryData,
    h: Hamiltonian,
    u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One coupled scan: both states updated site by site from shared uniforms.

    For convex nondecreasing interactions the site conditionals are ordered by
    likelihood ratio in every conditioning value, so sharing the uniform
    through the inverse CDF preserves lo <= hi pointwise, exactly.
    """
    batch, k, n = lo_curves.shape
    pts = grid.points
    up_lo = _boundary_row(outer_lo.upper, grid)
    up_hi = _boundary_row(outer_hi.upper, grid)
    dn_lo = _boundary_row(outer_lo.lower, grid)
    dn_hi = _boundary_row(outer_hi.lower, grid)
    out_lo = lo_curves.copy()
    out_hi = hi_curves.copy()
    for i in range(k):
        above_lo = out_lo[:, i - 1, :] if i > 0 else np.broadcast_to(up_lo, (batch, n))
        above_hi = out_hi[:, i - 1, :] if i > 0 else np.broadcast_to(up_hi, (batch, n))
        below_lo = out_lo[:, i + 1, :] if i < k - 1 else np.broadcast_to(dn_lo, (batch, n))
        below_hi = out_hi[:, i + 1, :] if i < k - 1 else np.broadcast_to(dn_hi, (batch, n))
        for j in range(1, n - 1):
            w1, sigma, trap = _site_gaussian(pts, j)
            mu_lo = (1.0 - w1) * out_lo[:, i, j - 1] + w1 * out_lo[:, i, j + 1]
            mu_hi = (1.0 - w1) * out_hi[:, i, j - 1] + w1 * out_hi[:, i, j + 1]
            v_lo, v_hi = _site_draw(
                [mu_lo, mu_hi],
                sigma,
                [above_lo[:, j], above_hi[:, j]],
                [below_lo[:, j], below_hi[:, j]],
                trap,
                h,
                u[:, i, j - 1],
            )
            out_lo[:, i, j] = v_lo
            out_hi[:, i, j] = v_hi
    return out_lo, out_hi


def monotone_coupled_sweep(
    lo: LineEnsemble,
    hi: LineEnsemble,
    outer_lo: BoundaryData,
    outer_hi: BoundaryData,
    h: Hamiltonian,
    shared_rng: np.random.Generator,
) -> tuple[LineEnsemble, LineEnsemble]:
    """One coupled heat-bath sweep of an ordered pair of states.

    Preconditions: lo <= hi pointwise (including boundary data) and the
    Hamiltonian convex nondecreasing; the hard ordering wall is allowed when
    both states are strictly ordered, where its site conditionals are
    truncated Gaussians. Marginally each state evolves by the plain
    heat-bath kernel; jointly the order is preserved at every site.
    """
    if lo.grid != hi.grid:
        raise GridMismatch("coupled states must share a grid")
    _check_pointwise_order(lo.curves, hi.curves, "initial states")
    _boundary_le(outer_lo.upper, outer_hi.upper, lo.grid, "upper boundary")
    _boundary_le(outer_lo.lower, outer_hi.lower, lo.grid, "lower boundary")
    if np.any(outer_lo.x_vec > outer_hi.x_vec) or np.any(outer_lo.y_vec > outer_hi.y_vec):
        raise OrderViolationInput("entrance/exit data are not ordered")
    u = shared_rng.random((1, lo.k, lo.grid.n - 2))
    new_lo, new_hi = coupled_scan_batch(
        lo.curves[None], hi.curves[None], lo.grid, outer_lo, outer_hi, h, u
    )
    return LineEnsemble(lo.grid, new_lo[0]), LineEnsemble(hi.grid, new_hi[0])
