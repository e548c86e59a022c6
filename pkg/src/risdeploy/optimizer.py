"""Deployment optimizer: orientation search, sizing and Nelder-Mead placement.

The placement problem minimizes the size-to-coverage sum ratio
E = sum_n A_n / A_n^cov. For fixed positions, the inner problem factors into
closed forms: per-RIS constraint constants c_n from the communication and
sensing thresholds, a KKT power split across RISs, and the panel area
A_n = sqrt(c_n) A_u M_ref / sqrt(omega_n). The outer loop is a standard
Nelder-Mead simplex over 2-D mounting-patch coordinates, one (u, v) pair per
RIS, with out-of-patch proposals projected back.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arrays import Orientation, OrientationBounds
from .channel import (PANEL_FOV_RAD, LinkBudget, effective_ris_gain,
                      unit_cell_amplitude_gain)
from .errors import (InfeasiblePowerError, InvalidInputError, NoPathError,
                     UnobservablePathError, UnreachableTargetsError)
from .propagation import PropagationConfig, dominant_path_between, fspl_amplitude
from .ris_bf import quantization_efficiency
from .sensing import CrbPair, OfdmParams, SensingPath, WaveformMoments, fim
from .units import SPEED_OF_LIGHT, db2lin


@dataclass(frozen=True)
class QosThresholds:
    snr_threshold: float  # linear
    range_crb_max: float  # m^2
    velocity_crb_max: float  # (m/s)^2

    def __post_init__(self):
        if min(self.snr_threshold, self.range_crb_max, self.velocity_crb_max) <= 0:
            raise InvalidInputError("QoS thresholds must be positive")


@dataclass(frozen=True)
class ConstraintConstants:
    c1: float
    c2: float
    c3: float

    @property
    def c_max(self) -> float:
        return max(self.c1, self.c2, self.c3)


def constraint_constants(gamma_ref_worst: float, crb_ref: CrbPair,
                         thresholds: QosThresholds, beta: float) -> ConstraintConstants:
    """Per-RIS normalized constraint constants for a candidate beta split.

    c1 compares the SNR threshold to the worst reference SNR over the RIS's
    UE cells; c2/c3 compare the reference range/velocity CRBs to their caps.
    """
    if not (0.0 < beta < 1.0):
        raise InvalidInputError("beta must be strictly inside (0, 1)")
    if gamma_ref_worst <= 0:
        raise InvalidInputError("reference SNR must be positive")
    return ConstraintConstants(
        c1=thresholds.snr_threshold / (beta * gamma_ref_worst),
        c2=crb_ref.range_crb / ((1.0 - beta) * thresholds.range_crb_max),
        c3=crb_ref.velocity_crb / ((1.0 - beta) * thresholds.velocity_crb_max),
    )


def kkt_power_allocation(c, cov_areas, omega0: float) -> np.ndarray:
    """Optimal BS power split across RISs for the sizing objective.

    omega_n proportional to (sqrt(c_n) / (2 A_n^cov))^(2/3), rescaled to sum
    to 1 - omega0 (the remainder of the power after the direct sensing beam).
    """
    c = np.asarray(c, dtype=float)
    areas = np.asarray(cov_areas, dtype=float)
    if c.shape != areas.shape or c.ndim != 1 or c.size == 0:
        raise InvalidInputError("c and cov_areas must be equal-length 1-D arrays")
    if np.any(c <= 0) or np.any(areas <= 0):
        raise InvalidInputError("constraint constants and areas must be positive")
    if not (0.0 <= omega0 < 1.0):
        raise InfeasiblePowerError(f"omega0 = {omega0} leaves no power for the RIS beams")
    w = (np.sqrt(c) / (2.0 * areas)) ** (2.0 / 3.0)
    return w / np.sum(w) * (1.0 - omega0)


@dataclass(frozen=True)
class RisSize:
    area: float  # m^2
    side: float  # m
    cells_per_side: int

    @property
    def cell_count(self) -> int:
        return self.cells_per_side**2


def ris_size(c_max: float, omega: float, cell_area: float, m_ref: int,
             spacing: float) -> RisSize:
    "Panel area sqrt(c) A_u M_ref / sqrt(omega), square side, cell grid."
    if c_max <= 0 or cell_area <= 0 or m_ref < 1 or spacing <= 0:
        raise InvalidInputError("c_max, cell_area, m_ref, spacing must be positive")
    if omega <= 0:
        raise InfeasiblePowerError("zero power share leaves the panel unbounded")
    area = np.sqrt(c_max) * cell_area * m_ref / np.sqrt(omega)
    side = float(np.sqrt(area))
    return RisSize(area=float(area), side=side,
                   cells_per_side=int(np.ceil(side / spacing)))


def _axis_grid(bounds: OrientationBounds, step: float):
    "Panel-normal direction vectors over a (theta_r, psi_r) grid (cached)."
    return _axis_grid_cached(round(bounds.theta_low, 12), round(bounds.theta_high, 12),
                             round(bounds.psi_low, 12), round(bounds.psi_high, 12),
                             round(step, 15))


@lru_cache(maxsize=64)
def _axis_grid_cached(theta_low, theta_high, psi_low, psi_high, step):
    thetas = np.arange(theta_low, theta_high + step / 2, step)
    psis = np.arange(psi_low, psi_high + step / 2, step)
    tg, pg = np.meshgrid(thetas, psis, indexing="ij")
    axes = np.stack([np.cos(pg) * np.cos(tg), np.sin(pg) * np.cos(tg), -np.sin(tg)],
                    axis=-1)
    return thetas, psis, axes.reshape(-1, 3), tg.ravel(), pg.ravel()


_COS_FOV = float(np.cos(PANEL_FOV_RAD))


def _orientation_score(axes: np.ndarray, u_bs, u_ue, u_uav) -> np.ndarray:
    """Worst-target cosine product; positive only when the BS, every UE cell
    and every UAV cell sit inside the panel field of view. The sizing is
    driven by the worst cell, so the worst-case product is the surrogate."""
    n_ue = len(u_ue)
    targets = np.vstack([u_bs[None, :], u_ue] if u_uav is None or not len(u_uav)
                        else [u_bs[None, :], u_ue, u_uav])
    cos = axes @ targets.T  # (n_axes, 1 + n_ue [+ n_uav])
    cos *= cos > _COS_FOV  # outside the panel field of view counts as zero
    score = cos[:, 0] * np.min(cos[:, 1:n_ue + 1], axis=1)
    if targets.shape[0] > n_ue + 1:
        score *= np.min(cos[:, n_ue + 1:], axis=1)
    return score


def orientation_search(ris_pos, bs_pos, ue_centers, uav_centers,
                       bounds: OrientationBounds, step: float = np.deg2rad(1.0)) -> Orientation:
    """Orientation maximizing the average boresight-cosine product.

    Grid search at `step` resolution over the bounds, then a 20x finer pass
    in a +-1.5 step window around the coarse optimum. Back-side directions
    contribute zero.
    """
    p = np.asarray(ris_pos, dtype=float)

    def unit_rows(points):
        d = np.asarray(points, dtype=float).reshape(-1, 3) - p
        n = np.linalg.norm(d, axis=1, keepdims=True)
        if np.any(n < 1e-9):
            raise InvalidInputError("target coincides with the RIS position")
        return d / n

    u_bs = unit_rows(bs_pos)[0]
    u_ue = unit_rows(ue_centers)
    u_uav = unit_rows(uav_centers) if uav_centers is not None and len(uav_centers) else None
    _, _, axes, tg, pg = _axis_grid(bounds, step)
    score = _orientation_score(axes, u_bs, u_ue, u_uav)
    best = int(np.argmax(score))
    if score[best] <= 0.0:
        raise UnreachableTargetsError("no orientation sees the BS and any target")
    window = 1.5 * step
    fine = OrientationBounds(
        max(bounds.theta_low, tg[best] - window), min(bounds.theta_high, tg[best] + window),
        max(bounds.psi_low, pg[best] - window), min(bounds.psi_high, pg[best] + window))
    _, _, axes_f, tg_f, pg_f = _axis_grid(fine, step / 20.0)
    score_f = _orientation_score(axes_f, u_bs, u_ue, u_uav)
    best_f = int(np.argmax(score_f))
    return Orientation(float(tg_f[best_f]), float(pg_f[best_f]))


@dataclass(frozen=True)
class OptimizerContext:
    """Immutable inputs shared by every placement evaluation."""

    scene: object
    regions: list  # N DeployableRegion
    ue_grid: object
    uav_grid: object
    link: LinkBudget
    prop: PropagationConfig
    thresholds: QosThresholds
    ofdm: OfdmParams
    moments: WaveformMoments
    bs_array_size: int = 16
    bs_gain_dbi: float = 3.0
    efficiency: float = 0.3
    bits: int = 2
    ref_cells_per_side: int = 20
    rcs: float = 0.04
    mode: str = "full-isac"
    beta_grid: tuple = tuple(np.round(np.arange(0.1, 0.95, 0.1), 3))
    orientation_step: float = np.deg2rad(1.0)
    theta_limit: float = np.deg2rad(60.0)
    psi_halfwidth: float = np.deg2rad(85.0)
    d_min: float = 0.3
    max_iterations: int = 500
    size_margin_db: float = 1.0  # sizing headroom so synthesis meets QoS
    size_cap: float = 20.0  # largest mountable panel side, meters
    omega0_margin_db: float = 6.0  # direct-beam headroom over the bare CRB need

    @property
    def wavelength(self) -> float:
        return self.ofdm.wavelength

    @property
    def cell_spacing(self) -> float:
        return self.wavelength / 2.0

    @property
    def cell_area(self) -> float:
        return self.cell_spacing**2

    @property
    def m_ref(self) -> int:
        return self.ref_cells_per_side**2

    @property
    def ref_area(self) -> float:
        return self.cell_area * self.m_ref

    @property
    def bs_amp_gain(self) -> float:
        "Amplitude gain of the matched-beamformed BS array."
        return float(np.sqrt(self.bs_array_size * db2lin(self.bs_gain_dbi)))

    @property
    def rcs_amp(self) -> float:
        "Scatter amplitude inserted between the two FSPL legs of a bounce."
        return float(np.sqrt(4.0 * np.pi * self.rcs) / self.wavelength)

    @property
    def quant_eff(self) -> float:
        return quantization_efficiency(self.bits)

    def region_bounds(self, region) -> OrientationBounds:
        "C4 orientation bounds: near the face normal, limited tilt."
        normal = region.normal()
        psi0 = float(np.arctan2(normal[1], normal[0]))
        return OrientationBounds(-self.theta_limit, self.theta_limit,
                                 psi0 - self.psi_halfwidth, psi0 + self.psi_halfwidth)


def reference_comm_snr(ctx: OptimizerContext, position, orientation: Orientation,
                       region) -> np.ndarray:
    """Reference per-UE-cell SNR of the M_ref panel at unit beta and omega.

    gamma_k = (P_t / sigma^2) q_L G_bs |a_b a_k|^2 G_eff(A_ref), with a_* the
    dominant-path amplitudes of the two legs and G_eff the aperture gain of
    the reference panel toward the two legs' departure directions.
    """
    p = np.asarray(position, dtype=float)
    path_b = dominant_path_between(ctx.scene, ctx.prop, p, ctx.scene.bs_position)
    cos_b = float(np.dot(path_b.depart_dir, _panel_axis(orientation)))
    out = np.zeros(len(region.covered_cells))
    base = (ctx.link.tx_power_w / ctx.link.noise_power_w * ctx.quant_eff
            * ctx.bs_amp_gain**2 * path_b.attenuation**2)
    for i, cell in enumerate(region.covered_cells):
        path_k = dominant_path_between(ctx.scene, ctx.prop, p, ctx.ue_grid.centers[cell])
        cos_k = float(np.dot(path_k.depart_dir, _panel_axis(orientation)))
        gain = effective_ris_gain(ctx.efficiency, np.arccos(np.clip(cos_b, -1, 1)),
                                  np.arccos(np.clip(cos_k, -1, 1)), ctx.ref_area,
                                  ctx.wavelength)
        out[i] = base * path_k.attenuation**2 * gain.value
    return out


def _panel_axis(o: Orientation) -> np.ndarray:
    t, s = o.theta_r, o.psi_r
    return np.array([np.cos(s) * np.cos(t), np.sin(s) * np.cos(t), -np.sin(t)])


def _ris_path_amplitude(ctx: OptimizerContext, position, orientation, uav_center) -> float:
    "One-way round-trip amplitude of the BS->RIS->UAV->BS reference path."
    p = np.asarray(position, dtype=float)
    bs = ctx.scene.bs_position
    d_b = float(np.linalg.norm(p - bs))
    d_u = float(np.linalg.norm(uav_center - p))
    d_bu = float(np.linalg.norm(uav_center - bs))
    axis = _panel_axis(orientation)
    cos_b = float(np.clip(np.dot((bs - p) / d_b, axis), 0.0, None))
    cos_u = float(np.clip(np.dot((uav_center - p) / d_u, axis), 0.0, None))
    lam = ctx.wavelength
    g_cells = (ctx.m_ref * np.sqrt(ctx.efficiency * ctx.quant_eff)
               * unit_cell_amplitude_gain(np.arccos(cos_b), ctx.cell_area, lam)
               * unit_cell_amplitude_gain(np.arccos(cos_u), ctx.cell_area, lam))
    return (ctx.bs_amp_gain**2 * fspl_amplitude(d_b, lam) * g_cells
            * fspl_amplitude(d_u, lam) * ctx.rcs_amp * fspl_amplitude(d_bu, lam))


def reference_sensing_crbs(ctx: OptimizerContext, position, orientation: Orientation) -> list:
    """Reference CRB pair per UAV cell at unit beta, omega and size scale."""
    out = []
    for center in ctx.uav_grid.centers:
        amp = _ris_path_amplitude(ctx, position, orientation, center)
        coeff = 2.0 * np.sqrt(ctx.link.tx_power_w) * amp
        d_round = float(np.linalg.norm(center - np.asarray(position))
                        + np.linalg.norm(center - ctx.scene.bs_position)
                        + np.linalg.norm(np.asarray(position) - ctx.scene.bs_position))
        path = SensingPath(index=1, delay=d_round / SPEED_OF_LIGHT, doppler=0.0,
                           coeff=coeff, carrier_hz=ctx.ofdm.carrier_hz)
        out.append(fim(ctx.ofdm, path, ctx.link.noise_psd_w_hz, ctx.moments))
    return out


def direct_sensing_crb(ctx: OptimizerContext, uav_center) -> CrbPair:
    "Reference CRB of the direct BS->UAV->BS path at full power."
    bs = ctx.scene.bs_position
    d = float(np.linalg.norm(np.asarray(uav_center) - bs))
    lam = ctx.wavelength
    amp = ctx.bs_amp_gain**2 * fspl_amplitude(d, lam) ** 2 * ctx.rcs_amp
    coeff = np.sqrt(ctx.link.tx_power_w) * amp
    path = SensingPath(index=0, delay=2.0 * d / SPEED_OF_LIGHT, doppler=0.0,
                       coeff=coeff, carrier_hz=ctx.ofdm.carrier_hz)
    return fim(ctx.ofdm, path, ctx.link.noise_psd_w_hz, ctx.moments)


def direct_power_share(ctx: OptimizerContext) -> float:
    """Smallest omega0 for which the direct beam meets both CRB caps at every
    UAV cell; zero in communication-only mode."""
    if ctx.mode == "comm-only":
        return 0.0
    worst = 0.0
    for center in ctx.uav_grid.centers:
        ref = direct_sensing_crb(ctx, center)
        worst = max(worst, ref.range_crb / ctx.thresholds.range_crb_max,
                    ref.velocity_crb / ctx.thresholds.velocity_crb_max)
    if worst >= 1.0:
        raise InfeasiblePowerError(
            f"direct sensing alone needs omega0 = {worst:.3f} >= 1")
    if worst == 0.0:
        return 0.0
    return float(min(worst * db2lin(ctx.omega0_margin_db), 0.5 * (1.0 + worst)))


@dataclass(frozen=True)
class Step1Result:
    objective: float
    positions: list  # N 3-vectors
    orientations: list  # N Orientation
    sizes: list  # N RisSize (max over UAV cells)
    beta_per_uav: np.ndarray  # (M_u, N)
    omega_per_uav: np.ndarray  # (M_u, N+1), column 0 = omega0
    c_per_uav: np.ndarray  # (M_u, N) chosen c_n
    gamma_ref: list  # N arrays of per-UE-cell reference SNR
    capped: list = None  # N bools: size clipped at the mounting cap


def _best_beta(ctx: OptimizerContext, gamma_worst: float, crb: CrbPair):
    "Beta in the grid minimizing c_n = max(c1, c2, c3) for one RIS/UAV cell."
    best = None
    for beta in ctx.beta_grid:
        cc = constraint_constants(gamma_worst, crb, ctx.thresholds, float(beta))
        if best is None or cc.c_max < best[1]:
            best = (float(beta), cc.c_max)
    return best


def step1_evaluate(positions, context: OptimizerContext, omega0: float | None = None) -> Step1Result:
    """Inner evaluation of Algorithm step 1 at fixed RIS positions.

    Orientation search per RIS, then per UAV cell the best beta split and the
    KKT power allocation; panel sizes take the worst (largest) UAV cell. The
    per-cell beta minimization is exact for the decoupled objective because E
    is monotone in the sum of the per-RIS KKT weights, each of which depends
    only on that RIS's own c_n.
    """
    n_ris = len(context.regions)
    if len(positions) != n_ris:
        raise InvalidInputError("one position per deployable region required")
    if omega0 is None:
        omega0 = direct_power_share(context)
    comm_only = context.mode == "comm-only"
    cov_areas = np.array([r.coverage_area for r in context.regions])
    orientations = []
    gamma_refs = []
    crb_refs = []
    for n, region in enumerate(context.regions):
        bounds = context.region_bounds(region)
        uav_centers = None if comm_only else context.uav_grid.centers
        if context.mode == "passive-orientation":
            normal = region.normal()
            orient = Orientation(0.0, float(np.arctan2(normal[1], normal[0])))
        else:
            orient = orientation_search(positions[n], context.scene.bs_position,
                                        context.ue_grid.centers[region.covered_cells],
                                        uav_centers, bounds, context.orientation_step)
        orientations.append(orient)
        try:
            gamma = reference_comm_snr(context, positions[n], orient, region)
        except Exception as exc:
            raise UnreachableTargetsError(
                f"RIS {n} at {np.round(positions[n], 2)}: {exc}") from exc
        if np.max(gamma) <= 0.0:
            raise UnreachableTargetsError(
                f"RIS {n} at {np.round(positions[n], 2)} reaches no UE cell")
        if np.min(gamma) <= 0.0 and context.mode != "passive-orientation":
            raise UnreachableTargetsError(
                f"RIS {n} at {np.round(positions[n], 2)} has a zero-SNR UE cell")
        gamma_refs.append(gamma)
        if comm_only:
            crb_refs.append(None)
        else:
            try:
                crb_refs.append(reference_sensing_crbs(context, positions[n], orient))
            except UnobservablePathError as exc:
                raise UnreachableTargetsError(
                    f"RIS {n} at {np.round(positions[n], 2)}: {exc}") from exc
    m_u = 1 if comm_only else len(context.uav_grid.centers)
    betas = np.zeros((m_u, n_ris))
    omegas = np.zeros((m_u, n_ris + 1))
    c_table = np.zeros((m_u, n_ris))
    for u in range(m_u):
        for n in range(n_ris):
            gamma = gamma_refs[n]
            gamma_worst = float(np.min(gamma[gamma > 0.0]))
            if comm_only:
                beta, c_n = 1.0, context.thresholds.snr_threshold / gamma_worst
            else:
                beta, c_n = _best_beta(context, gamma_worst, crb_refs[n][u])
            betas[u, n] = beta
            c_table[u, n] = c_n
        omega = kkt_power_allocation(c_table[u], cov_areas, omega0)
        omegas[u, 0] = omega0
        omegas[u, 1:] = omega
    sizes = []
    capped = []
    objective = 0.0
    margin = db2lin(context.size_margin_db)
    for n in range(n_ris):
        u_star = int(np.argmax(c_table[:, n] / omegas[:, n + 1]))
        size = ris_size(c_table[u_star, n] * margin, omegas[u_star, n + 1],
                        context.cell_area, context.m_ref, context.cell_spacing)
        if size.side > context.size_cap:
            side = context.size_cap
            size = RisSize(area=side**2, side=side,
                           cells_per_side=int(np.ceil(side / context.cell_spacing)))
            capped.append(True)
        else:
            capped.append(False)
        sizes.append(size)
        objective += size.area / cov_areas[n]
    return Step1Result(objective=float(objective),
                       positions=[np.asarray(p, dtype=float) for p in positions],
                       orientations=orientations, sizes=sizes, beta_per_uav=betas,
                       omega_per_uav=omegas, c_per_uav=c_table, gamma_ref=gamma_refs,
                       capped=capped)


@dataclass
class SimplexState:
    """Nelder-Mead simplex over per-RIS patch coordinates."""

    coords: np.ndarray  # (M_s + 1, 2N) patch (u, v) pairs
    objectives: np.ndarray  # (M_s + 1,)
    results: list  # Step1Result per vertex
    iteration: int = 0
    d_min: float = 0.3

    def order(self):
        idx = np.argsort(self.objectives, kind="stable")
        self.coords = self.coords[idx]
        self.objectives = self.objectives[idx]
        self.results = [self.results[i] for i in idx]

    def positions(self, vertex: int, regions) -> list:
        return [regions[n].point_at(self.coords[vertex, 2 * n], self.coords[vertex, 2 * n + 1])
                for n in range(len(regions))]

    def max_spread(self, regions) -> float:
        "Largest pairwise 3-D distance among vertices, per RIS, maximized."
        worst = 0.0
        pts = np.array([self.positions(v, regions) for v in range(self.coords.shape[0])])
        for n in range(len(regions)):
            p = pts[:, n, :]
            diff = p[:, None, :] - p[None, :, :]
            worst = max(worst, float(np.max(np.linalg.norm(diff, axis=-1))))
        return worst


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    best_objective: float
    mean_spread: float
    std_spread: float
    max_spread: float


@dataclass(frozen=True)
class OptimizationResult:
    positions: list
    orientations: list
    sizes: list
    beta_per_uav: np.ndarray
    omega_per_uav: np.ndarray
    objective: float
    trace: list
    converged: bool
    iterations: int
    mode: str
    patch_coords: np.ndarray
    step1: Step1Result = None


def _project(coords: np.ndarray, regions) -> np.ndarray:
    out = coords.copy()
    for n, region in enumerate(regions):
        u, v = region.clamp(coords[2 * n], coords[2 * n + 1])
        out[2 * n], out[2 * n + 1] = u, v
    return out


def initial_simplex(context: OptimizerContext, seed: int = 0,
                    n_vertices: int | None = None) -> SimplexState:
    "Random vertices inside the regions; M_s = 2N by default."
    n_ris = len(context.regions)
    if n_vertices is None:
        n_vertices = 2 * n_ris + 1
    rng = np.random.default_rng(seed)
    coords = np.zeros((n_vertices, 2 * n_ris))
    results = []
    objectives = np.zeros(n_vertices)
    omega0 = direct_power_share(context)
    for v in range(n_vertices):
        res = None
        for _ in range(50):  # resample until the vertex is evaluable
            for n, region in enumerate(context.regions):
                coords[v, 2 * n], coords[v, 2 * n + 1] = region.sample(rng)
            try:
                res = step1_evaluate(
                    [context.regions[n].point_at(coords[v, 2 * n], coords[v, 2 * n + 1])
                     for n in range(n_ris)], context, omega0)
                break
            except (UnreachableTargetsError, NoPathError):
                continue
        if res is None:
            raise UnreachableTargetsError(
                "could not sample an evaluable initial simplex vertex")
        objectives[v] = res.objective
        results.append(res)
    return SimplexState(coords=coords, objectives=objectives, results=results,
                        d_min=context.d_min)


def nelder_mead_run(initial: SimplexState, context: OptimizerContext) -> OptimizationResult:
    """Derivative-free simplex search over the mounting patches.

    Standard reflect (1), expand (2), contract (0.5) and shrink (0.5) steps;
    proposals leaving a patch are projected to its nearest point. Terminates
    when every RIS's vertices sit within d_min of each other, or at the
    iteration cap (flagged non-converged).
    """
    regions = context.regions
    omega0 = direct_power_share(context)

    def evaluate(coords):
        pts = [regions[n].point_at(coords[2 * n], coords[2 * n + 1])
               for n in range(len(regions))]
        try:
            res = step1_evaluate(pts, context, omega0)
        except (UnreachableTargetsError, NoPathError):
            return np.inf, None
        return res.objective, res

    state = initial
    state.order()
    trace = []
    converged = False
    for it in range(1, context.max_iterations + 1):
        state.iteration = it
        spreads = _per_ris_spreads(state, regions)
        trace.append(TraceRecord(iteration=it, best_objective=float(state.objectives[0]),
                                 mean_spread=float(np.mean(spreads)),
                                 std_spread=float(np.std(spreads)),
                                 max_spread=float(np.max(spreads))))
        if np.max(spreads) <= state.d_min:
            converged = True
            break
        centroid = np.mean(state.coords[:-1], axis=0)
        worst = state.coords[-1]
        refl = _project(centroid + 1.0 * (centroid - worst), regions)
        f_refl, r_refl = evaluate(refl)
        if f_refl < state.objectives[0]:
            exp = _project(centroid + 2.0 * (centroid - worst), regions)
            f_exp, r_exp = evaluate(exp)
            if f_exp < f_refl:
                _replace_worst(state, exp, f_exp, r_exp)
            else:
                _replace_worst(state, refl, f_refl, r_refl)
        elif f_refl < state.objectives[-2]:
            _replace_worst(state, refl, f_refl, r_refl)
        else:
            if f_refl < state.objectives[-1]:
                contract = _project(centroid + 0.5 * (refl - centroid), regions)
            else:
                contract = _project(centroid + 0.5 * (worst - centroid), regions)
            f_con, r_con = evaluate(contract)
            if f_con < min(state.objectives[-1], f_refl):
                _replace_worst(state, contract, f_con, r_con)
            else:  # shrink toward the best vertex
                for v in range(1, state.coords.shape[0]):
                    state.coords[v] = _project(
                        state.coords[0] + 0.5 * (state.coords[v] - state.coords[0]), regions)
                    f_v, r_v = evaluate(state.coords[v])
                    state.objectives[v] = f_v
                    state.results[v] = r_v
        state.order()
    best = state.results[0]
    return OptimizationResult(positions=best.positions, orientations=best.orientations,
                              sizes=best.sizes, beta_per_uav=best.beta_per_uav,
                              omega_per_uav=best.omega_per_uav,
                              objective=float(state.objectives[0]), trace=trace,
                              converged=converged, iterations=state.iteration,
                              mode=context.mode, patch_coords=state.coords[0].copy(),
                              step1=best)


def _per_ris_spreads(state: SimplexState, regions) -> np.ndarray:
    pts = np.array([state.positions(v, regions) for v in range(state.coords.shape[0])])
    spreads = []
    for n in range(len(regions)):
        p = pts[:, n, :]
        diff = p[:, None, :] - p[None, :, :]
        spreads.append(float(np.max(np.linalg.norm(diff, axis=-1))))
    return np.asarray(spreads)


def _replace_worst(state: SimplexState, coords, objective, result):
    state.coords[-1] = coords
    state.objectives[-1] = objective
    state.results[-1] = result


def pathloss_baseline(context: OptimizerContext, samples: int = 64,
                      seed: int = 0) -> OptimizationResult:
    """Comparison baseline: place each RIS at the patch point minimizing the
    summed free-space path loss to the BS and its covered UE cells, then run
    the step-1 evaluation once at those positions."""
    rng = np.random.default_rng(seed)
    coords = np.zeros(2 * len(context.regions))
    for n, region in enumerate(context.regions):
        cells = context.ue_grid.centers[region.covered_cells]
        best_uv, best_cost = None, np.inf
        for _ in range(samples):
            u, v = region.sample(rng)
            p = region.point_at(u, v)
            cost = np.linalg.norm(p - context.scene.bs_position) ** 2
            cost = cost + float(np.mean(np.linalg.norm(cells - p, axis=1) ** 2))
            if cost < best_cost:
                best_uv, best_cost = (u, v), cost
        coords[2 * n], coords[2 * n + 1] = best_uv
    positions = [context.regions[n].point_at(coords[2 * n], coords[2 * n + 1])
                 for n in range(len(context.regions))]
    res = step1_evaluate(positions, context)
    return OptimizationResult(positions=res.positions, orientations=res.orientations,
                              sizes=res.sizes, beta_per_uav=res.beta_per_uav,
                              omega_per_uav=res.omega_per_uav, objective=res.objective,
                              trace=[], converged=True, iterations=0,
                              mode=context.mode, patch_coords=coords, step1=res)
