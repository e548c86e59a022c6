"""Mono-static OFDM radar pipeline.

Synthesizes echo frames over the subcarrier/symbol grid, forms the
range-velocity map by symbol-wise equalization and 2-D FFT processing,
detects peaks with a cell-averaging CFAR, and recovers the target position
from per-path ranges by Gauss-Newton least squares at a known flight height.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EstimationFailureError, InvalidInputError, UnsupportedDelayError
from .sensing import OfdmParams, OfdmWaveform
from .units import db2lin, lin2db


@dataclass(frozen=True)
class RangeVelocityMap:
    power_db: np.ndarray  # (Nc, M)
    range_axis: np.ndarray  # (Nc,) meters
    velocity_axis: np.ndarray  # (M,) m/s
    resolution: tuple  # (range m, velocity m/s)


@dataclass(frozen=True)
class PathDetection:
    range_est: float
    velocity_est: float
    power_db: float
    path_index_hypothesis: int = -1


@dataclass(frozen=True)
class DetectionReport:
    detections: list
    warning: str | None = None


def synthesize_returns(waveform: OfdmWaveform, paths: list, noise_psd: float = 0.0,
                       seed: int = 1) -> np.ndarray:
    """Received frequency-domain frame Y of shape (Nc, M).

    Y[p, m] = sum_n a_n exp(-j 2 pi f_p tau_n) exp(j 2 pi fD_n m T_sym) S[p, m]
    plus (optionally) white noise of power noise_psd * B per resource element.
    """
    params = waveform.params
    if not paths:
        raise InvalidInputError("at least one sensing path is required")
    tsym = params.symbol_duration
    for path in paths:
        if path.delay < 0 or path.delay >= tsym:
            raise UnsupportedDelayError(
                f"path delay {path.delay:.3e} s outside [0, T_sym={tsym:.3e})")
    nc, nm = params.subcarriers, params.symbols
    m_idx = np.arange(nm)
    y = np.zeros((nc, nm), dtype=complex)
    for path in paths:
        delay_phase = np.exp(-1j * 2.0 * np.pi * waveform.freqs * path.delay)
        doppler_phase = np.exp(1j * 2.0 * np.pi * path.doppler * m_idx * tsym)
        y += path.coeff * np.outer(delay_phase, doppler_phase)
    y *= waveform.grid
    if noise_psd > 0.0:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(noise_psd * params.bandwidth_hz / 2.0)
        y += sigma * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y


def range_velocity_map(received: np.ndarray, transmitted: np.ndarray,
                       ofdm: OfdmParams) -> RangeVelocityMap:
    """Equalize by the known symbols, IFFT over subcarriers, FFT over symbols."""
    received = np.asarray(received)
    transmitted = np.asarray(transmitted)
    nc, nm = ofdm.subcarriers, ofdm.symbols
    if received.shape != (nc, nm) or transmitted.shape != (nc, nm):
        raise InvalidInputError(f"frames must have shape ({nc}, {nm})")
    if np.any(np.abs(transmitted) < 1e-15):
        raise InvalidInputError("transmitted grid contains zero symbols")
    g = received / transmitted
    profile = np.fft.ifft(g, axis=0)  # delay peaks at bin tau * B
    rv = np.fft.fftshift(np.fft.fft(profile, axis=1), axes=1)
    power = np.abs(rv) ** 2
    power_db = lin2db(np.maximum(power, 1e-300))
    range_axis = np.arange(nc) * ofdm.range_resolution
    velocity_axis = (np.arange(nm) - nm // 2) * ofdm.velocity_resolution
    return RangeVelocityMap(power_db=power_db, range_axis=range_axis,
                            velocity_axis=velocity_axis,
                            resolution=(ofdm.range_resolution, ofdm.velocity_resolution))


def detect_paths(rv: RangeVelocityMap, expected: int, threshold_db: float = 12.0,
                 guard: int = 2, training: int = 8) -> DetectionReport:
    """Cell-averaging CFAR with a square training ring and peak grouping.

    A cell is declared when its power exceeds the training-ring mean by
    threshold_db and it is a local maximum in its 3x3 neighborhood. Returns the
    `expected` strongest detections; a shortfall is flagged as a warning, not
    an error. Estimates stay on the bin grid (no super-resolution).
    """
    if expected < 1:
        raise InvalidInputError("expected must be >= 1")
    power = db2lin(rv.power_db)
    outer = 2 * (guard + training) + 1
    inner = 2 * guard + 1
    sum_outer = ndimage.uniform_filter(power, size=outer, mode="wrap") * outer**2
    sum_inner = ndimage.uniform_filter(power, size=inner, mode="wrap") * inner**2
    noise = (sum_outer - sum_inner) / (outer**2 - inner**2)
    hits = power > db2lin(threshold_db) * np.maximum(noise, 0.0)
    local_max = power >= ndimage.maximum_filter(power, size=3, mode="wrap")
    peaks = np.argwhere(hits & local_max)
    detections = [
        PathDetection(range_est=float(rv.range_axis[i]),
                      velocity_est=float(rv.velocity_axis[j]),
                      power_db=float(rv.power_db[i, j]))
        for i, j in peaks
    ]
    detections.sort(key=lambda d: -d.power_db)
    detections = detections[:expected]
    warning = None
    if len(detections) < expected:
        warning = f"partial detection: {len(detections)} of {expected} paths found"
    return DetectionReport(detections=detections, warning=warning)


def associate_paths(detections: list, expected_ranges) -> list:
    "Tag each detection with the index of the nearest expected per-path range."
    expected_ranges = np.asarray(expected_ranges, dtype=float)
    out = []
    for det in detections:
        idx = int(np.argmin(np.abs(expected_ranges - det.range_est)))
        out.append(PathDetection(range_est=det.range_est, velocity_est=det.velocity_est,
                                 power_db=det.power_db, path_index_hypothesis=idx))
    return out


def _residuals(xy: np.ndarray, bs: np.ndarray, ris: np.ndarray, ranges: np.ndarray,
               height: float):
    p = np.array([xy[0], xy[1], height])
    d_bs = max(np.linalg.norm(p - bs), 1e-12)
    u_bs = (p - bs)[:2] / d_bs
    rows = [u_bs]
    vals = [d_bs - ranges[0]]
    for k in range(ris.shape[0]):
        d_r = max(np.linalg.norm(p - ris[k]), 1e-12)
        u_r = (p - ris[k])[:2] / d_r
        half = 0.5 * (np.linalg.norm(bs - ris[k]) + d_r + d_bs)
        rows.append(0.5 * (u_r + u_bs))
        vals.append(half - ranges[k + 1])
    return np.asarray(vals), np.asarray(rows)


def ls_position(bs_position, ris_positions, path_ranges, uav_height: float,
                init=None, residual_tol: float = 1.0):
    """Recover the target (x, y, z=uav_height) from per-path ranges.

    path_ranges[0] is the direct mono-static range |p - bs|; path_ranges[k]
    for k >= 1 is half the BS -> RIS_k -> target -> BS round trip. Solved by
    Gauss-Newton over (x, y) with multi-start initialization on the
    direct-range circle; returns (position, residual norm).
    """
    bs = np.asarray(bs_position, dtype=float)
    ris = np.asarray(ris_positions, dtype=float).reshape(-1, 3)
    ranges = np.asarray(path_ranges, dtype=float).ravel()
    if ranges.shape[0] != ris.shape[0] + 1:
        raise InvalidInputError("need one direct range plus one range per RIS")
    if ranges.shape[0] < 2:
        raise InvalidInputError("at least two range measurements are required")
    if np.any(ranges <= 0.0):
        raise InvalidInputError("ranges must be positive")
    dz = uav_height - bs[2]
    rho = np.sqrt(max(ranges[0] ** 2 - dz**2, 0.0))  # direct-range circle radius
    starts = []
    if init is not None:
        starts.append(np.asarray(init, dtype=float)[:2])
    for ang in np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False):
        starts.append(bs[:2] + rho * np.array([np.cos(ang), np.sin(ang)]))
    best_xy, best_res = None, np.inf
    for start in starts:
        xy = start.astype(float).copy()
        res_norm = np.inf
        for _ in range(50):
            vals, jac = _residuals(xy, bs, ris, ranges, uav_height)
            try:
                step, *_ = np.linalg.lstsq(jac, vals, rcond=None)
            except np.linalg.LinAlgError:
                break
            xy = xy - step
            res_norm = float(np.linalg.norm(_residuals(xy, bs, ris, ranges, uav_height)[0]))
            if np.linalg.norm(step) < 1e-9:
                break
        if res_norm < best_res:
            best_xy, best_res = xy, res_norm
    if best_xy is None or not np.isfinite(best_res) or best_res > residual_tol:
        raise EstimationFailureError("position solve did not converge", residual=best_res)
    return np.array([best_xy[0], best_xy[1], uav_height]), best_res
