"""BS-side beamforming: per-link SVD beams and ISAC power allocation."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLinkError, InvalidInputError


@dataclass(frozen=True)
class BsBeamformer:
    """Unit-norm beam columns plus (optionally) the power weights applied."""

    vectors: np.ndarray  # (M_b, n_links)
    power_weights: np.ndarray | None = None


def _fix_global_phase(v: np.ndarray) -> np.ndarray:
    "Make the largest-magnitude entry real positive, for reproducibility."
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    return v * np.conj(phase)


def svd_beamformer(links) -> BsBeamformer:
    """Dominant right singular vector per link, stacked as columns.

    Each link is an (r, M_b) matrix or an (M_b,) vector (rank one: the beam
    reduces to the matched filter). Raises DegenerateLinkError for an
    all-zero link.
    """
    columns = []
    for i, link in enumerate(links):
        mat = np.atleast_2d(np.asarray(link, dtype=complex))
        if not np.any(mat):
            raise DegenerateLinkError(i)
        if mat.shape[0] == 1:
            v = np.conj(mat[0]) / np.linalg.norm(mat[0])
        else:
            _, _, vh = np.linalg.svd(mat)
            v = np.conj(vh[0])
        columns.append(_fix_global_phase(v))
    return BsBeamformer(vectors=np.column_stack(columns))


def apply_power_allocation(bf: BsBeamformer, weights) -> BsBeamformer:
    """Scale beam column n by sqrt(omega_n); weights must sum to 1."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise InvalidInputError("power weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InvalidInputError(f"power weights must sum to 1, got {w.sum()}")
    if w.shape[0] != bf.vectors.shape[1]:
        raise InvalidInputError("one weight per beam column required")
    return BsBeamformer(vectors=bf.vectors * np.sqrt(w), power_weights=w)
