import numpy as np
import pytest

from risdeploy.bs_bf import apply_power_allocation, svd_beamformer
from risdeploy.errors import DegenerateLinkError, InvalidInputError


def test_vector_link_matched_filter():
    h = np.array([1.0 + 1.0j, 2.0, -1.0j, 0.5])
    bf = svd_beamformer([h])
    v = bf.vectors[:, 0]
    assert np.linalg.norm(v) == pytest.approx(1.0)
    # matched filter maximizes |h v| at ||h||
    assert abs(np.dot(h, v)) == pytest.approx(np.linalg.norm(h))


def test_matrix_link_dominant_singular_vector():
    rng = np.random.default_rng(11)
    mat = rng.normal(size=(6, 4)) + 1j * rng.normal(size=(6, 4))
    bf = svd_beamformer([mat])
    v = bf.vectors[:, 0]
    s_max = np.linalg.svd(mat, compute_uv=False)[0]
    assert np.linalg.norm(mat @ v) == pytest.approx(s_max, rel=1e-12)
    # no other unit vector does better
    for _ in range(20):
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        w = w / np.linalg.norm(w)
        assert np.linalg.norm(mat @ w) <= s_max + 1e-9


def test_global_phase_fixed():
    h = np.array([0.1, 3.0 * np.exp(1j * 1.3), 0.2j])
    v = svd_beamformer([h]).vectors[:, 0]
    k = int(np.argmax(np.abs(v)))
    assert v[k].imag == pytest.approx(0.0, abs=1e-12)
    assert v[k].real > 0


def test_deterministic_across_calls():
    rng = np.random.default_rng(5)
    mat = rng.normal(size=(3, 8)) + 1j * rng.normal(size=(3, 8))
    v1 = svd_beamformer([mat]).vectors
    v2 = svd_beamformer([mat.copy()]).vectors
    np.testing.assert_array_equal(v1, v2)


def test_degenerate_link_raises_with_index():
    with pytest.raises(DegenerateLinkError) as err:
        svd_beamformer([np.ones(4), np.zeros(4)])
    assert err.value.link_index == 1


def test_apply_power_allocation():
    bf = svd_beamformer([np.ones(4), np.array([1.0, 1j, -1.0, -1j])])
    out = apply_power_allocation(bf, [0.25, 0.75])
    np.testing.assert_allclose(np.linalg.norm(out.vectors, axis=0),
                               [0.5, np.sqrt(0.75)], rtol=1e-12)
    np.testing.assert_array_equal(out.power_weights, [0.25, 0.75])
    # total transmit power across beams is preserved at 1
    assert np.sum(np.abs(out.vectors) ** 2) == pytest.approx(1.0)


def test_apply_power_allocation_validation():
    bf = svd_beamformer([np.ones(4), np.ones(4)])
    with pytest.raises(InvalidInputError):
        apply_power_allocation(bf, [0.5, 0.6])
    with pytest.raises(InvalidInputError):
        apply_power_allocation(bf, [-0.1, 1.1])
    with pytest.raises(InvalidInputError):
        apply_power_allocation(bf, [1.0])
