import numpy as np
import pytest

import bilearn


def test_denoise_constant_image():
    f = np.full((8, 8), 0.61)
    r = bilearn.denoise(f, "tgv2", alpha=0.01, beta=0.01, tol=1e-12)
    assert r["converged"]
    assert r["u"].shape == (8, 8)
    np.testing.assert_allclose(r["u"], 0.61 / (1 + 1e-10), atol=1e-9)


def test_denoise_reduces_noise():
    clean = bilearn.piecewise_constant_image(32)
    noisy = bilearn.add_gaussian_noise(clean, 20.0, 7)
    r = bilearn.denoise(noisy, "tv", alpha=4.6e-4)
    assert bilearn.psnr(r["u"], clean) > bilearn.psnr(noisy, clean) + 3


def test_rectangular_layout_is_row_major():
    f = np.zeros((4, 6))
    f[:, 3:] = 1.0
    u = bilearn.denoise(f, "tv", alpha=1e-4)["u"]
    assert u.shape == (4, 6)
    assert u[:, :3].max() < 0.5 < u[:, 3:].min()


def test_metrics():
    rng = np.random.default_rng(1)
    a = rng.random((16, 16))
    assert bilearn.psnr(a + 0.1, a) == pytest.approx(20.0, abs=1e-12)
    assert bilearn.ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    t = bilearn.paired_t_test([3.0, 4.0, 5.5], [1.0, 2.5, 3.0])
    assert t["df"] == 2 and t["direction"] == 1


def test_learn_tv_single_pair():
    clean = bilearn.piecewise_constant_image(16)
    noisy = bilearn.add_gaussian_noise(clean, 20.0, 3)
    r = bilearn.learn([noisy], [clean], "tv")
    assert r["converged"]
    assert r["beta"] == 0.0
    values = [it["value"] for it in r["trace"]]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert r["psnr"][0] > bilearn.psnr(noisy, clean)


def test_pgm_round_trip(tmp_path):
    img = np.arange(12, dtype=float).reshape(3, 4) / 255.0
    path = tmp_path / "x.pgm"
    bilearn.write_pgm(img, path)
    np.testing.assert_array_equal(bilearn.read_pgm(path), img)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        bilearn.denoise(np.zeros((4, 4)), "nope")
    with pytest.raises(ValueError):
        bilearn.denoise(np.zeros(4))
    with pytest.raises(ValueError):
        bilearn.learn([np.zeros((4, 4))], [np.zeros((4, 4))], warm_init="sideways")
