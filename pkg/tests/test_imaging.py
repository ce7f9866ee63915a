import numpy as np
import pytest

from rgdbek.apps.imaging import (PsfSpec, blur_image, build_gaussian_toeplitz, deblur_image, psnr,
                                 read_pnm, ssim, synthetic_image, write_pnm)
from rgdbek.solvers import SolveConfig


def test_toeplitz_diagonal_and_band():
    D = build_gaussian_toeplitz(PsfSpec(20.0, 20, 256)).to_dense()
    assert D[0, 0] == pytest.approx(1 / (20 * np.sqrt(2 * np.pi)), rel=1e-15)
    assert round(D[0, 0], 10) == 0.0199471140
    assert D[0, 21] == 0.0 and D[0, 20] > 0.0
    assert np.allclose(D[5, 7], np.exp(-4 / 800) / (20 * np.sqrt(2 * np.pi)), rtol=1e-15)


def test_psf_validation():
    with pytest.raises(ValueError):
        PsfSpec(0.0, 1, 4)
    with pytest.raises(ValueError):
        PsfSpec(1.0, 4, 4)


def test_blur_of_constant_differs_only_near_the_ends():
    img = np.full((4, 8), 0.5)
    spec = PsfSpec(1.5, 3, 32)
    out = blur_image(img, spec).ravel()
    offs = np.arange(-3, 4)
    full = 0.5 * np.sum(np.exp(-offs ** 2 / (2 * 1.5 ** 2)) / (1.5 * np.sqrt(2 * np.pi)))
    np.testing.assert_allclose(out[3:-3], full, rtol=1e-14)
    assert np.all(out[:3] < full) and np.all(out[-3:] < full)


def test_blur_shape_checks():
    with pytest.raises(ValueError):
        blur_image(np.zeros((4, 4)), PsfSpec(1.0, 1, 15))


def test_deblur_well_conditioned_constant_image():
    img = np.full((8, 8), 0.7)
    restored, traces = deblur_image(img, PsfSpec(1.0, 2, 64), SolveConfig(eta=0.5, tolerance=1e-12))
    assert traces[0].status == "converged"
    assert psnr(img, restored) >= 60.0


def test_psnr_cases():
    x = np.random.default_rng(0).random((6, 6))
    assert psnr(x, x) == float("inf")
    assert psnr(x, x + 0.1) == pytest.approx(20.0, abs=1e-9)
    with pytest.raises(ValueError):
        psnr(x, x[:5])


def test_ssim_cases():
    x = np.random.default_rng(1).random((12, 12, 3))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-15)
    checker = (np.indices((8, 8)).sum(0) % 2).astype(float)
    assert ssim(checker, 1.0 - checker) < 0.0
    with pytest.raises(ValueError):
        ssim(np.zeros((4, 4)), np.zeros((4, 4)))


def test_ssim_single_window_matches_formula():
    rng = np.random.default_rng(2)
    x, y = rng.random((8, 8)), rng.random((8, 8))
    mx, my = x.mean(), y.mean()
    vx, vy = x.var(), y.var()
    cxy = np.mean((x - mx) * (y - my))
    c1, c2 = 1e-4, 9e-4
    ref = (2 * mx * my + c1) * (2 * cxy + c2) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2))
    assert ssim(x, y) == pytest.approx(ref, rel=1e-12)


def test_synthetic_image_range():
    img = synthetic_image(16)
    assert img.shape == (16, 16, 3)
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_pnm_round_trip(tmp_path):
    img = np.random.default_rng(3).integers(0, 256, (5, 7, 3)) / 255
    write_pnm(tmp_path / "a.ppm", img)
    np.testing.assert_allclose(read_pnm(tmp_path / "a.ppm"), img, atol=1e-15)
    gray = img[:, :, 0]
    write_pnm(tmp_path / "a.pgm", gray)
    np.testing.assert_allclose(read_pnm(tmp_path / "a.pgm"), gray, atol=1e-15)


def test_pnm_rejects_garbage(tmp_path):
    (tmp_path / "x.pgm").write_text("P5\n1 1\n255\n0\n")
    with pytest.raises(ValueError):
        read_pnm(tmp_path / "x.pgm")
    (tmp_path / "y.pgm").write_text("P2\n2 2\n255\n0 1 2\n")
    with pytest.raises(ValueError):
        read_pnm(tmp_path / "y.pgm")
