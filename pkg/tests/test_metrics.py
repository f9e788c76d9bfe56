import numpy as np
import pytest

from splatshade import LossWeights, loss_normal, loss_opacity, loss_rgb, loss_tv, psnr, ssim
from splatshade.splat import GBuffer


class TestLossRgb:
    def test_identical_images_zero(self, rng):
        img = rng.random((16, 16, 3))
        assert loss_rgb(img, img, lambda_1=0.8) == pytest.approx(0.0, abs=1e-9)

    def test_pure_l1(self, rng):
        img = rng.random((16, 16, 3)) * 0.8
        assert loss_rgb(img, img + 0.1, lambda_1=1.0) == pytest.approx(0.1, abs=1e-9)

    def test_pure_ssim_identical(self, rng):
        img = rng.random((16, 16, 3))
        assert loss_rgb(img, img, lambda_1=0.0) == pytest.approx(0.0, abs=1e-9)

    def test_symmetric_at_lambda_one(self, rng):
        a = rng.random((12, 12, 3))
        b = rng.random((12, 12, 3))
        assert loss_rgb(a, b, 1.0) == pytest.approx(loss_rgb(b, a, 1.0))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            loss_rgb(np.zeros((4, 4, 3)), np.zeros((5, 5, 3)))


def test_ssim_matches_skimage_reference(rng):
    skimage = pytest.importorskip("skimage.metrics")
    a = rng.random((32, 32))
    b = np.clip(a + rng.normal(scale=0.1, size=a.shape), 0, 1)
    ours = ssim(a, b)
    theirs = skimage.structural_similarity(
        a, b, win_size=11, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False, data_range=1.0)
    # border handling differs (valid crop vs nearest padding)
    assert ours == pytest.approx(theirs, abs=0.02)


class TestLossOpacity:
    def test_full_coverage_zero(self):
        gb = GBuffer.zeros(4, 4)
        gb.accum_alpha[:] = 1.0
        assert loss_opacity(gb) == 0.0

    def test_empty_is_one(self):
        gb = GBuffer.zeros(4, 4)
        assert loss_opacity(gb) == 1.0

    def test_half_coverage(self):
        gb = GBuffer.zeros(4, 4)
        gb.accum_alpha[:] = 0.5
        assert loss_opacity(gb) == pytest.approx(0.25)


class TestLossNormal:
    def normals(self, vec, h=4, w=4):
        n = np.zeros((h, w, 3), dtype=np.float32)
        n[:] = vec
        return n

    def test_identical_zero(self):
        n = self.normals([0, 0, 1])
        assert loss_normal(n, n) == 0.0

    def test_opposite_is_two(self):
        assert loss_normal(self.normals([0, 0, 1]), self.normals([0, 0, -1])) == pytest.approx(2.0)

    def test_orthogonal_is_one(self):
        assert loss_normal(self.normals([0, 0, 1]), self.normals([1, 0, 0])) == pytest.approx(1.0)

    def test_invalid_pixels_excluded(self):
        a = self.normals([0, 0, 1])
        b = self.normals([0, 0, 1])
        a[0, 0] = 0  # invalid: excluded from the mean
        b[1, 1] = 0
        assert loss_normal(a, b) == pytest.approx(0.0)


class TestLossTv:
    def test_constant_channels_zero(self):
        gb = GBuffer.zeros(8, 8)
        gb.albedo[:] = 0.5
        gb.roughness[:] = 0.3
        assert loss_tv(gb) == 0.0

    def test_single_vertical_step(self):
        gb = GBuffer.zeros(8, 8)
        gb.roughness[:, 4:] = 1.0
        # 8 crossing pixels of height 1 over 64 pixels
        assert loss_tv(gb) == pytest.approx(8.0 / 64.0)

    def test_homogeneity(self):
        gb = GBuffer.zeros(8, 8)
        gb.metallic[:, 4:] = 0.37
        gb2 = GBuffer.zeros(8, 8)
        gb2.metallic[:, 4:] = 0.74
        assert loss_tv(gb2) == pytest.approx(2.0 * loss_tv(gb))


class TestPsnr:
    def test_identical_caps_at_99(self, rng):
        img = rng.random((8, 8, 3))
        assert psnr(img, img) == 99.0

    def test_known_mse(self):
        a = np.zeros((10, 10, 3))
        b = np.full((10, 10, 3), 0.1)
        assert psnr(a, b) == pytest.approx(20.0)

    def test_mse_one_is_zero_db(self):
        a = np.zeros((4, 4, 3))
        b = np.ones((4, 4, 3))
        assert psnr(a, b) == pytest.approx(0.0)


def test_loss_weights_validation():
    LossWeights().validate()
    with pytest.raises(ValueError):
        LossWeights(lambda_1=1.5).validate()
    with pytest.raises(ValueError):
        LossWeights(lambda_o=-0.1).validate()
