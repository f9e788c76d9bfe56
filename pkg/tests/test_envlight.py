import numpy as np
import pytest

from splatshade import Cubemap, build_mip_chain, direction_to_face_uv, load_equirect, sample_env
from splatshade.envlight import dump_faces, face_uv_to_direction, load_equirect_pfm, yaw_matrix
from splatshade.imageio import read_pfm, write_pfm


def test_axis_directions_hit_face_centers():
    cases = [
        ((1, 0, 0), 0), ((-1, 0, 0), 1),
        ((0, 1, 0), 2), ((0, -1, 0), 3),
        ((0, 0, 1), 4), ((0, 0, -1), 5),
    ]
    for d, face in cases:
        f, u, v = direction_to_face_uv(np.array(d, dtype=float))
        assert f == face
        assert u == pytest.approx(0.5)
        assert v == pytest.approx(0.5)


def test_ties_break_toward_lower_face_index():
    f, _, _ = direction_to_face_uv(np.array([1.0, 1.0, 1.0]) / np.sqrt(3))
    assert f == 0
    f, _, _ = direction_to_face_uv(np.array([0.0, 1.0, 1.0]) / np.sqrt(2))
    assert f == 2


def test_face_uv_roundtrip_at_texel_centers():
    s = 8
    idx = (np.arange(s) + 0.5) / s
    u, v = np.meshgrid(idx, idx)
    for face in range(6):
        d = face_uv_to_direction(np.full(u.shape, face), u, v)
        f2, u2, v2 = direction_to_face_uv(d)
        assert np.all(f2 == face)
        np.testing.assert_allclose(u2, u, atol=1e-6)
        np.testing.assert_allclose(v2, v, atol=1e-6)


class TestMipChain:
    def test_constant_stays_constant(self):
        cm = Cubemap.constant((0.25, 0.5, 0.75), 16)
        for mip in cm.mips:
            np.testing.assert_allclose(mip[..., 0], 0.25, atol=1e-6)
            np.testing.assert_allclose(mip[..., 2], 0.75, atol=1e-6)

    def test_box_average_2x2(self):
        faces = np.zeros((6, 2, 2, 3), dtype=np.float32)
        faces[0, 0, 0] = 0.0
        faces[0, 0, 1] = 0.0
        faces[0, 1, 0] = 1.0
        faces[0, 1, 1] = 1.0
        cm = Cubemap.from_faces(faces)
        np.testing.assert_allclose(cm.mips[1][0, 0, 0], 0.5)

    def test_chain_length(self):
        cm = Cubemap.constant((1, 1, 1), 32)
        assert len(cm.mips) == int(np.log2(32)) + 1
        assert cm.mips[-1].shape == (6, 1, 1, 3)

    def test_mean_energy_preserved_per_mip(self, rng):
        faces = rng.random((6, 32, 32, 3)).astype(np.float32) * 5.0
        cm = Cubemap.from_faces(faces)
        m0 = cm.mips[0].mean()
        for mip in cm.mips[1:]:
            assert mip.mean() == pytest.approx(m0, abs=1e-5)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            Cubemap.from_faces(np.zeros((6, 12, 12, 3), dtype=np.float32))

    def test_rejects_non_finite(self):
        faces = np.zeros((6, 4, 4, 3), dtype=np.float32)
        faces[2, 1, 1, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            Cubemap.from_faces(faces)


class TestSampleEnv:
    def test_roughness_zero_uses_sharpest_mip(self, rng):
        faces = rng.random((6, 16, 16, 3)).astype(np.float32)
        cm = Cubemap.from_faces(faces)
        # texel-center directions reproduce mip-0 texels exactly
        s = cm.face_size
        idx = (np.arange(s) + 0.5) / s
        u, v = np.meshgrid(idx, idx)
        d = face_uv_to_direction(np.full(u.shape, 3), u, v)
        got = sample_env(cm, d, 0.0)
        np.testing.assert_allclose(got, faces[3], atol=1e-5)

    def test_roughness_one_returns_global_face_average(self, rng):
        faces = rng.random((6, 16, 16, 3)).astype(np.float32)
        cm = Cubemap.from_faces(faces)
        got = sample_env(cm, np.array([0.0, 0.0, 1.0]), 1.0)
        np.testing.assert_allclose(got, cm.mips[-1][4, 0, 0], atol=1e-5)

    def test_constant_map_any_roughness(self, rng):
        cm = Cubemap.constant((0.3, 0.6, 0.9), 16)
        d = rng.normal(size=(50, 3))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        for rho in (0.0, 0.3, 0.7, 1.0):
            got = sample_env(cm, d, rho)
            assert np.abs(got - np.array([0.3, 0.6, 0.9])).max() < 1e-5

    def test_continuous_in_roughness(self, rng):
        faces = rng.random((6, 32, 32, 3)).astype(np.float32)
        cm = Cubemap.from_faces(faces)
        d = rng.normal(size=(200, 3))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        for rho in np.linspace(0.0, 1.0 - 1e-4, 23):
            a = sample_env(cm, d, rho)
            b = sample_env(cm, d, rho + 1e-4)
            assert np.abs(a - b).max() <= 1e-2 * faces.max()


class TestEquirect:
    def test_constant_equirect_gives_constant_cubemap(self):
        img = np.full((16, 32, 3), 2.5, dtype=np.float32)
        cm = load_equirect(img, 16)
        np.testing.assert_allclose(cm.faces, 2.5, atol=1e-6)

    def test_bright_texel_at_equator_lands_on_posx(self):
        img = np.zeros((64, 128, 3), dtype=np.float32)
        img[32, 64] = 100.0  # theta = 90 deg, phi ~ 0 -> +X
        cm = load_equirect(img, 32)
        per_face_max = cm.faces.max(axis=(1, 2, 3))
        assert per_face_max.argmax() == 0

    def test_roundtrip_against_direct_equirect_lookup(self, rng):
        # a smooth radiance field keeps the double-bilinear error measurable
        from splatshade.envlight import _equirect_lookup

        h, w = 128, 256
        theta = (np.arange(h) + 0.5) / h * np.pi
        phi = (np.arange(w) + 0.5) / w * 2 * np.pi - np.pi
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        img = np.stack(
            [
                0.5 + 0.4 * np.sin(tt) * np.cos(pp),
                0.5 + 0.4 * np.cos(tt),
                0.5 + 0.4 * np.sin(tt) * np.sin(pp),
            ],
            axis=-1,
        ).astype(np.float32)
        cm = load_equirect(img, 128)
        d = rng.normal(size=(100, 3))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        a = sample_env(cm, d, 0.0)
        b = _equirect_lookup(img, d)
        assert np.abs(a - b).max() < 0.01

    def test_rejects_non_finite_with_count(self, tmp_path):
        img = np.ones((8, 16, 3), dtype=np.float32)
        img[2, 3, 1] = np.inf
        img[5, 7, 0] = np.nan
        with pytest.raises(ValueError, match="2 non-finite"):
            load_equirect(img, 8)

    def test_load_from_pfm(self, tmp_path):
        img = np.random.default_rng(0).random((16, 32, 3)).astype(np.float32)
        path = tmp_path / "env.pfm"
        write_pfm(img, path)
        cm = load_equirect_pfm(path, 16)
        assert cm.face_size == 16


def test_yaw_pi_flips_left_right():
    r = yaw_matrix(np.pi)
    np.testing.assert_allclose(r @ np.array([1.0, 0, 0]), [-1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(r @ np.array([0, 1.0, 0]), [0, 1, 0], atol=1e-12)
    np.testing.assert_allclose(r @ np.array([0, 0, 1.0]), [0, 0, -1], atol=1e-12)
    # yaw 2 pi is identity
    np.testing.assert_allclose(yaw_matrix(2 * np.pi), np.eye(3), atol=1e-12)


def test_dump_faces_writes_readable_pfms(tmp_path, rng):
    faces = rng.random((6, 8, 8, 3)).astype(np.float32)
    cm = Cubemap.from_faces(faces)
    paths = dump_faces(cm, tmp_path)
    assert len(paths) == 6
    for f, p in enumerate(paths):
        np.testing.assert_array_equal(read_pfm(p), faces[f])
