"""Environment map loading, the equirect lookup convention, and mode resolution."""

import math

import numpy as np
import pytest
from scipy import stats

from augmentor.envmap import EnvironmentMap, load_envmap, resolve_env, sample_direction
from augmentor.errors import BadAspect, EmptyPool, MissingTrueMap, NonUnitDirection
from augmentor.imgio import write_png

UP = np.array([0.0, -1.0, 0.0])  # camera y points down
DOWN = np.array([0.0, 1.0, 0.0])
FORWARD = np.array([0.0, 0.0, 1.0])


def gray_map(value=0.5, h=256):
    return np.full((h, 2 * h, 3), value, dtype=np.float64)


class TestLoad:
    def test_no_decode(self):
        env = load_envmap(gray_map(0.5), gamma_decode=False)
        assert np.allclose(env.pixels, 0.5)

    def test_gamma_decode(self):
        env = load_envmap(gray_map(0.5), gamma_decode=True)
        # 0.5^2.2 = 0.21763764082403103
        assert np.allclose(env.pixels, 0.21763764082403103)

    def test_uint8_scaled(self):
        img = np.full((4, 8, 3), 128, dtype=np.uint8)
        env = load_envmap(img, gamma_decode=False)
        assert np.allclose(env.pixels, 128 / 255)

    def test_bad_aspect(self):
        with pytest.raises(BadAspect):
            load_envmap(np.zeros((256, 513, 3)))

    def test_grayscale_broadcast(self):
        env = load_envmap(np.full((4, 8), 0.25))
        assert env.pixels.shape == (4, 8, 3)

    def test_negative_radiance_rejected(self):
        with pytest.raises(ValueError):
            EnvironmentMap(pixels=np.full((4, 8, 3), -0.1))


class TestSampleDirection:
    def test_straight_up_reads_top_row(self):
        px = np.zeros((8, 16, 3))
        px[0, :] = [1.0, 0.0, 0.0]
        env = EnvironmentMap(pixels=px)
        assert np.allclose(sample_direction(env, UP), [1.0, 0.0, 0.0])

    def test_straight_down_reads_bottom_row(self):
        px = np.zeros((8, 16, 3))
        px[-1, :] = [0.0, 0.0, 1.0]
        env = EnvironmentMap(pixels=px)
        assert np.allclose(sample_direction(env, DOWN), [0.0, 0.0, 1.0])

    def test_forward_reads_map_center(self):
        # u = v = 0.5 lands between the 4 texels around (H/2-0.5, W/2-0.5)
        h, w = 64, 128
        px = np.zeros((h, w, 3))
        px[h // 2 - 1 : h // 2 + 1, w // 2 - 1 : w // 2 + 1] = [0.2, 0.4, 0.6]
        env = EnvironmentMap(pixels=px)
        assert np.allclose(sample_direction(env, FORWARD), [0.2, 0.4, 0.6])

    def test_constant_map(self):
        env = EnvironmentMap(pixels=None, mode_tag="constant",
                             constant_radiance=np.array([1.0, 2.0, 3.0]))
        rng = np.random.default_rng(0)
        for _ in range(10):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            assert np.allclose(sample_direction(env, d), [1.0, 2.0, 3.0])

    def test_non_unit_rejected(self):
        env = EnvironmentMap(pixels=gray_map(0.5, 8))
        with pytest.raises(NonUnitDirection):
            sample_direction(env, np.array([0.0, 0.0, 2.0]))

    def test_seam_continuity(self):
        # directions straddling the atan2 branch cut (behind the camera)
        rng = np.random.default_rng(7)
        px = rng.uniform(0.0, 1.0, size=(16, 32, 3))
        env = EnvironmentMap(pixels=px)
        eps = 1e-7
        left = np.array([-eps, 0.0, -1.0])
        right = np.array([eps, 0.0, -1.0])
        left /= np.linalg.norm(left)
        right /= np.linalg.norm(right)
        a = sample_direction(env, left)
        b = sample_direction(env, right)
        assert np.all(np.abs(a - b) < 1e-4)

    def test_bilinear_average(self):
        # halfway between two texels horizontally: exact mean
        px = np.zeros((2, 4, 3))
        px[1, 1] = [0.0, 0.0, 0.0]
        px[1, 2] = [1.0, 1.0, 1.0]
        env = EnvironmentMap(pixels=px)
        # v = 0.75 -> y = 1.0 (row 1 exactly); u = 0.5 -> x = 1.5
        d = np.array([0.0, math.sin(math.pi / 4), math.cos(math.pi / 4)])
        got = sample_direction(env, d)
        assert np.allclose(got, 0.5, atol=1e-12)

    def test_radiance_non_negative(self):
        rng = np.random.default_rng(3)
        env = EnvironmentMap(pixels=rng.uniform(0, 4, size=(8, 16, 3)))
        for _ in range(100):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            assert np.all(sample_direction(env, d) >= 0)


class TestResolveEnv:
    def test_none_mode(self):
        env = resolve_env("none", None, [], np.random.default_rng(0))
        assert env.mode_tag == "constant"
        assert np.allclose(sample_direction(env, FORWARD), 1.0)
        assert np.allclose(sample_direction(env, UP), 1.0)

    def test_true_map_missing(self):
        with pytest.raises(MissingTrueMap):
            resolve_env("true_map", None, [], np.random.default_rng(0))

    def test_true_map_loads_panorama(self, tmp_path):
        p = tmp_path / "pano.png"
        write_png(p, np.full((4, 8, 3), 128, dtype=np.uint8))
        env = resolve_env("true_map", p, [], np.random.default_rng(0))
        assert env.mode_tag == "true_map"
        # 8-bit input is display-encoded: (128/255)^2.2
        assert np.allclose(env.pixels, (128 / 255) ** 2.2)

    def test_float_panorama_kept_linear(self, tmp_path):
        p = tmp_path / "pano.npy"
        np.save(p, np.full((4, 8, 3), 0.5, dtype=np.float32))
        env = resolve_env("true_map", p, [], np.random.default_rng(0))
        assert np.allclose(env.pixels, 0.5)

    def test_random_empty_pool(self):
        with pytest.raises(EmptyPool):
            resolve_env("random_map", None, [], np.random.default_rng(0))

    def test_random_pool_of_one(self, tmp_path):
        p = tmp_path / "only.npy"
        np.save(p, np.full((2, 4, 3), 0.125, dtype=np.float64))
        env = resolve_env("random_map", None, [p], np.random.default_rng(0))
        assert np.allclose(env.pixels, 0.125)

    def test_random_pool_uniform(self, tmp_path):
        paths = []
        for i in range(8):
            p = tmp_path / f"m{i}.npy"
            np.save(p, np.full((1, 2, 3), i / 8.0, dtype=np.float64))
            paths.append(p)
        rng = np.random.default_rng(31)
        n = 1000
        counts = np.zeros(8)
        for _ in range(n):
            env = resolve_env("random_map", None, paths, rng)
            counts[int(round(env.pixels[0, 0, 0] * 8))] += 1
        expected = n / 8
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < stats.chi2.ppf(0.99, df=7)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            resolve_env("disco", None, [], np.random.default_rng(0))
