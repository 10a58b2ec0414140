import numpy as np
import pytest
from skimage import data, transform

from vafr import foveate, lpbuffer, mapping
from vafr.foveate import FoveationParams, Foveator
from vafr.mapping import MappingContext

W, H = 640, 360


@pytest.fixture(scope="module")
def ctx():
    return MappingContext(c_r=1.0 / H, display_w=W, display_h=H)


@pytest.fixture(scope="module")
def photo():
    img = transform.resize(data.astronaut(), (H, W), order=3, anti_aliasing=True)
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def disk_mask(ctx, e_deg):
    ys, xs = np.mgrid[0:ctx.display_h, 0:ctx.display_w]
    r = np.hypot(xs + 0.5 - ctx.gaze[0], ys + 0.5 - ctx.gaze[1])
    return r < mapping.radius_from_ecc(ctx, e_deg)


def psnr(a, b):
    mse = np.mean((a.astype(float) - b.astype(float)) ** 2)
    return np.inf if mse == 0 else 10.0 * np.log10(255.0**2 / mse)


class TestBilinear:
    def test_exact_at_pixel_centres(self):
        img = np.arange(24, dtype=np.uint8).reshape(2, 4, 3)
        ys, xs = np.mgrid[0:2, 0:4]
        np.testing.assert_array_equal(foveate.bilinear(img, xs + 0.5, ys + 0.5), img)

    def test_linear_ramp(self):
        img = np.repeat(np.arange(10, dtype=np.uint8)[None, :, None] * 10, 3, axis=0)
        x = np.array([0.5, 1.25, 4.0, 9.5])
        out = foveate.bilinear(img, x, np.full(4, 1.5))[:, 0]
        np.testing.assert_allclose(out, [0.0, 7.5, 35.0, 90.0])

    def test_clamp_to_edge(self):
        img = np.full((3, 3, 3), 9, dtype=np.uint8)
        img[0, 0] = 1
        assert foveate.bilinear(img, np.array(-5.0), np.array(-5.0))[0] == 1


class TestPipeline:
    @pytest.mark.parametrize("channels", [3, 4])
    @pytest.mark.parametrize("aa", ["none", "lp_fxaa"])
    def test_constant_identity(self, ctx, channels, aa):
        img = np.empty((H, W, channels), dtype=np.uint8)
        img[...] = (37, 180, 255, 128)[:channels]
        out = foveate.foveate(img, ctx, FoveationParams(aa_mode=aa))
        assert out.shape == img.shape
        assert np.array_equal(out, img)

    def test_foveal_quality(self, ctx, photo):
        out = foveate.foveate(photo, ctx)
        m = disk_mask(ctx, 5.0)
        assert psnr(out[m], photo[m]) >= 30.0

    def test_quality_falls_with_eccentricity(self, ctx, photo):
        out = foveate.foveate(photo, ctx, FoveationParams(aa_mode="none"))
        inner = disk_mask(ctx, 5.0)
        ring = disk_mask(ctx, 40.0) & ~disk_mask(ctx, 30.0)
        assert psnr(out[inner], photo[inner]) > psnr(out[ring], photo[ring])

    def test_dimension_mismatch(self, ctx):
        buf = lpbuffer.build(ctx)
        with pytest.raises(ValueError, match="display"):
            foveate.to_lp(np.zeros((10, 10, 3), np.uint8), ctx, buf)
        with pytest.raises(ValueError):
            foveate.to_lp(np.zeros((H, W), np.uint8), ctx, buf)

    def test_threads_do_not_change_output(self, ctx, photo):
        a = foveate.foveate(photo, ctx, threads=1)
        b = foveate.foveate(photo, ctx, threads=3)
        assert np.array_equal(a, b)

    def test_foveator_reuses_one_buffer(self, ctx, photo):
        fov = Foveator(ctx)
        first = fov.buffer
        a = fov(photo, gaze=(100.0, 100.0))
        fov(photo)
        assert fov.buffer is first
        assert np.array_equal(a, foveate.foveate(photo, ctx.with_gaze(100.0, 100.0)))

    def test_gaze_moves_sharp_region(self, ctx, photo):
        gaze = (150.0, 120.0)
        out = foveate.foveate(photo, ctx, FoveationParams(gaze=gaze))
        moved = ctx.with_gaze(*gaze)
        m = disk_mask(moved, 3.0)
        assert psnr(out[m], photo[m]) >= 30.0


@pytest.fixture(scope="module")
def wide():
    # c_r large enough that the corners lie beyond 60 degrees
    return MappingContext(c_r=1.0 / 100.0, display_w=400, display_h=300)


@pytest.fixture(scope="module")
def ramp():
    ys, xs = np.mgrid[0:300, 0:400]
    return np.stack([xs % 256, ys % 256, (xs + ys) % 256], axis=-1).astype(np.uint8)


class TestOutsidePolicy:
    def outside(self, wide):
        return ~disk_mask(wide, 60.0)

    def test_solid_color(self, wide, ramp):
        out = foveate.foveate(ramp, wide, FoveationParams(outside_policy="solid_color",
                                                          fill_color=(1, 2, 3, 255)))
        m = self.outside(wide)
        assert m.any()
        assert (out[m] == (1, 2, 3)).all()

    def test_passthrough(self, wide, ramp):
        out = foveate.foveate(ramp, wide, FoveationParams(outside_policy="passthrough_source"))
        m = self.outside(wide)
        assert np.array_equal(out[m], ramp[m])

    def test_clamp_ring_constant(self, wide):
        img = np.full((300, 400, 3), 77, np.uint8)
        out = foveate.foveate(img, wide)
        assert (out == 77).all()

    def test_bad_policy(self):
        with pytest.raises(ValueError):
            FoveationParams(outside_policy="wrap")
        with pytest.raises(ValueError):
            FoveationParams(aa_mode="taa")


class TestImageIO:
    @pytest.mark.parametrize("suffix", [".png", ".ppm"])
    def test_roundtrip(self, tmp_path, suffix):
        img = np.random.default_rng(0).integers(0, 256, (7, 5, 3), dtype=np.uint8)
        path = tmp_path / f"x{suffix}"
        foveate.write_image(path, img)
        assert np.array_equal(foveate.read_image(path), img)

    def test_rgba_to_ppm_drops_alpha(self, tmp_path):
        img = np.random.default_rng(1).integers(0, 256, (4, 4, 4), dtype=np.uint8)
        path = tmp_path / "x.ppm"
        foveate.write_image(path, img)
        assert np.array_equal(foveate.read_image(path), img[..., :3])

    def test_grey_promoted_to_rgb(self, tmp_path):
        from PIL import Image

        path = tmp_path / "g.png"
        Image.fromarray(np.full((3, 3), 50, np.uint8), "L").save(path)
        assert foveate.read_image(path).shape == (3, 3, 3)
