import numpy as np
import pytest
from PIL import Image

from vafr import lpbuffer
from vafr.acuity import adapt_to_device, default_model
from vafr.mapping import ConstantDelta, MappingContext

import oracles


@pytest.fixture(scope="module")
def ctx():
    return MappingContext()


@pytest.fixture(scope="module")
def buf(ctx):
    return lpbuffer.build(ctx)


class TestLayout:
    def test_dims(self, buf):
        assert (buf.width, buf.height) == (901, 1638)
        assert buf.payload.shape == (1638, 901, 4)
        assert buf.payload.dtype == np.uint8

    def test_valid_count_matches_oracle(self, buf):
        width, total = oracles.valid_count_sum()
        assert buf.width == width
        assert buf.valid_count == total == 1_062_877

    def test_column_heights(self, buf):
        h = buf.column_heights
        assert h[:5].tolist() == [3, 9, 16, 22, 28]
        assert h[-3:].tolist() == [1254, 1250, 1247]
        assert h.max() <= buf.height
        peak = int(np.argmax(h))
        assert peak == 711
        assert np.all(np.diff(h[:peak + 1]) >= 0)
        assert np.all(np.diff(h[peak:]) <= 0)

    def test_mask_and_texels(self, buf):
        mask = buf.valid_mask()
        assert mask.sum() == buf.valid_count
        u, v = buf.texels()
        assert u.size == buf.valid_count
        assert mask[v, u].all()
        # column-major order: u never decreases, v restarts at 0 in each column
        assert np.all(np.diff(u) >= 0)
        assert v[0] == 0 and v[3] == 0 and u[3] == 1

    def test_copy_is_independent(self, buf):
        c = buf.copy()
        c.payload[0, 0, 0] = 7
        assert buf.payload[0, 0, 0] == 0

    def test_float_payload(self, ctx):
        b = lpbuffer.build(ctx, dtype=np.float32, channels=3)
        assert b.payload.dtype == np.float32 and b.channels == 3


class TestStats:
    def test_fields(self, ctx, buf):
        s = lpbuffer.stats(buf, ctx)
        assert s.valid_count == s.rays_per_eye == 1_062_877
        assert s.fill_ratio == pytest.approx(1_062_877 / (901 * 1638))
        assert s.gt_pixels == 1920 * 1080
        assert s.reduction == pytest.approx(1920 * 1080 / 1_062_877)
        assert s.as_dict()["display"] == [1920, 1080]

    @pytest.mark.parametrize("wh", [(2560, 1440), (3840, 2160), (7680, 4320), (11520, 6480)])
    def test_constant_across_displays(self, wh):
        w, h = wh
        c = MappingContext(c_r=1.0 / h, display_w=w, display_h=h, gaze=(0.0, h))
        s = lpbuffer.stats(lpbuffer.build(c, channels=1), c)
        assert (s.width, s.height, s.valid_count) == (901, 1638, 1_062_877)
        assert s.gt_pixels == w * h

    def test_half_delta_count(self):
        c = MappingContext(delta=ConstantDelta(0.5))
        b = lpbuffer.build(c, channels=1)
        assert b.valid_count == oracles.valid_count_sum(delta=0.5)[1] == 531_432
        assert (b.width, b.height) == (901, 819)

    def test_device_cap_counts(self):
        counts = {}
        for cap in (9.0, 18.0):
            m = adapt_to_device(default_model(), cap)
            c = MappingContext(model=m)
            counts[cap] = lpbuffer.build(c, channels=1).valid_count
            assert counts[cap] == oracles.valid_count_sum(m.pivots)[1]
        assert counts[9.0] == 876_472
        assert counts[9.0] < counts[18.0] < 1_062_877


class TestDump:
    def test_invalid_texels_magenta(self, ctx, tmp_path):
        b = lpbuffer.build(ctx)
        u, v = b.texels()
        b.payload[v, u, :3] = 100
        path = tmp_path / "lp.png"
        lpbuffer.dump_png(b, path)
        img = np.asarray(Image.open(path))
        assert img.shape == (1638, 901, 3)
        assert (img[~b.valid_mask()] == (255, 0, 255)).all()
        assert (img[v, u] == 100).all()
