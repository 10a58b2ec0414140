import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vafr import acuity
from vafr.acuity import AcuityModel, adapt_to_device, default_model
from vafr.errors import ConfigError, DomainError

import oracles


@pytest.fixture(scope="module")
def model():
    return default_model()


class TestDefaultModel:
    def test_pivots_and_range(self, model):
        assert model.pivots == oracles.DEFAULT_PIVOTS
        assert model.e_max == 60.0
        assert len(model.segments) == 4

    def test_pivot_values(self, model):
        for e, f in oracles.DEFAULT_PIVOTS[:-1]:
            assert acuity.acuity(model, e) == pytest.approx(f, rel=1e-14)

    def test_spot_values(self, model):
        assert acuity.mar(model, 5.0) == pytest.approx(0.0625, rel=1e-14)
        assert acuity.acuity(model, 45.0) == pytest.approx(40.0 / 9.0, rel=1e-14)
        assert acuity.shading_rate(model, 20.0) == pytest.approx(6.0, rel=1e-14)

    def test_mar_matches_interpolation_oracle(self, model):
        e = np.random.default_rng(1).uniform(0.0, 60.0, 5000)
        np.testing.assert_allclose(acuity.mar(model, e), oracles.mar_interp(e), rtol=1e-13)

    def test_scalar_in_scalar_out(self, model):
        assert isinstance(acuity.mar(model, 3.0), float)
        assert acuity.mar(model, np.array([3.0])).shape == (1,)

    def test_pivot_belongs_to_right_segment(self, model):
        assert model.segment_index(10.0) == 1
        assert model.segment_index(np.nextafter(10.0, 0.0)) == 0

    def test_continuity_constants(self, model):
        # c_i makes u continuous: the closed form of each segment meets the next one
        for s0, s1 in zip(model.segments, model.segments[1:]):
            assert s0.u(s0.e_hi) == pytest.approx(s1.u(s1.e_lo), rel=1e-13)

    def test_segment_closed_form(self, model):
        s = model.segments[2]
        e = 25.0
        assert s.u(e) == pytest.approx(2.0 * np.log(s.m * e + s.omega) / s.m + s.c, rel=1e-13)

    @pytest.mark.parametrize("e", [-0.1, 60.0, 75.0, np.nan])
    def test_out_of_range(self, model, e):
        with pytest.raises(DomainError):
            acuity.acuity(model, e)

    def test_shading_rate_is_acuity(self, model):
        e = np.linspace(0.0, 59.99, 777)
        assert np.array_equal(acuity.shading_rate(model, e), acuity.acuity(model, e))


class TestValidation:
    @pytest.mark.parametrize("pivots, where", [
        ([(1, 40), (60, 4)], "pivot 0"),
        ([(0, 40), (10, 50), (60, 4)], "pivot 1"),
        ([(0, 40), (10, 10), (10, 9), (60, 4)], "pivot 2"),
        ([(0, 40), (30, -1), (60, 4)], "pivot 1"),
        ([(0, 40)], "two pivots"),
    ])
    def test_reports_offending_pivot(self, pivots, where):
        with pytest.raises(ConfigError, match=where):
            AcuityModel.from_pivots(pivots, 60.0)

    def test_last_pivot_must_reach_e_max(self):
        with pytest.raises(ConfigError, match="e_max"):
            AcuityModel.from_pivots([(0, 40), (30, 5)], 60.0)

    def test_json_roundtrip(self, model, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(model.to_json()))
        assert AcuityModel.from_json(path) == model
        assert AcuityModel.from_json(str(path)) == model
        assert AcuityModel.from_json(json.dumps(model.to_json())) == model

    def test_flat_segment(self):
        m = AcuityModel.from_pivots([(0, 10), (20, 10), (60, 4)])
        assert acuity.acuity(m, 15.0) == pytest.approx(10.0)
        # u grows linearly at 2 f on the flat part
        assert m.segments[0].u(15.0) == pytest.approx(300.0)


class TestDeviceAdaptation:
    def test_cap_9(self, model):
        m = adapt_to_device(model, 9.0)
        np.testing.assert_allclose(
            np.array(m.pivots),
            [(0, 9), (35.0 / 3.0, 9), (20, 6), (30, 5), (60, 4)], rtol=1e-12)

    def test_cap_18_inserts_crossing(self, model):
        m = adapt_to_device(model, 18.0)
        assert m.pivots[0] == (0.0, 18.0)
        # MAR 1/18 on the first segment 0.025 + 0.0075 e
        assert m.pivots[1][0] == pytest.approx((1 / 18 - 0.025) / 0.0075, rel=1e-12)
        assert m.pivots[2] == (10.0, 10.0)

    def test_cap_above_peak_is_identity(self, model):
        assert adapt_to_device(model, 40.0) == model
        assert adapt_to_device(model, 100.0) == model

    def test_cap_below_everything_is_flat(self, model):
        m = adapt_to_device(model, 3.0)
        e = np.linspace(0, 59.9, 50)
        np.testing.assert_allclose(acuity.acuity(m, e), 3.0)

    def test_nonpositive_cap(self, model):
        with pytest.raises(DomainError):
            adapt_to_device(model, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=0.5, max_value=60.0))
    def test_equals_min_of_acuity_and_cap(self, cap):
        model = default_model()
        m = adapt_to_device(model, cap)
        e = np.linspace(0.0, 59.99, 401)
        np.testing.assert_allclose(acuity.acuity(m, e),
                                   np.minimum(acuity.acuity(model, e), cap), rtol=1e-12)
