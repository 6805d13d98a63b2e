import json
import math

import numpy as np
import pytest

from weightlab.config import AnalysisSettings
from weightlab.models import (
    DISC, PLANE, DegenerateProfile, InvalidForDomain, InvalidParams, OutOfDomain, ParseError, SourceKind,
    UnknownFamily, WeightInvalid,
)
from weightlab.weights import (
    LOG2, AUTO_PARTNER, SAME, eval_log, grid_points, make_builtin, make_piecewise, make_tabulated,
    over_one_minus_r, parse_weight_spec, sample_log_profile, scaled, t_of_x, validate_weight, x_of_t,
)


def test_parse_builtin_spec():
    v = parse_weight_spec("power_disc(2)@disc")
    assert v.domain == DISC
    assert v.family == 'power_disc'
    assert v.params == (2.0,)
    assert v.label == "power_disc(2)"


def test_parse_two_parameter_family():
    v = parse_weight_spec(" exp_inv_disc(1, 0.5) @ disc ")
    assert v.params == (1.0, 0.5)


@pytest.mark.parametrize("text, error", [
    ("nosuch(1)@disc", UnknownFamily),
    ("exp_plane(1)@disc", InvalidForDomain),
    ("power_disc(-1)@disc", InvalidParams),
    ("power_disc(1,2)@disc", InvalidParams),
    ("log_power_disc(0)@disc", InvalidForDomain),
    ("power_disc(1)", ParseError),
    ("power_disc(1)@torus", ParseError),
])
def test_parse_rejects_bad_specs(text, error):
    with pytest.raises(error):
        parse_weight_spec(text)


def test_rejected_weights_are_weight_invalid():
    with pytest.raises(WeightInvalid):
        parse_weight_spec("power_disc(-1)@disc")


def test_same_and_auto_need_a_base(power_disc):
    with pytest.raises(ParseError):
        parse_weight_spec(SAME)
    v = power_disc(1)
    assert parse_weight_spec(SAME, base=v) is v
    w = parse_weight_spec(AUTO_PARTNER, base=v)
    xs = np.array([-2.0, -0.5, -1e-3])
    np.testing.assert_allclose(w.log_profile(xs) - v.log_profile(xs), t_of_x(xs), rtol=1e-12)


def test_eval_log_closed_forms(power_disc, exp_plane):
    assert eval_log(power_disc(1), 0.5) == pytest.approx(math.log(2.0), abs=1e-12)
    assert eval_log(power_disc(1), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert eval_log(exp_plane(1), 3.0) == pytest.approx(3.0, rel=1e-12)


def test_eval_log_outside_domain(power_disc):
    with pytest.raises(OutOfDomain):
        eval_log(power_disc(1), 1.0)
    with pytest.raises(OutOfDomain):
        eval_log(power_disc(1), -0.1)


def test_t_and_x_are_inverse():
    ts = np.array([0.1, 1.0, 10.0, 30.0])
    np.testing.assert_allclose(t_of_x(x_of_t(ts)), ts, rtol=1e-10)


def test_disc_grid_is_dyadic_in_t(power_disc, settings):
    xs, levels = grid_points(power_disc(1), settings.grid(), settings)
    t = t_of_x(xs)
    assert xs.size == settings.grid_depth * settings.points_per_level
    assert t[-1] == pytest.approx(settings.grid_depth * LOG2, rel=1e-9)
    np.testing.assert_allclose(np.diff(t), LOG2 / settings.points_per_level, rtol=1e-6)
    assert levels.min() == 0
    assert np.all(np.diff(levels) >= 0)


def test_plane_grid_respects_horizon(exp_plane, settings):
    v = make_piecewise([-1.0, 2.0, 5.0], [0.0, 3.0, 20.0], PLANE, horizon=5.0)
    xs, _ = grid_points(v, settings.grid(), settings)
    assert xs[-1] <= 5.0 + 1e-12
    xs_full, _ = grid_points(exp_plane(1), settings.grid(), settings)
    assert xs_full[-1] == pytest.approx(settings.plane_x_max, abs=LOG2 / settings.points_per_level)


def test_plane_grid_ends_on_the_horizon(settings):
    horizon = 5.0
    v = make_piecewise([-1.0, 2.0, horizon], [0.0, 3.0, 20.0], PLANE, horizon=horizon)
    xs, levels = grid_points(v, settings.grid(), settings)
    assert xs[-1] == horizon
    # the lone horizon point joins the last full window
    assert levels[-1] == levels[-2]


@pytest.mark.parametrize("family, params, domain", [
    ('power_disc', [2.0], DISC),
    ('exp_inv_disc', [1.0, 1.0], DISC),
    ('log_power_disc', [2.0], DISC),
    ('rapid_disc', [2.0], DISC),
    ('exp_plane', [1.0], PLANE),
    ('exp_plane', [0.5], PLANE),
    ('power_exp_plane', [2.0, 1.5], PLANE),
])
def test_eval_log_is_nondecreasing(rng, family, params, domain):
    v = make_builtin(family, params, domain)
    top = 1.0 if domain == DISC else 40.0
    pairs = np.sort(rng.uniform(0.0, top, size=(1000, 2)), axis=1)
    for r1, r2 in pairs:
        assert eval_log(v, r1) <= eval_log(v, r2), f"{v.label} at {r1} < {r2}"


def test_breakpoints_are_merged_into_grid(settings):
    v = make_piecewise([-3.0, -1.2345, -0.01], [0.0, 0.5, 6.0], DISC)
    xs, _ = grid_points(v, settings.grid(), settings)
    assert np.any(np.isclose(xs, -1.2345, atol=0, rtol=0))


def test_piecewise_validation():
    with pytest.raises(WeightInvalid):
        make_piecewise([-2.0, -1.0, -0.5], [0.0, 2.0, 1.0], DISC)
    with pytest.raises(OutOfDomain):
        make_piecewise([-2.0, 0.5], [0.0, 1.0], DISC)
    with pytest.raises(DegenerateProfile):
        make_piecewise([-2.0], [0.0], DISC)
    with pytest.raises(WeightInvalid):
        make_piecewise([-2.0, -2.0, -1.0], [0.0, 1.0, 2.0], DISC)


def test_tabulated_weight_interpolates():
    w = make_tabulated([-3.0, -1.0, -0.1], [0.0, 1.0, 5.0], DISC)
    assert w.source is SourceKind.TABULATED
    assert float(w.log_profile(np.array([-2.0]))[0]) == pytest.approx(0.5)
    assert float(w.log_slope(np.array([-0.5]))[0]) == pytest.approx(4.0 / 0.9)


def test_constant_disc_weight_is_rejected(settings):
    v = make_piecewise([-3.0, -2.0], [1.0, 1.0], DISC, horizon=-1e-9)
    with pytest.raises(WeightInvalid) as err:
        validate_weight(v, settings)
    assert err.value.invariant == "v -> infinity as r -> 1"


def test_polynomial_plane_weight_is_rejected(settings):
    # v(r) = r^3 does not beat every power of r
    xs = np.linspace(-1.0, 16.0, 50)
    v = make_piecewise(xs, 3.0 * xs - xs[0] * 3.0, PLANE)
    with pytest.raises(WeightInvalid) as err:
        validate_weight(v, settings)
    assert err.value.invariant == "log r = o(log v)"


def test_over_one_minus_r_is_disc_only(exp_plane):
    with pytest.raises(InvalidForDomain):
        over_one_minus_r(exp_plane(1))


def test_scaled_weight_shifts_log(power_disc):
    v = power_disc(2)
    u = scaled(v, 1.5)
    xs = np.array([-1.0, -0.1])
    np.testing.assert_allclose(u.log_profile(xs) - v.log_profile(xs), 1.5)


def test_rapid_disc_is_tagged(settings):
    v = make_builtin('rapid_disc', [2.0], DISC)
    assert 'rapidly_growing' in v.tags
    p = sample_log_profile(v, settings.grid(), settings)
    assert np.all(np.diff(p.phis) >= 0)


def test_load_piecewise_json(tmp_path):
    path = tmp_path / "weight.json"
    path.write_text(json.dumps({'xs': [-3.0, -1.0, -0.01], 'phis': [0.0, 1.0, 9.0], 'domain': 'disc',
                                'label': 'table'}))
    v = parse_weight_spec(f"piecewise:{path}")
    assert v.label == 'table'
    assert v.source is SourceKind.PIECEWISE
    assert v.horizon == pytest.approx(-0.01)


def test_load_piecewise_json_missing_fields(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({'xs': [0.0, 1.0]}))
    with pytest.raises(ParseError):
        parse_weight_spec(f"piecewise:{path}")
    with pytest.raises(ParseError):
        parse_weight_spec(f"piecewise:{tmp_path / 'absent.json'}")


class TestSettings:
    def test_env_overrides(self):
        s = AnalysisSettings.from_env({'WEIGHTLAB_GRID_DEPTH': '12', 'WEIGHTLAB_PLANE_X_MAX': '9.5'})
        assert s.grid_depth == 12
        assert s.plane_x_max == 9.5
        assert s.points_per_level == AnalysisSettings().points_per_level

    def test_env_rejects_garbage(self):
        with pytest.raises(ParseError):
            AnalysisSettings.from_env({'WEIGHTLAB_N_DISC': 'many'})

    def test_overrides_skip_none_and_reject_unknown(self):
        s = AnalysisSettings().with_overrides(grid_depth=None, n_plane=64)
        assert s.grid_depth == 40
        assert s.n_plane == 64
        with pytest.raises(ParseError):
            AnalysisSettings().with_overrides(depth=3)

    def test_to_dict_lists_menus(self):
        data = AnalysisSettings().to_dict()
        assert data['grid_depth'] == 40
        assert data['menus']['gamma'] == [2.0, 3.0, 4.0, 8.0]
