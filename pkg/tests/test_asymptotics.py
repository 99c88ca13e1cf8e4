import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpp_speedlab import asymptotics as asy
from kpp_speedlab.errors import PremiseError, SearchBudgetError, ValidationError
from kpp_speedlab.geometry import make_grid
from kpp_speedlab.model import DiffusionSpec, cosine_flow, logistic, zero_flow
from kpp_speedlab.speed import speed_for_Ab


@pytest.fixture(scope="module")
def cos6_512():
    return cosine_flow(make_grid("periodic", 1.0, 512), 6.0)


def test_predicted_limits():
    cs = make_grid("periodic", 1.0, 64)
    assert asy.predict_limit_b_to_zero(cosine_flow(cs, 6.0), logistic(1.0)) == 8.0
    assert asy.predict_limit_b_to_zero(zero_flow(cs), logistic(1.0)) == 2.0
    assert asy.predict_limit_b_to_zero(cosine_flow(cs, 1.0), logistic(4.0)) == 5.0
    for mu, lim in ((1.0, 2.0), (0.25, 1.0), (4.0, 4.0)):
        assert asy.predict_limit_b_to_infinity(logistic(mu)) == lim


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.2, 3.0))
def test_extrapolation_recovers_power_law(limit, amp, p):
    if abs(amp) < 1e-3:
        return
    s = np.array([0.1, 0.05, 0.025, 0.0125])
    L, order, note = asy.extrapolate(s, limit + amp * s ** p)
    assert L == pytest.approx(limit, abs=1e-7 * (1 + abs(amp)))
    assert order == pytest.approx(p, rel=1e-6)


def test_extrapolation_fallbacks():
    s = [1.0, 0.5, 0.25]
    assert asy.extrapolate(s, [2.0, 2.0, 2.0])[2] == "converged"
    assert "not shrinking" in asy.extrapolate(s, [1.0, 2.0, 1.0])[2]


def test_zero_flow_limits_exact(kpp):
    zf = zero_flow(make_grid("periodic", 1.0, 16))
    for direction in (asy.TO_ZERO, asy.TO_INFINITY):
        rep = asy.verify_limit(direction, zf, kpp)
        assert all(c == pytest.approx(2.0, abs=1e-10) for c in rep.speeds)
        assert rep.relative_error <= 1e-10


def test_limit_to_zero(cos6_512, kpp):
    rep = asy.verify_limit(asy.TO_ZERO, cos6_512, kpp)
    assert rep.relative_error <= 0.02 and rep.monotone
    assert all(2.0 <= c <= 8.0 + 0.16 for c in rep.speeds)


def test_limit_to_infinity(cos6_512, kpp):
    rep = asy.verify_limit(asy.TO_INFINITY, cos6_512, kpp)
    assert rep.relative_error <= 0.01
    assert all(c >= 2.0 - 1e-9 for c in rep.speeds)


def test_verify_limit_validation(cos6_512, kpp):
    with pytest.raises(ValidationError):
        asy.verify_limit("sideways", cos6_512, kpp)
    with pytest.raises(ValidationError):
        asy.verify_limit(asy.TO_ZERO, cos6_512, kpp, b_schedule=[1e-1, 1e-2, 1e-1, 1e-3])
    with pytest.raises(ValidationError):
        asy.verify_limit(asy.TO_INFINITY, cos6_512, kpp, b_schedule=[10, 20, 30])


def test_proportional_counterexample(cos6_512, kpp):
    rep = asy.find_proportional_counterexample(cos6_512, kpp, delta=1.0)
    assert rep.margin > 0 and rep.confirm_margin > 0 and rep.verified
    assert rep.epsilon1 < rep.M1
    root = math.sqrt(rep.M1)
    for c in (rep.speed_small_diffusion, rep.speed_large_diffusion):
        assert 2.0 * root - 1e-9 <= c <= 8.0 * root + 1e-9
    # the two inequalities the search stops on
    assert rep.speed_large_diffusion / root < 2.0 + 1.0
    assert rep.speed_small_diffusion / root > 6.0 - 1.0
    # the inequality holds for every eps <= eps1, not only at the witness
    for k in (1, 2):
        c_eps = asy._c_isotropic(rep.epsilon1 / 2 ** k, root, cos6_512, kpp)
        assert c_eps > rep.speed_large_diffusion
    small, large = asy.reverify_proportional(rep, cos6_512, kpp)
    assert small == pytest.approx(rep.speed_small_diffusion, rel=1e-8)
    assert large == pytest.approx(rep.speed_large_diffusion, rel=1e-8)


def test_proportional_premise_failures(kpp):
    cs = make_grid("periodic", 1.0, 64)
    with pytest.raises(PremiseError, match="unsatisfiable"):
        asy.find_proportional_counterexample(zero_flow(cs), kpp)
    with pytest.raises(PremiseError):
        asy.find_proportional_counterexample(cosine_flow(cs, 6.0), logistic(9.0), delta=0.01)
    with pytest.raises(PremiseError):
        asy.find_proportional_counterexample(cosine_flow(cs, 6.0), logistic(9.0))
    with pytest.raises(PremiseError, match=r"5 < 6 - 3 = 3 fails"):
        asy.find_proportional_counterexample(cosine_flow(cs, 6.0), kpp, delta=1.0 + 2.0)


def test_default_delta(cos6_512, kpp):
    assert asy.default_delta(cos6_512, kpp) == pytest.approx(1.0)


def test_search_budget_exhaustion(cos6_512, kpp):
    with pytest.raises(SearchBudgetError) as exc:
        asy.find_proportional_counterexample(cos6_512, kpp, delta=1.0, n_confirm=None, budget=0)
    assert exc.value.trace


def test_nonproportional_counterexample(cos6_512, kpp):
    rep = asy.find_nonproportional_counterexample(cos6_512, kpp, delta=1.0)
    eps, M, c_eps, c_M = rep
    assert eps < 1.0 < M
    assert DiffusionSpec.ab(eps).dominated_by(DiffusionSpec.ab(M))
    assert c_M < 3.0 < 7.0 < c_eps
    assert rep.verified and rep.confirm_margin > 0
    assert speed_for_Ab(M, cos6_512, kpp).c_star == c_M


def test_nonproportional_zero_flow(kpp):
    with pytest.raises(PremiseError):
        asy.find_nonproportional_counterexample(zero_flow(make_grid("periodic", 1.0, 32)), kpp, delta=1.0)


def test_scan_zero_flow_constant(kpp):
    zf = zero_flow(make_grid("neumann", 1.0, 16))
    rows = asy.scan_speed_vs_b(zf, kpp, b_grid=np.geomspace(1e-3, 1e3, 7))
    assert all(r.status == "ok" and r.c_star == pytest.approx(2.0, abs=1e-10) for r in rows)


def test_scan_endpoints_and_order(cos6_512, kpp):
    cs = make_grid("periodic", 1.0, 64)
    flow = cosine_flow(cs, 6.0)
    grid = np.geomspace(1e-3, 1e3, 13)
    serial = asy.scan_speed_vs_b(flow, kpp, b_grid=grid, workers=1)
    parallel = asy.scan_speed_vs_b(flow, kpp, b_grid=grid, workers=4)
    assert serial == parallel
    assert [r.b for r in serial] == list(grid)
    assert serial[0].c_star == speed_for_Ab(grid[0], flow, kpp).c_star
    assert serial[-1].c_star == speed_for_Ab(grid[-1], flow, kpp).c_star
    cs_ = [r.c_star for r in serial]
    assert all(b < a for a, b in zip(cs_, cs_[1:]))


def test_scan_records_failures(monkeypatch, kpp):
    from kpp_speedlab.errors import BracketingError
    flow = cosine_flow(make_grid("periodic", 1.0, 32), 6.0)
    real = asy.speed_for_Ab

    def flaky(b, *a, **k):
        if b > 1:
            raise BracketingError("forced")
        return real(b, *a, **k)

    monkeypatch.setattr(asy, "speed_for_Ab", flaky)
    rows = asy.scan_speed_vs_b(flow, kpp, b_grid=[0.5, 2.0])
    assert [r.status for r in rows] == ["ok", "failed"]
    assert math.isnan(rows[1].c_star) and "forced" in rows[1].error


def test_scan_validation(kpp):
    flow = cosine_flow(make_grid("periodic", 1.0, 32), 6.0)
    for grid in ([], [1.0, -1.0], [2.0, 1.0]):
        with pytest.raises(ValidationError):
            asy.scan_speed_vs_b(flow, kpp, b_grid=grid)


@pytest.mark.parametrize("raw,ok", [("3", 3), ("", None), ("0", False), ("x", False), ("-2", False)])
def test_worker_count_env(monkeypatch, raw, ok):
    monkeypatch.setenv(asy.THREADS_ENV, raw)
    if ok is False:
        with pytest.raises(ValidationError):
            asy.worker_count()
    elif ok is None:
        assert asy.worker_count() >= 1
    else:
        assert asy.worker_count() == ok
