import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpp_speedlab.acceptance import random_spec
from kpp_speedlab.eigensolver import assemble
from kpp_speedlab.errors import ValidationError
from kpp_speedlab.geometry import make_grid
from kpp_speedlab.model import DiffusionSpec, ProblemSpec, cosine_flow, logistic, zero_flow
from kpp_speedlab.speed import (analytic_bounds, k_of_lambda, lower_bound_certificate, minimal_speed, potential,
                                rescale_identity_check, speed_for_Ab, speed_isotropic)

from conftest import dense_top_eigenvalue


def spec_of(cs, alpha, beta, flow, mu=1.0):
    return ProblemSpec(cs, DiffusionSpec(alpha, beta), flow, logistic(mu))


def test_k_homogeneous_examples():
    cs = make_grid("periodic", 1.0, 16)
    assert k_of_lambda(spec_of(cs, 1, 1, zero_flow(cs)), 1.0).eigenvalue == pytest.approx(2.0, abs=1e-14)
    assert k_of_lambda(spec_of(cs, 4, 1, zero_flow(cs)), 0.5).eigenvalue == pytest.approx(2.0, abs=1e-14)


def test_k_cosine_matches_dense():
    cs = make_grid("periodic", 1.0, 256)
    spec = spec_of(cs, 1, 1, cosine_flow(cs, 1.0))
    k = k_of_lambda(spec, 1.0).eigenvalue
    assert 2.0 < k <= 3.0
    ref = dense_top_eigenvalue(assemble(cs, 1.0, potential(spec, 1.0)).matrix)
    assert abs(k - ref) <= 1e-10 * (1 + abs(ref))


def test_k_rejects_nonpositive_lambda():
    cs = make_grid("periodic", 1.0, 16)
    with pytest.raises(ValidationError):
        k_of_lambda(spec_of(cs, 1, 1, zero_flow(cs)), 0.0)


def test_homogeneous_speeds():
    cs = make_grid("periodic", 1.0, 64)
    r = minimal_speed(spec_of(cs, 1, 1, zero_flow(cs)))
    assert r.c_star == pytest.approx(2.0, abs=1e-10) and r.lambda_star == pytest.approx(1.0, rel=1e-7)
    assert minimal_speed(spec_of(cs, 4, 4, zero_flow(cs))).c_star == pytest.approx(4.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.05, 20), st.sampled_from(["periodic", "neumann"]),
       st.integers(4, 64))
def test_zero_flow_reduction(alpha, beta, mu, bc, n):
    cs = make_grid(bc, 1.0, n)
    c = minimal_speed(spec_of(cs, alpha, beta, zero_flow(cs), mu)).c_star
    assert c == pytest.approx(2 * math.sqrt(alpha * mu), abs=1e-10 * max(1.0, c))


def test_small_b_speed_close_to_limit():
    cs = make_grid("periodic", 1.0, 512)
    b = 1e-3
    r = minimal_speed(spec_of(cs, b, b, cosine_flow(cs, 6.0).scaled(math.sqrt(b))))
    assert abs(r.c_star / math.sqrt(b) - 8.0) / 8.0 < 0.05


def test_speed_for_Ab_examples(cos6_256, kpp):
    zf = zero_flow(make_grid("periodic", 1.0, 32))
    for b in (1.0, 1e-3, 7.0, 1e3):
        assert speed_for_Ab(b, zf, kpp).c_star == pytest.approx(2.0, abs=1e-10)
    c = speed_for_Ab(1.0, cos6_256, kpp).c_star
    assert 2.0 < c < 8.0
    assert rescale_identity_check(1.0, cos6_256, kpp) <= 1e-10


def test_rescale_identity_examples(kpp):
    zf = zero_flow(make_grid("periodic", 1.0, 32))
    assert rescale_identity_check(4.0, zf, kpp) <= 1e-10
    cos1 = cosine_flow(make_grid("periodic", 1.0, 256), 1.0)
    assert rescale_identity_check(0.25, cos1, kpp) <= 1e-8


def test_rescale_identity_from_independent_sides(cos6_256, kpp):
    # recompute both sides by hand rather than through rescale_identity_check
    for b in (0.1, 10.0):
        left = speed_isotropic(b, cos6_256.scaled(math.sqrt(b)), kpp).c_star
        right = math.sqrt(b) * speed_for_Ab(b, cos6_256, kpp).c_star
        assert abs(left - right) / right <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_speed_result_invariants(seed):
    spec = random_spec(np.random.default_rng(seed))
    r = minimal_speed(spec)
    assert r.c_star > 0
    assert abs(r.c_star - r.k_at_star / r.lambda_star) <= 1e-12 * r.c_star
    assert r.bracket[0] < r.lambda_star < r.bracket[1]
    assert 2 * math.sqrt(spec.diffusion.axial * spec.growth_rate) - 1e-9 <= r.c_star
    assert r.c_star <= 2 * math.sqrt(spec.diffusion.axial * spec.growth_rate) + spec.flow.max_value + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 2))
def test_bounds_sandwich(seed, log_lam):
    spec = random_spec(np.random.default_rng(seed))
    lam = 10.0 ** log_lam
    k = k_of_lambda(spec, lam).eigenvalue
    lo, hi = analytic_bounds(spec, lam)
    slack = 1e-12 * (1 + abs(k))
    assert lo - slack <= k <= hi + slack


def test_bounds_examples():
    cs = make_grid("periodic", 1.0, 64)
    zs = spec_of(cs, 1, 1, zero_flow(cs))
    lo, hi = analytic_bounds(zs, 0.7)
    assert lo == hi == pytest.approx(k_of_lambda(zs, 0.7).eigenvalue, abs=1e-13)
    assert analytic_bounds(spec_of(cs, 1, 1, cosine_flow(cs, 6.0)), 1.0) == (2.0, 8.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 1), st.floats(-2, 1))
def test_k_midpoint_convex(seed, a, b):
    spec = random_spec(np.random.default_rng(seed))
    l1, l2 = 10.0 ** a, 10.0 ** b
    k1, k2 = k_of_lambda(spec, l1).eigenvalue, k_of_lambda(spec, l2).eigenvalue
    km = k_of_lambda(spec, 0.5 * (l1 + l2)).eigenvalue
    assert km <= 0.5 * (k1 + k2) + 1e-10 * (1 + max(abs(k1), abs(k2)))


def test_golden_section_matches_log_scan(cos6_256, kpp):
    spec = ProblemSpec(cos6_256.cross_section, DiffusionSpec.ab(0.3), cos6_256, kpp)
    r = minimal_speed(spec)
    lams = np.geomspace(r.lambda_star / 20, r.lambda_star * 20, 2000)
    vals = [k_of_lambda(spec, lam).eigenvalue / lam for lam in lams]
    j = int(np.argmin(vals))
    step = math.log(lams[1] / lams[0])
    assert abs(math.log(r.lambda_star / lams[j])) <= step
    assert r.c_star <= min(vals) + 1e-12


def test_warm_start_caching_is_harmless(cos6_256, kpp):
    spec = ProblemSpec(cos6_256.cross_section, DiffusionSpec.ab(0.3), cos6_256, kpp)
    r = minimal_speed(spec)
    cold = k_of_lambda(spec, r.lambda_star).eigenvalue
    assert abs(cold - r.k_at_star) <= 1e-12 * (1 + abs(cold))


def test_speed_increases_with_growth_rate(cos6_256):
    cs = cos6_256.cross_section
    speeds = [minimal_speed(ProblemSpec(cs, DiffusionSpec.ab(0.5), cos6_256, logistic(mu))).c_star
              for mu in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(b > a for a, b in zip(speeds, speeds[1:]))


def test_continuity_in_parameters(cos6_256, kpp):
    cs = cos6_256.cross_section
    base = minimal_speed(ProblemSpec(cs, DiffusionSpec(1.0, 0.5), cos6_256, kpp)).c_star
    for eps in (1e-3, 1e-5):
        nearby = [
            minimal_speed(ProblemSpec(cs, DiffusionSpec(1.0 + eps, 0.5), cos6_256, kpp)).c_star,
            minimal_speed(ProblemSpec(cs, DiffusionSpec(1.0, 0.5 + eps), cos6_256, kpp)).c_star,
            minimal_speed(ProblemSpec(cs, DiffusionSpec(1.0, 0.5), cos6_256.scaled(1 + eps), kpp)).c_star,
            minimal_speed(ProblemSpec(cs, DiffusionSpec(1.0, 0.5), cos6_256, logistic(1 + eps))).c_star,
        ]
        assert max(abs(c - base) for c in nearby) <= 20 * eps


def test_normalized_map_decreasing(cos6_256, kpp):
    vals = [speed_isotropic(beta, cos6_256.scaled(math.sqrt(beta)), kpp).c_star / math.sqrt(beta)
            for beta in (0.25, 1.0, 4.0, 16.0)]
    assert all(b - a < -1e-6 for a, b in zip(vals, vals[1:]))


def test_certificate_examples(kpp):
    cs = make_grid("periodic", 1.0, 512)
    flow = cosine_flow(cs, 6.0)
    cert = lower_bound_certificate(ProblemSpec(cs, DiffusionSpec.ab(1e-4), flow, kpp), 1.0)
    assert cert.limit == pytest.approx(7.0)
    assert cert.at(0.0) == pytest.approx(7.0)
    assert cert.value <= speed_for_Ab(1e-4, flow, kpp).c_star
    assert cert.at(2 * cert.b0) == -math.inf


@pytest.mark.parametrize("b", [1e-4, 1e-3, 1e-2])
def test_certificate_is_a_lower_bound(b, kpp):
    cs = make_grid("neumann", 1.0, 256)
    flow = cosine_flow(cs, 6.0)
    for delta in (0.5, 1.0, 3.0):
        cert = lower_bound_certificate(ProblemSpec(cs, DiffusionSpec.ab(b), flow, kpp), delta)
        assert cert.value <= speed_for_Ab(b, flow, kpp).c_star + 1e-9


def test_certificate_validation(kpp):
    cs = make_grid("periodic", 1.0, 64)
    with pytest.raises(ValidationError):
        lower_bound_certificate(spec_of(cs, 1, 1, zero_flow(cs)), 1.0)
    with pytest.raises(ValidationError):
        lower_bound_certificate(spec_of(cs, 1, 1, cosine_flow(cs, 6.0)), 7.0)
