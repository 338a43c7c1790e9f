import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafatou.errors import DomainError, PoleError, PrecondError
from parafatou.maps import BivariateFamily, PolynomialMap1D, eval_map, mobius_n
from parafatou.param import entry_index, phi_limit, phi_n
from parafatou.skew import (
    SkewMap,
    SkewPoint,
    check_special_skew,
    diagnose_lemma_bounds,
    example_family,
    lemma_grid,
    one_step_x0,
    skew_orbit,
    skew_phi_extended,
    skew_phi_finite_extension,
    skew_phi_limit,
    skew_phi_n,
    skew_phi_via_x0,
    skew_step,
    t_independent,
    v_eps,
    verify_skew_functional_equation,
)

EX = example_family()
CUBIC = PolynomialMap1D((1, 1, 1))
FLAT = t_independent(CUBIC)
FLAT_MOB = t_independent(PolynomialMap1D.mobius_special())
EPS = float(np.finfo(float).eps)

base_t = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


def test_skewmap_requires_special_family():
    with pytest.raises(PrecondError):
        SkewMap(BivariateFamily(((0, 1), (1, 0), (1, 0), (1, 0))))


def test_step_examples():
    p = skew_step(EX, SkewPoint(0.3, 0))
    assert p.t == pytest.approx(0.3 / 1.3, rel=1e-15) and p.z == 0
    p = skew_step(EX, SkewPoint(0.3, -1))
    assert p.z == pytest.approx(0.3, abs=1e-14)
    p = skew_step(FLAT, SkewPoint(0.1, 0.1))
    assert p.t == pytest.approx(0.1 / 1.1, rel=1e-15)
    assert p.z == pytest.approx(0.111, abs=1e-15)


def test_step_pole():
    with pytest.raises(PoleError):
        skew_step(EX, SkewPoint(-1, 0.1))


def test_orbit_trivial_and_fixed_fiber():
    p = SkewPoint(0.2, 0.01)
    assert skew_orbit(EX, p, 0) == [p]
    eps = v_eps(EX).eps
    orb = skew_orbit(EX, SkewPoint(eps, 0), 100)
    assert all(q.z == 0 for q in orb)


@settings(max_examples=50, deadline=None)
@given(t=base_t, n=st.integers(0, 300))
def test_orbit_base_closed_form(t, n):
    if any(abs(1 + k * t) < 1e-2 for k in range(n + 1)):
        return
    orb = skew_orbit(FLAT, SkewPoint(t, 0), n)
    assert all(q.t == mobius_n(t, k) for k, q in enumerate(orb))
    # the same base reached one Moebius step at a time
    b = t
    for k in range(n):
        b = skew_step(FLAT, SkewPoint(b, 0)).t
    cond = 1 + n * abs(t) / abs(1 + n * t)
    assert abs(b - orb[-1].t) <= 4 * EPS * abs(orb[-1].t) * cond * max(n, 1)


def test_skew_phi_examples():
    assert skew_phi_n(EX, 0.01 + 0.002j, 0) == 0.01 + 0.002j
    assert skew_phi_n(FLAT, 0.05, 500) == phi_n(CUBIC, 0.05, 500)
    assert abs(skew_phi_n(FLAT_MOB, 0.05, 1000) - 0.05) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(t=base_t, n=st.integers(0, 1000))
def test_reduction_bitwise(t, n):
    try:
        a = phi_n(CUBIC, t, n)
    except (PoleError, OverflowError):
        return
    assert skew_phi_n(FLAT, t, n) == a


def test_limit_identity_case():
    r = skew_phi_limit(FLAT_MOB, 0.03, 1e-10)
    assert abs(r.value - 0.03) <= 1e-12


def test_limit_domain():
    with pytest.raises(DomainError):
        skew_phi_limit(EX, 0.5, 1e-6)


def test_limit_flat_matches_1d():
    a = skew_phi_limit(FLAT, 0.05, 1e-6).value
    b = phi_limit(CUBIC, 0.05, 1e-6).value
    assert abs(a - b) < 2e-6


def test_skew_feq_example():
    ts = v_eps(EX).sample(np.random.default_rng(2), 5)
    rep = verify_skew_functional_equation(EX, ts, 1e-5)
    assert rep.passed, rep.samples


def test_extension_recomposition():
    # a parameter needing N = 3 forward steps
    R = EX.constants.R
    t = 1 / complex(R / 0.9 - 3 + 0.5, 2.0)
    r = skew_phi_extended(EX, t, 1e-9, method="richardson")
    assert r.N == 3 == entry_index(t, R)
    inner = skew_phi_limit(EX, t / (1 + 3 * t), 1e-11, method="richardson").value
    z = inner
    for _ in range(3):
        z = eval_map(EX.f0, z)
    assert abs(z - r.value) < 1e-8


@pytest.mark.parametrize("n", [0, 5, 40, 300])
def test_finite_extension_display(n):
    t = complex(-0.01, 0.02)
    N = entry_index(t, EX.constants.R)
    a = skew_phi_n(EX, t, N + n)
    b = skew_phi_finite_extension(EX, t, N, n)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_certificate_examples():
    assert check_special_skew(EX, -1)
    bad = check_special_skew(EX, 1)
    assert not bad and any("80" in v for v in bad.violations)
    assert not check_special_skew(FLAT, 0.3)
    assert not check_special_skew(EX, 0)


def test_via_x0_examples():
    t = 0.05
    assert skew_phi_via_x0(EX, -1, t, 200) == skew_phi_n(EX, t, 200)
    assert skew_phi_via_x0(EX, -1, t, 0) == t
    with pytest.raises(PrecondError):
        skew_phi_via_x0(EX, 0.5, t, 3)


@settings(max_examples=100, deadline=None)
@given(t=base_t, n=st.integers(0, 2000))
def test_one_step_identity(t, n):
    if abs(1 + n * t) < 1e-3 or abs(1 + (n + 1) * t) < 1e-3:
        return
    p = one_step_x0(EX, -1, t, n)
    assert abs(p.t - mobius_n(t, n + 1)) <= 1e-12
    assert abs(p.z - mobius_n(t, n)) <= 1e-12


def test_lemma_trivial():
    u = 2 * EX.constants.R_prime
    d = diagnose_lemma_bounds(EX, u, 0)
    assert d.u_values == [u] and d.ok


def test_lemma_margins_example():
    d = diagnose_lemma_bounds(EX, 2 * EX.constants.R_prime, 50)
    assert all(m > 0 for m in d.re_margins)
    assert len(d.u_values) == len(d.re_margins) == 51 and len(d.gaps) == 51


def test_lemma_gap_bound_sweep():
    u = 2 * EX.constants.R_prime
    for n in range(10, 201, 10):
        d = diagnose_lemma_bounds(EX, u, n)
        assert d.gaps[-1] <= d.gap_bound


def test_lemma_grid_clean():
    for u in lemma_grid(EX):
        for n in (1, 17, 120):
            assert diagnose_lemma_bounds(EX, u, n).ok


def test_lemma_domain():
    with pytest.raises(DomainError):
        diagnose_lemma_bounds(EX, EX.constants.R_prime * 0.5, 3)


def test_lemma_reports_violations_without_raising():
    # a bound far too strict for this start is recorded, not raised
    d = diagnose_lemma_bounds(EX, EX.constants.R_prime + 0.01 + 60j, 30)
    rows = d.rows()
    assert len(rows) == 31 and {"i", "re_margin", "gap", "bound"} <= set(rows[0])
    assert isinstance(d.violations, list)
