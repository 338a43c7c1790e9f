from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafatou.errors import DomainError, InsufficientData, PoleError
from parafatou.maps import PolynomialMap1D, estimate_chart_constants, eval_map
from parafatou.param import (
    DomainVEps,
    chart_inverse,
    fit_decay,
    gamma_n,
    phi_extended,
    phi_limit,
    phi_n,
    psi_n,
    verify_functional_equation,
)

CUBIC = PolynomialMap1D((1, 1, 1))
MOB = PolynomialMap1D.mobius_special()
EPS = float(np.finfo(float).eps)


def cubic_exact(z: Fraction) -> Fraction:
    return z + z**2 + z**3


def test_domain_membership():
    d = DomainVEps(0.25)
    assert 0.25 in d and 0 not in d and 0.5 not in d


def test_domain_samples_inside():
    d = DomainVEps(1 / 16)
    assert all(z in d for z in d.sample(np.random.default_rng(0), 500))


def test_phi_n_zero_is_identity():
    assert phi_n(CUBIC, 0.3, 0) == 0.3


def test_phi_n_one_step_oracle():
    z = Fraction(1, 10)
    exact = cubic_exact(z / (1 + z))
    assert phi_n(CUBIC, 0.1, 1) == pytest.approx(float(exact), abs=1e-16)
    assert float(exact) == pytest.approx(0.0999248685, abs=1e-10)


def test_phi_n_mobius_identity():
    assert abs(phi_n(MOB, 0.2, 1000) - 0.2) <= 1e-12


def test_phi_n_pole():
    with pytest.raises(PoleError):
        phi_n(CUBIC, -0.5, 2)


@settings(max_examples=100, deadline=None)
@given(
    r=st.floats(0.0, 0.98),
    a=st.floats(0, 2 * np.pi),
    n=st.integers(0, 2000),
)
def test_one_step_functional_identity(r, a, n):
    # phi_{n+1}(z/(1-z)) = f(phi_n(z)) as composed expressions
    eps = estimate_chart_constants(CUBIC).eps
    z = eps + r * eps * complex(np.cos(a), np.sin(a))
    if z == 0:
        return
    lhs = phi_n(CUBIC, z / (1 - z), n + 1)
    rhs = eval_map(CUBIC, phi_n(CUBIC, z, n))
    # the two sides round differently in the first Moebius step and the
    # difference is carried through n steps with relative gain about 1 + n|z|
    assert abs(lhs - rhs) <= 16 * EPS * abs(rhs) * (1 + n * abs(z))


def test_phi_limit_mobius():
    r = phi_limit(MOB, 0.05, 1e-10)
    assert abs(r.value - 0.05) <= 1e-12 and r.n_used < 100


def test_phi_limit_self_consistency():
    r = phi_limit(CUBIC, 0.05, 1e-6)
    assert abs(r.value - phi_n(CUBIC, 0.05, 4 * r.n_used)) < 1e-6
    assert r.tail_bound <= 1e-6


def test_phi_limit_history_envelope():
    r = phi_limit(CUBIC, 0.05, 1e-7)
    diffs = [d for _, d in r.history]
    assert all(d >= 0 for d in diffs)
    # beyond burn-in each checkpoint difference shrinks, within a factor-4 envelope
    assert all(b <= 4 * a for a, b in zip(diffs[2:], diffs[3:]))


def test_phi_limit_domain():
    with pytest.raises(DomainError):
        phi_limit(CUBIC, 0.5, 1e-6)


def test_phi_limit_zero():
    r = phi_limit(CUBIC, 0, 1e-6)
    assert r.value == 0 and r.n_used == 0


def test_phi_limit_disk_centre_feq():
    eps = estimate_chart_constants(CUBIC).eps
    rep = verify_functional_equation(CUBIC, [eps], 1e-5)
    assert rep.passed


def test_phi_extended_mobius():
    r = phi_extended(MOB, 5, 1e-10)
    assert abs(r.value - 5) < 1e-10 and r.N > 0


def test_phi_extended_inside_uses_n_zero():
    a = phi_extended(CUBIC, 0.05, 1e-6)
    b = phi_limit(CUBIC, 0.05, 1e-6)
    assert a.N == 0 and a.value == b.value


def test_phi_extended_pole_on_chain():
    # 1 + 2t = 0 for t = -1/2, so m_2(t) is a pole
    with pytest.raises(PoleError):
        phi_extended(CUBIC, -0.5, 1e-6)


@pytest.mark.parametrize("method", ["plain", "richardson"])
def test_phi_extended_off_axis_feq(method):
    rep = verify_functional_equation(CUBIC, [-0.1 + 0.3j, 0.3 + 0.2j, -0.2 + 0.5j], 1e-5, method=method)
    assert rep.passed, rep.samples


def test_phi_extended_recomposition():
    t = -0.1 + 0.3j
    r = phi_extended(CUBIC, t, 1e-6, method="richardson")
    inner = phi_limit(CUBIC, t / (1 + r.N * t), 1e-9, method="richardson")
    z = inner.value
    for _ in range(r.N):
        z = eval_map(CUBIC, z)
    assert abs(z - r.value) < 1e-6


def test_feq_mobius_exact():
    rep = verify_functional_equation(MOB, [0.1, 0.2 + 0.1j, 3 - 1j], 1e-5)
    assert rep.max_residual <= 1e-12


def test_feq_non_special_flagged():
    rep = verify_functional_equation(PolynomialMap1D((1, 2)), [0.01], 1e-5)
    assert not rep.precondition_ok and not rep.passed
    assert "precondition" in rep.note


def test_psi_examples():
    R = estimate_chart_constants(CUBIC).R
    assert psi_n(CUBIC, 2 * R + 1j, 0) == 2 * R + 1j
    Rm = estimate_chart_constants(MOB).R
    assert abs(psi_n(MOB, 2 * Rm, 50) - 2 * Rm) <= 1e-12
    assert abs(psi_n(CUBIC, 2 * R, 20) - 1 / phi_n(CUBIC, 1 / (2 * R), 20)) <= 1e-12 * 2 * R


def test_psi_domain():
    with pytest.raises(DomainError):
        psi_n(CUBIC, 1.0, 3)


def test_chart_conjugacy():
    R = estimate_chart_constants(CUBIC).R
    rng = np.random.default_rng(5)
    for _ in range(50):
        w = complex(R + rng.uniform(0.01, 50), rng.uniform(-50, 50))
        n = int(rng.integers(0, 1001))
        assert abs(psi_n(CUBIC, w, n) - 1 / phi_n(CUBIC, 1 / w, n)) <= 1e-10 * abs(w)


def test_gamma_examples():
    c = estimate_chart_constants(CUBIC)
    u = 2 * c.R_prime
    assert gamma_n(CUBIC, u, 0) == u
    cm = estimate_chart_constants(MOB)
    assert abs(gamma_n(MOB, 2 * cm.R_prime, 100) - 2 * cm.R_prime) <= 1e-12
    g = gamma_n(CUBIC, u, 20000)
    gh = gamma_n(CUBIC, chart_inverse(CUBIC, u), 20000)
    assert abs(gh - g - 1) < 1e-8


def test_gamma_domain():
    with pytest.raises(DomainError):
        gamma_n(CUBIC, 1.0, 3)


def test_gamma_weak_bound():
    # |gamma(u) - u| stays below C/|u| with one constant over a range of u
    c = estimate_chart_constants(CUBIC)
    vals = []
    for s in (1.5, 3, 6, 12):
        u = s * c.R_prime
        vals.append(abs(gamma_n(CUBIC, u, 5000) - u) * abs(u))
    assert max(vals) < 4 * min(vals)


def test_gamma_successive_differences():
    c = estimate_chart_constants(CUBIC)
    u = 2 * c.R_prime + 3j
    for n in range(0, 200, 7):
        a = gamma_n(CUBIC, u, n)
        b = gamma_n(CUBIC, u, n + 1)
        h = gamma_n(CUBIC, u, n) + n
        assert abs(b - a) <= c.A / abs(h) ** 2 + 1e-12 * abs(h)


def test_inverse_chart_solves():
    u = 40 + 5j
    x = chart_inverse(CUBIC, u)
    assert abs(1 / eval_map(CUBIC, 1 / x) - u) <= 1e-13 * abs(u)


def test_fit_decay_cubic():
    fit = fit_decay(CUBIC, 0.05, (100, 5000))
    assert 1.8 <= fit.exponent <= 2.2
    assert len(fit.ns) >= 10
    peak = max(d * (1 + n * 0.05) ** 2 / 0.05**2 for n, d in zip(fit.ns, fit.diffs))
    assert peak / 10 <= fit.constant <= peak * 10


def test_fit_decay_mobius_degenerate():
    with pytest.raises(InsufficientData):
        fit_decay(MOB, 0.05, (100, 5000))


def test_real_slice_monotone():
    for f in (CUBIC, MOB):
        eps = estimate_chart_constants(f).eps
        zs = np.linspace(0.05, 1.95, 12) * eps
        vals = [phi_n(f, z, 300) for z in zs]
        assert all(v.real > 0 for v in vals)
        assert all(b.real > a.real for a, b in zip(vals, vals[1:]))


def test_report_serialises():
    rep = verify_functional_equation(CUBIC, [0.05, -0.5], 1e-5)
    d = rep.as_dict()
    assert "max_residual" in d and len(d["samples"]) == 2
    assert d["samples"][1]["skipped"] == "PoleError"
