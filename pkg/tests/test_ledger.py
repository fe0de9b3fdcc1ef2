"""Derived constants: frozen oracle values, identities, tuning, gap estimate."""

import mpmath
import pytest
from mpmath import mpf

from ffgscon.fixtures import builtin_instances, get_fixture, threshold_grid
from ffgscon.instances import GsconInstance, HamiltonianTerm, gate_h, gate_i, gate_x
from ffgscon.ledger import (
    GAP_ESTIMATE_KAPPA,
    LedgerInvariantError,
    derive_parameters,
    gap_order_estimate,
    qma2_tuning,
)

import numpy as np

# Frozen expected values for the idle fixture (m=1, G=4, R=1, eta2=1/2,
# eta3=1/4, eta4=3/4), produced by a straight-line evaluation of the closed
# forms at 80 significant digits, independent of the ledger code.
IDLE_ORACLE = {
    "h": "0.1178511301977579207334740603508081732141",
    "mu": "0.000262200138496512062036757816764269497591",
    "t": "49338962179.29027684947100194725826579465",
    "z": "0.00000006874891262759010661592914900433359426894",
    "c": "1.026975276584649616373206198369114547775e-22",
    "x": "0.00000000002026795773219047954479043307910778132929",
    "delta_small": "2.60183643722778819098462894152881677499e-34",
    "r1": "8.461941057607737749370165542426107163908e-69",
    "r2": "1.054678218716117578618150283075401502424e-44",
    "r3": "2.053950553169299232746412396738229095551e-23",
    "r4": "0.00000001718722815689752665398228725108339856724",
    "r5": "0.0000000005371008799030477079369464765963562052261",
    "r6": "0.001730648608225767109818678656595188829911",
    "r7": "0.03258140066377658122280276934067278646248",
    "r8": "0.0625",
    "one_minus_s": "8.461941057607737749370158753204030539136e-69",
    "p7": "2.597169208571064453070403273842637313586e-67",
    "gap": "8.293156499025021934416631398372984127442e-71",
}


def _rel(a, b):
    return abs(mpf(a) - mpf(b)) / abs(mpf(b))


def test_idle_ledger_matches_frozen_oracle():
    led = derive_parameters(get_fixture("idle").instance)
    with mpmath.workdps(60):
        for name, field in [
            ("h", led.h), ("mu", led.mu), ("t", led.t), ("z", led.z),
            ("c", led.c), ("x", led.x), ("delta_small", led.delta_small),
            ("one_minus_s", led.one_minus_s_prime), ("p7", led.p[6]), ("gap", led.gap_lower),
        ]:
            # oracle literals carry 40 digits; agreement far beyond the 1e-9 requirement
            assert _rel(field, IDLE_ORACLE[name]) < mpf("1e-35"), name
        for i in range(8):
            assert _rel(led.r[i], IDLE_ORACLE[f"r{i+1}"]) < mpf("1e-35"), f"r{i+1}"


def test_r1_two_path_cross_check():
    # delta route vs closed monomial, recomputed here from scratch
    for fx in builtin_instances():
        led = derive_parameters(fx.instance)
        with mpmath.workdps(80):
            G, m, t = mpf(fx.instance.G), mpf(fx.instance.m), led.t
            via_delta = led.delta_small**2 / 8
            closed = 1 / (32 * G**4 * m**8 * t**6)
            assert _rel(via_delta, led.r[0]) < mpf("1e-9")
            assert _rel(closed, led.r[0]) < mpf("1e-9")


def test_probability_identities():
    for fx in builtin_instances():
        led = derive_parameters(fx.instance)
        with mpmath.workdps(60):
            assert abs(sum(led.p) - 1) < mpf("1e-12")
            for i in range(8):
                assert _rel(led.p[i] * led.r[i], led.one_minus_s_prime) < mpf("1e-12")
            assert all(0 < ri < 1 for ri in led.r)
            assert 6 * led.mu <= led.h
            assert led.mu < 1 / (36 * mpf(fx.instance.m))
            assert led.eta3 + led.h <= mpmath.sqrt(mpf(2))
            assert led.gap_lower > 0
            assert led.cs_gap >= led.gap_lower


def test_gap_monotonicity_over_grid():
    base = dict(gate_counts=(4,), deltas=(0.25,))
    gaps_m = [derive_parameters(inst).gap_lower for inst in threshold_grid(ms=(1, 2, 3, 4), **base)[:4]]
    assert all(gaps_m[i] > gaps_m[i + 1] for i in range(3))
    gaps_g = [
        derive_parameters(inst).gap_lower
        for inst in threshold_grid(ms=(1,), gate_counts=(4, 6, 8, 10), deltas=(0.25,))[1:5]
    ]
    assert all(gaps_g[i] > gaps_g[i + 1] for i in range(3))
    grid_d = threshold_grid(ms=(1,), gate_counts=(4,), deltas=(0.1, 0.15, 0.2, 0.25))[2:]
    gaps_d = [derive_parameters(inst).gap_lower for inst in grid_d]
    assert all(gaps_d[i] < gaps_d[i + 1] for i in range(3))


def test_eta3_plus_h_constraint_is_a_hard_error():
    inst = GsconInstance(
        n=1,
        m=1,
        terms=(HamiltonianTerm(np.diag([0.0, 1.0]), (0,)),),
        eta2=0.5,
        eta3=1.41,
        eta4=2.0,
        delta=0.25,
        psi_circuit=(),
        phi_circuit=(),
        gate_set=(gate_i(0), gate_x(0), gate_h(0)),
    )
    with pytest.raises(LedgerInvariantError, match="sqrt"):
        derive_parameters(inst)


def test_promise_gap_violations_are_hard_errors():
    kwargs = dict(
        n=1, m=1, terms=(HamiltonianTerm(np.diag([0.0, 1.0]), (0,)),),
        psi_circuit=(), phi_circuit=(), gate_set=(gate_i(0), gate_x(0)),
    )
    with pytest.raises(LedgerInvariantError, match="eta4 - eta3"):
        derive_parameters(GsconInstance(eta2=0.5, eta3=0.6, eta4=0.7, delta=0.25, **kwargs))
    with pytest.raises(LedgerInvariantError, match="delta > 0"):
        derive_parameters(GsconInstance(eta2=0.5, eta3=0.25, eta4=0.75, delta=0.0, **kwargs))


# ---------------------------------------------------------------------------
# two-witness tuning
# ---------------------------------------------------------------------------


def test_qma2_perfect_completeness_limit():
    # c' = 1: p = (1/50)/(11/512) = 512/550, independent of epsilon
    expected = mpf(512) / 550
    for eps in ("1e-2", "1e-4", "1e-8"):
        tun = qma2_tuning(1.0, 1 - mpf(eps))
        assert abs(tun.p_product - expected) < mpf("1e-12")


def test_qma2_tiny_gap_example():
    tun = qma2_tuning(0.5, 0.5 - 1e-6)
    with mpmath.workdps(60):
        assert tun.gap2_lower >= mpf("2e-14") * (1 - mpf("1e-9"))
        assert abs(tun.gap2_lower - mpf(1e-6) ** 2 / 50) < mpf("1e-20")


def test_qma2_probability_stays_in_range():
    for c in np.linspace(0.05, 1.0, 14):
        for s in np.linspace(0.0, float(c) - 1e-3, 7):
            tun = qma2_tuning(float(c), float(s))
            assert 0 <= tun.p_product <= 1
            assert tun.c_double_prime >= tun.s_double_prime_upper


def test_qma2_rejects_inverted_inputs():
    with pytest.raises(ValueError):
        qma2_tuning(0.4, 0.6)
    with pytest.raises(ValueError):
        qma2_tuning(0.5, 0.5)


# ---------------------------------------------------------------------------
# order-of-magnitude estimate
# ---------------------------------------------------------------------------


def test_gap_estimate_monomial_scaling():
    with mpmath.workdps(60):
        base = get_fixture("idle").instance
        est0 = gap_order_estimate(base).estimate
        doubled_m = threshold_grid(ms=(2,), gate_counts=(4,), deltas=(0.25,))[0]
        est_m = gap_order_estimate(doubled_m).estimate
        assert _rel(est_m / est0, mpf(2) ** (-32)) < mpf("1e-20")
        halved_delta = threshold_grid(ms=(1,), gate_counts=(4,), deltas=(0.125,))[-1]
        est_d = gap_order_estimate(halved_delta).estimate
        assert _rel(est_d / est0, mpf(2) ** (-13)) < mpf("1e-20")


def test_gap_estimate_ratio_finite_positive_on_fixtures():
    for fx in builtin_instances():
        res = gap_order_estimate(fx.instance)
        assert res.ratio > 0 and mpmath.isfinite(res.ratio)
        assert res.gap_lower >= GAP_ESTIMATE_KAPPA * res.estimate
