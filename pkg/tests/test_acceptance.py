"""Acceptance criteria 1-9, each at its stated tolerance and time budget.

Run alone with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed at the end of the session.
"""

import json
import math
import time

import numpy as np
import pytest

from qkdlab import security_analysis as sa
from qkdlab import transcript as wire
from qkdlab.css_postprocess import (
    coset_label, decode_nearest, decode_nearest_batch, reconcile_blocks, sample_bound, steane_css,
)
from qkdlab.gaussian_channel import (
    Basis, GaussianMarginal, SqueezedSource, apply_loss, conditional_signal, sample_center,
)
from qkdlab.gkp_code import EXACT, SQRT_PI, WINDOW, shift_error_prob
from qkdlab.protocol_sim import EveModel, ProtocolConfig, Status, estimate_error_rates, run_protocol
from qkdlab.rng import stream


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f} s, budget {self.seconds} s"


@pytest.mark.criterion(1, "threshold suite")
def test_criterion_1_thresholds():
    with Budget(1.0):
        assert shift_error_prob(0.784, WINDOW) == pytest.approx(0.110, abs=0.001)
        d = sa.solve_secure_delta(0.11)
        assert d == pytest.approx(0.784, abs=0.001)
        p = sa.convert(delta=d)
        assert p.tilde_delta == pytest.approx(0.749, abs=0.001)
        assert p.r == pytest.approx(0.289, abs=0.001)
        assert p.db == pytest.approx(2.51, abs=0.01)
        assert p.r_two_mode == pytest.approx(0.590, abs=0.001)


@pytest.mark.criterion(2, "entanglement suite")
def test_criterion_2_entanglement():
    with Budget(1.0):
        assert sa.ebits(0.784) == pytest.approx(1.19, abs=0.01)
        assert sa.entanglement_of_formation((1 - 0.110) ** 2) == pytest.approx(0.450, abs=0.005)
        assert sa.ebits(math.sqrt(2)) == 0.0


@pytest.mark.criterion(3, "operating-point suite")
def test_criterion_3_operating_points():
    with Budget(1.0):
        assert shift_error_prob(sa.delta_from_tilde(0.5), WINDOW) == pytest.approx(0.012, abs=0.001)
        assert shift_error_prob(sa.delta_from_tilde(0.483), WINDOW) == pytest.approx(0.0100, abs=0.0005)
        assert shift_error_prob(0.256, EXACT) < 1e-6


@pytest.mark.criterion(4, "loss suite")
def test_criterion_4_loss():
    with Budget(10.0):
        t, kd = sa.optimal_operating_point(amplified=False)
        assert t == pytest.approx(0.426, abs=0.01)
        assert kd == pytest.approx(0.367, abs=0.005)
        kd_amp = sa.max_distance(0.01, amplified=True)
        assert kd_amp == pytest.approx(0.268, abs=0.003)
        assert math.exp(kd_amp) == pytest.approx(1.307, abs=0.005)
        assert 1.41 <= sa.max_distance(0.05) / 0.05 <= 1.73


@pytest.mark.criterion(5, "Monte-Carlo vs analytic")
@pytest.mark.parametrize("tilde, kappa_d", [(0.5, 0.0), (0.5, 0.2), (0.426, 0.367)])
def test_criterion_5_monte_carlo(tilde, kappa_d):
    cfg = ProtocolConfig(tilde_delta=tilde, kappa_d=kappa_d, seed=2024)
    est = estimate_error_rates(cfg, 10**6)
    p = shift_error_prob(sa.delta_xi(tilde, sa.LossScenario(kappa_d)), EXACT)
    for rate, trials in ((est.p_hat_z, est.trials_z), (est.p_hat_x, est.trials_x)):
        assert abs(rate - p) < 3 * math.sqrt(p * (1 - p) / trials)


@pytest.mark.criterion(6, "Gaussian identity suite")
def test_criterion_6_gaussian_identities():
    with Budget(5.0):
        n = 10**6
        src = SqueezedSource(0.5)
        rng = stream(606, 0)
        qa = sample_center(src, Basis.Q, rng, size=n)
        qb = conditional_signal(src, qa, Basis.Q).sample(rng)
        target = src.delta**2 / 2
        assert abs(np.var(qa - qb) - target) < 3 * target * math.sqrt(2 / n)

        for t in np.linspace(0.01, 1.0, 40):
            for kd in np.linspace(0.0, 2.0, 40):
                sc = sa.LossScenario(kd, amplified=True)
                lhs = sa.delta_xi(t, sc) ** 2
                assert abs(lhs - (sa.delta_from_tilde(t) ** 2 + 2 * (sc.xi**-2 - 1))) < 1e-10

        s = GaussianMarginal(0.7, 0.125)
        for x1, x2 in ((0.5, 0.5), (0.9, 0.25), (1.0, 0.3)):
            a, b = apply_loss(apply_loss(s, x1), x2), apply_loss(s, x1 * x2)
            assert a.mean == pytest.approx(b.mean, rel=1e-15)
            assert a.variance == pytest.approx(b.variance, rel=1e-15)
        for xi in (0.1, 0.5, 1.0):
            assert apply_loss(GaussianMarginal.vacuum(), xi) == GaussianMarginal(0.0, 0.5)


@pytest.mark.criterion(7, "CSS suite")
def test_criterion_7_steane_exhaustive():
    with Budget(5.0):
        pair = steane_css()
        corrected = 0
        for v in pair.c1.codewords():
            for i in range(7):
                w = v.copy()
                w[i] ^= 1
                corrected += bool(np.array_equal(decode_nearest(pair.c1, w), v))
        assert corrected == 112
        invariant = 0
        reps = [pair.c1.codewords()[0], pair.c1.codewords()[0] ^ pair.coset_basis[0]]
        for v in reps:
            label = coset_label(pair, v)
            for w in pair.c2.codewords():
                invariant += bool(np.array_equal(coset_label(pair, v ^ w), label))
        assert invariant == 16   # 8 of 8 in each of the two cosets


@pytest.mark.criterion(7, "CSS suite")
def test_criterion_7_key_agreement_rate():
    """Key agreement at i.i.d. p = 0.05 compared with (1-p)^7 + 7p(1-p)^6 at 1e5 trials.

    Expected to fail: the keys also agree after some uncorrectable errors
    (weight-3 patterns that miscorrect into the right coset, weight-4 words of
    the dual code), so the true agreement rate is 0.95851, about 4.6 sigma
    above the formula.  The decode-success rate does match the formula; see
    the next test.
    """
    with Budget(5.0):
        p, trials = 0.05, 10**5
        rng = stream(707, 0)
        u = rng.integers(0, 2, (trials, 7), dtype=np.uint8)
        e = (rng.random((trials, 7)) < p).astype(np.uint8)
        ka, kb, _ = reconcile_blocks(steane_css(), u, u ^ e, rng)
        rate = np.mean(np.all(ka == kb, axis=1))
        expected = (1 - p) ** 7 + 7 * p * (1 - p) ** 6
        sigma = math.sqrt(expected * (1 - expected) / trials)
        assert abs(rate - expected) < 3 * sigma, (
            f"agreement {rate:.5f} vs formula {expected:.5f} (3 sigma = {3 * sigma:.5f})")


@pytest.mark.criterion(7, "CSS suite")
def test_criterion_7_decode_success_rate():
    with Budget(5.0):
        p, trials = 0.05, 10**5
        rng = stream(707, 1)
        u = rng.integers(0, 2, (trials, 7), dtype=np.uint8)
        e = (rng.random((trials, 7)) < p).astype(np.uint8)
        pair = steane_css()
        _, _, ann = reconcile_blocks(pair, u, u ^ e, rng)
        ok = np.mean(np.all(decode_nearest_batch(pair.c1, ann ^ u ^ e) == ann ^ u, axis=1))
        expected = (1 - p) ** 7 + 7 * p * (1 - p) ** 6
        assert abs(ok - expected) < 3 * math.sqrt(expected * (1 - expected) / trials)


@pytest.mark.criterion(7, "CSS suite")
def test_criterion_7_rate_and_sampling_bound():
    with Budget(5.0):
        assert sa.key_rate(0.11, 0.11) == pytest.approx(0.0, abs=1e-3)
        for n in (50, 500, 5000):
            for p in (0.01, 0.05, 0.2):
                for eps in (0.01, 0.05):
                    simple = sample_bound(n, p, eps)
                    general = sample_bound(n, p, eps, mode="general", sample=n / 2,
                                           population=1.5 * n)
                    assert abs(simple - general) <= 1e-12


@pytest.mark.criterion(8, "end-to-end protocol")
def test_criterion_8_clean_runs_agree():
    for seed in range(100):
        out = run_protocol(ProtocolConfig(tilde_delta=0.25, kappa_d=0.0, n=700, seed=seed))
        assert out.status is Status.COMPLETED, f"seed {seed}: {out.status}"
        assert out.keys_agree and len(out.key_alice) == 100, f"seed {seed}"


@pytest.mark.criterion(8, "end-to-end protocol")
def test_criterion_8_intercept_resend_aborts():
    aborts = sum(
        run_protocol(ProtocolConfig(tilde_delta=0.25, n=200, seed=seed,
                                    eve=EveModel.intercept_resend())).status is Status.ABORTED_VERIFICATION
        for seed in range(100))
    assert aborts >= 99


@pytest.mark.criterion(8, "end-to-end protocol")
def test_criterion_8_fixed_shift_aborts():
    for seed in range(20):
        out = run_protocol(ProtocolConfig(tilde_delta=0.25, n=200, seed=seed,
                                          eve=EveModel.fixed_shift(SQRT_PI, 0.0)))
        assert out.status is Status.ABORTED_VERIFICATION
        assert out.p_hat_z == 1.0


@pytest.mark.criterion(9, "reproducibility across threads")
def test_criterion_9_thread_count_invariance():
    # 4.4 * 20000 oscillators span several sampling chunks
    cfg = ProtocolConfig(tilde_delta=0.4, n=20000, seed=99)
    one = run_protocol(cfg, workers=1)
    many = run_protocol(cfg, workers=4)
    a = json.dumps({"outcome": one.to_dict(), "transcript": json.loads(wire.dumps(one.transcript))},
                   sort_keys=True)
    b = json.dumps({"outcome": many.to_dict(), "transcript": json.loads(wire.dumps(many.transcript))},
                   sort_keys=True)
    assert a.encode() == b.encode()
    assert estimate_error_rates(cfg, 300_000, workers=1) == estimate_error_rates(cfg, 300_000, workers=4)
