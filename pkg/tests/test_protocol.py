import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopnoma.channel import ChannelRealization, CooperationMode, RelayBehavior, SystemConfig, sample_trials
from coopnoma.protocol import (
    ALL_SCHEMES,
    Scheme,
    decode_batch,
    evaluate_decode,
    pair_rates_noma,
    pair_rates_tdma,
    rate_thresholds,
    snr_cooperative,
    snr_direct,
)

from conftest import realization


def test_thresholds_per_mode():
    np.testing.assert_allclose(rate_thresholds([1.0, 2.0]), [1.0, 3.0])
    np.testing.assert_allclose(rate_thresholds([1.0, 2.0], CooperationMode.IN_BAND),
                               [2**0.5 - 1, 1.0])


def test_snr_direct_single_user():
    cfg = SystemConfig(num_users=1, transmit_snr=7.0, power_alloc=(1.0,), relay_alloc={})
    assert snr_direct(realization([0.3]), cfg, 1, 1) == pytest.approx(2.1)


def test_snr_direct_two_user_hand_values(k2_config):
    real = realization([0.1, 0.5])
    assert snr_direct(real, k2_config, 2, 1) == pytest.approx(2.0)
    assert snr_direct(real, k2_config, 2, 2) == pytest.approx(1.0)


@pytest.mark.parametrize("observer,message", [(1, 2), (0, 0), (3, 1)])
def test_snr_direct_index_errors(k2_config, observer, message):
    with pytest.raises(ValueError):
        snr_direct(realization([0.1, 0.5]), k2_config, observer, message)


def test_cooperative_without_relays_is_direct(k2_config):
    real = realization([0.1, 0.5], {(2, 1): 1.0})
    assert snr_cooperative(real, k2_config, 1, 1, ()) == snr_direct(real, k2_config, 1, 1)


def test_cooperative_two_user_hand_value(k2_config):
    real = realization([0.1, 0.5], {(2, 1): 1.0})
    assert snr_cooperative(real, k2_config, 1, 1, {2}) == pytest.approx(0.08 / 0.12 + 10.0)


def test_cooperative_three_user_matches_symbolic_oracle():
    # 4144/323 from an independent sympy evaluation of the combined-SNR sum
    cfg = SystemConfig(num_users=3, transmit_snr=20.0, power_alloc=(16 / 21, 4 / 21, 1 / 21),
                       relay_alloc={2: (1.0,), 3: (0.8, 0.2)})
    real = realization([0.3, 1.0, 2.0], {(3, 1): 0.7, (2, 1): 0.4, (3, 2): 0.9})
    assert snr_cooperative(real, cfg, 1, 1, {2, 3}) == pytest.approx(4144 / 323, rel=1e-12)


def test_cooperative_rejects_worse_relay():
    cfg = SystemConfig(num_users=3)
    real = realization([0.3, 1.0, 2.0])
    with pytest.raises(ValueError):
        snr_cooperative(real, cfg, 2, 1, {1})
    with pytest.raises(ValueError):
        snr_cooperative(real, cfg, 2, 1, {2})


def test_infinite_gains_decode_everything():
    cfg = SystemConfig(num_users=3)
    real = realization([np.inf] * 3, {(2, 1): np.inf, (3, 1): np.inf, (3, 2): np.inf})
    for scheme in ALL_SCHEMES:
        out = evaluate_decode(real, cfg, scheme)
        assert out.success.all() and out.user_ok.all(), scheme


def test_zero_gains_decode_nothing():
    cfg = SystemConfig(num_users=3)
    real = realization([0.0] * 3)
    for scheme in ALL_SCHEMES:
        out = evaluate_decode(real, cfg, scheme)
        assert not out.user_ok.any(), scheme
        assert not out.success[np.tril_indices(3)].any(), scheme


def test_cooperation_rescues_user_one():
    # eps_1 = 5 sits above the SIC ceiling p1/p2 = 4 seen by user 2
    real = realization([0.1, 0.5], {(2, 1): 1.0})
    base = SystemConfig(num_users=2, transmit_snr=10.0, target_rates=(math.log2(6), 0.1))
    non = evaluate_decode(real, base, Scheme.NON_COOPERATIVE_NOMA)
    assert not non.success[0, 0]
    assert non.snr_table[0, 0] == pytest.approx(2 / 3)

    genie = evaluate_decode(real, base.replace(relay_behavior=RelayBehavior.GENIE_AIDED),
                            Scheme.COOPERATIVE_NOMA)
    assert genie.success[0, 0]
    assert genie.snr_table[0, 0] == pytest.approx(10 + 2 / 3)

    # decode-and-forward: user 2 cannot decode message 1, so it stays silent
    df = evaluate_decode(real, base, Scheme.COOPERATIVE_NOMA)
    assert not df.user_ok[1]
    assert not df.success[0, 0]

    strong = realization([0.1, 0.5], {(2, 1): 1.0})
    easy = base.replace(target_rates=(1.0, 0.1))  # eps_1 = 1: user 2 decodes, relays
    out = evaluate_decode(strong, easy, Scheme.COOPERATIVE_NOMA)
    assert out.user_ok[1] and out.user_ok[0]
    assert not evaluate_decode(strong, easy, Scheme.NON_COOPERATIVE_NOMA).user_ok[0]


def test_orthogonal_ma_uses_time_share():
    cfg = SystemConfig(num_users=2, transmit_snr=10.0, target_rates=(1.0, 1.0))
    # (1/2) log2(1 + 10 h) > 1  <=>  h > 0.3
    out = evaluate_decode(realization([0.29, 0.31]), cfg, Scheme.ORTHOGONAL_MA)
    assert out.user_ok.tolist() == [False, True]
    np.testing.assert_allclose(np.diag(out.snr_table), [2.9, 3.1])


def test_in_band_mode_lowers_cooperative_threshold():
    real = realization([0.05, 3.0], {(2, 1): 0.02})
    rates = (1.2, 1.9)
    short = SystemConfig(num_users=2, transmit_snr=10.0, target_rates=rates,
                         relay_behavior=RelayBehavior.GENIE_AIDED)
    inband = short.replace(cooperation_mode=CooperationMode.IN_BAND)
    snr = evaluate_decode(real, short, Scheme.COOPERATIVE_NOMA).snr_table[0, 0]
    assert 2 ** 0.6 - 1 < snr < 2 ** 1.2 - 1
    assert not evaluate_decode(real, short, Scheme.COOPERATIVE_NOMA).user_ok[0]
    assert evaluate_decode(real, inband, Scheme.COOPERATIVE_NOMA).user_ok[0]


def test_user_ok_is_row_conjunction():
    cfg = SystemConfig(num_users=4)
    h, g = sample_trials(cfg, 9, 2000)
    for scheme in ALL_SCHEMES:
        success, ok, snr = decode_batch(h, g, cfg, scheme)
        np.testing.assert_array_equal(ok, success.all(axis=2))
        assert np.all(snr >= 0)


@pytest.mark.parametrize("K", [2, 3, 4])
@pytest.mark.parametrize("behavior", list(RelayBehavior))
def test_batch_matches_scalar_chain(K, behavior):
    cfg = SystemConfig(num_users=K, transmit_snr=30.0, relay_behavior=behavior,
                       target_rates=(0.4,) * K)
    h, g = sample_trials(cfg, K, 200)
    success, ok, snr = decode_batch(h, g, cfg, Scheme.COOPERATIVE_NOMA)
    genie = behavior is RelayBehavior.GENIE_AIDED
    for t in range(len(h)):
        real = ChannelRealization(h[t], g[t])
        eps = rate_thresholds(cfg.target_rates)
        user_ok = {}
        for j in range(K, 0, -1):
            relays = {r for r in range(j + 1, K + 1) if genie or user_ok[r]}
            row = [snr_cooperative(real, cfg, j, k, relays) for k in range(1, j + 1)]
            np.testing.assert_allclose(snr[t, j - 1, :j], row, rtol=1e-12)
            user_ok[j] = all(v > e for v, e in zip(row, eps))
            assert ok[t, j - 1] == user_ok[j]


@st.composite
def realizations(draw, K=3):
    gains = st.floats(0.0, 50.0, allow_nan=False)
    h = sorted(draw(st.lists(gains, min_size=K, max_size=K)))
    inter = {(j, k): draw(gains) for j in range(2, K + 1) for k in range(1, j)}
    return realization(h, inter)


@settings(max_examples=60, deadline=None)
@given(real=realizations(), bump=st.floats(1.0, 10.0), rho=st.floats(0.5, 1e4))
def test_snr_monotone_in_gains_and_rho(real, bump, rho):
    cfg = SystemConfig(num_users=3, transmit_snr=rho)
    richer = ChannelRealization(real.direct_gains * bump, real.inter_user_gains * bump)
    louder = cfg.replace(transmit_snr=rho * bump)
    for j in range(1, 4):
        relays = set(range(j + 1, 4))
        for k in range(1, j + 1):
            base = snr_cooperative(real, cfg, j, k, relays)
            assert snr_cooperative(richer, cfg, j, k, relays) >= base * (1 - 1e-12)
            assert snr_cooperative(real, louder, j, k, relays) >= base * (1 - 1e-12)
            assert base >= snr_direct(real, cfg, j, k)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), K=st.integers(2, 5), snr_db=st.floats(-5, 40))
def test_decode_and_forward_never_beats_genie(seed, K, snr_db):
    cfg = SystemConfig.from_db(snr_db, num_users=K)
    h, g = sample_trials(cfg, seed, 300)
    df, _, _ = decode_batch(h, g, cfg, Scheme.COOPERATIVE_NOMA)
    genie, _, _ = decode_batch(h, g, cfg.replace(relay_behavior="genie_aided"),
                               Scheme.COOPERATIVE_NOMA)
    assert not np.any(df & ~genie)


def test_evaluate_decode_is_pure():
    cfg = SystemConfig(num_users=3)
    real = realization([0.2, 0.9, 1.3], {(2, 1): 0.3, (3, 1): 0.1, (3, 2): 2.0})
    a = evaluate_decode(real, cfg, Scheme.COOPERATIVE_NOMA)
    b = evaluate_decode(real, cfg, Scheme.COOPERATIVE_NOMA)
    np.testing.assert_array_equal(a.success, b.success)
    np.testing.assert_array_equal(a.snr_table, b.snr_table)


def test_sic_interference_shrinks_with_message_index():
    cfg = SystemConfig(num_users=5)
    assert np.all(np.diff(cfg.p_tail) < 0)
    q_sq, q_tail = cfg.relay_tables()
    for r in range(2, 5):
        assert np.all(np.diff(q_tail[r, :r]) < 0)


def test_tdma_rates():
    assert pair_rates_tdma(0.0, 0.0, 10.0) == (0.0, 0.0)
    assert pair_rates_tdma(3.0, 3.0, 1.0)[0] == pytest.approx(1.0)
    m, n = pair_rates_tdma(0.2, 2.0, 100.0)
    assert m == pytest.approx(0.5 * math.log2(21))
    assert n == pytest.approx(0.5 * math.log2(201))
    assert (m, n) == pytest.approx((2.1962, 3.8255), abs=1e-4)


def test_noma_rates():
    m, n = pair_rates_noma(0.2, 2.0, 100.0, 0.8, 0.2)
    assert m == pytest.approx(2.0704, abs=1e-4)
    assert n == pytest.approx(5.3576, abs=1e-4)
    m, n = pair_rates_noma(0.2, 2.0, 100.0, 1.0, 0.0)
    assert n == 0.0
    assert m == pytest.approx(math.log2(21))


def test_noma_weak_rate_ceiling():
    m, _ = pair_rates_noma(0.2, 2.0, 1e12, 0.8, 0.2)
    assert m == pytest.approx(math.log2(1 + 0.8 / 0.2), rel=1e-9)


@pytest.mark.parametrize("args", [
    (2.0, 0.2, 100.0, 0.8, 0.2),
    (0.2, 2.0, 100.0, 0.8, 0.3),
    (0.2, 2.0, 100.0, 0.3, 0.7),
])
def test_noma_rate_preconditions(args):
    with pytest.raises(ValueError):
        pair_rates_noma(*args)
