"""End-to-end acceptance checks.

Each test prints a single ``ACCEPTANCE <n> PASS`` line with the measured
numbers so a full run reads as a checklist.  Budgets are asserted, not just
reported.  All random checks use fixed seeds: a pass here is reproducible.
"""

import cmath
import io
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from bellqkd import analysis, cli, devices, optics, protocol
from bellqkd.analysis import FiniteKeyParams, asymptotic_rate, finite_key_rate
from bellqkd.config import RunConfig
from bellqkd.optics import PhaseSetting, Window

SETTINGS = [PhaseSetting.from_index(k) for k in range(4)]


def _report(n, detail):
    print(f"ACCEPTANCE {n} PASS: {detail}")


def test_01_outcome_grid_verified():
    start = time.perf_counter()
    out, err = io.StringIO(), io.StringIO()
    code = cli.cmd_table(out=out, err=err)
    elapsed = time.perf_counter() - start
    assert code == 0, err.getvalue()
    assert "all 32 cells match the embedded reference" in out.getvalue()
    assert elapsed < 1.0
    _report(1, f"32/32 outcome cells verified in {elapsed * 1e3:.1f} ms")


def test_02_closed_form_matches_amplitude_oracle():
    # brute-force oracle: propagate the four path amplitudes and interfere
    # them pairwise on a 50/50 combiner
    start = time.perf_counter()
    worst = 0.0
    for alpha in SETTINGS:
        for beta in SETTINGS:
            a_ll = cmath.exp(1j * (alpha.value + beta.value)) / 2.0
            a_ls = cmath.exp(1j * alpha.value) / 2.0
            a_sl = cmath.exp(1j * beta.value) / 2.0
            a_ss = 0.5 + 0.0j
            brute = (
                abs((a_ls + a_sl) / math.sqrt(2)) ** 2,
                abs((a_ls - a_sl) / math.sqrt(2)) ** 2,
                abs((a_ll + a_ss) / math.sqrt(2)) ** 2,
                abs((a_ll - a_ss) / math.sqrt(2)) ** 2,
            )
            closed = optics.bsm_distribution(alpha, beta).as_tuple()
            worst = max(worst, max(abs(x - y) for x, y in zip(brute, closed)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12
    assert elapsed < 1.0
    _report(2, f"max |closed-form - oracle| = {worst:.2e} over 16 phase pairs")


def test_03_zero_noise_runs_are_error_free():
    start = time.perf_counter()
    cfg = RunConfig(
        distance_km=50.0,
        dark_count_prob=0.0,
        misalignment=0.0,
        n_pulses=10_000_000,
        seed=303,
    )
    tally = protocol.run_monte_carlo(cfg.protocol_config())
    elapsed = time.perf_counter() - start
    assert tally.sifted.sum() > 0
    assert tally.errors.sum() == 0.0
    assert elapsed < 60.0
    _report(
        3,
        f"0 errors in {tally.sifted.sum():.0f} sifted detections "
        f"from 1e7 noiseless pulses ({elapsed:.1f} s)",
    )


def test_04_monte_carlo_tracks_analytic_within_4_sigma():
    start = time.perf_counter()
    worst_pull = 0.0
    for distance in (0.0, 50.0, 100.0):
        cfg = protocol.ProtocolConfig(
            bsm_mode="complete",
            intensity_classes=protocol.default_source_mix(weights=(1.0, 1.0, 1.0)),
            link=devices.LinkParams(distance, 0.2, 5.0, 0.153),
            detectors=devices.DetectorParams(5e-8, 0.015),
            n_pulses=3_000_000,  # one million per intensity
            seed=404,
        )
        mc = protocol.run_monte_carlo(cfg)
        an = protocol.run_analytic(cfg)
        for c in range(3):
            for counts_mc, counts_an in (
                (mc.sifted, an.sifted),
                (mc.errors, an.errors),
            ):
                lam = counts_an[c].sum()
                pull = abs(counts_mc[c].sum() - lam) / math.sqrt(max(lam, 1.0))
                worst_pull = max(worst_pull, pull)
                assert pull <= 4.0, (distance, c, lam, counts_mc[c].sum())
        pull = abs(mc.detected - an.detected) / math.sqrt(max(an.detected, 1.0))
        worst_pull = max(worst_pull, pull)
        assert pull <= 4.0, (distance, "detected")
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    _report(
        4,
        f"gains/QBER counts at 0/50/100 km all within 4 sigma "
        f"(worst pull {worst_pull:.2f}) in {elapsed:.1f} s",
    )


def test_05_decoy_bounds_contain_the_truth():
    start = time.perf_counter()
    margin_y, margin_e = [], []
    for d in np.linspace(0.0, 190.0, 20):
        cfg = RunConfig(distance_km=float(d))
        tally = protocol.run_analytic(cfg.protocol_config())
        obs = analysis.rates_from_tally(tally)
        est = analysis.decoy_bounds(
            obs.gain_signal,
            obs.gain_decoy,
            obs.qber_signal,
            obs.qber_decoy,
            obs.background,
            cfg.signal_intensity,
            cfg.decoy_intensity,
        )
        eta = devices.transmittance(cfg.link())
        y0 = devices.background_yield(cfg.detector_params())
        y1_true = y0 + eta - y0 * eta
        e1_true = (0.5 * y0 + cfg.misalignment * eta) / y1_true
        assert est.y1_lower <= y1_true * (1 + 1e-9), d
        assert est.e1_upper >= e1_true * (1 - 1e-9), d
        margin_y.append(est.y1_lower / y1_true)
        margin_e.append(est.e1_upper / e1_true)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _report(
        5,
        f"containment on all 20 grid points; yield bound captures "
        f"{min(margin_y):.3f}-{max(margin_y):.3f} of the true value",
    )


def test_06_finite_key_converges_from_below():
    start = time.perf_counter()
    for d in np.linspace(0.0, 190.0, 20):
        tally = protocol.run_analytic(RunConfig(distance_km=float(d)).protocol_config())
        finite = finite_key_rate(tally, FiniteKeyParams()).rate_per_pulse
        asym = asymptotic_rate(tally)
        assert finite <= asym + 1e-15, d
    tally = protocol.run_analytic(RunConfig(distance_km=50.0).protocol_config())
    finite = finite_key_rate(tally, FiniteKeyParams(n_signal_pulses=1e13)).rate_per_pulse
    asym = asymptotic_rate(tally)
    gap = (asym - finite) / asym
    elapsed = time.perf_counter() - start
    assert 0.0 <= gap < 0.01
    assert elapsed < 10.0
    _report(
        6,
        f"finite <= asymptotic on all 20 points; at N=1e13/50 km the gap "
        f"is {gap * 100:.3f}%",
    )


def test_07_reference_endpoint_within_order_of_magnitude():
    target = 3.655e-7
    tally = protocol.run_analytic(RunConfig(distance_km=175.0).protocol_config())
    rep = finite_key_rate(tally, FiniteKeyParams())
    assert rep.rate_per_pulse > 0.0
    assert target / 10.0 <= rep.rate_per_pulse <= target * 10.0
    _report(
        7,
        f"rate at 175 km / N=1e9 is {rep.rate_per_pulse:.3e} per pulse "
        f"({rep.rate_per_pulse / target:.2f}x the reference value)",
    )


def test_08_secure_window_closes_by_250_km():
    rates = {}
    for d in range(175, 251, 5):
        tally = protocol.run_analytic(RunConfig(distance_km=float(d)).protocol_config())
        rates[d] = finite_key_rate(tally, FiniteKeyParams()).rate_per_pulse
    assert rates[175] > 0.0
    dead = [d for d, r in rates.items() if r == 0.0]
    assert dead, "rate never reached zero by 250 km"
    cutoff = min(dead)
    assert all(rates[d] == 0.0 for d in rates if d >= cutoff)
    assert rates[250] == 0.0
    _report(
        8,
        f"positive at 175 km, zero from {cutoff} km on (scanned 175-250 km "
        f"in 5 km steps)",
    )


def test_09_partial_mode_halves_yield_with_same_qber():
    start = time.perf_counter()
    base = dict(distance_km=50.0, n_pulses=10_000_000, seed=909)
    full = protocol.run_monte_carlo(
        RunConfig(bsm_mode="complete", **base).protocol_config()
    )
    half = protocol.run_monte_carlo(
        RunConfig(bsm_mode="partial", **base).protocol_config()
    )
    s_full, s_half = full.sifted.sum(), half.sifted.sum()
    # conditioned on the complete run, the kept half is a fair coin per event
    sigma_s = math.sqrt(s_full * 0.25)
    assert abs(s_half - s_full / 2.0) <= 4.0 * sigma_s
    q_full = full.errors.sum() / s_full
    q_half = half.errors.sum() / s_half
    pooled = (full.errors.sum() + half.errors.sum()) / (s_full + s_half)
    sigma_q = math.sqrt(pooled * (1 - pooled) * (1 / s_full + 1 / s_half))
    assert abs(q_half - q_full) <= 4.0 * sigma_q
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    _report(
        9,
        f"partial/complete sifted ratio {s_half / s_full:.4f} (target 0.5), "
        f"QBER {q_half:.4f} vs {q_full:.4f} ({elapsed:.1f} s)",
    )


def test_10_repeated_runs_are_byte_identical(tmp_path):
    def run(args, out_name):
        path = tmp_path / out_name
        cmd = [sys.executable, "-m", "bellqkd"] + args + ["--out", str(path)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        return path.read_bytes()

    sweep_args = ["sweep"]
    sim_args = ["simulate", "--distance", "50", "--pulses", "300000",
                "--seed", "12", "--format", "json"]
    assert run(sweep_args, "s1.csv") == run(sweep_args, "s2.csv")
    assert run(sim_args, "m1.json") == run(sim_args, "m2.json")
    _report(10, "sweep and simulate outputs byte-identical across repeat runs")
