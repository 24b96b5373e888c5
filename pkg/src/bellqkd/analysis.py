"""From tallies to secret-key rates.

The pipeline: observed per-pulse gains and error rates are read off a tally,
the two-intensity decoy linear combination bounds the single-photon yield
and error rate, and the finite-size step converts the derived single-photon
quantities into high-confidence bounds via a concentration inequality before
evaluating the secret-length formula.  The asymptotic rate is the same
pipeline with every deviation term switched off.

Failure-probability budget: epsilon_total is split equally four ways — one
share for the lower bound on the sifted single-photon count, one for the
upper bound on the phase-error count, one for error-correction verification,
one for privacy amplification.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

#: Probability both parties chose the same basis (uniform, independent).
SIFT_FACTOR = 0.5

#: Number of equal shares epsilon_total is divided into.
EPSILON_SHARES = 4


class EstimationError(ValueError):
    """Raised when the decoy estimate (or its inputs) cannot support a rate."""


@dataclass(frozen=True)
class DecoyEstimates:
    """Bounds on the single-photon contribution extracted from two intensities."""

    y1_lower: float
    e1_upper: float


@dataclass(frozen=True)
class FiniteKeyParams:
    """Security and overhead parameters of the finite-size analysis."""

    epsilon_total: float = 1e-8
    ec_efficiency: float = 1.16
    n_signal_pulses: float = 1e9

    def __post_init__(self):
        if not 0.0 < self.epsilon_total < 1.0:
            raise ValueError("epsilon_total must be in (0, 1)")
        if self.ec_efficiency < 1.0:
            raise ValueError("error-correction efficiency must be >= 1")
        if self.n_signal_pulses < 0:
            raise ValueError("n_signal_pulses must be >= 0")


@dataclass(frozen=True)
class KeyRateReport:
    """Secret-key rate plus every intermediate the sweep/CLI reports."""

    rate_per_pulse: float          # finite-size rate, clamped at 0
    rate_finite_raw: float         # signed value before clamping
    rate_asymptotic: float         # infinite-size rate on the same tally
    reason: str                    # '' | 'estimation failure' | 'negative length'
    gain_signal: float
    gain_decoy: float
    qber_signal: float
    qber_decoy: float
    background_observed: float
    y1_lower: float
    e1_upper: float
    single_photon_count_lb: float  # lower bound on sifted single-photon count
    phase_error_count_ub: float    # upper bound on single-photon phase errors
    phase_error_rate: float        # their ratio, clamped to [0, 1/2]
    entropy_phase: float
    entropy_qber: float
    error_correction_bits: float
    secret_length: float
    secret_length_raw: float
    sifted_signal: float
    n_signal_pulses: float
    n_pulses_total: float
    epsilon_total: float
    ec_efficiency: float
    infinite_n: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2(1-x), with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument must be in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def chernoff_interval(observed: float, epsilon: float):
    """High-confidence (lower, upper) bounds on the expectation behind a count.

    With beta = ln(1/epsilon):
        upper = k + beta + sqrt(2*beta*k + beta^2)
        lower = k - beta/2 - sqrt(2*beta*k + beta^2/4), floored at 0.
    Each side individually fails with probability at most epsilon.
    """
    if observed < 0:
        raise ValueError("observed count must be >= 0")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    beta = math.log(1.0 / epsilon)
    upper = observed + beta + math.sqrt(2.0 * beta * observed + beta * beta)
    lower = observed - beta / 2.0 - math.sqrt(2.0 * beta * observed + beta * beta / 4.0)
    return (max(0.0, lower), upper)


def decoy_bounds(gain_signal: float, gain_decoy: float, qber_signal: float,
                 qber_decoy: float, background: float, signal_intensity: float,
                 decoy_intensity: float) -> DecoyEstimates:
    """Two-intensity (plus vacuum) bounds on the single-photon channel.

    With mu > nu > 0:
        Y1 >= mu/(mu*nu - nu^2) * (Q_nu e^nu - Q_mu e^mu nu^2/mu^2
                                   - (mu^2 - nu^2)/mu^2 * Y0)
        e1 <= (E_nu Q_nu e^nu - Y0/2) / (Y1_lower * nu)
    both clamped to their valid ranges.  Raises EstimationError when the
    yield bound is non-positive (no rate can be extracted).
    """
    mu, nu = signal_intensity, decoy_intensity
    if not 0.0 < nu < mu:
        raise EstimationError(
            f"intensities must satisfy 0 < decoy < signal, got {nu!r}, {mu!r}")
    y1 = (mu / (mu * nu - nu * nu)) * (
        gain_decoy * math.exp(nu)
        - gain_signal * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * background
    )
    if y1 <= 0.0:
        raise EstimationError(f"single-photon yield bound is non-positive ({y1:.3e})")
    y1 = min(y1, 1.0)
    e1 = (qber_decoy * gain_decoy * math.exp(nu) - background / 2.0) / (y1 * nu)
    e1 = min(max(e1, 0.0), 0.5)
    return DecoyEstimates(y1_lower=y1, e1_upper=e1)


@dataclass(frozen=True)
class ObservedRates:
    """Per-pulse observables read off a tally (mode filtering included)."""

    gain_signal: float
    gain_decoy: float
    qber_signal: float
    qber_decoy: float
    background: float
    sent_signal: float
    sifted_signal: float
    sent_total: float
    signal_intensity: float
    decoy_intensity: float
    signal_fraction: float


def rates_from_tally(tally) -> ObservedRates:
    """Extract gains/QBERs from a tally; raises EstimationError if the tally
    lacks any of the three strata or has no sifted signal detections."""
    for label in ("signal", "decoy", "vacuum"):
        if label not in tally.class_labels:
            raise EstimationError(f"tally has no {label!r} stratum")
    i_sig = tally.class_index("signal")
    i_dec = tally.class_index("decoy")
    i_vac = tally.class_index("vacuum")

    sent = tally.sent_by_class()
    sifted = tally.sifted_by_class()
    errors = tally.errors_by_class()
    if sent[i_sig] <= 0 or sent[i_dec] <= 0 or sent[i_vac] <= 0:
        raise EstimationError("a stratum has no sent pulses")
    if sifted[i_sig] <= 0:
        raise EstimationError("no sifted detections in the signal stratum")

    def gain(i):
        return sifted[i] / (sent[i] * SIFT_FACTOR)

    def qber(i):
        return errors[i] / sifted[i] if sifted[i] > 0 else 0.0

    return ObservedRates(
        gain_signal=float(gain(i_sig)),
        gain_decoy=float(gain(i_dec)),
        qber_signal=float(qber(i_sig)),
        qber_decoy=float(qber(i_dec)),
        background=float(gain(i_vac)),
        sent_signal=float(sent[i_sig]),
        sifted_signal=float(sifted[i_sig]),
        sent_total=float(sent.sum()),
        signal_intensity=float(tally.mean_photon_numbers[i_sig]),
        decoy_intensity=float(tally.mean_photon_numbers[i_dec]),
        signal_fraction=float(sent[i_sig] / sent.sum()),
    )


def _asymptotic_from_rates(rates: ObservedRates, ec_efficiency: float) -> float:
    """Signed asymptotic rate per emitted pulse (not clamped)."""
    est = decoy_bounds(rates.gain_signal, rates.gain_decoy, rates.qber_signal,
                       rates.qber_decoy, rates.background,
                       rates.signal_intensity, rates.decoy_intensity)
    mu = rates.signal_intensity
    single_term = mu * math.exp(-mu) * est.y1_lower * (1.0 - binary_entropy(est.e1_upper))
    ec_term = ec_efficiency * rates.gain_signal * binary_entropy(rates.qber_signal)
    return rates.signal_fraction * SIFT_FACTOR * (single_term - ec_term)


def asymptotic_rate(tally, ec_efficiency: float = 1.16) -> float:
    """Secret-key rate per emitted pulse in the infinite-size limit.

    Estimation failures (non-positive yield bound, missing strata) propagate
    as rate 0.
    """
    try:
        rates = rates_from_tally(tally)
        return max(0.0, _asymptotic_from_rates(rates, ec_efficiency))
    except EstimationError:
        return 0.0


def _zero_report(params: FiniteKeyParams, reason: str, rates=None,
                 n_total: float = 0.0, infinite_n: bool = False) -> KeyRateReport:
    """Report for a run where no secret key can be extracted."""
    return KeyRateReport(
        rate_per_pulse=0.0, rate_finite_raw=0.0, rate_asymptotic=0.0,
        reason=reason,
        gain_signal=rates.gain_signal if rates else 0.0,
        gain_decoy=rates.gain_decoy if rates else 0.0,
        qber_signal=rates.qber_signal if rates else 0.0,
        qber_decoy=rates.qber_decoy if rates else 0.0,
        background_observed=rates.background if rates else 0.0,
        y1_lower=0.0, e1_upper=0.5,
        single_photon_count_lb=0.0, phase_error_count_ub=0.0,
        phase_error_rate=0.5, entropy_phase=1.0,
        entropy_qber=binary_entropy(rates.qber_signal) if rates else 0.0,
        error_correction_bits=0.0, secret_length=0.0, secret_length_raw=0.0,
        sifted_signal=rates.sifted_signal if rates else 0.0,
        n_signal_pulses=params.n_signal_pulses, n_pulses_total=n_total,
        epsilon_total=params.epsilon_total, ec_efficiency=params.ec_efficiency,
        infinite_n=infinite_n,
    )


def finite_key_rate(tally, params: FiniteKeyParams,
                    infinite_n: bool = False) -> KeyRateReport:
    """Finite-size secret-key rate from a tally.

    The tally's counts are first rescaled so the signal stratum carries
    ``params.n_signal_pulses`` emitted pulses (an exact no-op when it already
    does).  The decoy bounds are evaluated on the observed rates; the derived
    sifted single-photon count and phase-error count are then bounded by the
    concentration interval at epsilon_total/4 each, and the secret length is

        l = s1*(1 - h(e1_ph)) - f*n_sift*h(E_signal)
            - log2(2/eps_corr) - 2*log2(1/(2*eps_pa))

    with eps_corr = eps_pa = epsilon_total/4.  The reported rate is
    l / n_pulses_total, clamped at 0 (the signed value is retained).  With
    ``infinite_n=True`` every deviation term and constant is dropped, which
    reproduces the asymptotic rate exactly.
    """
    try:
        rates = rates_from_tally(tally)
    except EstimationError:
        return _zero_report(params, "estimation failure", infinite_n=infinite_n)

    n_total = float(tally.n_pulses)
    try:
        est = decoy_bounds(rates.gain_signal, rates.gain_decoy, rates.qber_signal,
                           rates.qber_decoy, rates.background,
                           rates.signal_intensity, rates.decoy_intensity)
    except EstimationError:
        return _zero_report(params, "estimation failure", rates,
                            n_total=n_total, infinite_n=infinite_n)

    # Rescale to the target signal-pulse count (no-op for matching tallies).
    if infinite_n:
        scale = 1.0
        n_signal = rates.sent_signal
    else:
        scale = params.n_signal_pulses / rates.sent_signal
        n_signal = params.n_signal_pulses
    sifted_signal = rates.sifted_signal * scale
    n_total_scaled = n_total * scale

    mu = rates.signal_intensity
    single_photon_hat = n_signal * SIFT_FACTOR * mu * math.exp(-mu) * est.y1_lower
    phase_errors_hat = est.e1_upper * single_photon_hat

    if infinite_n:
        s1 = single_photon_hat
        phase_errors_ub = phase_errors_hat
        e1_phase = est.e1_upper
        constants = 0.0
    else:
        eps_share = params.epsilon_total / EPSILON_SHARES
        s1 = chernoff_interval(single_photon_hat, eps_share)[0]
        if s1 <= 0.0:
            return _zero_report(params, "estimation failure", rates,
                                n_total=n_total_scaled, infinite_n=infinite_n)
        phase_errors_ub = chernoff_interval(phase_errors_hat, eps_share)[1]
        e1_phase = min(phase_errors_ub / s1, 0.5)
        constants = (math.log2(2.0 / eps_share)
                     + 2.0 * math.log2(1.0 / (2.0 * eps_share)))

    entropy_phase = binary_entropy(e1_phase)
    entropy_qber = binary_entropy(rates.qber_signal)
    ec_bits = params.ec_efficiency * sifted_signal * entropy_qber

    length_raw = s1 * (1.0 - entropy_phase) - ec_bits - constants
    length = max(0.0, length_raw)
    rate_raw = length_raw / n_total_scaled
    rate = max(0.0, rate_raw)
    reason = "" if rate > 0.0 else "negative length"

    asym = max(0.0, _asymptotic_from_rates(rates, params.ec_efficiency))

    return KeyRateReport(
        rate_per_pulse=rate,
        rate_finite_raw=rate_raw,
        rate_asymptotic=asym,
        reason=reason,
        gain_signal=rates.gain_signal,
        gain_decoy=rates.gain_decoy,
        qber_signal=rates.qber_signal,
        qber_decoy=rates.qber_decoy,
        background_observed=rates.background,
        y1_lower=est.y1_lower,
        e1_upper=est.e1_upper,
        single_photon_count_lb=float(s1),
        phase_error_count_ub=float(phase_errors_ub),
        phase_error_rate=float(e1_phase),
        entropy_phase=float(entropy_phase),
        entropy_qber=float(entropy_qber),
        error_correction_bits=float(ec_bits),
        secret_length=float(length),
        secret_length_raw=float(length_raw),
        sifted_signal=float(sifted_signal),
        n_signal_pulses=float(n_signal),
        n_pulses_total=float(n_total_scaled),
        epsilon_total=params.epsilon_total,
        ec_efficiency=params.ec_efficiency,
        infinite_n=infinite_n,
    )
