"""Full protocol sessions: random phase choices on both sides, joint
measurement, sifting, and stratified tallying.

Two engines produce the same ``Tally`` shape: ``run_monte_carlo`` simulates
pulse-by-pulse (in batches, through a compiled or NumPy kernel), while
``run_analytic`` fills in closed-form expected counts.  A session in
``partial`` mode discards every late-window outcome before it is counted,
modeling a receiver without the extra delay path; since each window carries
probability 1/2 for every phase pair, this halves all detection counts
exactly in expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .devices import (DetectorParams, IntensityClass, LinkParams,
                      background_yield, expected_error_rate, expected_gain,
                      transmittance)
from .kernels._tables import build_tables, draw_batch
from .optics import PhaseSetting

BSM_MODES = ("complete", "partial")

#: Probability that both parties picked the same basis (uniform choices).
BASIS_MATCH_PROB = 0.5


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything one session needs: source mix, channel, detectors, size, seed."""

    bsm_mode: str
    intensity_classes: tuple
    link: LinkParams
    detectors: DetectorParams
    n_pulses: int
    seed: int
    batch_size: int = 1_000_000

    def __post_init__(self):
        if self.bsm_mode not in BSM_MODES:
            raise ValueError(f"bsm_mode must be one of {BSM_MODES}")
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.intensity_classes:
            raise ValueError("at least one intensity class is required")
        labels = [c.label for c in self.intensity_classes]
        if len(set(labels)) != len(labels):
            raise ValueError("intensity class labels must be unique")


@dataclass
class Tally:
    """Stratified counts from one session (or a merge of sessions).

    ``sent``, ``sifted`` and ``errors`` have shape (n_classes, 2): rows follow
    the configured intensity-class order, columns are the sender's basis
    (0 = even phases, 1 = odd phases).  ``detected`` counts conclusive
    outcomes after mode filtering but before sifting.  Counts are stored as
    float64 so the analytic engine can return expected (real-valued) tallies;
    Monte Carlo tallies hold exact integers.
    """

    class_labels: tuple
    mean_photon_numbers: tuple
    selection_weights: tuple
    bsm_mode: str
    sent: np.ndarray
    sifted: np.ndarray
    errors: np.ndarray
    detected: float
    n_pulses: float

    def class_index(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise KeyError(f"no intensity class labeled {label!r} in this tally")

    def sent_by_class(self) -> np.ndarray:
        return self.sent.sum(axis=1)

    def sifted_by_class(self) -> np.ndarray:
        return self.sifted.sum(axis=1)

    def errors_by_class(self) -> np.ndarray:
        return self.errors.sum(axis=1)

    def check(self):
        """Validate the count invariants; raises on violation."""
        if np.any(self.errors > self.sifted + 1e-9):
            raise ValueError("errors exceed sifted detections in some stratum")
        if np.any(self.sifted > self.sent + 1e-9):
            raise ValueError("sifted detections exceed sent pulses in some stratum")
        if abs(self.sent.sum() - self.n_pulses) > 1e-6 * max(1.0, self.n_pulses):
            raise ValueError("per-stratum sent counts do not sum to n_pulses")


def _normalized_weights(intensity_classes) -> tuple:
    total = sum(c.selection_weight for c in intensity_classes)
    return tuple(c.selection_weight / total for c in intensity_classes)


def empty_tally(config: ProtocolConfig) -> Tally:
    n = len(config.intensity_classes)
    return Tally(
        class_labels=tuple(c.label for c in config.intensity_classes),
        mean_photon_numbers=tuple(c.mean_photon_number for c in config.intensity_classes),
        selection_weights=_normalized_weights(config.intensity_classes),
        bsm_mode=config.bsm_mode,
        sent=np.zeros((n, 2)),
        sifted=np.zeros((n, 2)),
        errors=np.zeros((n, 2)),
        detected=0.0,
        n_pulses=0.0,
    )


def sift_decision(alpha: PhaseSetting, beta: PhaseSetting) -> bool:
    """Keep the round iff the phases differ by 0 or pi (same basis)."""
    diff = abs(alpha.value - beta.value)
    return min(abs(diff), abs(diff - math.pi)) < 1e-9


def merge(tallies) -> Tally:
    """Componentwise sum of identically stratified tallies."""
    tallies = list(tallies)
    if not tallies:
        raise ValueError("merge requires at least one tally")
    first = tallies[0]
    out = Tally(
        class_labels=first.class_labels,
        mean_photon_numbers=first.mean_photon_numbers,
        selection_weights=first.selection_weights,
        bsm_mode=first.bsm_mode,
        sent=first.sent.copy(),
        sifted=first.sifted.copy(),
        errors=first.errors.copy(),
        detected=first.detected,
        n_pulses=first.n_pulses,
    )
    for t in tallies[1:]:
        if (t.class_labels != first.class_labels
                or t.mean_photon_numbers != first.mean_photon_numbers
                or t.selection_weights != first.selection_weights
                or t.bsm_mode != first.bsm_mode):
            raise ValueError("cannot merge tallies with different stratification")
        out.sent += t.sent
        out.sifted += t.sifted
        out.errors += t.errors
        out.detected += t.detected
        out.n_pulses += t.n_pulses
    return out


def run_monte_carlo(config: ProtocolConfig, backend=None) -> Tally:
    """Simulate a full session pulse-by-pulse.

    Pulses are processed in batches of ``config.batch_size``; batch k draws
    from an independent substream derived via SeedSequence(seed, spawn_key=(k,)),
    so results are reproducible and independent of the batch split.  The
    ``backend`` argument selects the kernel ('compiled', 'python', or None
    for automatic).
    """
    kernel = kernels.get_backend(backend)
    eta = transmittance(config.link)
    tables = build_tables(config.intensity_classes, eta, config.detectors.misalignment)
    partial = config.bsm_mode == "partial"
    n_classes = tables.n_classes

    tally = empty_tally(config)
    sent = np.zeros((n_classes, 2), dtype=np.int64)
    sifted = np.zeros((n_classes, 2), dtype=np.int64)
    errors = np.zeros((n_classes, 2), dtype=np.int64)
    detected = 0

    remaining = config.n_pulses
    batch_index = 0
    while remaining > 0:
        size = min(config.batch_size, remaining)
        rng = np.random.default_rng(
            np.random.SeedSequence(config.seed, spawn_key=(batch_index,)))
        draws = draw_batch(rng, size, tables, config.detectors.dark_count_prob)
        b_sent, b_sifted, b_errors, b_detected = kernel.run_batch(
            draws, tables.land_cdf, tables.decode_bit, partial, n_classes)
        sent += b_sent
        sifted += b_sifted
        errors += b_errors
        detected += b_detected
        remaining -= size
        batch_index += 1

    tally.sent = sent.astype(float)
    tally.sifted = sifted.astype(float)
    tally.errors = errors.astype(float)
    tally.detected = float(detected)
    tally.n_pulses = float(config.n_pulses)
    return tally


def _expected_click_prob(cls: IntensityClass, eta: float, y0: float) -> float:
    """Per-pulse conclusive probability for either emission law."""
    if cls.photon_statistics == "fixed":
        return y0 + 1.0 - (1.0 - eta) ** round(cls.mean_photon_number)
    return expected_gain(cls.mean_photon_number, eta, y0)


def _expected_qber(cls: IntensityClass, eta: float, y0: float,
                   misalignment: float) -> float:
    if cls.photon_statistics == "fixed":
        hit = 1.0 - (1.0 - eta) ** round(cls.mean_photon_number)
        gain = y0 + hit
        if gain == 0.0:
            return 0.0
        return (0.5 * y0 + misalignment * hit) / gain
    try:
        return expected_error_rate(cls.mean_photon_number, eta, y0, misalignment)
    except ZeroDivisionError:
        return 0.0


def run_analytic(config: ProtocolConfig) -> Tally:
    """Closed-form counterpart of run_monte_carlo: expected (real) counts.

    Per stratum: sent = n_pulses * weight / 2 per basis; sifted =
    sent * (1/2) * gain * w_mode with w_mode = 1 (complete) or 1/2 (partial);
    errors = sifted * expected QBER.
    """
    eta = transmittance(config.link)
    y0 = background_yield(config.detectors)
    w_mode = 1.0 if config.bsm_mode == "complete" else 0.5
    weights = _normalized_weights(config.intensity_classes)

    tally = empty_tally(config)
    detected = 0.0
    for i, cls in enumerate(config.intensity_classes):
        gain = _expected_click_prob(cls, eta, y0)
        qber = _expected_qber(cls, eta, y0, config.detectors.misalignment)
        sent_class = config.n_pulses * weights[i]
        for basis in (0, 1):
            sent_cb = sent_class / 2.0
            sifted_cb = sent_cb * BASIS_MATCH_PROB * gain * w_mode
            tally.sent[i, basis] = sent_cb
            tally.sifted[i, basis] = sifted_cb
            tally.errors[i, basis] = sifted_cb * qber
        detected += sent_class * gain * w_mode
    tally.detected = detected
    tally.n_pulses = float(config.n_pulses)
    return tally


def default_source_mix(signal_intensity: float = 0.6, decoy_intensity: float = 0.2,
                       weights=(6.0, 2.0, 1.0)) -> tuple:
    """The standard three-intensity source mix used by the default setup."""
    return (IntensityClass("signal", signal_intensity, weights[0]),
            IntensityClass("decoy", decoy_intensity, weights[1]),
            IntensityClass("vacuum", 0.0, weights[2]))
