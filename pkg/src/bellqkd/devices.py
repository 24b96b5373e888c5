"""Stochastic and closed-form models of the hardware: weak-coherent source
with decoy intensities, lossy fiber link, and threshold detectors with dark
counts and misalignment.

The per-pulse functions here (``detect``, ``squash``) are the readable
reference implementation; the batch kernels in ``bellqkd.kernels`` implement
the same semantics vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optics import BellOutcome, OutcomeDistribution

#: Error rate of a background (dark-count) click: random, hence 1/2.
BACKGROUND_ERROR_RATE = 0.5

_CLASS_LABELS = ("signal", "decoy", "vacuum")


@dataclass(frozen=True)
class IntensityClass:
    """One source intensity: its label, mean photon number and mix weight.

    ``photon_statistics`` selects the emission law: ``"poisson"`` for a
    phase-randomized weak coherent pulse (the default), ``"fixed"`` for a
    source emitting exactly ``round(mean_photon_number)`` photons every
    pulse (useful for idealized tests).
    """

    label: str
    mean_photon_number: float
    selection_weight: float
    photon_statistics: str = "poisson"

    def __post_init__(self):
        if self.label not in _CLASS_LABELS:
            raise ValueError(f"label must be one of {_CLASS_LABELS}, got {self.label!r}")
        if self.mean_photon_number < 0:
            raise ValueError("mean photon number must be >= 0")
        if self.label == "vacuum" and self.mean_photon_number != 0:
            raise ValueError("vacuum class must have mean photon number 0")
        if self.selection_weight <= 0:
            raise ValueError("selection weight must be > 0")
        if self.photon_statistics not in ("poisson", "fixed"):
            raise ValueError(f"unknown photon statistics {self.photon_statistics!r}")


@dataclass(frozen=True)
class LinkParams:
    """Fiber link plus receiver: distance, attenuation, and detector efficiency."""

    distance_km: float
    loss_db_per_km: float
    insertion_loss_db: float
    detector_efficiency: float

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError("distance must be >= 0")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError("detector efficiency must be in (0, 1]")


@dataclass(frozen=True)
class DetectorParams:
    """Threshold-detector imperfections: dark counts and misalignment."""

    dark_count_prob: float
    misalignment: float

    def __post_init__(self):
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark count probability must be in [0, 1)")
        if not 0.0 <= self.misalignment <= 0.5:
            raise ValueError("misalignment must be in [0, 0.5]")


@dataclass(frozen=True)
class DetectionRecord:
    """Raw click flags for the four detector-window cells.

    Threshold detectors: any subset of cells may fire within one pulse.
    Order matches the flat cell index of BellOutcome: (D1,T0), (D2,T0),
    (D1,T1), (D2,T1).
    """

    clicks: tuple

    def __post_init__(self):
        if len(self.clicks) != 4:
            raise ValueError("a detection record has exactly four cells")

    def any_click(self) -> bool:
        return any(self.clicks)

    def clicked_cells(self) -> tuple:
        return tuple(i for i, c in enumerate(self.clicks) if c)


def sample_photon_number(intensity: IntensityClass, rng: np.random.Generator) -> int:
    """Draw one pulse's photon number from the class's emission law."""
    if intensity.photon_statistics == "fixed":
        return round(intensity.mean_photon_number)
    if intensity.mean_photon_number == 0.0:
        return 0
    return int(rng.poisson(intensity.mean_photon_number))


def transmittance(link: LinkParams) -> float:
    """Overall photon survival probability from source to a detector click.

    eta = detector_efficiency * 10^(-(loss_db_per_km*distance + insertion)/10).
    """
    total_db = link.loss_db_per_km * link.distance_km + link.insertion_loss_db
    return link.detector_efficiency * 10.0 ** (-total_db / 10.0)


def background_yield(det: DetectorParams) -> float:
    """Probability that a vacuum pulse still clicks: 1 - (1-p_dark)^4.

    Four independent opportunities per pulse (two detectors, two windows).
    """
    return 1.0 - (1.0 - det.dark_count_prob) ** 4


def detect(n_photons: int, ideal: OutcomeDistribution, link: LinkParams,
           det: DetectorParams, rng: np.random.Generator) -> DetectionRecord:
    """Simulate one pulse through loss, landing, misalignment and dark counts.

    Each of the ``n_photons`` photons independently survives with probability
    ``transmittance(link)``, lands on a detector-window cell per ``ideal``,
    and is rerouted to the other detector of the same window with probability
    ``det.misalignment``.  Each cell additionally dark-clicks independently.
    The record is the OR of everything.
    """
    total = ideal.total()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"ideal distribution must be normalized, sums to {total!r}")
    eta = transmittance(link)
    cdf = np.cumsum(ideal.as_tuple())
    cdf[-1] = 1.0
    clicks = [False, False, False, False]
    for _ in range(n_photons):
        if rng.random() >= eta:
            continue
        cell = int(np.searchsorted(cdf, rng.random(), side="right"))
        if det.misalignment > 0.0 and rng.random() < det.misalignment:
            cell ^= 1  # other detector, same window
        clicks[cell] = True
    if det.dark_count_prob > 0.0:
        for cell in range(4):
            if rng.random() < det.dark_count_prob:
                clicks[cell] = True
    return DetectionRecord(clicks=tuple(clicks))


def squash(record: DetectionRecord, rng: np.random.Generator):
    """Map a (possibly multi-click) record to one outcome, or None.

    No clicks -> None; one click -> that cell's outcome; several clicks ->
    uniformly random choice among the clicked cells.
    """
    cells = record.clicked_cells()
    if not cells:
        return None
    if len(cells) == 1:
        return BellOutcome.from_cell(cells[0])
    pick = int(rng.random() * len(cells))
    return BellOutcome.from_cell(cells[pick])


def expected_gain(mean_photon_number: float, channel_transmittance: float,
                  background: float) -> float:
    """Per-pulse conclusive-detection probability for a Poisson source.

    Q = background + 1 - exp(-eta*mean).  Background and photon clicks are
    treated as independent; the O(background*eta) overlap term is dropped,
    which is far below every tolerance used here at background ~ 1e-7.
    expm1 keeps full precision when eta*mean is tiny (long links).
    """
    return background - math.expm1(-channel_transmittance * mean_photon_number)


def expected_error_rate(mean_photon_number: float, channel_transmittance: float,
                        background: float, misalignment: float) -> float:
    """Expected QBER for a Poisson source through the same channel model.

    E*Q = (1/2)*background + misalignment*(1 - exp(-eta*mean)); returns E.
    Raises ZeroDivisionError when the gain is zero (no detections to err on).
    """
    gain = expected_gain(mean_photon_number, channel_transmittance, background)
    if gain == 0.0:
        raise ZeroDivisionError("expected gain is zero; error rate undefined")
    weighted = (BACKGROUND_ERROR_RATE * background
                - misalignment * math.expm1(-channel_transmittance * mean_photon_number))
    return weighted / gain
