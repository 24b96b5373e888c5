"""Sampling tables and the pre-draw stage shared by both kernel backends.

Determinism contract: every random decision in a batch is drawn here, in a
fixed stage order, as uniform doubles from one Generator.  Discrete values
are obtained from cumulative tables by the rule "smallest index j with
u < cdf[j]" (``numpy.searchsorted(..., side='right')``).  The kernels only
transform these arrays, so compiled and pure backends produce bit-identical
tallies.

Stage order per batch:
  1. class selection uniforms        (size,)
  2. sender phase uniforms           (size,)
  3. receiver phase uniforms         (size,)
  4. photon-number uniforms          (size,)
  5. survival-thinning uniforms      (size,)
  6. landing-cell uniforms           (total surviving photons,)
  7. dark-count uniforms             (size, 4)   only when dark_count_prob > 0
  8. squash tie-break uniforms       (size,)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..optics import PHASES, BellOutcome, bsm_distribution, decode_alice_bit

#: Neglected tail mass when truncating photon-number distributions.
TAIL_MASS = 1e-18


def poisson_cdf(mean: float, tail: float = TAIL_MASS) -> np.ndarray:
    """Cumulative Poisson table, truncated where the remaining tail < tail.

    The last entry is forced to exactly 1.0, so lookups cap at the table end;
    the mass moved there is below ``tail``.
    """
    if mean == 0.0:
        return np.array([1.0])
    terms = [np.exp(-mean)]
    cum = terms[0]
    n = 0
    while 1.0 - cum > tail and n < 400:
        n += 1
        terms.append(terms[-1] * mean / n)
        cum += terms[-1]
    cdf = np.cumsum(terms)
    cdf[-1] = 1.0
    return cdf


def fixed_cdf(count: int) -> np.ndarray:
    """Degenerate table: every draw yields exactly ``count`` photons."""
    cdf = np.zeros(count + 1)
    cdf[count] = 1.0
    return cdf


def binomial_cdf_rows(n_max: int, success_prob: float) -> np.ndarray:
    """Cumulative Binomial(n, p) tables for all n in 0..n_max, one per row.

    Rows are padded to a common width with 1.0 (unreachable for u < 1), and
    each row's last real entry is forced to exactly 1.0.
    """
    width = n_max + 1
    rows = np.ones((n_max + 1, width))
    for n in range(n_max + 1):
        if n == 0:
            row = np.array([1.0])
        elif success_prob >= 1.0:
            row = np.zeros(n + 1)
            row[n] = 1.0
        elif success_prob <= 0.0:
            row = np.ones(n + 1)
        else:
            pmf = np.empty(n + 1)
            pmf[0] = (1.0 - success_prob) ** n
            ratio = success_prob / (1.0 - success_prob)
            for k in range(n):
                pmf[k + 1] = pmf[k] * (n - k) / (k + 1.0) * ratio
            row = np.cumsum(pmf)
            row[-1] = 1.0
        rows[n, : n + 1] = row
        rows[n, n] = 1.0
    return rows


@dataclass(frozen=True)
class SampleTables:
    """All lookup tables a batch needs, fixed for a given configuration."""

    class_cdf: np.ndarray        # (n_classes,)
    photon_cdfs: tuple           # one cdf per class
    binom_cdf: np.ndarray        # (n_max+1, n_max+1) thinning rows
    land_cdf: np.ndarray         # (16, 4): row = sender_idx*4 + receiver_idx
    decode_bit: np.ndarray       # (4, 4) int64: [receiver_idx, cell] -> bit
    n_classes: int


def build_tables(intensity_classes, channel_transmittance: float,
                 misalignment: float) -> SampleTables:
    """Precompute every lookup table for the given source/channel settings."""
    weights = np.array([c.selection_weight for c in intensity_classes], dtype=float)
    class_cdf = np.cumsum(weights / weights.sum())
    class_cdf[-1] = 1.0

    photon_cdfs = []
    for c in intensity_classes:
        if c.photon_statistics == "fixed":
            photon_cdfs.append(fixed_cdf(round(c.mean_photon_number)))
        else:
            photon_cdfs.append(poisson_cdf(c.mean_photon_number))
    n_max = max(len(cdf) - 1 for cdf in photon_cdfs)

    binom_cdf = binomial_cdf_rows(n_max, channel_transmittance)

    # Landing distribution per (sender phase, receiver phase), with the
    # misalignment detector-flip folded in: p'[cell] combines staying on the
    # ideal detector with being rerouted from the window's other detector.
    land_cdf = np.empty((16, 4))
    for a in range(4):
        for b in range(4):
            p = np.array(bsm_distribution(PHASES[a], PHASES[b]).as_tuple())
            flipped = p[[1, 0, 3, 2]]
            mixed = (1.0 - misalignment) * p + misalignment * flipped
            row = np.cumsum(mixed)
            row[-1] = 1.0
            land_cdf[a * 4 + b] = row

    decode_bit = np.empty((4, 4), dtype=np.int64)
    for b in range(4):
        for cell in range(4):
            decode_bit[b, cell] = decode_alice_bit(PHASES[b], BellOutcome.from_cell(cell))

    return SampleTables(class_cdf=class_cdf, photon_cdfs=tuple(photon_cdfs),
                        binom_cdf=binom_cdf, land_cdf=land_cdf,
                        decode_bit=decode_bit, n_classes=len(intensity_classes))


@dataclass(frozen=True)
class BatchDraws:
    """Pre-drawn randomness for one batch, ready for either kernel."""

    intensity_class: np.ndarray  # (size,) int64
    sender_idx: np.ndarray       # (size,) int64 phase index 0..3
    receiver_idx: np.ndarray     # (size,) int64 phase index 0..3
    survivors: np.ndarray        # (size,) int64 photons reaching detection
    landing_u: np.ndarray        # (sum survivors,) float64
    dark_clicks: np.ndarray      # (size, 4) uint8
    tie_u: np.ndarray            # (size,) float64


def draw_batch(rng: np.random.Generator, size: int, tables: SampleTables,
               dark_count_prob: float) -> BatchDraws:
    """Draw all randomness for ``size`` pulses in the fixed stage order."""
    u_class = rng.random(size)
    u_sender = rng.random(size)
    u_receiver = rng.random(size)
    u_photons = rng.random(size)
    u_thin = rng.random(size)

    cls = np.searchsorted(tables.class_cdf, u_class, side="right").astype(np.int64)
    sender_idx = (u_sender * 4.0).astype(np.int64)
    receiver_idx = (u_receiver * 4.0).astype(np.int64)

    photons = np.zeros(size, dtype=np.int64)
    for c, cdf in enumerate(tables.photon_cdfs):
        mask = cls == c
        if mask.any():
            photons[mask] = np.searchsorted(cdf, u_photons[mask], side="right")

    survivors = np.zeros(size, dtype=np.int64)
    for n in range(len(tables.binom_cdf)):
        mask = photons == n
        if mask.any():
            survivors[mask] = np.searchsorted(tables.binom_cdf[n], u_thin[mask],
                                              side="right")

    landing_u = rng.random(int(survivors.sum()))

    if dark_count_prob > 0.0:
        dark_clicks = (rng.random((size, 4)) < dark_count_prob).astype(np.uint8)
    else:
        dark_clicks = np.zeros((size, 4), dtype=np.uint8)

    tie_u = rng.random(size)

    return BatchDraws(intensity_class=cls, sender_idx=sender_idx,
                      receiver_idx=receiver_idx, survivors=survivors,
                      landing_u=landing_u, dark_clicks=dark_clicks, tie_u=tie_u)
