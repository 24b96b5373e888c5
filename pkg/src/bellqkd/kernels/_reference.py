"""Pure-NumPy batch kernel: the fallback and the semantic reference.

Transforms one batch of pre-drawn uniforms (see ``_tables.draw_batch``) into
stratified tallies.  The compiled kernel in ``_fast.pyx`` implements the same
arithmetic pulse-by-pulse; both must produce identical outputs for identical
inputs.
"""

from __future__ import annotations

import numpy as np


def run_batch(draws, land_cdf, decode_bit, partial: bool, n_classes: int):
    """Tally one batch.

    Returns ``(sent, sifted, errors, detected)`` where the first three are
    int64 arrays of shape (n_classes, 2) stratified by (intensity class,
    sender basis) and ``detected`` is the number of conclusive outcomes after
    mode filtering but before sifting.
    """
    cls = draws.intensity_class
    a_idx = draws.sender_idx
    b_idx = draws.receiver_idx
    m = draws.survivors
    size = cls.shape[0]

    basis = a_idx & 1
    strat = cls * 2 + basis
    sent = np.bincount(strat, minlength=n_classes * 2)

    # Landing cell of each surviving photon: first j with u < cdf[row, j].
    pulse_ids = np.repeat(np.arange(size), m)
    rows = np.repeat(a_idx * 4 + b_idx, m)
    cells = np.argmax(land_cdf[rows] > draws.landing_u[:, None], axis=1)

    counts = np.bincount(pulse_ids * 4 + cells, minlength=size * 4).reshape(size, 4)
    flags = (counts > 0) | (draws.dark_clicks > 0)

    clicked = flags.sum(axis=1)
    has_click = clicked > 0
    # Uniform tie-break among clicked cells in cell order.
    pick = (draws.tie_u * clicked).astype(np.int64)
    running = np.cumsum(flags, axis=1)
    chosen = np.argmax((running == (pick + 1)[:, None]) & flags, axis=1)

    if partial:
        conclusive = has_click & (chosen < 2)
    else:
        conclusive = has_click
    detected = int(conclusive.sum())

    same_basis = ((a_idx ^ b_idx) & 1) == 0
    sift_mask = conclusive & same_basis
    wrong = decode_bit[b_idx, chosen] != (a_idx >> 1)
    err_mask = sift_mask & wrong

    sifted = np.bincount(strat[sift_mask], minlength=n_classes * 2)
    errors = np.bincount(strat[err_mask], minlength=n_classes * 2)

    return (sent.reshape(n_classes, 2).astype(np.int64),
            sifted.reshape(n_classes, 2).astype(np.int64),
            errors.reshape(n_classes, 2).astype(np.int64),
            detected)
