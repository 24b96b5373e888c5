"""Exact quantum model of the phase-encoding interferometer and its joint
Bell-state measurement.

A single photon is split over a long/short arm on the sender side (phase
``alpha`` on the long arm) and again over a long/short arm on the receiver
side (phase ``beta``).  The four resulting path-time modes interfere pairwise
in two arrival-time windows on a balanced beam splitter feeding two threshold
detectors.  This module carries the amplitude-level model, the closed-form
outcome distribution, and the deterministic decode rule used for sifted
rounds.  Everything here is pure and immutable; it is the ground-truth oracle
for the stochastic layers above.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

_QUARTER_TURN = math.pi / 2.0
_PHASE_TOL = 1e-12


class Window(IntEnum):
    """Arrival-time window of a detection.

    T0 collects the short-long / long-short path pairs; T1 collects the
    long-long pair together with the (delayed) short-short pair.
    """

    T0 = 0
    T1 = 1


@dataclass(frozen=True)
class PhaseSetting:
    """One of the four encoding phases {0, pi/2, pi, 3pi/2} radians.

    The even multiples of pi/2 form one basis, the odd multiples the other;
    the key bit is 0 for {0, pi/2} and 1 for {pi, 3pi/2}.
    """

    value: float

    def __post_init__(self):
        idx = round(self.value / _QUARTER_TURN)
        if idx not in (0, 1, 2, 3) or abs(self.value - idx * _QUARTER_TURN) > _PHASE_TOL:
            raise ValueError(
                f"phase must be a multiple k*pi/2 with k in 0..3, got {self.value!r}")

    @classmethod
    def from_index(cls, index: int) -> "PhaseSetting":
        return cls(float((index % 4) * _QUARTER_TURN))

    @property
    def index(self) -> int:
        """Integer k such that the phase equals k*pi/2, k in 0..3."""
        return round(self.value / _QUARTER_TURN) % 4

    @property
    def basis(self) -> str:
        """'Z' for phases {0, pi}, 'X' for phases {pi/2, 3pi/2}."""
        return "Z" if self.index % 2 == 0 else "X"

    @property
    def bit(self) -> int:
        """Key bit carried by the phase: 0 for {0, pi/2}, 1 for {pi, 3pi/2}."""
        return self.index // 2


#: The four legal settings, ordered by phase index.
PHASES = tuple(PhaseSetting.from_index(k) for k in range(4))


@dataclass(frozen=True)
class ArmAmplitudes:
    """Amplitudes over one party's two interferometer arms (long, short)."""

    amp_long: complex
    amp_short: complex

    def norm_squared(self) -> float:
        return abs(self.amp_long) ** 2 + abs(self.amp_short) ** 2


@dataclass(frozen=True)
class ModeAmplitudes:
    """Complex amplitudes over the four joint path-time modes.

    Mode labels combine the sender arm (lowercase l/s) with the receiver arm
    (uppercase L/S); e.g. ``amp_lS`` is the long-then-short amplitude.
    """

    amp_lL: complex
    amp_lS: complex
    amp_sL: complex
    amp_sS: complex

    def norm_squared(self) -> float:
        return (abs(self.amp_lL) ** 2 + abs(self.amp_lS) ** 2
                + abs(self.amp_sL) ** 2 + abs(self.amp_sS) ** 2)


class BellOutcome(Enum):
    """Conclusive joint-measurement outcome: a (detector, window) pair.

    The two window-T0 outcomes correspond to the psi-type projections, the
    two window-T1 outcomes to the phi-type projections; detector 1 is the
    beam splitter's sum port, detector 2 the difference port.
    """

    PSI_PLUS = (1, Window.T0)
    PSI_MINUS = (2, Window.T0)
    PHI_PLUS = (1, Window.T1)
    PHI_MINUS = (2, Window.T1)

    @property
    def detector(self) -> int:
        return self.value[0]

    @property
    def window(self) -> Window:
        return self.value[1]

    @property
    def cell(self) -> int:
        """Flat index (D1,T0)=0, (D2,T0)=1, (D1,T1)=2, (D2,T1)=3."""
        return int(self.value[1]) * 2 + (self.value[0] - 1)

    @classmethod
    def from_cell(cls, cell: int) -> "BellOutcome":
        return _CELL_OUTCOMES[cell]


_CELL_OUTCOMES = (BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS,
                  BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probability of each conclusive outcome for an ideal single photon."""

    p_psi_plus: float
    p_psi_minus: float
    p_phi_plus: float
    p_phi_minus: float

    def probability(self, outcome: BellOutcome) -> float:
        return self.as_tuple()[outcome.cell]

    def as_tuple(self) -> tuple:
        """Probabilities in cell order (D1,T0), (D2,T0), (D1,T1), (D2,T1)."""
        return (self.p_psi_plus, self.p_psi_minus,
                self.p_phi_plus, self.p_phi_minus)

    def total(self) -> float:
        return sum(self.as_tuple())


def encode_alice(alpha: PhaseSetting) -> ArmAmplitudes:
    """Sender encoding: equal split with phase ``alpha`` on the long arm."""
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    return ArmAmplitudes(amp_long=cmath.exp(1j * alpha.value) * inv_sqrt2,
                         amp_short=inv_sqrt2)


def encode_bob(state: ArmAmplitudes, beta: PhaseSetting) -> ModeAmplitudes:
    """Receiver encoding: tensor the sender state with the receiver split.

    Raises ValueError if the input state is not normalized (norm deviation
    beyond 1e-9), since only unit-norm sender states are physical here.
    """
    if abs(state.norm_squared() - 1.0) > 1e-9:
        raise ValueError(
            f"sender state must be normalized, |norm^2 - 1| = "
            f"{abs(state.norm_squared() - 1.0):.3e}")
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    phase = cmath.exp(1j * beta.value) * inv_sqrt2
    return ModeAmplitudes(
        amp_lL=state.amp_long * phase,
        amp_lS=state.amp_long * inv_sqrt2,
        amp_sL=state.amp_short * phase,
        amp_sS=state.amp_short * inv_sqrt2,
    )


def window_split(state: ModeAmplitudes):
    """Partition the four mode amplitudes by arrival-time window.

    Returns ``(t1_component, t0_component)`` where the T1 component is the
    (lL, sS) amplitude pair — the short-short term is delayed into the late
    window — and the T0 component is the (lS, sL) pair.  Amplitudes are
    passed through unmodified, so the two components' norms sum to the input
    norm.
    """
    return ((state.amp_lL, state.amp_sS), (state.amp_lS, state.amp_sL))


def bsm_distribution(alpha: PhaseSetting, beta: PhaseSetting) -> OutcomeDistribution:
    """Closed-form outcome distribution for settings (alpha, beta).

    Each window's two modes recombine on a balanced beam splitter whose sum
    port is detector 1 and difference port detector 2, giving

        P(D1,T0) = (1 + cos(alpha - beta))/4,  P(D2,T0) = (1 - cos(alpha - beta))/4,
        P(D1,T1) = (1 + cos(alpha + beta))/4,  P(D2,T1) = (1 - cos(alpha + beta))/4.
    """
    diff = math.cos(alpha.value - beta.value)
    summ = math.cos(alpha.value + beta.value)
    return OutcomeDistribution(
        p_psi_plus=(1.0 + diff) / 4.0,
        p_psi_minus=(1.0 - diff) / 4.0,
        p_phi_plus=(1.0 + summ) / 4.0,
        p_phi_minus=(1.0 - summ) / 4.0,
    )


def ideal_outcome(alpha: PhaseSetting, beta: PhaseSetting,
                  window: Window) -> BellOutcome:
    """The deterministic outcome in ``window`` for same-basis settings.

    Raises ValueError when the settings are in different bases, where both
    detectors fire with equal probability and no outcome is deterministic.
    """
    if alpha.basis != beta.basis:
        raise ValueError(
            f"settings are in different bases ({alpha.basis} vs {beta.basis}); "
            f"no deterministic outcome exists")
    dist = bsm_distribution(alpha, beta)
    probs = dist.as_tuple()
    cells = (0, 1) if window == Window.T0 else (2, 3)
    # Same-basis settings put the whole window probability (1/2) on one cell.
    chosen = cells[0] if probs[cells[0]] > probs[cells[1]] else cells[1]
    return BellOutcome.from_cell(chosen)


def decode_alice_bit(beta: PhaseSetting, outcome: BellOutcome) -> int:
    """Infer the sender's key bit from the receiver phase and the outcome.

    Assumes a same-basis round: in window T0 detector 1 means the phases were
    equal and detector 2 means they differed by pi; in window T1 detector 1
    means the phases summed to 0 (mod 2pi) and detector 2 that they summed to
    pi.  Defined for every input — rounds where the assumption was wrong are
    removed later by sifting, not here.
    """
    b = beta.index
    if outcome.window == Window.T0:
        alpha_idx = b if outcome.detector == 1 else (b + 2) % 4
    else:
        alpha_idx = (-b) % 4 if outcome.detector == 1 else (2 - b) % 4
    return alpha_idx // 2
