"""Channel attenuation, asymmetric Mach-Zehnder decoding and gated detection.

Pulses are delta-like slots; only per-slot phases and mean photon
numbers propagate.  The interferometer combines each pulse with the one
a fixed integer number of slots earlier; the effective visibility folds
source seeding fidelity and decoder imperfection into one number.
Detection is a threshold model with Poisson click statistics and a dark
count probability per gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .source import PulseTrain


@dataclass(frozen=True)
class ChannelParams:
    loss_db: float = 0.0
    loss_per_km: float = 0.2

    def __post_init__(self):
        if self.loss_db < 0:
            raise PreconditionError("loss_db must be >= 0")
        if self.loss_per_km < 0:
            raise PreconditionError("loss_per_km must be >= 0")

    @classmethod
    def from_fiber_km(cls, length_km: float, loss_per_km: float = 0.2) -> "ChannelParams":
        return cls(loss_db=length_km * loss_per_km, loss_per_km=loss_per_km)

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)


@dataclass(frozen=True)
class InterferometerParams:
    delay: float = 500e-12
    internal_phase: float = 0.0
    insertion_loss_db: float = 3.0
    visibility: float = 1.0

    def __post_init__(self):
        if self.delay <= 0:
            raise PreconditionError("delay must be positive")
        if self.insertion_loss_db < 0:
            raise PreconditionError("insertion_loss_db must be >= 0")
        if not 0.0 <= self.visibility <= 1.0:
            raise PreconditionError("visibility must be in [0, 1]")

    @property
    def loss_factor(self) -> float:
        return 10.0 ** (-self.insertion_loss_db / 10.0)

    def delay_slots(self, clock_rate: float) -> int:
        k = self.delay * clock_rate
        k_int = int(round(k))
        if k_int < 1 or abs(k - k_int) > 1e-6:
            raise PreconditionError("delay must be an integer number >= 1 of slot periods")
        return k_int


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float = 0.14
    dark_rate: float = 150.0
    gate_width: float = 0.25e-9
    gate_period: float = 0.5e-9

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise PreconditionError("efficiency must be in [0, 1]")
        if self.dark_rate < 0:
            raise PreconditionError("dark_rate must be >= 0")
        if not 0 < self.gate_width <= self.gate_period:
            raise PreconditionError("gate_width must be in (0, gate_period]")

    @property
    def dark_probability(self) -> float:
        """Dark click probability within one detection gate."""
        return self.dark_rate * self.gate_width


@dataclass(frozen=True)
class InterferenceResult:
    """Mean photon numbers at the two decoder ports, per interference slot."""

    slots: np.ndarray
    port0: np.ndarray
    port1: np.ndarray

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class ClickRecord:
    """Time-gated detector outcomes per interference slot and port."""

    slots: np.ndarray
    port0: np.ndarray
    port1: np.ndarray

    def __post_init__(self):
        if not (len(self.slots) == len(self.port0) == len(self.port1)):
            raise PreconditionError("click record arrays must have equal length")

    @property
    def total_port0(self) -> int:
        return int(np.count_nonzero(self.port0))

    @property
    def total_port1(self) -> int:
        return int(np.count_nonzero(self.port1))

    def __len__(self) -> int:
        return len(self.slots)


def attenuate(train: PulseTrain, channel: ChannelParams) -> PulseTrain:
    """Scale every mean photon number by the channel transmittance."""
    return train.with_mean_photons(train.mean_photons * channel.transmittance)


def interfere(train: PulseTrain, mzi: InterferometerParams) -> InterferenceResult:
    """Two-path interference of each pulse with its k-slot predecessor.

    Port 0 is the constructive port at zero phase difference.  Port
    intensities sum to loss_factor times the mean of the two interfering
    pulses' photon numbers (exact energy conservation by construction).
    """
    k = mzi.delay_slots(train.config.clock_rate)
    if len(train) <= k:
        raise PreconditionError("train shorter than interferometer delay")
    mu_bar = 0.5 * (train.mean_photons[k:] + train.mean_photons[:-k])
    dphi = train.phases[k:] - train.phases[:-k] + mzi.internal_phase
    total = mzi.loss_factor * mu_bar
    port0 = 0.5 * total * (1.0 + mzi.visibility * np.cos(dphi))
    port1 = total - port0
    slots = np.arange(k, len(train))
    return InterferenceResult(slots, port0, port1)


def click_probability(mean_photons, det: DetectorParams):
    """Threshold-detector click probability for a slot of given mean photons."""
    mean_photons = np.asarray(mean_photons, dtype=float)
    if np.any(mean_photons < 0):
        raise PreconditionError("mean_photons must be >= 0")
    p = 1.0 - (1.0 - det.dark_probability) * np.exp(-mean_photons * det.efficiency)
    if p.ndim == 0:
        return float(p)
    return p


def detect(intensities: InterferenceResult, det: DetectorParams, rng_seed: int) -> ClickRecord:
    """Sample independent clicks on both ports; deterministic per seed."""
    rng = np.random.default_rng(rng_seed)
    p0 = click_probability(intensities.port0, det)
    p1 = click_probability(intensities.port1, det)
    c0 = rng.random(len(intensities)) < p0
    c1 = rng.random(len(intensities)) < p1
    return ClickRecord(intensities.slots, c0, c1)


def export_clicks_csv(record: ClickRecord, path) -> None:
    """Write a click record as CSV with columns slot, port0, port1."""
    data = np.column_stack([record.slots, record.port0.astype(int), record.port1.astype(int)])
    np.savetxt(path, data, delimiter=",", header="slot,port0,port1", comments="", fmt="%d")
