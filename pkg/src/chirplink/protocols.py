"""BB84 and differential-phase-shift encoding, sifting and link statistics.

BB84 encodes each symbol on a pulse pair (coherence block of two) as a
differential phase from {0, pi/2, pi, 3pi/2}; the receiver's basis is a
fair coin per pair (passive 50/50 choice) and only the central
interference slot of matched-basis pairs is sifted.  DPS encodes one bit
per pulse as a 0/pi phase step relative to the preceding pulse, and
every interference slot is sifted.

The analytic gain/QBER model mirrors the Monte Carlo path exactly:

    Q = 1 - (1 - Y0) exp(-mu * eta_tot)
    E = [e_det (1 - exp(-mu * eta_tot)) + Y0/2] / Q

with e_det = (1 - V)/2, Y0 = 1 - (1 - p_dark)^2 (two detectors), and

    BB84: mu = mean photons per pair,  eta_tot = T_ch * 1/2 * L_mzi * eta_det
    DPS:  mu = mean photons per pulse, eta_tot = T_ch * L_mzi * eta_det

The BB84 factor 1/2 is the pair-geometry duty factor: half of the
pair's energy interferes in the discarded satellite slots.  The passive
basis choice is a bookkeeping coin, not an extra optical loss; its
factor 1/2 enters the sifted rate and the key-rate sift factor, not Q.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .optics import (
    ChannelParams,
    ClickRecord,
    DetectorParams,
    InterferometerParams,
    attenuate,
    detect,
    interfere,
)
from .source import SourceConfig, emit_train

TWO_PI = 2.0 * math.pi

BASIS_Z = 0
BASIS_X = 1

BB84 = "bb84"
DPS = "dps"

_BB84_CHUNK = 1 << 20


@dataclass(frozen=True)
class Bb84Symbol:
    basis: int
    bit: int

    def __post_init__(self):
        if self.basis not in (BASIS_Z, BASIS_X) or self.bit not in (0, 1):
            raise PreconditionError("basis must be Z/X and bit 0/1")

    @property
    def phase_delta(self) -> float:
        return self.basis * (math.pi / 2.0) + self.bit * math.pi


@dataclass(frozen=True)
class Bb84Symbols:
    bases: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        if len(self.bases) != len(self.bits):
            raise PreconditionError("bases and bits must have equal length")

    def __len__(self) -> int:
        return len(self.bases)

    @property
    def phase_deltas(self) -> np.ndarray:
        return self.bases * (math.pi / 2.0) + self.bits * math.pi

    def __getitem__(self, i: int) -> Bb84Symbol:
        return Bb84Symbol(int(self.bases[i]), int(self.bits[i]))


@dataclass(frozen=True)
class DpsSymbols:
    bits: np.ndarray

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def phase_deltas(self) -> np.ndarray:
        return self.bits * math.pi


@dataclass(frozen=True)
class SiftResult:
    sifted_count: int
    error_count: int
    qber: float
    sifted_rate_bps: float

    def __post_init__(self):
        if not 0 <= self.error_count <= self.sifted_count:
            raise PreconditionError("error_count must be within [0, sifted_count]")


def generate_symbols(protocol: str, count: int, rng_seed: int):
    """Independent uniform symbols for either protocol, deterministic per seed."""
    if count < 1:
        raise PreconditionError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    if protocol == BB84:
        bases = rng.integers(0, 2, count, dtype=np.int8)
        bits = rng.integers(0, 2, count, dtype=np.int8)
        return Bb84Symbols(bases, bits)
    if protocol == DPS:
        return DpsSymbols(rng.integers(0, 2, count, dtype=np.int8))
    raise PreconditionError(f"unknown protocol {protocol!r}")


def generate_bob_bases(count: int, rng_seed: int) -> np.ndarray:
    """Fair-coin basis choices for the passive 50/50 receiver."""
    rng = np.random.default_rng(rng_seed)
    return rng.integers(0, 2, count, dtype=np.int8)


def bb84_encode(symbols: Bb84Symbols, block_length: int = 2) -> np.ndarray:
    """Per-pulse phases for pair encoding: each symbol becomes (0, phase_delta)."""
    if block_length != 2:
        raise PreconditionError("BB84 pair encoding requires block_length = 2")
    n = len(symbols)
    phases = np.zeros(2 * n)
    phases[1::2] = symbols.phase_deltas
    return phases


def dps_encode(symbols: DpsSymbols, start_phase: float = 0.0) -> np.ndarray:
    """Cumulative phases for len(symbols) + 1 pulses; step i is bit i times pi."""
    phases = np.empty(len(symbols) + 1)
    phases[0] = start_phase
    np.cumsum(symbols.phase_deltas, out=phases[1:])
    phases[1:] += start_phase
    return phases


def passive_basis_clicks(clicks_z: ClickRecord, clicks_x: ClickRecord, bob_bases: np.ndarray) -> ClickRecord:
    """Merge per-basis click records according to Bob's per-pair coin."""
    if len(clicks_z) != len(clicks_x):
        raise PreconditionError("basis click records must cover the same slots")
    pair = clicks_z.slots // 2
    use_x = bob_bases[pair].astype(bool)
    port0 = np.where(use_x, clicks_x.port0, clicks_z.port0)
    port1 = np.where(use_x, clicks_x.port1, clicks_z.port1)
    return ClickRecord(clicks_z.slots, port0, port1)


def _resolve_bits(c0: np.ndarray, c1: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Port identity gives the bit; double clicks get a fair coin."""
    bits = c1.astype(np.int8)
    double = c0 & c1
    n_double = int(np.count_nonzero(double))
    if n_double:
        bits[double] = rng.integers(0, 2, n_double, dtype=np.int8)
    return bits


def bb84_sift(
    symbols: Bb84Symbols,
    bob_basis_choices: np.ndarray,
    clicks: ClickRecord,
    rng_seed: int = 0,
    clock_rate: float = 2e9,
) -> SiftResult:
    """Sift matched-basis central-slot clicks against Alice's bits."""
    n_pairs = len(symbols)
    if len(bob_basis_choices) != n_pairs:
        raise PreconditionError("bob_basis_choices length must match symbols")
    if np.any(clicks.slots >= 2 * n_pairs):
        raise PreconditionError("click record extends beyond the symbol sequence")
    central = (clicks.slots % 2) == 1
    c0 = clicks.port0[central]
    c1 = clicks.port1[central]
    pair = clicks.slots[central] // 2
    matched = symbols.bases[pair] == bob_basis_choices[pair]
    clicked = c0 | c1
    keep = matched & clicked
    rng = np.random.default_rng(rng_seed)
    bob_bits = _resolve_bits(c0[keep], c1[keep], rng)
    errors = int(np.count_nonzero(bob_bits != symbols.bits[pair[keep]]))
    sifted = int(np.count_nonzero(keep))
    qber = errors / sifted if sifted else 0.0
    rate = sifted * clock_rate / (2.0 * n_pairs)
    return SiftResult(sifted, errors, qber, rate)


def dps_sift(
    symbols: DpsSymbols,
    clicks: ClickRecord,
    rng_seed: int = 0,
    clock_rate: float = 2e9,
) -> SiftResult:
    """Sift every clicked interference slot; bit from the port identity."""
    n_pulses = len(symbols) + 1
    if np.any(clicks.slots < 1) or np.any(clicks.slots >= n_pulses):
        raise PreconditionError("click record does not match the symbol sequence")
    clicked = clicks.port0 | clicks.port1
    c0 = clicks.port0[clicked]
    c1 = clicks.port1[clicked]
    rng = np.random.default_rng(rng_seed)
    bob_bits = _resolve_bits(c0, c1, rng)
    expected = symbols.bits[clicks.slots[clicked] - 1]
    errors = int(np.count_nonzero(bob_bits != expected))
    sifted = int(np.count_nonzero(clicked))
    qber = errors / sifted if sifted else 0.0
    rate = sifted * clock_rate / n_pulses
    return SiftResult(sifted, errors, qber, rate)


def vacuum_yield(det: DetectorParams) -> float:
    """Probability of a dark click on either detector within one gate."""
    return 1.0 - (1.0 - det.dark_probability) ** 2


def expected_gain_qber(
    protocol: str,
    mu: float,
    channel: ChannelParams,
    mzi: InterferometerParams,
    det: DetectorParams,
) -> tuple[float, float]:
    """Closed-form gain and QBER of the threshold-detector link model.

    For BB84, mu is the mean photon number of the pulse pair and the
    gain is per matched-basis pair; for DPS, mu is per pulse and the
    gain is per interference slot.
    """
    if mu < 0:
        raise PreconditionError("mu must be >= 0")
    if protocol == BB84:
        duty = 0.5
    elif protocol == DPS:
        duty = 1.0
    else:
        raise PreconditionError(f"unknown protocol {protocol!r}")
    eta_tot = channel.transmittance * duty * mzi.loss_factor * det.efficiency
    y0 = vacuum_yield(det)
    e_det = 0.5 * (1.0 - mzi.visibility)
    signal = 1.0 - math.exp(-mu * eta_tot)
    gain = 1.0 - (1.0 - y0) * math.exp(-mu * eta_tot)
    qber = (e_det * signal + 0.5 * y0) / gain if gain > 0 else 0.0
    return gain, qber


def _chunk_seeds(rng_seed: int, n: int) -> np.ndarray:
    return np.random.default_rng(rng_seed).integers(0, 2**63 - 1, size=n)


def simulate_bb84(
    n_pairs: int,
    config: SourceConfig,
    channel: ChannelParams,
    mzi: InterferometerParams,
    det: DetectorParams,
    rng_seed: int,
    randomize_blocks: bool = True,
    chunk_pairs: int = _BB84_CHUNK,
) -> SiftResult:
    """Monte Carlo BB84 link: encode, emit, attenuate, interfere, detect, sift.

    Chunked along block boundaries; counts are additive across chunks.
    """
    if n_pairs < 1:
        raise PreconditionError("n_pairs must be >= 1")
    if config.block_length != 2:
        raise PreconditionError("BB84 requires block_length = 2")
    n_chunks = (n_pairs + chunk_pairs - 1) // chunk_pairs
    seeds = _chunk_seeds(rng_seed, 6 * n_chunks).reshape(n_chunks, 6)
    mzi_x = InterferometerParams(
        delay=mzi.delay,
        internal_phase=mzi.internal_phase - math.pi / 2.0,
        insertion_loss_db=mzi.insertion_loss_db,
        visibility=mzi.visibility,
    )
    sifted = errors = 0
    done = 0
    while done < n_pairs:
        m = min(chunk_pairs, n_pairs - done)
        s_sym, s_bob, s_train, s_dz, s_dx, s_sift = seeds[done // chunk_pairs]
        symbols = generate_symbols(BB84, m, s_sym)
        bob = generate_bob_bases(m, s_bob)
        train = emit_train(config, bb84_encode(symbols), randomize_blocks, s_train)
        train = attenuate(train, channel)
        clicks_z = detect(interfere(train, mzi), det, s_dz)
        clicks_x = detect(interfere(train, mzi_x), det, s_dx)
        merged = passive_basis_clicks(clicks_z, clicks_x, bob)
        res = bb84_sift(symbols, bob, merged, s_sift, config.clock_rate)
        sifted += res.sifted_count
        errors += res.error_count
        done += m
    qber = errors / sifted if sifted else 0.0
    rate = sifted * config.clock_rate / (2.0 * n_pairs)
    return SiftResult(sifted, errors, qber, rate)


def simulate_dps(
    n_pulses: int,
    config: SourceConfig,
    channel: ChannelParams,
    mzi: InterferometerParams,
    det: DetectorParams,
    rng_seed: int,
    chunk_pulses: int = _BB84_CHUNK,
) -> SiftResult:
    """Monte Carlo DPS link over a single coherence block.

    Chunks overlap by one pulse so no interference slot is lost.
    """
    if n_pulses < 2:
        raise PreconditionError("n_pulses must be >= 2")
    n_bits = n_pulses - 1
    n_chunks = (n_bits + chunk_pulses - 1) // chunk_pulses
    seeds = _chunk_seeds(rng_seed, 3 * n_chunks).reshape(n_chunks, 3)
    sifted = errors = 0
    done = 0
    start_phase = 0.0
    for i in range(n_chunks):
        m = min(chunk_pulses, n_bits - done)
        s_sym, s_det, s_sift = seeds[i]
        symbols = generate_symbols(DPS, m, s_sym)
        phases = np.mod(dps_encode(symbols, start_phase), TWO_PI)
        start_phase = float(phases[-1])
        cfg = SourceConfig(
            clock_rate=config.clock_rate,
            pulse_width=config.pulse_width,
            wavelength=config.wavelength,
            halfwave_voltage=config.halfwave_voltage,
            perturbation_duration=config.perturbation_duration,
            block_length=len(phases),
            mean_photon_number=config.mean_photon_number,
        )
        train = attenuate(emit_train(cfg, phases, False, 0), channel)
        clicks = detect(interfere(train, mzi), det, s_det)
        res = dps_sift(symbols, clicks, s_sift, config.clock_rate)
        sifted += res.sifted_count
        errors += res.error_count
        done += m
    qber = errors / sifted if sifted else 0.0
    rate = sifted * config.clock_rate / n_pulses
    return SiftResult(sifted, errors, qber, rate)


def export_sift_json(
    result: SiftResult, protocol: str, loss_db: float, path
) -> None:
    payload = {
        "protocol": protocol,
        "loss_db": loss_db,
        "sifted_count": result.sifted_count,
        "error_count": result.error_count,
        "qber": result.qber,
        "sifted_rate_bps": result.sifted_rate_bps,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
