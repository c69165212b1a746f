"""Stochastic coincidence-counting simulation of pulsed interference setups.

The simulator reproduces the full correlation histogram an experiment would
record: a pulse train drives one or two emitters, photon pairs meet (or miss)
on the final beam splitter, detections land on two counters, and every
counter-pair delay within the histogram window is tallied.

Reproducibility contract
------------------------
All randomness comes from counter-based Philox4x64-10 streams
(numpy.random.Philox). The pulse train is processed in fixed blocks of
CHUNK_PULSES; block c of a run keyed by RngSpec(seed, stream_id) uses
Philox key = [seed, stream_id * 2^32 + c]. Identical (seed, stream_id)
therefore give bitwise-identical histograms, independent of how blocks are
distributed over workers; integer counts are summed, which is
order-independent. Coincidence pairs are tallied within blocks; pairs that
would straddle a block boundary are not counted, a deterministic O(window /
(CHUNK_PULSES * rep_period)) ~ 1e-4 relative effect on side-peak areas.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import PairSpec, time_jitter_overlap_factor, visibility_inhom_quadrature

__all__ = [
    "MODE_CONSECUTIVE",
    "MODE_DOUBLE_PULSE",
    "MODE_REMOTE",
    "MODE_CROSS_POLARIZED",
    "MODES",
    "CHUNK_PULSES",
    "RNG_ALGORITHM",
    "DetectorModel",
    "RngSpec",
    "InterferenceScenario",
    "CorrelationHistogram",
    "CoincidenceEvent",
    "PairEventBatch",
    "sample_pair_event",
    "sample_pair_events",
    "simulate_histogram",
    "simulate_hbt_purity",
    "analytic_visibility",
    "analytic_g2_indist",
    "hbt_analytic_g2",
    "multi_photon_prob_for_g2",
]

MODE_CONSECUTIVE = "consecutive-same-emitter"
MODE_DOUBLE_PULSE = "double-pulse-same-emitter"
MODE_REMOTE = "remote-emitters"
MODE_CROSS_POLARIZED = "cross-polarized-control"
MODES = (MODE_CONSECUTIVE, MODE_DOUBLE_PULSE, MODE_REMOTE, MODE_CROSS_POLARIZED)

CHUNK_PULSES = 1 << 16
RNG_ALGORITHM = "philox4x64-10 (numpy.random.Philox), per-block key [seed, stream_id<<32 | block]"


@dataclass(frozen=True)
class DetectorModel:
    """Detection efficiency, Gaussian timing jitter and dark-count rate."""

    efficiency: float = 1.0
    timing_jitter_sigma: float = 0.0
    dark_rate: float = 0.0

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.timing_jitter_sigma < 0:
            raise ValueError(f"timing_jitter_sigma must be >= 0, got {self.timing_jitter_sigma}")
        if self.dark_rate < 0:
            raise ValueError(f"dark_rate must be >= 0, got {self.dark_rate}")


@dataclass(frozen=True)
class RngSpec:
    """Seed and stream identity; identical values reproduce the event
    sequence bitwise."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.stream_id < 2 ** 32:
            raise ValueError(f"stream_id must fit in 32 bits, got {self.stream_id}")


@dataclass(frozen=True)
class InterferenceScenario:
    """One simulated experiment: pairing mode, pair physics, pulse timing,
    phenomenological emission-time jitter and the detector model."""

    mode: str
    pair: PairSpec
    rep_period: float
    intra_delay: float = 2.0
    emission_jitter: float = 0.0
    n_pulses: int = 100_000
    detector: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.rep_period > 0:
            raise ValueError(f"rep_period must be > 0, got {self.rep_period}")
        if not 0 < self.intra_delay < self.rep_period:
            raise ValueError(
                f"intra_delay must lie in (0, rep_period), got {self.intra_delay}")
        if self.emission_jitter < 0:
            raise ValueError(f"emission_jitter must be >= 0, got {self.emission_jitter}")
        if self.n_pulses < 1:
            raise ValueError(f"n_pulses must be >= 1, got {self.n_pulses}")


@dataclass
class CorrelationHistogram:
    """Binned coincidence counts over a symmetric delay window."""

    bin_width: float
    counts: np.ndarray
    rep_period: float
    n_pulses: int
    mode: str
    total_events: int

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError(f"bin_width must be > 0, got {self.bin_width}")
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if int(self.counts.sum()) != self.total_events:
            raise ValueError("window accounting broken: counts do not sum to total_events")

    def window_halfspan(self) -> float:
        return 0.5 * self.counts.size * self.bin_width

    def bin_edges(self) -> np.ndarray:
        h = self.window_halfspan()
        return np.linspace(-h, h, self.counts.size + 1)

    def bin_centers(self) -> np.ndarray:
        e = self.bin_edges()
        return 0.5 * (e[:-1] + e[1:])


@dataclass
class CoincidenceEvent:
    """One sampled pair interaction at the beam splitter."""

    delta: float
    delta_tau: float
    opposite_port: bool
    tau: float
    times: tuple[float, float]
    ports: tuple[int, int]


@dataclass
class PairEventBatch:
    """Vectorized pair interactions (times relative to the pair midpoint)."""

    delta: np.ndarray
    delta_tau: np.ndarray
    opposite_port: np.ndarray
    tau: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    port_a: np.ndarray
    port_b: np.ndarray

    def __len__(self):
        return self.delta.size

    def event(self, i: int) -> CoincidenceEvent:
        return CoincidenceEvent(
            delta=float(self.delta[i]), delta_tau=float(self.delta_tau[i]),
            opposite_port=bool(self.opposite_port[i]), tau=float(self.tau[i]),
            times=(float(self.t_a[i]), float(self.t_b[i])),
            ports=(int(self.port_a[i]), int(self.port_b[i])))


def _chunk_rng(rng: RngSpec, chunk_index: int) -> np.random.Generator:
    if not 0 <= chunk_index < 2 ** 32:
        raise ValueError(f"block index out of range: {chunk_index}")
    key = np.array([rng.seed, (rng.stream_id << 32) | chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_g_wing(tau_r, a_abs, e_a, u):
    """Positive-delay sample from the wing density (up to normalization)

        e^{-a} (e^{x/tau_r} - e^{-x/tau_r})          for 0 <= x < a*tau_r...
        e^{-x/tau_r} (e^{a} - e^{-a})                for x >= |dt|

    where a = |dt|/tau_r and e_a = e^{-a}. This is the non-negative
    difference e^{-|x - dt|/tau_r} - e^{-(|dt| + x)/tau_r}, whose two CDF
    pieces invert in closed form (arccosh below |dt|, a log tail above).
    u is uniform on [0, 1)."""
    m1 = tau_r * (1.0 - e_a) ** 2
    m_tot = 2.0 * tau_r * (1.0 - e_a)
    uu = u * m_tot
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        inv_ea = 1.0 / np.maximum(e_a, 1e-300)
        y = 1.0 + uu * inv_ea / (2.0 * tau_r)
        x1 = tau_r * np.arccosh(np.maximum(y, 1.0))
        denom = tau_r * np.maximum(inv_ea - e_a, 1e-300)
        surv = e_a - (uu - m1) / denom
        x2 = -tau_r * np.log(np.clip(surv, 1e-300, None))
    return np.where(uu < m1, x1, x2)


def _sample_tau(tau_r, dtau, delta, opposite, g):
    """Coincidence delay from the conditional two-detection delay density

        e^{-|dt - t|/tau_r} + e^{-|dt + t|/tau_r}
        + sign * 2 cos(delta t) e^{-(|dt| + |t|)/tau_r}

    (sign -1 for opposite ports, +1 for bunched pairs). The density splits
    exactly into three non-negative parts: two mirror-image wing terms
    (sampled by closed-form inverse CDF) and an even interference term
    e^{-(|dt|+|t|)/tau_r} (2 + 2 sign cos(delta t)), sampled by thinning an
    exponential proposal. The thinning acceptance is (1 + sign*cos)/2, and
    because the interference component is picked in proportion to its own
    mass, the expected number of proposal rounds per pair stays O(1) even at
    the interference null."""
    n = dtau.size
    s = np.where(opposite, -1.0, 1.0)
    a_abs = np.abs(dtau) / tau_r
    e_a = np.exp(-a_abs)
    lorentz = 1.0 / (1.0 + (tau_r * delta) ** 2)
    m_wing = 2.0 * tau_r * (1.0 - e_a)  # each of the two wings
    m_int = 4.0 * tau_r * e_a * (1.0 + s * lorentz)
    u_comp = g.random(n) * (2.0 * m_wing + m_int)
    u_val = g.random(n)
    pick1 = u_comp < m_wing
    pick2 = ~pick1 & (u_comp < 2.0 * m_wing)
    pick_int = ~(pick1 | pick2)

    tau = np.zeros(n)
    wing = pick1 | pick2
    if np.any(wing):
        x = _sample_g_wing(tau_r, a_abs[wing], e_a[wing], u_val[wing])
        orient = np.where(pick1[wing], 1.0, -1.0) * np.sign(dtau[wing])
        tau[wing] = orient * x
    idx = np.nonzero(pick_int)[0]
    if idx.size:
        vals = np.empty(idx.size)
        pending = np.arange(idx.size)
        while pending.size:
            rows = idx[pending]
            prop = g.exponential(tau_r, pending.size)
            acc = g.random(pending.size) < 0.5 * (1.0 + s[rows] * np.cos(delta[rows] * prop))
            vals[pending[acc]] = prop[acc]
            pending = pending[~acc]
        flip = np.where(g.random(idx.size) < 0.5, 1.0, -1.0)
        tau[idx] = flip * vals
    return tau


def _sample_t0(tau_r, dtau, delta, tau, opposite, u_seg, u_exp):
    """First-detection time conditioned on the delay tau.

    At fixed tau the kernel in t0 is exponential with rate 2/tau_r on two
    segments: between the staggered packet onsets only one amplitude product
    is alive (relative weight 1); past both onsets the interference term
    rescales the amplitude to 2 -+ 2 cos(delta*tau)."""
    o1 = dtau / 2.0
    o2 = -dtau / 2.0
    a = np.maximum(o1, o2 - tau)
    b = np.maximum(o2, o1 - tau)
    mn = np.minimum(a, b)
    mx = np.maximum(a, b)
    rate = 2.0 / tau_r
    s = np.exp(-rate * (mx - mn))
    amp = 2.0 + np.where(opposite, -2.0, 2.0) * np.cos(delta * tau)
    w1 = 1.0 - s
    w2 = np.maximum(amp, 1e-300) * s
    pick1 = u_seg * (w1 + w2) < w1
    # truncated exponential on [mn, mx) or shifted exponential past mx
    t_trunc = mn - np.log1p(-u_exp * (1.0 - s)) / rate
    t_tail = mx - np.log1p(-u_exp) / rate
    return np.where(pick1, t_trunc, t_tail)


def _sample_meeting_pairs(tau_r, dtau, delta, g):
    """Joint outcome for pairs that overlap on the beam splitter: whether the
    photons split, the two detection times (relative to the pair midpoint)
    and the port of each detection."""
    n = dtau.size
    adt = np.abs(dtau)
    p_split = 0.5 * (1.0 - np.exp(-adt / tau_r) / (1.0 + (tau_r * delta) ** 2))
    u_port = g.random(n)
    opposite = u_port < p_split
    tau = _sample_tau(tau_r, dtau, delta, opposite, g)
    u_seg = g.random(n)
    u_exp = g.random(n)
    u_side = g.random(n)
    t0 = _sample_t0(tau_r, dtau, delta, tau, opposite, u_seg, u_exp)
    port_a = (u_side < 0.5).astype(np.int8)
    port_b = np.where(opposite, 1 - port_a, port_a).astype(np.int8)
    return opposite, t0, t0 + tau, port_a, port_b


def _sample_independent(onsets, tau_r, g):
    """Detection times and ports for photons that do not interfere."""
    times = onsets + g.exponential(tau_r, onsets.size)
    ports = (g.random(onsets.size) < 0.5).astype(np.int8)
    return times, ports


def sample_pair_events(scenario: InterferenceScenario, n: int,
                       rng: RngSpec | np.random.Generator) -> PairEventBatch:
    """Draw n independent beam-splitter pair interactions for the scenario's
    pair physics (frequency difference from the jitter ensemble, arrival
    offset from the deliberate delay plus emission-time jitter).

    In cross-polarized operation the photons are fully distinguishable: ports
    are independent and the delay density is the no-interference one.

    Passing an RngSpec uses its block-0 stream (the same stream a histogram
    run would start from); pass a Generator to control the stream yourself.
    """
    g = rng if isinstance(rng, np.random.Generator) else _chunk_rng(rng, 0)
    pair = scenario.pair
    tr = pair.tau_r
    jit = scenario.emission_jitter
    j1 = g.normal(0.0, jit, n) if jit > 0 else np.zeros(n)
    j2 = g.normal(0.0, jit, n) if jit > 0 else np.zeros(n)
    dtau = pair.delta_tau + j1 - j2
    if pair.sigma_g > 0:
        delta = g.normal(pair.delta0, math.sqrt(2.0) * pair.sigma_g, n)
    else:
        delta = np.full(n, pair.delta0)

    if scenario.mode == MODE_CROSS_POLARIZED:
        e1 = g.exponential(tr, n)
        e2 = g.exponential(tr, n)
        t1 = dtau / 2.0 + e1
        t2 = -dtau / 2.0 + e2
        p1 = (g.random(n) < 0.5).astype(np.int8)
        p2 = (g.random(n) < 0.5).astype(np.int8)
        return PairEventBatch(delta=delta, delta_tau=dtau, opposite_port=p1 != p2,
                              tau=t2 - t1, t_a=t1, t_b=t2, port_a=p1, port_b=p2)

    opposite, ta, tb, pa, pb = _sample_meeting_pairs(tr, dtau, delta, g)
    return PairEventBatch(delta=delta, delta_tau=dtau, opposite_port=opposite,
                          tau=tb - ta, t_a=ta, t_b=tb, port_a=pa, port_b=pb)


def sample_pair_event(scenario: InterferenceScenario,
                      rng: RngSpec | np.random.Generator) -> CoincidenceEvent:
    """Single-event form of sample_pair_events."""
    return sample_pair_events(scenario, 1, rng).event(0)


def _mode_detections(scenario, g, pulse_lo, n_p):
    """All detection (time, port) pairs a block of n_p pulses produces,
    before detector effects."""
    pair = scenario.pair
    tr = pair.tau_r
    T = scenario.rep_period
    jit = scenario.emission_jitter
    base_pulse = pulse_lo * T
    times_list = []
    ports_list = []

    if scenario.mode == MODE_REMOTE:
        j1 = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
        j2 = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
        delta = (g.normal(pair.delta0, math.sqrt(2.0) * pair.sigma_g, n_p)
                 if pair.sigma_g > 0 else np.full(n_p, pair.delta0))
        dtau = pair.delta_tau + j1 - j2
        mid = base_pulse + np.arange(n_p) * T + (j1 + j2) / 2.0
        _, ta, tb, pa, pb = _sample_meeting_pairs(tr, dtau, delta, g)
        times_list += [mid + ta, mid + tb]
        ports_list += [pa, pb]

    elif scenario.mode in (MODE_DOUBLE_PULSE, MODE_CROSS_POLARIZED):
        d = scenario.intra_delay
        off = pair.delta_tau
        jA = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
        jB = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
        rA = g.random(n_p) < 0.5  # True: long interferometer arm (+d + off)
        rB = g.random(n_p) < 0.5
        delta = (g.normal(pair.delta0, math.sqrt(2.0) * pair.sigma_g, n_p)
                 if pair.sigma_g > 0 else np.full(n_p, pair.delta0))
        pulse_t = base_pulse + np.arange(n_p) * T
        interfere = (rA & ~rB) if scenario.mode == MODE_DOUBLE_PULSE else np.zeros(n_p, bool)

        idx = np.nonzero(interfere)[0]
        if idx.size:
            dtau = off + jA[idx] - jB[idx]
            mid = pulse_t[idx] + d + (jA[idx] + jB[idx] + off) / 2.0
            _, ta, tb, pa, pb = _sample_meeting_pairs(tr, dtau, delta[idx], g)
            times_list += [mid + ta, mid + tb]
            ports_list += [pa, pb]
        solo = ~interfere
        onsA = pulse_t[solo] + jA[solo] + np.where(rA[solo], d + off, 0.0)
        onsB = pulse_t[solo] + d + jB[solo] + np.where(rB[solo], d + off, 0.0)
        for ons in (onsA, onsB):
            t, p = _sample_independent(ons, tr, g)
            times_list.append(t)
            ports_list.append(p)

    elif scenario.mode == MODE_CONSECUTIVE:
        off = pair.delta_tau
        j = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
        routes = g.random(n_p) < 0.5  # True: long arm (+rep_period + off)
        delta = (g.normal(pair.delta0, math.sqrt(2.0) * pair.sigma_g, n_p)
                 if pair.sigma_g > 0 else np.full(n_p, pair.delta0))
        pulse_t = base_pulse + np.arange(n_p) * T
        meet = np.zeros(n_p, dtype=bool)
        if n_p > 1:
            meet[:-1] = routes[:-1] & ~routes[1:]  # photon k long meets k+1 short
        idx = np.nonzero(meet)[0]
        in_meeting = meet.copy()
        if n_p > 1:
            in_meeting[1:] |= meet[:-1]
        if idx.size:
            dtau = off + j[idx] - j[idx + 1]
            mid = pulse_t[idx] + T + (j[idx] + j[idx + 1] + off) / 2.0
            _, ta, tb, pa, pb = _sample_meeting_pairs(tr, dtau, delta[idx], g)
            times_list += [mid + ta, mid + tb]
            ports_list += [pa, pb]
        solo = ~in_meeting
        ons = pulse_t[solo] + j[solo] + np.where(routes[solo], T + off, 0.0)
        t, p = _sample_independent(ons, tr, g)
        times_list.append(t)
        ports_list.append(p)
    else:  # pragma: no cover - guarded by InterferenceScenario
        raise ValueError(f"unknown mode {scenario.mode!r}")

    times = np.concatenate(times_list) if times_list else np.empty(0)
    ports = np.concatenate(ports_list) if ports_list else np.empty(0, dtype=np.int8)
    return times, ports


def _apply_detector(times, ports, det: DetectorModel, span_lo, span_hi, g):
    """Efficiency thinning, timing jitter and dark counts, in that order."""
    if det.efficiency < 1.0:
        keep = g.random(times.size) < det.efficiency
        times, ports = times[keep], ports[keep]
    if det.timing_jitter_sigma > 0 and times.size:
        times = times + g.normal(0.0, det.timing_jitter_sigma, times.size)
    if det.dark_rate > 0:
        span = span_hi - span_lo
        for port in (0, 1):
            n_dark = g.poisson(det.dark_rate * span)
            if n_dark:
                times = np.concatenate([times, span_lo + span * g.random(n_dark)])
                ports = np.concatenate([ports, np.full(n_dark, port, dtype=np.int8)])
    return times, ports


def _correlate(times, ports, halfspan, bin_width, nbins):
    """Histogram of t2 - t1 over all detector-1/detector-2 detection pairs
    with |t2 - t1| <= halfspan."""
    d1 = np.sort(times[ports == 0])
    d2 = np.sort(times[ports == 1])
    counts = np.zeros(nbins, dtype=np.int64)
    if d1.size == 0 or d2.size == 0:
        return counts, 0
    lo = np.searchsorted(d2, d1 - halfspan, side="left")
    hi = np.searchsorted(d2, d1 + halfspan, side="right")
    per = hi - lo
    total = int(per.sum())
    if total == 0:
        return counts, 0
    reps = np.repeat(np.cumsum(per) - per, per)
    idx2 = np.repeat(lo, per) + (np.arange(total) - reps)
    tau = d2[idx2] - np.repeat(d1, per)
    bins = np.floor((tau + halfspan) / bin_width).astype(np.int64)
    ok = (bins >= 0) & (bins < nbins)
    counts += np.bincount(bins[ok], minlength=nbins)
    return counts, int(ok.sum())


def _simulate_block(scenario, rng, chunk_index, pulse_lo, n_p, halfspan, bin_width, nbins):
    g = _chunk_rng(rng, chunk_index)
    times, ports = _mode_detections(scenario, g, pulse_lo, n_p)
    span_lo = pulse_lo * scenario.rep_period
    span_hi = (pulse_lo + n_p) * scenario.rep_period
    times, ports = _apply_detector(times, ports, scenario.detector, span_lo, span_hi, g)
    return _correlate(times, ports, halfspan, bin_width, nbins)


def _run_blocks(scenario, rng, block_fn, n_pulses, bin_width, window_periods, n_jobs):
    halfspan = window_periods * scenario.rep_period
    nbins = 2 * int(round(halfspan / bin_width)) + 1  # odd count: lag 0 is a bin center
    halfspan = 0.5 * nbins * bin_width
    n_blocks = (n_pulses + CHUNK_PULSES - 1) // CHUNK_PULSES

    def work(c):
        lo = c * CHUNK_PULSES
        n_p = min(CHUNK_PULSES, n_pulses - lo)
        return block_fn(scenario, rng, c, lo, n_p, halfspan, bin_width, nbins)

    counts = np.zeros(nbins, dtype=np.int64)
    total = 0
    if n_jobs <= 1 or n_blocks == 1:
        for c in range(n_blocks):
            cc, t = work(c)
            counts += cc
            total += t
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for cc, t in pool.map(work, range(n_blocks)):
                counts += cc
                total += t
    return counts, total, halfspan


def simulate_histogram(scenario: InterferenceScenario, rng: RngSpec, *,
                       bin_width: float = 0.128, window_periods: int = 3,
                       n_jobs: int = 1) -> CorrelationHistogram:
    """Simulate the full pulse-train coincidence histogram for the scenario.

    Deterministic for a fixed RngSpec; n_jobs only distributes the fixed
    pulse blocks over threads and cannot change the counts.
    """
    counts, total, _ = _run_blocks(scenario, rng, _simulate_block,
                                   scenario.n_pulses, bin_width, window_periods, n_jobs)
    return CorrelationHistogram(bin_width=bin_width, counts=counts,
                                rep_period=scenario.rep_period,
                                n_pulses=scenario.n_pulses, mode=scenario.mode,
                                total_events=total)


def _hbt_block(p2, scenario, rng, chunk_index, pulse_lo, n_p, halfspan, bin_width, nbins):
    g = _chunk_rng(rng, chunk_index)
    tr = scenario.pair.tau_r
    T = scenario.rep_period
    jit = scenario.emission_jitter
    pulse_t = (pulse_lo + np.arange(n_p)) * T
    two = g.random(n_p) < p2
    j1 = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
    j2 = g.normal(0.0, jit, n_p) if jit > 0 else np.zeros(n_p)
    t1 = pulse_t + j1 + g.exponential(tr, n_p)
    p1 = (g.random(n_p) < 0.5).astype(np.int8)
    t2 = (pulse_t + j2 + g.exponential(tr, n_p))[two]
    p2_ports = (g.random(n_p) < 0.5).astype(np.int8)[two]
    times = np.concatenate([t1, t2])
    ports = np.concatenate([p1, p2_ports])
    times, ports = _apply_detector(times, ports, scenario.detector,
                                   pulse_lo * T, (pulse_lo + n_p) * T, g)
    return _correlate(times, ports, halfspan, bin_width, nbins)


def simulate_hbt_purity(multi_photon_prob: float, scenario: InterferenceScenario,
                        rng: RngSpec, *, bin_width: float = 0.128,
                        window_periods: int = 3, n_jobs: int = 1) -> CorrelationHistogram:
    """Hanbury Brown-Twiss autocorrelation of a source that emits a second
    photon in a pulse with probability multi_photon_prob. The extracted
    central-to-side peak ratio converges to hbt_analytic_g2(multi_photon_prob).
    """
    if not 0 <= multi_photon_prob <= 1:
        raise ValueError(f"multi_photon_prob must lie in [0, 1], got {multi_photon_prob}")

    def block(scn, r, c, lo, n_p, hs, bw, nb):
        return _hbt_block(multi_photon_prob, scn, r, c, lo, n_p, hs, bw, nb)

    counts, total, _ = _run_blocks(scenario, rng, block,
                                   scenario.n_pulses, bin_width, window_periods, n_jobs)
    return CorrelationHistogram(bin_width=bin_width, counts=counts,
                                rep_period=scenario.rep_period,
                                n_pulses=scenario.n_pulses, mode="hbt",
                                total_events=total)


def hbt_analytic_g2(multi_photon_prob: float) -> float:
    """Central-to-side peak ratio of the two-photon admixture model:
    g2 = 2p / (1 + p)^2 for second-photon probability p."""
    p = multi_photon_prob
    return 2.0 * p / (1.0 + p) ** 2


def multi_photon_prob_for_g2(g2_target: float) -> float:
    """Second-photon probability whose HBT histogram shows the requested
    g2(0); inverse of hbt_analytic_g2 on [0, 0.5]."""
    if not 0 <= g2_target < 0.5:
        raise ValueError(f"g2_target must lie in [0, 0.5), got {g2_target}")
    if g2_target == 0:
        return 0.0
    return (1.0 - g2_target - math.sqrt(1.0 - 2.0 * g2_target)) / g2_target


def analytic_visibility(scenario: InterferenceScenario) -> float:
    """Model prediction for the peak-area interference visibility of the
    scenario: the detuning/jitter ensemble average times the arrival-time
    overlap factor from deliberate delay and emission jitter."""
    if scenario.mode == MODE_CROSS_POLARIZED:
        return 0.0
    pair = scenario.pair
    f_time = time_jitter_overlap_factor(pair.tau_r, pair.delta_tau, scenario.emission_jitter)
    if pair.sigma_g == 0:
        f_freq = 1.0 / (1.0 + (pair.tau_r * pair.delta0) ** 2)
    else:
        f_freq = visibility_inhom_quadrature(
            PairSpec(tau_r=pair.tau_r, delta_tau=0.0, delta0=pair.delta0, sigma_g=pair.sigma_g))
    return f_time * f_freq


def analytic_g2_indist(scenario: InterferenceScenario) -> float:
    """Model prediction for the measured g2_indist: (1 - visibility)/2."""
    return 0.5 * (1.0 - analytic_visibility(scenario))
