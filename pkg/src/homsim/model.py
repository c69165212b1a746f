"""Analytic two-photon interference model for pulsed two-level emitters.

Covers the homogeneous-dephasing correlation function of the central
coincidence peak, one-sided exponential photon wavepackets, the ensemble
average over Gaussian shot-to-shot frequency jitter of the emission line, and
the visibility formulas derived from both pictures.

Conventions used throughout:

* times in ns, angular frequencies in rad/ns;
* coincidence-peak areas are normalized so that two fully distinguishable
  photons meeting on the beam splitter give 0.5 relative to the side peaks;
* the pair frequency difference D is distributed as
  f(D) = exp(-(D - delta0)^2 / (4 sigma_g^2)) / (2 sqrt(pi) sigma_g),
  i.e. variance 2*sigma_g^2 with sigma_g = sqrt(sigma_1^2 + sigma_2^2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import QuadratureSpec, erfc, erfcx, integrate_1d

__all__ = [
    "HBAR_UEV_NS",
    "EmitterParams",
    "PhotonWavePacket",
    "PairSpec",
    "DegenerateJitterError",
    "coherence_time",
    "dephasing_time",
    "g2_hom_peak",
    "central_peak_area_hom",
    "visibility_hom",
    "wavepacket_amplitude",
    "g2_tl",
    "delta_distribution",
    "p_inhom",
    "p_inhom_quadrature",
    "visibility_inhom_closed",
    "visibility_inhom_direct",
    "visibility_inhom_quadrature",
    "sigma_from_coherence",
    "sigma_for_visibility",
    "coherence_integral",
    "michelson_contrast",
    "visibility_from_g2",
    "time_jitter_overlap_factor",
]

_SQRT_PI = math.sqrt(math.pi)

# hbar in microelectronvolt-nanoseconds: converts energy detunings in ueV to
# angular frequencies in rad/ns (omega = E / hbar).
HBAR_UEV_NS = 0.6582119569


class DegenerateJitterError(ValueError):
    """Signals that sigma_g = 0 has no frequency distribution to sample;
    callers must take the Fourier-limited path instead."""


@dataclass(frozen=True)
class EmitterParams:
    """Static parameters of one emitter.

    tau_r : radiative decay time (ns)
    tau_deph : pure dephasing time (ns), or None when absent
    sigma : Gaussian jitter scale of the center frequency (rad/ns)
    omega0 : center frequency (rad/ns)
    fss : fine-structure splitting (rad/ns), 0 when absent
    fss_weights : relative amplitudes of the two fine-structure components
    fss_tau_c : per-component coherence times (ns) for the two fine-structure
        lines; falls back to the single coherence_time() when None
    """

    tau_r: float
    tau_deph: float | None = None
    sigma: float = 0.0
    omega0: float = 0.0
    fss: float = 0.0
    fss_weights: tuple[float, float] = (1.0, 1.0)
    fss_tau_c: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.tau_r > 0:
            raise ValueError(f"tau_r must be > 0, got {self.tau_r}")
        if self.tau_deph is not None and not self.tau_deph > 0:
            raise ValueError(f"tau_deph must be > 0 when present, got {self.tau_deph}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.fss < 0:
            raise ValueError(f"fss must be >= 0, got {self.fss}")
        a1, a2 = self.fss_weights
        if a1 < 0 or a2 < 0 or (self.fss > 0 and a1 + a2 <= 0):
            raise ValueError(f"fss_weights must be non-negative with positive sum, got {self.fss_weights}")
        if self.fss_tau_c is not None and any(t <= 0 for t in self.fss_tau_c):
            raise ValueError(f"fss_tau_c entries must be > 0, got {self.fss_tau_c}")


@dataclass(frozen=True)
class PhotonWavePacket:
    """One-sided exponential wavepacket of a single photon.

    The amplitude rises instantaneously at `time_offset` and decays with the
    radiative lifetime; the carrier oscillates at omega + frequency_offset.
    `sign` tags which member of an interfering pair this is (+1 first,
    -1 second); the pair() constructor assigns the offsets symmetrically.
    """

    tau_r: float
    omega: float = 0.0
    frequency_offset: float = 0.0
    time_offset: float = 0.0
    sign: int = +1

    def __post_init__(self):
        if not self.tau_r > 0:
            raise ValueError(f"tau_r must be > 0, got {self.tau_r}")
        if self.sign not in (+1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @classmethod
    def pair(cls, tau_r, delta, delta_tau, omega=0.0):
        """The two members of an interfering pair: the first carries frequency
        offset -delta/2 and onset +delta_tau/2, the second the opposites."""
        first = cls(tau_r=tau_r, omega=omega, frequency_offset=-delta / 2,
                    time_offset=+delta_tau / 2, sign=+1)
        second = cls(tau_r=tau_r, omega=omega, frequency_offset=+delta / 2,
                     time_offset=-delta_tau / 2, sign=-1)
        return first, second


@dataclass(frozen=True)
class PairSpec:
    """Parameters of one interfering photon pair (or pair ensemble).

    tau_r : shared radiative lifetime (ns)
    delta_tau : arrival-time offset between the packets (ns)
    delta0 : mean frequency detuning omega_2 - omega_1 (rad/ns)
    sigma_g : combined jitter scale sqrt(sigma_1^2 + sigma_2^2) (rad/ns)
    """

    tau_r: float
    delta_tau: float = 0.0
    delta0: float = 0.0
    sigma_g: float = 0.0

    def __post_init__(self):
        if not self.tau_r > 0:
            raise ValueError(f"tau_r must be > 0, got {self.tau_r}")
        if self.sigma_g < 0:
            raise ValueError(f"sigma_g must be >= 0, got {self.sigma_g}")


def coherence_time(tau_r: float, tau_deph: float | None = None) -> float:
    """Coherence time from lifetime and optional pure dephasing:
    1/tau_c = 1/(2 tau_r) + 1/tau_deph, with tau_c = 2 tau_r when dephasing
    is absent (Fourier limit)."""
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    if tau_deph is None:
        return 2.0 * tau_r
    if not tau_deph > 0:
        raise ValueError(f"tau_deph must be > 0, got {tau_deph}")
    return 1.0 / (1.0 / (2.0 * tau_r) + 1.0 / tau_deph)


def dephasing_time(tau_r: float, tau_c: float) -> float:
    """Pure dephasing time that produces a given coherence time (inverse of
    coherence_time in its second argument)."""
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    if not 0 < tau_c < 2 * tau_r:
        raise ValueError(f"tau_c must lie in (0, 2*tau_r), got {tau_c} with tau_r={tau_r}")
    return 1.0 / (1.0 / tau_c - 1.0 / (2.0 * tau_r))


def _check_hom_domain(tau_r, tau_c):
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    if not 0 < tau_c:
        raise ValueError(f"tau_c must be > 0, got {tau_c}")
    if tau_c > 2 * tau_r * (1 + 1e-12):
        raise ValueError(
            f"tau_c = {tau_c} exceeds the Fourier limit 2*tau_r = {2 * tau_r} (unphysical coherence)")


def g2_hom_peak(tau, delta_tau, tau_r: float, tau_c: float):
    """Central-peak correlation density for two photons with identical
    frequency, arrival offset delta_tau, homogeneous dephasing only:

        1/4 e^{-|t-dt|/tau_r} + 1/4 e^{-|t+dt|/tau_r}
        - 1/2 e^{-(2/tau_c - 1/tau_r)|t| - |t-dt|/(2 tau_r) - |t+dt|/(2 tau_r)}

    Accepts scalars or arrays in tau / delta_tau.
    """
    _check_hom_domain(tau_r, tau_c)
    tau = np.asarray(tau, dtype=float)
    delta_tau = np.asarray(delta_tau, dtype=float)
    am = np.abs(tau - delta_tau)
    ap = np.abs(tau + delta_tau)
    out = (0.25 * np.exp(-am / tau_r)
           + 0.25 * np.exp(-ap / tau_r)
           - 0.5 * np.exp(-(2.0 / tau_c - 1.0 / tau_r) * np.abs(tau)
                          - am / (2 * tau_r) - ap / (2 * tau_r)))
    if out.ndim == 0:
        return float(out)
    return out


def central_peak_area_hom(tau_r: float, tau_c: float) -> float:
    """Normalized area of the central coincidence peak at delta_tau = 0:
    0.5 * (1 - tau_c / (2 tau_r)). Two fully distinguishable photons
    (tau_c -> 0) give 0.5; Fourier-limited photons give 0."""
    _check_hom_domain(tau_r, tau_c)
    return 0.5 * (1.0 - tau_c / (2.0 * tau_r))


def visibility_hom(tau_r: float, tau_c: float) -> float:
    """Two-photon interference visibility under homogeneous broadening:
    v = tau_c / (2 tau_r), in [0, 1]."""
    _check_hom_domain(tau_r, tau_c)
    return tau_c / (2.0 * tau_r)


def wavepacket_amplitude(packet: PhotonWavePacket, t):
    """Complex amplitude of the wavepacket at time(s) t: zero before the
    onset, then sqrt(1/tau_r) * exp(-(t - onset)/(2 tau_r)) with carrier
    exp(-i (omega + frequency_offset) t).

    The sqrt(1/tau_r) prefactor normalizes the time-integral of the squared
    magnitude to exactly 1 (a detection-probability density).
    """
    t = np.asarray(t, dtype=float)
    rel = t - packet.time_offset
    env = np.where(rel > 0, np.exp(-rel / (2.0 * packet.tau_r)), 0.0) / math.sqrt(packet.tau_r)
    out = env * np.exp(-1j * (packet.omega + packet.frequency_offset) * t)
    if out.ndim == 0:
        return complex(out)
    return out


def _g2_tl_raw(t0, tau, tau_r, delta_tau, delta):
    """|xi1(t0) xi2(t0+tau) - xi2(t0) xi1(t0+tau)|^2 / 4 with the two
    unit-norm one-sided exponential packets; broadcasts over all arguments."""
    p1, p2 = PhotonWavePacket.pair(tau_r, 0.0, delta_tau)
    t0 = np.asarray(t0, dtype=float)
    tau = np.asarray(tau, dtype=float)
    delta = np.asarray(delta, dtype=float)
    # The common carrier omega cancels; only the frequency difference enters.
    # Build amplitudes with explicit phase factors so delta can broadcast.
    def amp(pkt, t, f_off):
        rel = t - pkt.time_offset
        env = np.where(rel > 0, np.exp(-rel / (2.0 * tau_r)), 0.0) / math.sqrt(tau_r)
        return env * np.exp(-1j * f_off * t)

    x1_t0 = amp(p1, t0, -delta / 2)
    x2_t1 = amp(p2, t0 + tau, +delta / 2)
    x2_t0 = amp(p2, t0, +delta / 2)
    x1_t1 = amp(p1, t0 + tau, -delta / 2)
    return np.abs(x1_t0 * x2_t1 - x2_t0 * x1_t1) ** 2 / 4.0


def g2_tl(t0, tau, pair: PairSpec, delta: float):
    """Two-time correlation of two Fourier-limited packets with frequency
    difference delta and arrival offset pair.delta_tau (an antisymmetrized
    product of the two wavepackets, so it vanishes at tau = 0 and for
    identical packets)."""
    out = _g2_tl_raw(t0, tau, pair.tau_r, pair.delta_tau, delta)
    if np.ndim(out) == 0:
        return float(out)
    return out


def delta_distribution(delta, pair: PairSpec):
    """Probability density of the pair frequency difference:
    f(D) = exp(-(D - delta0)^2/(4 sigma_g^2)) / (2 sqrt(pi) sigma_g),
    a normalized Gaussian with variance 2 sigma_g^2."""
    if pair.sigma_g == 0:
        raise DegenerateJitterError(
            "sigma_g = 0 has no frequency spread; use the Fourier-limited path with delta = delta0")
    delta = np.asarray(delta, dtype=float)
    out = np.exp(-((delta - pair.delta0) ** 2) / (4.0 * pair.sigma_g ** 2)) / (2.0 * _SQRT_PI * pair.sigma_g)
    if out.ndim == 0:
        return float(out)
    return out


def p_inhom(tau, pair: PairSpec):
    """Opposite-port coincidence density at delay tau for jitter-averaged
    pairs (closed form):

        1/(8 tau_r) * ( e^{-|dt - tau|/tau_r} + e^{-|dt + tau|/tau_r}
                        - 2 cos(delta0 tau) e^{-(|dt|+|tau|)/tau_r}
                          e^{-sigma_g^2 tau^2} )

    For sigma_g = 0 this is the Fourier-limited fixed-detuning expression.
    """
    tau = np.asarray(tau, dtype=float)
    tr = pair.tau_r
    dt = pair.delta_tau
    out = (np.exp(-np.abs(dt - tau) / tr)
           + np.exp(-np.abs(dt + tau) / tr)
           - 2.0 * np.cos(pair.delta0 * tau)
           * np.exp(-(abs(dt) + np.abs(tau)) / tr)
           * np.exp(-(pair.sigma_g ** 2) * tau ** 2)) / (8.0 * tr)
    if out.ndim == 0:
        return float(out)
    return out


def _t0_support_bounds(tau, delta_tau):
    """Onset structure of the antisymmetrized kernel at fixed tau: below
    `lo` everything vanishes; between `lo` and `hi` only one product is
    alive (a kink in t0)."""
    o1, o2 = delta_tau / 2.0, -delta_tau / 2.0
    a = max(o1, o2 - tau)
    b = max(o2, o1 - tau)
    return min(a, b), max(a, b)


def p_inhom_quadrature(tau: float, pair: PairSpec, spec: QuadratureSpec | None = None) -> float:
    """Brute-force oracle for p_inhom: the frequency average is done by
    quadrature over the Gaussian difference distribution, and the time
    average by quadrature over the first detection time, both built directly
    on the wavepacket amplitudes."""
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9, max_subdivisions=4000)
    tau = float(tau)
    tr = pair.tau_r
    lo, hi = _t0_support_bounds(tau, pair.delta_tau)
    upper = hi + 30.0 * tr  # exp(-2*30) envelope, far below any tolerance

    if pair.sigma_g == 0.0:
        def integrand(t0):
            return _g2_tl_raw(t0, tau, tr, pair.delta_tau, pair.delta0)
    else:
        half_span = 9.0 * math.sqrt(2.0) * pair.sigma_g
        d_lo, d_hi = pair.delta0 - half_span, pair.delta0 + half_span
        f = lambda d: delta_distribution(d, pair)

        def inner(t0_scalar):
            g = lambda d: f(d) * _g2_tl_raw(t0_scalar, tau, tr, pair.delta_tau, d)
            return integrate_1d(g, d_lo, d_hi, spec)

        def integrand(t0):
            t0 = np.atleast_1d(t0)
            return np.array([inner(t) for t in t0])

    total = 0.0
    # Split at the kink where the second product switches on.
    if hi - lo > 1e-15:
        total += integrate_1d(integrand, lo, hi, spec)
    total += integrate_1d(integrand, hi, upper, spec)
    return total


def visibility_inhom_closed(tau_r: float, sigma_g: float) -> float:
    """Closed-form remote-pair visibility in the published convention:

        1 - (1/(tau_r sigma_g)) * (2 tau_r sigma_g - sqrt(pi) erfcx(x)),
        x = 1/(2 tau_r sigma_g).

    This expression algebraically equals 2*V - 1 where V is the directly
    normalized visibility (see visibility_inhom_direct); the quadrature
    normalization is the authoritative one where they disagree.
    """
    if not (tau_r > 0 and sigma_g > 0):
        raise ValueError(f"tau_r and sigma_g must be > 0, got {tau_r}, {sigma_g}")
    x = 1.0 / (2.0 * tau_r * sigma_g)
    return 1.0 - (1.0 / (tau_r * sigma_g)) * (2.0 * tau_r * sigma_g - _SQRT_PI * erfcx(x))


def visibility_inhom_direct(tau_r: float, sigma_g: float) -> float:
    """Directly normalized remote-pair visibility at zero detuning and zero
    arrival offset: V = sqrt(pi) * x * erfcx(x) with x = 1/(2 tau_r sigma_g).

    Equals 1 - 2 * integral of p_inhom over all delays, i.e. the convention
    in which fully distinguishable photons give V = 0 and g2 = 0.5.
    """
    if not (tau_r > 0 and sigma_g > 0):
        raise ValueError(f"tau_r and sigma_g must be > 0, got {tau_r}, {sigma_g}")
    x = 1.0 / (2.0 * tau_r * sigma_g)
    return _SQRT_PI * x * erfcx(x)


def visibility_inhom_quadrature(pair: PairSpec, spec: QuadratureSpec | None = None) -> float:
    """Remote-pair visibility 1 - 2 * integral of p_inhom(tau) d tau, with the
    side-peak normalization that puts fully distinguishable photons at 0.5.
    Supports nonzero delta0 for detuning sweeps; requires delta_tau = 0."""
    if pair.delta_tau != 0.0:
        raise ValueError("the standard visibility definition requires delta_tau = 0")
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=8000)
    tr = pair.tau_r
    span = 45.0 * tr
    f = lambda t: p_inhom(t, pair)
    # kink at tau = 0; oscillatory factor handled adaptively
    area = integrate_1d(f, -span, 0.0, spec) + integrate_1d(f, 0.0, span, spec)
    return 1.0 - 2.0 * area


def coherence_integral(tau_r: float, sigma: float) -> float:
    """Operational coherence time of a lifetime-limited line with Gaussian
    frequency jitter: integral of |g1|^2 with
    g1(t) = exp(-|t|/(2 tau_r)) * exp(-sigma^2 t^2 / 2). Closed form
    (sqrt(pi)/sigma) * erfcx(1/(2 sigma tau_r)); reduces to 2 tau_r as
    sigma -> 0."""
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return 2.0 * tau_r
    return (_SQRT_PI / sigma) * erfcx(1.0 / (2.0 * sigma * tau_r))


def _solve_scaled_overlap(target: float) -> float:
    """Solve sqrt(pi) * x * erfcx(x) = target for x > 0 (the left side is
    strictly increasing from 0 to 1). Bisection to ~1e-14 relative."""
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    g = lambda x: _SQRT_PI * x * erfcx(x) - target
    lo, hi = 1e-14, 1.0
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e16:
            raise RuntimeError("failed to bracket the overlap equation root")
    for _ in range(200):
        mid = math.sqrt(lo * hi)  # log-space bisection: x spans many decades
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * lo:
            break
    return math.sqrt(lo * hi)


def sigma_from_coherence(tau_r: float, tau_c_target: float) -> float:
    """Jitter scale sigma whose mixed lifetime+jitter line has operational
    coherence time (integral of |g1|^2) equal to tau_c_target. Monotone:
    smaller targets need more jitter; tau_c_target -> 2 tau_r gives
    sigma -> 0."""
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    if not 0 < tau_c_target < 2 * tau_r:
        raise ValueError(
            f"tau_c_target must lie in (0, 2*tau_r): got {tau_c_target} with tau_r={tau_r} "
            "(at or above the Fourier limit no jitter is needed)")
    # coherence_integral = 2*tau_r * sqrt(pi)*x*erfcx(x) at x = 1/(2 sigma tau_r)
    x = _solve_scaled_overlap(tau_c_target / (2.0 * tau_r))
    return 1.0 / (2.0 * x * tau_r)


def sigma_for_visibility(tau_r: float, visibility: float) -> float:
    """Jitter scale sigma_g at which the directly normalized remote-pair
    visibility equals the given value (inverse of visibility_inhom_direct)."""
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    x = _solve_scaled_overlap(visibility)
    return 1.0 / (2.0 * x * tau_r)


def michelson_contrast(dt, params: EmitterParams):
    """Michelson fringe contrast of a (possibly fine-structure split) line at
    path-difference delay dt >= 0:

        C(dt) = sqrt(a1^2 e^{-2 dt/tc1} + a2^2 e^{-2 dt/tc2}
                     + 2 a1 a2 e^{-dt/tc1 - dt/tc2} cos(fss*dt)) / (a1 + a2)

    With fss = 0 and equal coherence times this is a plain exponential decay.
    """
    dt = np.asarray(dt, dtype=float)
    if np.any(dt < 0):
        raise ValueError("dt must be >= 0")
    if params.fss_tau_c is not None:
        tc1, tc2 = params.fss_tau_c
    else:
        tc = coherence_time(params.tau_r, params.tau_deph)
        tc1 = tc2 = tc
    a1, a2 = params.fss_weights
    out = np.sqrt(a1 ** 2 * np.exp(-2.0 * dt / tc1)
                  + a2 ** 2 * np.exp(-2.0 * dt / tc2)
                  + 2.0 * a1 * a2 * np.exp(-dt / tc1 - dt / tc2) * np.cos(params.fss * dt)) / (a1 + a2)
    if out.ndim == 0:
        return float(out)
    return out


def visibility_from_g2(g2_indist: float) -> float:
    """Peak-area visibility v = 1 - 2 * g2_indist. Values of g2 above 0.5
    (classical excess) produce a warning; the value is still returned."""
    if g2_indist < 0:
        raise ValueError(f"g2_indist must be >= 0, got {g2_indist}")
    if g2_indist > 0.5:
        warnings.warn(
            f"g2_indist = {g2_indist} exceeds 0.5 (classical excess); visibility is negative",
            stacklevel=2)
    return 1.0 - 2.0 * g2_indist


def time_jitter_overlap_factor(tau_r: float, delta_tau: float, jitter_sigma: float) -> float:
    """Mean wavepacket-overlap suppression E[exp(-|X|/tau_r)] where
    X ~ Normal(delta_tau, 2*jitter_sigma^2) is the arrival-time offset with
    independent per-photon emission jitter. Stable closed form via erfcx."""
    if not tau_r > 0:
        raise ValueError(f"tau_r must be > 0, got {tau_r}")
    if jitter_sigma < 0:
        raise ValueError(f"jitter_sigma must be >= 0, got {jitter_sigma}")
    if jitter_sigma == 0.0:
        return math.exp(-abs(delta_tau) / tau_r)
    s = math.sqrt(2.0) * jitter_sigma
    mu = abs(delta_tau)  # the factor is even in the offset
    zp = s / (math.sqrt(2.0) * tau_r) + mu / (math.sqrt(2.0) * s)
    zm = s / (math.sqrt(2.0) * tau_r) - mu / (math.sqrt(2.0) * s)
    log_pref = -mu ** 2 / (2.0 * s ** 2)
    term_p = math.exp(log_pref) * erfcx(zp)
    if zm >= 0.0:
        term_m = math.exp(log_pref) * erfcx(zm)
    else:
        # exp(log_pref + zm^2) * erfc(zm); the combined exponent reduces to
        # s^2/(2 tau_r^2) - mu/tau_r, which is < 0 whenever zm < 0
        term_m = math.exp(s ** 2 / (2.0 * tau_r ** 2) - mu / tau_r) * erfc(zm)
    return 0.5 * (term_p + term_m)
