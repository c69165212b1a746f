import math

import numpy as np
import pytest

from homsim.analysis import g2_indist_double_pulse, peak_areas
from homsim.model import PairSpec, p_inhom, sigma_for_visibility, visibility_inhom_direct
from homsim.montecarlo import (
    CHUNK_PULSES,
    MODE_CONSECUTIVE,
    MODE_CROSS_POLARIZED,
    MODE_DOUBLE_PULSE,
    MODE_REMOTE,
    DetectorModel,
    InterferenceScenario,
    RngSpec,
    _simulate_block,
    analytic_g2_indist,
    analytic_visibility,
    hbt_analytic_g2,
    multi_photon_prob_for_g2,
    sample_pair_event,
    sample_pair_events,
    simulate_hbt_purity,
    simulate_histogram,
)

SIGMA_REMOTE = sigma_for_visibility(0.67, 0.364)


def remote_scenario(n_pulses=100_000, **kw):
    pair = kw.pop("pair", PairSpec(tau_r=0.67, sigma_g=SIGMA_REMOTE))
    return InterferenceScenario(mode=MODE_REMOTE, pair=pair, rep_period=12.2,
                                n_pulses=n_pulses, **kw)


class TestDeterminism:
    def test_identical_rng_identical_histogram(self):
        scn = remote_scenario(80_000)
        rng = RngSpec(seed=41)
        h1 = simulate_histogram(scn, rng, window_periods=4)
        h2 = simulate_histogram(scn, rng, window_periods=4)
        assert np.array_equal(h1.counts, h2.counts)
        assert h1.total_events == h2.total_events

    def test_parallel_equals_serial_bitwise(self):
        scn = remote_scenario(150_000)  # three pulse blocks
        rng = RngSpec(seed=42)
        h1 = simulate_histogram(scn, rng, window_periods=4, n_jobs=1)
        h4 = simulate_histogram(scn, rng, window_periods=4, n_jobs=4)
        assert np.array_equal(h1.counts, h4.counts)

    def test_block_partition_sums_to_full_run(self):
        # workers own whole pulse blocks; summing their integer counts must
        # reproduce the single-stream run exactly
        scn = remote_scenario(150_000)
        rng = RngSpec(seed=43)
        full = simulate_histogram(scn, rng, window_periods=4)
        halfspan = full.window_halfspan()
        nbins = full.counts.size
        acc = np.zeros(nbins, dtype=np.int64)
        n_left = scn.n_pulses
        for c in range((scn.n_pulses + CHUNK_PULSES - 1) // CHUNK_PULSES):
            n_p = min(CHUNK_PULSES, n_left)
            counts, _ = _simulate_block(scn, rng, c, c * CHUNK_PULSES, n_p,
                                        halfspan, full.bin_width, nbins)
            acc += counts
            n_left -= n_p
        assert np.array_equal(acc, full.counts)

    def test_different_stream_different_events(self):
        scn = remote_scenario(50_000)
        h0 = simulate_histogram(scn, RngSpec(seed=44, stream_id=0), window_periods=4)
        h1 = simulate_histogram(scn, RngSpec(seed=44, stream_id=1), window_periods=4)
        assert not np.array_equal(h0.counts, h1.counts)

    def test_rng_spec_validation(self):
        with pytest.raises(ValueError):
            RngSpec(seed=-1)
        with pytest.raises(ValueError):
            RngSpec(seed=1, stream_id=2 ** 32)


class TestPairEvents:
    def test_perfect_interference_never_splits(self):
        scn = remote_scenario(pair=PairSpec(tau_r=0.67))
        batch = sample_pair_events(scn, 20_000, RngSpec(seed=7))
        assert not batch.opposite_port.any()

    def test_cross_polarized_splits_half(self):
        scn = InterferenceScenario(mode=MODE_CROSS_POLARIZED, pair=PairSpec(tau_r=0.67),
                                   rep_period=12.5, n_pulses=1)
        n = 200_000
        batch = sample_pair_events(scn, n, RngSpec(seed=8))
        frac = batch.opposite_port.mean()
        assert abs(frac - 0.5) < 4 * math.sqrt(0.25 / n)

    def test_opposite_fraction_matches_analytic(self):
        scn = remote_scenario()
        n = 400_000
        batch = sample_pair_events(scn, n, RngSpec(seed=9))
        expected = 2.0 * analytic_g2_indist(scn) * 0.5 + 0.0  # = (1 - V)/2
        p = (1.0 - analytic_visibility(scn)) / 2.0
        assert expected == pytest.approx(p, rel=1e-12)
        assert abs(batch.opposite_port.mean() - p) < 4 * math.sqrt(p * (1 - p) / n)

    def test_opposite_ports_and_times_consistent(self):
        scn = remote_scenario()
        batch = sample_pair_events(scn, 5_000, RngSpec(seed=10))
        opp = batch.opposite_port
        assert np.all(batch.port_a[opp] != batch.port_b[opp])
        assert np.all(batch.port_a[~opp] == batch.port_b[~opp])
        assert np.allclose(batch.tau, batch.t_b - batch.t_a)

    def test_empirical_delay_density_matches_model(self):
        # opposite-port delays against p_inhom / integral(p_inhom), with
        # per-bin expectations from sub-sampled bin integrals
        scn = remote_scenario()
        n = 1_000_000
        batch = sample_pair_events(scn, n, RngSpec(seed=11))
        taus = batch.tau[batch.opposite_port]
        pair = scn.pair
        edges = np.linspace(-6 * pair.tau_r, 6 * pair.tau_r, 91)
        hist, _ = np.histogram(taus, bins=edges)
        mass = (1.0 - visibility_inhom_direct(pair.tau_r, pair.sigma_g)) / 2.0
        expected = np.empty(edges.size - 1)
        for i in range(edges.size - 1):
            xs = np.linspace(edges[i], edges[i + 1], 41)
            expected[i] = np.trapezoid(p_inhom(xs, pair), xs)
        expected = expected / mass * taus.size
        z = (hist - expected) / np.sqrt(np.maximum(expected, 1.0))
        assert np.abs(z).max() < 5.0
        assert (np.abs(z) <= 3.0).mean() >= 0.99

    def test_convergence_rate(self):
        # empirical opposite-port density error shrinks like 1/sqrt(N)
        scn = remote_scenario()
        pair = scn.pair
        edges = np.linspace(-4 * pair.tau_r, 4 * pair.tau_r, 41)
        centers = 0.5 * (edges[:-1] + edges[1:])
        mass = (1.0 - visibility_inhom_direct(pair.tau_r, pair.sigma_g)) / 2.0
        dens = p_inhom(centers, pair) / mass
        errs = []
        for n in (10_000, 100_000, 1_000_000):
            batch = sample_pair_events(scn, n, RngSpec(seed=12))
            taus = batch.tau[batch.opposite_port]
            hist, _ = np.histogram(taus, bins=edges, density=True)
            errs.append(float(np.max(np.abs(hist - dens))))
        assert errs[2] < errs[1] < errs[0]
        assert errs[0] / errs[2] > 4.0

    def test_single_event_api(self):
        scn = remote_scenario()
        ev = sample_pair_event(scn, RngSpec(seed=13))
        assert isinstance(ev.opposite_port, bool)
        assert ev.tau == pytest.approx(ev.times[1] - ev.times[0])
        assert ev.ports[0] in (0, 1) and ev.ports[1] in (0, 1)


class TestSimulateHistogram:
    def test_ideal_double_pulse_central_peak_absent(self):
        scn = InterferenceScenario(mode=MODE_DOUBLE_PULSE, pair=PairSpec(tau_r=0.2),
                                   rep_period=12.5, intra_delay=2.0, n_pulses=120_000)
        h = simulate_histogram(scn, RngSpec(seed=21))
        rep = g2_indist_double_pulse(h, 2.0, 0.6)
        assert rep.g2_indist < 0.01

    def test_cross_polarized_central_equals_satellites(self):
        scn = InterferenceScenario(mode=MODE_CROSS_POLARIZED, pair=PairSpec(tau_r=0.2),
                                   rep_period=12.5, intra_delay=2.0, n_pulses=200_000)
        h = simulate_histogram(scn, RngSpec(seed=22))
        rep = g2_indist_double_pulse(h, 2.0, 0.6)
        # per-satellite area equals the central area for distinguishable pairs
        for sat in rep.side_areas:
            assert rep.central_area == pytest.approx(sat, rel=4 / math.sqrt(min(sat, rep.central_area)))
        assert rep.g2_indist == pytest.approx(0.5, abs=0.01)

    def test_remote_g2_matches_analytic(self):
        scn = remote_scenario(300_000)
        h = simulate_histogram(scn, RngSpec(seed=23), window_periods=4)
        rep = peak_areas(h, 7 * 0.67, 6)
        ref = analytic_g2_indist(scn)
        assert abs(rep.g2_indist - ref) < 4 * rep.g2_indist_err

    def test_consecutive_ideal_and_neighbor_suppression(self):
        scn = InterferenceScenario(mode=MODE_CONSECUTIVE, pair=PairSpec(tau_r=0.67),
                                   rep_period=12.2, n_pulses=400_000)
        h = simulate_histogram(scn, RngSpec(seed=24), window_periods=5)
        far = peak_areas(h, 3.35, 6, first_side_peak=2)
        assert far.g2_indist == pytest.approx(0.0, abs=1e-4)
        near = peak_areas(h, 3.35, 2, first_side_peak=1)
        # +/-1 repetition peaks carry 3/4 of the far-peak coincidence rate
        ratio = near.side_average / far.side_average
        assert ratio == pytest.approx(0.75, abs=0.01)

    def test_detector_efficiency_thins_pairs(self):
        scn_full = remote_scenario(60_000)
        scn_half = remote_scenario(60_000, detector=DetectorModel(efficiency=0.5))
        h_full = simulate_histogram(scn_full, RngSpec(seed=25), window_periods=4)
        h_half = simulate_histogram(scn_half, RngSpec(seed=25), window_periods=4)
        ratio = h_half.total_events / h_full.total_events
        assert ratio == pytest.approx(0.25, abs=0.01)  # pairs scale with efficiency^2

    def test_timing_jitter_broadens_side_peaks(self):
        jit = 0.4
        scn_sharp = remote_scenario(60_000)
        scn_blur = remote_scenario(60_000, detector=DetectorModel(timing_jitter_sigma=jit))
        h_sharp = simulate_histogram(scn_sharp, RngSpec(seed=26), window_periods=4)
        h_blur = simulate_histogram(scn_blur, RngSpec(seed=26), window_periods=4)

        def peak_second_moment(h):
            c = h.bin_centers()
            sel = np.abs(c - 12.2) < 3.0
            w = h.counts[sel].astype(float)
            x = c[sel] - 12.2
            mu = np.average(x, weights=w)
            return np.average((x - mu) ** 2, weights=w)

        var_increase = peak_second_moment(h_blur) - peak_second_moment(h_sharp)
        assert var_increase == pytest.approx(2 * jit ** 2, rel=0.25)

    def test_dark_counts_raise_background_floor(self):
        scn = remote_scenario(60_000, detector=DetectorModel(dark_rate=0.02))
        h = simulate_histogram(scn, RngSpec(seed=27), window_periods=4)
        scn0 = remote_scenario(60_000)
        h0 = simulate_histogram(scn0, RngSpec(seed=27), window_periods=4)
        c = h.bin_centers()
        between = np.abs(c - 6.1) < 2.0  # region between coincidence peaks
        dark_floor = h.counts[between].sum()
        tail_floor = h0.counts[between].sum()  # peak tails only
        assert dark_floor > 10 * max(tail_floor, 1)

    def test_histogram_accounting(self):
        scn = remote_scenario(30_000)
        h = simulate_histogram(scn, RngSpec(seed=28))
        assert int(h.counts.sum()) == h.total_events
        assert h.counts.dtype == np.int64

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            InterferenceScenario(mode="bogus", pair=PairSpec(tau_r=1.0), rep_period=12.2)
        with pytest.raises(ValueError):
            InterferenceScenario(mode=MODE_REMOTE, pair=PairSpec(tau_r=1.0), rep_period=0.0)
        with pytest.raises(ValueError):
            InterferenceScenario(mode=MODE_REMOTE, pair=PairSpec(tau_r=1.0),
                                 rep_period=12.2, intra_delay=13.0)
        with pytest.raises(ValueError):
            InterferenceScenario(mode=MODE_REMOTE, pair=PairSpec(tau_r=1.0),
                                 rep_period=12.2, n_pulses=0)
        with pytest.raises(ValueError):
            DetectorModel(efficiency=0.0)


class TestHbtPurity:
    def test_pure_single_photon_source(self):
        scn = remote_scenario(200_000, pair=PairSpec(tau_r=0.67))
        h = simulate_hbt_purity(0.0, scn, RngSpec(seed=31), window_periods=4)
        rep = peak_areas(h, 3.35, 6)
        assert rep.central_area == 0

    def test_admixture_recovered(self):
        p = multi_photon_prob_for_g2(0.05)
        scn = remote_scenario(1_000_000, pair=PairSpec(tau_r=0.67))
        h = simulate_hbt_purity(p, scn, RngSpec(seed=32), window_periods=4)
        rep = peak_areas(h, 3.35, 6)
        assert abs(rep.g2_indist - 0.05) < 3 * rep.g2_indist_err

    def test_analytic_inverse_round_trip(self):
        for g in (0.003, 0.023, 0.05, 0.3):
            p = multi_photon_prob_for_g2(g)
            assert hbt_analytic_g2(p) == pytest.approx(g, rel=1e-12)
        assert multi_photon_prob_for_g2(0.0) == 0.0
        with pytest.raises(ValueError):
            multi_photon_prob_for_g2(0.6)


class TestAnalyticReferences:
    def test_cross_polarized_reference(self):
        scn = InterferenceScenario(mode=MODE_CROSS_POLARIZED, pair=PairSpec(tau_r=0.67),
                                   rep_period=12.5, n_pulses=1)
        assert analytic_visibility(scn) == 0.0
        assert analytic_g2_indist(scn) == 0.5

    def test_remote_reference_equals_quadrature(self):
        scn = remote_scenario(1)
        assert analytic_visibility(scn) == pytest.approx(0.364, abs=1e-8)

    def test_jitter_factorization(self):
        # emission jitter multiplies the frequency-ensemble visibility
        pair = PairSpec(tau_r=0.67, sigma_g=1.0)
        s0 = InterferenceScenario(mode=MODE_REMOTE, pair=pair, rep_period=12.2,
                                  n_pulses=1)
        s1 = InterferenceScenario(mode=MODE_REMOTE, pair=pair, rep_period=12.2,
                                  n_pulses=1, emission_jitter=0.3)
        from homsim.model import time_jitter_overlap_factor
        f = time_jitter_overlap_factor(0.67, 0.0, 0.3)
        assert analytic_visibility(s1) == pytest.approx(f * analytic_visibility(s0), rel=1e-12)

    def test_monte_carlo_agrees_with_jittered_reference(self):
        pair = PairSpec(tau_r=0.67, sigma_g=0.3)
        scn = InterferenceScenario(mode=MODE_CONSECUTIVE, pair=pair, rep_period=12.2,
                                   emission_jitter=0.2, n_pulses=400_000)
        h = simulate_histogram(scn, RngSpec(seed=33), window_periods=6)
        rep = peak_areas(h, 7 * 0.67, 6, first_side_peak=2)
        ref = analytic_g2_indist(scn)
        assert abs(rep.g2_indist - ref) < 4 * rep.g2_indist_err
