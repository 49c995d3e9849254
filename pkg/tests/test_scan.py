"""Window sweep, iterative detection, carriers, and consistency counts."""

import numpy as np
import pytest

from cnvscan import (
    ConfigError,
    EstimationMode,
    IntensityMatrix,
    InvalidWindow,
    Pedigree,
    PlantSpec,
    ScanConfig,
    StatisticKind,
    StatisticSpec,
    UnknownSample,
    call_carriers,
    consistency_report,
    detect,
    plant_signal,
    scan_max,
)
from conftest import ALL_KINDS, brute_force_scan, random_matrix

MIX01 = StatisticSpec(StatisticKind.MIXTURE, p0=0.1)
CHI = StatisticSpec(StatisticKind.SUM_CHISQ)


def config(spec=MIX01, **kw):
    defaults = dict(t0=1, t1=10, spec=spec)
    defaults.update(kw)
    return ScanConfig(**defaults)


class TestScanConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            config(t0=0)
        with pytest.raises(ConfigError):
            config(t0=5, t1=4)
        with pytest.raises(ConfigError):
            config(alpha=1.0)
        with pytest.raises(ConfigError):
            config(max_intervals=0)
        with pytest.raises(ConfigError):
            config(threads=0)


class TestScanMax:
    def test_spike_row_is_found(self):
        # single positive run at 10..12 in an otherwise flat noisy row
        rng = np.random.default_rng(0)
        row = rng.standard_normal(40) * 1e-3
        row[9:12] += 5.0
        data = IntensityMatrix(row[None, :])
        ws = scan_max(data, config(spec=CHI, t1=5))
        assert (ws.s, ws.tau) == (9, 3)

    @pytest.mark.parametrize("spec", ALL_KINDS)
    def test_matches_brute_force(self, spec):
        for seed in range(5):
            data = random_matrix(seed, n=4, t=30)
            cfg = config(spec=spec, t1=8)
            got = scan_max(data, cfg)
            want = brute_force_scan(data, cfg)
            assert (got.s, got.tau) == (want.s, want.tau)
            assert got.value == want.value

    def test_all_tied_scores_pick_first_window(self):
        # mixture score of a zero z is 0 for every window: full tie
        data = IntensityMatrix(np.tile([1.0, -1.0], 8)[None, :])
        ws = scan_max(data, config(t0=2, t1=4))
        # every even-aligned window sums to zero; ties resolve to the
        # smallest start and then the smallest length with that score
        want = brute_force_scan(data, config(t0=2, t1=4))
        assert (ws.s, ws.tau) == (want.s, want.tau)

    def test_row_permutation_invariance(self):
        data = random_matrix(7, n=6, t=50)
        cfg = config(t1=12)
        base = scan_max(data, cfg)
        perm = IntensityMatrix(data.values[::-1].copy())
        swapped = scan_max(perm, cfg)
        assert (swapped.s, swapped.tau) == (base.s, base.tau)
        assert swapped.value == pytest.approx(base.value, rel=1e-12)

    def test_row_shift_invariance_mle(self):
        data = random_matrix(8, n=5, t=60)
        cfg = config(t1=12)
        base = scan_max(data, cfg)
        shifted = data.values.copy()
        shifted[2] += 11.0
        moved = scan_max(IntensityMatrix(shifted), cfg)
        assert (moved.s, moved.tau) == (base.s, base.tau)
        assert moved.value == pytest.approx(base.value, rel=1e-9)

    def test_thread_count_does_not_change_result(self):
        data = random_matrix(9, n=8, t=120)
        for threads in (2, 3, 7):
            a = scan_max(data, config(t1=25, threads=1))
            b = scan_max(data, config(t1=25, threads=threads))
            assert (a.s, a.tau, a.value) == (b.s, b.tau, b.value)

    def test_t1_must_leave_outside_probes(self):
        data = random_matrix(1, n=2, t=20)
        with pytest.raises(InvalidWindow):
            scan_max(data, config(t1=20))

    def test_robust_estimation_mode(self):
        data = random_matrix(10, n=4, t=80)
        ws = scan_max(data, config(t1=10, estimation_mode=EstimationMode.ROBUST))
        want = brute_force_scan(data, config(t1=10, estimation_mode=EstimationMode.ROBUST))
        assert (ws.s, ws.tau) == (want.s, want.tau)


class TestDetect:
    def planted(self, seed=123):
        data, truth = plant_signal(
            None,
            PlantSpec(tau1=400, tau2=420, carrier_fraction=0.1, snr=3.0),
            seed=seed,
            shape=(50, 1000),
        )
        return data, truth

    def test_first_detection_matches_scan_max(self):
        data, _ = self.planted()
        cfg = config(t1=40, alpha=0.05)
        dets = detect(data, cfg)
        ws = scan_max(data, cfg)
        assert dets
        assert dets[0].score == ws.value
        assert (dets[0].tau1, dets[0].tau2) == (ws.s, ws.s + ws.tau)

    def test_planted_interval_recovered(self):
        # delta_min well above the in-window median noise (sd ~ 1.25/sqrt(20))
        # so the carrier set is recovered exactly, not just covered
        data, truth = self.planted()
        dets = detect(data, config(t1=40, alpha=0.05, carrier_delta_min=1.0))
        assert len(dets) == 1
        assert abs(dets[0].tau1 - truth.tau1) <= 2
        assert abs(dets[0].tau2 - truth.tau2) <= 2
        assert dets[0].p_value < 1e-6
        assert dets[0].carriers == truth.carriers

    def test_two_intervals_recovered_in_position_order(self):
        rng = np.random.default_rng(77)
        values = rng.standard_normal((40, 1500))
        values[:4, 300:320] += 3.0
        values[10:14, 900:930] += 2.5
        dets = detect(
            IntensityMatrix(values),
            config(t1=50, alpha=0.05, max_intervals=4, carrier_delta_min=1.0),
        )
        assert len(dets) == 2
        assert dets[0].tau1 < dets[1].tau1
        assert abs(dets[0].tau1 - 300) <= 2 and abs(dets[0].tau2 - 320) <= 2
        assert abs(dets[1].tau1 - 900) <= 2 and abs(dets[1].tau2 - 930) <= 2
        assert dets[0].carriers == frozenset(range(4))
        assert dets[1].carriers == frozenset(range(10, 14))

    def test_max_intervals_caps_output(self):
        data, _ = self.planted()
        dets = detect(data, config(t1=40, alpha=0.5, max_intervals=1))
        assert len(dets) == 1

    def test_null_data_usually_empty_at_low_alpha(self):
        hits = 0
        for seed in range(20):
            data = random_matrix(1000 + seed, n=20, t=200)
            if detect(data, config(t1=20, alpha=0.01)):
                hits += 1
        assert hits <= 3

    def test_detections_are_immutable_records(self):
        data, _ = self.planted()
        det = detect(data, config(t1=40))[0]
        with pytest.raises(AttributeError):
            det.score = 0.0


class TestCallCarriers:
    def test_gap_thresholding(self):
        values = np.zeros((2, 40))
        values[0, 10:20] = 0.5
        values[1, 10:20] = 0.2
        assert call_carriers(values, 10, 20, 0.3) == frozenset({0})
        assert call_carriers(values, 10, 20, 0.1) == frozenset({0, 1})

    def test_negative_shift_is_called(self):
        values = np.zeros((1, 30))
        values[0, 5:10] = -0.8
        assert call_carriers(values, 5, 10, 0.3) == frozenset({0})

    def test_nested_in_delta(self):
        rng = np.random.default_rng(4)
        values = rng.standard_normal((30, 200))
        values[:10, 50:70] += rng.uniform(0.1, 0.6, size=(10, 1))
        sets = [call_carriers(values, 50, 70, d) for d in (0.2, 0.3, 0.4)]
        assert sets[2] <= sets[1] <= sets[0]

    def test_interval_validation(self):
        values = np.zeros((2, 10))
        with pytest.raises(InvalidWindow):
            call_carriers(values, 0, 10, 0.3)
        with pytest.raises(InvalidWindow):
            call_carriers(values, 5, 5, 0.3)


class TestConsistency:
    def test_replicate_rule(self):
        dets = {"A": [(10, 20)], "B": []}
        ped = Pedigree(replicate_pairs=(("A", "B"),), trios=())
        rep = consistency_report(dets, ped)
        assert (rep.total, rep.inconsistent) == (1, 1)

    def test_replicate_match_both_ways(self):
        dets = {"A": [(10, 20)], "B": [(15, 25)]}
        ped = Pedigree(replicate_pairs=(("A", "B"),), trios=())
        rep = consistency_report(dets, ped)
        assert (rep.total, rep.inconsistent) == (2, 0)

    def test_child_matched_by_one_parent_is_consistent(self):
        # total counts every call among pedigree samples (C's and P1's);
        # one matching parent is enough for the child call
        dets = {"C": [(100, 110)], "P1": [(105, 112)], "P2": []}
        ped = Pedigree(replicate_pairs=(), trios=(("C", "P1", "P2"),))
        rep = consistency_report(dets, ped)
        assert (rep.total, rep.inconsistent) == (2, 0)

    def test_child_unmatched_in_both_parents(self):
        dets = {"C": [(100, 110)], "P1": [], "P2": [(300, 310)]}
        ped = Pedigree(replicate_pairs=(), trios=(("C", "P1", "P2"),))
        rep = consistency_report(dets, ped)
        assert (rep.total, rep.inconsistent) == (2, 1)

    def test_parent_only_calls_are_counted_not_flagged(self):
        # the trio rules constrain child calls; parent calls count toward
        # the total but are not checked against the child
        dets = {"C": [], "P1": [(5, 9)], "P2": []}
        ped = Pedigree(replicate_pairs=(), trios=(("C", "P1", "P2"),))
        rep = consistency_report(dets, ped)
        assert (rep.total, rep.inconsistent) == (1, 0)

    def test_empty_detections(self):
        ped = Pedigree(replicate_pairs=(("A", "B"),), trios=())
        rep = consistency_report({"A": [], "B": []}, ped)
        assert (rep.total, rep.inconsistent) == (0, 0)

    def test_reciprocal_overlap_rule(self):
        dets = {"A": [(0, 10)], "B": [(8, 18)]}
        ped = Pedigree(replicate_pairs=(("A", "B"),), trios=())
        assert consistency_report(dets, ped).inconsistent == 0
        assert consistency_report(dets, ped, overlap_fraction=0.5).inconsistent == 2

    def test_unknown_sample(self):
        ped = Pedigree(replicate_pairs=(("A", "missing"),), trios=())
        with pytest.raises(UnknownSample):
            consistency_report({"A": []}, ped)
