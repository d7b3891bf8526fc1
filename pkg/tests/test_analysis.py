"""Tests for peak refinement, twin analysis and the design search."""

import math

import pytest

from qpm.analysis import (
    DesignSettings,
    count_inter_twin_oscillations,
    design_search,
    evaluate_design,
    find_peaks,
    nearest_peak,
    refine_peak,
    twin_pair,
)
from qpm.lattice import StructureSpec
from qpm.spectral import twin_positions, y_of_x


# ---------------------------------------------------------------------------
# Peaks
# ---------------------------------------------------------------------------

class TestFindPeaks:
    def test_twins_near_nominal_positions(self, triplet_spec):
        left, right = twin_pair(triplet_spec, 0)
        lo, hi = twin_positions(triplet_spec)
        assert left.x == pytest.approx(lo, abs=2e-3)
        assert right.x == pytest.approx(hi, abs=2e-3)
        assert (left.twin_index, right.twin_index) == (0, 1)
        assert left.group_index == right.group_index == 0

    @pytest.mark.parametrize("m", [4, 8, 9, 12])
    def test_twin_pull_bounded_by_quarter_feature(self, m):
        spec = StructureSpec(l=10.25, n=22, m=m)
        left, right = twin_pair(spec, 0)
        lo, hi = twin_positions(spec)
        bound = math.pi / (4 * m * spec.n)
        assert abs(left.x - lo) <= bound
        assert abs(right.x - hi) <= bound

    def test_twin_sign_parity(self, triplet_spec, opposite_spec):
        a, b = twin_pair(triplet_spec, 0)
        assert a.height * b.height > 0
        a, b = twin_pair(opposite_spec, 0)
        assert a.height * b.height < 0

    def test_peaks_are_local_maxima(self, triplet_spec):
        for p in find_peaks(triplet_spec, 1.0, 2.0):
            h = abs(y_of_x(p.x, triplet_spec))
            assert abs(y_of_x(p.x - 1e-7, triplet_spec)) <= h
            assert abs(y_of_x(p.x + 1e-7, triplet_spec)) <= h
            assert p.height == pytest.approx(y_of_x(p.x, triplet_spec))

    def test_sorted_and_inside_window(self, opposite_spec):
        peaks = find_peaks(opposite_spec, 1.2, 1.9)
        xs = [p.x for p in peaks]
        assert xs == sorted(xs)
        assert all(1.2 < x < 1.9 for x in xs)

    def test_refinement_is_idempotent(self, triplet_spec):
        for p in find_peaks(triplet_spec, 1.4, 1.75):
            assert refine_peak(triplet_spec, p.x) == pytest.approx(p.x, abs=1e-10)

    def test_positions_independent_of_l(self, triplet_spec):
        unit = triplet_spec.model_copy(update={"l": 1.0})
        a = [p.x for p in find_peaks(triplet_spec, 1.3, 1.8)]
        b = [p.x for p in find_peaks(unit, 1.3, 1.8)]
        assert a == pytest.approx(b, abs=1e-12)
        p = find_peaks(triplet_spec, 1.3, 1.8)[0]
        assert p.dk == pytest.approx(2 * p.x / triplet_spec.l)

    def test_few_blocks_give_broad_twins(self, small_spec, opposite_spec):
        wide = twin_pair(small_spec, 0)[1].fwhm_x
        narrow = twin_pair(opposite_spec, 0)[1].fwhm_x
        assert wide > 5 * narrow

    def test_subsidiary_labels(self, opposite_spec):
        peaks = find_peaks(opposite_spec, 1.3, 1.8)
        twins = [p for p in peaks if p.is_twin]
        others = sorted((p for p in peaks if not p.is_twin), key=lambda p: p.twin_index)
        assert len(twins) == 2
        assert [p.twin_index for p in others] == list(range(2, 2 + len(others)))
        assert all(abs(a.height) >= abs(b.height) for a, b in zip(others, others[1:]))

    def test_empty_window(self, triplet_spec):
        with pytest.raises(ValueError):
            find_peaks(triplet_spec, 2.0, 1.0)

    def test_window_narrower_than_feature(self, triplet_spec):
        with pytest.raises(ValueError):
            find_peaks(triplet_spec, 1.5, 1.5001)


class TestTwinStructure:
    def test_oscillations_between_twins(self, opposite_spec, triplet_spec):
        assert count_inter_twin_oscillations(opposite_spec) == 6
        assert count_inter_twin_oscillations(triplet_spec) == 7

    def test_oscillations_grow_with_m(self, small_spec, opposite_spec):
        assert count_inter_twin_oscillations(opposite_spec) > count_inter_twin_oscillations(small_spec)

    def test_single_block_has_none(self):
        assert count_inter_twin_oscillations(StructureSpec(l=1.0, n=22, m=1)) == 0

    @pytest.mark.parametrize("m", range(1, 17))
    def test_oscillation_count_by_block_count(self, m):
        assert count_inter_twin_oscillations(StructureSpec(l=10.25, n=22, m=m)) == max(m - 2, 0)

    @pytest.mark.parametrize("m", range(1, 16))
    def test_oscillations_non_decreasing_in_m(self, m):
        fewer = count_inter_twin_oscillations(StructureSpec(l=10.25, n=22, m=m))
        more = count_inter_twin_oscillations(StructureSpec(l=10.25, n=22, m=m + 1))
        assert more >= fewer

    def test_no_twin_pair_without_reversal(self):
        with pytest.raises(ValueError):
            twin_pair(StructureSpec(l=1.0, n=22, m=1), 0)

    def test_two_domain_blocks(self):
        # N = M = 2: Y = sin(x)^2 sin(2x) / x, one lobe either side of pi/2
        spec = StructureSpec(l=1.0, n=2, m=2)
        left, right = twin_pair(spec, 0)
        assert left.x == pytest.approx(0.9015, abs=1e-3)
        assert right.x == pytest.approx(2.036, abs=2e-3)
        assert (left.twin_index, right.twin_index) == (0, 1)
        assert left.group_index == right.group_index == 0
        assert left.height > 0 > right.height
        assert count_inter_twin_oscillations(spec) == 0

    def test_labels_stay_inside_their_group(self):
        spec = StructureSpec(l=1.0, n=2, m=2)
        for p in find_peaks(spec, -1.5, 4.6):
            if p.is_twin:
                assert p.group_index == 0


# ---------------------------------------------------------------------------
# Design
# ---------------------------------------------------------------------------

class TestEvaluateDesign:
    def test_triplet_design(self, triplet_spec):
        result = evaluate_design(triplet_spec, 0.32, 0.87)
        first, second = result.matched_peaks
        assert result.residuals[0] / first.fwhm_x < 1
        assert abs(0.5 * triplet_spec.l * 0.87 - second.x) / second.x < 0.05

    def test_four_photon_design(self, four_photon_spec):
        x1 = 0.5 * four_photon_spec.l * 1.56
        x2 = 0.5 * four_photon_spec.l * -1.312
        assert nearest_peak(four_photon_spec, x1) == pytest.approx(x1, rel=0.01)
        assert nearest_peak(four_photon_spec, x2) == pytest.approx(x2, rel=0.02)

    def test_score_is_worst_normalized_residual(self, triplet_spec):
        r = evaluate_design(triplet_spec, 0.32, 0.87)
        expected = max(res / p.fwhm_x for res, p in zip(r.residuals, r.matched_peaks))
        assert r.score == pytest.approx(expected)

    def test_second_target_matches_nearest_scanned_maximum(self, opposite_spec):
        x2 = 0.5 * opposite_spec.l * 0.87
        scanned = find_peaks(opposite_spec, x2 - 0.1, x2 + 0.1)
        closest = min(scanned, key=lambda p: abs(p.x - x2))
        r = evaluate_design(opposite_spec, 0.32, 0.87)
        second = r.matched_peaks[1]
        assert second.x == pytest.approx(closest.x, abs=1e-9)
        assert second.x == pytest.approx(4.45973, abs=2e-4)
        assert second.height == pytest.approx(-0.00377, abs=5e-4)
        assert r.residuals[1] == pytest.approx(abs(x2 - closest.x), abs=1e-9)
        assert r.score == pytest.approx(0.0947, abs=5e-3)

    def test_height_floor_skips_weak_maxima(self, opposite_spec):
        loose = evaluate_design(opposite_spec, 0.32, 0.87)
        floor = 2.0 * abs(loose.matched_peaks[1].height)
        strict = evaluate_design(opposite_spec, 0.32, 0.87, DesignSettings(min_height=floor))
        assert abs(strict.matched_peaks[1].height) >= floor
        assert strict.residuals[1] > loose.residuals[1]
        assert strict.matched_peaks[0].x == pytest.approx(loose.matched_peaks[0].x, abs=1e-9)

    def test_nearest_peak_is_a_scanned_maximum(self, triplet_spec):
        x = nearest_peak(triplet_spec, 4.4615)
        assert any(p.x == pytest.approx(x, abs=1e-9) for p in find_peaks(triplet_spec, 4.3, 4.6))

    def test_height_floor_above_every_maximum(self, opposite_spec):
        with pytest.raises(ValueError, match="no maximum"):
            nearest_peak(opposite_spec, 1.5, min_height=0.99)

    def test_height_floor_bounds(self):
        with pytest.raises(ValueError):
            DesignSettings(min_height=1.0)
        with pytest.raises(ValueError):
            DesignSettings(min_height=-0.1)


class TestDesignSearch:
    def test_recovers_triplet_lattice(self):
        settings = DesignSettings(max_results=100)
        results = design_search(0.32, 0.87, (5.0, 15.0), (22, 22), (4, 16), settings)
        assert results
        assert any(r.spec.n == 22 and r.spec.l == pytest.approx(10.25, rel=0.02) for r in results)

    def test_recovers_four_photon_lattice(self):
        results = design_search(1.56, -1.312, (1.0, 5.0), (32, 32), (13, 13))
        assert any(r.spec.l == pytest.approx(2.2, rel=0.02) for r in results)

    def test_first_target_sits_on_a_peak(self):
        for r in design_search(0.32, 0.87, (5.0, 15.0), (20, 24), (8, 9)):
            x1 = 0.5 * r.spec.l * r.dk1
            assert r.residuals[0] < 1e-9
            assert r.matched_peaks[0].x == pytest.approx(x1, abs=1e-9)

    def test_equal_targets_score_zero(self):
        results = design_search(0.32, 0.32, (5.0, 15.0), (22, 22), (8, 8))
        assert results[0].score < 1e-6

    def test_ranked_and_capped(self):
        settings = DesignSettings(max_results=5)
        results = design_search(0.32, 0.87, (5.0, 15.0), (20, 24), (4, 10), settings)
        assert len(results) <= 5
        keys = [(r.score, r.spec.n, r.spec.m, r.spec.l) for r in results]
        assert keys == sorted(keys)

    def test_deterministic_across_workers(self):
        args = (0.32, 0.87, (5.0, 15.0), (20, 24), (8, 9))
        serial = design_search(*args)
        threaded = design_search(*args, DesignSettings(workers=3))
        assert [r.model_dump() for r in serial] == [r.model_dump() for r in threaded]

    def test_odd_n_skipped_by_default(self):
        results = design_search(0.32, 0.87, (5.0, 15.0), (21, 21), (8, 8))
        assert results == []
        odd = design_search(0.32, 0.87, (5.0, 15.0), (21, 21), (8, 8), DesignSettings(allow_odd=True))
        assert all(r.spec.n == 21 for r in odd)

    def test_nothing_fits(self):
        assert design_search(0.32, 0.87, (1.0, 1.1), (22, 22), (8, 8)) == []

    def test_height_floor_drops_weak_first_matches(self):
        settings = DesignSettings(max_results=1000, min_height=0.05)
        results = design_search(0.32, 0.87, (5.0, 15.0), (20, 24), (8, 9), settings)
        assert results
        for r in results:
            assert all(abs(p.height) >= 0.05 for p in r.matched_peaks)

    @pytest.mark.parametrize("kwargs", [
        {"dk1": 0.0},
        {"dk2": math.nan},
        {"l_range": (0.0, 5.0)},
        {"n_range": (10, 4)},
        {"m_range": (0, 4)},
    ])
    def test_invalid_inputs(self, kwargs):
        args = {"dk1": 0.32, "dk2": 0.87, "l_range": (5.0, 15.0), "n_range": (22, 22), "m_range": (8, 8)}
        args.update(kwargs)
        with pytest.raises(ValueError):
            design_search(**args)


class TestFullRangeSearch:
    """Default ranges with the cap lifted, so every candidate is ranked."""

    ALL = DesignSettings(max_results=100_000)

    def test_triplet_lattice_ranked_below_weak_maxima(self):
        everything = design_search(0.32, 0.87, (5.0, 15.0), (4, 64), (2, 16), self.ALL)
        hits = [i for i, r in enumerate(everything)
                if r.spec.n == 22 and r.spec.m == 9 and r.spec.l == pytest.approx(10.25, rel=0.02)]
        assert len(hits) == 1
        rank = hits[0]
        found = everything[rank]
        assert found.score == pytest.approx(evaluate_design(found.spec, 0.32, 0.87).score)
        assert found.residuals[0] < 1e-9
        # dk2 falls between two weak maxima, so lattices with a closer weak maximum outrank it
        assert everything[0].score < 0.05
        assert rank >= 20
        assert found.score > everything[19].score

    def test_four_photon_lattice_present(self):
        everything = design_search(1.56, -1.312, (1.0, 5.0), (4, 64), (2, 20), self.ALL)
        hits = [r for r in everything
                if r.spec.n == 32 and r.spec.m == 13 and r.spec.l == pytest.approx(2.2, rel=0.02)]
        assert hits
        assert all(everything[0].score <= r.score for r in hits)
        assert all(r.residuals[0] < 1e-9 for r in hits)
