import math
import os
import unittest
from dataclasses import replace

import numpy as np

from median_risk.asymptotics import asy_mse, coefficients
from median_risk.distributions import make_gumbel, make_normal
from median_risk.errors import DomainError, IndexOutOfRange, NegativeRadius, NotReached, QuadratureFailure, WrongParity
from median_risk.exact_risk import (
    ContaminationConfig,
    contaminated_density,
    contamination_weights,
    exact_grid,
    exact_mse,
    exact_mse_central_point,
    midpoint_density_ideal,
    minimal_n_search,
    order_stat_cdf,
    order_stat_density,
    relative_error_at,
    relative_error_curve,
    worst_case_exact_mse,
)
from median_risk.quadrature import QuadratureSpec, integrate_1d, order_stat_window
from median_risk.results import Method, Order
from median_risk.variants import MedianVariant, Side


SLOW = os.environ.get("MEDIAN_RISK_SLOW") == "1"
EXPENSIVE = os.environ.get("MEDIAN_RISK_EXPENSIVE") == "1"


class DensityTests(unittest.TestCase):
    def setUp(self) -> None:
        self.dist = make_normal()

    def test_order_stat_density_of_middle_of_three(self) -> None:
        self.assertAlmostEqual(float(order_stat_density(self.dist, 3, 2, 0.0)), 1.5 * self.dist.f0, places=14)
        self.assertAlmostEqual(float(order_stat_density(self.dist, 3, 2, 0.0)), 0.5984, places=4)

    def test_order_stat_density_rejects_bad_index(self) -> None:
        with self.assertRaises(IndexOutOfRange):
            order_stat_density(self.dist, 3, 4, 0.0)

    def test_order_stat_cdf_of_median_at_zero(self) -> None:
        self.assertAlmostEqual(float(order_stat_cdf(self.dist, 11, 6, 0.0)), 0.5, places=14)

    def test_left_contamination_shifts_median_down(self) -> None:
        left = float(contaminated_density(self.dist, 5, 1, 1, -0.3))
        right_of_zero = float(contaminated_density(self.dist, 5, 1, 1, 0.3))
        self.assertGreater(left, right_of_zero)
        self.assertEqual(
            float(contaminated_density(self.dist, 5, 0, 1, 0.2)),
            float(order_stat_density(self.dist, 4, 3, 0.2)),
        )

    def test_contaminated_density_checks_arguments(self) -> None:
        with self.assertRaises(WrongParity):
            contaminated_density(self.dist, 6, 0, 1, 0.0)
        with self.assertRaises(IndexOutOfRange):
            contaminated_density(self.dist, 5, 2, 1, 0.0)
        with self.assertRaises(IndexOutOfRange):
            contaminated_density(self.dist, 5, 0, 3, 0.0)

    def test_midpoint_density_integrates_to_one(self) -> None:
        quad = QuadratureSpec(rel_tol=1e-9)
        total = integrate_1d(lambda t: midpoint_density_ideal(self.dist, 4, t, quad), -8.0, 8.0, spec=quad, what="mass")
        self.assertAlmostEqual(total, 1.0, delta=1e-7)

    def test_midpoint_density_second_moment_matches_exact_risk(self) -> None:
        quad = QuadratureSpec(rel_tol=1e-9)
        second = integrate_1d(
            lambda t: t * t * midpoint_density_ideal(self.dist, 4, t, quad), -8.0, 8.0, spec=quad, what="second moment"
        )
        exact = exact_mse(self.dist, ContaminationConfig(r=0.0), 4, MedianVariant.MIDPOINT).value
        self.assertAlmostEqual(4.0 * second, exact, delta=1e-6)

    def test_contaminated_density_integrates_to_one(self) -> None:
        for n, j, k in ((5, 1, 1), (11, 3, 5), (101, 10, 10)):
            with self.subTest(n=n, j=j, k=k):
                lo, hi = order_stat_window(self.dist, n - k, n // 2 + 1 - j, 1e-15)
                total = integrate_1d(
                    lambda t: float(contaminated_density(self.dist, n, j, k, t)),
                    lo,
                    hi,
                    spec=QuadratureSpec(),
                    what="mass",
                )
                self.assertAlmostEqual(total, 1.0, delta=1e-8)

    def test_midpoint_density_normalized_and_symmetric(self) -> None:
        quad = QuadratureSpec(rel_tol=1e-9)
        for n in (6, 10):
            with self.subTest(n=n):
                total = integrate_1d(
                    lambda t: midpoint_density_ideal(self.dist, n, t, quad), -8.0, 8.0, spec=quad, what="mass"
                )
                self.assertAlmostEqual(total, 1.0, delta=1e-7)
                for t in (0.1, 0.4, 1.0):
                    right = midpoint_density_ideal(self.dist, n, t, quad)
                    left = midpoint_density_ideal(self.dist, n, -t, quad)
                    self.assertAlmostEqual(left, right, delta=1e-8 * right)

    def test_midpoint_density_needs_even_n(self) -> None:
        with self.assertRaises(WrongParity):
            midpoint_density_ideal(self.dist, 5, 0.0)


class WeightTests(unittest.TestCase):
    def test_renormalized_weights_sum_to_one(self) -> None:
        weights = contamination_weights(5, ContaminationConfig(r=1.0))
        self.assertEqual(len(weights), 3)
        self.assertAlmostEqual(float(weights.sum()), 1.0, places=14)

    def test_raw_weights_miss_the_thinned_mass(self) -> None:
        weights = contamination_weights(5, ContaminationConfig(r=1.0, renormalize_weights=False))
        self.assertAlmostEqual(float(weights.sum()), 1.0 - 0.40176, places=4)

    def test_no_contamination_puts_all_weight_on_zero(self) -> None:
        np.testing.assert_array_equal(contamination_weights(7, ContaminationConfig(r=0.0)), [1.0, 0.0, 0.0, 0.0])

    def test_rejects_bad_radius(self) -> None:
        with self.assertRaises(NegativeRadius):
            ContaminationConfig(r=-1.0)
        with self.assertRaises(DomainError):
            contamination_weights(4, ContaminationConfig(r=2.0))


class IdealModelRiskTests(unittest.TestCase):
    """n*MSE at r = 0 for the normal model, rounded to four decimals."""

    REFERENCE = {
        MedianVariant.ODD_MEDIAN: {5: 1.4341, 11: 1.5088, 101: 1.5641},
        MedianVariant.LOWER_QUANTILE: {6: 1.7210, 10: 1.6610, 100: 1.5798},
        MedianVariant.BIAS_CORRECTED: {6: 1.4776, 10: 1.5106, 100: 1.5641},
        MedianVariant.MIDPOINT: {6: 1.2884, 10: 1.3832, 100: 1.5488},
    }

    def setUp(self) -> None:
        self.dist = make_normal()
        self.config = ContaminationConfig(r=0.0)

    def test_reference_values(self) -> None:
        for variant, cases in self.REFERENCE.items():
            for n, expected in cases.items():
                with self.subTest(variant=variant.value, n=n):
                    result = exact_mse(self.dist, self.config, n, variant)
                    self.assertIs(result.method, Method.EXACT)
                    self.assertAlmostEqual(round(result.value, 4), expected, delta=5e-4)

    def test_upper_quantile_mirrors_lower(self) -> None:
        lower = exact_mse(self.dist, self.config, 10, MedianVariant.LOWER_QUANTILE).value
        upper = exact_mse(self.dist, self.config, 10, MedianVariant.UPPER_QUANTILE).value
        self.assertAlmostEqual(lower, upper, delta=1e-9)

    def test_randomized_averages_quantiles(self) -> None:
        rand = exact_mse(self.dist, self.config, 10, MedianVariant.RANDOMIZED).value
        lower = exact_mse(self.dist, self.config, 10, MedianVariant.LOWER_QUANTILE).value
        self.assertAlmostEqual(rand, lower, delta=1e-9)

    def test_third_order_errors(self) -> None:
        odd5 = exact_mse(self.dist, self.config, 5, MedianVariant.ODD_MEDIAN).value
        mid6 = exact_mse(self.dist, self.config, 6, MedianVariant.MIDPOINT).value
        asy_odd5 = asy_mse(self.dist, 0.0, 5, MedianVariant.ODD_MEDIAN, Order.ONE).value
        asy_mid6 = asy_mse(self.dist, 0.0, 6, MedianVariant.MIDPOINT, Order.ONE).value
        self.assertAlmostEqual(asy_odd5 - odd5, 1.790e-3, delta=2e-5)
        self.assertAlmostEqual(asy_mid6 - mid6, -9.182e-2, delta=5e-4)
        self.assertAlmostEqual((asy_mid6 - mid6) / mid6, -0.07126, delta=5e-4)

    def test_parity_is_enforced(self) -> None:
        with self.assertRaises(WrongParity):
            exact_mse(self.dist, self.config, 6, MedianVariant.ODD_MEDIAN)


class ContaminatedRiskTests(unittest.TestCase):
    def setUp(self) -> None:
        self.dist = make_normal()

    def test_reference_values(self) -> None:
        cases = [
            (5, 0.1, 1.671),
            (5, 0.5, 3.045),
            (5, 1.0, 4.509),
            (10, 1.0, 5.735),
            (30, 1.0, 5.255),
            (100, 1.0, 3.952),
            (100, 0.0, 1.549),
        ]
        for n, r, expected in cases:
            variant = MedianVariant.ODD_MEDIAN if n % 2 else MedianVariant.MIDPOINT
            with self.subTest(n=n, r=r):
                value = exact_mse(self.dist, ContaminationConfig(r=r), n, variant).value
                self.assertAlmostEqual(value, expected, delta=5e-3)

    def test_symmetric_model_has_equal_sides(self) -> None:
        left = exact_mse(self.dist, ContaminationConfig(r=0.5, side=Side.LEFT), 11, MedianVariant.ODD_MEDIAN).value
        right = exact_mse(self.dist, ContaminationConfig(r=0.5, side=Side.RIGHT), 11, MedianVariant.ODD_MEDIAN).value
        self.assertAlmostEqual(left, right, delta=1e-8)

    def test_renormalization_changes_small_n(self) -> None:
        conditioned = exact_mse(self.dist, ContaminationConfig(r=1.0), 5, MedianVariant.ODD_MEDIAN).value
        raw = exact_mse(self.dist, ContaminationConfig(r=1.0, renormalize_weights=False), 5, MedianVariant.ODD_MEDIAN).value
        self.assertLess(raw, conditioned)

    def test_far_contamination_point_matches_limit(self) -> None:
        limit = exact_mse(self.dist, ContaminationConfig(r=0.5), 11, MedianVariant.ODD_MEDIAN).value
        finite = exact_mse(
            self.dist, ContaminationConfig(r=0.5, contamination_point=100.0), 11, MedianVariant.ODD_MEDIAN
        ).value
        self.assertAlmostEqual(finite, limit, delta=1e-8 * limit)

    def test_contamination_at_median_is_harmless(self) -> None:
        limit = exact_mse(self.dist, ContaminationConfig(r=0.5), 11, MedianVariant.ODD_MEDIAN).value
        at_zero = exact_mse(
            self.dist, ContaminationConfig(r=0.5, contamination_point=0.0), 11, MedianVariant.ODD_MEDIAN
        ).value
        ideal = exact_mse(self.dist, ContaminationConfig(r=0.0), 11, MedianVariant.ODD_MEDIAN).value
        self.assertLess(at_zero, limit)
        self.assertLess(at_zero, ideal)

    def test_central_point_is_below_worst_case(self) -> None:
        config = ContaminationConfig(r=1.0)
        central = exact_mse_central_point(self.dist, config, 11).value
        worst = worst_case_exact_mse(self.dist, config, 11, MedianVariant.ODD_MEDIAN).value
        self.assertLess(central, worst)

    def test_midpoint_risk_under_contamination(self) -> None:
        for n in (6, 10, 30):
            ideal = exact_mse(self.dist, ContaminationConfig(r=0.0), n, MedianVariant.MIDPOINT).value
            for r in (0.1, 0.5, 1.0):
                with self.subTest(n=n, r=r):
                    value = exact_mse(self.dist, ContaminationConfig(r=r), n, MedianVariant.MIDPOINT).value
                    self.assertTrue(math.isfinite(value))
                    self.assertGreater(value, ideal)

    def test_risk_nondecreasing_in_radius(self) -> None:
        for n, variant in ((11, MedianVariant.ODD_MEDIAN), (10, MedianVariant.MIDPOINT), (10, MedianVariant.LOWER_QUANTILE)):
            with self.subTest(n=n, variant=variant.value):
                values = [
                    worst_case_exact_mse(self.dist, ContaminationConfig(r=r), n, variant).value
                    for r in (0.0, 0.1, 0.25, 0.5, 1.0)
                ]
                self.assertEqual(values, sorted(values))

    def test_randomized_is_average_of_quantiles(self) -> None:
        for n in (6, 10):
            for r in (0.0, 0.5):
                with self.subTest(n=n, r=r):
                    config = ContaminationConfig(r=r)
                    rand = exact_mse(self.dist, config, n, MedianVariant.RANDOMIZED).value
                    lower = exact_mse(self.dist, config, n, MedianVariant.LOWER_QUANTILE).value
                    upper = exact_mse(self.dist, config, n, MedianVariant.UPPER_QUANTILE).value
                    self.assertAlmostEqual(rand, 0.5 * (lower + upper), delta=1e-10 * rand)

    def test_one_point_at_the_center_lowers_the_risk(self) -> None:
        config = ContaminationConfig(r=0.5)
        for n in (11, 101):
            with self.subTest(n=n):
                central = exact_mse_central_point(self.dist, config, n).value
                worst = worst_case_exact_mse(self.dist, config, n, MedianVariant.ODD_MEDIAN).value
                self.assertGreater(worst - central, 1e-3)

    def test_midpoint_contamination_point_inside_window_rejected(self) -> None:
        with self.assertRaises(DomainError):
            exact_mse(self.dist, ContaminationConfig(r=0.5, contamination_point=1.0), 10, MedianVariant.MIDPOINT)

    def test_midpoint_far_contamination_point_maps_to_side(self) -> None:
        limit = exact_mse(self.dist, ContaminationConfig(r=0.5, side=Side.LEFT), 10, MedianVariant.MIDPOINT).value
        finite = exact_mse(
            self.dist, ContaminationConfig(r=0.5, contamination_point=-100.0), 10, MedianVariant.MIDPOINT
        ).value
        self.assertEqual(finite, limit)

    def test_bias_corrected_shift_changes_risk(self) -> None:
        config = ContaminationConfig(r=0.0)
        corrected = exact_mse(self.dist, config, 10, MedianVariant.BIAS_CORRECTED).value
        lower = exact_mse(self.dist, config, 10, MedianVariant.LOWER_QUANTILE).value
        self.assertLess(corrected, lower)

    def test_midpoint_quadrature_budget_exhausted(self) -> None:
        tight = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=1)
        with self.assertRaises(QuadratureFailure):
            exact_mse(self.dist, ContaminationConfig(r=0.0), 10, MedianVariant.MIDPOINT, tight)

    def test_grid_keeps_input_order(self) -> None:
        results = exact_grid(self.dist, ContaminationConfig(r=0.5), [9, 5, 7], MedianVariant.ODD_MEDIAN, threads=2)
        self.assertEqual([res.n for res in results], [9, 5, 7])
        self.assertEqual(results[1].value, exact_mse(self.dist, ContaminationConfig(r=0.5), 5, MedianVariant.ODD_MEDIAN).value)


class SkewedModelRiskTests(unittest.TestCase):
    def setUp(self) -> None:
        self.dist = make_gumbel()

    def test_worse_side_matches_expansion(self) -> None:
        config = ContaminationConfig(r=0.5)
        left = exact_mse(self.dist, replace(config, side=Side.LEFT), 51, MedianVariant.ODD_MEDIAN).value
        right = exact_mse(self.dist, replace(config, side=Side.RIGHT), 51, MedianVariant.ODD_MEDIAN).value
        expected = coefficients(self.dist, 0.5, MedianVariant.ODD_MEDIAN).worst_side
        self.assertIs(expected, Side.RIGHT)
        self.assertGreater(right, left)
        worst = worst_case_exact_mse(self.dist, config, 51, MedianVariant.ODD_MEDIAN).value
        self.assertEqual(worst, right)

    def test_third_order_expansion_is_close_at_moderate_n(self) -> None:
        for variant, n in ((MedianVariant.ODD_MEDIAN, 201), (MedianVariant.MIDPOINT, 200)):
            with self.subTest(variant=variant.value):
                exact = worst_case_exact_mse(self.dist, ContaminationConfig(r=0.25), n, variant).value
                asy = asy_mse(self.dist, 0.25, n, variant, Order.ONE).value
                self.assertLess(abs(asy - exact) / exact, 0.02)


class RelativeErrorTests(unittest.TestCase):
    def setUp(self) -> None:
        self.dist = make_normal()

    def test_second_order_error_odd_eleven(self) -> None:
        err = relative_error_at(self.dist, ContaminationConfig(r=0.0), 11, order=Order.HALF)
        self.assertAlmostEqual(err.absolute, 6.201e-2, delta=2e-4)
        self.assertAlmostEqual(err.relative, err.absolute / err.exact, places=15)

    def test_scaled_third_order_error_shrinks(self) -> None:
        config = ContaminationConfig(r=0.0)
        gaps = [n * abs(relative_error_at(self.dist, config, n).absolute) for n in (51, 101)]
        self.assertLess(gaps[1], gaps[0])

    def test_curve_alternates_variants_by_parity(self) -> None:
        curve = relative_error_curve(self.dist, 0.0, range(5, 9))
        self.assertEqual([n for n, _ in curve], [5, 6, 7, 8])
        self.assertTrue(all(math.isfinite(err) for _, err in curve))

    def test_curve_rejects_empty_range(self) -> None:
        with self.assertRaises(DomainError):
            relative_error_curve(self.dist, 0.0, [])

    def test_minimal_n_without_contamination(self) -> None:
        self.assertEqual(minimal_n_search(self.dist, 0.0, 0.05, Order.ONE, 40), 7)
        self.assertEqual(minimal_n_search(self.dist, 0.0, 0.01, Order.ONE, 40, threads=4), 17)

    def test_minimal_n_not_reached(self) -> None:
        with self.assertRaises(NotReached) as ctx:
            minimal_n_search(self.dist, 0.0, 1e-7, Order.ZERO, 12)
        self.assertEqual(ctx.exception.n_cap, 12)

    def test_minimal_n_rejects_bad_threshold(self) -> None:
        with self.assertRaises(DomainError):
            minimal_n_search(self.dist, 0.0, 1.5, Order.ONE, 40)


@unittest.skipUnless(SLOW, "set MEDIAN_RISK_SLOW=1 to run the minimal-n scans")
class MinimalNScanTests(unittest.TestCase):
    def test_third_order_rows(self) -> None:
        dist = make_normal()
        expected = {
            0.01: {0.0: 17, 0.1: 17, 0.25: 25, 0.5: 48, 1.0: 124},
            0.05: {0.0: 7, 0.1: 9, 0.25: 11, 0.5: 20, 1.0: 46},
        }
        for threshold, row in expected.items():
            for r, n0 in row.items():
                with self.subTest(threshold=threshold, r=r):
                    self.assertEqual(minimal_n_search(dist, r, threshold, Order.ONE, 300, threads=4), n0)


@unittest.skipUnless(EXPENSIVE, "set MEDIAN_RISK_EXPENSIVE=1 to run the first-order scans")
class FirstOrderScanTests(unittest.TestCase):
    def test_first_order_without_contamination(self) -> None:
        dist = make_normal()
        self.assertEqual(minimal_n_search(dist, 0.0, 0.05, Order.ZERO, 400, threads=4), 29)
        self.assertEqual(minimal_n_search(dist, 0.0, 0.01, Order.ZERO, 400, threads=4), 143)


if __name__ == "__main__":
    unittest.main()
