"""Tests for the Monte Carlo rate harness."""

import numpy as np
import pytest

from fvar.errors import ConfigError
from fvar.harness import SCENARIOS, run_concentration


class TestConcentration:
    def test_iid_slopes_near_root_n(self):
        rep = run_concentration(p=5, q0=3, ns=(250, 500, 1000, 2000),
                                reps=40, seed=0)
        for name, slope in rep.slopes.items():
            assert -0.6 <= slope <= -0.4, name
        assert rep.stability == 1.0

    def test_dependence_slows_every_sample_size(self):
        ns = (250, 500, 1000)
        iid = run_concentration(p=5, q0=3, ns=ns, reps=50, seed=1, ar=0.0)
        dep = run_concentration(p=5, q0=3, ns=ns, reps=50, seed=1, ar=0.5)
        assert dep.stability > iid.stability
        for name in iid.medians:
            assert np.all(np.asarray(dep.medians[name]) >
                          np.asarray(iid.medians[name])), name

    def test_dimension_growth_within_log_factor(self):
        n = 1000
        small = run_concentration(p=5, q0=3, ns=(n, 2 * n), reps=50, seed=2)
        large = run_concentration(p=20, q0=3, ns=(n, 2 * n), reps=50, seed=2)
        ratio = large.medians["sigma_max"][0] / small.medians["sigma_max"][0]
        assert ratio <= 1.5 * np.sqrt(np.log(20) / np.log(5))

    def test_median_errors_decrease_in_n(self):
        rep = run_concentration(p=4, q0=2, ns=(200, 800, 3200), reps=30, seed=3)
        for name in rep.medians:
            assert np.all(np.diff(rep.medians[name]) < 0), name

    def test_invalid_ar_rejected(self):
        with pytest.raises(ConfigError):
            run_concentration(ns=(100, 200), reps=5, ar=1.0)

    def test_single_n_rejected(self):
        with pytest.raises(ConfigError):
            run_concentration(ns=(100,), reps=5)


class TestScenarios:
    def test_source_presets_present(self):
        sizes = {(sc.n, sc.p) for sc in SCENARIOS.values()}
        assert {(100, 40), (200, 40), (200, 80), (200, 20)} <= sizes

    def test_desk_preset_shape(self):
        sc = SCENARIOS["desk"]
        assert (sc.n, sc.p, sc.grid_size, sc.basis_dim) == (200, 20, 50, 5)
        assert sc.measurement_noise == 0.5
