"""Tests for the replication harness.

Covered here:
- model labels, canonicalization of explicit parameter triples, and config
  validation,
- seed derivation: determinism, sensitivity to every input, and
  injectivity across a replication grid,
- the simulation driver: cell completeness, the MSE = bias^2 + variance
  identity, reproducibility, worker-count independence, per-cell failure
  recording, and the reference line fields,
- the log-log rate fit on exact inputs,
- the Monte-Carlo check helpers against their closed-form targets
  (uniform cases are exact; model cases use pinned seeds with margins
  wide enough for the rep counts used here).
"""

import math

import numpy as np
import pytest

import pi0lab.simulate as simulate
from pi0lab.model import MixtureParams
from pi0lab.partitions import regular
from pi0lab.simulate import (
    DESK_GRID,
    ESTIMATORS,
    MODELS,
    PAPER_GRID,
    ModelSpec,
    SimConfig,
    derive_seed,
    histogram_ise_check,
    loglog_fit,
    lpo_variance_check,
    run_simulation,
)


class TestModelSpec:
    def test_built_in_labels(self):
        assert set(MODELS) == {"a1", "b1", "c1", "d1", "a2", "b2", "c2", "d2"}
        assert MODELS["a1"] == MixtureParams(0.6, 0.3, 3.0)
        assert all(MODELS[lbl].delta == 0.0 for lbl in ("a2", "b2", "c2", "d2"))
        assert all(MODELS[lbl].delta == 0.3 for lbl in ("a1", "b1", "c1", "d1"))

    def test_from_label(self):
        spec = ModelSpec.from_label("c1")
        assert spec.label == "c1"
        assert spec.params.shape_s == 1.4

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown model"):
            ModelSpec.from_label("z9")

    def test_from_params_canonicalizes(self):
        spec = ModelSpec.from_params(MixtureParams(0.8, 0.0, 3.0))
        assert spec.label == "b2"

    def test_from_params_custom(self):
        spec = ModelSpec.from_params(MixtureParams(0.55, 0.2, 2.0))
        assert spec.label == "custom"


class TestSimConfig:
    def _cfg(self, **kw):
        base = dict(model=ModelSpec.from_label("a1"), n_grid=(100, 200),
                    reps=2, base_seed=0, estimators=("hist",))
        base.update(kw)
        return SimConfig(**base)

    def test_valid(self):
        cfg = self._cfg()
        assert cfg.n_grid == (100, 200)

    def test_grids(self):
        assert DESK_GRID == (1000, 2000, 4000, 8000)
        assert PAPER_GRID == (5000, 7000, 9000, 10000, 12000, 14000, 15000)
        self._cfg(n_grid=PAPER_GRID)

    @pytest.mark.parametrize("bad", [
        dict(reps=0),
        dict(n_grid=()),
        dict(n_grid=(200, 100)),
        dict(n_grid=(100, 100)),
        dict(n_grid=(1, 100)),
        dict(estimators=("hist", "nope")),
        dict(estimators=()),
    ])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            self._cfg(**bad)


class TestDeriveSeed:
    def test_deterministic(self):
        a1 = MODELS["a1"]
        assert derive_seed(7, a1, 1000, 3) == derive_seed(7, a1, 1000, 3)

    def test_sensitive_to_every_input(self):
        a1, b1 = MODELS["a1"], MODELS["b1"]
        base = derive_seed(7, a1, 1000, 3)
        assert base != derive_seed(8, a1, 1000, 3)
        assert base != derive_seed(7, b1, 1000, 3)
        assert base != derive_seed(7, a1, 1001, 3)
        assert base != derive_seed(7, a1, 1000, 4)

    def test_injective_over_grid(self):
        a1 = MODELS["a1"]
        seeds = {derive_seed(0, a1, n, r)
                 for n in DESK_GRID for r in range(200)}
        assert len(seeds) == len(DESK_GRID) * 200

    def test_64_bit_range(self):
        s = derive_seed(2**64 - 1, MODELS["d2"], 15000, 99)
        assert 0 <= s < 2**64


class TestRunSimulation:
    def _small(self, estimators=("hist", "storey", "oracle"), **kw):
        base = dict(model=ModelSpec.from_label("a1"), n_grid=(200, 400),
                    reps=5, base_seed=0, estimators=estimators)
        base.update(kw)
        return SimConfig(**base)

    def test_cells_complete(self):
        cfg = self._small()
        rep = run_simulation(cfg)
        assert set(rep.cells) == {(t, n) for t in cfg.estimators for n in cfg.n_grid}
        for stats in rep.cells.values():
            assert stats.reps_used == 5
            assert stats.mse >= 0.0

    def test_mse_decomposition(self):
        rep = run_simulation(self._small())
        for stats in rep.cells.values():
            assert stats.mse == pytest.approx(
                stats.bias ** 2 + stats.variance, rel=1e-12, abs=1e-15)

    def test_deterministic(self):
        cfg = self._small()
        assert run_simulation(cfg).cells == run_simulation(cfg).cells

    def test_base_seed_changes_output(self):
        a = run_simulation(self._small())
        b = run_simulation(self._small(base_seed=1))
        assert a.cells != b.cells

    def test_worker_count_irrelevant(self):
        cfg = self._small()
        assert run_simulation(cfg, jobs=1).cells == run_simulation(cfg, jobs=2).cells

    def test_explicit_params_match_label(self):
        via_label = run_simulation(self._small())
        via_params = run_simulation(
            self._small(model=ModelSpec.from_params(MixtureParams(0.6, 0.3, 3.0))))
        assert via_label.cells == via_params.cells
        assert via_params.model_label == "a1"

    def test_reference_line_fields(self):
        rep = run_simulation(self._small())
        assert rep.ref_slope == -1.0
        assert rep.ref_intercept == pytest.approx(math.log(1.64))
        rep0 = run_simulation(self._small(model=ModelSpec.from_label("a2")))
        assert rep0.ref_intercept is None

    def test_single_point_grid_has_no_fit(self):
        rep = run_simulation(self._small(n_grid=(200,)))
        assert rep.fits == {tag: None for tag in ("hist", "storey", "oracle")}
        assert not rep.failures

    def test_fit_present_on_two_points(self):
        rep = run_simulation(self._small())
        for tag in ("hist", "storey", "oracle"):
            slope, intercept = rep.fits[tag]
            assert math.isfinite(slope) and math.isfinite(intercept)

    def test_estimator_failure_recorded_not_fatal(self, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("forced failure")
        monkeypatch.setattr(simulate, "theta_hat_min", boom)
        rep = run_simulation(self._small(estimators=("hist", "storey")))
        assert len(rep.failures) == 10                     # 2 sizes x 5 reps
        tag, n, r, msg = rep.failures[0]
        assert tag == "hist" and "forced failure" in msg
        for n in (200, 400):
            assert math.isnan(rep.cells[("hist", n)].mse)
            assert rep.cells[("hist", n)].reps_used == 0
            assert rep.cells[("storey", n)].reps_used == 5  # unaffected
        assert rep.fits["hist"] is None

    def test_all_estimator_tags_run(self):
        cfg = self._small(estimators=ESTIMATORS, n_grid=(300,), reps=2)
        rep = run_simulation(cfg)
        assert not rep.failures
        assert all(rep.cells[(t, 300)].reps_used == 2 for t in ESTIMATORS)


class TestLoglogFit:
    def test_exact_line(self):
        pts = [(n, 5.0 / n) for n in (100, 1000, 10000)]
        slope, intercept = loglog_fit(pts)
        assert slope == pytest.approx(-1.0, abs=1e-10)
        assert intercept == pytest.approx(math.log(5.0), abs=1e-10)

    def test_constant(self):
        slope, _ = loglog_fit([(100, 0.25), (1000, 0.25), (5000, 0.25)])
        assert slope == pytest.approx(0.0, abs=1e-10)

    def test_two_points(self):
        slope, _ = loglog_fit([(10, 1.0), (100, 0.1)])
        assert slope == pytest.approx(-1.0, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            loglog_fit([(100, 0.1)])
        with pytest.raises(ValueError):
            loglog_fit([(100, 0.1), (200, 0.0)])
        with pytest.raises(ValueError):
            loglog_fit([(100, 0.1), (200, -0.5)])


class TestHistogramIseCheck:
    def test_uniform_exact_value(self):
        # s11 = 4, s21 = 1, so the exact mean ISE is 3/100
        chk = histogram_ise_check(regular(4), None, n=100, reps=50, seed=1)
        assert chk.exact == 0.03
        assert abs(chk.empirical - chk.exact) < 3.0 * chk.stderr

    def test_trivial_partition_identically_zero(self, a1):
        chk = histogram_ise_check(regular(1), a1, n=50, reps=10, seed=2)
        assert chk.empirical == 0.0 and chk.exact == 0.0 and chk.stderr == 0.0

    def test_model_agrees_with_closed_form(self, a1):
        chk = histogram_ise_check(regular(8), a1, n=1000, reps=300, seed=0)
        assert chk.exact == pytest.approx((8.0 - 1.2441865368596419) / 1000.0,
                                          rel=1e-12)
        assert abs(chk.empirical - chk.exact) < 3.0 * chk.stderr


class TestLpoVarianceCheck:
    def test_uniform_target_exactly_zero(self):
        chk = lpo_variance_check(regular(4), None, p=1, n=5000, reps=200, seed=0)
        assert chk.target == 0.0
        assert chk.empirical_var < 0.01

    def test_model_target_and_agreement(self, a1):
        # 400 reps: the sample variance of the scaled errors carries a
        # relative standard error near sqrt(2/reps) = 7%, so use 20%
        chk = lpo_variance_check(regular(4), a1, p=1, n=20000, reps=400, seed=0)
        assert chk.target == pytest.approx(1.0468395734633376, rel=1e-12)
        assert chk.empirical_var == pytest.approx(chk.target, rel=0.20)
