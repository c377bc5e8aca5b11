import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from collision_nm import (
    Collective,
    Consecutive,
    ExperimentConfig,
    Separate,
    brute_force_run,
    collide_step,
    init,
    run,
    run_distances,
    summarize,
)
from collision_nm import backend
from collision_nm.engine import RECORD_FIELDS, records_array
from collision_nm.linalg import LinalgError

HALF_PI = np.pi / 2


@pytest.fixture(scope="module")
def nn_records():
    return run(ExperimentConfig(g_ee=HALF_PI, collisions=300))


class TestInit:
    def test_layout_and_product(self):
        pair = init(ExperimentConfig(g_ee=0.3, env_model=Separate(2)))
        st1 = pair.state_1
        assert st1.layout.labels == ("S", "E0", "E1", "E2")
        assert st1.rho_env.shape == (8, 8)
        assert st1.rho_env[0, 0] == 1
        assert_allclose(st1.rho_s, 0.5 * np.array([[1, 1], [1, 1]]))
        assert pair.deviations()["trace"] < 1e-14


class TestSingleCollision:
    def test_first_step_coherence(self):
        recs = run(ExperimentConfig(g_ee=HALF_PI, collisions=1))
        assert len(recs) == 2
        assert recs[0].k == 0 and recs[0].D == pytest.approx(1.0)
        assert recs[1].C_l1_traj1 == pytest.approx(np.cos(0.1), abs=1e-13)
        assert recs[1].D == pytest.approx(np.cos(0.1), abs=1e-13)

    def test_no_exchange_keeps_distance(self):
        recs = run(ExperimentConfig(g_ee=HALF_PI, g_se=0.0, collisions=50))
        assert_allclose([r.D for r in recs], 1.0, atol=1e-13)
        assert all(r.MI_traj1 < 1e-12 for r in recs)

    def test_markovian_decay_is_geometric(self):
        recs = run(ExperimentConfig(g_ee=0.0, collisions=40))
        assert_allclose([r.D for r in recs], np.cos(0.1) ** np.arange(41), atol=1e-12)

    def test_collide_step_matches_run(self):
        cfg = ExperimentConfig(g_ee=0.8, env_model=Collective(2), collisions=5, bound_mode="pre_erasure")
        pair = init(cfg)
        for _ in range(5):
            pair = collide_step(pair)
        assert_allclose(records_array(pair.records), records_array(run(cfg)), atol=1e-14)


class TestRecords:
    def test_fields(self, nn_records):
        assert RECORD_FIELDS == ("k", "D", "delta_D", "N_cum", "C_l1_traj1", "C_l1_traj2",
                                 "MI_traj1", "MI_traj2", "B_env", "B_corr", "bound")
        assert [r.k for r in nn_records] == list(range(301))

    def test_bookkeeping(self, nn_records):
        a = records_array(nn_records)
        assert_allclose(a[1:, 2], np.diff(a[:, 1]), atol=1e-15)
        assert_allclose(a[:, 3], np.r_[0, np.cumsum(np.clip(np.diff(a[:, 1]), 0, None))], atol=1e-12)
        assert_allclose(a[:, 10], 0.5 * (a[:, 8] + a[:, 9]))
        assert np.all(np.diff(a[:, 3]) >= 0)

    def test_ranges(self, nn_records):
        a = records_array(nn_records)
        assert np.all((a[:, 1] >= 0) & (a[:, 1] <= 1 + 1e-12))
        assert np.all(a[:, 6:8] >= -1e-12)
        assert np.all(a[:, 8:] >= 0)

    def test_determinism(self):
        cfg = ExperimentConfig(g_ee=0.9, env_model=Separate(3), collisions=120)
        assert records_array(run(cfg)).tobytes() == records_array(run(cfg)).tobytes()

    def test_fast_path_matches(self, nn_records):
        d = run_distances(ExperimentConfig(g_ee=HALF_PI, collisions=300))
        assert_allclose(d, [r.D for r in nn_records], atol=1e-14)

    def test_summary(self):
        s = summarize(run(ExperimentConfig(g_ee=HALF_PI, collisions=6000)))
        assert s["saturated"] and s["collisions"] == 6000
        assert s["saturation_index"] < 6000


class TestBruteForceOracle:
    @pytest.mark.parametrize("model,g", [
        (Separate(1), HALF_PI), (Separate(2), 0.7), (Collective(2), 0.6 * HALF_PI),
        (Consecutive(((1, 0.5), (2, 1.2))), 0.0),
    ])
    @pytest.mark.parametrize("mode,hook", [("post_erasure", "pre_ee"), ("pre_erasure", "post_ee")])
    def test_windowed_matches_full_register(self, model, g, mode, hook):
        cfg = ExperimentConfig(g_ee=g, env_model=model, collisions=4, bound_mode=mode, mi_hook=hook)
        a = records_array(run(cfg))
        b = records_array(brute_force_run(cfg, 4 + model.max_range))
        assert_allclose(a, b, atol=1e-10, rtol=0)

    def test_other_initial_states(self):
        cfg = ExperimentConfig(g_ee=1.1, env_model=Separate(1), collisions=4,
                               initial_pair=("bloch:0.4,1.0", "bloch:2.0,0.3"), env_init="+")
        assert_allclose(records_array(run(cfg)), records_array(brute_force_run(cfg, 6)), atol=1e-10)

    def test_register_too_small(self):
        with pytest.raises(LinalgError, match="at least"):
            brute_force_run(ExperimentConfig(g_ee=0.1, env_model=Separate(2), collisions=4), 5)

    def test_register_too_large(self):
        with pytest.raises(LinalgError, match="limited"):
            brute_force_run(ExperimentConfig(g_ee=0.1, collisions=20), 21)


class TestInvariants:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0, np.pi), st.sampled_from([Separate(1), Separate(2), Collective(2)]),
           st.floats(0.01, 0.3))
    def test_states_stay_physical(self, g_ee, model, g_se):
        cfg = ExperimentConfig(g_ee=g_ee, g_se=g_se, env_model=model, collisions=30)
        recs, pair = run(cfg, return_pair=True)
        dev = pair.deviations()
        assert max(dev.values()) < 1e-10
        n, d = recs[-1].N_cum, np.array([r.D for r in recs])
        assert n >= 0 and np.all(d <= 1 + 1e-12)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.0, np.pi))
    def test_population_relaxes_towards_environment(self, g_ee):
        # the system approaches |0><0|; its excited population never grows from 1/2
        recs, pair = run(ExperimentConfig(g_ee=g_ee, collisions=60), return_pair=True)
        assert pair.state_1.rho_s[1, 1].real <= 0.5 + 1e-12


class TestBackends:
    def test_numpy_and_numba_agree(self):
        nb = backend.numba_kernels()
        if nb is None:
            pytest.skip("numba unavailable")
        cfg = ExperimentConfig(g_ee=0.43 * HALF_PI, env_model=Collective(3), collisions=200,
                               bound_mode="pre_erasure")
        a = records_array(run(cfg, kernels=backend.NUMPY))
        b = records_array(run(cfg, kernels=nb))
        assert_allclose(a, b, atol=1e-12)
        assert_allclose(run_distances(cfg, kernels=backend.NUMPY), run_distances(cfg, kernels=nb),
                        atol=1e-12)

    def test_select(self, monkeypatch):
        assert backend.select("numpy") is backend.NUMPY
        monkeypatch.setenv("COLLISION_NM_BACKEND", "numpy")
        assert backend.select() is backend.NUMPY
        with pytest.raises(ValueError):
            backend.select("cuda")
