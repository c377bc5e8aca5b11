import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from collision_nm import ExperimentConfig, Separate, collide_step, init
from collision_nm.engine import _bound
from collision_nm.linalg import DensityMatrix, LinalgError, RegisterLayout
from collision_nm.measures import (
    axis_pairs,
    blp_accumulate,
    blp_maximize,
    bloch_pairs,
    bound_terms,
    chi,
    delta_D,
    is_saturated,
    l1_coherence,
    mutual_information,
    mutual_information_array,
    response_norm,
    saturation_index,
    tilde_states,
    trace_distance,
)
from collision_nm.model import embed_pair, h_heis_pair, h_se_pair

from conftest import random_density, random_hermitian


def dm(m, labels=("S",)):
    return DensityMatrix(m, labels)


class TestTraceDistance:
    def test_orthogonal_and_equal(self):
        plus = dm(0.5 * np.array([[1, 1], [1, 1]]))
        minus = dm(0.5 * np.array([[1, -1], [-1, 1]]))
        assert trace_distance(plus, minus) == pytest.approx(1.0)
        assert trace_distance(plus, plus) == 0.0

    def test_layout_mismatch(self):
        with pytest.raises(LinalgError):
            trace_distance(dm(np.eye(2) / 2), dm(np.eye(2) / 2, ("E",)))

    def test_pair_with_equal_populations_is_coherence(self):
        # for |+>/|-> evolved under a phase-covariant channel, D equals |rho_01| * 2 / 2
        c = 0.3 + 0.1j
        a = dm(np.array([[0.6, c], [np.conj(c), 0.4]]))
        b = dm(np.array([[0.6, -c], [-np.conj(c), 0.4]]))
        assert trace_distance(a, b) == pytest.approx(2 * abs(c))
        assert l1_coherence(a) == pytest.approx(2 * abs(c))

    @given(st.integers(0, 2**32 - 1))
    def test_metric_properties(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (dm(random_density(rng, 1)) for _ in range(3))
        dab = trace_distance(a, b)
        assert 0 <= dab <= 1 + 1e-12
        assert dab == pytest.approx(trace_distance(b, a))
        assert dab <= trace_distance(a, c) + trace_distance(c, b) + 1e-12

    @given(st.integers(0, 2**32 - 1))
    def test_contractive_under_partial_trace(self, seed):
        rng = np.random.default_rng(seed)
        a = DensityMatrix(random_density(rng, 2), ("S", "E"))
        b = DensityMatrix(random_density(rng, 2), ("S", "E"))
        from collision_nm.linalg import partial_trace

        assert trace_distance(partial_trace(a, ["S"]), partial_trace(b, ["S"])) <= trace_distance(a, b) + 1e-12


class TestBLP:
    def test_accumulate(self):
        n, inc = blp_accumulate([1.0, 0.5, 0.7, 0.6, 0.9])
        assert n == pytest.approx(0.5)
        assert_allclose(inc, [-0.5, 0.2, -0.1, 0.3])

    def test_monotone_series_is_zero(self):
        assert blp_accumulate(np.linspace(1, 0, 50))[0] == 0.0

    def test_delta_d(self):
        assert delta_D([1.0, 0.8], 1) == pytest.approx(-0.2)
        with pytest.raises(IndexError):
            delta_D([1.0, 0.8], 0)
        with pytest.raises(IndexError):
            delta_D([1.0, 0.8], 2)

    def test_too_short(self):
        with pytest.raises(ValueError):
            blp_accumulate([1.0])

    def test_saturation(self):
        inc = np.r_[np.full(10, 0.1), np.full(150, 1e-10)]
        assert saturation_index(inc) == 10
        assert is_saturated(inc)
        assert not is_saturated(inc[:105])
        assert not is_saturated(np.full(50, -1.0))

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=60))
    def test_nonnegative_and_bounded_by_variation(self, d):
        n, inc = blp_accumulate(d)
        assert n >= 0
        assert n <= np.sum(np.abs(inc)) + 1e-12


class TestCoherenceAndMI:
    def test_coherence(self):
        assert l1_coherence(np.eye(2) / 2) == 0.0
        assert l1_coherence(np.ones((4, 4)) / 4) == pytest.approx(3.0)

    def test_bell_state(self):
        psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        rho = DensityMatrix.from_ket(psi, ("S", "E"))
        assert mutual_information(rho, "S", "E") == pytest.approx(2 * np.log(2))
        assert mutual_information_array(rho.matrix) == pytest.approx(2 * np.log(2))

    @given(st.integers(0, 2**32 - 1))
    def test_product_has_zero_mi(self, seed):
        rng = np.random.default_rng(seed)
        m = np.kron(random_density(rng, 1), random_density(rng, 1))
        assert abs(mutual_information_array(m)) < 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_mi_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        assert mutual_information_array(random_density(rng, 2)) > -1e-10

    def test_mi_subsystem_selection(self, rng):
        psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        joint = DensityMatrix(np.kron(np.outer(psi, psi), random_density(rng, 1)), ("S", "E0", "E1"))
        assert mutual_information(joint, "S", "E0") == pytest.approx(2 * np.log(2))
        assert abs(mutual_information(joint, "S", "E1")) < 1e-10


class TestCorrelationsAndBound:
    def test_chi_product_zero(self, rng):
        m = np.kron(random_density(rng, 1), random_density(rng, 2))
        assert_allclose(chi(DensityMatrix(m, ("S", "E0", "E1"))), 0, atol=1e-14)

    def test_chi_needs_leading_system(self, rng):
        rho = DensityMatrix(random_density(rng, 2), ("E0", "S"))
        with pytest.raises(LinalgError):
            chi(rho)

    def test_env_only_generator_gives_zero(self, rng):
        lay = RegisterLayout(("S", "E0", "E1"))
        h = embed_pair(h_heis_pair(), lay, "E0", "E1")
        rs, re = random_density(rng, 1), random_density(rng, 2)
        c = random_density(rng, 3) - np.kron(rs, re)
        t_rho, t_chi = tilde_states(h, rs, re, c)
        assert_allclose(t_rho, 0, atol=1e-12)
        assert_allclose(t_chi, 0, atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_responses_antihermitian_traceless(self, seed):
        rng = np.random.default_rng(seed)
        h = random_hermitian(rng, 4)
        t_rho, _ = tilde_states(h, random_density(rng, 1), random_density(rng, 1), None)
        assert_allclose(t_rho, -t_rho.conj().T, atol=1e-12)
        assert abs(np.trace(t_rho)) < 1e-12

    def test_response_norm(self):
        m = -1j * np.diag([0.2, -0.5])
        assert response_norm(m, "trace") == pytest.approx(0.7)
        assert response_norm(m, "operator") == pytest.approx(0.5)
        with pytest.raises(ValueError):
            response_norm(m, "frobenius")

    def test_shape_check(self):
        with pytest.raises(LinalgError):
            tilde_states(np.eye(8), np.eye(2) / 2, np.eye(2) / 2, None)

    def test_hand_computed_response(self):
        # [XX+YY, |0><0| (x) |1><1|] traced over E, for a system in |0>
        rs = np.diag([1.0, 0.0])
        re = np.diag([0.0, 1.0])
        t, _ = tilde_states(h_se_pair(), rs, re, None)
        assert_allclose(t, 0, atol=1e-15)
        rs = 0.5 * np.ones((2, 2))
        t, _ = tilde_states(h_se_pair(), rs, np.diag([1.0, 0.0]), None)
        # only the |1><0| block couples; check against the direct commutator
        full = h_se_pair() @ np.kron(rs, np.diag([1.0, 0.0]))
        full = full - full.conj().T
        direct = full.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        assert_allclose(t, direct, atol=1e-15)

    @pytest.mark.parametrize("mode", ["post_erasure", "pre_erasure"])
    @pytest.mark.parametrize("model,g", [(Separate(1), np.pi / 2), (Separate(2), 0.9)])
    def test_fast_bound_matches_full_generator(self, mode, model, g):
        cfg = ExperimentConfig(g_ee=g, env_model=model, collisions=6, bound_mode=mode)
        pair = init(cfg)
        for _ in range(6):
            pair = collide_step(pair)
            fast = _bound(cfg, pair.state_1, pair.state_2)
            generic = bound_terms(pair)
            assert_allclose(fast, generic, atol=1e-13)


class TestPairGrids:
    def test_axis_pairs_antipodal(self):
        from collision_nm.config import qubit_ket

        for a, b in axis_pairs():
            assert abs(np.vdot(qubit_ket(a), qubit_ket(b))) < 1e-14

    def test_bloch_pairs_antipodal(self):
        from collision_nm.config import qubit_ket

        pairs = bloch_pairs(3, 4)
        assert len(pairs) == 1 + 2 * 4
        for a, b in pairs:
            assert abs(np.vdot(qubit_ket(a), qubit_ket(b))) < 1e-12

    def test_maximize_prefers_equatorial_pair(self):
        cfg = ExperimentConfig(g_ee=np.pi / 2, collisions=400)
        n, pair = blp_maximize(cfg, axis_pairs())
        assert pair in (("+", "-"), ("-", "+"), ("+i", "-i"), ("-i", "+i"))
        n_z, _ = blp_maximize(cfg, [("0", "1")])
        assert n > n_z

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            blp_maximize(ExperimentConfig(g_ee=0.0, collisions=2), [])
