"""Collision loop over a sliding window of environment qubits.

Each collision, for both system trajectories:

1. exchange coupling between the system and the window's leading qubit ``E0``;
2. environment coupling sourced at ``E0``;
3. system-environment correlations are erased by replacing the joint state with
   the product of its system and environment marginals (correlations inside the
   environment survive);
4. ``E0`` is discarded and a fresh qubit is appended at the trailing edge.

Because of step 3 the joint state is a product between collisions, so
:class:`WindowState` stores the two factors. :func:`brute_force_run` repeats
the protocol on a register that keeps every environment qubit and serves as an
independent check of the window bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from . import backend
from .config import ExperimentConfig, qubit_ket
from .linalg import (
    DensityMatrix,
    LinalgError,
    RegisterLayout,
    hermitize,
    partial_trace,
    ptrace_array,
    tensor,
)
from .measures import (
    bound_from_states,
    l1_coherence,
    mutual_information,
    mutual_information_array,
    response_norm,
    trace_distance,
)
from .model import (
    SYSTEM,
    Consecutive,
    embed_pair,
    env_hamiltonian,
    h_se_pair,
    u_ee,
    u_se,
    window_labels,
    window_unitaries,
)

MAX_BRUTE_QUBITS = 12


@dataclass(frozen=True)
class CollisionRecord:
    k: int
    D: float
    delta_D: float
    N_cum: float
    C_l1_traj1: float
    C_l1_traj2: float
    MI_traj1: float
    MI_traj2: float
    B_env: float
    B_corr: float
    bound: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


RECORD_FIELDS = tuple(f.name for f in fields(CollisionRecord))


@dataclass(frozen=True, eq=False)
class WindowState:
    """One trajectory between collisions.

    ``rho_s`` and ``rho_env`` are the factors of the joint state over the window
    ``[S, E_k, ..., E_{k+w-1}]``. ``correlated`` is the joint state the previous
    collision produced before erasure (with its used qubit already discarded),
    kept only when pre-erasure bound terms are requested.
    """

    rho_s: np.ndarray
    rho_env: np.ndarray
    k: int
    window: int
    correlated: Optional[np.ndarray] = None

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout((SYSTEM,) + tuple(f"E{self.k + i}" for i in range(self.window)))

    @property
    def joint(self) -> DensityMatrix:
        return DensityMatrix(tensor(self.rho_s, self.rho_env), self.layout, validate=False)

    @property
    def system(self) -> DensityMatrix:
        return DensityMatrix(self.rho_s, RegisterLayout((SYSTEM,)), validate=False)


@dataclass(frozen=True, eq=False)
class TrajectoryPair:
    state_1: WindowState
    state_2: WindowState
    config: ExperimentConfig
    records: tuple[CollisionRecord, ...] = field(default_factory=tuple)

    @property
    def k(self) -> int:
        return self.state_1.k

    def deviations(self) -> dict[str, float]:
        """Worst Hermiticity/trace/positivity deviation over both joint states."""
        out = {"hermiticity": 0.0, "trace": 0.0, "negativity": 0.0}
        for st in (self.state_1, self.state_2):
            for key, v in st.joint.deviations().items():
                out[key] = max(out[key], v)
        return out


# --- cached per-configuration operators ------------------------------------


@lru_cache(maxsize=64)
def _ops(coupling, fresh_key):
    u4, uee = window_unitaries(coupling)
    fresh = np.outer(np.array(fresh_key), np.array(fresh_key).conj())
    w = uee.shape[0].bit_length() - 1
    full = np.kron(np.eye(2), uee) @ np.kron(u4, np.eye(2 ** (w - 1)))
    return np.ascontiguousarray(u4), np.ascontiguousarray(uee), fresh, full


def _fresh_key(config):
    return tuple(complex(x) for x in qubit_ket(config.env_init))


def step_generator(config: ExperimentConfig, layout: Optional[RegisterLayout] = None,
                   source: str = "E0") -> np.ndarray:
    """Dimensionless one-collision Hamiltonian on ``layout`` (default: the window).

    ``g_se`` times the exchange on (S, source) plus the environment coupling
    sourced at ``source``.
    """
    if layout is None:
        layout = RegisterLayout(window_labels(config.window))
    h = config.g_se * embed_pair(h_se_pair(), layout, SYSTEM, source)
    h_env = env_hamiltonian(config.env_model, layout, source)
    if not isinstance(config.env_model, Consecutive):
        h_env = config.g_ee * h_env
    return h + h_env


@lru_cache(maxsize=1)
def _h_se4():
    return h_se_pair()


# --- windowed engine -------------------------------------------------------


def init(config: ExperimentConfig) -> TrajectoryPair:
    """Both trajectories as ``rho_s (x) |env_init...><env_init...|`` at k = 0."""
    fresh = np.outer(qubit_ket(config.env_init), qubit_ket(config.env_init).conj())
    env = np.ones((1, 1), dtype=complex)
    for _ in range(config.window):
        env = np.kron(env, fresh)
    states = []
    for ket in config.kets():
        rs = np.outer(ket, ket.conj())
        states.append(WindowState(rs, env.copy(), 0, config.window))
    return TrajectoryPair(states[0], states[1], config)


def _first_marginal(rho_env):
    h = rho_env.shape[0] // 2
    return np.einsum("axbx->ab", rho_env.reshape(2, h, 2, h))


def _bound(config, st1, st2):
    """Bound terms for the collision the two states are about to undergo.

    Only the exchange part of the generator survives the trace over the
    environment, so the responses are evaluated on (S, E0) alone.
    """
    h = config.g_se * _h_se4()
    mode = config.bound_mode
    pieces = []
    for st in (st1, st2):
        if mode == "pre_erasure" and st.correlated is not None:
            n = st.window + 1
            rho_se = ptrace_array(st.correlated, n, [0, 1])
            rs = ptrace_array(rho_se, 2, [0])
            re0 = ptrace_array(rho_se, 2, [1])
            pieces.append((rs, re0, rho_se - np.kron(rs, re0)))
        else:
            pieces.append((st.rho_s, _first_marginal(st.rho_env), None))
    return bound_from_states(h, pieces, config.norm)


def _advance(config, st1, st2, d_prev, n_prev, kern):
    u4, uee, fresh, full = _ops(config.coupling, _fresh_key(config))
    b_env, b_corr, bound = _bound(config, st1, st2)
    new, mi, coh = [], [], []
    pre = config.bound_mode == "pre_erasure"
    for st in (st1, st2):
        rho_se, rs, env = kern.collide_factors(st.rho_s, st.rho_env, u4, uee)
        joint = None
        if pre or config.mi_hook == "post_ee":
            joint = full @ np.kron(st.rho_s, st.rho_env) @ full.conj().T
            joint = hermitize(joint)
        if config.mi_hook == "pre_ee":
            mi.append(mutual_information_array(rho_se))
        else:
            mi.append(mutual_information_array(ptrace_array(joint, st.window + 1, [0, 1])))
        coh.append(l1_coherence(rs))
        correlated = None
        if pre:
            n = st.window + 1
            kept = ptrace_array(joint, n, [0] + list(range(2, n)))
            correlated = np.kron(kept, fresh)
        env = kern.shift_window(env, fresh)
        new.append(WindowState(rs, env, st.k + 1, st.window, correlated))
    d = float(kern.qubit_trace_distance(new[0].rho_s, new[1].rho_s))
    dd = d - d_prev
    n_cum = n_prev + (dd if dd > 0 else 0.0)
    rec = CollisionRecord(
        st1.k + 1, d, dd, n_cum, coh[0], coh[1], mi[0], mi[1], b_env, b_corr, bound
    )
    return new[0], new[1], rec


def _initial_record(config, pair, kern):
    st1, st2 = pair.state_1, pair.state_2
    d = float(kern.qubit_trace_distance(st1.rho_s, st2.rho_s))
    b_env, b_corr, bound = _bound(config, st1, st2)
    mis = []
    for st in (st1, st2):
        rho_se = np.kron(st.rho_s, _first_marginal(st.rho_env))
        mis.append(mutual_information_array(rho_se))
    return CollisionRecord(
        0, d, 0.0, 0.0, l1_coherence(st1.rho_s), l1_coherence(st2.rho_s),
        mis[0], mis[1], b_env, b_corr, bound,
    )


def collide_step(pair: TrajectoryPair, config: Optional[ExperimentConfig] = None,
                 kernels=None) -> TrajectoryPair:
    """Advance both trajectories by one collision and append its record."""
    config = config or pair.config
    kern = kernels or backend.kernels
    records = pair.records or (_initial_record(config, pair, kern),)
    last = records[-1]
    s1, s2, rec = _advance(config, pair.state_1, pair.state_2, last.D, last.N_cum, kern)
    return TrajectoryPair(s1, s2, config, records + (rec,))


def run(config: ExperimentConfig, *, kernels=None, return_pair: bool = False):
    """Full record list (``collisions + 1`` entries, the first being the initial state)."""
    if config.collisions < 1:
        raise ValueError("collisions must be >= 1")
    kern = kernels or backend.kernels
    pair = init(config)
    st1, st2 = pair.state_1, pair.state_2
    records = [_initial_record(config, pair, kern)]
    for _ in range(config.collisions):
        last = records[-1]
        st1, st2, rec = _advance(config, st1, st2, last.D, last.N_cum, kern)
        records.append(rec)
    if return_pair:
        return records, TrajectoryPair(st1, st2, config, tuple(records))
    return records


def run_distances(config: ExperimentConfig, *, kernels=None) -> np.ndarray:
    """Trace-distance series only; the fast path used by sweeps."""
    kern = kernels or backend.kernels
    u4, uee, fresh, _ = _ops(config.coupling, _fresh_key(config))
    pair = init(config)
    s1, s2 = pair.state_1, pair.state_2
    return kern.distance_series(
        np.ascontiguousarray(s1.rho_s), np.ascontiguousarray(s1.rho_env),
        np.ascontiguousarray(s2.rho_s), np.ascontiguousarray(s2.rho_env),
        u4, uee, fresh, int(config.collisions),
    )


# --- brute-force oracle ----------------------------------------------------


def brute_force_run(config: ExperimentConfig, total_env_qubits: int) -> list[CollisionRecord]:
    """Same protocol on a register holding every environment qubit, nothing discarded.

    Uses only the generic embedding, exponential and partial-trace routines,
    never the window kernels.
    """
    m = int(total_env_qubits)
    r = config.env_model.max_range
    if m < config.collisions + r:
        raise LinalgError(
            f"need at least collisions + max range = {config.collisions + r} environment qubits"
        )
    if m + 1 > MAX_BRUTE_QUBITS:
        raise LinalgError(f"brute force limited to {MAX_BRUTE_QUBITS} qubits, asked for {m + 1}")
    labels = (SYSTEM,) + tuple(f"E{i}" for i in range(m))
    layout = RegisterLayout(labels)
    env_labels = labels[1:]
    fresh = DensityMatrix.from_ket(qubit_ket(config.env_init), ["x"]).matrix
    env0 = np.ones((1, 1), dtype=complex)
    for _ in range(m):
        env0 = np.kron(env0, fresh)

    coupling = config.coupling
    joints = []
    for ket in config.kets():
        joints.append(DensityMatrix(tensor(np.outer(ket, ket.conj()), env0), layout))
    correlated = [None, None]

    def marginals(j):
        return partial_trace(j, [SYSTEM]).matrix, partial_trace(j, env_labels).matrix

    def bound(k):
        h = step_generator(config, layout, f"E{k}")
        states = []
        for j, c in zip(joints, correlated):
            if config.bound_mode == "pre_erasure" and c is not None:
                rs, re = marginals(c)
                states.append((rs, re, c.matrix - tensor(rs, re)))
            else:
                rs, re = marginals(j)
                states.append((rs, re, None))
        return bound_from_states(h, states, config.norm)

    def system_states():
        return [partial_trace(j, [SYSTEM]) for j in joints]

    s = system_states()
    b = bound(0)
    records = [
        CollisionRecord(
            0, trace_distance(*s), 0.0, 0.0, l1_coherence(s[0]), l1_coherence(s[1]),
            mutual_information(joints[0], SYSTEM, "E0"),
            mutual_information(joints[1], SYSTEM, "E0"), *b,
        )
    ]
    n_cum = 0.0
    for k in range(config.collisions):
        ek = f"E{k}"
        b = bound(k)
        use = u_se(coupling, layout, ek)
        uee = u_ee(coupling, layout, ek)
        mis = []
        for t, j in enumerate(joints):
            after_se = DensityMatrix(hermitize(use @ j.matrix @ use.conj().T), layout, validate=False)
            after_ee = DensityMatrix(
                hermitize(uee @ after_se.matrix @ uee.conj().T), layout, validate=False
            )
            hook = after_se if config.mi_hook == "pre_ee" else after_ee
            mis.append(mutual_information(hook, SYSTEM, ek))
            correlated[t] = after_ee
            rs, re = marginals(after_ee)
            rs, re = rs / np.trace(rs).real, re / np.trace(re).real
            joints[t] = DensityMatrix(tensor(rs, re), layout, validate=False)
        s = system_states()
        d = trace_distance(*s)
        dd = d - records[-1].D
        n_cum += max(dd, 0.0)
        records.append(
            CollisionRecord(k + 1, d, dd, n_cum, l1_coherence(s[0]), l1_coherence(s[1]),
                            mis[0], mis[1], *b)
        )
    return records


# --- summaries -------------------------------------------------------------


def records_array(records) -> np.ndarray:
    return np.array([r.as_tuple() for r in records], dtype=float)


def summarize(records) -> dict:
    """Saturated backflow, saturation index and whether the trailing rule is met."""
    from .measures import is_saturated, saturation_index

    d = np.array([r.D for r in records])
    inc = np.diff(d)
    return {
        "N": float(records[-1].N_cum),
        "saturation_index": saturation_index(inc),
        "saturated": is_saturated(inc),
        "collisions": len(records) - 1,
    }
