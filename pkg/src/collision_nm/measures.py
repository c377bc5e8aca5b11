"""Distinguishability, non-Markovianity, coherence and correlation measures."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .linalg import (
    DensityMatrix,
    LinalgError,
    RegisterLayout,
    hermitize,
    partial_trace,
    ptrace_array,
    tensor,
    trace_norm,
    von_neumann_entropy,
)

MI_SLACK = 1e-10


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    if rho1.layout != rho2.layout:
        raise LinalgError(
            f"trace distance needs equal layouts, got {rho1.layout.labels} and {rho2.layout.labels}"
        )
    return 0.5 * trace_norm(rho1.matrix - rho2.matrix)


def delta_D(D_series: Sequence[float], k: int) -> float:
    """Change of the trace distance over collision ``k``; negative means loss."""
    if not 1 <= k < len(D_series):
        raise IndexError(f"k must be in [1, {len(D_series) - 1}], got {k}")
    return float(D_series[k] - D_series[k - 1])


def blp_accumulate(D_series: Sequence[float]) -> tuple[float, np.ndarray]:
    """Sum of the positive increments of a trace-distance series.

    Returns ``(N, increments)`` where ``increments[i] = D[i+1] - D[i]``.
    """
    d = np.asarray(D_series, dtype=float)
    if d.size < 2:
        raise ValueError("need at least two trace-distance values")
    inc = np.diff(d)
    return float(np.sum(inc[inc > 0])), inc


def saturation_index(increments: np.ndarray, tol: float = 1e-8) -> int:
    """Collision after which every increment stays below ``tol``."""
    big = np.nonzero(np.asarray(increments) >= tol)[0]
    return int(big[-1] + 1) if big.size else 0


def is_saturated(increments: np.ndarray, window: int = 100, tol: float = 1e-8) -> bool:
    inc = np.asarray(increments)
    return inc.size >= window and bool(np.all(inc[-window:] < tol))


def l1_coherence(rho: DensityMatrix | np.ndarray) -> float:
    """Sum of moduli of off-diagonal entries in the computational basis."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.sum(np.abs(m)) - np.sum(np.abs(np.diag(m))))


def mutual_information_array(rho_se: np.ndarray) -> float:
    """Mutual information of a two-qubit state given as a 4x4 array."""
    rs = ptrace_array(rho_se, 2, [0])
    re = ptrace_array(rho_se, 2, [1])
    return von_neumann_entropy(rs) + von_neumann_entropy(re) - von_neumann_entropy(rho_se)


def mutual_information(rho_se: DensityMatrix, s_label: str, e_label: str) -> float:
    """Quantum mutual information between two labelled qubits, in nats."""
    pair = partial_trace(rho_se, [s_label, e_label])
    rs = partial_trace(pair, [s_label])
    re = partial_trace(pair, [e_label])
    return von_neumann_entropy(rs) + von_neumann_entropy(re) - von_neumann_entropy(pair)


def chi(rho_se: DensityMatrix, system: str = "S") -> np.ndarray:
    """Correlation matrix: the joint state minus the product of its system/rest marginals."""
    layout = rho_se.layout
    rest = [lab for lab in layout.labels if lab != system]
    if len(rest) == len(layout.labels):
        raise LinalgError(f"system label {system!r} not in layout {layout.labels}")
    if layout.labels[0] != system:
        raise LinalgError("chi expects the system as the leftmost factor")
    rs = partial_trace(rho_se, [system]).matrix
    re = partial_trace(rho_se, rest).matrix
    return rho_se.matrix - tensor(rs, re)


def _tilde(h: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
    return ptrace_array(h @ x - x @ h, n, [0])


def tilde_states(
    h_eff: np.ndarray,
    rho_s: DensityMatrix | np.ndarray,
    rho_e: DensityMatrix | np.ndarray,
    chi_m: Optional[np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """First-order system responses ``Tr_e[H, rho_s (x) rho_e]`` and ``Tr_e[H, chi]``.

    The system is the leftmost factor of ``h_eff``. Both outputs are
    anti-Hermitian and traceless.
    """
    rs = rho_s.matrix if isinstance(rho_s, DensityMatrix) else np.asarray(rho_s)
    re = rho_e.matrix if isinstance(rho_e, DensityMatrix) else np.asarray(rho_e)
    h_eff = np.asarray(h_eff, dtype=complex)
    if h_eff.shape != (rs.shape[0] * re.shape[0],) * 2:
        raise LinalgError("h_eff does not act on the joint system-environment space")
    n = int(round(np.log2(h_eff.shape[0])))
    t_rho = _tilde(h_eff, tensor(rs, re), n)
    if chi_m is None:
        t_chi = np.zeros((2, 2), dtype=complex)
    else:
        t_chi = _tilde(h_eff, np.asarray(chi_m), n)
    return t_rho, t_chi


def response_norm(m: np.ndarray, norm: str = "trace") -> float:
    """Norm of an anti-Hermitian response matrix (``i*m`` is Hermitian)."""
    w = np.linalg.eigvalsh(hermitize(1j * np.asarray(m)))
    if norm == "trace":
        return float(np.sum(np.abs(w)))
    if norm == "operator":
        return float(np.max(np.abs(w)))
    raise ValueError(f"norm must be 'trace' or 'operator', got {norm!r}")


def bound_from_states(
    h_eff: np.ndarray,
    states: Sequence[tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]],
    norm: str = "trace",
) -> tuple[float, float, float]:
    """``(B_env, B_corr, bound)`` from ``[(rho_s, rho_e, chi), ...]`` of two trajectories.

    B_env compares trajectory 1's system marginal paired with each trajectory's
    environment marginal. A ``None`` correlation matrix means an exact product
    state, for which B_corr is exactly zero.
    """
    (rs1, re1, c1), (_, re2, c2) = states
    t11, tc1 = tilde_states(h_eff, rs1, re1, c1)
    t12, tc2 = tilde_states(h_eff, rs1, re2, c2)
    b_env = response_norm(t11 - t12, norm)
    b_corr = 0.0 if (c1 is None and c2 is None) else response_norm(tc1 - tc2, norm)
    return b_env, b_corr, 0.5 * (b_env + b_corr)


def bound_terms(pair, mode: Optional[str] = None, config=None) -> tuple[float, float, float]:
    """Bound terms for the collision a trajectory pair is about to undergo.

    ``post_erasure`` evaluates them on the factorized state that actually enters
    the collision; ``pre_erasure`` on the correlated joint state left by the
    previous collision, before its system-environment correlations were erased.
    The generator is the full one-collision Hamiltonian on the window.
    """
    from .engine import step_generator

    config = config or pair.config
    mode = mode or config.bound_mode
    h = step_generator(config)
    states = []
    for st in (pair.state_1, pair.state_2):
        rs, re = st.rho_s, st.rho_env
        c = None
        if mode == "pre_erasure" and st.correlated is not None:
            joint = DensityMatrix(st.correlated, st.layout, validate=False)
            c = chi(joint)
            rs = partial_trace(joint, ["S"]).matrix
            re = partial_trace(joint, st.layout.labels[1:]).matrix
        elif mode not in ("pre_erasure", "post_erasure"):
            raise ValueError(f"unknown bound mode {mode!r}")
        states.append((rs, re, c))
    return bound_from_states(h, states, config.norm)


# --- maximization over initial pairs ---------------------------------------


def axis_pairs() -> list[tuple[str, str]]:
    """The six ordered antipodal pairs along the Bloch axes."""
    return [("+", "-"), ("-", "+"), ("+i", "-i"), ("-i", "+i"), ("0", "1"), ("1", "0")]


def bloch_pairs(n_theta: int, n_phi: int) -> list[tuple[str, str]]:
    """Antipodal pure-state pairs on a polar/azimuthal grid of the upper hemisphere."""
    pairs = []
    for theta in map(float, np.linspace(0, np.pi / 2, n_theta)):
        phis = [0.0] if theta == 0 else np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
        for phi in map(float, phis):
            a = f"bloch:{theta!r},{phi!r}"
            b = f"bloch:{np.pi - theta!r},{phi + np.pi!r}"
            pairs.append((a, b))
    return pairs


def blp_maximize(config, pair_grid: Optional[Iterable[tuple]] = None):
    """Largest accumulated backflow over a grid of initial pairs; returns ``(N_max, pair)``."""
    from .engine import run_distances

    grid = list(pair_grid) if pair_grid is not None else [("+", "-")]
    if not grid:
        raise ValueError("pair grid is empty")
    best_n, best_pair = -1.0, None
    for pair in grid:
        n, _ = blp_accumulate(run_distances(config.with_(initial_pair=tuple(pair))))
        if n > best_n:
            best_n, best_pair = n, tuple(pair)
    return best_n, best_pair
