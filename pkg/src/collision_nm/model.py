"""Interaction Hamiltonians and one-collision unitaries.

Couplings are carried as dimensionless products of strength and interaction
time: ``g_se`` for the system-environment exchange and ``g_ee`` for the
environment-environment Heisenberg coupling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .linalg import LinalgError, RegisterLayout, expm_herm

SYSTEM = "S"

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


class ModelError(ValueError):
    pass


def pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis.lower()].copy()
    except (KeyError, AttributeError):
        raise ModelError(f"axis must be one of x, y, z; got {axis!r}") from None


def h_se_pair() -> np.ndarray:
    """XX + YY exchange on two qubits, without the coupling constant."""
    x, y = _PAULI["x"], _PAULI["y"]
    return np.kron(x, x) + np.kron(y, y)


def h_heis_pair() -> np.ndarray:
    """Isotropic Heisenberg pair coupling (XX + YY + ZZ) / 2."""
    x, y, z = _PAULI["x"], _PAULI["y"], _PAULI["z"]
    return (np.kron(x, x) + np.kron(y, y) + np.kron(z, z)) / 2


def closed_form_xxyy(g: float) -> np.ndarray:
    """Analytic ``exp(-i g (XX + YY))``: a rotation inside the {|01>, |10>} block."""
    c, s = np.cos(2 * g), np.sin(2 * g)
    u = np.eye(4, dtype=complex)
    u[1, 1] = u[2, 2] = c
    u[1, 2] = u[2, 1] = -1j * s
    return u


def embed_pair(h_pair: np.ndarray, layout: RegisterLayout, a: str, b: str) -> np.ndarray:
    """Act with the two-qubit ``h_pair`` on factors ``a`` (first) and ``b``, identity elsewhere."""
    if a == b:
        raise LinalgError("embed_pair needs two distinct labels")
    ia, ib = layout.index(a), layout.index(b)
    n = layout.n
    rest = [q for q in range(n) if q not in (ia, ib)]
    full = np.kron(np.asarray(h_pair, dtype=complex), np.eye(2 ** len(rest)))
    # axes of `full` are ordered (a, b, *rest); move them to layout order
    order = [ia, ib] + rest
    inv = np.argsort(order)
    t = full.reshape([2] * (2 * n))
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(layout.dim, layout.dim)


# --- environment coupling models -------------------------------------------


@dataclass(frozen=True)
class Separate:
    """Used environment qubit couples to exactly one later qubit, ``j`` sites ahead."""

    j: int

    def __post_init__(self):
        if not 1 <= int(self.j) <= 4:
            raise ModelError(f"separate range must be in 1..4, got {self.j}")

    @property
    def max_range(self) -> int:
        return self.j

    def __str__(self):
        return f"separate:{self.j}"


@dataclass(frozen=True)
class Collective:
    """Used qubit couples jointly to the next ``r`` qubits through one summed Hamiltonian."""

    r: int

    def __post_init__(self):
        if not 1 <= int(self.r) <= 4:
            raise ModelError(f"collective range must be in 1..4, got {self.r}")

    @property
    def ranges(self) -> tuple[int, ...]:
        return tuple(range(1, self.r + 1))

    @property
    def max_range(self) -> int:
        return self.r

    def __str__(self):
        return f"collective:{self.r}"


@dataclass(frozen=True)
class Consecutive:
    """Separate pair couplings applied one after another, each with its own strength.

    ``stages`` is a tuple of ``(j, g)`` with strictly increasing ``j``.
    """

    stages: tuple[tuple[int, float], ...]

    def __post_init__(self):
        stages = tuple((int(j), float(g)) for j, g in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ModelError("consecutive model needs at least one stage")
        js = [j for j, _ in stages]
        if any(j < 1 for j in js):
            raise ModelError(f"stage ranges must be >= 1, got {js}")
        if any(b <= a for a, b in zip(js, js[1:])):
            raise ModelError(f"stages must be ordered by increasing distance, got {js}")

    @property
    def max_range(self) -> int:
        return self.stages[-1][0]

    def __str__(self):
        return "consecutive:" + ",".join(f"{j}@{g!r}" for j, g in self.stages)


EnvModel = Union[Separate, Collective, Consecutive]


def parse_env_model(text: str) -> EnvModel:
    """Parse ``separate:J``, ``collective:R`` or ``consecutive:J@G,J@G,...``."""
    kind, _, arg = str(text).strip().partition(":")
    kind = kind.lower()
    try:
        if kind in ("separate", "sep"):
            return Separate(int(arg))
        if kind in ("collective", "col"):
            return Collective(int(arg))
        if kind in ("consecutive", "con"):
            from .config import parse_angle

            stages = []
            for item in arg.split(","):
                j, _, g = item.partition("@")
                stages.append((int(j), parse_angle(g)))
            return Consecutive(tuple(stages))
    except ValueError as exc:
        raise ModelError(f"bad environment model {text!r}: {exc}") from None
    raise ModelError(
        f"bad environment model {text!r}; expected separate:J, collective:R or consecutive:J@G,..."
    )


@dataclass(frozen=True)
class CouplingConfig:
    g_se: float
    g_ee: float
    env_model: EnvModel

    def __post_init__(self):
        if not (np.isfinite(self.g_se) and np.isfinite(self.g_ee)):
            raise ModelError("couplings must be finite")


def env_hamiltonian(model: EnvModel, layout: RegisterLayout, source: str) -> np.ndarray:
    """Sum of Heisenberg pair terms sourced at ``source`` (unit strength).

    For :class:`Consecutive` this is the plain sum of stage pairs weighted by the
    stage strengths; it is only used as a generator, never exponentiated.
    """
    i = layout.index(source)
    h = np.zeros((layout.dim, layout.dim), dtype=complex)
    if isinstance(model, Separate):
        terms = [(model.j, 1.0)]
    elif isinstance(model, Collective):
        terms = [(j, 1.0) for j in model.ranges]
    else:
        terms = list(model.stages)
    for j, w in terms:
        if i + j >= layout.n:
            raise LinalgError(
                f"partner {j} sites after {source!r} is missing from layout {layout.labels}"
            )
        h += w * embed_pair(h_heis_pair(), layout, source, layout.labels[i + j])
    return h


def u_se(config: CouplingConfig, layout: RegisterLayout, env_label: str) -> np.ndarray:
    return expm_herm(embed_pair(h_se_pair(), layout, SYSTEM, env_label), config.g_se)


def u_ee(config: CouplingConfig, layout: RegisterLayout, source: str) -> np.ndarray:
    """Environment-environment unitary sourced at ``source``.

    Collective models exponentiate the summed pair Hamiltonian in one go; the
    pair terms share ``source`` and do not commute, so this differs from a
    product of pair unitaries.
    """
    model = config.env_model
    if isinstance(model, Consecutive):
        i = layout.index(source)
        u = np.eye(layout.dim, dtype=complex)
        for j, g in model.stages:
            if i + j >= layout.n:
                raise LinalgError(f"partner {j} sites after {source!r} is missing")
            pair = embed_pair(h_heis_pair(), layout, source, layout.labels[i + j])
            u = expm_herm(pair, g) @ u
        return u
    return expm_herm(env_hamiltonian(model, layout, source), config.g_ee)


def window_labels(w: int) -> tuple[str, ...]:
    """Window layout labels: the system followed by ``w`` relative environment slots."""
    return (SYSTEM,) + tuple(f"E{i}" for i in range(w))


@lru_cache(maxsize=64)
def window_unitaries(config: CouplingConfig) -> tuple[np.ndarray, np.ndarray]:
    """Cached (U_se on S,E0 as 4x4, U_ee on the environment window) for one configuration.

    The window holds ``max_range + 1`` environment qubits; ``E0`` is the qubit
    currently colliding with the system.
    """
    w = config.env_model.max_range + 1
    pair = RegisterLayout((SYSTEM, "E0"))
    use = u_se(config, pair, "E0")
    env_layout = RegisterLayout(window_labels(w)[1:])
    uee = u_ee(config, env_layout, "E0")
    use.setflags(write=False)
    uee.setflags(write=False)
    return use, uee
