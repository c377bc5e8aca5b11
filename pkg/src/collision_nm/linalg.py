"""Dense linear algebra on small qubit registers.

Matrices are plain ``numpy`` complex arrays. A :class:`DensityMatrix` pairs
one with a :class:`RegisterLayout` so that partial traces can be requested by
subsystem label instead of by tensor-factor position.

Factor ordering is fixed: the leftmost label of a layout is the most
significant index block of the Kronecker product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
EIG_CLAMP = 1e-14


class LinalgError(ValueError):
    """Invalid input to a linear-algebra routine (bad label, non-Hermitian, ...)."""


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered subsystem labels; every subsystem is a qubit."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise LinalgError("layout needs at least one subsystem")
        if len(set(labels)) != len(labels):
            raise LinalgError(f"duplicate labels in layout {labels}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2**self.n

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LinalgError(f"unknown label {label!r}; layout is {self.labels}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(lab) for lab in labels]

    def restrict(self, keep: Iterable[str]) -> "RegisterLayout":
        """Layout induced on ``keep``, in the original order."""
        keep = set(keep)
        return RegisterLayout(tuple(lab for lab in self.labels if lab in keep))

    def __len__(self):
        return self.n


def check_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise LinalgError(f"matrix is not Hermitian (max |M - M^dag| = {dev:.3e})")


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace positive semidefinite matrix over a labelled qubit register.

    Construction validates Hermiticity, trace and positivity at tolerance
    ``tol``; pass ``validate=False`` for internally produced states that are
    known to be valid.
    """

    matrix: np.ndarray
    layout: RegisterLayout
    validate: bool = True
    tol: float = HERM_TOL

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if not isinstance(self.layout, RegisterLayout):
            object.__setattr__(self, "layout", RegisterLayout(tuple(self.layout)))
        if m.shape != (self.layout.dim, self.layout.dim):
            raise LinalgError(
                f"matrix shape {m.shape} does not match layout of {self.layout.n} qubits"
            )
        if self.validate:
            self.check(self.tol)

    def deviations(self) -> dict[str, float]:
        """Hermiticity, trace and positivity deviations of the matrix."""
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        trace = float(abs(np.trace(m) - 1.0))
        neg = float(max(0.0, -np.linalg.eigvalsh(hermitize(m))[0]))
        return {"hermiticity": herm, "trace": trace, "negativity": neg}

    def check(self, tol: float = HERM_TOL) -> None:
        m = self.matrix
        if not np.all(np.isfinite(m)):
            raise LinalgError("density matrix has non-finite entries")
        dev = self.deviations()
        if dev["hermiticity"] > tol:
            raise LinalgError(f"density matrix not Hermitian ({dev['hermiticity']:.3e})")
        if dev["trace"] > tol:
            raise LinalgError(f"density matrix trace off by {dev['trace']:.3e}")
        if dev["negativity"] > tol:
            raise LinalgError(f"density matrix has eigenvalue {-dev['negativity']:.3e}")

    @classmethod
    def from_ket(cls, ket: Sequence[complex], layout: RegisterLayout | Sequence[str]):
        psi = np.asarray(ket, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        if not isinstance(layout, RegisterLayout):
            layout = RegisterLayout(tuple(layout))
        return cls(np.outer(psi, psi.conj()), layout)

    def __matmul__(self, other: "DensityMatrix") -> "DensityMatrix":
        """Tensor product of two states; layouts are concatenated."""
        layout = RegisterLayout(self.layout.labels + other.layout.labels)
        return DensityMatrix(tensor(self.matrix, other.matrix), layout, validate=False)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, ``a`` as the leftmost factor."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def ptrace_array(m: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of an ``n``-qubit operator, keeping factor positions ``keep``.

    The kept factors come out in ascending position order.
    """
    keep = sorted(set(keep))
    if not keep:
        raise LinalgError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise LinalgError(f"factor positions {keep} out of range for {n} qubits")
    t = np.asarray(m).reshape([2] * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for q in range(n):
        if q not in keep:
            cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    d = 2 ** len(keep)
    return np.einsum("".join(rows) + "".join(cols) + "->" + out, t).reshape(d, d)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduced state on the labels in ``keep`` (induced layout order)."""
    keep = list(keep)
    if not keep:
        raise LinalgError("keep must be nonempty")
    idx = rho.layout.indices(keep)
    out = ptrace_array(rho.matrix, rho.layout.n, idx)
    return DensityMatrix(out, rho.layout.restrict(keep), validate=False)


def herm_eig(m: np.ndarray, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Ascending real eigenvalues and unitary eigenvector matrix of a Hermitian ``m``."""
    m = np.asarray(m, dtype=complex)
    check_hermitian(m, tol)
    return np.linalg.eigh(hermitize(m))


def expm_herm(h: np.ndarray, angle: float) -> np.ndarray:
    """``exp(-i * angle * h)`` for Hermitian ``h``, built from its eigenbasis."""
    w, v = herm_eig(h)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def trace_norm(m: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    w, _ = herm_eig(m)
    return float(np.sum(np.abs(w)))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    """Entropy in nats; eigenvalues below ``EIG_CLAMP`` count as zero."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.linalg.eigvalsh(hermitize(m))
    w = w[w > EIG_CLAMP]
    return float(-np.sum(w * np.log(w))) + 0.0
