"""Dense linear algebra on small labelled Hilbert spaces.

States, density matrices and operators carry a :class:`HilbertLabel` that
records the ordered tensor factors (degree of freedom and dimension).  All
values are immutable; arrays are stored read-only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache, reduce
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    NonHermitianObservable,
    NonQubitSpace,
    ZeroVector,
)

DOFS = ("polarization", "oam", "frequency")

ATOL_ALGEBRA = 1e-12
ATOL_HERMITIAN = 1e-10
ATOL_METRIC = 1e-9
MAX_DIM = 4096


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertLabel:
    """Ordered tensor factors ``((dof, dim), ...)``."""

    factors: tuple

    def __post_init__(self):
        factors = tuple((str(name), int(dim)) for name, dim in self.factors)
        for name, dim in factors:
            if name not in DOFS:
                raise ValueError(f"unknown degree of freedom {name!r}")
            if dim < 1:
                raise ValueError(f"factor dimension must be positive, got {dim}")
        object.__setattr__(self, "factors", factors)
        if self.dim > MAX_DIM:
            raise ValueError(f"total dimension {self.dim} exceeds {MAX_DIM}")

    @classmethod
    def of(cls, *dofs: str, dim: int = 2) -> "HilbertLabel":
        """Label with every factor of the same dimension, e.g. ``of("polarization", "polarization")``."""
        return cls(tuple((d, dim) for d in dofs))

    @cached_property
    def dims(self) -> tuple:
        return tuple(dim for _, dim in self.factors)

    @cached_property
    def dofs(self) -> tuple:
        return tuple(name for name, _ in self.factors)

    @cached_property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    def is_qubits(self) -> bool:
        return all(d == 2 for d in self.dims)

    def __add__(self, other: "HilbertLabel") -> "HilbertLabel":
        return HilbertLabel(self.factors + other.factors)

    def subset(self, idx: Sequence[int]) -> "HilbertLabel":
        return HilbertLabel(tuple(self.factors[i] for i in idx))


@dataclass(frozen=True, eq=False)
class StateVector:
    label: HilbertLabel
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.label.dim,):
            raise DimensionMismatch(
                f"{amps.size} amplitudes for a space of dimension {self.label.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        _check_dims(self.label, other.label)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.label.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    label: HilbertLabel
    entries: np.ndarray
    # trace < 1 is allowed when the flag is set (loss modelled as survival)
    subnormalized: bool = False

    def __post_init__(self):
        ent = _frozen(self.entries)
        d = self.label.dim
        if ent.shape != (d, d):
            raise DimensionMismatch(f"matrix shape {ent.shape} for dimension {d}")
        object.__setattr__(self, "entries", ent)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def is_physical(self, atol: float = ATOL_HERMITIAN) -> bool:
        m = self.entries
        if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
            return False
        tr = self.trace
        if self.subnormalized:
            if tr > 1 + atol:
                return False
        elif abs(tr - 1) > atol:
            return False
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
        return bool(evals.min() >= -atol)


@dataclass(frozen=True, eq=False)
class Operator:
    label: HilbertLabel
    entries: np.ndarray

    def __post_init__(self):
        ent = _frozen(self.entries)
        d = self.label.dim
        if ent.shape != (d, d):
            raise DimensionMismatch(f"operator shape {ent.shape} for dimension {d}")
        object.__setattr__(self, "entries", ent)

    def is_hermitian(self, atol: float = ATOL_HERMITIAN) -> bool:
        return bool(np.allclose(self.entries, self.entries.conj().T, atol=atol, rtol=0))

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_dims(self.label, other.label)
        return Operator(self.label, self.entries @ other.entries)


Tensorable = Union[StateVector, Operator, DensityMatrix]


def _check_dims(a: HilbertLabel, b: HilbertLabel) -> None:
    if a.dims != b.dims:
        raise DimensionMismatch(f"dimensions {a.dims} and {b.dims} differ")


def tensor(a: Tensorable, b: Tensorable) -> Tensorable:
    """Kronecker product; ``a``'s factors precede ``b``'s in the result label."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    label = a.label + b.label
    if isinstance(a, StateVector):
        return StateVector(label, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix):
        return DensityMatrix(label, np.kron(a.entries, b.entries),
                             subnormalized=a.subnormalized or b.subnormalized)
    return Operator(label, np.kron(a.entries, b.entries))


def tensor_all(*items: Tensorable) -> Tensorable:
    return reduce(tensor, items)


def normalize(v: StateVector) -> StateVector:
    n = v.norm
    if n <= 1e-15:
        raise ZeroVector("cannot normalize a zero vector")
    return StateVector(v.label, v.amplitudes / n)


def basis_state(label: HilbertLabel, digits: Sequence[int]) -> StateVector:
    """Computational basis ket ``|d0 d1 ...>`` over ``label``."""
    if len(digits) != label.n_factors:
        raise DimensionMismatch("one digit per factor is required")
    amps = np.zeros(label.dim, dtype=complex)
    amps[np.ravel_multi_index(tuple(digits), label.dims)] = 1.0
    return StateVector(label, amps)


def density_from_pure(psi: StateVector) -> DensityMatrix:
    a = psi.amplitudes
    return DensityMatrix(psi.label, np.outer(a, a.conj()))


def fidelity(rho: DensityMatrix, target: StateVector) -> float:
    """Pure-target fidelity ``<psi|rho|psi>``."""
    _check_dims(rho.label, target.label)
    a = target.amplitudes
    return float(np.real(np.vdot(a, rho.entries @ a)))


@lru_cache(maxsize=None)
def _sigma_y_power(n: int) -> np.ndarray:
    sy = np.array([[0, -1j], [1j, 0]])
    out = reduce(np.kron, [sy] * n, np.ones((1, 1), dtype=complex))
    out.setflags(write=False)
    return out


def _require_qubits(label: HilbertLabel) -> int:
    if not label.is_qubits():
        raise NonQubitSpace(f"factor dimensions {label.dims} are not all 2")
    return label.n_factors


def concurrence_pure(psi: StateVector, mode: str = "standard") -> float:
    """Spin-flip concurrence of a pure n-qubit state.

    ``mode="standard"`` gives ``|<psi*|Y^n|psi>|`` (1 for Bell states).
    ``mode="literal"`` gives ``|<psi|Y^n|psi>|**2`` with no conjugation,
    the squared form sometimes printed for this quantity; it coincides with
    the square of the standard value for real amplitudes.
    """
    n = _require_qubits(psi.label)
    a = psi.amplitudes
    flipped = _sigma_y_power(n) @ a
    if mode == "standard":
        return float(abs(a @ flipped))
    if mode == "literal":
        return float(abs(np.vdot(a, flipped)) ** 2)
    raise ValueError(f"unknown concurrence mode {mode!r}")


def concurrence_mixed(rho: DensityMatrix) -> float:
    """Spectral spin-flip concurrence.

    ``max(0, sqrt(l1) - sum_{i>1} sqrt(l_i))`` over the eigenvalues of
    ``rho Y^n rho* Y^n``.  Exactly the Wootters concurrence for two qubits;
    for more qubits the value is a model choice, not an entanglement monotone.

    The square roots are taken as singular values of ``W^T Y^n W`` with
    ``rho = W W^H`` on its numerical support, which avoids square roots of
    round-off sized eigenvalues.
    """
    n = _require_qubits(rho.label)
    p, v = np.linalg.eigh(rho.entries)
    keep = p > p.max() * len(p) * np.finfo(float).eps
    w = v[:, keep] * np.sqrt(p[keep])
    roots = np.linalg.svd(w.T @ _sigma_y_power(n) @ w, compute_uv=False)
    return float(max(0.0, roots[0] - roots[1:].sum()))


def expectation(rho: DensityMatrix, obs: Operator) -> float:
    _check_dims(rho.label, obs.label)
    if not obs.is_hermitian():
        raise NonHermitianObservable("observable is not Hermitian within 1e-10")
    return float(np.real(np.einsum("ij,ji->", rho.entries, obs.entries)))


_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
}


def pauli(axis: str, dof: str = "polarization") -> Operator:
    try:
        mat = _PAULI[axis.upper()]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None
    return Operator(HilbertLabel(((dof, 2),)), mat)


def apply_local(psi: StateVector, mat: np.ndarray, targets: Sequence[int]) -> StateVector:
    """Apply ``mat`` (acting on the listed factors, in order) to ``psi``."""
    dims = psi.label.dims
    targets = list(targets)
    sub = [dims[t] for t in targets]
    k = len(targets)
    mat = np.asarray(mat).reshape(sub + sub)
    t = psi.amplitudes.reshape(dims)
    out = np.tensordot(mat, t, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return StateVector(psi.label, out.reshape(-1))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the factors listed in ``keep`` (kept in the given order)."""
    dims = rho.label.dims
    n = len(dims)
    keep = list(keep)
    drop = [i for i in range(n) if i not in keep]
    t = rho.entries.reshape(dims + dims)
    # bring kept row axes, kept column axes, then traced pairs
    perm = keep + [n + i for i in keep] + drop + [n + i for i in drop]
    t = np.transpose(t, perm)
    dk = int(np.prod([dims[i] for i in keep], dtype=np.int64))
    dd = int(np.prod([dims[i] for i in drop], dtype=np.int64)) if drop else 1
    t = t.reshape(dk, dk, dd, dd)
    red = np.trace(t, axis1=2, axis2=3)
    return DensityMatrix(rho.label.subset(keep), red, subnormalized=rho.subnormalized)
