"""Amplitude-and-phase damping (APD) noise.

The single-qubit APD channel has three Kraus operators::

    E0 = diag(1, sqrt(1 - gd - (1 - gd) gs))
    E1 = sqrt(gd) |0><1|
    E2 = sqrt((1 - gd) gs) |1><1|

Multi-photon states are damped by applying the channel independently to
each selected tensor factor.  Damping strengths follow exponential
relaxation, ``gamma(t) = 1 - exp(-t/T)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import DensityMatrix, HilbertLabel, StateVector, basis_state, tensor
from .errors import (
    DimensionMismatch,
    DuplicateTarget,
    IndexOutOfRange,
    ParamOutOfRange,
)
from .states import POL2, hybrid_state, hyperentangled_state

DEFAULT_T1 = 100.0
DEFAULT_T2 = 100.0


@dataclass(frozen=True)
class ApdParams:
    gamma_d: float
    gamma_s: float

    def __post_init__(self):
        for name in ("gamma_d", "gamma_s"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParamOutOfRange(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class TimeParams:
    """Relaxation (T1), dephasing (T2) and elapsed time, all in microseconds."""

    T1: float = DEFAULT_T1
    T2: float = DEFAULT_T2
    t: float = 0.0

    def __post_init__(self):
        if not (self.T1 > 0 and self.T2 > 0):
            raise ParamOutOfRange("T1 and T2 must be positive")
        if self.t < 0:
            raise ParamOutOfRange("elapsed time must be non-negative")

    def apd(self) -> ApdParams:
        return ApdParams(gamma_of_time(self.t, self.T1), gamma_of_time(self.t, self.T2))


@dataclass(frozen=True, eq=False)
class KrausSet:
    matrices: tuple

    def __post_init__(self):
        mats = []
        for m in self.matrices:
            m = np.array(m, dtype=complex)
            m.setflags(write=False)
            mats.append(m)
        if not mats:
            raise ValueError("a Kraus set needs at least one operator")
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise DimensionMismatch("Kraus operators must be square and of equal size")
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def completeness_residual(self) -> float:
        acc = sum(m.conj().T @ m for m in self.matrices)
        return float(np.abs(acc - np.eye(self.dim)).max())

    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major ``vec(rho)``."""
        return sum(np.kron(m, m.conj()) for m in self.matrices)


def gamma_of_time(t: float, T: float) -> float:
    if T <= 0:
        raise ParamOutOfRange("time constant must be positive")
    if t < 0:
        raise ParamOutOfRange("elapsed time must be non-negative")
    return float(-np.expm1(-t / T))


def apd_kraus(p: ApdParams) -> KrausSet:
    gd, gs = p.gamma_d, p.gamma_s
    keep = max(1.0 - gd - (1.0 - gd) * gs, 0.0)
    e0 = np.diag([1.0, np.sqrt(keep)])
    e1 = np.array([[0.0, np.sqrt(gd)], [0.0, 0.0]])
    e2 = np.array([[0.0, 0.0], [0.0, np.sqrt((1.0 - gd) * gs)]])
    return KrausSet((e0, e1, e2))


def qudit_apd_kraus(d: int, p: ApdParams) -> KrausSet:
    """Cascade APD channel on ``d`` levels.

    Level ``k`` decays to ``k-1`` with probability ``1 - (1 - gd)**k`` and the
    surviving population dephases with strength ``gs``, exactly as the qubit
    channel does for its excited level.  For ``d == 2`` this is ``apd_kraus``.
    """
    if d < 2:
        raise ParamOutOfRange(f"qudit dimension must be >= 2, got {d}")
    k = np.arange(d)
    w = 1.0 - (1.0 - p.gamma_d) ** k
    stay = 1.0 - w
    e0 = np.diag(np.sqrt(np.clip(stay * (1.0 - p.gamma_s), 0.0, None)))
    e0[0, 0] = 1.0
    decay = np.zeros((d, d))
    decay[k[:-1], k[1:]] = np.sqrt(w[1:])
    dephase = np.diag(np.sqrt(stay * p.gamma_s))
    dephase[0, 0] = 0.0
    return KrausSet((e0, decay, dephase))


def _apply_on_factor(m: np.ndarray, dims: tuple, ks: KrausSet, j: int) -> np.ndarray:
    """Apply ``ks`` to factor ``j`` of a density tensor of shape ``dims + dims``."""
    n = len(dims)
    out = np.zeros_like(m)
    for e in ks.matrices:
        t = np.tensordot(e, m, axes=([1], [j]))
        t = np.moveaxis(t, 0, j)
        t = np.tensordot(t, e.conj(), axes=([n + j], [1]))
        out += np.moveaxis(t, -1, n + j)
    return out


def apply_channel_factors(rho: DensityMatrix, channels: Mapping[int, KrausSet]) -> DensityMatrix:
    """Apply an independent channel to each listed factor of ``rho``."""
    dims = rho.label.dims
    n = len(dims)
    m = rho.entries.reshape(dims + dims)
    for j in sorted(channels):
        if not 0 <= j < n:
            raise IndexOutOfRange(f"factor index {j} out of range for {n} factors")
        ks = channels[j]
        if ks.dim != dims[j]:
            raise DimensionMismatch(f"channel of dimension {ks.dim} on factor of dimension {dims[j]}")
        m = _apply_on_factor(m, dims, ks, j)
    d = rho.label.dim
    return DensityMatrix(rho.label, m.reshape(d, d), subnormalized=rho.subnormalized)


def apply_channel_per_qubit(rho: DensityMatrix, ks: KrausSet, targets: Sequence[int]) -> DensityMatrix:
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise DuplicateTarget(f"repeated target in {targets}")
    n = rho.label.n_factors
    for j in targets:
        if not 0 <= j < n:
            raise IndexOutOfRange(f"target {j} out of range for {n} factors")
    return apply_channel_factors(rho, {j: ks for j in targets})


def apply_channel_two_photon(rho: DensityMatrix, ks: KrausSet) -> DensityMatrix:
    """``sum_{m,n} (E_m x E_n) rho (E_m x E_n)^dagger`` on a two-qubit state."""
    if rho.label.dims != (ks.dim, ks.dim):
        raise DimensionMismatch(f"expected two factors of dimension {ks.dim}, got {rho.label.dims}")
    out = np.zeros_like(rho.entries)
    for em in ks.matrices:
        for en in ks.matrices:
            k = np.kron(em, en)
            out += k @ rho.entries @ k.conj().T
    return DensityMatrix(rho.label, out, subnormalized=rho.subnormalized)


def channel_fidelity(psi: StateVector, channels: Mapping[int, KrausSet]) -> float:
    """``<psi| E(|psi><psi|) |psi>`` by enumerating Kraus branches on the ket.

    Equivalent to building the damped density matrix and calling
    :func:`core.fidelity`, but costs ``prod(len(K))`` matrix-vector products
    instead of density-matrix contractions.
    """
    dims = psi.label.dims
    branches = psi.amplitudes.reshape((1,) + dims)
    for j in sorted(channels):
        mats = np.stack(channels[j].matrices)
        t = np.tensordot(mats, branches, axes=([2], [j + 1]))
        # axes now (kraus, row, branch, ...other factors); put row back in place
        t = np.moveaxis(t, 1, j + 2)
        branches = t.reshape((-1,) + dims)
    overlaps = branches.reshape(branches.shape[0], -1) @ psi.amplitudes.conj()
    return float(np.sum(np.abs(overlaps) ** 2))


# --- simulated systems -------------------------------------------------------

SYSTEMS = ("qubits4", "qubits6", "oam")


def parse_system(system: str) -> tuple:
    """``"qubits4"``, ``"qubits6"`` or ``"oam:<l>"`` -> ``(kind, l)``."""
    if system in ("qubits4", "qubits6"):
        return system, 1
    kind, _, l = system.partition(":")
    if kind == "oam" and l.lstrip("-").isdigit():
        l = abs(int(l))
        if l < 2:
            raise ParamOutOfRange("the OAM qudit system needs |l| >= 2")
        return "oam", l
    raise ValueError(f"unknown system {system!r}")


def oam_system_state(alpha: float, l: int) -> StateVector:
    """Polarization pair with both photons at the top of an ``l``-level OAM ladder.

    The ladder records ``|l|``; the OAM sign follows the polarization (H to
    ``+l``, V to ``-l``) so it is carried by the polarization factor.
    """
    beta = np.sqrt(1.0 - alpha**2)
    pol = StateVector(POL2, [alpha, 0, 0, beta])
    ladder = HilbertLabel((("oam", l), ("oam", l)))
    top = basis_state(ladder, (l - 1, l - 1))
    return tensor(pol, top)


def system_state(system: str, alpha: float) -> StateVector:
    kind, l = parse_system(system)
    if kind == "qubits4":
        return hybrid_state(alpha)
    if kind == "qubits6":
        return hyperentangled_state(alpha)
    return oam_system_state(alpha, l)


def system_channels(psi: StateVector, apd: ApdParams,
                    damped: Iterable[str] | None = None) -> dict:
    """One APD channel per factor whose degree of freedom is in ``damped`` (default: all)."""
    damped = set(psi.label.dofs if damped is None else damped)
    out = {}
    cache = {}
    for j, (dof, d) in enumerate(psi.label.factors):
        if dof not in damped:
            continue
        if d not in cache:
            cache[d] = apd_kraus(apd) if d == 2 else qudit_apd_kraus(d, apd)
        out[j] = cache[d]
    return out


def system_fidelity(alpha: float, t: float, system: str = "qubits4", T1: float = DEFAULT_T1,
                    T2: float = DEFAULT_T2, damped: Iterable[str] | None = None) -> float:
    """Fidelity of the damped ``system`` state with its own noiseless input."""
    psi = system_state(system, alpha)
    apd = TimeParams(T1, T2, t).apd()
    return channel_fidelity(psi, system_channels(psi, apd, damped))


def fidelity_improvement_ratio(alpha_hi: float, alpha_lo: float, t: float, system: str = "qubits4",
                               T1: float = DEFAULT_T1, T2: float = DEFAULT_T2,
                               damped: Iterable[str] | None = None) -> float:
    """Relative fidelity gain of ``alpha_hi`` over ``alpha_lo``, in percent."""
    hi = system_fidelity(alpha_hi, t, system, T1, T2, damped)
    lo = system_fidelity(alpha_lo, t, system, T1, T2, damped)
    return 100.0 * (hi - lo) / lo
