"""Constructors for the photon-pair states used throughout the simulations.

Canonical factor order after the q-plate is
``(A-pol, B-pol, A-oam, B-oam[, A-freq, B-freq])``.  Polarization uses
``|H> = |0>``, ``|V> = |1>``; an OAM qubit stores ``|+l> = |0>`` and
``|-l> = |1>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import HilbertLabel, StateVector, normalize, tensor
from .errors import NonPolarizationInput, ParamOutOfRange

POL = HilbertLabel.of("polarization")
POL2 = HilbertLabel.of("polarization", "polarization")
FREQ2 = HilbertLabel.of("frequency", "frequency")


@dataclass(frozen=True)
class SourceParams:
    """Down-conversion source settings; ``beta`` is derived from ``alpha``."""

    alpha: float
    theta: float = 0.0
    phi: float = np.pi
    beta: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParamOutOfRange(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (np.isfinite(self.theta) and np.isfinite(self.phi)):
            raise ParamOutOfRange("theta and phi must be finite")
        object.__setattr__(self, "beta", float(np.sqrt(1.0 - self.alpha**2)))


@dataclass(frozen=True)
class QPlateSpec:
    q: Fraction | float

    def __post_init__(self):
        q = Fraction(self.q)
        if (2 * q).denominator != 1 or q == 0:
            raise ParamOutOfRange(f"q-plate order must be a nonzero half-integer, got {self.q}")
        object.__setattr__(self, "q", q)

    @property
    def l(self) -> int:
        return int(2 * self.q)


def single_qubit_basis(theta: float, phi: float) -> tuple:
    """The pair ``(psi+, psi-)`` of orthonormal single-qubit states."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ph = np.exp(1j * phi)
    plus = StateVector(POL, [c, ph * s])
    minus = StateVector(POL, [s, -ph * c])
    return plus, minus


def polarization_pair_state(p: SourceParams) -> StateVector:
    plus, minus = single_qubit_basis(p.theta, p.phi)
    pa, ma = plus.amplitudes, minus.amplitudes
    amps = (p.alpha * np.outer(pa, pa) + p.beta * np.outer(ma, ma)).ravel()
    return normalize(StateVector(POL2, amps))


def qplate_transform(pol_state: StateVector, spec: QPlateSpec | None = None) -> StateVector:
    """Imprint OAM on every photon: ``|H> -> |H>|+l>``, ``|V> -> |V>|-l>``.

    The QWP / q-plate / QWP chain returns each photon to its original linear
    polarization, so the map is an isometry that copies the polarization bit
    into a new OAM qubit.  ``spec`` only fixes ``l``; the qubit encoding of
    ``+l`` and ``-l`` does not depend on its value.
    """
    if pol_state.label.dofs != ("polarization",) * pol_state.label.n_factors or not (
        pol_state.label.is_qubits()
    ):
        raise NonPolarizationInput("q-plate input must be polarization qubits only")
    n = pol_state.label.n_factors
    label = HilbertLabel(pol_state.label.factors + (("oam", 2),) * n)
    out = np.zeros(label.dim, dtype=complex)
    for idx, amp in enumerate(pol_state.amplitudes):
        if amp != 0:
            # copying the n polarization bits into the n OAM slots
            out[(idx << n) | idx] = amp
    return StateVector(label, out)


def hybrid_state(alpha: float, l: int = 1) -> StateVector:
    """``alpha|HH>|l,l> + sqrt(1-alpha^2)|VV>|-l,-l>`` on four qubits."""
    if not 0.0 <= alpha <= 1.0:
        raise ParamOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    if l == 0:
        raise ParamOutOfRange("topological charge must be nonzero")
    beta = np.sqrt(1.0 - alpha**2)
    pol = StateVector(POL2, [alpha, 0, 0, beta])
    return normalize(qplate_transform(pol, QPlateSpec(Fraction(l, 2))))


def frequency_bell() -> StateVector:
    """``(|10> + |01>)/sqrt(2)`` on the signal/idler frequency qubits."""
    return normalize(StateVector(FREQ2, [0, 1, 1, 0]))


def add_frequency_dof(s: StateVector) -> StateVector:
    return tensor(s, frequency_bell())


def hyperentangled_state(alpha: float, l: int = 1) -> StateVector:
    """Six-qubit state: the hybrid state with the frequency pair appended."""
    return add_frequency_dof(hybrid_state(alpha, l))
