"""Phase-only propagation of OAM-entangled pairs through fiber.

Each two-photon OAM branch picks up the propagation phase of its mode
(``beta = 2 pi n_eff / lambda`` per photon) plus a fixed phase-shift factor.
Intrinsic loss is tracked as a branch-independent survival probability and
never touches the normalized state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import StateVector
from .errors import NonPositiveInput, ParamOutOfRange, UnsupportedStateShape


@dataclass(frozen=True)
class FiberParams:
    n_eff_plus: float = 1.448
    n_eff_minus: float = 1.448
    # splits the degenerate indices: n+ -> n+ + delta_n/2, n- -> n- - delta_n/2
    delta_n: float = 5e-11
    lambda_photon: float = 1550e-9
    loss_db_per_km: float = 0.36
    core_radius: float = 9.5
    theta1: float = 1.02 * np.pi
    phi1: float = 0.98 * np.pi
    # True: both photons accrue beta*z per branch; False: one beta*z per branch
    two_photon_phase: bool = True

    def __post_init__(self):
        if self.lambda_photon <= 0:
            raise ParamOutOfRange("wavelength must be positive")
        if self.loss_db_per_km < 0:
            raise ParamOutOfRange("loss must be non-negative")
        if self.n_eff_plus <= 1 or self.n_eff_minus <= 1:
            raise ParamOutOfRange("effective indices must exceed 1")
        if self.delta_n < 0:
            raise ParamOutOfRange("delta_n must be non-negative")

    @property
    def photons(self) -> int:
        return 2 if self.two_photon_phase else 1

    @property
    def n_plus(self) -> float:
        return self.n_eff_plus + self.delta_n / 2

    @property
    def n_minus(self) -> float:
        return self.n_eff_minus - self.delta_n / 2

    def delta_beta(self) -> float:
        """``beta+ - beta-`` in rad/m, computed from the index difference directly."""
        dn = (self.n_eff_plus - self.n_eff_minus) + self.delta_n
        return 2 * np.pi * dn / self.lambda_photon

    def period_km(self) -> float:
        """Spatial period of the branch phase difference (inf when degenerate)."""
        db = self.delta_beta()
        if db == 0:
            return float("inf")
        return 2 * np.pi / (self.photons * abs(db) * 1000.0)


class PropagationResult(NamedTuple):
    state: StateVector
    survival_probability: float
    fidelity_vs_input: float


def beta(n_eff: float, lam: float) -> float:
    """Propagation constant ``2 pi n_eff / lambda`` in rad/m."""
    if n_eff <= 0 or lam <= 0:
        raise NonPositiveInput("n_eff and wavelength must be positive")
    return 2 * np.pi * n_eff / lam


def survival_probability(z_km: float, fp: FiberParams) -> float:
    return float(10.0 ** (-fp.loss_db_per_km * z_km / 10.0))


def branch_phases(z_km, fp: FiberParams):
    """Phases of the ``|+l,+l>`` and ``|-l,-l>`` branches at distance ``z_km``.

    The large common phase is reduced mod 2 pi separately from the small
    splitting so the difference stays accurate at long distances.
    """
    z_m = np.asarray(z_km, dtype=float) * 1000.0
    k = fp.photons
    mean = 2 * np.pi * (fp.n_plus + fp.n_minus) / 2 / fp.lambda_photon
    common = np.mod(k * mean * z_m, 2 * np.pi)
    half = k * fp.delta_beta() * z_m / 2
    return common + half + fp.theta1, common - half + fp.phi1


def _branch_masks(psi: StateVector) -> tuple:
    dofs = psi.label.dofs
    oam = [i for i, d in enumerate(dofs) if d == "oam"]
    if len(oam) != 2 or psi.label.dims[oam[0]] != 2 or psi.label.dims[oam[1]] != 2:
        raise UnsupportedStateShape("expected exactly two OAM qubits")
    digits = np.indices(psi.label.dims).reshape(psi.label.n_factors, -1)
    a, b = digits[oam[0]], digits[oam[1]]
    plus = (a == 0) & (b == 0)
    minus = (a == 1) & (b == 1)
    mixed = ~(plus | minus)
    if np.any(np.abs(psi.amplitudes[mixed]) > 1e-12):
        raise UnsupportedStateShape("state has amplitude on mixed-sign OAM branches")
    return plus, minus


def propagate(s: StateVector, z: float, fp: FiberParams) -> PropagationResult:
    if z < 0:
        raise ParamOutOfRange("distance must be non-negative")
    plus, minus = _branch_masks(s)
    dp, dm = branch_phases(z, fp)
    amps = np.array(s.amplitudes)
    amps[plus] *= np.exp(1j * dp)
    amps[minus] *= np.exp(1j * dm)
    out = StateVector(s.label, amps)
    fid = abs(s.inner(out)) ** 2
    return PropagationResult(out, survival_probability(z, fp), float(fid))


def fidelity_vs_distance_sweep(alpha: float, fp: FiberParams, z_max: float, dz: float):
    """Rows ``(z_km, fidelity, survival)`` for the alpha hybrid state on ``[0, z_max]``.

    Only the two branch weights ``alpha**2`` and ``1 - alpha**2`` enter, so the
    sweep is evaluated in closed form; :func:`propagate` gives the same values
    state by state.
    """
    if dz <= 0:
        raise ParamOutOfRange("dz must be positive")
    n = int(np.floor(z_max / dz + 1e-9)) + 1
    z = np.arange(n) * dz
    w_plus, w_minus = alpha**2, 1.0 - alpha**2
    dp, dm = branch_phases(z, fp)
    overlap = w_plus * np.exp(1j * dp) + w_minus * np.exp(1j * dm)
    fid = np.abs(overlap) ** 2
    surv = 10.0 ** (-fp.loss_db_per_km * z / 10.0)
    return [(float(a), float(b), float(c)) for a, b, c in zip(z, fid, surv)]


def detect_period(values, dz: float) -> float:
    """Dominant period of a sampled signal from its autocorrelation.

    Returns the lag (in units of ``dz``) of the first autocorrelation peak
    after the first zero crossing that comes within 10% of the tallest one,
    refined by parabolic interpolation.
    """
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    if not np.any(x):
        return float("inf")
    n = len(x)
    spec = np.fft.rfft(x, 2 * n)
    ac = np.fft.irfft(spec * spec.conj())[:n]
    # unbiased normalization so later lags are not penalized
    ac = ac / (n - np.arange(n))
    neg = np.nonzero(ac < 0)[0]
    if len(neg) == 0:
        return float("inf")
    start = neg[0]
    stop = max(start + 2, n // 2)
    window = ac[start:stop]
    # multiples of the period peak equally high; take the first near-maximal one
    k = start + int(np.argmax(window >= 0.9 * window.max()))
    while k + 1 < stop and ac[k + 1] > ac[k]:
        k += 1
    if 0 < k < n - 1:
        y0, y1, y2 = ac[k - 1], ac[k], ac[k + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return float((k + shift) * dz)


def favorable_fraction(alpha: float, fp: FiberParams, threshold: float = 0.5, samples: int = 100_000) -> float:
    """Fraction of one oscillation period where the fidelity exceeds ``threshold``."""
    period = fp.period_km()
    if not np.isfinite(period):
        f = fidelity_vs_distance_sweep(alpha, fp, 0.0, 1.0)[0][1]
        return float(f > threshold)
    z = (np.arange(samples) + 0.5) * period / samples
    dp, dm = branch_phases(z, fp)
    fid = np.abs(alpha**2 * np.exp(1j * dp) + (1 - alpha**2) * np.exp(1j * dm)) ** 2
    return float(np.mean(fid > threshold))
