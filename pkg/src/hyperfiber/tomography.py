"""Transverse OAM beams and two-step interferometric field reconstruction.

Fields are superpositions of Laguerre-Gauss modes with radial index 0,
sampled on a square grid.  The two measurements interfere the field with a
plane-wave reference at phase offsets 0 and pi/2; the complex field is then
solved pixel by pixel from the two intensities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch, EmptySpectrum, InconsistentIntensities

DEFAULT_WAIST = 4.75e-6  # half the 9.5 um fiber core radius
DEFAULT_N = 256
REFERENCE_GAIN = 3.0  # reference amplitude relative to the field's peak amplitude


@dataclass(frozen=True)
class Grid:
    n: int = DEFAULT_N
    extent: float = 4 * DEFAULT_WAIST  # half-width in meters

    @property
    def step(self) -> float:
        return 2 * self.extent / self.n

    @property
    def cell_area(self) -> float:
        return self.step**2

    def coords(self):
        x = -self.extent + (np.arange(self.n) + 0.5) * self.step
        return np.meshgrid(x, x)


@dataclass(frozen=True, eq=False)
class FieldGrid:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise DimensionMismatch(f"values of shape {v.shape} on a {self.grid.n}x{self.grid.n} grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area)

    def normalized(self) -> "FieldGrid":
        return FieldGrid(self.grid, self.values / np.sqrt(self.power))


@dataclass(frozen=True)
class OamSpectrum:
    coefficients: Mapping[int, complex]
    waist: float = DEFAULT_WAIST
    normalize: bool = field(default=True, repr=False)

    def __post_init__(self):
        coeffs = {int(l): complex(c) for l, c in dict(self.coefficients).items()}
        if not coeffs:
            raise EmptySpectrum("an OAM spectrum needs at least one mode")
        norm = np.sqrt(sum(abs(c) ** 2 for c in coeffs.values()))
        if norm == 0:
            raise EmptySpectrum("all OAM coefficients are zero")
        if self.normalize:
            coeffs = {l: c / norm for l, c in coeffs.items()}
        object.__setattr__(self, "coefficients", dict(sorted(coeffs.items())))


@dataclass(frozen=True)
class Reference:
    """Plane-wave reference with amplitude ``amplitude`` and the two phase steps."""

    amplitude: float
    phases: tuple = (0.0, np.pi / 2)


def lg_mode(l: int, grid: Grid, waist: float = DEFAULT_WAIST) -> np.ndarray:
    """Unit-power LG(p=0) mode of charge ``l`` at the beam waist."""
    X, Y = grid.coords()
    r2 = (X**2 + Y**2) / waist**2
    amp = np.sqrt(2 / (np.pi * factorial(abs(l)))) / waist
    return amp * (2 * r2) ** (abs(l) / 2) * np.exp(-r2) * np.exp(1j * l * np.arctan2(Y, X))


def synthesize_field(spec: OamSpectrum, grid: Grid = Grid()) -> FieldGrid:
    vals = sum(c * lg_mode(l, grid, spec.waist) for l, c in spec.coefficients.items())
    return FieldGrid(grid, vals).normalized()


def default_reference(f: FieldGrid, gain: float = REFERENCE_GAIN) -> Reference:
    return Reference(gain * float(np.abs(f.values).max()))


def project_intensity(f: FieldGrid, projection: str, ref: Reference) -> np.ndarray:
    """``|E + R exp(i phase)|^2`` for the ``"first"`` or ``"second"`` reference phase."""
    k = {"first": 0, "second": 1}[projection]
    return np.abs(f.values + ref.amplitude * np.exp(1j * ref.phases[k])) ** 2


def add_intensity_noise(i: np.ndarray, level: float, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative Gaussian detection noise with relative amplitude ``level``."""
    if level == 0:
        return np.array(i, dtype=float)
    return i * (1.0 + level * rng.standard_normal(i.shape))


def reconstruct_two_measurement(i1: np.ndarray, i2: np.ndarray, ref: Reference,
                                grid: Grid | None = None) -> FieldGrid:
    """Recover ``E = x + iy`` from ``i1 = |E + r|^2`` and ``i2 = |E + i r|^2``.

    Subtracting gives ``y = x - d`` with ``d = (i1 - i2) / 2r``; substituting
    into ``i1`` leaves ``2x^2 + 2(r - d)x + d^2 + r^2 - i1 = 0``.  The larger
    root is the physical one whenever ``|E| < r / sqrt(2)``.
    """
    i1 = np.asarray(i1, dtype=float)
    i2 = np.asarray(i2, dtype=float)
    if i1.shape != i2.shape or i1.ndim != 2 or i1.shape[0] != i1.shape[1]:
        raise DimensionMismatch("intensity grids must be congruent and square")
    if tuple(ref.phases) != (0.0, np.pi / 2):
        raise ValueError("reconstruction assumes reference phases (0, pi/2)")
    r = ref.amplitude
    d = (i1 - i2) / (2 * r)
    b = 2 * (r - d)
    disc = b**2 - 8 * (d**2 + r**2 - i1)
    # tolerance relative to the reference scale, since intensities carry units
    if disc.min() < -1e-8 * (2 * r) ** 2:
        raise InconsistentIntensities("negative radicand: intensities are not jointly realizable")
    x = (-b + np.sqrt(np.clip(disc, 0.0, None))) / 4
    y = x - d
    grid = grid or Grid(n=i1.shape[0])
    return FieldGrid(grid, x + 1j * y).normalized()


def mode_overlap_fidelity(a: FieldGrid, b: FieldGrid) -> float:
    """``|<a|b>|^2`` for unit-power versions of both fields."""
    if a.values.shape != b.values.shape:
        raise DimensionMismatch("fields live on different grids")
    dA = a.grid.cell_area
    ip = np.vdot(a.values, b.values) * dA
    return float(abs(ip) ** 2 / (a.power * b.power))


def decompose(f: FieldGrid, ls, waist: float = DEFAULT_WAIST) -> dict:
    """Projections ``<LG_l | f>`` onto the listed charges."""
    dA = f.grid.cell_area
    return {int(l): complex(np.vdot(lg_mode(l, f.grid, waist), f.values) * dA) for l in ls}


@dataclass(frozen=True, eq=False)
class TomographyRun:
    truth: FieldGrid
    i1: np.ndarray
    i2: np.ndarray
    reconstruction: FieldGrid
    fidelity: float


def tomography_round_trip(spec: OamSpectrum, grid: Grid = Grid(), noise: float = 0.0,
                          seed: int = 0, gain: float = REFERENCE_GAIN) -> TomographyRun:
    """Synthesize, measure twice (with optional noise), reconstruct, and score."""
    truth = synthesize_field(spec, grid)
    ref = default_reference(truth, gain)
    rng = np.random.default_rng(seed)
    i1 = add_intensity_noise(project_intensity(truth, "first", ref), noise, rng)
    i2 = add_intensity_noise(project_intensity(truth, "second", ref), noise, rng)
    rec = reconstruct_two_measurement(i1, i2, ref, grid)
    return TomographyRun(truth, i1, i2, rec, mode_overlap_fidelity(truth, rec))
