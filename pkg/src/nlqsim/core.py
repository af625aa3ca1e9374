"""Frequency grids, mode and segment descriptors, and pump construction.

Everything is SI with angular frequencies in rad/s. Pump amplitudes carry
units of sqrt(J*s) so that ``sum(|beta|**2) * delta_omega`` is the pulse
energy in joules.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

C_LIGHT = 299_792_458.0


class InvalidArgument(ValueError):
    """Raised for inputs that violate a documented precondition."""


class UnderResolvedPump(InvalidArgument):
    """Raised when a pump spectrum is too narrow for the frequency grid."""


class NumericalFailure(ArithmeticError):
    """Raised when a computation produces non-finite or unphysical output."""


class StepSizeError(NumericalFailure):
    """Raised when an integrator step is too coarse for the requested accuracy."""


class CoverageWarning(UserWarning):
    """Emitted when a kernel is evaluated outside the grid it is stored on."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency grid, ``omega_k = omega_start + k * delta_omega``."""

    omega_start: float
    delta_omega: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.omega_start):
            raise InvalidArgument("omega_start must be finite")
        if not self.delta_omega > 0:
            raise InvalidArgument("delta_omega must be positive")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise InvalidArgument("n_points must be an integer >= 2")

    @property
    def omegas(self) -> np.ndarray:
        return self.omega_start + self.delta_omega * np.arange(self.n_points)

    @property
    def omega_stop(self) -> float:
        return self.omega_start + self.delta_omega * (self.n_points - 1)

    @property
    def center(self) -> float:
        return 0.5 * (self.omega_start + self.omega_stop)

    @property
    def span(self) -> float:
        return self.delta_omega * (self.n_points - 1)

    def omega_at(self, k: int) -> float:
        return self.omega_start + self.delta_omega * k

    def index_of(self, omega: float) -> int:
        k = int(round((omega - self.omega_start) / self.delta_omega))
        if not 0 <= k < self.n_points:
            raise InvalidArgument(f"frequency {omega} lies outside the grid")
        return k

    def contains(self, omega: float) -> bool:
        half = 0.5 * self.delta_omega
        return self.omega_start - half <= omega <= self.omega_stop + half

    def same_spacing(self, other: "FrequencyGrid", rtol: float = 1e-9) -> bool:
        return abs(self.delta_omega - other.delta_omega) <= rtol * self.delta_omega


def build_frequency_grid(center: float, span: float, n_points: int) -> FrequencyGrid:
    if not span > 0:
        raise InvalidArgument("span must be positive")
    if int(n_points) != n_points or n_points < 2:
        raise InvalidArgument("n_points must be an integer >= 2")
    n_points = int(n_points)
    return FrequencyGrid(center - 0.5 * span, span / (n_points - 1), n_points)


def sum_grid(a: FrequencyGrid, b: FrequencyGrid) -> FrequencyGrid:
    """Grid holding every ``omega_a + omega_b`` pair (for pair-generation pumps)."""
    if not a.same_spacing(b):
        raise InvalidArgument("grids must share the same spacing")
    return FrequencyGrid(a.omega_start + b.omega_start, a.delta_omega,
                         a.n_points + b.n_points - 1)


def difference_grid(a: FrequencyGrid, b: FrequencyGrid) -> FrequencyGrid:
    """Grid holding every ``omega_a - omega_b`` pair (for conversion pumps)."""
    if not a.same_spacing(b):
        raise InvalidArgument("grids must share the same spacing")
    return FrequencyGrid(a.omega_start - b.omega_stop, a.delta_omega,
                         a.n_points + b.n_points - 1)


def wavelength_to_omega(wavelength: float) -> float:
    return 2.0 * np.pi * C_LIGHT / wavelength


def fwhm_wavelength_to_omega(fwhm_wavelength: float, center_wavelength: float) -> float:
    return 2.0 * np.pi * C_LIGHT * fwhm_wavelength / center_wavelength ** 2


@dataclass(frozen=True)
class ModeSpec:
    label: str
    center_frequency: float
    grid: FrequencyGrid

    def __post_init__(self):
        if not self.center_frequency > 0:
            raise InvalidArgument("center frequency must be positive")
        if not self.grid.contains(self.center_frequency):
            raise InvalidArgument(f"mode {self.label!r}: center frequency outside its grid")

    @property
    def detunings(self) -> np.ndarray:
        return self.grid.omegas - self.center_frequency


@dataclass(frozen=True, eq=False)
class PumpField:
    mode: ModeSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.mode.grid.n_points,):
            raise InvalidArgument("pump amplitudes must match the pump grid")
        if not np.all(np.isfinite(amps)):
            raise InvalidArgument("pump amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def grid(self) -> FrequencyGrid:
        return self.mode.grid

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.delta_omega)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "PumpField":
        return PumpField(self.mode, amplitudes)

    def sample(self, omegas: np.ndarray) -> np.ndarray:
        return sample_on_grid(self.amplitudes, self.grid, omegas, what="pump")


def sample_on_grid(values: np.ndarray, grid: FrequencyGrid, omegas: np.ndarray,
                   what: str = "kernel", warn: bool = True) -> np.ndarray:
    """Read ``values`` (stored on ``grid``) at arbitrary frequencies.

    Aligned frequencies are read exactly; others are linearly interpolated.
    Points outside the grid read as zero and trigger a ``CoverageWarning``.
    """
    omegas = np.asarray(omegas, dtype=float)
    pos = (omegas - grid.omega_start) / grid.delta_omega
    nearest = np.rint(pos)
    aligned = np.all(np.abs(pos - nearest) < 1e-6)
    n = grid.n_points
    if aligned:
        idx = nearest.astype(np.int64)
        inside = (idx >= 0) & (idx < n)
        out = np.zeros(omegas.shape, dtype=complex)
        out[inside] = values[idx[inside]]
    else:
        inside = (pos >= -1e-9) & (pos <= n - 1 + 1e-9)
        x = np.arange(n)
        out = (np.interp(pos, x, values.real, left=0.0, right=0.0)
               + 1j * np.interp(pos, x, values.imag, left=0.0, right=0.0))
    if warn and not np.all(inside):
        warnings.warn(f"{what} evaluated outside its grid; zero-filled", CoverageWarning,
                      stacklevel=3)
    return out


def gaussian_pump(mode: ModeSpec, fwhm_wavelength: float, pulse_energy: float,
                  center_wavelength: float) -> PumpField:
    """Transform-limited Gaussian pump with the given intensity FWHM (in wavelength)."""
    if not fwhm_wavelength > 0:
        raise InvalidArgument("FWHM must be positive")
    if pulse_energy < 0:
        raise InvalidArgument("pulse energy must be non-negative")
    fwhm = fwhm_wavelength_to_omega(fwhm_wavelength, center_wavelength)
    if fwhm < 3.0 * mode.grid.delta_omega:
        raise UnderResolvedPump(
            f"pump FWHM {fwhm:.3e} rad/s is below 3 grid spacings ({mode.grid.delta_omega:.3e})")
    det = mode.detunings
    intensity = np.exp(-4.0 * np.log(2.0) * det ** 2 / fwhm ** 2)
    amps = np.sqrt(intensity).astype(complex)
    if pulse_energy == 0:
        return PumpField(mode, np.zeros_like(amps))
    norm = np.sum(np.abs(amps) ** 2) * mode.grid.delta_omega
    return PumpField(mode, amps * np.sqrt(pulse_energy / norm))


@dataclass(frozen=True)
class PolingPattern:
    """Domain walls ``z_0 < z_1 < ... < z_D`` and one sign per domain."""

    boundaries: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        s = np.asarray(self.signs, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise InvalidArgument("need at least two boundaries")
        if np.any(np.diff(b) <= 0):
            raise InvalidArgument("boundaries must be strictly increasing")
        if s.shape != (b.size - 1,):
            raise InvalidArgument("need exactly one sign per domain")
        if not np.all(np.isin(s, (-1.0, 1.0))):
            raise InvalidArgument("signs must be +1 or -1")
        b.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "signs", s)

    @property
    def n_domains(self) -> int:
        return int(self.signs.size)

    @property
    def length(self) -> float:
        return float(self.boundaries[-1] - self.boundaries[0])

    def sign_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        idx = np.searchsorted(self.boundaries, z, side="right") - 1
        idx = np.clip(idx, 0, self.n_domains - 1)
        return self.signs[idx]


PROCESSES = ("pdc", "qfc", "sfwm")


def _as_profile(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise InvalidArgument(f"{name}: expected {n} samples")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name}: samples must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class SegmentProfile:
    """Piecewise-linear description of one nonlinear waveguide section.

    ``velocity``, ``kbar`` and ``alpha`` map mode labels (signal, idler, pump,
    pump2) to per-sample values. ``gamma`` is the process coupling (PDC, QFC or
    SFWM, selected by ``process``); the poling sign multiplies it.
    """

    length: float
    z: np.ndarray
    velocity: Mapping[str, np.ndarray]
    kbar: Mapping[str, np.ndarray]
    gamma: np.ndarray
    process: str = "pdc"
    gamma_spm: np.ndarray = 0.0
    gamma_xpm_s: np.ndarray = 0.0
    gamma_xpm_i: np.ndarray = 0.0
    alpha: Mapping[str, np.ndarray] = field(default_factory=dict)
    poling: Optional[PolingPattern] = None

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgument("segment length must be positive")
        if self.process not in PROCESSES:
            raise InvalidArgument(f"process must be one of {PROCESSES}")
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        if np.any(np.diff(z) <= 0):
            raise InvalidArgument("sample positions must be strictly increasing")
        if z[0] < -1e-15 or z[-1] > self.length * (1 + 1e-12):
            raise InvalidArgument("sample positions must lie in [0, length]")
        n = z.size
        put = lambda k, v: object.__setattr__(self, k, v)
        put("z", z)
        vel = {k: _as_profile(v, n, f"velocity[{k}]") for k, v in self.velocity.items()}
        for k, v in vel.items():
            if np.any(v <= 0):
                raise InvalidArgument(f"velocity[{k}] must be positive")
        put("velocity", vel)
        put("kbar", {k: _as_profile(v, n, f"kbar[{k}]") for k, v in self.kbar.items()})
        alpha = {k: _as_profile(v, n, f"alpha[{k}]") for k, v in self.alpha.items()}
        for k, v in alpha.items():
            if np.any(v < 0):
                raise InvalidArgument(f"alpha[{k}] must be non-negative")
        put("alpha", alpha)
        for name in ("gamma", "gamma_spm", "gamma_xpm_s", "gamma_xpm_i"):
            put(name, _as_profile(getattr(self, name), n, name))
        pump_labels = ("pump", "pump2") if self.process == "sfwm" else ("pump",)
        for lab in ("signal", "idler") + pump_labels[:1]:
            if lab not in vel:
                raise InvalidArgument(f"missing group velocity for {lab!r}")
        if self.poling is not None:
            b = self.poling.boundaries
            if b[0] > 1e-12 * self.length or b[-1] < self.length * (1 - 1e-9):
                raise InvalidArgument("poling pattern must cover [0, length]")

    # -- evaluation -----------------------------------------------------------------
    def _interp(self, values: np.ndarray, z) -> np.ndarray:
        if values.size == 1:
            return np.full(np.shape(z), values[0]) if np.ndim(z) else float(values[0])
        out = np.interp(z, self.z, values)
        return out if np.ndim(z) else float(out)

    @property
    def is_uniform(self) -> bool:
        """True when every sampled parameter is constant along z."""
        arrays = [self.gamma, self.gamma_spm, self.gamma_xpm_s, self.gamma_xpm_i]
        arrays += list(self.velocity.values()) + list(self.kbar.values())
        arrays += list(self.alpha.values())
        return all(np.all(a == a[0]) for a in arrays)

    def v(self, label: str, z):
        return self._interp(self.velocity[label], z)

    def loss(self, label: str, z):
        if label not in self.alpha:
            return 0.0 * np.asarray(z, dtype=float) if np.ndim(z) else 0.0
        return self._interp(self.alpha[label], z)

    def coupling(self, z):
        g = self._interp(self.gamma, z)
        if self.poling is not None:
            g = g * self.poling.sign_at(z)
        return g

    def spm(self, z):
        return self._interp(self.gamma_spm, z)

    def xpm(self, which: str, z):
        return self._interp(self.gamma_xpm_s if which == "signal" else self.gamma_xpm_i, z)

    def walkoff_rate(self, label: str, z, reference: str = "pump"):
        """``1/v_label - 1/v_reference`` at z (s/m)."""
        return 1.0 / self.v(label, z) - 1.0 / self.v(reference, z)

    def delta_k_bar(self, z):
        """Central phase mismatch of the segment's process at z (rad/m)."""
        kb = {k: self._interp(v, z) for k, v in self.kbar.items()}
        if self.process == "pdc":
            return kb["pump"] - kb["signal"] - kb["idler"]
        if self.process == "qfc":
            return kb["pump"] + kb["signal"] - kb["idler"]
        p2 = kb.get("pump2", kb["pump"])
        return kb["signal"] + kb["idler"] - kb["pump"] - p2

    def _cumulative(self, rate_at_samples: np.ndarray, z) -> np.ndarray:
        """Exact integral from 0 to z of a piecewise-linear profile."""
        zs = self.z
        r = rate_at_samples
        z = np.asarray(z, dtype=float)
        if zs.size == 1:
            return r[0] * z
        # extend flat to the ends of [0, L]
        knots = np.concatenate(([0.0], zs, [self.length]))
        vals = np.concatenate(([r[0]], r, [r[-1]]))
        keep = np.concatenate(([True], np.diff(knots) > 0))
        knots, vals = knots[keep], vals[keep]
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(knots))))
        i = np.clip(np.searchsorted(knots, z, side="right") - 1, 0, knots.size - 2)
        dz = z - knots[i]
        slope = (vals[i + 1] - vals[i]) / (knots[i + 1] - knots[i])
        return cum[i] + vals[i] * dz + 0.5 * slope * dz ** 2

    def integrated_mismatch(self, z):
        """Integral of the central phase mismatch from 0 to z."""
        dk = np.atleast_1d(self.delta_k_bar(self.z))
        out = self._cumulative(dk, z)
        return out if np.ndim(z) else float(out)

    def integrated_walkoff(self, label: str, z, reference: str = "pump"):
        rate = 1.0 / self.velocity[label] - 1.0 / self.velocity[reference]
        out = self._cumulative(rate, z)
        return out if np.ndim(z) else float(out)

    def breakpoints(self) -> np.ndarray:
        """Positions that integration steps must not straddle (poling walls, ends)."""
        pts = [0.0, self.length]
        if self.poling is not None:
            b = self.poling.boundaries
            pts.extend(b[(b > 0) & (b < self.length)])
        return np.unique(np.asarray(pts))


def uniform_segment(length: float, velocity: Dict[str, float], gamma: float,
                    delta_k_bar: float = 0.0, process: str = "pdc",
                    poling: Optional[PolingPattern] = None, **extra) -> SegmentProfile:
    """Convenience constructor for a z-invariant section.

    The central propagation constants are chosen so that only the requested
    mismatch is non-zero (pump carries it).
    """
    labels = list(velocity)
    kbar = {k: 0.0 for k in labels}
    if process == "qfc":
        kbar["idler"] = -delta_k_bar
    elif process == "sfwm":
        kbar["signal"] = delta_k_bar
    else:
        kbar["pump"] = delta_k_bar
    return SegmentProfile(length=length, z=np.array([0.0]), velocity=velocity, kbar=kbar,
                          gamma=gamma, process=process, poling=poling, **extra)
