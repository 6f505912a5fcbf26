"""Kicking potentials on the 2*pi-periodic line.

The kick strength enters the dynamics separately (through kappa = K/kbar),
so every potential here carries unit amplitude.  All shipped potentials
satisfy the two symmetries the phase-space sum rules rely on,

    V(-x) = -V(x)            (odd)
    V(x + pi) = -V(x)        (half-period antisymmetry)

and are rejected at construction when they do not.  Tabulated potentials
are interpreted as trigonometric interpolants on their uniform grid, so
spectral differentiation and the Fourier quadratures downstream all see
one and the same band-limited function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
SYMMETRY_TOL = 1e-10

_TRIANGLE_SLOPE = 2.0 / np.pi


class SymmetryError(ValueError):
    """A potential violates the required odd / half-period symmetry."""


@dataclass(frozen=True)
class SymmetryReport:
    """Measured symmetry violations of a potential on a uniform grid."""

    periodicity: float
    oddness: float
    half_period: float
    tol: float
    grid_points: int

    @property
    def passed(self) -> bool:
        return max(self.periodicity, self.oddness, self.half_period) < self.tol

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"symmetry check ({self.grid_points} points, tol {self.tol:g}): "
            f"periodicity {self.periodicity:.3g}, oddness {self.oddness:.3g}, "
            f"half-period {self.half_period:.3g} -> {verdict}"
        )


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A unit-amplitude, 2*pi-periodic kicking potential.

    kind is one of "sine", "triangle" or "table".  Table potentials hold
    their samples on the uniform grid x_i = -pi + 2*pi*i/n and are
    evaluated through the trigonometric interpolant of those samples.
    Instances are immutable; the mean-square-force cache is the only
    internal state and is filled lazily.
    """

    kind: str
    samples: np.ndarray | None = None
    symmetry_tol: float | None = SYMMETRY_TOL
    amplitude: float = 1.0
    _harmonics: tuple[np.ndarray, np.ndarray] | None = field(
        init=False, default=None, repr=False
    )
    _msf_cache: dict = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("sine", "triangle", "table"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.amplitude != 1.0:
            raise ValueError("potential amplitude is fixed to 1; scale K instead")
        if self.kind == "table":
            if self.samples is None:
                raise ValueError("table potential requires samples")
            samples = np.asarray(self.samples, dtype=float)
            if samples.ndim != 1 or samples.size < 16 or samples.size % 2:
                raise ValueError("table potential needs an even 1-d grid of >= 16 samples")
            object.__setattr__(self, "samples", samples)
            if self.symmetry_tol is not None:
                _check_table_symmetries(samples, self.symmetry_tol)
            object.__setattr__(self, "_harmonics", _table_harmonics(samples))
        elif self.samples is not None:
            raise ValueError(f"{self.kind} potential takes no samples")

    # -- evaluation ---------------------------------------------------

    def value(self, x):
        """V(x), vectorized over x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "sine":
            return np.sin(x)
        if self.kind == "triangle":
            # odd triangle wave, peak +1 at x = pi/2, slope +-2/pi
            return _TRIANGLE_SLOPE * np.arcsin(np.sin(x))
        return _eval_harmonics(self._harmonics, x, derivative=False)

    __call__ = value

    def force(self, x):
        """F(x) = -dV/dx; triangle corners return the mean of both slopes."""
        x = np.asarray(x, dtype=float)
        if self.kind == "sine":
            return -np.cos(x)
        if self.kind == "triangle":
            c = np.cos(x)
            out = -_TRIANGLE_SLOPE * np.sign(c)
            return np.where(np.abs(c) < 1e-12, 0.0, out)
        return -_eval_harmonics(self._harmonics, x, derivative=True)

    def mean_square_force(self, quadrature_points: int = 4096) -> float:
        """<F^2> = (1/2pi) integral F(x)^2 dx by midpoint quadrature.

        The midpoint grid never hits the triangle corners, so piecewise
        constant |F| integrates exactly.  Results are cached per grid size.
        """
        n = int(quadrature_points)
        if n < 16 or n % 2:
            raise ValueError("quadrature_points must be even and >= 16")
        if n not in self._msf_cache:
            x = -np.pi + TWO_PI * (np.arange(n) + 0.5) / n
            self._msf_cache[n] = float(np.mean(self.force(x) ** 2))
        return self._msf_cache[n]

    def sample(self, n: int) -> np.ndarray:
        """Exact samples on the uniform grid x_i = -pi + 2*pi*i/n."""
        if self.kind == "table":
            return _resample_harmonics(self._harmonics, n)
        return self.value(-np.pi + TWO_PI * np.arange(n) / n)

    @property
    def smooth(self) -> bool:
        """True when V is infinitely differentiable (no corners)."""
        return self.kind != "triangle"

    @property
    def max_slope(self) -> float:
        """max |dV/dx|, used for truncation heuristics."""
        if self.kind == "sine":
            return 1.0
        if self.kind == "triangle":
            return _TRIANGLE_SLOPE
        n = max(256, 4 * self.samples.size)
        x = -np.pi + TWO_PI * np.arange(n) / n
        return float(np.max(np.abs(self.force(x))))

    def __eq__(self, other):
        if not isinstance(other, PotentialSpec):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.kind != "table":
            return True
        return self.samples.shape == other.samples.shape and bool(
            np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


def sine_potential() -> PotentialSpec:
    """The reference potential V(x) = sin(x)."""
    return PotentialSpec("sine")


def triangle_potential() -> PotentialSpec:
    """Odd unit triangle wave; its force is piecewise constant (+-2/pi)."""
    return PotentialSpec("triangle")


def table_potential(samples, symmetry_tol: float | None = SYMMETRY_TOL) -> PotentialSpec:
    """Potential from samples on the uniform grid x_i = -pi + 2*pi*i/n.

    Pass symmetry_tol=None to skip the construction-time symmetry gate
    (used by diagnostics that want a failing SymmetryReport instead).
    """
    return PotentialSpec("table", samples=np.asarray(samples, dtype=float),
                         symmetry_tol=symmetry_tol)


def load_table_potential(path, symmetry_tol: float | None = SYMMETRY_TOL) -> PotentialSpec:
    """Load a two-column text table (index, value) on a power-of-two grid."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (index, value)")
    idx = data[:, 0]
    if not np.array_equal(idx, np.arange(len(idx))):
        raise ValueError(f"{path}: first column must be 0..n-1 in order")
    n = len(idx)
    if n < 16 or n & (n - 1):
        raise ValueError(f"{path}: grid size must be a power of two >= 16, got {n}")
    return table_potential(data[:, 1], symmetry_tol=symmetry_tol)


def validate_symmetries(potential: PotentialSpec, grid_points: int = 1024,
                        tol: float = SYMMETRY_TOL) -> SymmetryReport:
    """Measure periodicity, oddness and half-period antisymmetry violations.

    Returns a report (never raises) so callers can refuse a run with a
    readable message.  Oddness and half-period checks use exact index
    arithmetic on the evaluation grid; periodicity compares V(x) with
    V(x + 2*pi) evaluated literally.
    """
    m = int(grid_points)
    if m < 64 or m % 2:
        raise ValueError("grid_points must be even and >= 64")
    x = -np.pi + TWO_PI * np.arange(m) / m
    v = np.asarray(potential.value(x), dtype=float)
    periodicity = float(np.max(np.abs(potential.value(x + TWO_PI) - v)))
    # -x_j is the grid point (M - j) mod M; x_j + pi is (j + M/2) mod M
    oddness = float(np.max(np.abs(v + v[(-np.arange(m)) % m])))
    half_period = float(np.max(np.abs(v + np.roll(v, -(m // 2)))))
    return SymmetryReport(periodicity, oddness, half_period, tol, m)


# -- table internals ------------------------------------------------------


def _check_table_symmetries(samples: np.ndarray, tol: float) -> None:
    n = samples.size
    odd = float(np.max(np.abs(samples + samples[(-np.arange(n)) % n])))
    half = float(np.max(np.abs(samples + np.roll(samples, -(n // 2)))))
    if max(odd, half) >= tol:
        raise SymmetryError(
            f"table potential violates required symmetries "
            f"(oddness {odd:.3g}, half-period {half:.3g}, tol {tol:g})"
        )


def _table_harmonics(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Harmonics (k, c_k) of the interpolant V(x) = Re sum c_k e^{ik(x+pi)}.

    The Nyquist coefficient of an even-length grid is split between +-n/2
    so the interpolant is real for any real table.
    """
    n = samples.size
    raw = np.fft.fft(samples) / n
    ks = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    nyq = n // 2
    ks = np.concatenate([ks, [nyq]])
    cs = np.concatenate([raw, [0.5 * raw[nyq]]])
    cs[nyq] = 0.5 * raw[nyq]  # raw index nyq holds k = -n/2 after fftfreq
    ks[nyq] = -nyq
    return ks, cs


def _eval_harmonics(harmonics, x, derivative: bool) -> np.ndarray:
    ks, cs = harmonics
    coeff = cs * (1j * ks) if derivative else cs
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape, dtype=float)
    # chunked to keep the phase matrix modest for large diagnostic grids
    step = max(1, 2**22 // max(len(ks), 1))
    for i in range(0, xs.size, step):
        chunk = xs.flat[i : i + step]
        phases = np.exp(1j * np.outer(chunk + np.pi, ks))
        out.flat[i : i + step] = (phases @ coeff).real
    return out[()] if not scalar else float(out[0])


def _resample_harmonics(harmonics, n: int) -> np.ndarray:
    ks, cs = harmonics
    if n < 2 * int(np.max(np.abs(ks))) + 2:
        xs = -np.pi + TWO_PI * np.arange(n) / n
        return _eval_harmonics(harmonics, xs, derivative=False)
    spectrum = np.zeros(n, dtype=complex)
    np.add.at(spectrum, ks % n, cs)
    return np.fft.ifft(spectrum * n).real
