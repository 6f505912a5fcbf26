"""Phase-space propagation of ladder states as stacks of momentum slices.

The Wigner function of a momentum-ladder state is singular in momentum: it
lives on the half-ladder p = m*kbar/2 as a stack of walls, each carrying a
real, 2*pi-periodic weight function w_m(x).  The delta factors are absorbed
into the slice index, so momentum integrals become weighted sums and the
representation is exact.

One period of the dynamics maps the stack by

    shear    : w_m(x) <- w_m(x - m*kbar/2)       (free drift of each wall)
    displace : w_m(x) <- sum_l S_l(kappa; x) w_{m+l}(x)

with the position-resolved kernel coefficients of the kick.  Slices of odd
m are interference terms; their position average vanishes identically, and
they sit half way between the classical momenta like the fringes of a
superposition state.

Shears are spectral (phase ramps on the Fourier transform in x), which is
exact for the band-limited weights of ladder states, and exact in integer
arithmetic when kbar/(4 pi) is a declared rational.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import fftconvolve

from .coefficients import TruncationError, WignerKernel
from .state_map import LadderState

TWO_PI = 2.0 * np.pi

LEAK_BUDGET = 1e-8
SLICE_TRIM_CUTOFF = 1e-15
_DIRECT_TAP_LIMIT = 256


@dataclass(frozen=True, eq=False)
class WignerField:
    """Slice weights w_m(x_j) on the half-ladder momenta p_m = m*kbar/2.

    slices[i, j] holds slice m = i + m_lo at x_j = -pi + 2*pi*j/M.  A unit
    ladder state integrates to one: sum_m (2*pi/M) sum_j w_m[j] = 1.
    leaked_weight accumulates probability dropped by slice caps.
    """

    slices: np.ndarray
    m_lo: int
    grid: np.ndarray
    kbar: float
    kicks_applied: int = 0
    leaked_weight: float = 0.0
    kbar_ratio: tuple[int, int] | None = None

    @property
    def grid_points(self) -> int:
        return self.grid.size

    @property
    def m_hi(self) -> int:
        return self.m_lo + self.slices.shape[0] - 1

    @property
    def slice_indices(self) -> np.ndarray:
        return np.arange(self.m_lo, self.m_hi + 1)

    def slice(self, m: int) -> np.ndarray:
        """Weight function of slice m (zeros outside the stored stack)."""
        if m < self.m_lo or m > self.m_hi:
            return np.zeros(self.grid_points)
        return self.slices[m - self.m_lo]

    def total_weight(self) -> float:
        return float(self.slices.sum() * TWO_PI / self.grid_points)


def init_wigner(grid_points: int, slice_radius: int, kbar: float,
                kbar_ratio: tuple[int, int] | None = None) -> WignerField:
    """The phase-space start: a single uniform wall 1/(2*pi) at p = 0."""
    m = int(grid_points)
    if m < 8 or m & (m - 1):
        raise ValueError("grid_points must be a power of two >= 8")
    if slice_radius < 0:
        raise ValueError("slice_radius must be >= 0")
    if kbar_ratio is not None:
        r, s = kbar_ratio
        kbar = 4.0 * np.pi * r / s
    grid = -np.pi + TWO_PI * np.arange(m) / m
    slices = np.zeros((2 * slice_radius + 1, m))
    slices[slice_radius, :] = 1.0 / TWO_PI
    return WignerField(slices, -slice_radius, grid, float(kbar), 0, 0.0, kbar_ratio)


def free_shear(field: WignerField) -> WignerField:
    """Translate every slice by its own momentum: w_m(x) <- w_m(x - m*kbar/2)."""
    m = field.grid_points
    ms = field.slice_indices
    if field.kbar_ratio is not None:
        r, s = field.kbar_ratio
        shift_frac = ((ms.astype(np.int64) * r) % s) / s  # shift / (2*pi)
    else:
        shift_frac = np.mod(ms * field.kbar / 2.0, TWO_PI) / TWO_PI
    freqs = np.fft.fftfreq(m, d=1.0 / m)
    ramp = np.exp(-2j * np.pi * np.outer(shift_frac, freqs))
    # Nyquist bin: keep the translated field real (cosine convention)
    ramp[:, m // 2] = np.cos(np.pi * m * shift_frac)
    sheared = np.fft.ifft(np.fft.fft(field.slices, axis=1) * ramp, axis=1).real
    return replace(field, slices=sheared)


def kick_displace(field: WignerField, kernel: WignerKernel, *,
                  max_slices: int | None = None,
                  leak_budget: float = LEAK_BUDGET) -> WignerField:
    """Momentum redistribution w'_m(x) = sum_l S_l(kappa; x) w_{m+l}(x).

    The stack widens by the kernel truncation on both sides; negligible
    slices are trimmed, and probability clipped by a max_slices cap is
    accumulated (error beyond leak_budget).
    """
    if kernel.grid_points != field.grid_points or not np.array_equal(
        kernel.grid, field.grid
    ):
        raise ValueError("kernel and field must share the position grid")
    trunc = kernel.truncation
    n_in = field.slices.shape[0]
    n_out = n_in + 2 * trunc
    taps = 2 * trunc + 1

    if taps <= _DIRECT_TAP_LIMIT:
        out = np.zeros((n_out, field.grid_points))
        for i, l in enumerate(range(-trunc, trunc + 1)):
            out[trunc - l : trunc - l + n_in] += kernel.values[:, i] * field.slices
    else:
        nfft = next_fast_len(n_out)
        stack = np.fft.fft(field.slices, nfft, axis=0)
        taps_rev = np.fft.fft(kernel.values[:, ::-1].T, nfft, axis=0)
        out = np.fft.ifft(stack * taps_rev, axis=0).real[:n_out]

    m_lo = field.m_lo - trunc
    out, m_lo, trimmed = _trim_slices(out, m_lo, field.grid_points)
    leaked = field.leaked_weight + trimmed
    if max_slices is not None and out.shape[0] > max_slices:
        excess = out.shape[0] - max_slices
        lo_cut = excess // 2
        hi_cut = excess - lo_cut
        clipped = np.abs(out[:lo_cut]).sum() + np.abs(out[out.shape[0] - hi_cut :]).sum()
        leaked += float(clipped) * TWO_PI / field.grid_points
        out = out[lo_cut : out.shape[0] - hi_cut]
        m_lo += lo_cut
    if leaked > leak_budget:
        raise TruncationError(
            f"kick pushed weight {leaked:.3g} past the slice stack "
            f"(budget {leak_budget:g}); increase max_slices",
            tail=leaked,
        )
    return WignerField(out, m_lo, field.grid, field.kbar, field.kicks_applied,
                       leaked, field.kbar_ratio)


def wigner_floquet_step(field: WignerField, kernel: WignerKernel, *,
                        max_slices: int | None = None,
                        leak_budget: float = LEAK_BUDGET) -> WignerField:
    """One period: shear, then displace."""
    out = kick_displace(free_shear(field), kernel,
                        max_slices=max_slices, leak_budget=leak_budget)
    return replace(out, kicks_applied=field.kicks_applied + 1)


@dataclass(frozen=True)
class WignerMarginals:
    """Momentum weights per slice, position density, and mean energy."""

    momentum_weights: dict[int, float]
    position_density: np.ndarray
    energy: float


def marginals_and_energy(field: WignerField) -> WignerMarginals:
    """Integrate the stack: per-slice weight, position density, energy.

    The position integral eliminates the odd (interference) slices, so the
    momentum marginal lives on integer multiples of kbar up to numerical
    residue.
    """
    weights = field.slices.sum(axis=1) * TWO_PI / field.grid_points
    momenta = field.slice_indices * field.kbar / 2.0
    energy = float(np.sum(0.5 * momenta**2 * weights))
    density = field.slices.sum(axis=0)
    return WignerMarginals(
        {int(m): float(w) for m, w in zip(field.slice_indices, weights)},
        density,
        energy,
    )


def wigner_from_state(state: LadderState, grid_points: int) -> WignerField:
    """Exact phase-space stack of a ladder state.

    Slice m carries (1/2*pi) sum_{l+l'=m} c_l conj(c_{l'}) e^{i(l-l')x}:
    the bilinear pairing of amplitudes whose momenta average to m*kbar/2.
    The slice values are exact point evaluations of those trigonometric
    sums on the grid (no band limit is assumed), which makes this the
    cross-representation oracle for the propagated field.
    """
    m = int(grid_points)
    if m < 8 or m & (m - 1):
        raise ValueError("grid_points must be a power of two >= 8")
    trunc = state.truncation
    grid = -np.pi + TWO_PI * np.arange(m) / m
    dressed = state.amplitudes[:, None] * np.exp(
        1j * np.outer(state.orders, grid)
    )
    stack = fftconvolve(dressed, np.conj(dressed), mode="full", axes=0)
    slices = stack.real / TWO_PI
    return WignerField(slices, -2 * trunc, grid, state.kbar,
                       state.kicks_applied, 0.0, state.kbar_ratio)


def compare_with_state(field: WignerField, state: LadderState) -> float:
    """Max absolute deviation between the field and the state-built stack."""
    if field.kicks_applied != state.kicks_applied:
        raise ValueError(
            f"field has {field.kicks_applied} kicks but state has "
            f"{state.kicks_applied}; compare like with like"
        )
    if field.kbar != state.kbar:
        raise ValueError("field and state live on different ladders")
    oracle = wigner_from_state(state, field.grid_points)
    lo = min(field.m_lo, oracle.m_lo)
    hi = max(field.m_hi, oracle.m_hi)
    dev = 0.0
    for m in range(lo, hi + 1):
        dev = max(dev, float(np.max(np.abs(field.slice(m) - oracle.slice(m)))))
    return dev


def _trim_slices(slices: np.ndarray, m_lo: int, grid_points: int):
    """Drop negligible edge slices; returns (stack, m_lo, lost weight)."""
    big = np.nonzero(np.max(np.abs(slices), axis=1) > SLICE_TRIM_CUTOFF)[0]
    if big.size == 0:
        center = slices.shape[0] // 2
        return slices[center : center + 1].copy(), m_lo + center, 0.0
    lo, hi = int(big[0]), int(big[-1])
    if lo == 0 and hi == slices.shape[0] - 1:
        return slices, m_lo, 0.0
    dropped = np.abs(slices[:lo]).sum() + np.abs(slices[hi + 1 :]).sum()
    lost = float(dropped) * TWO_PI / grid_points
    return slices[lo : hi + 1].copy(), m_lo + lo, lost
