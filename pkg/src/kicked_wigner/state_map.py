"""Stroboscopic evolution of the momentum-ladder state.

Starting from the zero-momentum eigenstate, one period of the dynamics is
the unitary pair

    free drift : c_l <- exp(-i l^2 kbar / 2) c_l
    kick       : c_m <- sum_l S_l(kappa) c_{m+l}

on amplitudes attached to the discrete momenta p = l*kbar.  The kick is a
correlation of the amplitude array with the kick spectrum; it is evaluated
directly for small blocks and through FFTs for large ones, and the state
buffer grows on demand so long runs near localization stay cheap.

When kbar is an exact rational multiple 4*pi*r/s, the drift phases
exp(-2*pi*i*l^2*r/s) are computed with integer arithmetic, which keeps
resonant and anti-resonant runs free of argument-reduction roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve

from .coefficients import KickSpectrum, TruncationError

TWO_PI = 2.0 * np.pi

DIRECT_CONVOLUTION_LIMIT = 4096  # direct summation below this size product
TRIM_CUTOFF = 1e-16              # amplitudes below this are dropped from the buffer
TAIL_BUDGET = 1e-8


@dataclass(frozen=True, eq=False)
class LadderState:
    """Amplitudes c_l on the momentum ladder p = l*kbar.

    amplitudes[i] holds l = i - truncation; the array is always odd-length
    and centered on l = 0.  kbar_ratio, when set to (r, s), declares
    kbar = 4*pi*r/s exactly and enables exact drift phases.  tail_norm
    accumulates the probability discarded by buffer caps and trimming.
    """

    amplitudes: np.ndarray
    kbar: float
    kicks_applied: int = 0
    tail_norm: float = 0.0
    kbar_ratio: tuple[int, int] | None = None

    @property
    def truncation(self) -> int:
        return (self.amplitudes.size - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, l: int) -> complex:
        if abs(l) > self.truncation:
            return 0.0j
        return complex(self.amplitudes[l + self.truncation])


@dataclass(frozen=True)
class EnergyRecord:
    """Mean kinetic energy and truncation loss after a given kick."""

    kick_index: int
    energy: float
    tail_norm: float

    def __post_init__(self):
        if self.energy < 0:
            raise ValueError("energy must be non-negative")


def init_ladder(truncation: int, kbar: float,
                kbar_ratio: tuple[int, int] | None = None) -> LadderState:
    """The zero-momentum initial state c_l = delta_{l,0}."""
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if kbar_ratio is not None:
        r, s = kbar_ratio
        if s <= 0 or r <= 0:
            raise ValueError("kbar_ratio must be positive integers (r, s)")
        kbar = 4.0 * np.pi * r / s
    amplitudes = np.zeros(2 * truncation + 1, dtype=complex)
    amplitudes[truncation] = 1.0
    return LadderState(amplitudes, float(kbar), 0, 0.0, kbar_ratio)


def free_step(state: LadderState) -> LadderState:
    """Drift phases exp(-i l^2 kbar / 2); exact for rational kbar/(4 pi)."""
    ls = state.orders
    if state.kbar_ratio is not None:
        r, s = state.kbar_ratio
        frac = (ls.astype(np.int64) ** 2 * r) % s
        phases = np.exp(-2j * np.pi * frac / s)
    else:
        phases = np.exp(-1j * np.mod(ls.astype(float) ** 2 * (state.kbar / 2.0), TWO_PI))
    return replace(state, amplitudes=state.amplitudes * phases)


def kick_step(state: LadderState, spectrum: KickSpectrum, *,
              max_truncation: int | None = None,
              tail_budget: float = TAIL_BUDGET) -> LadderState:
    """Apply the kick c_m <- sum_l S_l c_{m+l}.

    The support widens by the spectrum truncation; negligible edge
    amplitudes are trimmed and, if max_truncation caps the buffer, the
    clipped probability is added to tail_norm (error beyond tail_budget).
    """
    kicked = _correlate(state.amplitudes, spectrum.coefficients)
    kicked, lost = _trim(kicked)
    tail = state.tail_norm + lost
    if max_truncation is not None and (kicked.size - 1) // 2 > max_truncation:
        trunc = (kicked.size - 1) // 2
        keep = slice(trunc - max_truncation, trunc + max_truncation + 1)
        clipped = np.sum(np.abs(kicked) ** 2) - np.sum(np.abs(kicked[keep]) ** 2)
        tail += float(clipped)
        kicked = kicked[keep]
    if tail > tail_budget:
        raise TruncationError(
            f"kick pushed probability {tail:.3g} past the ladder buffer "
            f"(budget {tail_budget:g}); increase max_truncation",
            tail=tail,
        )
    return LadderState(kicked, state.kbar, state.kicks_applied + 1, tail,
                       state.kbar_ratio)


def floquet_evolve(state: LadderState, spectrum: KickSpectrum, n_kicks: int, *,
                   max_truncation: int | None = None,
                   tail_budget: float = TAIL_BUDGET,
                   ) -> tuple[LadderState, list[EnergyRecord]]:
    """Apply (kick o free drift) n_kicks times, recording E after each kick."""
    if n_kicks < 0:
        raise ValueError("n_kicks must be >= 0")
    records: list[EnergyRecord] = []
    for _ in range(n_kicks):
        state = kick_step(free_step(state), spectrum,
                          max_truncation=max_truncation, tail_budget=tail_budget)
        records.append(EnergyRecord(state.kicks_applied, mean_energy(state),
                                    state.tail_norm))
    return state, records


def momentum_distribution(state: LadderState) -> dict[int, float]:
    """Weights |c_l|^2 keyed by ladder index l; sums to the state norm."""
    weights = np.abs(state.amplitudes) ** 2
    return {int(l): float(w) for l, w in zip(state.orders, weights)}


def mean_energy(state: LadderState) -> float:
    """E = (1/2) sum (l kbar)^2 |c_l|^2."""
    ls = state.orders.astype(float)
    return float(0.5 * state.kbar**2 * np.sum(ls**2 * np.abs(state.amplitudes) ** 2))


def fidelity(a: LadderState, b: LadderState) -> float:
    """|<a|b>|; the global phase is deliberately ignored."""
    if a.kbar != b.kbar:
        raise ValueError("states live on different ladders")
    ta, tb = a.truncation, b.truncation
    t = min(ta, tb)
    inner = np.vdot(a.amplitudes[ta - t : ta + t + 1],
                    b.amplitudes[tb - t : tb + t + 1])
    return float(abs(inner))


# -- internals -------------------------------------------------------------


def _correlate(amplitudes: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """out_m = sum_l taps_l amplitudes_{m+l}, centered arrays in and out."""
    reversed_taps = taps[::-1]
    if amplitudes.size * taps.size <= DIRECT_CONVOLUTION_LIMIT:
        return np.convolve(amplitudes, reversed_taps)
    return fftconvolve(amplitudes, reversed_taps)


def _trim(amplitudes: np.ndarray) -> tuple[np.ndarray, float]:
    """Symmetrically drop negligible edges; returns (array, lost probability)."""
    trunc = (amplitudes.size - 1) // 2
    big = np.abs(amplitudes) > TRIM_CUTOFF
    if not np.any(big):
        return amplitudes[trunc : trunc + 1].copy(), 0.0
    edges = np.nonzero(big)[0]
    reach = max(abs(int(edges[0]) - trunc), abs(int(edges[-1]) - trunc))
    if reach >= trunc:
        return amplitudes, 0.0
    keep = slice(trunc - reach, trunc + reach + 1)
    lost = float(np.sum(np.abs(amplitudes) ** 2) - np.sum(np.abs(amplitudes[keep]) ** 2))
    return amplitudes[keep].copy(), lost
