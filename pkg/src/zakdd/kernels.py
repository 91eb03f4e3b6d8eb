"""Closed-form effective-channel taps for all six filter/scheme pairs.

The effective channel is the twisted-convolution cascade of the receive
filter, the physical channel, and the transmit filter, sampled on the
information lattice. For identical filtering with the sinc filter the
taps are a large-frame approximation; the other five combinations are
exact. Every expression here is validated against numerical integration
of the defining cascade in :mod:`zakdd.oracle`.

All builders broadcast: path arrays may carry leading batch dimensions,
and (k, l) may be arrays, so whole tap tables (or batches of tables for
Monte Carlo sweeps) evaluate in one shot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PathSet
from .errors import InvalidParameterError, WindowCoverageError
from .filters import FilterConfig, FilterFamily, RxScheme
from .grid import DDGrid

#: Taps with |h_eff| below nothing are kept; tables are dense over the window.
_KINDS = {
    (FilterFamily.SINC, RxScheme.IDENTICAL),
    (FilterFamily.SINC, RxScheme.MATCHED),
    (FilterFamily.SINC, RxScheme.CHANNEL_MATCHED),
    (FilterFamily.GAUSSIAN, RxScheme.IDENTICAL),
    (FilterFamily.GAUSSIAN, RxScheme.MATCHED),
    (FilterFamily.GAUSSIAN, RxScheme.CHANNEL_MATCHED),
}


def default_window(grid: DDGrid) -> tuple[int, int, int, int]:
    """Window (k_min, k_max, l_min, l_max) serving channel-matrix assembly
    with delay/Doppler wrap indices in [-2, 2]."""
    return (-(3 * grid.M - 1), 3 * grid.M - 1, -(3 * grid.N - 1), 3 * grid.N - 1)


@dataclass(frozen=True)
class EffChannel:
    """Dense effective-channel taps h_eff[k, l] over an integer window."""

    taps: np.ndarray  # shape (k_max-k_min+1, l_max-l_min+1)
    k_min: int
    l_min: int

    @property
    def k_max(self) -> int:
        return self.k_min + self.taps.shape[0] - 1

    @property
    def l_max(self) -> int:
        return self.l_min + self.taps.shape[1] - 1

    @property
    def window(self) -> tuple[int, int, int, int]:
        return (self.k_min, self.k_max, self.l_min, self.l_max)

    def covers(self, k_min: int, k_max: int, l_min: int, l_max: int) -> bool:
        return (self.k_min <= k_min and self.k_max >= k_max
                and self.l_min <= l_min and self.l_max >= l_max)

    def __getitem__(self, kl) -> complex:
        k, l = kl
        if not self.covers(k, k, l, l):
            raise WindowCoverageError(f"tap ({k}, {l}) outside window {self.window}")
        return complex(self.taps[k - self.k_min, l - self.l_min])

    def gather(self, k, l) -> np.ndarray:
        """Vectorized lookup over integer index arrays (must be in-window)."""
        k = np.asarray(k)
        l = np.asarray(l)
        if k.size and (k.min() < self.k_min or k.max() > self.k_max
                       or l.min() < self.l_min or l.max() > self.l_max):
            raise WindowCoverageError(
                f"requested taps outside window {self.window}"
            )
        return self.taps[k - self.k_min, l - self.l_min]

    def to_csv(self, file) -> None:
        """Write ``k,l,re,im`` rows for every stored tap."""
        own = isinstance(file, (str, bytes))
        fh = open(file, "w") if own else file
        try:
            fh.write("k,l,re,im\n")
            for i in range(self.taps.shape[0]):
                for j in range(self.taps.shape[1]):
                    v = self.taps[i, j]
                    fh.write(f"{self.k_min + i},{self.l_min + j},{v.real:.17g},{v.imag:.17g}\n")
        finally:
            if own:
                fh.close()


def _path_axes(paths_or_arrays, pairwise: bool):
    """Return gains/delays/dopplers shaped (..., 1, 1, P) (or pair arrays)."""
    if isinstance(paths_or_arrays, PathSet):
        g, d, f = paths_or_arrays.gains, paths_or_arrays.delays, paths_or_arrays.dopplers
    else:
        g, d, f = paths_or_arrays
        g = np.asarray(g, dtype=np.complex128)
        d = np.asarray(d, dtype=float)
        f = np.asarray(f, dtype=float)
    if not pairwise:
        return g[..., None, None, :], d[..., None, None, :], f[..., None, None, :]
    # pairwise quantities for channel-matched filtering: conj(h_i) h_j,
    # tau_ij = tau_i - tau_j, nu_ij = nu_i - nu_j, flattened over (i, j)
    hh = np.conj(g)[..., :, None] * g[..., None, :]
    t_ij = d[..., :, None] - d[..., None, :]
    n_ij = f[..., :, None] - f[..., None, :]
    n_sum = f[..., :, None] + f[..., None, :]
    flat = hh.shape[:-2] + (hh.shape[-2] * hh.shape[-1],)
    return (hh.reshape(flat)[..., None, None, :],
            t_ij.reshape(flat)[..., None, None, :],
            n_ij.reshape(flat)[..., None, None, :],
            n_sum.reshape(flat)[..., None, None, :])


def _axes(grid: DDGrid, k, l):
    """Index arrays -> lattice coordinates shaped for broadcasting."""
    k = np.atleast_1d(np.asarray(k))
    l = np.atleast_1d(np.asarray(l))
    xk = (k * grid.delay_step)[:, None, None]
    yl = (l * grid.doppler_step)[None, :, None]
    kl = (k[:, None] * l[None, :])[:, :, None]
    return k, l, xk, yl, kl


def taps_sinc_identical(grid: DDGrid, paths, k, l) -> np.ndarray:
    """Approximate taps for identical filtering with the sinc filter.

    Valid in the crystalline regime (channel spread well inside the DD
    periods) for large frames; accuracy against the exact integral is
    pinned by the acceptance suite.
    """
    g, d, f = _path_axes(paths, pairwise=False)
    _, _, xk, yl, _ = _axes(grid, k, l)
    B, T = grid.B, grid.T

    def p_ik(freq):
        absf = np.abs(freq)
        ind = absf < B
        return np.where(
            ind,
            np.exp(1j * np.pi * freq * (xk + d))
            * ((B - absf) / B ** 2)
            * np.sinc((B - absf) * (xk - d)),
            0.0,
        )

    terms = (g * np.exp(-2j * np.pi * d * f)
             * np.sinc(T * (yl - f)) * (p_ik(yl) + p_ik(f)))
    return (B / 2.0) * terms.sum(axis=-1)


def taps_gauss_identical(grid: DDGrid, cfg: FilterConfig, paths, k, l) -> np.ndarray:
    """Exact taps for identical filtering with the Gaussian filter."""
    g, d, f = _path_axes(paths, pairwise=False)
    _, _, xk, yl, _ = _axes(grid, k, l)
    at_b2 = cfg.alpha_tau * grid.B ** 2
    an_t2 = cfg.alpha_nu * grid.T ** 2
    denom = 2.0 * at_b2 + np.pi ** 2 / (2.0 * an_t2)
    pref = np.sqrt(2.0 * at_b2 / denom)
    # the squared numerator is an algebraic complex square, no branch cut
    num = 2.0 * at_b2 * (xk + d) + 1j * np.pi * (yl + f)
    g_exp = (at_b2 * (xk ** 2 + d ** 2)
             + 2j * np.pi * f * d
             + 0.5 * an_t2 * (yl - f) ** 2
             - num ** 2 / (4.0 * denom))
    return pref * (g * np.exp(-g_exp)).sum(axis=-1)


def taps_sinc_matched(grid: DDGrid, paths, k, l) -> np.ndarray:
    """Exact taps for matched filtering with the sinc filter."""
    g, d, f = _path_axes(paths, pairwise=False)
    _, _, xk, yl, kl = _axes(grid, k, l)
    B, T, mn = grid.B, grid.T, grid.mn
    absx = np.abs(xk)
    absf = np.abs(f)
    ind = (absx < T) & (absf < B)
    phase = np.exp(1j * np.pi * (kl / mn - d * f))
    terms = np.where(
        ind,
        phase * ((T - absx) / T) * ((B - absf) / B)
        * np.sinc((B - absf) * (xk - d))
        * np.sinc((T - absx) * (yl - f)),
        0.0,
    )
    return (g * terms).sum(axis=-1)


def taps_gauss_matched(grid: DDGrid, cfg: FilterConfig, paths, k, l) -> np.ndarray:
    """Exact taps for matched filtering with the Gaussian filter."""
    g, d, f = _path_axes(paths, pairwise=False)
    _, _, xk, yl, kl = _axes(grid, k, l)
    at_b2 = cfg.alpha_tau * grid.B ** 2
    an_t2 = cfg.alpha_nu * grid.T ** 2
    phase = np.exp(1j * np.pi * (kl / grid.mn - d * f))
    env = np.exp(-0.5 * at_b2 * (xk - d) ** 2
                 - 0.5 * an_t2 * (yl - f) ** 2
                 - 0.5 * np.pi ** 2 * (xk ** 2 / an_t2 + f ** 2 / at_b2))
    return (g * phase * env).sum(axis=-1)


def taps_sinc_chmatched(grid: DDGrid, paths, k, l) -> np.ndarray:
    """Exact taps for channel-matched filtering with the sinc filter.

    Double path sum: cost O(P^2) per tap.
    """
    hh, t_ij, n_ij, n_sum = _path_axes(paths, pairwise=True)
    _, _, xk, yl, kl = _axes(grid, k, l)
    B, T, mn = grid.B, grid.T, grid.mn
    absx = np.abs(xk)
    absn = np.abs(n_ij)
    ind = (absx < T) & (absn < B)
    phase = np.exp(1j * np.pi * (kl / mn + t_ij * n_sum))
    terms = np.where(
        ind,
        phase * ((B - absn) / B) * ((T - absx) / T)
        * np.sinc((B - absn) * (xk + t_ij))
        * np.sinc((T - absx) * (yl + n_ij)),
        0.0,
    )
    return (hh * terms).sum(axis=-1)


def taps_gauss_chmatched(grid: DDGrid, cfg: FilterConfig, paths, k, l) -> np.ndarray:
    """Exact taps for channel-matched filtering with the Gaussian filter."""
    hh, t_ij, n_ij, n_sum = _path_axes(paths, pairwise=True)
    _, _, xk, yl, kl = _axes(grid, k, l)
    at_b2 = cfg.alpha_tau * grid.B ** 2
    an_t2 = cfg.alpha_nu * grid.T ** 2
    phase = np.exp(1j * np.pi * (kl / grid.mn + t_ij * n_sum))
    env = np.exp(-0.5 * at_b2 * (xk + t_ij) ** 2
                 - 0.5 * an_t2 * (yl + n_ij) ** 2
                 - 0.5 * np.pi ** 2 * (xk ** 2 / an_t2 + n_ij ** 2 / at_b2))
    return (hh * phase * env).sum(axis=-1)


def taps_for(kind, grid: DDGrid, cfg: FilterConfig | None, paths, k, l) -> np.ndarray:
    """Dispatch to the (family, scheme) tap builder; broadcasts over k, l."""
    family, scheme = kind
    if (family, scheme) not in _KINDS:
        raise InvalidParameterError(f"unknown combination {kind!r}")
    if family is FilterFamily.GAUSSIAN and (cfg is None or cfg.family is not family):
        raise InvalidParameterError("Gaussian combinations need a Gaussian FilterConfig")
    if family is FilterFamily.SINC:
        if scheme is RxScheme.IDENTICAL:
            return taps_sinc_identical(grid, paths, k, l)
        if scheme is RxScheme.MATCHED:
            return taps_sinc_matched(grid, paths, k, l)
        return taps_sinc_chmatched(grid, paths, k, l)
    if scheme is RxScheme.IDENTICAL:
        return taps_gauss_identical(grid, cfg, paths, k, l)
    if scheme is RxScheme.MATCHED:
        return taps_gauss_matched(grid, cfg, paths, k, l)
    return taps_gauss_chmatched(grid, cfg, paths, k, l)


# Point evaluations with the module-level names used throughout the docs.

def heff_sinc_identical(grid: DDGrid, paths: PathSet, k: int, l: int) -> complex:
    return complex(taps_sinc_identical(grid, paths, k, l)[0, 0])


def heff_gauss_identical(grid: DDGrid, cfg: FilterConfig, paths: PathSet, k: int, l: int) -> complex:
    return complex(taps_gauss_identical(grid, cfg, paths, k, l)[0, 0])


def heff_sinc_matched(grid: DDGrid, paths: PathSet, k: int, l: int) -> complex:
    return complex(taps_sinc_matched(grid, paths, k, l)[0, 0])


def heff_gauss_matched(grid: DDGrid, cfg: FilterConfig, paths: PathSet, k: int, l: int) -> complex:
    return complex(taps_gauss_matched(grid, cfg, paths, k, l)[0, 0])


def heff_sinc_chmatched(grid: DDGrid, paths: PathSet, k: int, l: int) -> complex:
    return complex(taps_sinc_chmatched(grid, paths, k, l)[0, 0])


def heff_gauss_chmatched(grid: DDGrid, cfg: FilterConfig, paths: PathSet, k: int, l: int) -> complex:
    return complex(taps_gauss_chmatched(grid, cfg, paths, k, l)[0, 0])


def heff_table(kind, grid: DDGrid, cfg: FilterConfig | None, paths,
               window: tuple[int, int, int, int] | None = None) -> EffChannel:
    """Evaluate a dense tap table over the window (default: the full range
    needed by channel-matrix assembly)."""
    if window is None:
        window = default_window(grid)
    k_min, k_max, l_min, l_max = window
    if k_min > k_max or l_min > l_max:
        raise InvalidParameterError(f"bad window {window}")
    ks = np.arange(k_min, k_max + 1)
    ls = np.arange(l_min, l_max + 1)
    taps = taps_for(kind, grid, cfg, paths, ks, ls)
    return EffChannel(taps=taps, k_min=k_min, l_min=l_min)
