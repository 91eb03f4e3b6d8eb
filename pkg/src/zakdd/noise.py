"""Closed-form noise covariances for the six filter/scheme pairs.

Filtered DD noise sampled on the lattice is colored (except for the
identical-sinc approximation, which is white). Every constructor returns
an MN x MN Hermitian PSD matrix with its lower Cholesky factor attached.

Assembly works in (k, q) space: each covariance is
``pref * sum_{q1,q2} conj(phi[q1,l1]) G[(k1,q1),(k2,q2)] phi[q2,l2]``
with ``phi[q,l] = exp(2j pi q l / N)`` and a G that factors into per-side
weights times a function of the delay offset s2 - s1 alone. The offsets
live on the uniform grid tau_p/M, so the coupling term is a Toeplitz
gather and whole matrices assemble in milliseconds. The same builders
broadcast over leading batch dimensions of the path gains for Monte
Carlo use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PathSet
from .errors import InvalidParameterError, NumericalError
from .filters import FilterConfig, FilterFamily, RxScheme
from .grid import DDGrid


@dataclass(frozen=True)
class QRange:
    """Summation range for the delay-wrap index in the covariance sums."""

    q_lo: int = -20
    q_hi: int = 20

    def __post_init__(self):
        if self.q_lo > self.q_hi:
            raise InvalidParameterError("q_lo must be <= q_hi")

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.q_lo, self.q_hi + 1)


DEFAULT_QRANGE = QRange()


@dataclass(frozen=True)
class NoiseCov:
    """Covariance C with its lower Cholesky factor R (C = R R^H)."""

    C: np.ndarray
    R: np.ndarray
    N0: float

    @classmethod
    def build(cls, C: np.ndarray, N0: float) -> "NoiseCov":
        return cls(C=C, R=cholesky_psd(C), N0=N0)


def cholesky_psd(C: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with the documented PSD repair.

    Finite q-sum truncation can leave eigenvalues a hair below zero; if the
    most negative one is above -1e-9 * trace/MN, jitter of 1e-12 * trace/MN
    is added and the factorization retried. A zero matrix factors to zero.
    """
    n = C.shape[0]
    tr = float(np.trace(C).real)
    if tr == 0.0 and not C.any():
        return np.zeros_like(C)
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    scale = tr / n
    min_eig = float(np.linalg.eigvalsh(C).min())
    if min_eig < -1e-9 * scale:
        raise NumericalError(
            f"covariance is indefinite (min eigenvalue {min_eig:.3e}, trace/MN {scale:.3e})"
        )
    jitter = 1e-12 * scale
    try:
        return np.linalg.cholesky(C + jitter * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Cholesky failed even after PSD jitter") from exc


def _phase_matrix(grid: DDGrid, qs: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * np.outer(qs, np.arange(grid.N)) / grid.N)


def _offsets(grid: DDGrid, qs: np.ndarray) -> np.ndarray:
    """Delay offsets s[k, q] = (k/M + q) tau_p."""
    return (np.arange(grid.M)[:, None] / grid.M + qs[None, :]) * grid.tau_p


def _toeplitz_gather(grid: DDGrid, qs: np.ndarray):
    """Integer offset-difference index d = (k2-k1) + (q2-q1)*M as a
    [(k1,q1),(k2,q2)] table, plus the d-grid in seconds."""
    M = grid.M
    kq = (np.arange(M)[:, None] + qs[None, :] * M).reshape(-1)  # s * M / tau_p
    d_int = kq[None, :] - kq[:, None]
    d_min = d_int.min()
    d_vals = np.arange(d_min, d_int.max() + 1) * (grid.tau_p / M)
    return d_int - d_min, d_vals


def _fold_phases(grid: DDGrid, qs: np.ndarray, g4: np.ndarray) -> np.ndarray:
    """(…, M, Q, M, Q) -> (…, MN, MN) through the l-phases."""
    phi = _phase_matrix(grid, qs)
    cov = np.einsum("qa,...kqmr,rb->...kamb", np.conj(phi), g4, phi)
    return cov.reshape(cov.shape[:-4] + (grid.mn, grid.mn))


def rect_weight(s, T: float) -> np.ndarray:
    """rect(s/T): 1 inside, 0 outside, exactly 1/2 on |s| = T/2."""
    s = np.asarray(s, dtype=float)
    return (np.abs(s) < T / 2).astype(float) + 0.5 * (np.abs(s) == T / 2)


def _assemble_scalar(grid: DDGrid, qs: np.ndarray, row_w: np.ndarray,
                     phi_d: np.ndarray, pref: float) -> np.ndarray:
    """Covariance from per-side real weights and an offset-difference kernel."""
    idx, _ = _toeplitz_gather(grid, qs)
    w = row_w.reshape(-1)
    g = np.outer(w, w) * phi_d[idx]
    mq = grid.M, qs.size
    g4 = g.reshape(mq + mq)
    return pref * _fold_phases(grid, qs, g4)


def _assemble_pairwise(grid: DDGrid, qs: np.ndarray, gains, delays, dopplers,
                       phi_of_d, side_phase, pref) -> np.ndarray:
    """Channel-matched assembly: G = sum_ij conj-side_i x side_j x Phi_ij(d).

    ``phi_of_d(t_ij, tau_i, tau_j, n_i, n_j, d)`` evaluates the coupling
    kernel on the offset-difference grid; ``side_phase(n, s)`` the per-side
    modulation. Broadcasts over leading batch dimensions of ``gains``.
    """
    gains = np.asarray(gains, dtype=complex)
    delays = np.asarray(delays, dtype=float)
    dopplers = np.asarray(dopplers, dtype=float)
    idx, d_vals = _toeplitz_gather(grid, qs)
    s = _offsets(grid, qs).reshape(-1)
    batch = gains.shape[:-1]
    p = gains.shape[-1]
    nsq = s.size
    g = np.zeros(batch + (nsq, nsq), dtype=complex)
    for i in range(p):
        a_i = np.conj(gains[..., i, None]) * np.conj(side_phase(dopplers[..., i, None], s))
        for j in range(p):
            b_j = gains[..., j, None] * side_phase(dopplers[..., j, None], s)
            t_ij = delays[..., i] - delays[..., j]
            phi = phi_of_d(t_ij[..., None], delays[..., i, None], delays[..., j, None],
                           dopplers[..., i, None], dopplers[..., j, None], d_vals)
            g += a_i[..., :, None] * b_j[..., None, :] * phi[..., idx]
    mq = (grid.M, qs.size)
    g4 = g.reshape(batch + mq + mq)
    return pref * _fold_phases(grid, qs, g4)


def sinc_q_range(grid: DDGrid) -> QRange:
    """q values whose delay offsets can fall inside the rect window."""
    half = grid.N // 2 + 1
    return QRange(-half, half)


# ---------------------------------------------------------------------------
# the six constructors
# ---------------------------------------------------------------------------

def cov_sinc_identical(grid: DDGrid, N0: float) -> NoiseCov:
    """Identical filtering, sinc filter: white noise N0 * I (the large-frame
    approximation; the exact off-diagonal mass is bounded by the oracle)."""
    _check_n0(N0)
    return NoiseCov.build(N0 * np.eye(grid.mn, dtype=complex), N0)


def cov_gauss_identical(grid: DDGrid, cfg: FilterConfig, N0: float,
                        qr: QRange = DEFAULT_QRANGE) -> NoiseCov:
    """Identical filtering, Gaussian filter (exact closed form)."""
    _check_n0(N0)
    _check_gauss(cfg)
    qs = qr.values
    at_b2 = cfg.alpha_tau * grid.B ** 2
    an_t2 = cfg.alpha_nu * grid.T ** 2
    denom = 2.0 * at_b2 + 2.0 * np.pi ** 2 / an_t2
    s = _offsets(grid, qs)
    row_w = np.exp(-2.0 * np.pi ** 2 * (at_b2 / an_t2) * s ** 2 / denom)
    _, d_vals = _toeplitz_gather(grid, qs)
    phi_d = np.exp(-(at_b2 ** 2) * d_vals ** 2 / denom)
    pref = N0 * (2.0 * grid.B * grid.tau_p / grid.T) * np.sqrt(
        np.pi * cfg.alpha_tau
        / (2.0 * cfg.alpha_tau * cfg.alpha_nu * grid.B ** 2 + 2.0 * np.pi ** 2 / grid.T ** 2)
    )
    return NoiseCov.build(_assemble_scalar(grid, qs, row_w, phi_d, pref), N0)


def cov_sinc_matched(grid: DDGrid, N0: float) -> NoiseCov:
    """Matched filtering, sinc filter (exact closed form; the q-sum is
    finite because of the rect windows)."""
    _check_n0(N0)
    qs = sinc_q_range(grid).values
    s = _offsets(grid, qs)
    row_w = rect_weight(s, grid.T)
    _, d_vals = _toeplitz_gather(grid, qs)
    phi_d = np.sinc(grid.B * d_vals)
    pref = N0 * grid.tau_p / grid.T
    return NoiseCov.build(_assemble_scalar(grid, qs, row_w, phi_d, pref), N0)


def cov_gauss_matched(grid: DDGrid, cfg: FilterConfig, N0: float,
                      qr: QRange = DEFAULT_QRANGE) -> NoiseCov:
    """Matched filtering, Gaussian filter (exact closed form)."""
    _check_n0(N0)
    _check_gauss(cfg)
    C = _cov_gauss_matched_raw(grid, cfg, qr.values)
    return NoiseCov.build(N0 * C, N0)


def _cov_gauss_matched_raw(grid: DDGrid, cfg: FilterConfig, qs: np.ndarray) -> np.ndarray:
    at_b2 = cfg.alpha_tau * grid.B ** 2
    an_t2 = cfg.alpha_nu * grid.T ** 2
    s = _offsets(grid, qs)
    row_w = np.exp(-np.pi ** 2 * s ** 2 / an_t2)
    _, d_vals = _toeplitz_gather(grid, qs)
    phi_d = np.exp(-0.5 * at_b2 * d_vals ** 2)
    pref = (grid.tau_p / grid.T) * np.sqrt(2.0 * np.pi / cfg.alpha_nu)
    return _assemble_scalar(grid, qs, row_w, phi_d, pref)


def cov_sinc_chmatched(grid: DDGrid, paths: PathSet, N0: float) -> NoiseCov:
    """Channel-matched filtering, sinc filter (exact; depends on the
    channel realization through the receive filter)."""
    _check_n0(N0)
    C = cov_sinc_chmatched_raw(grid, paths.gains, paths.delays, paths.dopplers)
    return NoiseCov.build(N0 * C, N0)


def cov_sinc_chmatched_raw(grid: DDGrid, gains, delays, dopplers) -> np.ndarray:
    """Unit-N0 channel-matched sinc covariance; broadcasts over batch gains."""
    qs = sinc_q_range(grid).values
    B, T = grid.B, grid.T
    s = _offsets(grid, qs).reshape(-1)
    rect = rect_weight(s, T)

    def phi_of_d(t_ij, tau_i, tau_j, n_i, n_j, d):
        n_ij = n_i - n_j
        span = B - np.abs(n_ij)
        ind = np.abs(n_ij) < B
        arg = t_ij - d
        return np.where(
            ind,
            (span / B) * np.exp(1j * np.pi * (n_i + n_j) * arg) * np.sinc(span * arg),
            0.0,
        )

    def side_phase(n, s_):
        return rect * np.exp(2j * np.pi * n * s_)

    pref = grid.tau_p / grid.T
    return _assemble_pairwise(grid, qs, gains, delays, dopplers,
                              phi_of_d, side_phase, pref)


def cov_gauss_chmatched(grid: DDGrid, cfg: FilterConfig, paths: PathSet, N0: float,
                        qr: QRange = DEFAULT_QRANGE) -> NoiseCov:
    """Channel-matched filtering, Gaussian filter (exact)."""
    _check_n0(N0)
    _check_gauss(cfg)
    C = cov_gauss_chmatched_raw(grid, cfg, paths.gains, paths.delays,
                                paths.dopplers, qr.values)
    return NoiseCov.build(N0 * C, N0)


def cov_gauss_chmatched_raw(grid: DDGrid, cfg: FilterConfig, gains, delays,
                            dopplers, qs: np.ndarray) -> np.ndarray:
    """Unit-N0 channel-matched Gaussian covariance; broadcasts over batch."""
    at_b2 = cfg.alpha_tau * grid.B ** 2
    an_t2 = cfg.alpha_nu * grid.T ** 2
    s = _offsets(grid, qs).reshape(-1)
    env = np.exp(-np.pi ** 2 * s ** 2 / an_t2)

    def phi_of_d(t_ij, tau_i, tau_j, n_i, n_j, d):
        return (np.exp(2j * np.pi * (tau_i * n_i - tau_j * n_j))
                * np.exp(-0.5 * at_b2 * (t_ij - d) ** 2))

    def side_phase(n, s_):
        return env * np.exp(2j * np.pi * n * s_)

    pref = (grid.tau_p / grid.T) * np.sqrt(2.0 * np.pi / cfg.alpha_nu)
    return _assemble_pairwise(grid, qs, gains, delays, dopplers,
                              phi_of_d, side_phase, pref)


def _check_n0(N0: float):
    if N0 < 0 or not np.isfinite(N0):
        raise InvalidParameterError(f"N0 must be finite and >= 0, got {N0}")


def _check_gauss(cfg: FilterConfig):
    if cfg.family is not FilterFamily.GAUSSIAN:
        raise InvalidParameterError("this constructor needs a Gaussian FilterConfig")


def cov_for(family: FilterFamily, scheme: RxScheme, grid: DDGrid,
            cfg: FilterConfig | None, paths: PathSet | None, N0: float,
            qr: QRange = DEFAULT_QRANGE) -> NoiseCov:
    """Dispatch over the six combinations."""
    if family is FilterFamily.SINC:
        if scheme is RxScheme.IDENTICAL:
            return cov_sinc_identical(grid, N0)
        if scheme is RxScheme.MATCHED:
            return cov_sinc_matched(grid, N0)
        return cov_sinc_chmatched(grid, paths, N0)
    if scheme is RxScheme.IDENTICAL:
        return cov_gauss_identical(grid, cfg, N0, qr)
    if scheme is RxScheme.MATCHED:
        return cov_gauss_matched(grid, cfg, N0, qr)
    return cov_gauss_chmatched(grid, cfg, paths, N0, qr)


# ---------------------------------------------------------------------------
# correlated-noise sampling
# ---------------------------------------------------------------------------

def sample_noise(cov: NoiseCov, rng_seed) -> np.ndarray:
    """One correlated noise frame n = R w, w ~ CN(0, I)."""
    return sample_noise_batch(cov.R, 1, np.random.default_rng(rng_seed))[0]


def sample_noise_batch(R: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n frames of correlated noise from a (possibly batched) factor R."""
    mn = R.shape[-1]
    w = (rng.standard_normal((n, mn)) + 1j * rng.standard_normal((n, mn))) / np.sqrt(2.0)
    if R.ndim == 2:
        return w @ R.T
    return np.einsum("...ij,...j->...i", R, w)


def export_cov_csv(cov: NoiseCov, file, threshold: float = 0.0) -> None:
    """Write ``row,col,re,im`` for entries with magnitude above threshold."""
    own = isinstance(file, (str, bytes))
    fh = open(file, "w") if own else file
    try:
        fh.write("row,col,re,im\n")
        C = cov.C
        rows, cols = np.nonzero(np.abs(C) > threshold)
        for r, c in zip(rows, cols):
            v = C[r, c]
            fh.write(f"{r},{c},{v.real:.17g},{v.imag:.17g}\n")
    finally:
        if own:
            fh.close()
