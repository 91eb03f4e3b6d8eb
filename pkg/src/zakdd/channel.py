"""Physical delay-Doppler channels: Veh-A realizations and CSI error.

A channel is a set of P discrete paths (complex gain, delay, Doppler).
Delays and Dopplers may be fractional with respect to the lattice; nothing
downstream assumes lattice alignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

#: Veh-A power delay profile: path delays [s] and relative powers [dB].
VEH_A_DELAYS = np.array([0.0, 0.31e-6, 0.71e-6, 1.09e-6, 1.73e-6, 2.51e-6])
VEH_A_POWER_DB = np.array([0.0, -1.0, -9.0, -10.0, -15.0, -20.0])


def veh_a_powers() -> np.ndarray:
    """Per-path average powers, normalized to sum to 1."""
    p = 10.0 ** (VEH_A_POWER_DB / 10.0)
    return p / p.sum()


@dataclass(frozen=True)
class PathSet:
    """P-path DD channel: gains h_i, delays tau_i [s], Dopplers nu_i [Hz]."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.complex128).reshape(-1)
        d = np.asarray(self.delays, dtype=float).reshape(-1)
        f = np.asarray(self.dopplers, dtype=float).reshape(-1)
        if not (g.size == d.size == f.size) or g.size < 1:
            raise InvalidParameterError("gains, delays, dopplers must share length P >= 1")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(d)) and np.all(np.isfinite(f))):
            raise InvalidParameterError("path parameters must be finite")
        if np.any(d < 0):
            raise InvalidParameterError("delays must be non-negative")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "dopplers", f)

    @property
    def P(self) -> int:
        return self.gains.size


@dataclass(frozen=True)
class CsiErrorModel:
    """Additive complex Gaussian error on the path gains."""

    sigma_e2: float

    def __post_init__(self):
        if self.sigma_e2 < 0 or not np.isfinite(self.sigma_e2):
            raise InvalidParameterError("sigma_e2 must be finite and >= 0")


def veh_a_realization(nu_max: float, rng_seed) -> PathSet:
    """Draw one Veh-A channel: Rayleigh gains on the normalized PDP,
    Dopplers nu_i = nu_max * cos(theta_i) with theta_i ~ U[0, 2*pi).
    """
    if nu_max < 0 or not np.isfinite(nu_max):
        raise InvalidParameterError(f"nu_max must be >= 0, got {nu_max}")
    rng = np.random.default_rng(rng_seed)
    p = veh_a_powers()
    theta = rng.uniform(0.0, 2.0 * np.pi, size=p.size)
    gains = np.sqrt(p / 2.0) * (rng.standard_normal(p.size) + 1j * rng.standard_normal(p.size))
    return PathSet(gains=gains, delays=VEH_A_DELAYS.copy(), dopplers=nu_max * np.cos(theta))


def apply_csi_error(paths: PathSet, model: CsiErrorModel, rng_seed) -> PathSet:
    """Perturb the gains by e_i ~ CN(0, sigma_e2); delays/Dopplers unchanged.

    The error variates are always drawn, so sigma_e2 = 0 reproduces the
    input bit for bit on any fixed seed.
    """
    rng = np.random.default_rng(rng_seed)
    e = np.sqrt(model.sigma_e2 / 2.0) * (
        rng.standard_normal(paths.P) + 1j * rng.standard_normal(paths.P)
    )
    return PathSet(gains=paths.gains + e, delays=paths.delays, dopplers=paths.dopplers)


def save_paths(paths: PathSet, file) -> None:
    """Write one path per line as ``h_re h_im tau_s nu_hz``."""
    own = isinstance(file, (str, bytes))
    fh = open(file, "w") if own else file
    try:
        for h, tau, nu in zip(paths.gains, paths.delays, paths.dopplers):
            fh.write(f"{h.real:.17g} {h.imag:.17g} {tau:.17g} {nu:.17g}\n")
    finally:
        if own:
            fh.close()


def load_paths(file) -> PathSet:
    """Inverse of save_paths."""
    own = isinstance(file, (str, bytes))
    fh = open(file) if own else file
    try:
        rows = [line.split() for line in fh if line.strip()]
    finally:
        if own:
            fh.close()
    if not rows:
        raise InvalidParameterError("path file holds no records")
    vals = np.array([[float(x) for x in row] for row in rows])
    if vals.shape[1] != 4:
        raise InvalidParameterError("each record must be 'h_re h_im tau_s nu_hz'")
    return PathSet(gains=vals[:, 0] + 1j * vals[:, 1], delays=vals[:, 2], dopplers=vals[:, 3])
