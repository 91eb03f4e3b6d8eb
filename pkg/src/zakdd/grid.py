"""Delay-Doppler grid geometry, quasi-periodic frames, and modulation alphabets.

Conventions used everywhere in the package:

* the fundamental cell holds M delay bins and N Doppler bins; bin (k, l)
  sits at (k*tau_p/M, l*nu_p/N);
* frames are stored as flat length-M*N vectors with zero-based index
  k*N + l (row k along delay, column l along Doppler);
* sinc is the normalized one, sin(pi x)/(pi x) with sinc(0) = 1 (np.sinc).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class DDGrid:
    """Lattice geometry: M x N bins over one delay/Doppler period."""

    M: int
    N: int
    nu_p: float   # Doppler period [Hz]
    tau_p: float  # delay period [s], = 1/nu_p
    B: float      # bandwidth [Hz], = M*nu_p
    T: float      # frame duration [s], = N*tau_p

    @property
    def mn(self) -> int:
        return self.M * self.N

    @property
    def delay_step(self) -> float:
        return self.tau_p / self.M

    @property
    def doppler_step(self) -> float:
        return self.nu_p / self.N


def make_grid(M: int, N: int, nu_p: float) -> DDGrid:
    """Build a DDGrid from bin counts and the Doppler period."""
    if int(M) != M or int(N) != N or M < 1 or N < 1:
        raise InvalidParameterError(f"M and N must be positive integers, got {M}, {N}")
    if not np.isfinite(nu_p) or nu_p <= 0:
        raise InvalidParameterError(f"nu_p must be positive and finite, got {nu_p}")
    M, N = int(M), int(N)
    tau_p = 1.0 / nu_p
    return DDGrid(M=M, N=N, nu_p=nu_p, tau_p=tau_p, B=M * nu_p, T=N * tau_p)


def flat_index(k, l, grid: DDGrid):
    """(k, l) in the fundamental cell -> flat index k*N + l."""
    return np.asarray(k) * grid.N + np.asarray(l)


def unflat_index(i, grid: DDGrid):
    """Flat index -> (k, l)."""
    i = np.asarray(i)
    return i // grid.N, i % grid.N


@dataclass(frozen=True)
class Frame:
    """One frame of M*N complex symbols in the flat k*N + l layout."""

    symbols: np.ndarray

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=np.complex128)
        if sym.ndim != 1:
            raise InvalidParameterError("frame symbols must be a 1-D vector")
        object.__setattr__(self, "symbols", sym)

    @classmethod
    def from_cell(cls, cell: np.ndarray) -> "Frame":
        """Build from an (M, N) array indexed [k, l]."""
        return cls(np.asarray(cell, dtype=np.complex128).reshape(-1))

    def cell(self, grid: DDGrid) -> np.ndarray:
        if self.symbols.size != grid.mn:
            raise InvalidParameterError(
                f"frame has {self.symbols.size} symbols, grid needs {grid.mn}"
            )
        return self.symbols.reshape(grid.M, grid.N)


def quasi_periodic_value(frame: Frame, grid: DDGrid, k: int, l: int) -> complex:
    """Symbol value at arbitrary integer (k, l) under quasi-periodic extension.

    Wrapping by n delay periods multiplies by exp(2j*pi*n*l0/N) where l0 is
    the in-cell Doppler index; Doppler wraps carry no phase.
    """
    return complex(quasi_periodic_extend(frame, grid, np.asarray(k), np.asarray(l)))


def quasi_periodic_extend(frame: Frame, grid: DDGrid, k, l) -> np.ndarray:
    """Vectorized quasi_periodic_value over integer index arrays."""
    k = np.asarray(k)
    l = np.asarray(l)
    k0 = np.mod(k, grid.M)
    l0 = np.mod(l, grid.N)
    n = (k - k0) // grid.M
    cell = frame.cell(grid)
    return cell[k0, l0] * np.exp(2j * np.pi * n * l0 / grid.N)


@dataclass(frozen=True)
class Alphabet:
    """Unit-energy constellation with a bijective bit labeling.

    ``labels[i]`` is the integer whose binary expansion (MSB first,
    bits_per_symbol wide) labels ``points[i]``.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        lab = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)
        size = pts.size
        if size < 2 or (size & (size - 1)) != 0:
            raise InvalidParameterError("alphabet size must be a power of two >= 2")
        if sorted(lab.tolist()) != list(range(size)):
            raise InvalidParameterError("labels must be a bijection onto 0..size-1")
        energy = float(np.mean(np.abs(pts) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise InvalidParameterError(f"constellation energy {energy} != 1")

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return int(self.size).bit_length() - 1

    def point_for_label(self) -> np.ndarray:
        """Inverse lookup: label value -> constellation point."""
        inv = np.empty(self.size, dtype=np.complex128)
        inv[self.labels] = self.points
        return inv


def bpsk() -> Alphabet:
    """BPSK with bit 0 -> +1, bit 1 -> -1."""
    return Alphabet("BPSK", np.array([1.0 + 0j, -1.0 + 0j]), np.array([0, 1]))


def qam8() -> Alphabet:
    """Rectangular 8-QAM (4 x 2), Gray labeled, unit average energy.

    Bits (b2 b1 b0): (b2 b1) Gray-code the in-phase level in
    {-3, -1, +1, +3}, b0 selects the quadrature level in {-1, +1}.
    """
    i_gray = {0b00: -3.0, 0b01: -1.0, 0b11: 1.0, 0b10: 3.0}
    q_bit = {0: -1.0, 1: 1.0}
    scale = 1.0 / np.sqrt(6.0)  # mean(|I|^2) + mean(|Q|^2) = 5 + 1
    points, labels = [], []
    for ib, ival in i_gray.items():
        for qb, qval in q_bit.items():
            points.append(scale * (ival + 1j * qval))
            labels.append((ib << 1) | qb)
    return Alphabet("8QAM", np.array(points), np.array(labels))


def alphabet_by_name(name: str) -> Alphabet:
    table = {"bpsk": bpsk, "8qam": qam8}
    key = name.strip().lower().replace("-", "")
    if key not in table:
        raise InvalidParameterError(f"unknown alphabet {name!r}; choose from BPSK, 8QAM")
    return table[key]()


def map_bits(bits, alphabet: Alphabet) -> np.ndarray:
    """Bits (0/1 array) -> complex symbol vector."""
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    b = alphabet.bits_per_symbol
    if bits.size == 0 or bits.size % b != 0:
        raise InvalidParameterError(
            f"bit count {bits.size} is not a positive multiple of {b}"
        )
    if np.any((bits != 0) & (bits != 1)):
        raise InvalidParameterError("bits must be 0 or 1")
    weights = 1 << np.arange(b - 1, -1, -1)
    values = bits.reshape(-1, b) @ weights
    return alphabet.point_for_label()[values]


def demap_symbols(symbols, alphabet: Alphabet) -> np.ndarray:
    """Nearest-point slicing followed by the inverse bit labeling."""
    symbols = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    idx = slice_to_indices(symbols, alphabet)
    values = alphabet.labels[idx]
    b = alphabet.bits_per_symbol
    shifts = np.arange(b - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).reshape(-1)


def slice_to_indices(symbols, alphabet: Alphabet) -> np.ndarray:
    """Index of the nearest constellation point for each input symbol."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    d = np.abs(symbols[..., None] - alphabet.points)
    return np.argmin(d, axis=-1)


def slice_symbols(symbols, alphabet: Alphabet) -> np.ndarray:
    return alphabet.points[slice_to_indices(symbols, alphabet)]
