"""Fast-time grid, sampled envelope fields, and Parseval-normalized transforms.

Every quantity in the package lives on a uniform fast-time grid of N samples
(N a power of two) covering a window of length L_X picoseconds, with the
envelope stored as a pair of real components per sample (the real and
imaginary parts of the optical field, in sqrt(W)).  Unit system: time in ps,
propagation distance in m, power in W, energy in pJ (= W*ps), angular
frequency in rad/ps, dispersion in ps^2/m.

Two scalar modes are supported.  In real mode the components are float64 and
``||psi||^2`` is the instantaneous power.  In complexified mode the two
components are themselves complex and every squared norm / inner product is
replaced by its bilinear (conjugation-free) extension, so that the whole
propagation model is an analytic function of a complex perturbation
parameter.  That analyticity is what the spectral differentiation check in
:mod:`fiberlaser.verify` relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


# -- FFT dispatch ---------------------------------------------------------------
#
# Everything propagates in float64, but convergence studies compute their
# reference solutions in extended precision: the frozen rounding pattern of a
# double-precision FFT accumulates linearly over the ~5e4 transform round
# trips of a dt = 1e-4 run and would otherwise drown the reference itself.
# numpy's pocketfft has no long-double path, so extended-precision data routes
# through a small radix-2 transform (power-of-two sizes only, which the grid
# already guarantees).

_LD_TYPES = (np.dtype(np.longdouble), np.dtype(np.clongdouble))
_ld_cache: dict[int, tuple] = {}


def _ld_tables(n: int):
    if n not in _ld_cache:
        bits = n.bit_length() - 1
        perm = np.zeros(n, dtype=np.intp)
        for i in range(n):
            perm[i] = int(format(i, f"0{bits}b")[::-1], 2)
        pi = 4 * np.arctan(np.clongdouble(1))
        twiddles = {}
        half = 1
        while half < n:
            k = np.arange(half, dtype=np.longdouble)
            twiddles[half] = np.exp(-1j * pi * k / half)
            half *= 2
        _ld_cache[n] = (perm, twiddles)
    return _ld_cache[n]


def _fft_ld(x: np.ndarray, inverse: bool) -> np.ndarray:
    n = x.shape[-1]
    perm, twiddles = _ld_tables(n)
    y = np.ascontiguousarray(x[..., perm]).astype(np.clongdouble)
    half = 1
    while half < n:
        w = np.conj(twiddles[half]) if inverse else twiddles[half]
        z = y.reshape(y.shape[:-1] + (n // (2 * half), 2, half))
        a = z[..., 0, :].copy()
        b = z[..., 1, :] * w
        z[..., 0, :] = a + b
        z[..., 1, :] = a - b
        half *= 2
    if inverse:
        y /= n
    return y


def fft_any(x: np.ndarray) -> np.ndarray:
    """FFT along the last axis, honoring extended-precision dtypes."""
    if x.dtype in _LD_TYPES:
        return _fft_ld(x, inverse=False)
    return np.fft.fft(x, axis=-1)


def ifft_any(x: np.ndarray) -> np.ndarray:
    """Inverse FFT along the last axis, honoring extended-precision dtypes."""
    if x.dtype in _LD_TYPES:
        return _fft_ld(x, inverse=True)
    return np.fft.ifft(x, axis=-1)


@dataclass(frozen=True)
class FastTimeGrid:
    """Uniform fast-time grid with FFT-ordered angular frequencies.

    Parameters
    ----------
    window_ps : float
        Window length L_X in ps; samples cover [-L_X/2, L_X/2).
    n : int
        Number of samples.  Must be a power of two, at least 8.
    """

    window_ps: float
    n: int

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1) != 0:
            raise ValueError(f"sample count must be a power of two >= 8, got {self.n}")
        if not self.window_ps > 0:
            raise ValueError(f"window length must be positive, got {self.window_ps}")

    @property
    def dx(self) -> float:
        """Sample spacing in ps."""
        return self.window_ps / self.n

    @property
    def domega(self) -> float:
        """Frequency-bin spacing 2*pi/L_X in rad/ps."""
        return 2.0 * math.pi / self.window_ps

    @cached_property
    def x(self) -> np.ndarray:
        """Sample points x_j = -L_X/2 + j*dx, shape (n,)."""
        return -0.5 * self.window_ps + self.dx * np.arange(self.n)

    @cached_property
    def omega(self) -> np.ndarray:
        """Angular frequencies in standard FFT order (DC first), rad/ps."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def omega_sorted(self) -> np.ndarray:
        """Frequencies sorted ascending (for file output)."""
        return np.sort(self.omega)

    @cached_property
    def _twiddle(self) -> np.ndarray:
        # exp(-i omega_k x_0) = (-1)^k exactly, since omega_k * L_X/2 = pi*k.
        t = np.ones(self.n)
        t[1::2] = -1.0
        return t

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FastTimeGrid)
            and self.n == other.n
            and self.window_ps == other.window_ps
        )

    def __hash__(self):
        return hash((self.window_ps, self.n))


def _as_components(grid: FastTimeGrid, data: np.ndarray) -> np.ndarray:
    data = np.asarray(data)
    if data.shape != (2, grid.n):
        raise ValueError(f"expected component array of shape (2, {grid.n}), got {data.shape}")
    if data.dtype in _LD_TYPES:  # extended precision passes through untouched
        return data
    if np.iscomplexobj(data):
        return data.astype(np.complex128, copy=False)
    return data.astype(np.float64, copy=False)


@dataclass
class Field:
    """Sampled envelope psi(x_j) = (psi_1, psi_2) on a fast-time grid.

    ``data`` has shape (2, n): row 0 is the first (real-part) component, row 1
    the second.  float64 rows mean real mode; complex128 rows mean
    complexified mode.  Instances are treated as immutable after
    construction; operations return new fields.
    """

    grid: FastTimeGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = _as_components(self.grid, self.data)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, grid: FastTimeGrid) -> "Field":
        return cls(grid, np.zeros((2, grid.n)))

    @classmethod
    def from_complex(cls, grid: FastTimeGrid, values: np.ndarray) -> "Field":
        """Build a real-mode field from complex samples psi_1 + i psi_2."""
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} complex samples, got shape {values.shape}")
        return cls(grid, np.stack([values.real, values.imag]))

    @classmethod
    def from_coords(cls, grid: FastTimeGrid, coords: np.ndarray) -> "Field":
        """Inverse of :meth:`to_coords` (interleaved 2N coordinate vector)."""
        coords = np.asarray(coords)
        if coords.shape != (2 * grid.n,):
            raise ValueError(f"expected coordinate vector of length {2 * grid.n}")
        return cls(grid, coords.reshape(grid.n, 2).T)

    # -- views ---------------------------------------------------------------

    @property
    def is_complexified(self) -> bool:
        return np.iscomplexobj(self.data)

    def as_complex(self) -> np.ndarray:
        """Complex samples psi_1 + i psi_2 (real mode only)."""
        if self.is_complexified:
            raise ValueError("complexified field has no single-complex view")
        return self.data[0] + 1j * self.data[1]

    def to_coords(self) -> np.ndarray:
        """Flatten to the interleaved vector [psi_1(x_0), psi_2(x_0), psi_1(x_1), ...]."""
        return self.data.T.reshape(-1).copy()

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())

    # -- functionals ---------------------------------------------------------

    def energy(self) -> float:
        """Pulse energy dx * sum ||psi(x_j)||^2 in pJ (real mode)."""
        if self.is_complexified:
            raise ValueError("use bilinear_energy() for complexified fields")
        return float(self.grid.dx * np.sum(self.data * self.data))

    def bilinear_energy(self) -> complex:
        """Conjugation-free quadratic dx * sum psi^T psi (analytic in the field)."""
        return complex(self.grid.dx * np.sum(self.data * self.data))

    def norm(self) -> float:
        """L2 norm sqrt(energy) in sqrt(pJ) (real mode)."""
        return math.sqrt(self.energy())

    def peak_power(self) -> float:
        """max_j ||psi(x_j)||^2 in W (real mode)."""
        if self.is_complexified:
            raise ValueError("peak power is defined for real-mode fields")
        return float(np.max(self.data[0] ** 2 + self.data[1] ** 2))

    def rms_width(self) -> float:
        """RMS width sqrt(<x^2> - <x>^2) of the power profile, in ps."""
        p = self.data[0] ** 2 + self.data[1] ** 2
        e = np.sum(p)
        if e == 0.0:
            raise ValueError("RMS width of the zero field is undefined")
        x = self.grid.x
        mean = np.sum(x * p) / e
        return math.sqrt(np.sum(x * x * p) / e - mean * mean)

    # -- pointwise maps ------------------------------------------------------

    def rotate(self, theta: float) -> "Field":
        """Apply the rotation R(theta) (multiplication by e^{i theta}) pointwise."""
        c, s = math.cos(theta), math.sin(theta)
        return Field(self.grid, np.stack([c * self.data[0] - s * self.data[1],
                                          s * self.data[0] + c * self.data[1]]))

    def j_rotate(self) -> "Field":
        """Apply J (the pi/2 rotation, multiplication by i) pointwise."""
        return Field(self.grid, np.stack([-self.data[1], self.data[0]]))

    def circular_shift(self, m: int) -> "Field":
        """Cyclic shift by m samples: output sample j is input sample (j - m) mod N."""
        return Field(self.grid, np.roll(self.data, int(m), axis=-1))

    # -- calculus ------------------------------------------------------------

    def spectral_derivative(self) -> "Field":
        """d/dx via the i*omega Fourier multiplier, Nyquist bin zeroed."""
        mult = 1j * self.grid.omega.copy()
        mult[self.grid.n // 2] = 0.0
        out = np.fft.ifft(mult * np.fft.fft(self.data, axis=-1), axis=-1)
        if not self.is_complexified:
            out = out.real
        return Field(self.grid, out)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.data - other.data)

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.data)


@dataclass
class SpectralField:
    """Frequency-domain samples of a field, FFT bin order.

    The normalization is fixed so that the continuum Parseval identity holds
    with the domega weight:  energy(f) == domega * sum_k ||F(omega_k)||^2.
    """

    grid: FastTimeGrid
    data: np.ndarray  # (2, n) complex
    real_origin: bool = True

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.shape != (2, self.grid.n):
            raise ValueError(f"expected spectral array of shape (2, {self.grid.n})")
        self.data = data

    def spectral_energy(self) -> float:
        """domega * sum_k ||F(omega_k)||^2 in pJ."""
        return float(self.grid.domega * np.sum(np.abs(self.data) ** 2))

    def sorted_by_omega(self) -> tuple[np.ndarray, np.ndarray]:
        """(omega ascending, matching (2, n) samples) for file output."""
        order = np.argsort(self.grid.omega)
        return self.grid.omega[order], self.data[:, order]


def _check_same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")


def energy(f: Field) -> float:
    return f.energy()


def inner(f: Field, g: Field):
    """Bilinear L2 pairing dx * sum_j f(x_j)^T g(x_j).

    Real for two real-mode fields; the conjugation-free complex extension if
    either argument is complexified (so the pairing stays analytic).
    """
    _check_same_grid(f, g)
    val = f.grid.dx * np.sum(f.data * g.data)
    if f.is_complexified or g.is_complexified:
        return complex(val)
    return float(val)


def hermitian_inner(f: Field, g: Field) -> complex:
    """Hermitian pairing dx * sum_j conj(f)^T g (for eigenvector alignment)."""
    _check_same_grid(f, g)
    return complex(f.grid.dx * np.sum(np.conj(f.data) * g.data))


def forward_transform(f: Field) -> SpectralField:
    """Fourier transform, (dx/sqrt(2 pi)) * sum_j psi(x_j) e^{-i omega x_j}."""
    g = f.grid
    raw = np.fft.fft(f.data, axis=-1)
    return SpectralField(g, (g.dx / SQRT_2PI) * g._twiddle * raw,
                         real_origin=not f.is_complexified)


def inverse_transform(F: SpectralField) -> Field:
    """Inverse transform, (domega/sqrt(2 pi)) * sum_k F(omega_k) e^{+i omega x_j}."""
    g = F.grid
    out = (SQRT_2PI / g.dx) * np.fft.ifft(g._twiddle * F.data, axis=-1)
    if F.real_origin:
        out = out.real
    return Field(g, out)


def gaussian_field(grid: FastTimeGrid, peak_power_w: float, sigma_ps: float) -> Field:
    """Real-mode Gaussian sqrt(P0) * exp(-(x/sigma)^2) with zero second component."""
    prof = math.sqrt(peak_power_w) * np.exp(-((grid.x / sigma_ps) ** 2))
    return Field(grid, np.stack([prof, np.zeros_like(prof)]))


# -- CSV serialization -------------------------------------------------------

def field_to_csv(f: Field, path, digits: int = 12) -> None:
    """Write a real-mode field as CSV with columns x_ps, re, im."""
    if f.is_complexified:
        raise ValueError("only real-mode fields are serialized")
    fmt = f"%.{digits}g"
    with open(path, "w") as fh:
        fh.write("x_ps,re,im\n")
        for xj, re, im in zip(f.grid.x, f.data[0], f.data[1]):
            fh.write(f"{fmt % xj},{fmt % re},{fmt % im}\n")


def field_from_csv(grid: FastTimeGrid, path) -> Field:
    """Read a field written by :func:`field_to_csv`; the grid must match."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    if rows.shape != (grid.n, 3):
        raise ValueError(f"{path}: expected {grid.n} rows of x_ps,re,im, got shape {rows.shape}")
    if not np.allclose(rows[:, 0], grid.x, atol=1e-9 * grid.dx + 1e-12):
        raise ValueError(f"{path}: sample points do not match the configured grid")
    return Field(grid, rows[:, 1:3].T)


def spectrum_to_csv(F: SpectralField, path, digits: int = 12) -> None:
    """Write a spectral field as CSV with columns omega_radps, re, im, sorted by omega."""
    om, data = F.sorted_by_omega()
    fmt = f"%.{digits}g"
    with open(path, "w") as fh:
        fh.write("omega_radps,re,im\n")
        for k in range(F.grid.n):
            # complex spectrum of the complex-valued envelope psi_1 + i psi_2
            z = data[0, k] + 1j * data[1, k]
            fh.write(f"{fmt % om[k]},{fmt % z.real},{fmt % z.imag}\n")
