"""
Spectral Gaussian Prior Module

Covariance spectrum of C on the periodic unit square, truncated Karhunen-Loeve
sampling of N(0, C^{alpha/2}) and grid synthesis by FFT.

Conventions used throughout the package:
    - grid node (i, j) sits at (i/N, j/N); array axis 0 is x.
    - basis functions are exp(2 pi i k.x), unit norm in L2(D).
    - coefficients of a grid field are fft2(u, norm="forward"), so the
      inverse transform with norm="forward" evaluates the Fourier sum.
    - the Nyquist row and column (a component equal to -N/2) carry no
      prior mass; they have no conjugate partner inside the band.
"""
import dataclasses
import functools
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple, Union

import numpy as np

from exceptions import ConfigurationError, ValidationError
from validators import validate_grid_size, validate_prior_params

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


class FieldKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


@dataclass(frozen=True)
class GridField:
    """Real values on an N x N periodic grid"""
    values: np.ndarray
    kind: FieldKind = FieldKind.CONTINUOUS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError(
                f"GridField values must form a square array, got shape {values.shape}",
                field="values"
            )

        kind = FieldKind(self.kind)
        if kind is FieldKind.BINARY and not np.isin(values, (-1.0, 0.0, 1.0)).all():
            raise ValidationError("Binary fields take values in {-1, 0, +1}", field="values")

        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", kind)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def is_binary(self) -> bool:
        return self.kind is FieldKind.BINARY

    @classmethod
    def constant(cls, size: int, value: float) -> "GridField":
        return cls(np.full((size, size), float(value)))

    def sign(self) -> "GridField":
        """Pointwise signum as a binary field; zeros stay zero"""
        return GridField(np.sign(self.values), FieldKind.BINARY)


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real periodic field, FFT ordering"""
    coeffs: np.ndarray

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_grid(cls, field: GridField) -> "SpectralField":
        return cls(np.fft.fft2(field.values, norm="forward"))

    def to_grid(self) -> GridField:
        return GridField(np.fft.ifft2(self.coeffs, norm="forward").real)

    def imaginary_residue(self) -> float:
        """Max imaginary part of the synthesis, relative to the field max-norm"""
        values = np.fft.ifft2(self.coeffs, norm="forward")
        scale = np.abs(values.real).max()
        return float(np.abs(values.imag).max() / scale) if scale > 0 else 0.0

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        mirrored = np.roll(np.flip(self.coeffs, axis=(0, 1)), 1, axis=(0, 1))
        return bool(np.allclose(self.coeffs, np.conj(mirrored), atol=atol, rtol=0.0))

    def truncate(self, size: int) -> "SpectralField":
        """
        Restrict to the band of a coarser grid.

        The coarse Nyquist lines are zeroed, matching what a coarse sample
        carries.
        """
        if size > self.size:
            raise ConfigurationError(f"Cannot truncate a {self.size} band to {size}")

        wavenumbers = np.fft.fftfreq(size, d=1.0 / size).astype(int)
        index = wavenumbers % self.size
        coarse = self.coeffs[np.ix_(index, index)].copy()
        coarse[size // 2, :] = 0.0
        coarse[:, size // 2] = 0.0
        return SpectralField(coarse)


@dataclass(frozen=True)
class PriorParams:
    """
    Parameters of the Gaussian prior and the phase-field potential.

    C is defined through its inverse,
    C^{-1} = delta eps^{-2 a1} Lap^2 - q delta eps^{-2 a2} Lap + tau^2 delta eps^{-2 a3}.
    """
    delta: float
    tau: float
    eps: float = 0.01
    q: float = 0.0
    c: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    b: float = 1.0
    r: float = 0.0
    alpha: float = 2.0

    def __post_init__(self):
        failures = validate_prior_params(self)
        if failures:
            raise ValidationError(failures[0].error, failures[0].field)

    @property
    def noise_scale(self) -> float:
        """Observational noise standard deviation eps**c"""
        return float(self.eps ** self.c)

    @property
    def scaling_gap(self) -> float:
        """a = 3 + 2(a1 - a3)"""
        return 3.0 + 2.0 * (self.a1 - self.a3)

    def satisfies_scalings(self, tol: float = 1e-12) -> bool:
        return (
            abs(self.a2 - self.a1 - 1.0) <= tol
            and abs(3.0 + 2.0 * self.a1 - self.b + 1.0) <= tol
            and abs(3.0 + 2.0 * self.a1 - 2.0 * self.c) <= tol
            and self.scaling_gap > 0
        )

    def replace(self, **changes: Any) -> "PriorParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, float]:
        return {key: float(value) for key, value in dataclasses.asdict(self).items()}


def laplacian_symbol(size: int) -> np.ndarray:
    """(2 pi |k|)^2 on the FFT band, i.e. the symbol of -Lap"""
    k = np.fft.fftfreq(size, d=1.0 / size)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    return (2.0 * np.pi) ** 2 * (kx ** 2 + ky ** 2)


def precision_symbol(s: np.ndarray, params: PriorParams) -> np.ndarray:
    """Symbol of C^{-1} as a function of s = (2 pi |k|)^2"""
    p = params
    return (
        p.delta * p.eps ** (-2 * p.a1) * s ** 2
        + p.q * p.delta * p.eps ** (-2 * p.a2) * s
        + p.tau ** 2 * p.delta * p.eps ** (-2 * p.a3)
    )


def eigenvalue(k: Tuple[int, int], params: PriorParams) -> float:
    """
    Eigenvalue lambda_k of C for the Fourier mode with wavevector k.

    Args:
        k: Integer wavevector (kx, ky)
        params: Prior parameters

    Returns:
        lambda_k > 0; alpha does not enter
    """
    s = (2.0 * np.pi) ** 2 * (k[0] ** 2 + k[1] ** 2)
    return float(1.0 / precision_symbol(np.asarray(s, dtype=float), params))


@functools.lru_cache(maxsize=32)
def _half_space_modes(size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    One representative of each conjugate pair inside the band |k_i| < size/2,
    ordered by shell max(|kx|, |ky|) so coarser bands form a prefix.
    """
    m = size // 2 - 1
    r = np.arange(-m, m + 1)
    kx, ky = np.meshgrid(r, r, indexing="ij")
    kx, ky = kx.ravel(), ky.ravel()
    upper = (kx > 0) | ((kx == 0) & (ky > 0))
    kx, ky = kx[upper], ky[upper]
    shell = np.maximum(np.abs(kx), np.abs(ky))
    order = np.lexsort((ky, kx, shell))
    kx, ky = kx[order], ky[order]
    kx.flags.writeable = False
    ky.flags.writeable = False
    return kx, ky


def nested_white_noise(size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Hermitian complex white noise on the FFT band.

    The zero mode is drawn first, then conjugate pairs shell by shell, so the
    draw for a coarse band is a prefix of the draw for any finer band.
    """
    xi = np.zeros((size, size), dtype=complex)
    xi[0, 0] = rng.standard_normal()

    kx, ky = _half_space_modes(size)
    pairs = rng.standard_normal((kx.size, 2)) / np.sqrt(2.0)
    z = pairs[:, 0] + 1j * pairs[:, 1]
    xi[kx % size, ky % size] = z
    xi[(-kx) % size, (-ky) % size] = np.conj(z)
    return xi


class SpectralPrior:
    """
    The Gaussian measure N(0, C^{alpha/2}) truncated to an N x N grid.
    """

    def __init__(self, params: PriorParams, size: int):
        result = validate_grid_size(size)
        if not result.is_valid:
            raise ConfigurationError(result.error, invalid_keys=[result.field])

        self.params = params
        self.size = size

        k = np.fft.fftfreq(size, d=1.0 / size)
        self.kx, self.ky = np.meshgrid(k, k, indexing="ij")
        self.band = (np.abs(self.kx) < size / 2) & (np.abs(self.ky) < size / 2)
        self.eigenvalues = 1.0 / precision_symbol(laplacian_symbol(size), params)
        self.std = np.where(self.band, self.eigenvalues ** (params.alpha / 4.0), 0.0)

    @property
    def covariance_multiplier(self) -> np.ndarray:
        """Spectral multiplier of the covariance C^{alpha/2}"""
        return self.std ** 2

    def pointwise_variance(self) -> float:
        """Prior variance of u(x), the same at every point"""
        return float(self.covariance_multiplier.sum())

    def white_noise(self, rng: np.random.Generator) -> np.ndarray:
        return nested_white_noise(self.size, rng)

    def coefficients(self, xi: np.ndarray) -> np.ndarray:
        return self.std * xi

    def synthesize(self, xi: np.ndarray) -> GridField:
        """Evaluate the truncated KL sum for given white-noise coefficients"""
        return SpectralField(self.coefficients(xi)).to_grid()

    def sample_coefficients(self, seed: SeedLike = None) -> SpectralField:
        rng = np.random.default_rng(seed)
        return SpectralField(self.coefficients(self.white_noise(rng)))

    def sample(self, seed: SeedLike = None) -> GridField:
        return self.sample_coefficients(seed).to_grid()

    def apply_covariance(self, field: GridField, power: float = 1.0) -> GridField:
        """Apply (C^{alpha/2})^power spectrally"""
        coeffs = np.fft.fft2(field.values, norm="forward")
        multiplier = np.where(self.band, self.eigenvalues ** (self.params.alpha / 2.0 * power), 0.0)
        return SpectralField(coeffs * multiplier).to_grid()

    def cm_norm_sq(self, field: GridField) -> float:
        return cm_norm_sq(field, self.params)


def sample_prior(params: PriorParams, size: int, seed: SeedLike) -> GridField:
    """
    Draw one realization of N(0, C^{alpha/2}) on the size x size grid.

    Args:
        params: Prior parameters
        size: Grid points per axis, a power of two
        seed: Seed or Generator; fixes the draw

    Returns:
        Continuous GridField
    """
    return SpectralPrior(params, size).sample(seed)


def cm_norm_sq(field: GridField, params: PriorParams) -> float:
    """
    Cameron-Martin norm squared, sum_k |u_k|^2 / lambda_k.

    Args:
        field: Continuous grid field
        params: Prior parameters

    Returns:
        ||u||_E^2 >= 0
    """
    coeffs = np.fft.fft2(field.values, norm="forward")
    precision = precision_symbol(laplacian_symbol(field.size), params)
    return float(np.sum(np.abs(coeffs) ** 2 * precision))


def grid_coordinates(size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Node coordinates (X, Y), X[i, j] = i/N, Y[i, j] = j/N"""
    x = np.arange(size) / size
    return np.meshgrid(x, x, indexing="ij")
