"""
Observation Module

Linear forward map K (mollified point evaluation by periodic window averages),
Gaussian noise model, truth fields and synthetic data generation on a grid
finer than the inversion grid.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg, sparse

from exceptions import (
    ConfigurationError,
    InvalidCovarianceError,
    InverseCrimeError,
    ValidationError,
)
from experiment_config import TRUTH_A, TRUTH_B, TRUTH_C, WINDOW_CELLS
from spectral_prior import FieldKind, GridField, PriorParams, SeedLike, grid_coordinates


def cell_overlap_weights(centers: np.ndarray, width: float, size: int) -> np.ndarray:
    """
    Fraction of a periodic window covered by each grid cell along one axis.

    Cell i is [i/N - h/2, i/N + h/2]; window j is [c_j - w/2, c_j + w/2].

    Returns:
        (len(centers), size) array, rows summing to one
    """
    h = 1.0 / size
    nodes = np.arange(size) * h
    offset = ((nodes[None, :] - np.asarray(centers, dtype=float)[:, None] + 0.5) % 1.0) - 0.5
    half = width / 2.0
    overlap = np.clip(np.minimum(offset + h / 2, half) - np.maximum(offset - h / 2, -half), 0.0, None)
    return overlap / overlap.sum(axis=1, keepdims=True)


def default_window(inversion_size: int) -> float:
    """Averaging window side, WINDOW_CELLS inversion cells"""
    return WINDOW_CELLS / inversion_size


@dataclass(frozen=True)
class ObservationLayout:
    """J observation points, each observed through a square window of side `window`"""
    points: np.ndarray
    window: float
    _matrices: Dict[int, sparse.csr_matrix] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 2) % 1.0
        if not 0 < self.window <= 1:
            raise ValidationError(f"window must lie in (0, 1], got {self.window}", field="window")
        object.__setattr__(self, "points", points)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def matrix(self, size: int) -> sparse.csr_matrix:
        """
        Sparse (J, N^2) matrix of K on the size x size grid, acting on
        row-major flattened values. Cached per grid size.
        """
        if size in self._matrices:
            return self._matrices[size]

        if self.window < 1.0 / size:
            raise ConfigurationError(
                f"Observation window {self.window} is smaller than one cell of a {size} grid",
                invalid_keys=["window"]
            )

        wx = cell_overlap_weights(self.points[:, 0], self.window, size)
        wy = cell_overlap_weights(self.points[:, 1], self.window, size)

        rows, cols, vals = [], [], []
        for j in range(self.count):
            ix = np.flatnonzero(wx[j])
            iy = np.flatnonzero(wy[j])
            cols.append((ix[:, None] * size + iy[None, :]).ravel())
            vals.append(np.outer(wx[j, ix], wy[j, iy]).ravel())
            rows.append(np.full(ix.size * iy.size, j))

        if rows:
            data = (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols)))
            matrix = sparse.csr_matrix(data, shape=(self.count, size * size))
        else:
            matrix = sparse.csr_matrix((0, size * size))

        self._matrices[size] = matrix
        return matrix

    def representers(self, size: int) -> sparse.csr_matrix:
        """Rows are the L2 representers K* e_j on the grid (window indicators / area)"""
        return self.matrix(size) * float(size * size)


def uniform_layout(per_axis: int, window: float) -> ObservationLayout:
    """per_axis x per_axis points at cell centres of a uniform grid"""
    centres = (np.arange(per_axis) + 0.5) / per_axis
    px, py = np.meshgrid(centres, centres, indexing="ij")
    return ObservationLayout(np.column_stack([px.ravel(), py.ravel()]), window)


def random_layout(count: int, window: float, seed: SeedLike) -> ObservationLayout:
    """count points drawn uniformly on D"""
    rng = np.random.default_rng(seed)
    return ObservationLayout(rng.uniform(size=(count, 2)), window)


@dataclass(frozen=True)
class ObservationSet:
    """Data y = K u + noise_scale * eta, eta ~ N(0, sigma)"""
    layout: ObservationLayout
    y: np.ndarray
    sigma: np.ndarray
    noise_scale: float
    seed: Optional[int] = None
    _factor: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=float).reshape(y.size, y.size)

        if y.size != self.layout.count:
            raise ValidationError(
                f"Data length {y.size} does not match {self.layout.count} observation points",
                field="y"
            )
        if self.noise_scale < 0:
            raise ValidationError("noise_scale must be >= 0", field="noise_scale")

        factor = None
        if y.size:
            if not np.allclose(sigma, sigma.T, rtol=1e-12, atol=0.0):
                raise InvalidCovarianceError("Sigma is not symmetric", matrix_name="sigma")
            try:
                factor = linalg.cho_factor(sigma, lower=True)
            except linalg.LinAlgError as exc:
                raise InvalidCovarianceError(
                    f"Sigma is not positive definite: {exc}", matrix_name="sigma"
                ) from exc

        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_factor", factor)

    @property
    def count(self) -> int:
        return self.y.size

    @property
    def points(self) -> np.ndarray:
        return self.layout.points

    def apply(self, u: GridField) -> np.ndarray:
        return apply_K(u, self.layout)

    def weighted_residual_sq(self, u: GridField) -> float:
        """|Sigma^{-1/2} (y - K u)|^2"""
        if not self.count:
            return 0.0
        residual = self.y - self.apply(u)
        return float(residual @ linalg.cho_solve(self._factor, residual))

    def solve_sigma(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self._factor, rhs)

    def sigma_sqrt(self) -> np.ndarray:
        """Lower Cholesky factor L with L L^T = Sigma"""
        return np.tril(self._factor[0])

    @classmethod
    def empty(cls, window: float = 0.5) -> "ObservationSet":
        """No observations: the likelihood is constant"""
        return cls(ObservationLayout(np.zeros((0, 2)), window), np.zeros(0), np.zeros((0, 0)), 1.0)


@dataclass(frozen=True)
class TruthField:
    """Binary ground truth on a fine grid"""
    field: GridField
    descriptor: str

    def __post_init__(self):
        if not self.field.is_binary:
            raise ValidationError("Truth fields must be binary", field="field")

    @property
    def size(self) -> int:
        return self.field.size

    def downsample(self, size: int) -> GridField:
        """
        Area-weighted majority vote onto a coarser grid; exact ties give 0.
        """
        if size > self.size:
            raise ConfigurationError(
                f"Cannot downsample a {self.size} truth to a finer {size} grid",
                invalid_keys=["size"]
            )
        if size == self.size:
            return self.field

        coarse_nodes = np.arange(size) / size
        weights = cell_overlap_weights(coarse_nodes, 1.0 / size, self.size)
        averaged = weights @ self.field.values @ weights.T
        votes = np.where(np.abs(averaged) < 1e-12, 0.0, np.sign(averaged))
        return GridField(votes, FieldKind.BINARY)


def _sign_field(mask: np.ndarray) -> GridField:
    return GridField(np.where(mask, 1.0, -1.0), FieldKind.BINARY)


def truth_from_mask(mask: np.ndarray, descriptor: str = "custom") -> TruthField:
    """+1 where mask is true, -1 elsewhere"""
    return TruthField(_sign_field(np.asarray(mask, dtype=bool)), descriptor)


def truth_a(size: int) -> TruthField:
    """A single disc"""
    x, y = grid_coordinates(size)
    cx, cy = TRUTH_A["center"]
    mask = (x - cx) ** 2 + (y - cy) ** 2 < TRUTH_A["radius"] ** 2
    return truth_from_mask(mask, "A")


def truth_b(size: int) -> TruthField:
    """One large rotated ellipse and two small discs"""
    x, y = grid_coordinates(size)

    ellipse = TRUTH_B["ellipse"]
    cx, cy = ellipse["center"]
    ax, ay = ellipse["semi_axes"]
    theta = math.radians(ellipse["angle_deg"])
    u = (x - cx) * math.cos(theta) + (y - cy) * math.sin(theta)
    v = -(x - cx) * math.sin(theta) + (y - cy) * math.cos(theta)
    mask = (u / ax) ** 2 + (v / ay) ** 2 < 1.0

    for disc in TRUTH_B["discs"]:
        dx, dy = disc["center"]
        mask |= (x - dx) ** 2 + (y - dy) ** 2 < disc["radius"] ** 2

    return truth_from_mask(mask, "B")


def truth_c(size: int) -> TruthField:
    """Checkerboard at scale TRUTH_C["scale"]"""
    x, y = grid_coordinates(size)
    scale = TRUTH_C["scale"]
    # half-cell offset keeps nodes off the checkerboard lines
    parity = np.floor((x + 0.5 / size) / scale) + np.floor((y + 0.5 / size) / scale)
    return truth_from_mask(parity % 2 == 0, "C")


TRUTH_FACTORIES = {"A": truth_a, "B": truth_b, "C": truth_c}


def apply_K(u: GridField, layout: ObservationLayout) -> np.ndarray:
    """
    Window averages of u at every observation point.

    Args:
        u: Field of any kind
        layout: Observation layout (an ObservationSet's .layout)

    Returns:
        Vector of length J
    """
    return layout.matrix(u.size) @ u.values.ravel()


def synthesize_data(
    truth: TruthField,
    layout: ObservationLayout,
    params: PriorParams,
    seed: Optional[int],
    inversion_size: int,
    sigma: Optional[np.ndarray] = None,
    noise_scale: Optional[float] = None,
) -> ObservationSet:
    """
    Observe a fine-grid truth and add Gaussian noise.

    Args:
        truth: Fine-grid truth
        layout: Observation layout
        params: Prior parameters; eps**c is the default noise scale
        seed: Noise seed, recorded in the result
        inversion_size: Grid the data will be inverted on
        sigma: Noise covariance (identity by default)
        noise_scale: Override for eps**c

    Returns:
        ObservationSet

    Raises:
        InverseCrimeError: If the truth grid is not finer than the inversion grid
    """
    if truth.size <= inversion_size:
        raise InverseCrimeError(truth.size, inversion_size)

    count = layout.count
    sigma = np.eye(count) if sigma is None else np.asarray(sigma, dtype=float)
    scale = params.noise_scale if noise_scale is None else float(noise_scale)

    clean = apply_K(truth.field, layout)
    observed = ObservationSet(layout, clean, sigma, scale, seed)

    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(count)
    noisy = clean + scale * (observed.sigma_sqrt() @ xi) if count else clean

    return ObservationSet(layout, noisy, sigma, scale, seed)


def misfit(u: GridField, obs: ObservationSet) -> float:
    """
    Data misfit 1/2 eps^{-2c} |Sigma^{-1/2} (y - K u)|^2.

    Args:
        u: Field (u for phase-field, S(v) for level set)
        obs: Observations

    Returns:
        Non-negative misfit
    """
    if not obs.count:
        return 0.0
    if obs.noise_scale == 0:
        raise ValidationError("Misfit is undefined for a zero noise scale", field="noise_scale")
    return 0.5 * obs.weighted_residual_sq(u) / obs.noise_scale ** 2
