"""
GP Regression Module

Closed-form Gaussian posterior N(m_y, C_y) for the linear model with prior
N(0, C) (the r = 0 phase-field posterior), sampled by Matheron's rule.

    m_y = C K* (eps^{2c} Sigma + K C K*)^{-1} y
    C_y = C - C K* (eps^{2c} Sigma + K C K*)^{-1} K C
"""
from dataclasses import dataclass
from typing import Any, List

import numpy as np
from scipy import linalg, stats

from exceptions import InvalidCovarianceError, ValidationError
from logging_config import logger
from observation import ObservationSet
from posteriors import threshold
from spectral_prior import GridField, PriorParams, SeedLike, SpectralPrior, cm_norm_sq

GRAM_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class GPPosterior:
    """Gaussian posterior on a size x size grid"""
    params: PriorParams
    obs: ObservationSet
    prior: SpectralPrior
    mean: GridField
    gram: np.ndarray
    factor: Any
    weights: np.ndarray
    covariance_representers: np.ndarray

    @property
    def size(self) -> int:
        return self.prior.size

    @property
    def system_matrix(self) -> np.ndarray:
        """eps^{2c} Sigma + K C K*"""
        return self.obs.noise_scale ** 2 * self.obs.sigma + self.gram

    @property
    def thresholded_mean(self) -> GridField:
        return threshold(self.mean)

    def apply_covariance(self, u: GridField) -> GridField:
        """C_y u"""
        prior_part = self.prior.apply_covariance(u).values.ravel()
        coupling = linalg.cho_solve(self.factor, self.covariance_representers @ u.values.ravel() / u.values.size)
        values = prior_part - coupling @ self.covariance_representers
        return GridField(values.reshape(u.values.shape))

    def pointwise_variance(self) -> np.ndarray:
        """Diagonal of C_y at every grid node"""
        cr = self.covariance_representers
        reduction = np.sum(cr * linalg.cho_solve(self.factor, cr), axis=0)
        return (self.prior.pointwise_variance() - reduction).reshape(self.size, self.size)

    def positive_probability(self) -> np.ndarray:
        """P(S(u) = +1) = Phi(m / sigma) pointwise"""
        sigma = np.sqrt(np.clip(self.pointwise_variance(), 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(sigma > 0, self.mean.values / sigma, np.sign(self.mean.values) * np.inf)
        return stats.norm.cdf(z)

    def map_objective(self, u: GridField) -> float:
        """1/2 ||u||_E^2 + 1/2 eps^{-2c} |Sigma^{-1/2}(y - K u)|^2"""
        return 0.5 * cm_norm_sq(u, self.params) + 0.5 * self.obs.weighted_residual_sq(u) / self.obs.noise_scale ** 2

    def map_gradient(self, u: GridField, band_only: bool = True) -> GridField:
        """
        L2 gradient of map_objective.

        With band_only the gradient is projected onto the sampled band, where
        the posterior mean is the exact minimizer.
        """
        coeffs = np.fft.fft2(u.values, norm="forward")
        precision = 1.0 / self.prior.eigenvalues
        prior_grad = np.fft.ifft2(precision * coeffs, norm="forward").real

        residual = self.obs.y - self.obs.apply(u)
        representers = self.obs.layout.representers(self.size)
        data_grad = -(representers.T @ self.obs.solve_sigma(residual)) / self.obs.noise_scale ** 2

        gradient = prior_grad + data_grad.reshape(u.values.shape)
        if band_only:
            spectrum = np.fft.fft2(gradient, norm="forward") * self.prior.band
            gradient = np.fft.ifft2(spectrum, norm="forward").real
        return GridField(gradient)


def gp_solve(obs: ObservationSet, params: PriorParams, size: int) -> GPPosterior:
    """
    Build the Gaussian posterior for data obs under the prior N(0, C).

    The J representers K* e_j are mapped through C spectrally; the J x J
    system eps^{2c} Sigma + K C K* is factorized once.

    Args:
        obs: Observations
        params: Prior parameters with alpha = 2 (r is ignored)
        size: Grid size

    Returns:
        GPPosterior

    Raises:
        ValidationError: If alpha != 2
        InvalidCovarianceError: If the system matrix is not symmetric positive definite
    """
    if not obs.count:
        raise ValidationError("GP regression needs at least one observation", field="y")
    if params.alpha != 2:
        raise ValidationError(f"GP regression uses alpha = 2, got {params.alpha}", field="alpha")

    prior = SpectralPrior(params, size)
    matrix = obs.layout.matrix(size)
    representers = obs.layout.representers(size).toarray()

    multiplier = prior.covariance_multiplier
    spectra = np.fft.fft2(representers.reshape(-1, size, size), norm="forward", axes=(1, 2))
    covariance_representers = np.fft.ifft2(spectra * multiplier, norm="forward", axes=(1, 2)).real
    covariance_representers = covariance_representers.reshape(obs.count, -1)

    gram = np.asarray((matrix @ covariance_representers.T))
    scale = max(np.abs(gram).max(), 1e-300)
    asymmetry = np.abs(gram - gram.T).max() / scale
    if asymmetry > GRAM_SYMMETRY_TOL:
        raise InvalidCovarianceError(f"Gram matrix asymmetric to {asymmetry:.2e}", matrix_name="gram")

    system = obs.noise_scale ** 2 * obs.sigma + gram
    try:
        factor = linalg.cho_factor(system, lower=True)
    except linalg.LinAlgError as exc:
        raise InvalidCovarianceError(
            f"eps^2c Sigma + K C K* is not positive definite: {exc}",
            matrix_name="gram"
        ) from exc

    weights = linalg.cho_solve(factor, obs.y)
    mean = GridField((weights @ covariance_representers).reshape(size, size))
    logger.debug("GP posterior built", observations=obs.count, size=size, gram_max=float(scale))

    return GPPosterior(
        params=params,
        obs=obs,
        prior=prior,
        mean=mean,
        gram=gram,
        factor=factor,
        weights=weights,
        covariance_representers=covariance_representers,
    )


def gp_sample(post: GPPosterior, n: int, seed: SeedLike = None) -> List[GridField]:
    """
    Exact posterior draws by Matheron's rule,
    u* = u0 + C K* (eps^{2c} Sigma + K C K*)^{-1} (y - K u0 - eps^c eta).

    Args:
        post: Posterior from gp_solve
        n: Number of draws
        seed: Seed or Generator

    Returns:
        List of n continuous GridFields
    """
    rng = np.random.default_rng(seed)
    obs = post.obs
    lower = obs.sigma_sqrt()

    samples = []
    for _ in range(n):
        u0 = post.prior.sample(rng)
        eta = lower @ rng.standard_normal(obs.count)
        residual = obs.y - obs.apply(u0) - obs.noise_scale * eta
        correction = linalg.cho_solve(post.factor, residual) @ post.covariance_representers
        samples.append(GridField(u0.values + correction.reshape(post.size, post.size)))
    return samples
