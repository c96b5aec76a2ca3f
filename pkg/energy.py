"""
Energy Module

Variational functionals of the phase-field formulation: the double-well
potential Psi, the Onsager-Machlup functional J^eps, its rescaling I^eps, the
perimeter estimator l(N), the 1-D transition profile energy e^delta with its
infimum P^delta, and the recovery sequence used to check the Gamma-limit.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize, sparse
from scipy.interpolate import CubicSpline

from exceptions import ResolutionError, ScalingViolationError, ValidationError
from experiment_config import (
    PROFILE_BOUNDARY_PENALTY,
    PROFILE_DECREMENT_TOL,
    PROFILE_HALF_WIDTH,
    PROFILE_MAX_ITER,
    PROFILE_NODES,
    PROFILE_START_WIDTHS,
)
from logging_config import logger
from observation import ObservationSet, misfit
from spectral_prior import (
    FieldKind,
    GridField,
    PriorParams,
    SeedLike,
    SpectralField,
    SpectralPrior,
    cm_norm_sq,
    grid_coordinates,
    laplacian_symbol,
    nested_white_noise,
)

MIN_PROFILE_INTERVALS = 16


def psi(u: GridField, params: PriorParams) -> float:
    """
    Double-well potential r/eps^b * int 1/4 (1 - u^2)^2 dx, grid quadrature.
    """
    well = 0.25 * (1.0 - u.values ** 2) ** 2
    return float(params.r / params.eps ** params.b * well.mean())


def onsager_machlup(u: GridField, obs: Optional[ObservationSet], params: PriorParams) -> float:
    """
    J^eps(u) = 1/2 ||u||_E^2 + Psi(u) + misfit(u).

    Args:
        u: Continuous field
        obs: Observations, or None for no data term
        params: Prior parameters

    Returns:
        J^eps(u), finite on the grid
    """
    value = 0.5 * cm_norm_sq(u, params) + psi(u, params)
    if obs is not None:
        value += misfit(u, obs)
    return value


def i_eps(u: GridField, obs: Optional[ObservationSet], params: PriorParams) -> float:
    """
    Rescaled functional I^eps = eps^{2 a1 + 3} J^eps under the phase-field scalings.

    Derivative terms are evaluated spectrally; the data term carries no
    eps weight since 3 + 2 a1 - 2c = 0.

    Raises:
        ScalingViolationError: If a <= 0 or the scaling relations fail
    """
    p = params
    a = p.scaling_gap
    if a <= 0:
        raise ScalingViolationError(f"Scaling gap a = 3 + 2(a1 - a3) must be > 0, got {a}", a=a)
    if not p.satisfies_scalings():
        raise ScalingViolationError(
            f"Parameters do not satisfy the phase-field scalings "
            f"(a1={p.a1}, a2={p.a2}, b={p.b}, c={p.c})",
            a=a
        )

    power = np.abs(np.fft.fft2(u.values, norm="forward")) ** 2
    s = laplacian_symbol(u.size)
    lap_sq = float(np.sum(s ** 2 * power))
    grad_sq = float(np.sum(s * power))
    l2_sq = float(np.sum(power))
    well = float(np.mean(0.25 * (1.0 - u.values ** 2) ** 2))

    value = (
        0.5 * p.delta * p.eps ** 3 * lap_sq
        + 0.5 * p.delta * p.q * p.eps * grad_sq
        + p.r / p.eps * well
        + 0.5 * p.delta * p.tau ** 2 * p.eps ** a * l2_sq
    )
    if obs is not None:
        value += 0.5 * obs.weighted_residual_sq(u)
    return value


def perimeter_estimate(w: GridField) -> float:
    """
    l(N) = 1/(2 N^2) sum |D^N w| with periodic central differences.

    Raises:
        ValidationError: If w is not binary
    """
    if not w.is_binary:
        raise ValidationError("Perimeter estimation needs a binary field", field="w")

    v = w.values
    n = w.size
    dx = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) * (n / 2.0)
    dy = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) * (n / 2.0)
    return float(np.sqrt(dx ** 2 + dy ** 2).sum() / (2.0 * n ** 2))


@dataclass
class InterfaceStudy:
    """l(N) for one white-noise realization, per alpha"""
    sizes: Tuple[int, ...]
    lengths: Dict[float, np.ndarray]
    seed: Optional[int] = None

    def loglog_slope(self, alpha: float, points: int = 2) -> float:
        """Least-squares slope of log l against log N over the last `points` sizes"""
        logs_n = np.log(np.asarray(self.sizes[-points:], dtype=float))
        logs_l = np.log(self.lengths[alpha][-points:])
        return float(np.polyfit(logs_n, logs_l, 1)[0])

    def successive_differences(self, alpha: float) -> np.ndarray:
        return np.abs(np.diff(self.lengths[alpha]))

    def rows(self) -> List[Tuple[float, int, float]]:
        return [
            (alpha, size, float(length))
            for alpha, lengths in self.lengths.items()
            for size, length in zip(self.sizes, lengths)
        ]


def interface_scaling_study(
    alphas: Sequence[float],
    sizes: Sequence[int],
    seed: SeedLike,
    params: Optional[PriorParams] = None,
) -> InterfaceStudy:
    """
    Zero level set length of one prior realization as the grid is refined.

    A single white-noise draw on the finest band is truncated to every
    coarser band, so all grids share their low modes.

    Args:
        alphas: Regularity exponents
        sizes: Increasing grid sizes
        seed: Seed for the white noise
        params: Prior parameters (alpha is overridden); level set row by default

    Returns:
        InterfaceStudy
    """
    params = params or PriorParams(delta=1.0, tau=50.0, q=0.0)
    sizes = tuple(sorted(sizes))
    rng = np.random.default_rng(seed)
    noise = SpectralField(nested_white_noise(sizes[-1], rng))

    lengths = {}
    for alpha in alphas:
        values = []
        for size in sizes:
            prior = SpectralPrior(params.replace(alpha=alpha), size)
            v = prior.synthesize(noise.truncate(size).coeffs)
            values.append(perimeter_estimate(v.sign()))
        lengths[alpha] = np.asarray(values)
        logger.debug("Interface study row", alpha=alpha, lengths=[round(x, 5) for x in values])

    return InterfaceStudy(sizes, lengths, seed if isinstance(seed, int) else None)


@dataclass(frozen=True)
class ProfileGrid:
    """Odd 1-D profile on M + 1 uniform nodes over [-T, T]"""
    half_width: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        intervals = values.size - 1
        if intervals < MIN_PROFILE_INTERVALS:
            raise ResolutionError(
                f"Profile grid needs at least {MIN_PROFILE_INTERVALS} intervals",
                required=MIN_PROFILE_INTERVALS,
                actual=intervals
            )
        if intervals % 2:
            raise ValidationError("Profile grid needs an even number of intervals", field="values")
        if not np.allclose(values, -values[::-1], rtol=0.0, atol=1e-12):
            raise ValidationError("Profile values must be odd, U(-t) = -U(t)", field="values")
        object.__setattr__(self, "values", values)

    @property
    def intervals(self) -> int:
        return self.values.size - 1

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.intervals

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.values.size)

    @property
    def half(self) -> np.ndarray:
        """Values at the positive nodes"""
        return self.values[self.intervals // 2 + 1:]

    @classmethod
    def from_half(cls, half_width: float, half: np.ndarray) -> "ProfileGrid":
        half = np.asarray(half, dtype=float)
        return cls(half_width, np.concatenate([-half[::-1], [0.0], half]))

    @classmethod
    def from_function(cls, half_width: float, intervals: int, func) -> "ProfileGrid":
        if intervals < MIN_PROFILE_INTERVALS:
            raise ResolutionError(
                f"Profile grid needs at least {MIN_PROFILE_INTERVALS} intervals",
                required=MIN_PROFILE_INTERVALS,
                actual=intervals
            )
        t = np.linspace(0.0, half_width, intervals // 2 + 1)[1:]
        return cls.from_half(half_width, func(t))


class _ProfileProblem:
    """Discrete e^delta on a fixed profile grid, in the odd half-parameterization"""

    def __init__(self, params: PriorParams, half_width: float, intervals: int,
                 penalty: float = PROFILE_BOUNDARY_PENALTY):
        self.params = params
        self.half_width = half_width
        self.intervals = intervals
        self.penalty = penalty

        m = intervals
        h = 2.0 * half_width / m
        self.h = h
        n = m // 2

        d1 = sparse.diags([-1.0, 1.0], [0, 2], shape=(m - 1, m + 1)) / (2.0 * h)
        d2 = sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(m - 1, m + 1)) / h ** 2
        self.d1, self.d2 = d1.tocsr(), d2.tocsr()

        # trapezoid weights for the potential term
        self.weights = np.full(m + 1, h)
        self.weights[[0, -1]] = h / 2.0

        rows = np.concatenate([np.arange(n + 1, m + 1), np.arange(n - 1, -1, -1)])
        cols = np.concatenate([np.arange(n), np.arange(n)])
        vals = np.concatenate([np.ones(n), -np.ones(n)])
        self.odd = sparse.csr_matrix((vals, (rows, cols)), shape=(m + 1, n))

        p = params
        quadratic = h * p.delta * (self.d2.T @ self.d2) + h * p.q * p.delta * (self.d1.T @ self.d1)
        self.quadratic = quadratic.tocsr()
        self.reduced_quadratic = (self.odd.T @ self.quadratic @ self.odd).toarray()

    def energy(self, values: np.ndarray) -> float:
        p = self.params
        smooth = 0.5 * float(values @ (self.quadratic @ values))
        well = p.r * float(self.weights @ (0.25 * (1.0 - values ** 2) ** 2))
        return smooth + well

    def objective(self, half: np.ndarray) -> Tuple[float, np.ndarray]:
        values = self.odd @ half
        grad_full = self.quadratic @ values + self.params.r * self.weights * (values ** 3 - values)
        grad = self.odd.T @ grad_full

        value = self.energy(values) + self.penalty * (half[-1] - 1.0) ** 2
        grad[-1] += 2.0 * self.penalty * (half[-1] - 1.0)
        return value, grad

    def hessian(self, half: np.ndarray) -> np.ndarray:
        values = self.odd @ half
        curvature = self.params.r * self.weights * (3.0 * values ** 2 - 1.0)
        hess = self.reduced_quadratic + (self.odd.T @ sparse.diags(curvature) @ self.odd).toarray()
        hess[-1, -1] += 2.0 * self.penalty
        return hess

    def newton_decrement(self, half: np.ndarray) -> float:
        """g^T H^{-1} g / 2, the decrease a full Newton step would predict; inf off a minimum"""
        _, grad = self.objective(half)
        try:
            factor = linalg.cho_factor(self.hessian(half))
        except linalg.LinAlgError:
            return math.inf
        return 0.5 * float(grad @ linalg.cho_solve(factor, grad))

    def positive_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.half_width, self.intervals // 2 + 1)[1:]


def profile_energy(profile: ProfileGrid, params: PriorParams) -> float:
    """
    e^delta(U) by trapezoid quadrature with central differences for U', U''.

    Raises:
        ResolutionError: If the profile grid has fewer than 16 intervals
    """
    problem = _ProfileProblem(params, profile.half_width, profile.intervals)
    return problem.energy(profile.values)


def modica_mortola_bound(params: PriorParams) -> float:
    """Lower bound (8/3) sqrt(q delta r / 8), obtained by dropping the U'' term"""
    return 8.0 / 3.0 * math.sqrt(params.q * params.delta * params.r / 8.0)


def tanh_upper_bound(
    params: PriorParams,
    half_width: float = PROFILE_HALF_WIDTH,
    intervals: int = PROFILE_NODES,
) -> Tuple[float, float]:
    """
    Best energy over the family tanh(t / s).

    Returns:
        (energy, width s)
    """
    problem = _ProfileProblem(params, half_width, intervals)
    t = problem.positive_nodes()

    def energy_for(width: float) -> float:
        return problem.energy(problem.odd @ np.tanh(t / width))

    result = optimize.minimize_scalar(energy_for, bounds=(0.02, 5.0), method="bounded",
                                      options={"xatol": 1e-8})
    return float(result.fun), float(result.x)


@dataclass
class ProfileResult:
    """Outcome of the P^delta minimization"""
    energy: float
    profile: ProfileGrid
    converged: bool
    lower_bound: float
    upper_bound: float
    tanh_width: float
    decrement: float = math.nan
    start_energies: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p_delta": self.energy,
            "converged": self.converged,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "tanh_width": self.tanh_width,
            "newton_decrement": self.decrement,
            "gap_to_lower": self.energy - self.lower_bound,
            "gap_to_upper": self.upper_bound - self.energy,
            "start_energies": self.start_energies,
            "intervals": self.profile.intervals,
            "half_width": self.profile.half_width,
        }


def p_delta(
    params: PriorParams,
    half_width: float = PROFILE_HALF_WIDTH,
    intervals: int = PROFILE_NODES,
    start_widths: Sequence[float] = PROFILE_START_WIDTHS,
    max_iter: int = PROFILE_MAX_ITER,
) -> ProfileResult:
    """
    P^delta = inf over odd U of e^delta(U).

    Multi-start trust-region Newton on the odd half-parameterization, with
    the boundary penalty (U(T) - 1)^2 * 1e3. The result counts as converged
    when the Hessian is positive definite and the Newton decrement is below
    PROFILE_DECREMENT_TOL times the energy, whatever the trust-region
    status. Otherwise a warning is logged and the best value found is
    returned.

    Args:
        params: Needs q, delta, r > 0
        half_width: T
        intervals: M
        start_widths: tanh widths for the starting profiles
        max_iter: Iteration cap per start

    Returns:
        ProfileResult
    """
    for name in ("q", "delta", "r"):
        if getattr(params, name) <= 0:
            raise ValidationError(f"P^delta needs {name} > 0", field=name)
    if intervals < MIN_PROFILE_INTERVALS:
        raise ResolutionError(
            f"Profile grid needs at least {MIN_PROFILE_INTERVALS} intervals",
            required=MIN_PROFILE_INTERVALS,
            actual=intervals
        )

    problem = _ProfileProblem(params, half_width, intervals)
    t = problem.positive_nodes()

    best = None
    start_energies = []
    for width in start_widths:
        result = optimize.minimize(
            problem.objective,
            np.tanh(t / width),
            jac=True,
            hess=problem.hessian,
            method="trust-exact",
            options={"maxiter": max_iter, "gtol": 1e-8},
        )
        energy = problem.energy(problem.odd @ result.x)
        start_energies.append(energy)
        if best is None or energy < best[0]:
            best = (energy, result)

    energy, result = best
    decrement = problem.newton_decrement(result.x)
    converged = decrement <= PROFILE_DECREMENT_TOL * abs(energy)
    if not converged:
        logger.warning("P^delta minimization did not converge", reason=str(result.message),
                       energy=energy, decrement=decrement)

    upper, tanh_width = tanh_upper_bound(params, half_width, intervals)
    return ProfileResult(
        energy=energy,
        profile=ProfileGrid.from_half(half_width, result.x),
        converged=bool(converged),
        lower_bound=modica_mortola_bound(params),
        upper_bound=upper,
        tanh_width=tanh_width,
        decrement=decrement,
        start_energies=start_energies,
    )


@dataclass(frozen=True)
class Disc:
    """Disc in the periodic unit square"""
    center: Tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def signed_distance(self, size: int) -> np.ndarray:
        """|x - x0| - R with the periodic minimum image, negative inside"""
        x, y = grid_coordinates(size)
        dx = (x - self.center[0] + 0.5) % 1.0 - 0.5
        dy = (y - self.center[1] + 0.5) % 1.0 - 0.5
        return np.hypot(dx, dy) - self.radius

    def indicator(self, size: int) -> GridField:
        return GridField(np.where(self.signed_distance(size) < 0, 1.0, -1.0), FieldKind.BINARY)


def recovery_sequence(
    shape: Disc,
    eps: float,
    params: PriorParams,
    size: int,
    profile: Optional[ProfileGrid] = None,
) -> GridField:
    """
    u^eps(x) = U(-d(x) / eps) with d the signed distance to the disc boundary.

    Args:
        shape: Disc (analytic signed distance)
        eps: Interface scale
        params: Prior parameters, used when the profile must be computed
        size: Grid size
        profile: Minimizing profile; computed with p_delta when omitted

    Raises:
        ResolutionError: If eps is below two grid cells
    """
    if eps < 2.0 / size:
        raise ResolutionError(
            f"eps = {eps} is below two cells of a {size} grid",
            required=2.0 / size,
            actual=eps
        )

    profile = profile or p_delta(params).profile
    spline = CubicSpline(profile.nodes, profile.values)

    t = -shape.signed_distance(size) / eps
    inside = np.abs(t) <= profile.half_width
    values = np.where(inside, spline(np.clip(t, -profile.half_width, profile.half_width)), np.sign(t))
    return GridField(values)


@dataclass
class GammaCheckReport:
    """I^eps(u^eps) along an eps ladder against the Gamma-limit value"""
    eps_list: List[float]
    i_eps_values: List[float]
    target: float
    p_delta: float
    limit_estimate: float

    @property
    def gaps(self) -> List[float]:
        return [abs(value - self.target) / self.target for value in self.i_eps_values]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "p_delta": self.p_delta,
            "limit_estimate": self.limit_estimate,
            "eps": list(self.eps_list),
            "estimates": list(self.i_eps_values),
            "gaps": self.gaps,
        }


def gamma_check(
    shape: Disc,
    eps_ladder: Sequence[float],
    params: PriorParams,
    size: int,
    profile_result: Optional[ProfileResult] = None,
    obs: Optional[ObservationSet] = None,
) -> GammaCheckReport:
    """
    Evaluate I^eps on the recovery sequence for each eps and compare with
    P^delta times the perimeter of the shape.

    Args:
        shape: Disc
        eps_ladder: Decreasing interface scales
        params: Phase-field parameters satisfying the scalings (eps is overridden)
        size: Grid size resolving every eps
        profile_result: Precomputed P^delta result
        obs: Observations; None switches the data term off

    Returns:
        GammaCheckReport
    """
    profile_result = profile_result or p_delta(params)
    target = profile_result.energy * shape.perimeter

    values = []
    for eps in eps_ladder:
        scaled = params.replace(eps=eps)
        u = recovery_sequence(shape, eps, scaled, size, profile_result.profile)
        values.append(i_eps(u, obs, scaled))
        logger.debug("Gamma check point", eps=eps, i_eps=values[-1], target=target)

    smallest = int(np.argmin(eps_ladder))
    return GammaCheckReport(
        eps_list=list(eps_ladder),
        i_eps_values=values,
        target=target,
        p_delta=profile_result.energy,
        limit_estimate=values[smallest],
    )
