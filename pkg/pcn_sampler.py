"""
pCN Sampler Module

Preconditioned Crank-Nicolson MCMC for measures with density exp(-A(u))
against N(0, C^{alpha/2}). Proposals are built in spectral space; every step
draws a full white-noise vector and one uniform, accepted or not, so the
random stream is a fixed function of the step count.
"""
import json
import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Deque, List, Optional, Sequence

import numpy as np
from scipy import stats
from tqdm import tqdm

from energy import perimeter_estimate
from exceptions import ConfigurationError, PerimeterRegimeError, ValidationError
from experiment_config import (
    ACCEPTANCE_WINDOW,
    DEFAULT_THIN,
    PROGRESS_LOG_EVERY,
    STABILITY_ABS_TOL,
    STABILITY_SMOOTHING,
)
from logging_config import logger
from observation import TruthField
from posteriors import TargetSpec, neg_log_density, threshold
from spectral_prior import GridField, SeedLike, SpectralField
from validators import validate_beta

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class ChainDiagnostics:
    """Windowed acceptance rates and thinned traces"""
    acceptance_steps: List[int] = field(default_factory=list)
    acceptance_rates: List[float] = field(default_factory=list)
    trace_steps: List[int] = field(default_factory=list)
    potential_trace: List[float] = field(default_factory=list)
    perimeter_trace: List[float] = field(default_factory=list)

    def rows(self) -> List[dict]:
        """One row per thinned step, with the latest completed window rate"""
        rows = []
        window = 0
        for i, step in enumerate(self.trace_steps):
            while window < len(self.acceptance_steps) and self.acceptance_steps[window] <= step:
                window += 1
            rows.append({
                "step": step,
                "acceptance_rate": self.acceptance_rates[window - 1] if window else math.nan,
                "A": self.potential_trace[i],
                "perimeter": self.perimeter_trace[i] if self.perimeter_trace else math.nan,
            })
        return rows


@dataclass
class ChainState:
    """Mutable state of one pCN chain"""
    coeffs: SpectralField
    field: GridField
    potential: float
    beta: float
    burn_in: int
    rng: np.random.Generator
    step: int = 0
    accepted: int = 0
    window: Deque[bool] = field(default_factory=lambda: deque(maxlen=ACCEPTANCE_WINDOW))
    running_sum: Optional[np.ndarray] = None
    sample_count: int = 0
    diagnostics: ChainDiagnostics = field(default_factory=ChainDiagnostics)

    def __post_init__(self):
        result = validate_beta(self.beta)
        if not result.is_valid:
            raise ValidationError(result.error, result.field)
        if self.running_sum is None:
            self.running_sum = np.zeros_like(self.field.values)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.step if self.step else 0.0

    def mean(self) -> GridField:
        if not self.sample_count:
            raise ValidationError("No post-burn-in samples have been accumulated", field="burn_in")
        return GridField(self.running_sum / self.sample_count)


@dataclass
class ChainResult:
    mean: GridField
    thresholded_mean: GridField
    diagnostics: ChainDiagnostics
    checkpoints: List[Path]
    state: ChainState
    duration_seconds: float = 0.0

    @property
    def acceptance_rate(self) -> float:
        return self.state.acceptance_rate


def initial_state(
    target: TargetSpec,
    size: int,
    beta: float,
    burn_in: int,
    seed: SeedLike,
) -> ChainState:
    """Start a chain from a draw of the Gaussian reference measure"""
    rng = np.random.default_rng(seed)
    prior = target.spectral_prior(size)
    coeffs = prior.sample_coefficients(rng)
    current = coeffs.to_grid()
    return ChainState(
        coeffs=coeffs,
        field=current,
        potential=neg_log_density(current, target),
        beta=beta,
        burn_in=burn_in,
        rng=rng,
    )


def pcn_step(state: ChainState, target: TargetSpec, rng: Optional[np.random.Generator] = None) -> bool:
    """
    Advance the chain by one pCN step.

    Proposal w' = sqrt(1 - beta^2) w + beta xi with xi ~ N(0, C^{alpha/2}),
    accepted when log U < A(w) - A(w'). A rejected step leaves the
    coefficients untouched.

    Args:
        state: Chain state, updated in place
        target: Posterior target
        rng: Generator; the state's own stream by default

    Returns:
        True if the proposal was accepted
    """
    rng = rng or state.rng
    prior = target.spectral_prior(state.field.size)

    xi = prior.coefficients(prior.white_noise(rng))
    proposal = math.sqrt(1.0 - state.beta ** 2) * state.coeffs.coeffs + state.beta * xi
    proposed_field = SpectralField(proposal).to_grid()
    proposed_potential = neg_log_density(proposed_field, target)

    uniform = rng.uniform()
    log_u = math.log(uniform) if uniform > 0 else -math.inf
    accept = log_u < state.potential - proposed_potential

    if accept:
        state.coeffs = SpectralField(proposal)
        state.field = proposed_field
        state.potential = proposed_potential
        state.accepted += 1

    state.step += 1
    state.window.append(accept)

    if state.step > state.burn_in:
        state.running_sum += state.field.values
        state.sample_count += 1

    return accept


def _record(state: ChainState, target: TargetSpec, thin: int):
    step = state.step
    if step % ACCEPTANCE_WINDOW == 0:
        state.diagnostics.acceptance_steps.append(step)
        state.diagnostics.acceptance_rates.append(float(np.mean(state.window)))

    if step % thin == 0:
        state.diagnostics.trace_steps.append(step)
        state.diagnostics.potential_trace.append(state.potential)
        if target.is_level_set:
            state.diagnostics.perimeter_trace.append(perimeter_estimate(threshold(state.field)))


def save_checkpoint(state: ChainState, path: Path) -> Path:
    """
    Write the full chain state to a versioned .npz container.

    Resuming from it with load_checkpoint reproduces the uninterrupted
    chain bitwise.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = state.diagnostics
    with open(path, "wb") as handle:
        np.savez(
            handle,
            version=CHECKPOINT_FORMAT_VERSION,
            step=state.step,
            accepted=state.accepted,
            beta=state.beta,
            burn_in=state.burn_in,
            coeffs=state.coeffs.coeffs,
            potential=state.potential,
            rng_state=json.dumps(state.rng.bit_generator.state),
            rng_name=type(state.rng.bit_generator).__name__,
            window=np.asarray(state.window, dtype=bool),
            running_sum=state.running_sum,
            sample_count=state.sample_count,
            acceptance_steps=np.asarray(d.acceptance_steps, dtype=np.int64),
            acceptance_rates=np.asarray(d.acceptance_rates, dtype=float),
            trace_steps=np.asarray(d.trace_steps, dtype=np.int64),
            potential_trace=np.asarray(d.potential_trace, dtype=float),
            perimeter_trace=np.asarray(d.perimeter_trace, dtype=float),
        )
    return path


def load_checkpoint(path: Path) -> ChainState:
    """
    Restore a ChainState written by save_checkpoint.

    Raises:
        ConfigurationError: If the container version is not supported
    """
    with np.load(Path(path)) as data:
        version = int(data["version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ConfigurationError(
                f"Unsupported checkpoint version {version}",
                invalid_keys=["checkpoint"]
            )

        bit_generator = getattr(np.random, str(data["rng_name"]))()
        bit_generator.state = json.loads(str(data["rng_state"]))
        coeffs = SpectralField(data["coeffs"].copy())

        window: Deque[bool] = deque(maxlen=ACCEPTANCE_WINDOW)
        window.extend(bool(flag) for flag in data["window"])

        diagnostics = ChainDiagnostics(
            acceptance_steps=[int(s) for s in data["acceptance_steps"]],
            acceptance_rates=[float(r) for r in data["acceptance_rates"]],
            trace_steps=[int(s) for s in data["trace_steps"]],
            potential_trace=[float(a) for a in data["potential_trace"]],
            perimeter_trace=[float(p) for p in data["perimeter_trace"]],
        )

        return ChainState(
            coeffs=coeffs,
            field=coeffs.to_grid(),
            potential=float(data["potential"]),
            beta=float(data["beta"]),
            burn_in=int(data["burn_in"]),
            rng=np.random.Generator(bit_generator),
            step=int(data["step"]),
            accepted=int(data["accepted"]),
            window=window,
            running_sum=data["running_sum"].copy(),
            sample_count=int(data["sample_count"]),
            diagnostics=diagnostics,
        )


def run_chain(
    target: TargetSpec,
    size: int,
    steps: int,
    beta: float,
    burn_in: Optional[int] = None,
    seed: SeedLike = None,
    thin: int = DEFAULT_THIN,
    checkpoint_every: Optional[int] = None,
    checkpoint_dir: Optional[Path] = None,
    resume_from: Optional[Path] = None,
    progress: bool = False,
) -> ChainResult:
    """
    Run a pCN chain and return its post-burn-in ergodic mean.

    Args:
        target: Posterior target
        size: Grid size
        steps: Total number of steps M
        beta: Proposal parameter in (0, 1]
        burn_in: Discarded steps, M // 2 by default
        seed: Seed or SeedSequence; fixes the whole chain
        thin: Trace recording interval
        checkpoint_every: Write a checkpoint every this many steps
        checkpoint_dir: Directory for checkpoints
        resume_from: Checkpoint to continue from; seed is then ignored
        progress: Show a tqdm progress bar

    Returns:
        ChainResult with mean, S(mean), diagnostics and checkpoint paths
    """
    burn_in = steps // 2 if burn_in is None else burn_in
    if not 0 <= burn_in < steps:
        raise ValidationError(f"burn_in must lie in [0, {steps}), got {burn_in}", field="burn_in")
    if thin < 1:
        raise ValidationError(f"thin must be >= 1, got {thin}", field="thin")
    if checkpoint_every and checkpoint_dir is None:
        raise ConfigurationError("checkpoint_every needs a checkpoint_dir", invalid_keys=["checkpoint_dir"])

    if resume_from is not None:
        state = load_checkpoint(resume_from)
        logger.info("Resuming chain", checkpoint=str(resume_from), step=state.step)
    else:
        state = initial_state(target, size, beta, burn_in, seed)

    logger.chain_start(target.kind.value, steps, beta, size=size, burn_in=burn_in)
    start = time.time()
    checkpoints: List[Path] = []

    for _ in tqdm(range(state.step, steps), desc=target.kind.value, disable=not progress, leave=False):
        pcn_step(state, target)
        _record(state, target, thin)

        if state.step % PROGRESS_LOG_EVERY == 0:
            logger.chain_progress(state.step, state.acceptance_rate, state.potential)
        if checkpoint_every and state.step % checkpoint_every == 0:
            path = Path(checkpoint_dir) / f"checkpoint_{state.step:08d}.npz"
            checkpoints.append(save_checkpoint(state, path))

    duration = time.time() - start
    logger.chain_complete(state.step, state.acceptance_rate, duration)

    mean = state.mean()
    return ChainResult(
        mean=mean,
        thresholded_mean=threshold(mean),
        diagnostics=state.diagnostics,
        checkpoints=checkpoints,
        state=state,
        duration_seconds=duration,
    )


def _run_chain_job(args) -> ChainResult:
    target, size, steps, beta, burn_in, seed, thin = args
    return run_chain(target, size, steps, beta, burn_in, seed, thin)


def run_chains(
    target: TargetSpec,
    size: int,
    steps: int,
    beta: float,
    chains: int,
    seed: Optional[int] = None,
    burn_in: Optional[int] = None,
    thin: int = DEFAULT_THIN,
    workers: int = 1,
) -> List[ChainResult]:
    """
    Independent chains on disjoint substreams of one master seed.

    Args:
        chains: Number of chains
        workers: Processes; 1 runs the chains sequentially

    Returns:
        One ChainResult per chain, in substream order
    """
    seeds = np.random.SeedSequence(seed).spawn(chains)
    jobs = [(target, size, steps, beta, burn_in, child, thin) for child in seeds]

    if workers <= 1:
        return [_run_chain_job(job) for job in jobs]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chain_job, jobs))


def pooled_mean(results: Sequence[ChainResult]) -> GridField:
    """Sample-weighted mean over several chains"""
    total = sum(result.state.running_sum for result in results)
    count = sum(result.state.sample_count for result in results)
    return GridField(total / count)


def stabilization_step(
    diagnostics: ChainDiagnostics,
    tolerance: float = 0.1,
    consecutive: int = 50,
    smoothing: int = STABILITY_SMOOTHING,
    atol: float = STABILITY_ABS_TOL,
) -> Optional[int]:
    """
    First step from which the acceptance rate settles.

    Window rates are averaged over `smoothing` consecutive windows. The chain
    has settled at window s when the smoothed rate of each of the
    `consecutive` windows starting at s stays within
    max(tolerance * rate_s, atol) of rate_s.

    Returns:
        Step index, or None if the chain never stabilizes
    """
    rates = np.asarray(diagnostics.acceptance_rates, dtype=float)
    if rates.size < smoothing:
        return None
    smoothed = np.convolve(rates, np.ones(smoothing) / smoothing, mode="valid")
    for start in range(smoothed.size - consecutive + 1):
        reference = smoothed[start]
        band = max(tolerance * reference, atol)
        if np.all(np.abs(smoothed[start:start + consecutive] - reference) <= band):
            return diagnostics.acceptance_steps[start + smoothing - 1]
    return None


def batch_means_variance(trace: Sequence[float], batches: int = 20) -> float:
    """Batch-means estimate of the variance of the trace average"""
    values = np.asarray(trace, dtype=float)
    size = values.size // batches
    if size < 1:
        raise ValidationError(f"Need at least {batches} trace values, got {values.size}", field="trace")
    means = values[: size * batches].reshape(batches, size).mean(axis=1)
    return float(means.var(ddof=1) / batches)


@dataclass
class PerimeterHistogram:
    """Prior and posterior samples of l(N) with the truth as reference"""
    prior_lengths: np.ndarray
    posterior_lengths: np.ndarray
    truth_length: Optional[float]
    bins: int = 30

    def edges(self) -> np.ndarray:
        both = np.concatenate([self.prior_lengths, self.posterior_lengths])
        return np.histogram_bin_edges(both, bins=self.bins)

    def histograms(self):
        edges = self.edges()
        prior, _ = np.histogram(self.prior_lengths, bins=edges, density=True)
        posterior, _ = np.histogram(self.posterior_lengths, bins=edges, density=True)
        return edges, prior, posterior

    def posterior_mode(self) -> float:
        counts, edges = np.histogram(self.posterior_lengths, bins=self.bins)
        i = int(np.argmax(counts))
        return float(0.5 * (edges[i] + edges[i + 1]))

    def ks_statistic(self) -> float:
        return float(stats.ks_2samp(self.prior_lengths, self.posterior_lengths).statistic)

    def ks_pvalue(self) -> float:
        return float(stats.ks_2samp(self.prior_lengths, self.posterior_lengths).pvalue)

    def summary(self) -> dict:
        return {
            "prior_mean": float(self.prior_lengths.mean()),
            "prior_std": float(self.prior_lengths.std()),
            "posterior_mean": float(self.posterior_lengths.mean()),
            "posterior_std": float(self.posterior_lengths.std()),
            "posterior_mode": self.posterior_mode(),
            "truth_length": self.truth_length,
        }


def perimeter_posterior(
    target: TargetSpec,
    chain: ChainResult,
    size: int,
    prior_samples: int = 1000,
    seed: SeedLike = None,
    truth: Optional[TruthField] = None,
    burn_in: Optional[int] = None,
) -> PerimeterHistogram:
    """
    Prior and posterior distributions of the zero level set length.

    Args:
        target: Level set target with alpha > 2
        chain: Output of run_chain on target
        size: Inversion grid size
        prior_samples: Independent prior draws
        seed: Seed for the prior draws
        truth: Reference truth, measured on the inversion grid
        burn_in: Trace steps to drop; the chain's burn-in by default

    Raises:
        PerimeterRegimeError: If alpha <= 2
        ValidationError: If the target is not a level set target
    """
    if not target.is_level_set:
        raise ValidationError("Perimeter statistics need a level set target", field="kind")
    if target.prior.alpha <= 2:
        raise PerimeterRegimeError(target.prior.alpha)

    burn_in = chain.state.burn_in if burn_in is None else burn_in
    d = chain.diagnostics
    posterior = np.asarray(
        [length for step, length in zip(d.trace_steps, d.perimeter_trace) if step > burn_in]
    )

    rng = np.random.default_rng(seed)
    prior = target.spectral_prior(size)
    prior_lengths = np.asarray(
        [perimeter_estimate(threshold(prior.sample(rng))) for _ in range(prior_samples)]
    )

    truth_length = perimeter_estimate(truth.downsample(size)) if truth is not None else None
    return PerimeterHistogram(prior_lengths, posterior, truth_length)
