"""
Experiments Module

End-to-end inversion runs: truth generation, data synthesis, phase-field /
level set / GP inversion, diagnostics and a manifest JSON holding every
parameter and seed that affects the outputs.
"""
import dataclasses
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Set, Union

import numpy as np

from exceptions import ConfigurationError, GridMismatchError, ValidationError
from experiment_config import (
    BETA_BANDS,
    DEFAULT_BETA,
    DEFAULT_NOISE_REGIME,
    DEFAULT_THIN,
    DESK_SCALE,
    PAPER_SCALE,
    RANDOM_LAYOUT_POINTS,
    TRUTH_GRID_SIZES,
    UNIFORM_LAYOUT_PER_AXIS,
)
from field_io import (
    output_root,
    read_field_csv,
    remove_run_directory,
    run_directory_name,
    write_field,
    write_json,
    write_matrix_csv,
    write_observations,
    write_rows_csv,
)
from gp_regression import gp_solve
from logging_config import logger
from observation import (
    TRUTH_FACTORIES,
    ObservationLayout,
    TruthField,
    default_window,
    random_layout,
    synthesize_data,
    uniform_layout,
)
from pcn_sampler import perimeter_posterior, pooled_mean, run_chain, run_chains, stabilization_step
from posteriors import TargetKind, TargetSpec, preset_params, threshold
from spectral_prior import FieldKind, GridField
from validators import ValidationResult, validate_experiment_config

MANIFEST_VERSION = 1
VOLATILE_MANIFEST_KEYS = ("wall_time_seconds", "created_at")


@dataclass
class ExperimentConfig:
    """One inversion run; None means "use the preset for this method/regime/truth" """
    method: str = "level_set"
    noise_regime: str = DEFAULT_NOISE_REGIME
    truth: str = "A"
    truth_file: Optional[str] = None
    grid_size: int = DESK_SCALE["grid_size"]
    truth_size: Optional[int] = None
    steps: int = DESK_SCALE["steps"]
    burn_in: Optional[int] = None
    beta: Optional[float] = None
    thin: int = DEFAULT_THIN
    seed: int = 0
    data_seed: Optional[int] = None
    layout: Optional[str] = None
    observations: Optional[int] = None
    window: Optional[float] = None
    delta: Optional[float] = None
    q: Optional[float] = None
    tau: Optional[float] = None
    r: Optional[float] = None
    alpha: Optional[float] = None
    chains: int = 1
    workers: int = 1
    perimeter: bool = False
    prior_samples: int = 1000
    checkpoint_every: Optional[int] = None
    output_dir: Optional[str] = None
    paper_scale: bool = False
    progress: bool = False
    explicit_keys: Set[str] = field(default_factory=set, repr=False, compare=False)

    def __post_init__(self):
        if self.truth_size is None:
            self.truth_size = TRUTH_GRID_SIZES.get(self.truth)
        if self.burn_in is None and isinstance(self.steps, int):
            self.burn_in = self.steps // 2
        if self.data_seed is None:
            self.data_seed = self.seed
        if self.layout is None:
            self.layout = "random" if self.truth == "C" else "uniform"

    @property
    def resolved_beta(self) -> Optional[float]:
        if self.beta is not None:
            return self.beta
        return DEFAULT_BETA.get(self.method)

    @property
    def resolved_window(self) -> float:
        return self.window if self.window is not None else default_window(self.grid_size)

    def to_dict(self) -> Dict[str, Any]:
        values = dataclasses.asdict(self)
        values.pop("explicit_keys")
        return values

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)} - {"explicit_keys"}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigurationError(f"Unknown configuration keys: {', '.join(unknown)}", invalid_keys=unknown)
        config = cls(**values)
        config.explicit_keys = set(values)
        return config


_INT_KEYS = {"grid_size", "truth_size", "steps", "burn_in", "thin", "seed", "data_seed",
             "observations", "chains", "workers", "prior_samples", "checkpoint_every"}
_FLOAT_KEYS = {"beta", "window", "delta", "q", "tau", "r", "alpha"}
_BOOL_KEYS = {"perimeter", "paper_scale", "progress"}
_STR_KEYS = {"method", "noise_regime", "truth", "truth_file", "layout", "output_dir"}


def _coerce(key: str, text: str) -> Any:
    if text.lower() in ("none", ""):
        return None
    if key in _INT_KEYS:
        return int(float(text)) if "e" in text.lower() else int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    if key in _BOOL_KEYS:
        if text.lower() in ("true", "yes", "1", "on"):
            return True
        if text.lower() in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {text}")
    return text


def parse_config_text(lines: Iterable[str]) -> Dict[str, Any]:
    """
    Parse flat "key = value" lines; "#" starts a comment.

    Raises:
        ConfigurationError: Listing every unknown or unparsable key
    """
    values: Dict[str, Any] = {}
    invalid: List[str] = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            invalid.append(line)
            continue
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS:
            invalid.append(key)
            continue
        try:
            values[key] = _coerce(key, text)
        except ValueError:
            invalid.append(key)

    if invalid:
        raise ConfigurationError(f"Invalid configuration entries: {', '.join(invalid)}", invalid_keys=invalid)
    return values


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig from a config file and overrides.

    Paper scale switches the step default to the full-length runs; explicit
    values still win.

    Args:
        path: Flat key = value file
        overrides: Values from CLI flags (None entries are ignored)

    Returns:
        ExperimentConfig

    Raises:
        ConfigurationError: Listing every invalid key
    """
    values: Dict[str, Any] = {}
    if path is not None:
        with open(path) as handle:
            values.update(parse_config_text(handle))
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    explicit = set(values)

    if values.get("paper_scale"):
        values.setdefault("steps", PAPER_SCALE["steps"])
        values.setdefault("grid_size", PAPER_SCALE["grid_size"])

    config = ExperimentConfig.from_dict(values)
    config.explicit_keys = explicit
    validate_config(config)
    return config


def validate_config(config: ExperimentConfig) -> None:
    """
    Raises:
        ConfigurationError: With every failing key in invalid_keys
    """
    failures = validate_experiment_config(config)
    if config.layout not in ("uniform", "random"):
        failures.append(_invalid("layout must be uniform or random", "layout"))
    if config.perimeter and config.method == "level_set":
        alpha = config.alpha if config.alpha is not None else 2.0
        if alpha <= 2:
            failures.append(_invalid("perimeter statistics need alpha > 2", "alpha"))
    if failures:
        keys = [failure.field for failure in failures]
        message = "; ".join(failure.error for failure in failures)
        raise ConfigurationError(f"Invalid configuration: {message}", invalid_keys=keys)


def _invalid(message: str, key: str) -> ValidationResult:
    return ValidationResult.invalid(message, key)


def build_truth(config: ExperimentConfig) -> TruthField:
    """Truth A/B/C on its own fine grid, or a binary field read from CSV"""
    if config.truth == "file":
        stored = read_field_csv(Path(config.truth_file))
        return TruthField(GridField(stored.values, FieldKind.BINARY), Path(config.truth_file).stem)
    return TRUTH_FACTORIES[config.truth](config.truth_size)


def build_layout(config: ExperimentConfig) -> ObservationLayout:
    window = config.resolved_window
    if config.layout == "random":
        return random_layout(config.observations or RANDOM_LAYOUT_POINTS, window, config.data_seed)
    return uniform_layout(config.observations or UNIFORM_LAYOUT_PER_AXIS, window)


def classification_score(recon: GridField, truth: Union[TruthField, GridField]) -> float:
    """
    Fraction of grid points where the reconstruction matches the truth.

    A TruthField is downsampled to the reconstruction grid by majority vote;
    no sign flip is applied.

    Raises:
        GridMismatchError: If the grids cannot be matched
        ValidationError: If recon is not binary
    """
    if not recon.is_binary:
        raise ValidationError("classification_score needs a binary reconstruction", field="recon")

    if isinstance(truth, TruthField):
        if truth.size < recon.size:
            raise GridMismatchError(recon.size, truth.size)
        reference = truth.downsample(recon.size)
    else:
        reference = truth
    if reference.size != recon.size:
        raise GridMismatchError(recon.size, reference.size)

    return float(np.mean(recon.values == reference.values))


def run_experiment(config: ExperimentConfig) -> Path:
    """
    Run one experiment and write its artifact directory.

    Artifacts: truth and truth_downsampled, observations and sigma, mean and
    thresholded_mean (CSV + graymap), diagnostics.csv for chains, GP variance
    and gram for GP runs, perimeter histograms when requested, manifest.json.
    Partial outputs are removed on failure.

    Args:
        config: Validated configuration

    Returns:
        Run directory
    """
    validate_config(config)
    run_dir = output_root(config.output_dir) / run_directory_name(
        config.method, config.truth, config.noise_regime, config.grid_size, config.seed
    )
    if run_dir.exists():
        remove_run_directory(run_dir)

    start = time.time()
    logger.experiment_start(config.method, config.truth, output_dir=str(run_dir))

    try:
        manifest = _execute(config, run_dir)
    except Exception as e:
        remove_run_directory(run_dir)
        logger.experiment_failed(str(e), output_dir=str(run_dir))
        raise

    duration = time.time() - start
    manifest["wall_time_seconds"] = duration
    manifest["created_at"] = datetime.now(timezone.utc).isoformat()
    write_json(run_dir / "manifest.json", manifest)

    logger.experiment_complete(str(run_dir), duration, score=manifest["classification_score"])
    return run_dir


def _execute(config: ExperimentConfig, run_dir: Path) -> Dict[str, Any]:
    params = preset_params(
        config.method,
        config.noise_regime,
        delta=config.delta,
        q=config.q,
        tau=config.tau,
        r=config.r,
        alpha=config.alpha,
    )
    if config.method == "gp":
        params = params.replace(r=0.0)
    logger.info("Prior parameters", method=config.method, **params.to_dict())

    truth = build_truth(config)
    layout = build_layout(config)
    obs = synthesize_data(truth, layout, params, config.data_seed, config.grid_size)

    files: List[Path] = []
    files += write_field(truth.field, run_dir, "truth")
    files += write_field(truth.downsample(config.grid_size), run_dir, "truth_downsampled")
    files += write_observations(obs, run_dir)

    manifest: Dict[str, Any] = {
        "manifest_version": MANIFEST_VERSION,
        "config": config.to_dict(),
        "prior": params.to_dict(),
        "noise_scale": obs.noise_scale,
        "observations": obs.count,
        "window": layout.window,
        "truth": {"descriptor": truth.descriptor, "size": truth.size},
        "grid": {"points_per_axis": config.grid_size, "total_points": config.grid_size ** 2},
        "seeds": {"chain": config.seed, "data": config.data_seed},
        "explicit_keys": sorted(config.explicit_keys),
    }

    if config.method == "gp":
        ignored = sorted({"steps", "beta"} & config.explicit_keys)
        if ignored:
            logger.warning("GP regression does not sample; ignoring keys", keys=ignored)
        manifest["ignored_keys"] = ignored

        post = gp_solve(obs, params, config.grid_size)
        mean, thresholded = post.mean, post.thresholded_mean
        files += write_field(GridField(post.pointwise_variance()), run_dir, "variance")
        files += write_field(GridField(post.positive_probability()), run_dir, "positive_probability")
        files.append(write_matrix_csv(post.gram, run_dir / "gram.csv"))
    else:
        mean, thresholded = _run_chains(config, params, obs, run_dir, manifest, files, truth)

    score = classification_score(thresholded, truth)
    files += write_field(mean, run_dir, "mean")
    files += write_field(thresholded, run_dir, "thresholded_mean")

    manifest["classification_score"] = score
    manifest["files"] = sorted(path.relative_to(run_dir).as_posix() for path in files)
    return manifest


def _run_chains(config, params, obs, run_dir, manifest, files, truth):
    kind = TargetKind(config.method)
    target = TargetSpec(kind, params, obs)
    beta = config.resolved_beta

    low, high = BETA_BANDS[config.method]
    if not low <= beta <= high:
        logger.warning("beta outside the usual band", beta=beta, band=[low, high], method=config.method)

    if config.chains > 1:
        results = run_chains(target, config.grid_size, config.steps, beta, config.chains,
                             config.seed, config.burn_in, config.thin, config.workers)
        mean = pooled_mean(results)
    else:
        results = [run_chain(
            target, config.grid_size, config.steps, beta, config.burn_in, config.seed, config.thin,
            checkpoint_every=config.checkpoint_every,
            checkpoint_dir=run_dir / "checkpoints" if config.checkpoint_every else None,
            progress=config.progress,
        )]
        mean = results[0].mean
        files += results[0].checkpoints

    for i, result in enumerate(results):
        name = "diagnostics.csv" if len(results) == 1 else f"diagnostics_chain{i}.csv"
        files.append(write_rows_csv(result.diagnostics.rows(), run_dir / name,
                                    ["step", "acceptance_rate", "A", "perimeter"]))

    manifest["chain"] = {
        "beta": beta,
        "steps": config.steps,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "chains": len(results),
        "acceptance_rates": [result.acceptance_rate for result in results],
        "stabilization_steps": [stabilization_step(result.diagnostics) for result in results],
    }

    if config.perimeter and target.is_level_set:
        histogram = perimeter_posterior(target, results[0], config.grid_size, config.prior_samples,
                                        config.seed + 1, truth)
        edges, prior_density, posterior_density = histogram.histograms()
        rows = [
            {"bin_left": float(edges[i]), "bin_right": float(edges[i + 1]),
             "prior_density": float(prior_density[i]), "posterior_density": float(posterior_density[i])}
            for i in range(len(prior_density))
        ]
        files.append(write_rows_csv(rows, run_dir / "perimeter_histogram.csv",
                                    ["bin_left", "bin_right", "prior_density", "posterior_density"]))
        manifest["perimeter"] = histogram.summary()

    return mean, threshold(mean)


def load_manifest_config(path: Union[str, Path]) -> ExperimentConfig:
    """Rebuild the ExperimentConfig recorded in a manifest, for replay"""
    with open(path) as handle:
        manifest = json.load(handle)
    config = ExperimentConfig.from_dict(manifest["config"])
    config.explicit_keys = set(manifest.get("explicit_keys", []))
    return config
