"""Run configuration: one TOML file plus command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .bkt import FitConfig
from .ingest import CsvSchema


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    output_dir: str = "out"
    schema: CsvSchema = field(default_factory=CsvSchema)
    folds: int = 5
    seed: int = 0
    bins: int = 10
    alpha: float = 1.0
    min_skill_attempts: int = 5
    learn_structure: bool = False
    macro_auc: bool = False
    bkt_restarts: int = 5
    bkt_max_iters: int = 200
    bkt_tol: float = 1e-4
    bkt_guess_cap: float = 0.3
    bkt_slip_cap: float = 0.3

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    def fit_config(self) -> FitConfig:
        # all randomness flows from the single root seed
        return FitConfig(
            restarts=self.bkt_restarts,
            max_iters=self.bkt_max_iters,
            tol=self.bkt_tol,
            seed=self.seed,
            guess_cap=self.bkt_guess_cap,
            slip_cap=self.bkt_slip_cap,
        )


_TOP_LEVEL_KEYS = {
    "input",
    "output_dir",
    "folds",
    "seed",
    "bins",
    "alpha",
    "min_skill_attempts",
    "learn_structure",
    "macro_auc",
}
_SCHEMA_KEYS = {"order", "student", "problem", "skill", "correct", "original"}
_BKT_KEYS = {"restarts", "max_iters", "tol", "guess_cap", "slip_cap"}


def load_config(path: str | Path) -> RunConfig:
    """Parse a TOML config file into a RunConfig; unknown keys are errors."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)

    kwargs: dict = {}
    for key, value in data.items():
        if key == "schema":
            unknown = set(value) - _SCHEMA_KEYS
            if unknown:
                raise ValueError(f"unknown schema key(s): {', '.join(sorted(unknown))}")
            kwargs["schema"] = CsvSchema(**value)
        elif key == "bkt":
            unknown = set(value) - _BKT_KEYS
            if unknown:
                raise ValueError(f"unknown bkt key(s): {', '.join(sorted(unknown))}")
            for bk, bv in value.items():
                kwargs[f"bkt_{bk}"] = bv
        elif key in _TOP_LEVEL_KEYS:
            kwargs[key] = value
        else:
            raise ValueError(f"unknown config key: {key}")
    return RunConfig(**kwargs)


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Command-line flags win over file values; None means not given."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg
