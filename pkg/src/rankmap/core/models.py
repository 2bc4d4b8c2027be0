"""Configuration models and vocabularies for rankmap."""

import sys
from enum import Enum

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # Python 3.10 fallback mirroring enum.StrEnum semantics

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str(self.value)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(str(self.value), format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):  # type: ignore[override]
            return name.lower()

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Task(StrEnum):
    """Estimation task an encoder-decoder solves."""

    FORWARD = "forward"
    INVERSE = "inverse"
    AUTOENCODE = "autoencode"
    DENOISE = "denoise"


class Form(StrEnum):
    """Linear maps y = A x or affine maps y = A x + b."""

    LINEAR = "linear"
    AFFINE = "affine"


class FactorStrategy(StrEnum):
    """How a symmetric moment matrix is split into L L^T."""

    CHOLESKY = "cholesky-with-ridge"
    PSD = "psd-eigendecomposition"


class OptimizerKind(StrEnum):
    """First-order update rule for the trained baseline."""

    ADAM = "adam-style"
    PLAIN_GD = "plain-gd"


class ExperimentKind(StrEnum):
    """Experiment pipeline."""

    IMAGING = "imaging"
    FINANCE = "finance"
    SWE = "swe"
    SWEEP = "sweep"


class IcFamily(StrEnum):
    """Initial-condition family for shallow-water simulations."""

    GAUSSIAN_BUMP = "gaussian-bump-eta"
    GAUSSIAN_DIPOLE = "gaussian-dipole-eta"
    VELOCITY_JET = "velocity-jet"
    MIXED_UV_ETA = "mixed-uv-eta"
    RING_WAVE = "ring-wave"
    STEP_WAVE = "step-wave"

    @property
    def in_distribution(self) -> bool:
        """Whether the family belongs to the training distribution."""
        return self not in (IcFamily.RING_WAVE, IcFamily.STEP_WAVE)


IN_DISTRIBUTION_FAMILIES = [family for family in IcFamily if family.in_distribution]
OUT_OF_DISTRIBUTION_FAMILIES = [family for family in IcFamily if not family.in_distribution]


class Preset(StrEnum):
    """Named experiment presets."""

    PAPER_IMAGING = "paper-imaging"
    PAPER_SWE = "paper-swe"
    DESK_SWE = "desk-swe"
    PAPER_FINANCE = "paper-finance"
    DESK_IMAGING = "desk-imaging"
    DESK_FINANCE = "desk-finance"


class StrictModel(BaseModel):
    """Base for configuration models: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class BlurSpec(StrictModel):
    """Gaussian blur forward operator on square images."""

    image_side: int = Field(default=28, ge=1)
    kernel_side: int = Field(default=5, ge=1)
    kernel_std: float = Field(default=1.5, gt=0)
    boundary: Literal["zero-pad"] = "zero-pad"

    @field_validator("kernel_side")
    @classmethod
    def kernel_side_is_odd(cls, v: int) -> int:
        """The kernel needs a center pixel."""
        if v % 2 == 0:
            raise ValueError(f"kernel_side must be odd, got {v}")
        return v

    @model_validator(mode="after")
    def kernel_fits_image(self) -> "BlurSpec":
        if self.kernel_side > self.image_side:
            raise ValueError(
                f"kernel_side {self.kernel_side} exceeds image_side {self.image_side}"
            )
        return self

    @property
    def dimension(self) -> int:
        """Length of a vectorized image."""
        return self.image_side * self.image_side


class SyntheticImageSpec(StrictModel):
    """Seeded smooth random images standing in for an imaging dataset."""

    train_count: int = Field(default=1000, ge=1)
    test_count: int = Field(default=200, ge=0)
    smoothness: float = Field(default=2.0, gt=0)


class SyntheticMarketSpec(StrictModel):
    """Factor model with GARCH(1,1) heteroskedastic noise."""

    days: int = Field(default=2000, ge=2)
    assets: int = Field(default=10, ge=1)
    factors: int = Field(default=3, ge=1)
    garch_omega: float = Field(default=0.01, gt=0)
    garch_alpha: float = Field(default=0.1, ge=0)
    garch_beta: float = Field(default=0.85, ge=0)
    factor_volatility: float = Field(default=0.1, gt=0)
    factor_persistence: float = Field(default=0.2, gt=-1, lt=1)
    noise_scale: float = Field(default=1.0, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def garch_is_stationary(self) -> "SyntheticMarketSpec":
        if self.garch_alpha + self.garch_beta >= 1:
            raise ValueError(
                "garch_alpha + garch_beta must be < 1 for a finite unconditional variance"
            )
        return self

    @property
    def unconditional_variance(self) -> float:
        """omega / (1 - alpha - beta)."""
        return self.garch_omega / (1.0 - self.garch_alpha - self.garch_beta)


class SweParams(StrictModel):
    """Physical and numerical parameters of the shallow-water simulator."""

    g: float = Field(default=9.8, gt=0)
    H: float = Field(default=100.0, gt=0)
    f0: float = Field(default=1e-4, ge=0)
    beta: float = Field(default=2e-11, ge=0)
    domain_len: float = Field(default=1e6, gt=0)
    grid: tuple[int, int] = (64, 64)
    cfl_fraction: float = Field(default=0.1, gt=0, le=1)
    timestep: float | None = Field(default=None, gt=0)

    @field_validator("grid")
    @classmethod
    def grid_has_interior(cls, v: tuple[int, int]) -> tuple[int, int]:
        if min(v) < 2:
            raise ValueError(f"grid needs at least 2 points per axis, got {v}")
        return v

    @model_validator(mode="after")
    def timestep_within_cfl(self) -> "SweParams":
        if self.timestep is not None and self.timestep > self.cfl_bound:
            raise ValueError(
                f"timestep {self.timestep:g} s exceeds the CFL bound {self.cfl_bound:g} s"
            )
        return self

    @property
    def dx(self) -> float:
        """Grid spacing along the first axis (m)."""
        return self.domain_len / (self.grid[0] - 1)

    @property
    def dy(self) -> float:
        """Grid spacing along the second axis (m)."""
        return self.domain_len / (self.grid[1] - 1)

    @property
    def wave_speed(self) -> float:
        """Gravity wave speed sqrt(g H) (m/s)."""
        return (self.g * self.H) ** 0.5

    @property
    def cfl_bound(self) -> float:
        """Largest stable step min(dx, dy) / sqrt(g H)."""
        return min(self.dx, self.dy) / self.wave_speed

    @property
    def dt(self) -> float:
        """Time step in seconds: the explicit timestep or cfl_fraction of the bound."""
        if self.timestep is not None:
            return self.timestep
        return self.cfl_fraction * self.cfl_bound


class InitialConditionSpec(StrictModel):
    """One shallow-water initial condition.

    ``amplitude`` is in m for eta families and m/s for velocity families;
    ``center`` is a fraction of the domain along each axis; ``width`` is a
    fraction of the domain length.
    """

    family: IcFamily
    amplitude: float = 1.0
    center: tuple[float, float] = (0.5, 0.5)
    width: float = Field(default=0.1, gt=0)
    seed: int = 0


class SweExperimentSpec(StrictModel):
    """Dataset sizes and estimator settings of the shallow-water experiment."""

    params: SweParams = Field(default_factory=SweParams)
    steps: int = Field(default=1500, ge=1)
    families: list[IcFamily] = Field(default_factory=lambda: list(IN_DISTRIBUTION_FAMILIES))
    train_per_family: int = Field(default=2500, ge=1)
    test_per_family: int = Field(default=500, ge=0)
    ood_families: list[IcFamily] = Field(
        default_factory=lambda: list(OUT_OF_DISTRIBUTION_FAMILIES)
    )
    ood_per_family: int = Field(default=500, ge=0)
    noise_std: float = Field(default=0.01, ge=0)
    ridge: float = Field(default=1e-2, ge=0)
    factor_strategy: FactorStrategy = FactorStrategy.CHOLESKY

    @field_validator("families")
    @classmethod
    def families_not_empty(cls, v: list[IcFamily]) -> list[IcFamily]:
        if not v:
            raise ValueError("at least one initial-condition family is required")
        return v


class TrainConfig(StrictModel):
    """Settings of the gradient-trained encoder-decoder baseline.

    ``batch_size`` of None means full-batch updates.
    """

    rank: int = Field(default=1, ge=1)
    epochs: int = Field(default=200, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    batch_size: int | None = Field(default=None, ge=1)
    seed: int = 0
    affine: bool = False

    def with_rank(self, rank: int) -> "TrainConfig":
        """Copy of this config at another latent rank."""
        return self.model_copy(update={"rank": rank})


class ExperimentConfig(StrictModel):
    """A complete experiment run.

    Sub-specs irrelevant to the chosen experiment stay None; the relevant one
    is filled with its defaults when omitted.
    """

    experiment: ExperimentKind
    tasks: list[Task] = Field(default_factory=lambda: [Task.INVERSE])
    form: Form = Form.LINEAR
    ranks: list[int] = Field(default_factory=lambda: [25])
    seeds: list[int] = Field(default_factory=lambda: [0])
    ridge: float | None = Field(default=None, ge=0)
    factor_strategy: FactorStrategy = FactorStrategy.PSD

    blur: BlurSpec | None = None
    images: SyntheticImageSpec | None = None
    noise_std: float = Field(default=0.05, ge=0)

    market: SyntheticMarketSpec | None = None
    returns_csv: Path | None = None
    from_prices: bool = False
    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    nonlinear_hidden: int | None = Field(default=None, ge=1)

    swe: SweExperimentSpec | None = None

    training: TrainConfig | None = None
    output_dir: Path | None = None

    @field_validator("ranks")
    @classmethod
    def ranks_positive_ascending(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one rank is required")
        if any(r < 1 for r in v):
            raise ValueError(f"ranks must be positive, got {v}")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"ranks must be strictly ascending, got {v}")
        return v

    @field_validator("seeds", "tasks")
    @classmethod
    def not_empty(cls, v: list) -> list:
        if not v:
            raise ValueError("list must not be empty")
        return v

    @model_validator(mode="after")
    def fill_generator_specs(self) -> "ExperimentConfig":
        if self.experiment in (ExperimentKind.IMAGING, ExperimentKind.SWEEP):
            if self.blur is None:
                self.blur = BlurSpec()
            if self.images is None:
                self.images = SyntheticImageSpec()
        elif self.experiment == ExperimentKind.FINANCE:
            if self.market is None and self.returns_csv is None:
                self.market = SyntheticMarketSpec()
        elif self.experiment == ExperimentKind.SWE:
            if self.swe is None:
                self.swe = SweExperimentSpec()
        return self
