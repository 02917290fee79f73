from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FILTERS = ("spectral", "sine", "fdm", "discrete", "pf")

# Scenario defaults per variant: state layout, prior moments
VARIANT_PRIORS = {
    "2d": {"prior_mean": [100.0, 0.0], "prior_cov_diag": [100.0, 100.0]},
    "4d": {"prior_mean": [36569.0, 50.0, 55581.0, 50.0], "prior_cov_diag": [90.0, 160.0, 5.0, 5.0]},
}


def _require_even(value: int) -> int:
    if value % 2:
        raise ValueError(f"must be even, got {value}")
    return value


class NoiseConfig(BaseModel):
    """Gaussian-mixture altimeter error"""
    model_config = ConfigDict(extra="forbid")

    weights: List[float] = Field(default_factory=lambda: [0.5, 0.5], min_length=1)
    means: List[float] = Field(default_factory=lambda: [0.0, 20.0], min_length=1)
    variances: List[float] = Field(default_factory=lambda: [1.0, 1.0], min_length=1)

    @model_validator(mode="after")
    def check_components(self):
        if not len(self.weights) == len(self.means) == len(self.variances):
            raise ValueError("noise weights, means and variances need equal lengths")
        return self


class TerrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 7
    roughness: float = Field(40.0, ge=0)
    cell: float = Field(5.0, gt=0)
    correlation_length: float = Field(60.0, gt=0)
    slope: float = Field(3.0, gt=0)
    base_altitude: float = 300.0
    margin: float = Field(200.0, gt=0)


class ScenarioConfig(BaseModel):
    """Tracking scenario; keys must match field names exactly"""
    model_config = ConfigDict(extra="forbid")

    variant: Literal["2d", "4d"] = "2d"
    alpha_deg: float = 30.0
    Ts: float = Field(1.0, gt=0)
    steps: int = Field(20, ge=1)
    q: float = Field(4.0, ge=0)
    pivot: List[float] = Field(default_factory=lambda: [36569.0, 55581.0], min_length=2, max_length=2)
    prior_mean: Optional[List[float]] = None
    prior_cov_diag: Optional[List[float]] = None
    filters: List[str] = Field(default_factory=lambda: ["spectral", "sine", "pf"], min_length=1)
    N_pa: int = Field(34, ge=4)
    k_sigma: float = Field(4.0, gt=0)
    substeps: Optional[int] = Field(None, ge=1)
    spectral_substeps: int = Field(2, ge=1)
    mc: int = Field(10, ge=1)
    seed: int = 1
    particles: int = Field(10000, ge=1)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    terrain: TerrainConfig = Field(default_factory=TerrainConfig)

    @field_validator("N_pa")
    @classmethod
    def check_even(cls, value: int) -> int:
        return _require_even(value)

    @field_validator("filters")
    @classmethod
    def check_filters(cls, value: List[str]) -> List[str]:
        unknown = [f for f in value if f not in FILTERS]
        if unknown:
            raise ValueError(f"unknown filters {unknown}, expected a subset of {list(FILTERS)}")
        return value

    @model_validator(mode="after")
    def fill_prior(self):
        defaults = VARIANT_PRIORS[self.variant]
        if self.prior_mean is None:
            self.prior_mean = list(defaults["prior_mean"])
        if self.prior_cov_diag is None:
            self.prior_cov_diag = list(defaults["prior_cov_diag"])
        n_x = len(defaults["prior_mean"])
        if len(self.prior_mean) != n_x or len(self.prior_cov_diag) != n_x:
            raise ValueError(f"variant {self.variant} needs a {n_x}-dimensional prior")
        if any(v <= 0 for v in self.prior_cov_diag):
            raise ValueError("prior variances must be positive")
        return self


class ConvergenceConfig(BaseModel):
    """1D pure-diffusion time-update accuracy study"""
    model_config = ConfigDict(extra="forbid")

    densities: List[Literal["gauss", "gm"]] = Field(default_factory=lambda: ["gauss", "gm"], min_length=1)
    ns: List[int] = Field(default_factory=lambda: [16, 32, 64, 128, 200], min_length=1)
    solvers: List[Literal["fdm", "spectral", "sine"]] = Field(default_factory=lambda: ["fdm", "spectral"], min_length=1)
    profile_ns: List[int] = Field(default_factory=lambda: [80, 200])
    tau: float = Field(0.5, gt=0)
    q: float = Field(1.0, gt=0)
    k_sigma: float = Field(6.0, gt=0)
    spectral_substeps: int = Field(4000, ge=1)
    gauss_mean: float = 0.0
    gauss_var: float = Field(1.0, gt=0)
    gm_weights: List[float] = Field(default_factory=lambda: [0.3, 0.5, 0.2])
    gm_means: List[float] = Field(default_factory=lambda: [-1.5, 0.5, 2.5])
    gm_vars: List[float] = Field(default_factory=lambda: [0.3, 0.4, 0.5])

    @field_validator("ns", "profile_ns")
    @classmethod
    def check_sizes(cls, value: List[int]) -> List[int]:
        for n in value:
            if n < 4:
                raise ValueError(f"grid sizes must be >= 4, got {n}")
            _require_even(n)
        return value


class MetricsReport(BaseModel):
    """One row of the tracking benchmark table"""
    filter: str
    rmse: List[float]
    astd: List[float]
    time: float = Field(..., ge=0)
    runs_ok: int = Field(..., ge=0)
    runs_failed: int = Field(0, ge=0)
