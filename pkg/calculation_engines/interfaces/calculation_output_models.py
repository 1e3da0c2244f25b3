"""
Calculation Output Models
Pydantic models defining standardized outputs for all calculation modules
"""
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class _ArrayModel(BaseModel):
    """Base for outputs carrying numpy arrays"""
    model_config = ConfigDict(arbitrary_types_allowed=True)


# ============================================================================
# SLOWLY VARYING FUNCTION OUTPUTS
# ============================================================================

class PotterReport(BaseModel):
    """Output from the Potter bound report"""
    theta: float = Field(..., gt=0.0)
    C_theta: float = Field(..., ge=1.0, description="Smallest two-sided constant on the grid")
    cap: float = Field(..., description="Largest acceptable constant")
    violations: List[float] = Field(default_factory=list, description="Grid points needing C > cap")
    threshold: Optional[float] = Field(None, description="Largest reference t needing C > cap")


# ============================================================================
# PROFILE OUTPUTS
# ============================================================================

class ProfileCertificate(BaseModel):
    """Grid certificate for monotonicity and curvature pinching"""
    passed: bool
    glue_end: float
    grid_points: int
    min_K: float = Field(..., description="Most negative curvature on the grid")
    max_K: float = Field(..., description="Least negative curvature on the grid")
    max_log_dT: float = Field(..., description="Largest T'/T on the grid (must be < 0)")
    failing_points: List[float] = Field(default_factory=list)
    ladder: List[float] = Field(default_factory=list, description="Glue ends tried in order")


# ============================================================================
# CLAIRAUT OUTPUTS
# ============================================================================

class CuspGeodesic(BaseModel):
    """Cusp excursion for translation n"""
    n: float = Field(..., gt=0.0)
    h_n: float = Field(..., ge=0.0, description="Maximal height above the base")
    d_n: float = Field(..., gt=0.0, description="Arc length between the two base points")
    d_full: float = Field(..., gt=0.0, description="d_n plus twice the glue end")
    quad_error: float = Field(..., ge=0.0)
    root_residual: float = Field(..., ge=0.0)
    base: float = Field(0.0, description="Height of the base horocycle")


class EnvelopeRow(BaseModel):
    n: float
    h_n: float
    max_excess: float = Field(..., description="max of f_n(s) - exp(-s/2) on the grid")
    below_threshold: bool
    passed: bool


class EnvelopeReport(BaseModel):
    """Output from the exponential envelope check"""
    passed: bool
    rows: List[EnvelopeRow]
    first_violation: Optional[Tuple[float, float]] = Field(None, description="(n, s) of the first violation")


class FactorTailResult(BaseModel):
    """Empirical parabolic tail functional on an R grid"""
    delta: float
    Delta: float
    R: List[float]
    values: List[float]
    reference: float = Field(..., description="Limit 2^(alpha-1) Delta / tau, doubled for two-sided factors")
    counts: List[int] = Field(default_factory=list, description="Exponents in each window")


# ============================================================================
# HYPERBOLIC OUTPUTS
# ============================================================================

class ValidationRow(BaseModel):
    factor: int
    power: int
    image_left: float
    image_right: float
    margin: float
    ok: bool


class SchottkyValidationReport(BaseModel):
    """Output from ping-pong validation"""
    passed: bool
    disjoint: bool
    min_gap: float
    x0_outside: bool
    rows: List[ValidationRow]
    failures: List[str] = Field(default_factory=list)


class MarginReport(BaseModel):
    """Empirical constant C_F of d(o, g o) - C_F <= b(g, x) <= d(o, g o)"""
    C_F: float = Field(..., description="max of d(o, g o) - b(g, x) over the sample")
    upper_violation: float = Field(..., description="max of b(g, x) - d(o, g o), <= 0 up to rounding")
    pairs: int = Field(..., ge=0, description="(element, point) pairs evaluated")


# ============================================================================
# CODING OUTPUTS
# ============================================================================

class BallResult(_ArrayModel):
    """Orbit points within distance R"""
    R: float
    count: int = Field(..., ge=1)
    distances: Any = Field(..., description="Word distances in search order (numpy array)")
    words: Optional[List[Any]] = Field(None, description="Words aligned with distances when requested")
    lengths: Any = Field(None, description="Symbolic lengths aligned with distances")
    nodes: int = Field(..., ge=0)
    completeness: str = Field(..., description="exact, heuristic-complete or partial")
    c_prune: float


class ContractionProfile(BaseModel):
    """Per-level maxima of boundary derivatives"""
    k: List[int]
    max_derivative: List[float]
    slope: Optional[float] = Field(None, description="Slope of log max against k for k >= 1")


# ============================================================================
# TRANSFER OUTPUTS
# ============================================================================

class SpectralResult(_ArrayModel):
    """Output from power iteration"""
    s: float
    rho: float = Field(..., gt=0.0)
    h: Any = Field(..., description="Positive eigenfunction on the mesh, max normalized")
    iterations: int
    min_max_ratio: float
    bipartite: bool = Field(False, description="Two-factor case treated with Cesaro averaging")


class CriticalExponentResult(BaseModel):
    delta_gamma: float
    branch: str = Field(..., description="critical_gap or exotic")
    delta: float = Field(..., description="Largest factor exponent")
    rho_at_delta: float
    iterations: int = 0


class ClassificationResult(BaseModel):
    verdict: str = Field(..., description="Convergent, Divergent or Undetermined")
    rho_at_delta: float
    margin: float
    error_bar: float
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class FlipScan(BaseModel):
    """rho_delta along the family <h^m, p>"""
    m: List[int]
    rho: List[float]
    verdicts: List[str]
    m_star: Optional[int] = Field(None, description="Smallest scanned m with a Convergent verdict")


class RefinementCheck(BaseModel):
    """rho_delta under mesh doubling and truncation doubling"""
    rho: float
    rho_mesh_doubled: float
    rho_trunc_doubled: float
    verdicts: List[str]

    @property
    def max_change(self) -> float:
        return max(abs(self.rho_mesh_doubled - self.rho), abs(self.rho_trunc_doubled - self.rho))

    @property
    def stable(self) -> bool:
        return len(set(self.verdicts)) == 1


class TruncationScan(BaseModel):
    N: List[int]
    rho: List[float]
    limit: float
    error_bar: float


class PoincareComparison(BaseModel):
    k: int
    operator_value: float
    series_value: float
    ratio: float


class NormalizationReport(BaseModel):
    """Markov normalization of Doob weights over one level"""
    k: int
    total: float
    tail_bar: float
    defect_bar: float

    @property
    def bar(self) -> float:
        return self.tail_bar + self.defect_bar


# ============================================================================
# COUNTING OUTPUTS
# ============================================================================

class RenewalResult(BaseModel):
    """Renewal sum for M(R, phi x u)(x)"""
    R: float
    k_max: int
    value: float
    tail_bound: float = Field(..., description="Level bound summed over k > k_max")
    truncation_bar: float = Field(0.0, description="Change when the letter truncation is halved")
    interpolation_bar: float = Field(0.0, description="Change under a coarser shift grid and a deeper orbit start")
    per_k: List[float] = Field(..., description="M_k contributions")
    p_tilde: List[float] = Field(..., description="P~^k(phi/h x u)(x, -R)")
    C_u: float

    @property
    def bar(self) -> float:
        return self.tail_bound + self.truncation_bar + self.interpolation_bar


class DirectSum(BaseModel):
    """M(R, phi x u)(x) summed word by word"""
    R: float
    value: float
    per_k: List[float]
    words: int = Field(..., ge=0, description="Words with u(-R + b~) != 0")
    completeness: str


class LevelPrediction(BaseModel):
    """Limits of (R^alpha / L(R)) P~^k(phi x u)(x, -R) per unit integral of u"""
    k: List[int]
    values: List[float]
    constants: Dict[int, float] = Field(..., description="c_j per influent factor")


class SeriesConstant(BaseModel):
    """h(x) sum_k rho^k of the level limits of phi / h"""
    value: float
    remainder: float = Field(..., description="Estimate of the levels beyond k_max")
    k_max: int
    per_k: List[float]


class CountReport(BaseModel):
    """Orbit counts with normalized ratios"""
    R: List[float]
    N: List[int]
    C_hat: List[float]
    C_div_hat: List[float]
    delta: float
    completeness: str
    c_prune: float
    nodes: int


class FitResult(BaseModel):
    C_hat: float
    drift: float
    C_div_hat: float
    drift_div: float
    variation: float = Field(..., description="max/min - 1 of C_hat over the window")
    window: List[float]
    flagged: bool = Field(False, description="Relative drift beyond the flag level")


class StepSplit(BaseModel):
    k: int
    r: float
    R: float
    A: float
    B: float
    C: float
    total: float


class DecompositionCheck(BaseModel):
    R: float
    brute: int
    decomposed: float
    mollified: float
    exact_match: bool
