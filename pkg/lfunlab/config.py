from dataclasses import dataclass, field


@dataclass
class InstanceConfig:
    tau_bound: int = 10_000
    grc: bool = False


@dataclass
class EvalConfig:
    strategy: str = "auto"
    tolerance: float = 1e-10
    em_shift_factor: float = 1.3
    em_min_terms: int = 20
    bernoulli_order: int = 12
    afe_constant: float = 3.0
    afe_rotation: float = 3.0
    riemann_siegel: bool = False
    riemann_siegel_height: float = 200.0
    pole_exclusion: float = 1e-6
    series_prime_bound: int = 10_000
    afe_precision: int = 25


@dataclass
class QuadratureConfig:
    panel_width: float = 0.25
    max_depth: int = 30
    inner_nodes: int = 8
    workers: int = 1
    cache: bool = True


@dataclass
class ContourConfig:
    nodes_per_unit: int = 16
    min_nodes_per_unit: int = 8
    max_refinements: int = 4
    abscissa: float = 3.0
    tolerance: float = 1e-8
    kernel_grid: int = 2048
    kernel_height: float = None


@dataclass
class ZeroConfig:
    step: float = 0.1
    max_depth: int = 40
    nudge: float = 1e-3


@dataclass
class TheoremConfig:
    constant: float = 1.0
    epsilon0: float = None


@dataclass
class LabConfig:
    instances: InstanceConfig = field(default_factory=InstanceConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    contour: ContourConfig = field(default_factory=ContourConfig)
    zeros: ZeroConfig = field(default_factory=ZeroConfig)
    theorems: TheoremConfig = field(default_factory=TheoremConfig)
