"""Simulation and verification laboratory for degenerate branching
particle systems with anisotropic stable motion."""

__version__ = "0.1.0"

from .branching import (ModelParams, OffspringLaw, Particle, SimulationDomain,
                        TreeRealization, expected_population,
                        expected_population_integral, positions_at,
                        sample_initial_field, sample_offspring_count,
                        simulate_tree)
from .exceptions import (ConfigError, DegenBranchError, DivergenceError,
                         NumericAccuracyError, ParameterDomainError,
                         PopulationExplosionError, UnsupportedRegimeError)
from .fluctuation import (CenteringMode, FluctuationSample, GridReplicate,
                          box_semigroup_mass, centering_integral,
                          centering_value, occupation_fluctuation, scaling_Fn,
                          simulate_replicate, time_integrated_statistic)
from .limit_constants import (ConstantResult, anisotropic_cubic_integral, c1,
                              c2, large_dim_covariance, regime_validate)
from .seeding import derive_stream, stream_key
from .stable_motion import (MotionLaw, Regime, StableIndexVector,
                            classify_regime, empirical_cf_deviation,
                            motion_cf, sample_stable_increment,
                            semigroup_apply)
from .test_functions import (GaussianTestFunction, TestFunctionSum,
                             standard_gaussian)
