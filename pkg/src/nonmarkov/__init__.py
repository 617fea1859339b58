"""Qubit dynamical maps and non-Markovianity witnesses."""

from .channels import (AffineMap, CptpReport, DynamicalMap, GeneratorSpec,
                       KrausSet, affine_from_kraus, apply_channel_4x4,
                       choi_from_affine, from_generator, is_cptp_affine,
                       kraus_from_affine, propagate_generator, purity)
from .divisibility import (IntermediateMap, canonical_rates, intermediate,
                           intermediate_step, is_p_divisible_step)
from .families import (CounterexampleParams, DephasingParams, EnmParams,
                       GadParams, family_counterexample, family_dephasing,
                       family_enm, family_from_config, family_gad,
                       family_phase_covariant, family_to_config,
                       phase_cov_rates)
from .witnesses import (MeasureResult, PseudoDensityMatrix, WitnessTrace,
                        blp_measure, ccm_measure, ccm_mu, ccm_trace, lcm,
                        lcm_measure, lcm_trace, make_grid, pdm, pdm_base,
                        qjsd_distance, qjsd_divergence, trace_distance)

__version__ = "0.1.0"
