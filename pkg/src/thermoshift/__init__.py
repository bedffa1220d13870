"""Thermodynamic-formalism computations on truncated countable shifts:
word combinatorics, two-sided pressure and Gurevich sums, finite-scale Gibbs
measures, one-block factor maps, and matrix-cocycle growth rates."""

__version__ = "0.1.0"

from .shifts import (BudgetExceededError, EPSILON, IrreducibilityFailure,
                     ShiftError, ShiftSpace, SpecificationCertificate,
                     builtin_shift, check_bip, check_finite_irreducibility,
                     count_words, default_ladder, enumerate_words,
                     find_connector, is_allowable, periodic_words,
                     shift_from_dict)
from .potentials import (AdditiveCylinderWeights, ConditionEstimate,
                         FinitenessScanReport, ScaledWeights,
                         TabulatedAlmostAdditiveWeights, WeightSystem,
                         Z1Report, estimate_c2, finiteness_scan, load_potential,
                         log_weight, subadditivity_defect, z1, zero_weights)
from .pressure import (CompareReport, LadderLevel, PressureReport,
                       approximation_ladder, gurevich_log_sum, log_partition,
                       pressure_bracket, pressure_compare, pressure_report,
                       restrict_shift)
from .gibbs import (CylinderMeasure, EnergyBalance, GibbsRatioReport,
                    GibbsReport, MixingReport, build_nu, cesaro_average,
                    entropy_energy, gibbs_ratio_report, mixing_report)
from .factor import (FactorMap, HiddenGibbsReport, PreimageCountWeights,
                     PushforwardWeights, hidden_gibbs_report, image_word,
                     preimage_count, preimage_count_weight, preimage_words,
                     pushforward_measure, pushforward_weight)
from .cocycle import (MatrixCocycleWeights, MatrixFamily, cocycle_weight,
                      lyapunov_estimate, singular_values)
