"""quarterstep: unadjusted leapfrog HMC, baselines, coupling experiments,
regularity auditing, and theory-driven parameter planning."""

__version__ = "0.1.0"

from .diagnostics import (AutocorrelationReport, BenchmarkReport,
                          MarginalAccuracyReport, ScalingResult,
                          autocorrelation_time, benchmark, marginal_accuracy,
                          stepsize_scaling, test_function_l1)
from .dynamics import (DirectionSet, GradEvalCounter, PhasePoint,
                       TrajectoryResult, exact_gaussian_flow, hamiltonian,
                       inf_seminorm, leapfrog_step, leapfrog_trajectory,
                       n_leapfrog_steps)
from .errors import (ConvergenceError, DegenerateSeriesError, DivergenceError,
                     FormulaDomainError, InvalidInputError, QuarterstepError,
                     UnsupportedOperationError)
from .models import (Dataset, GaussianTarget, LogisticTarget,
                     RegularityConstants, TargetModel, cold_start,
                     gen_synthetic, load_dataset, save_dataset)
from .regularity import (Figure3Row, RegularityReport, TheoryPlan,
                         audit_logistic, estimate_L2, estimate_Linf,
                         figure3_experiment, incoherence, logistic_constants,
                         plan_parameters, thm_main_eta, warm_epsilon1,
                         warm_epsilon2)
from .samplers import (CouplingRecord, SamplerKind, SamplerSpec, StartSpec,
                       Trace, run_coupled, run_idealized_hmc, run_langevin,
                       run_mhmc, run_sampler, run_uhmc, trace_to_csv)
