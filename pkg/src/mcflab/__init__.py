"""Numerical laboratory for mean curvature flow of closed curves and surfaces.

Modules
-------
geometry     discrete hypersurfaces, curvature estimators, Laplace-Beltrami
flow         explicit flow integrator and the shrinking-sphere solution
spacetime    trajectories, parabolic cylinders, cutoffs, spacetime norms
diagnostics  evolution-equation residuals, pinching, divergence fits
ineqlab      Sobolev-type and Moser checks with explicit constants
rescale      parabolic rescaling and blow-up sequences
cli          experiment runner (``python -m mcflab``)
"""

from .errors import *  # noqa: F401,F403
from .geometry import (
    Hypersurface,
    ValidationReport,
    compute_geometry,
    laplace_beltrami,
    tangential_gradient_norm,
    validate,
)
from .flow import ExactSphereSolution, StopCriteria, adaptive_dt, evolve, exact_sphere, step
from .spacetime import (
    CutoffFunction,
    FlowTrajectory,
    NormReport,
    ParabolicCylinder,
    cutoff_eval,
    cutoff_heat_operator,
    cylinder_membership,
    slice_norm,
    spacetime_norm,
)
from .diagnostics import (
    HatFields,
    PinchingReport,
    area_derivative_check,
    divergence_exponent_fit,
    h_evolution_residual,
    hat_fields,
    max_H_series,
    pinching_constant,
)
from .ineqlab import (
    ConstantsTable,
    constants_table,
    critical_smallness_check,
    interpolation_check,
    lemma31_check,
    mean_curvature_bound_check,
    michael_simon_check,
    moser_ladder,
    prop32_check,
    reverse_holder_check,
)
from .rescale import (
    BlowupSequence,
    contradiction_witness,
    rescale_trajectory,
    select_blowup_sequence,
    vanishing_local_norms,
)

__version__ = "0.1.0"
