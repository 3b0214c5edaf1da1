"""Vectorized P1 finite element evaluation and minimization of
first-gradient energy functionals (hyperelasticity, p-Laplacian)."""

from .assembly import (
    LinearLoad,
    assemble_mass_matrix,
    energy,
    evaluate_F,
    flatten,
    interpolate,
    linear_term,
    unflatten,
)
from .gradients import (
    GradientConfig,
    exact_gradient,
    gradient,
    numeric_gradient,
)
from .mesh import (
    DirichletRegion,
    DirichletSpec,
    Mesh,
    compute_p1_gradients,
    generate_bar_mesh_3d,
    generate_lshape_mesh_2d,
    generate_square_with_hole_mesh_2d,
    mark_dirichlet,
)
from .solver import (
    MinimizeResult,
    SolveOptions,
    continuation_solve,
    hessian_sparsity,
    minimize,
)
from .models import (
    ElasticParams,
    InadmissibleStateError,
    NeoHookean,
    PLaplaceParams,
    PLaplacian,
)
from .patches import Patches, build_patches, patch_prefix_indices

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
