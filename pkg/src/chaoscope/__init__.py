"""chaoscope: locate and characterize chaotic regimes of ODE systems.

Workflow: define or pick a system, screen candidate points by the sign of
the Jacobian trace, compute Lyapunov spectra with horizon doubling, sample
the chaotic set with an annealed Metropolis-Hastings walk, and explore the
results through the CLI, the HTTP job service, or the bundled
parallel-coordinates front end.
"""

from .systems import (
    ParamDescriptor,
    SystemDefinition,
    SamplePoint,
    BoxCoord,
    SearchBox,
    eval_rhs,
    eval_jacobian,
    divergence_at,
    register_system,
    get_system,
    list_systems,
    catalog,
    catalog_json,
)
from .models import (
    make_quadratic3,
    quadratic3_divergence,
    load_quadratic3_coeffs,
    kot_nondimensionalize,
    make_kot_monod,
    kot_paper_sample,
    fourier_square_wave,
    InteractionSpec,
    make_pgpr,
    load_pgpr_config,
    BECKS_TABLE,
    make_becks_dim,
    becks_rescale_params,
    make_becks_rescaled,
    becks_map_state,
    make_lorenz,
    make_linear2,
)
from .integrate import (
    IntegrationConfig,
    Trajectory,
    AugmentedResult,
    integrate,
    integrate_augmented,
    trajectory_csv,
)
from .lyapunov import (
    LyapunovConfig,
    LyapunovResult,
    spectrum_fixed_T,
    spectrum_with_doubling,
    spectrum_from_config,
    classify,
    CHAOTIC,
    NON_CHAOTIC,
    INDETERMINATE,
)
from .sampler import (
    MHConfig,
    SampleRecord,
    sigmoid,
    mh_walk,
    sample_chaotic_point,
    sample_batch,
    batch_csv,
    batch_jsonl,
)
from .scan import (
    BifurcationConfig,
    ScanResult,
    bifurcation_scan,
    scan_csv,
    scan_json,
    export_trajectory,
)

__version__ = "0.1.0"
