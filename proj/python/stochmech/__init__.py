"""Stochastic mechanics toolkit.

Schrodinger evolution, Madelung decomposition, particle ensembles driven by
the mean velocity, and the D = 0 classical limit. Fields are numpy arrays
shaped like their Grid.
"""

from ._core import (
    ConfigInvalid,
    CrankNicolson,
    Grid,
    MultivaluedPhase,
    PhysicalParams,
    Potential,
    StochmechError,
    com_diffusion,
    compare_densities,
    decompose,
    diagnose,
    energy,
    estimate_density,
    fit_linear,
    gaussian_packet,
    ground_state,
    integrate_characteristics,
    kl_divergence,
    mean_velocity,
    run_scenario,
    sample_initial,
    step_ensemble,
    wasserstein1,
    winding_number,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
