"""Federated optimal transport: distances, coresets, dataset distances,
client clustering."""

from .errors import FedwadError
from .measures import (
    DiscreteMeasure,
    GaussianMeasure,
    LabeledDataset,
    load_measure,
    make_synthetic_labeled,
    new_discrete,
    new_gaussian,
    new_labeled,
    sample_gaussian,
    save_measure,
)
from .ot_core import (
    CostMatrix,
    TransportPlan,
    cost_matrix,
    grad_support,
    oracle_cost,
    solve_exact,
    wasserstein,
)

__all__ = [
    "FedwadError",
    "DiscreteMeasure",
    "GaussianMeasure",
    "LabeledDataset",
    "new_discrete",
    "new_gaussian",
    "new_labeled",
    "sample_gaussian",
    "make_synthetic_labeled",
    "load_measure",
    "save_measure",
    "CostMatrix",
    "TransportPlan",
    "cost_matrix",
    "solve_exact",
    "oracle_cost",
    "wasserstein",
    "grad_support",
]

from .geodesics import gaussian_interp, gaussian_w2, interp_approx, interp_exact
from .protocol import (
    BoxInit,
    ClientOptions,
    FedConfig,
    FedResult,
    FixedT,
    GaussianFedResult,
    GaussianInit,
    GaussianRound,
    LocalClient,
    ProvidedInit,
    RoundRecord,
    UniformT,
    client_step,
    coordinate,
    draw_t_schedule,
    run_fedwad,
    run_fedwad_gaussian,
    server_step,
    trajectory_to_csv,
)
from .netproto import RemoteClient, run_remote_fedwad, serve_client

__version__ = "0.1.0"
