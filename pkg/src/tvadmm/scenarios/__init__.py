"""Problem generators: toy saddle, drifting QPs, multi-area dispatch."""

from .drifting import DRIFT_KINDS, DriftingQpConfig, gamma_sweep_snapshot, gen_drifting_qp, random_snapshot
from .opf import (OpfConfig, OpfMetrics, OpfModel, build_opf_model, gen_opf, measurement_residual,
                  opf_metrics)
from .toy import DEFAULT_TOY_SEED, ToyConfig, ToyTrace, toy_run

__all__ = [
    "DRIFT_KINDS", "DriftingQpConfig", "gamma_sweep_snapshot", "gen_drifting_qp", "random_snapshot",
    "OpfConfig", "OpfMetrics", "OpfModel", "build_opf_model", "gen_opf", "measurement_residual",
    "opf_metrics", "DEFAULT_TOY_SEED", "ToyConfig", "ToyTrace", "toy_run",
]
