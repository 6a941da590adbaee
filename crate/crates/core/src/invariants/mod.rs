//! Metrics, conormals, the centroaffine dual, the cubic form and shape
//! operator, and geodesic lengths of hypersurfaces given by a potential `u`
//! or a graph function `f`.

mod conormal;
mod dual;
mod export;
mod fubini_pick;
mod geodesic;
mod metric;

pub use conormal::{conormals_at, graph_conormals, potential_conormals, ConormalSample};
pub use dual::{centroaffine_dual, dual_conormal_pair, dual_point, dual_points, CentroaffineDual};
pub use export::{invariants_at, invariants_csv, summarize, InvariantsSummary, PointInvariants};
pub use fubini_pick::{fubini_pick_at, InvariantsSample, FD_STEP, MAX_FRAME_CONDITION};
pub use geodesic::{geodesic_length, integrate, segment_length, QUAD_RTOL};
pub use metric::{
    affine_sphere_residual, coincidence_defect, coincidence_sample, metric_at, metric_field, metric_from_jet,
    residual_from_jet, CoincidenceSample, MetricField, MetricKind,
};
