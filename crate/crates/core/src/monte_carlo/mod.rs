//! Finite-N experiments: Gaussian disorder, ground-state search on the
//! sphere, coupled systems and the statistics built on them.

mod ascent;
mod disorder;
mod experiments;
pub mod stats;

pub use ascent::{ground_state, sk_eigen_oracle, AscentOptions, GroundStateResult};
pub use disorder::{
    energy_gradient, eval_energy, normals, overlap, retract, sample_disorder, sample_disorder_with, stream, tangent,
    DisorderSample, Purpose, SampleCaps, SPHERE_TOL,
};
pub use experiments::{
    chi_for, clt_check, coupled_ground_states, coupled_overlaps, ground_state_energies, superconcentration_trend,
    variance_identity_check, CltResult, CoupledResult, RunRecord, TrendRow, VarianceIdentity, CHI_QUAD_POINTS,
};
