//! shrinker-lab: a numerical laboratory for self-shrinkers of mean
//! curvature flow.
//!
//! The crate implements, at desk scale, the analytic machinery around
//! asymptotically conical self-shrinkers: discrete extrinsic geometry and
//! Gaussian area, exact and numerically-shot shrinkers, weighted Hölder and
//! Sobolev norms with the cone decomposition, the Gaussian-weighted
//! linearized operator L with its spectrum and Fredholm theory, the rescaled
//! mean-curvature flow of graphs as a gradient flow of Gaussian area, the
//! four geometric scales, the constructive conical extension, and
//! Łojasiewicz–Simon inequalities with measured exponents and convergence
//! rates.

pub mod error;
pub mod util;
pub mod grid;
pub mod fields;
pub mod geometry;
pub mod shrinkers;
pub mod weighted_spaces;
pub mod operators;
pub mod flow;
pub mod scales;
pub mod extension;
pub mod loja;

pub use error::{LabError, Result};
pub use fields::ScalarField;
pub use geometry::{AreaResult, EntropyResult, EntropySearchSpec, GeometryBundle,
    NormalGraphGeometry};
pub use grid::{BaseGrid, Hypersurface};
pub use shrinkers::{canonical_shrinker, GridSpec, Shrinker, ShrinkerKind};
pub use weighted_spaces::{ConeDecomposition, HolderKind, NormReport, PairMode, PairSpec};
pub use extension::{ConeExtension, RadialModeSolution, RoughApproxReport};
pub use flow::{FlowConfig, FlowRecord, FlowTrace, Stabilization, StepMode};
pub use loja::{FinalLojReport, LojReport, ThetaFit};
pub use operators::{FredholmSolution, LinearizationReport, SpectralResult, WeightedOperator};
pub use scales::{CoreGraphicalReport, ScaleParams, ScaleReport, ShrinkerScale};
