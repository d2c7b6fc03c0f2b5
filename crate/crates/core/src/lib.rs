//! Labeled, mixed-feature tables to 3D radial-visualization scenes.
//!
//! The pipeline runs [`ingest`] → [`gdt`] (distributional transform and
//! screening) → [`mrp`] (max-ratio projection) → [`radviz`] with anchors
//! from [`anchors`]. [`evalsim`] simulates Gaussian mixtures and scores
//! scenes; [`pipeline`] ties the stages together with seeded, hashed outputs.

pub mod anchors;
pub mod evalsim;
pub mod gdt;
pub mod ingest;
pub mod mrp;
pub mod numerics;
pub mod pipeline;
pub mod radviz;
mod rng;

pub use anchors::{circle_anchors, sphere_anchors, AnchorScheme, AnchorSet};
pub use evalsim::{discretize_deciles, mc_overlap, separation_metric, simulate_mixture, MixtureSpec, OverlapMap};
pub use gdt::{anova_screen, benjamini_hochberg, gdt_transform, GdtModel, ScreeningReport};
pub use ingest::{load_csv, parse_csv, Dataset, FeatureKind};
pub use mrp::{mrp_fit, nearest_orthogonal, KPolicy, MrpModel};
pub use pipeline::{project_dataset, run_project, PipelineConfig, PipelineError, ProjectOptions, Screening};
pub use radviz::{gradviz_project, make_scene, minmax_scale, Method, Scene};
