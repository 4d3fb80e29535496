//! Curvature and end-volume certification for warped-product metrics.
//!
//! The metrics handled here have the form dr^2 + g_r on a product of a ray
//! (or the whole line) with a closed manifold, where g_r stays diagonal in
//! one fixed frame: g_r = sum_i h_i(r)^2 (x_i)^2. For such families the
//! crate can
//!
//! * evaluate warp functions together with two derivatives ([`jet`]),
//! * assemble the full ambient curvature tensor at any radius from the warp
//!   jets and the fiber's own curvature ([`framealg`], [`curvature`]),
//! * extremize sectional curvature over tangent 2-planes to certify sign
//!   and pinching bounds ([`grassmann`]),
//! * decide finiteness of the volume of the collapsing end ([`volume`]),
//! * and do all of the above for a set of built-in model families
//!   ([`models`]) behind a text-config front end ([`config`], [`report`]).
//!
//! Everything downstream of a seed is deterministic, including report
//! bytes; see [`report`] for the guarantees.

pub mod config;
pub mod curvature;
pub mod error;
pub mod framealg;
pub mod grassmann;
pub mod jet;
pub mod models;
pub mod report;
pub mod selfcheck;
pub mod volume;

pub use config::{parse_config, ModelSelector, RunConfig};
pub use curvature::{assemble, second_form, sectional, CurvatureTensor, MetricFamily, SecondForm};
pub use error::{Error, Result};
pub use grassmann::{dense_scan, frame_plane_table, multistart_extremize, ExtremeMode, Extremum};
pub use report::{certify, write_atomic, CertificationReport};
pub use volume::{end_volume, monotone_volume_bound, VolumeVerdict};
