//! Certification runs and their serialized reports.
//!
//! [`certify`] walks the radial grid, extremizes sectional curvature at
//! every radius, checks the second fundamental form and the end volume,
//! and returns a [`CertificationReport`]. The report serializes to a
//! single JSON document (floats forced to 17 significant digits) plus an
//! optional r/K_min/K_max CSV side table.
//!
//! Byte stability: with a fixed config and seed, the report bytes are
//! identical across runs and across `--jobs` settings. Per-radius work is
//! seeded by grid index, results are aggregated in grid order, and nothing
//! time- or thread-dependent is recorded.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GridSpec, RunConfig};
use crate::curvature::{assemble, second_form, MetricFamily};
use crate::error::{Error, Result};
use crate::framealg::FiberCurvature;
use crate::grassmann::{
    dense_scan, derive_seed, multistart_extremize, ExtremeMode, Extremum, Plane,
    DENSE_SCAN_MAX_DIM,
};
use crate::volume::{end_volume, monotone_volume_bound, VolumeVerdict};

/// Extremization results and local checks at one grid radius.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusRecord {
    pub r: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub min_plane: Plane,
    pub max_plane: Plane,
    /// "dense" for the low-dimension Grassmannian sweep, "multistart" for
    /// seeded gradient refinement.
    pub method: &'static str,
    pub evaluations: u64,
    /// Second fundamental form of the slice strictly negative definite.
    pub ii_negative_definite: bool,
    /// Largest fiber-intrinsic sectional component; the empirical size of
    /// the terms the radial profile must dominate.
    pub fiber_term_max: f64,
}

/// One end-volume verdict, flattened for serialization.
#[derive(Clone, Debug, Serialize)]
pub struct VolumeRecord {
    pub verdict: &'static str,
    pub value: Option<f64>,
    pub relative_error: Option<f64>,
    pub detail: String,
}

impl From<VolumeVerdict> for VolumeRecord {
    fn from(v: VolumeVerdict) -> Self {
        match v {
            VolumeVerdict::Finite { value, relative_error, tail_bound } => VolumeRecord {
                verdict: "finite",
                value: Some(value),
                relative_error: Some(relative_error),
                detail: tail_bound,
            },
            VolumeVerdict::Divergent { reason } => VolumeRecord {
                verdict: "divergent",
                value: None,
                relative_error: None,
                detail: reason,
            },
            VolumeVerdict::Inconclusive { reason } => VolumeRecord {
                verdict: "inconclusive",
                value: None,
                relative_error: None,
                detail: reason,
            },
        }
    }
}

/// Comparison of h_i(r) e^{-r} at two probe radii past the settling point;
/// a pass certifies the metric has become a fixed exponential multiple.
#[derive(Clone, Debug, Serialize)]
pub struct FormCheck {
    pub probes: [f64; 2],
    pub max_relative_deviation: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeSection {
    /// Verdict for the collapsing end up to `volume.r_hi`.
    pub negative_end: VolumeRecord,
    /// Density nondecreasing toward the end on the sampled window.
    pub monotone_bound: bool,
    /// Present when the family declares a settling radius.
    pub exponential_form: Option<FormCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub tool_version: &'static str,
    pub family: String,
    pub dim: usize,
    pub seed: u64,
    pub config: Vec<(String, String)>,
    /// True iff every sampled K is strictly negative.
    pub sign_certificate: bool,
    pub k_inf: f64,
    pub k_sup: f64,
    pub ii_all_negative_definite: bool,
    /// Set for product families: whether the increasing-warp hypothesis
    /// behind the factor-sum curvature bound held on the sampled grid.
    pub product_hypothesis: Option<String>,
    pub radii: Vec<RadiusRecord>,
    pub volume: VolumeSection,
}

fn grid_radii(grid: &GridSpec, family: &MetricFamily) -> Result<Vec<f64>> {
    let span = grid.r_max - grid.r_min;
    let count = (span / grid.r_step + 1e-9).floor() as usize;
    let radii: Vec<f64> = (0..=count)
        .map(|i| grid.r_min + i as f64 * grid.r_step)
        .filter(|r| family.contains(*r))
        .collect();
    if radii.is_empty() {
        return Err(Error::Config(format!(
            "grid [{}, {}] does not meet the family domain [{}, {}]",
            grid.r_min, grid.r_max, family.domain.0, family.domain.1
        )));
    }
    Ok(radii)
}

fn extremize_at(
    family: &MetricFamily,
    r: f64,
    planes: usize,
    starts: usize,
    seed_min: u64,
    seed_max: u64,
) -> Result<RadiusRecord> {
    let tensor = assemble(family, r)?;
    let (lo, hi): (Extremum, Extremum) = if tensor.dim() <= DENSE_SCAN_MAX_DIM {
        dense_scan(&tensor, planes)?
    } else {
        let lo = multistart_extremize(&tensor, ExtremeMode::Min, starts, seed_min)?;
        let hi = multistart_extremize(&tensor, ExtremeMode::Max, starts, seed_max)?;
        (lo, hi)
    };
    let evaluations = if lo.method == crate::grassmann::ScanMethod::Dense {
        lo.evaluations
    } else {
        lo.evaluations + hi.evaluations
    };
    let ii = second_form(family, r)?;
    Ok(RadiusRecord {
        r,
        k_min: lo.value,
        k_max: hi.value,
        min_plane: lo.plane,
        max_plane: hi.plane,
        method: lo.method.as_str(),
        evaluations,
        ii_negative_definite: ii.negative_definite(),
        fiber_term_max: tensor.fiber_term_max(),
    })
}

fn exponential_form_check(family: &MetricFamily) -> Result<Option<FormCheck>> {
    let Some(from) = family.asymptotic_from else {
        return Ok(None);
    };
    let probes = [from + 1.0, from + 5.0];
    let a = family.warp_jets(probes[0])?;
    let b = family.warp_jets(probes[1])?;
    let mut worst = 0.0f64;
    for (ja, jb) in a.iter().zip(&b) {
        let xa = ja.value * (-probes[0]).exp();
        let xb = jb.value * (-probes[1]).exp();
        let scale = xa.abs().max(xb.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((xa - xb).abs() / scale);
    }
    Ok(Some(FormCheck { probes, max_relative_deviation: worst, passes: worst <= 1e-12 }))
}

/// Run the full certification described by `config`. `jobs` caps the
/// worker threads (`None` uses the global pool); it never changes results.
pub fn certify(config: &RunConfig, jobs: Option<usize>) -> Result<CertificationReport> {
    let family = config.model.build()?;
    let Some(grid) = &config.grid else {
        return Err(Error::Config(
            "certification needs grid.r_min, grid.r_max, grid.r_step".into(),
        ));
    };
    let radii = grid_radii(grid, &family)?;

    let run = || -> Result<Vec<RadiusRecord>> {
        radii
            .par_iter()
            .enumerate()
            .map(|(i, &r)| {
                let seed_min = derive_seed(config.seed, 2 * i as u64);
                let seed_max = derive_seed(config.seed, 2 * i as u64 + 1);
                extremize_at(&family, r, config.planes_per_r, config.starts, seed_min, seed_max)
            })
            .collect()
    };
    let records = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a {n}-thread pool: {e}")))?
            .install(run),
        None => run(),
    }?;

    let k_inf = records.iter().map(|x| x.k_min).fold(f64::INFINITY, f64::min);
    let k_sup = records.iter().map(|x| x.k_max).fold(f64::NEG_INFINITY, f64::max);
    let ii_all = records.iter().all(|x| x.ii_negative_definite);
    let product_hypothesis = matches!(family.fiber, FiberCurvature::Product { .. }).then(|| {
        if ii_all {
            "increasing-warp hypothesis holds at every sampled radius; \
             factor curvature bounds combine"
                .to_string()
        } else {
            "increasing-warp hypothesis VIOLATED at some sampled radius; \
             the factor-sum curvature bound does not apply there"
                .to_string()
        }
    });

    let volume = VolumeSection {
        negative_end: end_volume(&family, config.volume_r_hi)?.into(),
        monotone_bound: monotone_volume_bound(&family)?,
        exponential_form: exponential_form_check(&family)?,
    };

    Ok(CertificationReport {
        tool_version: env!("CARGO_PKG_VERSION"),
        family: family.name.clone(),
        dim: family.dim(),
        seed: config.seed,
        config: config.echo(),
        sign_certificate: k_sup < 0.0,
        k_inf,
        k_sup,
        ii_all_negative_definite: ii_all,
        product_hypothesis,
        radii: records,
        volume,
    })
}

/// JSON formatter that writes every float with 17 significant digits, so
/// values round-trip exactly and reports stay byte-comparable.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: std::io::Write + ?Sized>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

impl CertificationReport {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
        self.serialize(&mut ser).expect("report structs serialize infallibly");
        out.push(b'\n');
        out
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = String::from("r,K_min,K_max\n");
        for row in &self.radii {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", row.r, row.k_min, row.k_max));
        }
        out.into_bytes()
    }
}

/// Write via a sibling temp file and rename, so a failed run never leaves
/// a partial report behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
