//! Plain-text run configuration.
//!
//! Grammar: one `key = value` pair per line, keys are dotted paths, `#`
//! starts a comment, blank lines are ignored. Example:
//!
//! ```text
//! model.family = type_k
//! model.c23 = 0.5
//! grid.r_min = 6
//! grid.r_max = 118
//! grid.r_step = 0.1
//! scan.planes_per_r = 10000
//! optimizer.starts = 16
//! optimizer.seed = 7
//! output.report = out/report.json
//! output.csv = out/table.csv
//! ```
//!
//! A product nests its factors under `model.left.` and `model.right.`
//! (recursively, so products of products work):
//!
//! ```text
//! model.family = product
//! model.left.family = type_k
//! model.right.family = cusp
//! model.right.dim = 1
//! ```
//!
//! Unknown keys are errors, not warnings; so are duplicates. Every message
//! carries the offending key and line number.

use std::collections::BTreeMap;

use crate::curvature::MetricFamily;
use crate::error::{Error, Result};
use crate::models::{
    cusp, infranil, npc_base, product, type_k, InfranilParams, NpcBaseParams, TypeKParams,
};

/// Which family to build, with its parameters resolved against defaults.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSelector {
    Cusp { dim: usize },
    NpcBase(NpcBaseParams),
    Infranil(InfranilParams),
    TypeK(TypeKParams),
    Product(Box<ModelSelector>, Box<ModelSelector>),
}

impl ModelSelector {
    pub fn build(&self) -> Result<MetricFamily> {
        match self {
            ModelSelector::Cusp { dim } => cusp(*dim),
            ModelSelector::NpcBase(p) => npc_base(p),
            ModelSelector::Infranil(p) => infranil(p),
            ModelSelector::TypeK(p) => type_k(p),
            ModelSelector::Product(l, r) => product(&l.build()?, &r.build()?),
        }
    }

    /// Canonical `key = value` pairs for the report echo, resolved defaults
    /// included, in a fixed order.
    pub fn echo(&self, prefix: &str, out: &mut Vec<(String, String)>) {
        let key = |suffix: &str| format!("{prefix}{suffix}");
        match self {
            ModelSelector::Cusp { dim } => {
                out.push((key("family"), "cusp".into()));
                out.push((key("dim"), dim.to_string()));
            }
            ModelSelector::NpcBase(p) => {
                out.push((key("family"), "npc_base".into()));
                out.push((key("base_curvature"), fmt_float(p.base_curvature)));
                out.push((key("tau"), fmt_float(p.tau)));
                out.push((key("smoothing_radius"), fmt_float(p.smoothing_radius)));
            }
            ModelSelector::Infranil(p) => {
                out.push((key("family"), "infranil".into()));
                out.push((key("degree"), p.degree.to_string()));
                out.push((key("c"), fmt_float(p.c)));
                out.push((key("t1"), fmt_float(p.t1)));
                out.push((key("t2"), fmt_float(p.t2)));
                out.push((key("layer1_prefactor"), fmt_float(p.layer1_prefactor)));
                out.push((key("layer2_prefactor"), fmt_float(p.layer2_prefactor)));
            }
            ModelSelector::TypeK(p) => {
                out.push((key("family"), "type_k".into()));
                out.push((key("eps"), fmt_float(p.eps)));
                out.push((key("t0"), fmt_float(p.t0)));
                out.push((key("t1"), fmt_float(p.t1)));
                out.push((key("t2"), fmt_float(p.t2)));
                out.push((key("c23"), fmt_float(p.c23)));
            }
            ModelSelector::Product(l, r) => {
                out.push((key("family"), "product".into()));
                l.echo(&format!("{prefix}left."), out);
                r.echo(&format!("{prefix}right."), out);
            }
        }
    }
}

fn fmt_float(x: f64) -> String {
    // Shortest round-trip form; echoes are config text, not measurements.
    format!("{x}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub r_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSelector,
    /// Radial grid; `certify` requires it, `volume` ignores it.
    pub grid: Option<GridSpec>,
    pub planes_per_r: usize,
    pub starts: usize,
    pub seed: u64,
    /// Upper radius for the end-volume check.
    pub volume_r_hi: f64,
    pub report_path: Option<String>,
    pub csv_path: Option<String>,
}

impl RunConfig {
    /// Canonical `key = value` echo of the whole run, grid and scan
    /// settings included. Output paths are deliberately left out: the same
    /// run written elsewhere should produce the same report bytes.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        self.model.echo("model.", &mut out);
        if let Some(g) = &self.grid {
            out.push(("grid.r_min".into(), fmt_float(g.r_min)));
            out.push(("grid.r_max".into(), fmt_float(g.r_max)));
            out.push(("grid.r_step".into(), fmt_float(g.r_step)));
        }
        out.push(("scan.planes_per_r".into(), self.planes_per_r.to_string()));
        out.push(("optimizer.starts".into(), self.starts.to_string()));
        out.push(("volume.r_hi".into(), fmt_float(self.volume_r_hi)));
        out
    }
}

/// One raw `key = value` occurrence.
struct RawEntry {
    value: String,
    line: usize,
    used: bool,
}

struct RawConfig {
    entries: BTreeMap<String, RawEntry>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line}: expected `key = value`, got `{stripped}`"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!(
                    "line {line}: empty {} in `{stripped}`",
                    if key.is_empty() { "key" } else { "value" }
                )));
            }
            if let Some(prev) = entries.insert(key.clone(), RawEntry { value, line, used: false })
            {
                return Err(Error::Config(format!(
                    "line {line}: `{key}` already set on line {}",
                    prev.line
                )));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn finish(self) -> Result<()> {
        let unused: Vec<String> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.used)
            .map(|(k, e)| format!("`{k}` (line {})", e.line))
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown key {}", unused.join(", "))))
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: (String, usize), what: &str) -> Result<T> {
    raw.0.parse().map_err(|_| {
        Error::Config(format!("`{key}` (line {}): expected {what}, got `{}`", raw.1, raw.0))
    })
}

fn float_field(raw: &mut RawConfig, key: &str, into: &mut f64) -> Result<()> {
    if let Some(entry) = raw.take(key) {
        let v: f64 = parse_num(key, entry.clone(), "a number")?;
        if !v.is_finite() {
            return Err(Error::Config(format!("`{key}` (line {}): must be finite", entry.1)));
        }
        *into = v;
    }
    Ok(())
}

/// Parse the model block under `prefix` (e.g. `model.` or `model.left.`).
fn parse_model(raw: &mut RawConfig, prefix: &str) -> Result<ModelSelector> {
    let family_key = format!("{prefix}family");
    let Some((family, line)) = raw.take(&family_key) else {
        return Err(Error::Config(format!("missing required key `{family_key}`")));
    };
    let key = |suffix: &str| format!("{prefix}{suffix}");
    match family.as_str() {
        "cusp" => {
            let mut dim = 2usize;
            if let Some(entry) = raw.take(&key("dim")) {
                dim = parse_num(&key("dim"), entry, "a positive integer")?;
            }
            Ok(ModelSelector::Cusp { dim })
        }
        "npc_base" => {
            let mut p = NpcBaseParams::default();
            float_field(raw, &key("base_curvature"), &mut p.base_curvature)?;
            float_field(raw, &key("tau"), &mut p.tau)?;
            float_field(raw, &key("smoothing_radius"), &mut p.smoothing_radius)?;
            Ok(ModelSelector::NpcBase(p))
        }
        "infranil" => {
            let mut degree = 2u32;
            if let Some(entry) = raw.take(&key("degree")) {
                degree = parse_num(&key("degree"), entry, "an integer >= 2")?;
            }
            // t2's default depends on the degree, so resolve it afterwards.
            let mut p = InfranilParams::for_degree(degree);
            float_field(raw, &key("c"), &mut p.c)?;
            float_field(raw, &key("t1"), &mut p.t1)?;
            float_field(raw, &key("t2"), &mut p.t2)?;
            float_field(raw, &key("layer1_prefactor"), &mut p.layer1_prefactor)?;
            float_field(raw, &key("layer2_prefactor"), &mut p.layer2_prefactor)?;
            Ok(ModelSelector::Infranil(p))
        }
        "type_k" => {
            let mut p = TypeKParams::default();
            float_field(raw, &key("eps"), &mut p.eps)?;
            float_field(raw, &key("t0"), &mut p.t0)?;
            float_field(raw, &key("t1"), &mut p.t1)?;
            float_field(raw, &key("t2"), &mut p.t2)?;
            float_field(raw, &key("c23"), &mut p.c23)?;
            Ok(ModelSelector::TypeK(p))
        }
        "product" => {
            let left = parse_model(raw, &format!("{prefix}left."))?;
            let right = parse_model(raw, &format!("{prefix}right."))?;
            Ok(ModelSelector::Product(Box::new(left), Box::new(right)))
        }
        other => Err(Error::Config(format!(
            "`{family_key}` (line {line}): unknown family `{other}` (known: cusp, npc_base, infranil, type_k, product)"
        ))),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = RawConfig::parse(text)?;
    let model = parse_model(&mut raw, "model.")?;

    let grid_parts = [
        raw.take("grid.r_min"),
        raw.take("grid.r_max"),
        raw.take("grid.r_step"),
    ];
    let grid = match grid_parts {
        [Some(a), Some(b), Some(c)] => {
            let r_min: f64 = parse_num("grid.r_min", a, "a number")?;
            let r_max: f64 = parse_num("grid.r_max", b, "a number")?;
            let r_step: f64 = parse_num("grid.r_step", c, "a number")?;
            if !(r_min.is_finite() && r_max.is_finite() && r_step.is_finite()) {
                return Err(Error::Config("grid values must be finite".into()));
            }
            if !(r_min < r_max) {
                return Err(Error::Config(format!(
                    "grid.r_min must be below grid.r_max, got {r_min} vs {r_max}"
                )));
            }
            if !(r_step > 0.0) {
                return Err(Error::Config(format!("grid.r_step must be positive, got {r_step}")));
            }
            Some(GridSpec { r_min, r_max, r_step })
        }
        [None, None, None] => None,
        _ => {
            return Err(Error::Config(
                "grid.r_min, grid.r_max, grid.r_step must be given together".into(),
            ))
        }
    };

    let mut planes_per_r = 1000usize;
    if let Some(entry) = raw.take("scan.planes_per_r") {
        planes_per_r = parse_num("scan.planes_per_r", entry, "an integer")?;
    }
    if planes_per_r < 10 {
        return Err(Error::Config(format!(
            "scan.planes_per_r must be at least 10, got {planes_per_r}"
        )));
    }

    let mut starts = 16usize;
    if let Some(entry) = raw.take("optimizer.starts") {
        starts = parse_num("optimizer.starts", entry, "an integer")?;
    }
    if starts == 0 {
        return Err(Error::Config("optimizer.starts must be positive".into()));
    }

    let mut seed = 0u64;
    if let Some(entry) = raw.take("optimizer.seed") {
        seed = parse_num("optimizer.seed", entry, "an unsigned integer")?;
    }

    let mut volume_r_hi = 0.0f64;
    float_field(&mut raw, "volume.r_hi", &mut volume_r_hi)?;

    let report_path = raw.take("output.report").map(|(v, _)| v);
    let csv_path = raw.take("output.csv").map(|(v, _)| v);

    raw.finish()?;
    Ok(RunConfig {
        model,
        grid,
        planes_per_r,
        starts,
        seed,
        volume_r_hi,
        report_path,
        csv_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# certification run
model.family = type_k
model.c23 = 0.25
grid.r_min = 6    # clipped to the domain anyway
grid.r_max = 118
grid.r_step = 0.5
scan.planes_per_r = 500
optimizer.starts = 8
optimizer.seed = 11
output.report = out/report.json
output.csv = out/table.csv
";

    #[test]
    fn full_example_round_trips() {
        let cfg = parse_config(FULL).unwrap();
        match &cfg.model {
            ModelSelector::TypeK(p) => {
                assert_eq!(p.c23, 0.25);
                assert_eq!(p.t0, 6.0);
            }
            other => panic!("wrong model: {other:?}"),
        }
        let grid = cfg.grid.unwrap();
        assert_eq!((grid.r_min, grid.r_max, grid.r_step), (6.0, 118.0, 0.5));
        assert_eq!(cfg.planes_per_r, 500);
        assert_eq!(cfg.starts, 8);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.report_path.as_deref(), Some("out/report.json"));
        assert_eq!(cfg.csv_path.as_deref(), Some("out/table.csv"));
        cfg.model.build().unwrap();
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse_config("model.family = cusp\n").unwrap();
        assert_eq!(cfg.model, ModelSelector::Cusp { dim: 2 });
        assert!(cfg.grid.is_none());
        assert_eq!(cfg.planes_per_r, 1000);
        assert_eq!(cfg.starts, 16);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.volume_r_hi, 0.0);
    }

    #[test]
    fn infranil_t2_default_tracks_degree() {
        let cfg = parse_config("model.family = infranil\nmodel.degree = 3\n").unwrap();
        match cfg.model {
            ModelSelector::Infranil(p) => assert_eq!(p.t2, 3.0 + 200.0 * 2.0),
            other => panic!("wrong model: {other:?}"),
        }
    }

    #[test]
    fn nested_product_blocks() {
        let text = "\
model.family = product
model.left.family = type_k
model.left.c23 = 0.5
model.right.family = product
model.right.left.family = cusp
model.right.left.dim = 1
model.right.right.family = npc_base
model.right.right.tau = 2
";
        let cfg = parse_config(text).unwrap();
        let m = cfg.model.build().unwrap();
        assert_eq!(m.dim(), 1 + 3 + 1 + 2);
        let mut echo = Vec::new();
        cfg.model.echo("model.", &mut echo);
        assert!(echo.iter().any(|(k, v)| k == "model.right.right.tau" && v == "2"));
        assert!(echo.iter().any(|(k, v)| k == "model.right.left.dim" && v == "1"));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_errors() {
        let e = parse_config("model.family = cusp\nmodel.radius = 3\n").unwrap_err();
        assert!(e.to_string().contains("model.radius"), "{e}");
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_config("model.family = cusp\nmodel.family = cusp\n").unwrap_err();
        assert!(e.to_string().contains("already set"), "{e}");
    }

    #[test]
    fn field_level_messages() {
        let e = parse_config("model.family = cusp\nmodel.dim = two\n").unwrap_err();
        assert!(e.to_string().contains("model.dim"), "{e}");
        let e = parse_config("model.family = waveguide\n").unwrap_err();
        assert!(e.to_string().contains("waveguide"), "{e}");
        let e = parse_config("grid.r_min = 0\n").unwrap_err();
        assert!(e.to_string().contains("model.family"), "{e}");
    }

    #[test]
    fn grid_invariants() {
        let base = "model.family = cusp\n";
        let e = parse_config(&format!("{base}grid.r_min = 2\ngrid.r_max = 1\ngrid.r_step = 0.5\n"))
            .unwrap_err();
        assert!(e.to_string().contains("r_min"), "{e}");
        let e = parse_config(&format!("{base}grid.r_min = 0\ngrid.r_max = 1\ngrid.r_step = 0\n"))
            .unwrap_err();
        assert!(e.to_string().contains("r_step"), "{e}");
        let e = parse_config(&format!("{base}grid.r_min = 0\n")).unwrap_err();
        assert!(e.to_string().contains("together"), "{e}");
        let e = parse_config(&format!("{base}scan.planes_per_r = 5\n")).unwrap_err();
        assert!(e.to_string().contains("at least 10"), "{e}");
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let text = "  model.family=cusp# trailing\n\n   # whole-line comment\n model.dim =  3  \n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.model, ModelSelector::Cusp { dim: 3 });
    }
}
