//! Finiteness and value of the collapsing end's volume.
//!
//! Relative to the fiber's fixed measure (normalized to 1 at r = 0), the
//! volume density of dr^2 + g_r is prod_i h_i(r). The end volume over
//! (-inf, r_hi] is decided in two steps: a log-linear fit of the density
//! over a tail window classifies the decay, and only a certified
//! exponential-decay tail is then integrated, under the substitution
//! u = e^r, by adaptive Gauss-Kronrod quadrature to relative error 1e-6.
//! Anything the fit cannot classify is reported as such rather than
//! guessed at.

use crate::curvature::MetricFamily;
use crate::error::{Error, Result};
use crate::jet::jet_eval;
use std::collections::BinaryHeap;

/// Fitted decay rate below this threshold counts as "no decay".
const DECAY_RATE_MIN: f64 = 1e-3;
/// Log-density spread below this over the tail window counts as "flat".
const FLAT_RANGE: f64 = 0.1;
const REL_TOL: f64 = 1e-6;
const MAX_PANELS: usize = 2_000;

/// Outcome of an end-volume computation. Volumes are relative to the
/// fiber's measure at r = 0, which is normalized to 1.
#[derive(Clone, Debug, PartialEq)]
pub enum VolumeVerdict {
    Finite { value: f64, relative_error: f64, tail_bound: String },
    Divergent { reason: String },
    Inconclusive { reason: String },
}

impl VolumeVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, VolumeVerdict::Finite { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            VolumeVerdict::Finite { .. } => "finite",
            VolumeVerdict::Divergent { .. } => "divergent",
            VolumeVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Sum of log warps; -inf when some warp underflows to zero.
fn log_density(family: &MetricFamily, r: f64) -> Result<f64> {
    let mut total = 0.0;
    for w in &family.warps {
        let v = jet_eval(w, r)?.value;
        if v < 0.0 {
            return Err(Error::InvalidParams(format!(
                "warp {} is negative at r = {r}",
                w.describe()
            )));
        }
        total += v.ln();
    }
    Ok(total)
}

struct TailFit {
    slope: f64,
    range: f64,
    window: (f64, f64),
    samples: usize,
}

/// Least-squares slope of the log density over a 50-unit window placed at
/// the decaying end, skipping radii where the density underflows.
fn fit_tail(family: &MetricFamily, r_hi: f64) -> Result<Option<TailFit>> {
    let hi = r_hi.min(-10.0);
    let lo = hi - 50.0;
    let count = 251;
    let mut pts = Vec::with_capacity(count);
    for j in 0..count {
        let r = lo + (hi - lo) * j as f64 / (count - 1) as f64;
        let l = log_density(family, r)?;
        if l.is_finite() {
            pts.push((r, l));
        }
    }
    if pts.len() < 20 {
        return Ok(None);
    }
    let n = pts.len() as f64;
    let mean_r = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    let mut min_l = f64::INFINITY;
    let mut max_l = f64::NEG_INFINITY;
    for (r, l) in &pts {
        cov += (r - mean_r) * (l - mean_l);
        var += (r - mean_r) * (r - mean_r);
        min_l = min_l.min(*l);
        max_l = max_l.max(*l);
    }
    Ok(Some(TailFit { slope: cov / var, range: max_l - min_l, window: (lo, hi), samples: pts.len() }))
}

/// 15-point Gauss-Kronrod panel: returns the Kronrod value and the
/// |Kronrod - Gauss| error estimate. Node and weight constants are the
/// classical QUADPACK qk15 values.
fn qk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const XGK: [f64; 8] = [
        0.991_455_371_120_812_639_206_854_697_526_329,
        0.949_107_912_342_758_524_526_189_684_047_851,
        0.864_864_423_359_769_072_789_712_788_640_926,
        0.741_531_185_599_394_439_863_864_773_280_788,
        0.586_087_235_467_691_130_294_144_838_258_730,
        0.405_845_151_377_397_166_906_606_412_076_961,
        0.207_784_955_007_898_467_600_689_403_773_245,
        0.000_000_000_000_000_000_000_000_000_000_000,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_693_270_611_432_679_082,
        0.279_705_391_489_276_667_901_467_771_423_780,
        0.381_830_050_505_118_944_950_369_775_488_975,
        0.417_959_183_673_469_387_755_102_040_816_327,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_224_963_732_008_058_970,
        0.063_092_092_629_978_553_290_700_663_189_204,
        0.104_790_010_322_250_183_839_876_322_541_518,
        0.140_653_259_715_525_918_745_189_590_510_238,
        0.169_004_726_639_267_902_826_583_426_598_550,
        0.190_350_578_064_785_409_913_256_402_421_014,
        0.204_432_940_075_298_892_414_161_999_234_649,
        0.209_482_141_084_727_828_012_999_174_891_714,
    ];
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let fc = f(center);
    let mut res_gauss = WG[3] * fc;
    let mut res_kronrod = WGK[7] * fc;
    for j in 0..3 {
        let x = XGK[2 * j + 1];
        let pair = f(center - half * x) + f(center + half * x);
        res_gauss += WG[j] * pair;
        res_kronrod += WGK[2 * j + 1] * pair;
    }
    for j in 0..4 {
        let x = XGK[2 * j];
        let pair = f(center - half * x) + f(center + half * x);
        res_kronrod += WGK[2 * j] * pair;
    }
    (res_kronrod * half, ((res_kronrod - res_gauss) * half).abs())
}

/// Heap entry ordered by error estimate; ties broken on the interval so
/// refinement order never depends on insertion order.
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err
            .total_cmp(&other.err)
            .then(self.a.total_cmp(&other.a))
            .then(self.b.total_cmp(&other.b))
    }
}

/// Adaptive integration by worst-panel bisection. Returns (value, relative
/// error, converged).
fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, bool) {
    let (val, err) = qk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { err, a, b, val });
    let mut total_val = val;
    let mut total_err = err;
    let mut converged = total_err <= REL_TOL * total_val.abs();
    let mut splits = 0;
    while !converged && splits < MAX_PANELS {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; put it back and stop.
            heap.push(worst);
            break;
        }
        let (lv, le) = qk15(f, worst.a, mid);
        let (rv, re) = qk15(f, mid, worst.b);
        total_val += lv + rv - worst.val;
        total_err += le + re - worst.err;
        heap.push(Panel { err: le, a: worst.a, b: mid, val: lv });
        heap.push(Panel { err: re, a: mid, b: worst.b, val: rv });
        splits += 1;
        converged = total_err <= REL_TOL * total_val.abs();
    }
    let rel = if total_val != 0.0 { total_err / total_val.abs() } else { total_err };
    (total_val, rel, converged)
}

/// Volume of the end (-inf, r_hi] x fiber, relative to unit fiber measure.
pub fn end_volume(family: &MetricFamily, r_hi: f64) -> Result<VolumeVerdict> {
    if r_hi > family.domain.1 {
        return Err(Error::OutsideDomain { r: r_hi, lo: family.domain.0, hi: family.domain.1 });
    }
    if family.domain.0.is_finite() {
        return Ok(VolumeVerdict::Inconclusive {
            reason: format!(
                "family is only defined for r >= {}; the end (-inf, {r_hi}] leaves its domain",
                family.domain.0
            ),
        });
    }

    let fit = match fit_tail(family, r_hi)? {
        Some(fit) => fit,
        None => {
            return Ok(VolumeVerdict::Inconclusive {
                reason: "volume density underflows across the tail window".into(),
            })
        }
    };

    if fit.slope <= -DECAY_RATE_MIN {
        return Ok(VolumeVerdict::Divergent {
            reason: format!(
                "density grows into the end at fitted rate {:.6} over [{:.1}, {:.1}]",
                -fit.slope, fit.window.0, fit.window.1
            ),
        });
    }
    if fit.slope < DECAY_RATE_MIN {
        if fit.range < FLAT_RANGE {
            return Ok(VolumeVerdict::Divergent {
                reason: format!(
                    "density is bounded below along the end (log range {:.2e} over [{:.1}, {:.1}])",
                    fit.range, fit.window.0, fit.window.1
                ),
            });
        }
        return Ok(VolumeVerdict::Inconclusive {
            reason: format!(
                "tail neither decays nor stabilizes: fitted rate {:.2e}, log range {:.2e}",
                fit.slope, fit.range
            ),
        });
    }

    // Certified exponential decay; integrate with u = e^r, so that
    // (-inf, r_hi] becomes (0, e^{r_hi}] and the integrand is density/u.
    let integrand = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match log_density(family, u.ln()) {
            Ok(l) => {
                let v = (l - u.ln()).exp();
                if v.is_finite() {
                    v
                } else {
                    f64::NAN
                }
            }
            Err(_) => f64::NAN,
        }
    };
    let (value, relative_error, converged) = integrate_adaptive(&integrand, 0.0, r_hi.exp());
    if !value.is_finite() {
        return Ok(VolumeVerdict::Inconclusive {
            reason: "density evaluation failed inside the quadrature".into(),
        });
    }
    if !converged || relative_error > REL_TOL {
        return Ok(VolumeVerdict::Inconclusive {
            reason: format!(
                "quadrature stalled at relative error {relative_error:.2e}; the tail fit may be misleading"
            ),
        });
    }
    Ok(VolumeVerdict::Finite {
        value,
        relative_error,
        tail_bound: format!(
            "log density fits slope {:.6} over [{:.1}, {:.1}] ({} samples)",
            fit.slope, fit.window.0, fit.window.1, fit.samples
        ),
    })
}

/// True when every warp is nondecreasing on the sampled negative axis, so
/// slice volumes on r <= 0 are bounded by the r = 0 volume.
pub fn monotone_volume_bound(family: &MetricFamily) -> Result<bool> {
    let lo = family.domain.0.max(-40.0);
    let hi = family.domain.1.min(0.0);
    if hi < lo {
        return Ok(false);
    }
    let count = 801;
    for j in 0..count {
        let r = lo + (hi - lo) * j as f64 / (count - 1) as f64;
        for w in &family.warps {
            if jet_eval(w, r)?.d1 < 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
