//! Built-in metric families.
//!
//! Each constructor returns a [`MetricFamily`] whose curvature then flows
//! through the generic assembly and extremization machinery. The families:
//!
//! * `cusp(m)`: flat m-torus fiber, every direction warped by e^r.
//!   Constant curvature -1.
//! * `npc_base`: 2-dimensional fiber of constant curvature K_B <= 0 with a
//!   single convex increasing warp that flattens to tau + e^r at the
//!   collapsing end and merges into e^r by the smoothing radius.
//! * `infranil`: two-step nilpotent fiber (two layer-1 directions whose
//!   bracket spans the layer-2 direction). Layer-1 warps grow at rate 1
//!   throughout; the layer-2 rate ramps from `degree` down to 1 across
//!   [t1, t2], after which the whole metric is an e^{2r} multiple of a
//!   fixed one.
//! * `type_k`: circle bundle over a hyperbolic surface, circle warp v and
//!   base warp h. Cylindrical profile (v = sinh r, h = cosh r/2) up to
//!   t0 - 1, then v = e^r/2 and h = e^{q}/2 from t0 on, where the rate q'
//!   ramps from 1/2 to 1 across [t1, t2]. The twist constant c23 encodes
//!   the bundle: [Y2, Y3] = c23 (v/h^2) Y1.
//! * `product`: metric product of two fibers under a common radial
//!   coordinate; block frame, concatenated warps, block fiber curvature.
//!
//! Desk-scale caveat for `infranil`: the shipped two-step frame natively
//! realizes degree 2 (pinching [-4, -1]). Larger `degree` values drive the
//! layer-2 rate out of step with the frame's grading, and certification
//! then honestly reports the sign failure instead of masking it.

use crate::curvature::MetricFamily;
use crate::error::{Error, Result};
use crate::framealg::{product_fiber, FiberCurvature, FrameSpec};
use crate::jet::{
    jet_eval, npc_smoothed_warp, BlendSpec, IntegratedTransition, Transition, WarpSpec,
};

/// Flat-torus cusp with `dim` fiber directions, all warped by e^r.
pub fn cusp(dim: usize) -> Result<MetricFamily> {
    if dim == 0 {
        return Err(Error::InvalidParams("cusp needs at least one fiber direction".into()));
    }
    Ok(MetricFamily {
        name: format!("cusp({dim})"),
        frame: FrameSpec::zero(dim),
        warps: vec![WarpSpec::Exp { prefactor: 1.0, rate: 1.0, offset: 0.0 }; dim],
        fiber: FiberCurvature::Flat,
        domain: (f64::NEG_INFINITY, f64::INFINITY),
        asymptotic_from: Some(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NpcBaseParams {
    /// Constant curvature of the 2-dimensional fiber; at most 0.
    pub base_curvature: f64,
    /// Positive floor the warp approaches as r -> -inf.
    pub tau: f64,
    /// Radius by which the warp has merged into e^r.
    pub smoothing_radius: f64,
}

impl Default for NpcBaseParams {
    fn default() -> Self {
        NpcBaseParams { base_curvature: -1.0, tau: 1.0, smoothing_radius: 5.0 }
    }
}

/// Nonpositively curved surface fiber with one shared warp, convex and
/// increasing, equal to tau + e^r at the collapsing end and to e^r from the
/// smoothing radius on.
pub fn npc_base(params: &NpcBaseParams) -> Result<MetricFamily> {
    if !(params.base_curvature <= 0.0) {
        return Err(Error::InvalidParams(format!(
            "base curvature must be nonpositive, got {}",
            params.base_curvature
        )));
    }
    let warp = npc_smoothed_warp(params.tau, params.smoothing_radius)?;
    Ok(MetricFamily {
        name: "npc_base".into(),
        frame: FrameSpec::zero(2),
        warps: vec![warp.clone(), warp],
        fiber: FiberCurvature::ConstantCurvature { curvature: params.base_curvature },
        domain: (f64::NEG_INFINITY, f64::INFINITY),
        asymptotic_from: Some(params.smoothing_radius),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfranilParams {
    /// Initial layer-2 growth rate; the frame natively realizes 2.
    pub degree: u32,
    /// Left edge of the certified region; the rate profile is pinned there.
    pub c: f64,
    /// Rate ramp start (profile constant at `degree` on [c, t1]).
    pub t1: f64,
    /// Rate ramp end (profile constant at 1 from here on).
    pub t2: f64,
    pub layer1_prefactor: f64,
    pub layer2_prefactor: f64,
}

impl InfranilParams {
    /// Defaults for a given degree; the ramp length scales with the rate
    /// gap so that max |Q'| = 15 (degree-1) / (8 (t2-t1)) stays below 0.01.
    pub fn for_degree(degree: u32) -> Self {
        let t1 = 3.0;
        InfranilParams {
            degree,
            c: 1.0,
            t1,
            t2: t1 + 200.0 * (degree.max(1) - 1) as f64,
            layer1_prefactor: 0.5,
            layer2_prefactor: 0.5,
        }
    }

    /// The layer-2 exponent q with q' ramping from `degree` to 1, pinned to
    /// q(c) = degree * c.
    pub fn rate_profile(&self) -> Result<IntegratedTransition> {
        self.validate()?;
        let ramp = Transition::new(self.degree as f64, 1.0, self.t1, self.t2)?;
        Ok(ramp.integrate(self.c, self.degree as f64 * self.c))
    }

    fn validate(&self) -> Result<()> {
        if self.degree < 2 {
            return Err(Error::InvalidParams(format!(
                "nilpotence degree must be at least 2, got {}",
                self.degree
            )));
        }
        if !(self.c < self.t1) {
            return Err(Error::InvalidParams(format!(
                "need c < t1, got c = {}, t1 = {}",
                self.c, self.t1
            )));
        }
        if !(self.layer1_prefactor > 0.0 && self.layer2_prefactor > 0.0) {
            return Err(Error::InvalidParams("warp prefactors must be positive".into()));
        }
        Ok(())
    }
}

impl Default for InfranilParams {
    fn default() -> Self {
        InfranilParams::for_degree(2)
    }
}

/// Two-step nilpotent fiber with the layer-2 rate ramped down to 1.
pub fn infranil(params: &InfranilParams) -> Result<MetricFamily> {
    let q = params.rate_profile()?;
    let mut frame = FrameSpec::zero(3);
    frame.set_bracket(0, 1, 2, 1.0);
    let layer1 = WarpSpec::Exp { prefactor: params.layer1_prefactor, rate: 1.0, offset: 0.0 };
    Ok(MetricFamily {
        name: format!("infranil(degree {})", params.degree),
        frame,
        warps: vec![
            layer1.clone(),
            layer1,
            WarpSpec::TransitionExp { prefactor: params.layer2_prefactor, exponent: q },
        ],
        fiber: FiberCurvature::Koszul,
        domain: (f64::NEG_INFINITY, f64::INFINITY),
        asymptotic_from: Some(params.t2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeKParams {
    /// Left edge of the domain; the model is cylindrical from here.
    pub eps: f64,
    /// End of the cylindrical profile: v and h are pure exponentials from t0.
    pub t0: f64,
    /// Base-rate ramp start.
    pub t1: f64,
    /// Base-rate ramp end.
    pub t2: f64,
    /// Twist constant, |c23| <= 1/2.
    pub c23: f64,
}

impl Default for TypeKParams {
    fn default() -> Self {
        TypeKParams { eps: 0.1, t0: 6.0, t1: 8.0, t2: 108.0, c23: 0.5 }
    }
}

impl TypeKParams {
    /// The base exponent q with q' ramping from 1/2 to 1, pinned to
    /// q(t0) = t0/2.
    pub fn rate_profile(&self) -> Result<IntegratedTransition> {
        self.validate()?;
        let ramp = Transition::new(0.5, 1.0, self.t1, self.t2)?;
        Ok(ramp.integrate(self.t0, 0.5 * self.t0))
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParams(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.eps <= self.t0 - 1.0) {
            return Err(Error::InvalidParams(format!(
                "the cylindrical region must reach the stitch band: need eps <= t0 - 1, got eps = {}, t0 = {}",
                self.eps, self.t0
            )));
        }
        if !(self.t0 < self.t1) {
            return Err(Error::InvalidParams(format!(
                "need t0 < t1, got t0 = {}, t1 = {}",
                self.t0, self.t1
            )));
        }
        if !(self.c23.abs() <= 0.5) {
            return Err(Error::InvalidParams(format!(
                "twist constant must satisfy |c23| <= 1/2, got {}",
                self.c23
            )));
        }
        Ok(())
    }

    /// Circle warp v and base warp h. Each is stitched over [t0-1, t0]
    /// from its cylindrical branch to its exponential branch; the branches
    /// differ by O(e^{-r}) there, so the stitch is a small C^2 change and
    /// everything below t0 - 1 is exactly cylindrical.
    fn warps(&self) -> Result<(WarpSpec, WarpSpec)> {
        let q = self.rate_profile()?;
        let v = WarpSpec::Blend(Box::new(BlendSpec {
            left: WarpSpec::Sinh,
            right: WarpSpec::Exp { prefactor: 0.5, rate: 1.0, offset: 0.0 },
            from: self.t0 - 1.0,
            to: self.t0,
        }));
        let h = WarpSpec::Blend(Box::new(BlendSpec {
            left: WarpSpec::CoshHalf,
            right: WarpSpec::TransitionExp { prefactor: 0.5, exponent: q },
            from: self.t0 - 1.0,
            to: self.t0,
        }));
        Ok((v, h))
    }
}

/// Circle-bundle family: fiber directions (Y1 circle, Y2, Y3 base), warps
/// (v, h, h), twist [Y2, Y3] = c23 (v/h^2) Y1.
pub fn type_k(params: &TypeKParams) -> Result<MetricFamily> {
    let (v, h) = params.warps()?;
    let mut frame = FrameSpec::zero(3);
    frame.set_bracket(1, 2, 0, params.c23);
    Ok(MetricFamily {
        name: format!("type_k(c23 = {})", params.c23),
        frame,
        warps: vec![v, h.clone(), h],
        fiber: FiberCurvature::BundleExplicit { c23: params.c23 },
        domain: (params.eps, f64::INFINITY),
        asymptotic_from: Some(params.t2),
    })
}

/// The circle-bundle component table at one radius, evaluated from the
/// closed-form expressions in v, h, and s = v/h^2 (independent of the
/// generic tensor assembly, so the two can be cross-checked).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeKComponents {
    pub r: f64,
    /// s = v/h^2; lies in (0, 2] once v = e^r/2 and h >= e^{r/2}/2.
    pub s: f64,
    /// K(dr, Y1) = -v''/v.
    pub k_radial_circle: f64,
    /// K(dr, Y2) = K(dr, Y3) = -h''/h.
    pub k_radial_base: f64,
    /// K(Y2, Y1) = K(Y3, Y1) = s^2/16 - (v'/v)(h'/h).
    pub k_circle_base: f64,
    /// K(Y3, Y2) = -1/(4h^2) - 3 c23^2/h^2 - 3 c23^2 s^2/4 - (h'/h)^2.
    pub k_base_base: f64,
    /// <R(dr, Y1) Y2, Y3> = -c23 s (v'/v - h'/h).
    pub mixed: f64,
}

impl TypeKComponents {
    /// Sectional curvature of span{C, D} for the orthonormal pair
    /// C = c0 dr + c1 Y1 + c2 Y2 + c3 Y3, D = d1 Y1 + d2 Y2:
    ///
    /// (d1 c2 - d2 c1)^2 K(Y2,Y1) + d1^2 c3^2 K(Y3,Y1)
    ///   + d1^2 c0^2 K(dr,Y1) + d2^2 c0^2 K(dr,Y2) + d2^2 c3^2 K(Y3,Y2)
    ///   + 3 d1 d2 c0 c3 <R(dr,Y1)Y2,Y3>.
    pub fn sectional_from_table(&self, c: &[f64; 4], d: &[f64; 2]) -> f64 {
        let (c0, c1, c2, c3) = (c[0], c[1], c[2], c[3]);
        let (d1, d2) = (d[0], d[1]);
        (d1 * c2 - d2 * c1) * (d1 * c2 - d2 * c1) * self.k_circle_base
            + d1 * d1 * c3 * c3 * self.k_circle_base
            + d1 * d1 * c0 * c0 * self.k_radial_circle
            + d2 * d2 * c0 * c0 * self.k_radial_base
            + d2 * d2 * c3 * c3 * self.k_base_base
            + 3.0 * d1 * d2 * c0 * c3 * self.mixed
    }

    /// The three cross terms whose sum carries the sign argument:
    /// d1^2 c0^2 K(dr,Y1) + d2^2 c3^2 K(Y3,Y2) + 3 d1 d2 c0 c3 <R...>.
    /// Nonpositive whenever the exponential profile is in force (r >= t0).
    pub fn defect_terms(&self, c0: f64, c3: f64, d1: f64, d2: f64) -> f64 {
        d1 * d1 * c0 * c0 * self.k_radial_circle
            + d2 * d2 * c3 * c3 * self.k_base_base
            + 3.0 * d1 * d2 * c0 * c3 * self.mixed
    }
}

pub fn type_k_components(params: &TypeKParams, r: f64) -> Result<TypeKComponents> {
    let (v_spec, h_spec) = params.warps()?;
    if r < params.eps {
        return Err(Error::OutsideDomain { r, lo: params.eps, hi: f64::INFINITY });
    }
    let v = jet_eval(&v_spec, r)?;
    let h = jet_eval(&h_spec, r)?;
    let s = v.value / (h.value * h.value);
    let uv = v.d1 / v.value;
    let uh = h.d1 / h.value;
    let c2 = params.c23 * params.c23;
    let h2 = h.value * h.value;
    Ok(TypeKComponents {
        r,
        s,
        k_radial_circle: -v.d2 / v.value,
        k_radial_base: -h.d2 / h.value,
        k_circle_base: s * s / 16.0 - uv * uh,
        k_base_base: -0.25 / h2 - 3.0 * c2 / h2 - 0.75 * c2 * s * s - uh * uh,
        mixed: -params.c23 * s * (uv - uh),
    })
}

fn check_split_pair(c: &[f64; 4], d: &[f64; 2]) -> Result<()> {
    let nc = c.iter().map(|x| x * x).sum::<f64>();
    let nd = d[0] * d[0] + d[1] * d[1];
    let cross = c[1] * d[0] + c[2] * d[1];
    if (nc - 1.0).abs() > 1e-9 || (nd - 1.0).abs() > 1e-9 || cross.abs() > 1e-9 {
        return Err(Error::InvalidParams(
            "plane coefficients must form an orthonormal pair (unit C, unit D, C.D = 0)".into(),
        ));
    }
    Ok(())
}

/// The sign-carrying cross-term sum of the circle-bundle curvature formula
/// for an orthonormal pair; <= 0 for r >= t0.
pub fn type_k_defect(params: &TypeKParams, r: f64, c: &[f64; 4], d: &[f64; 2]) -> Result<f64> {
    check_split_pair(c, d)?;
    let table = type_k_components(params, r)?;
    Ok(table.defect_terms(c[0], c[3], d[0], d[1]))
}

/// Metric product: block frame, concatenated warps, block fiber curvature.
/// The slice shape hypothesis (all warps increasing) is not enforced here;
/// certification checks and reports it.
pub fn product(left: &MetricFamily, right: &MetricFamily) -> Result<MetricFamily> {
    let lo = left.domain.0.max(right.domain.0);
    let hi = left.domain.1.min(right.domain.1);
    if !(lo < hi) {
        return Err(Error::InvalidParams(format!(
            "factor domains do not overlap: [{}, {}] vs [{}, {}]",
            left.domain.0, left.domain.1, right.domain.0, right.domain.1
        )));
    }
    let asymptotic_from = match (left.asymptotic_from, right.asymptotic_from) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    Ok(MetricFamily {
        name: format!("{} x {}", left.name, right.name),
        frame: FrameSpec::block(&left.frame, &right.frame),
        warps: left.warps.iter().chain(&right.warps).cloned().collect(),
        fiber: product_fiber(left.fiber.clone(), left.frame.dim(), right.fiber.clone()),
        domain: (lo, hi),
        asymptotic_from,
    })
}

/// Difference between the product metric's curvature on a fiber plane and
/// the sum of the factors' own curvatures on the split parts:
///
///   R(C,D,D,C) - sum_k R_k(C_k,D_k,D_k,C_k) = 2 a1 a2 - p1 q2 - p2 q1
///
/// with a_k = sum t_i^2 C_i D_i, p_k = sum t_i^2 C_i^2, q_k = sum t_i^2
/// D_i^2 over factor k, t_i^2 = h_i'/h_i. Under the increasing-warp
/// hypothesis the weights are positive and Cauchy-Schwarz makes the value
/// nonpositive.
pub fn product_defect(
    left: &MetricFamily,
    right: &MetricFamily,
    r: f64,
    c: (&[f64], &[f64]),
    d: (&[f64], &[f64]),
) -> Result<f64> {
    if c.0.len() != left.frame.dim()
        || d.0.len() != left.frame.dim()
        || c.1.len() != right.frame.dim()
        || d.1.len() != right.frame.dim()
    {
        return Err(Error::InvalidParams(
            "split vectors must match the factor fiber dimensions".into(),
        ));
    }
    if !left.contains(r) || !right.contains(r) {
        let lo = left.domain.0.max(right.domain.0);
        let hi = left.domain.1.min(right.domain.1);
        return Err(Error::OutsideDomain { r, lo, hi });
    }
    let weight_sums = |family: &MetricFamily, cv: &[f64], dv: &[f64]| -> Result<(f64, f64, f64)> {
        let jets = family.warp_jets(r)?;
        let mut a = 0.0;
        let mut p = 0.0;
        let mut q = 0.0;
        for ((jet, ci), di) in jets.iter().zip(cv).zip(dv) {
            let t2 = jet.d1 / jet.value;
            a += t2 * ci * di;
            p += t2 * ci * ci;
            q += t2 * di * di;
        }
        Ok((a, p, q))
    };
    let (a1, p1, q1) = weight_sums(left, c.0, d.0)?;
    let (a2, p2, q2) = weight_sums(right, c.1, d.1)?;
    Ok(2.0 * a1 * a2 - p1 * q2 - p2 * q1)
}

/// One catalog row per family for the CLI listing.
pub struct FamilyDoc {
    pub name: &'static str,
    pub summary: &'static str,
    /// (config key, default, meaning)
    pub params: &'static [(&'static str, &'static str, &'static str)],
}

pub fn catalog() -> &'static [FamilyDoc] {
    &[
        FamilyDoc {
            name: "cusp",
            summary: "flat-torus fiber, every direction warped by e^r; constant curvature -1",
            params: &[("dim", "2", "number of fiber directions (>= 1)")],
        },
        FamilyDoc {
            name: "npc_base",
            summary: "constant-curvature surface fiber with one convex increasing warp leveling at tau",
            params: &[
                ("base_curvature", "-1", "fiber curvature, at most 0"),
                ("tau", "1", "positive warp floor as r -> -inf"),
                ("smoothing_radius", "5", "radius by which the warp equals e^r"),
            ],
        },
        FamilyDoc {
            name: "infranil",
            summary: "two-step nilpotent fiber; layer-2 rate ramps from `degree` down to 1",
            params: &[
                ("degree", "2", "initial layer-2 rate (integer >= 2; the frame natively realizes 2)"),
                ("c", "1", "left edge of the certified region"),
                ("t1", "3", "rate ramp start"),
                ("t2", "t1 + 200*(degree-1)", "rate ramp end (default keeps max |Q'| <= 0.01)"),
                ("layer1_prefactor", "0.5", "scale of the two layer-1 warps"),
                ("layer2_prefactor", "0.5", "scale of the layer-2 warp"),
            ],
        },
        FamilyDoc {
            name: "type_k",
            summary: "circle bundle over a hyperbolic surface; cylindrical below t0, base rate ramps 1/2 -> 1",
            params: &[
                ("eps", "0.1", "left edge of the domain"),
                ("t0", "6", "end of the cylindrical profile"),
                ("t1", "8", "base-rate ramp start"),
                ("t2", "108", "base-rate ramp end (default keeps max |Q'| <= 0.01)"),
                ("c23", "0.5", "twist constant, |c23| <= 1/2"),
            ],
        },
        FamilyDoc {
            name: "product",
            summary: "metric product of two families under one radial coordinate",
            params: &[
                ("left.*", "-", "any family block under the left. prefix"),
                ("right.*", "-", "any family block under the right. prefix"),
            ],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{assemble, sectional, second_form};
    use crate::grassmann::{dense_scan, frame_plane_table};
    use crate::volume::{end_volume, VolumeVerdict};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
        loop {
            let mut v = [0.0; N];
            for x in v.iter_mut() {
                *x = rng.gen::<f64>() * 2.0 - 1.0;
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 {
                for x in v.iter_mut() {
                    *x /= n;
                }
                return v;
            }
        }
    }

    /// Random orthonormal (C, D) with C = c0 dr + c1 Y1 + c2 Y2 + c3 Y3
    /// and D = d1 Y1 + d2 Y2.
    fn random_cd(rng: &mut ChaCha8Rng) -> ([f64; 4], [f64; 2]) {
        loop {
            let d: [f64; 2] = unit(rng);
            let mut c: [f64; 4] = unit(rng);
            let cross = c[1] * d[0] + c[2] * d[1];
            c[1] -= cross * d[0];
            c[2] -= cross * d[1];
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 {
                for x in c.iter_mut() {
                    *x /= n;
                }
                return (c, d);
            }
        }
    }

    #[test]
    fn cusp_is_constant_curvature() {
        let m = cusp(2).unwrap();
        for r in [-3.0, 0.0, 2.0] {
            let t = assemble(&m, r).unwrap();
            for (_, k) in frame_plane_table(&t) {
                assert!((k + 1.0).abs() < 1e-12);
            }
        }
        assert!(cusp(0).is_err());
    }

    #[test]
    fn npc_matches_its_plane_formula() {
        let params = NpcBaseParams::default();
        let m = npc_base(&params).unwrap();
        for r in [-15.0, -2.0, 0.0, 3.0, 7.0] {
            let t = assemble(&m, r).unwrap();
            let h = m.warp_jets(r).unwrap()[0];
            let kb = params.base_curvature;
            for i in 0..32 {
                let th = std::f64::consts::TAU * i as f64 / 32.0;
                let (cc, dd) = (th.cos(), th.sin());
                // Plane span{Y1, cc Y2 + dd dr}; ambient order (dr, Y1, Y2).
                let e1 = [0.0, 1.0, 0.0];
                let e2 = [dd, 0.0, cc];
                let got = sectional(&t, &e1, &e2).unwrap();
                let want = cc * cc * (kb / (h.value * h.value) - (h.d1 / h.value).powi(2))
                    - dd * dd * h.d2 / h.value;
                assert!((got - want).abs() < 1e-11, "r={r} th={th}: {got} vs {want}");
            }
            // Equal warps and a bracket-free frame leave no radial-mixed
            // components, which the formula silently relies on.
            for j in 1..3 {
                for k in 1..3 {
                    for l in 1..3 {
                        assert_eq!(t.component(0, j, k, l), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn npc_rejects_positive_base_curvature() {
        let params = NpcBaseParams { base_curvature: 0.5, ..Default::default() };
        assert!(npc_base(&params).is_err());
    }

    #[test]
    fn infranil_unmodified_region_has_the_two_step_constants() {
        let m = infranil(&InfranilParams::default()).unwrap();
        for r in [1.0, 2.0, 3.0] {
            let t = assemble(&m, r).unwrap();
            let lookup = |a, b| {
                frame_plane_table(&t).iter().find(|(p, _)| *p == (a, b)).unwrap().1
            };
            assert!((lookup(1, 2) + 4.0).abs() < 1e-8);
            assert!((lookup(0, 3) + 4.0).abs() < 1e-8);
            for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
                assert!((lookup(a, b) + 1.0).abs() < 1e-8, "({a},{b})");
            }
        }
    }

    #[test]
    fn infranil_settles_into_a_fixed_exponential_multiple() {
        let params = InfranilParams::default();
        let m = infranil(&params).unwrap();
        let at = |r: f64| -> Vec<f64> {
            m.warp_jets(r).unwrap().iter().map(|j| j.value * (-r).exp()).collect()
        };
        let a = at(params.t2 + 1.0);
        let b = at(params.t2 + 5.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() / x.abs() < 1e-12, "{x} vs {y}");
        }
        // Below t2 the layer-2 direction still outpaces e^r.
        let before = at(params.t2 - 50.0);
        assert!((before[2] - a[2]).abs() / a[2] > 1e-3);
    }

    #[test]
    fn infranil_tail_offset_exceeds_the_plateau_estimate() {
        let params = InfranilParams::default();
        let q = params.rate_profile().unwrap();
        let naive = (params.degree as f64 - 1.0) * params.c;
        assert!(q.tail_offset() > naive, "{} vs {naive}", q.tail_offset());
    }

    #[test]
    fn infranil_validation() {
        assert!(infranil(&InfranilParams { degree: 1, ..Default::default() }).is_err());
        assert!(infranil(&InfranilParams { c: 5.0, ..Default::default() }).is_err());
        assert!(infranil(&InfranilParams { t2: 2.0, ..Default::default() }).is_err());
    }

    #[test]
    fn type_k_cylindrical_identities() {
        let params = TypeKParams::default();
        let m = type_k(&params).unwrap();
        // The cylindrical profile is exact up to and including t0 - 1 = 5.
        for i in 0..40 {
            let r = 0.5 + 4.5 * i as f64 / 39.0;
            let table = type_k_components(&params, r).unwrap();
            assert!((table.k_circle_base + 0.25).abs() < 1e-12, "r={r}");
            assert!((table.k_base_base + 1.0).abs() < 1e-12, "r={r}");
            assert!((table.k_radial_circle + 1.0).abs() < 1e-12, "r={r}");
            // The generic assembly agrees with the closed-form table.
            let t = assemble(&m, r).unwrap();
            assert!((t.component(2, 1, 1, 2) - table.k_circle_base).abs() < 1e-12);
            assert!((t.component(3, 2, 2, 3) - table.k_base_base).abs() < 1e-12);
            assert!((t.component(0, 1, 0, 1) + table.k_radial_circle).abs() < 1e-12);
            assert!((t.component(0, 1, 2, 3) - table.mixed).abs() < 1e-12);
        }
    }

    #[test]
    fn type_k_formula_matches_the_generic_contraction() {
        let params = TypeKParams::default();
        let m = type_k(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for r in [6.5, 50.0, 108.0, 115.0] {
            let t = assemble(&m, r).unwrap();
            let table = type_k_components(&params, r).unwrap();
            for _ in 0..200 {
                let (c, d) = random_cd(&mut rng);
                let e1 = [c[0], c[1], c[2], c[3]];
                let e2 = [0.0, d[0], d[1], 0.0];
                let got = sectional(&t, &e1, &e2).unwrap();
                let want = table.sectional_from_table(&c, &d);
                assert!((got - want).abs() < 1e-9, "r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn type_k_defect_is_nonpositive_past_t0() {
        let params = TypeKParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for r in [6.0, 8.0, 20.0, 58.0, 108.0, 118.0] {
            for _ in 0..500 {
                let (c, d) = random_cd(&mut rng);
                let defect = type_k_defect(&params, r, &c, &d).unwrap();
                assert!(defect <= 1e-12, "r={r}: defect {defect}");
            }
        }
        // Past the ramp the mixed term is dead and the sum is a pair of
        // plainly nonpositive squares.
        let table = type_k_components(&params, params.t2 + 3.0).unwrap();
        assert!(table.mixed.abs() < 1e-15);
        assert!(table.defect_terms(0.5, 0.5, 0.5, (0.75f64).sqrt()) < 0.0);
        // Degenerate D: single term d1^2 c0^2 K(dr, Y1).
        let d_only = type_k_defect(&params, 10.0, &[0.6, 0.0, 0.0, 0.8], &[1.0, 0.0]).unwrap();
        assert!(d_only <= 0.0);
        // Non-orthonormal input is refused.
        assert!(type_k_defect(&params, 10.0, &[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn type_k_s_stays_in_range_past_t0() {
        let params = TypeKParams::default();
        for i in 0..=1200 {
            let r = params.t0 + (params.t2 + 10.0 - params.t0) * i as f64 / 1200.0;
            let s = type_k_components(&params, r).unwrap().s;
            assert!(s > 0.0 && s <= 2.0 + 1e-12, "r={r}: s={s}");
        }
    }

    #[test]
    fn type_k_validation() {
        assert!(type_k(&TypeKParams { c23: 0.6, ..Default::default() }).is_err());
        assert!(type_k(&TypeKParams { eps: 5.5, ..Default::default() }).is_err());
        assert!(type_k(&TypeKParams { t1: 5.0, ..Default::default() }).is_err());
        assert!(type_k(&TypeKParams { t2: 7.0, ..Default::default() }).is_err());
    }

    #[test]
    fn product_of_unit_cusps_is_a_cusp() {
        let m = product(&cusp(1).unwrap(), &cusp(1).unwrap()).unwrap();
        for r in [-2.0, 0.0, 1.0] {
            let t = assemble(&m, r).unwrap();
            let (min, max) = dense_scan(&t, 3_000).unwrap();
            assert!((min.value + 1.0).abs() < 1e-8);
            assert!((max.value + 1.0).abs() < 1e-8);
        }
        match end_volume(&m, 0.0).unwrap() {
            VolumeVerdict::Finite { value, .. } => assert!((value - 0.5).abs() < 1e-6),
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn product_volume_factors_through_the_joint_density() {
        let m = product(&cusp(2).unwrap(), &cusp(3).unwrap()).unwrap();
        match end_volume(&m, 0.0).unwrap() {
            VolumeVerdict::Finite { value, .. } => {
                assert!((value - 0.2).abs() / 0.2 < 1e-6, "{value}");
            }
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn product_defect_closed_forms() {
        let left = type_k(&TypeKParams::default()).unwrap();
        let right = cusp(2).unwrap();
        let r = 7.0;
        let lj = left.warp_jets(r).unwrap();
        let rj = right.warp_jets(r).unwrap();
        // C in the left factor, D in the right: defect = -|TC_1|^2 |TD_2|^2.
        let c = ([0.3, -0.4, 0.5], [0.0, 0.0]);
        let d = ([0.0, 0.0, 0.0], [0.8, -0.6]);
        let p1: f64 = lj.iter().zip(&c.0).map(|(j, x)| j.d1 / j.value * x * x).sum();
        let q2: f64 = rj.iter().zip(&d.1).map(|(j, x)| j.d1 / j.value * x * x).sum();
        let defect =
            product_defect(&left, &right, r, (&c.0, &c.1), (&d.0, &d.1)).unwrap();
        assert!((defect + p1 * q2).abs() < 1e-14);
        // Both vectors in one factor: the other factor contributes nothing.
        let defect_same = product_defect(
            &left,
            &right,
            r,
            (&[0.3, -0.4, 0.5], &[0.0, 0.0]),
            (&[1.0, 0.2, -0.1], &[0.0, 0.0]),
        )
        .unwrap();
        assert!(defect_same.abs() < 1e-14);
    }

    #[test]
    fn product_defect_matches_the_tensor_difference() {
        let left = cusp(2).unwrap();
        let right = npc_base(&NpcBaseParams::default()).unwrap();
        let joint = product(&left, &right).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let quad = |t: &crate::curvature::CurvatureTensor, x: &[f64], y: &[f64]| -> f64 {
            let n = t.dim();
            let mut total = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for cc in 0..n {
                        for dd in 0..n {
                            total += t.component(a, b, cc, dd) * x[a] * y[b] * y[cc] * x[dd];
                        }
                    }
                }
            }
            total
        };
        for r in [-1.5, 0.0, 2.0] {
            let tp = assemble(&joint, r).unwrap();
            let tl = assemble(&left, r).unwrap();
            let tr = assemble(&right, r).unwrap();
            for _ in 0..50 {
                let c1: [f64; 2] = unit(&mut rng);
                let c2: [f64; 2] = unit(&mut rng);
                let d1: [f64; 2] = unit(&mut rng);
                let d2: [f64; 2] = unit(&mut rng);
                let defect =
                    product_defect(&left, &right, r, (&c1, &c2), (&d1, &d2)).unwrap();
                assert!(defect <= 1e-12, "r={r}: {defect}");
                // Same quantity straight from the assembled tensors.
                let xc = [0.0, c1[0], c1[1], c2[0], c2[1]];
                let xd = [0.0, d1[0], d1[1], d2[0], d2[1]];
                let whole = quad(&tp, &xc, &xd);
                let parts = quad(&tl, &[0.0, c1[0], c1[1]], &[0.0, d1[0], d1[1]])
                    + quad(&tr, &[0.0, c2[0], c2[1]], &[0.0, d2[0], d2[1]]);
                assert!((defect - (whole - parts)).abs() < 1e-12, "r={r}");
            }
        }
    }

    #[test]
    fn product_intersects_domains_and_tracks_the_settling_radius() {
        let tk = type_k(&TypeKParams::default()).unwrap();
        let m = product(&tk, &cusp(2).unwrap()).unwrap();
        assert_eq!(m.domain.0, 0.1);
        assert_eq!(m.asymptotic_from, Some(108.0));
        assert_eq!(m.dim(), 6);
        // Slices stay convex in every direction on the shared domain.
        assert!(second_form(&m, 5.0).unwrap().negative_definite());
    }

    #[test]
    fn catalog_covers_every_family() {
        let names: Vec<_> = catalog().iter().map(|f| f.name).collect();
        assert_eq!(names, ["cusp", "npc_base", "infranil", "type_k", "product"]);
    }
}
