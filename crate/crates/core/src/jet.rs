//! Warping profiles and their first two derivatives in closed form.
//!
//! Every profile the engine uses is built from a small set of analytic
//! pieces, so derivatives are never obtained by numerical differentiation.
//! A [`Jet2`] carries `(f, f', f'')` at a point; [`WarpSpec`] describes a
//! profile symbolically and [`jet_eval`] evaluates its jet at a radius.

use crate::error::Error;
use std::ops::{Add, Mul, Sub};

/// Value and first two derivatives of a scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Jet2 { value, d1, d2 }
    }

    pub const fn constant(c: f64) -> Self {
        Jet2 { value: c, d1: 0.0, d2: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    /// exp(f): (e^f)'' = (f'' + f'^2) e^f.
    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Jet2 { value: e, d1: self.d1 * e, d2: (self.d2 + self.d1 * self.d1) * e }
    }

    pub fn scale(self, a: f64) -> Self {
        Jet2 { value: a * self.value, d1: a * self.d1, d2: a * self.d2 }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 { value: self.value + rhs.value, d1: self.d1 + rhs.d1, d2: self.d2 + rhs.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 { value: self.value - rhs.value, d1: self.d1 - rhs.d1, d2: self.d2 - rhs.d2 }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    /// Product rule: (fg)'' = f''g + 2f'g' + fg''.
    fn mul(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value * rhs.value,
            d1: self.d1 * rhs.value + self.value * rhs.d1,
            d2: self.d2 * rhs.value + 2.0 * self.d1 * rhs.d1 + self.value * rhs.d2,
        }
    }
}

/// C² smoothstep s(t) = 6t^5 - 15t^4 + 10t^3 with s(0)=0, s(1)=1 and
/// vanishing first and second derivatives at both ends. Jet is in t.
fn smoothstep(t: f64) -> Jet2 {
    Jet2 {
        value: t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
        d1: 30.0 * t * t * (1.0 - t) * (1.0 - t),
        d2: 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    }
}

/// Antiderivative of the smoothstep with S(0) = 0: S(t) = t^6 - 3t^5 + 2.5t^4.
fn smoothstep_primitive(t: f64) -> f64 {
    t * t * t * t * (2.5 + t * (-3.0 + t))
}

/// Monotone C² ramp between two plateau values.
///
/// `eval(r)` equals `left` for r <= t1 and `right` for r >= t2 (both
/// plateaus are exact branch returns, not evaluations of the polynomial),
/// and interpolates with the quintic smoothstep in between. The slope is
/// bounded by `15 |right - left| / (8 (t2 - t1))`, attained at the midpoint.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    left: f64,
    right: f64,
    t1: f64,
    t2: f64,
}

impl Transition {
    pub fn new(left: f64, right: f64, t1: f64, t2: f64) -> Result<Self, Error> {
        if !(t2 > t1) {
            return Err(Error::InvalidTransition { t1, t2 });
        }
        Ok(Transition { left, right, t1, t2 })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn band(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn eval(&self, r: f64) -> Jet2 {
        if r <= self.t1 {
            return Jet2::constant(self.left);
        }
        if r >= self.t2 {
            return Jet2::constant(self.right);
        }
        let width = self.t2 - self.t1;
        let s = smoothstep((r - self.t1) / width);
        let gap = self.right - self.left;
        Jet2 {
            value: self.left + gap * s.value,
            d1: gap * s.d1 / width,
            d2: gap * s.d2 / (width * width),
        }
    }

    /// Largest |d/dr| over the band: 15 |right - left| / (8 (t2 - t1)).
    pub fn max_slope(&self) -> f64 {
        15.0 * (self.right - self.left).abs() / (8.0 * (self.t2 - self.t1))
    }

    /// The running integral q(r) = q0 + ∫_{r0}^r of this ramp.
    pub fn integrate(self, r0: f64, q0: f64) -> IntegratedTransition {
        IntegratedTransition { ramp: self, r0, q0 }
    }
}

/// Closed-form antiderivative of a [`Transition`], pinned to q(r0) = q0.
///
/// The jet of `eval` is (q, Q, Q') where Q is the underlying ramp, so the
/// first derivative reproduces the ramp exactly rather than numerically.
#[derive(Clone, Copy, Debug)]
pub struct IntegratedTransition {
    ramp: Transition,
    r0: f64,
    q0: f64,
}

impl IntegratedTransition {
    pub fn ramp(&self) -> &Transition {
        &self.ramp
    }

    /// ∫_{t1}^{x} Q, piecewise closed form.
    fn primitive(&self, x: f64) -> f64 {
        let Transition { left, right, t1, t2 } = self.ramp;
        let width = t2 - t1;
        if x <= t1 {
            left * (x - t1)
        } else if x < t2 {
            let t = (x - t1) / width;
            left * (x - t1) + (right - left) * width * smoothstep_primitive(t)
        } else {
            let full = left * width + (right - left) * width * smoothstep_primitive(1.0);
            full + right * (x - t2)
        }
    }

    pub fn eval(&self, r: f64) -> Jet2 {
        let q = self.q0 + self.primitive(r) - self.primitive(self.r0);
        let ramp = self.ramp.eval(r);
        Jet2 { value: q, d1: ramp.value, d2: ramp.d1 }
    }

    /// For r >= t2 the integral is affine: q(r) = right * r + offset.
    /// Returns that offset constant.
    pub fn tail_offset(&self) -> f64 {
        let t2 = self.ramp.t2;
        self.eval(t2).value - self.ramp.right * t2
    }
}

/// Symbolic description of one warping profile h(r) > 0.
#[derive(Clone, Debug)]
pub enum WarpSpec {
    /// a * exp(rate * r + offset)
    Exp { prefactor: f64, rate: f64, offset: f64 },
    /// sinh(r)
    Sinh,
    /// cosh(r / 2)
    CoshHalf,
    /// a * e^r + shift
    ShiftedExp { prefactor: f64, shift: f64 },
    /// a * exp(q(r)) with q an integrated ramp
    TransitionExp { prefactor: f64, exponent: IntegratedTransition },
    /// constant
    Const(f64),
    /// quintic crossfade from `left` to `right` over [from, to]
    Blend(Box<BlendSpec>),
}

#[derive(Clone, Debug)]
pub struct BlendSpec {
    pub left: WarpSpec,
    pub right: WarpSpec,
    pub from: f64,
    pub to: f64,
}

impl WarpSpec {
    fn eval_unchecked(&self, r: f64) -> Jet2 {
        match self {
            WarpSpec::Exp { prefactor, rate, offset } => {
                let e = prefactor * (rate * r + offset).exp();
                Jet2 { value: e, d1: rate * e, d2: rate * rate * e }
            }
            WarpSpec::Sinh => Jet2 { value: r.sinh(), d1: r.cosh(), d2: r.sinh() },
            WarpSpec::CoshHalf => {
                let half = 0.5 * r;
                Jet2 { value: half.cosh(), d1: 0.5 * half.sinh(), d2: 0.25 * half.cosh() }
            }
            WarpSpec::ShiftedExp { prefactor, shift } => {
                let e = prefactor * r.exp();
                Jet2 { value: e + shift, d1: e, d2: e }
            }
            WarpSpec::TransitionExp { prefactor, exponent } => {
                exponent.eval(r).exp().scale(*prefactor)
            }
            WarpSpec::Const(c) => Jet2::constant(*c),
            WarpSpec::Blend(blend) => {
                if r <= blend.from {
                    return blend.left.eval_unchecked(r);
                }
                if r >= blend.to {
                    return blend.right.eval_unchecked(r);
                }
                let width = blend.to - blend.from;
                let s = smoothstep((r - blend.from) / width);
                let w = Jet2 { value: s.value, d1: s.d1 / width, d2: s.d2 / (width * width) };
                let l = blend.left.eval_unchecked(r);
                let rv = blend.right.eval_unchecked(r);
                l + (rv - l) * w
            }
        }
    }

    /// Short human-readable name, used in range-error messages.
    pub fn describe(&self) -> String {
        match self {
            WarpSpec::Exp { prefactor, rate, offset } => {
                format!("{prefactor}*exp({rate}*r+{offset})")
            }
            WarpSpec::Sinh => "sinh(r)".into(),
            WarpSpec::CoshHalf => "cosh(r/2)".into(),
            WarpSpec::ShiftedExp { prefactor, shift } => format!("{prefactor}*e^r+{shift}"),
            WarpSpec::TransitionExp { prefactor, .. } => format!("{prefactor}*exp(q(r))"),
            WarpSpec::Const(c) => format!("const {c}"),
            WarpSpec::Blend(b) => format!("blend({}, {})", b.left.describe(), b.right.describe()),
        }
    }
}

/// Evaluate a warp jet, rejecting non-finite results (overflow and the like).
pub fn jet_eval(w: &WarpSpec, r: f64) -> Result<Jet2, Error> {
    let jet = w.eval_unchecked(r);
    if jet.is_finite() {
        Ok(jet)
    } else {
        Err(Error::Range { func: w.describe(), r })
    }
}

/// Warp that equals `e^r + tau` for r <= 0 and `e^r` for r >= r_tau,
/// crossfaded so the result stays positive, strictly increasing and strictly
/// convex. Fails when `r_tau` is too small for the crossfade to stay convex;
/// the error reports the smallest workable `r_tau` found by bisection.
pub fn npc_smoothed_warp(tau: f64, r_tau: f64) -> Result<WarpSpec, Error> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParams(format!("smoothed warp needs tau > 0, got {tau}")));
    }
    if !(r_tau > 0.0) || !r_tau.is_finite() {
        return Err(Error::InvalidParams(format!("smoothed warp needs r_tau > 0, got {r_tau}")));
    }
    let candidate = smoothed_warp_unchecked(tau, r_tau);
    if convex_increasing_on(&candidate, 0.0, r_tau) {
        return Ok(candidate);
    }
    // Bisect for the smallest r_tau that admits the crossfade.
    let mut lo = r_tau;
    let mut hi = r_tau.max(1.0);
    while !convex_increasing_on(&smoothed_warp_unchecked(tau, hi), 0.0, hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidParams(format!(
                "no convex increasing crossfade found for tau = {tau}"
            )));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if convex_increasing_on(&smoothed_warp_unchecked(tau, mid), 0.0, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::InfeasibleSmoothing { tau, r_tau, min_feasible: hi })
}

fn smoothed_warp_unchecked(tau: f64, r_tau: f64) -> WarpSpec {
    WarpSpec::Blend(Box::new(BlendSpec {
        left: WarpSpec::ShiftedExp { prefactor: 1.0, shift: tau },
        right: WarpSpec::Exp { prefactor: 1.0, rate: 1.0, offset: 0.0 },
        from: 0.0,
        to: r_tau,
    }))
}

/// Grid check that h > 0, h' > 0 and h'' > 0 on [lo, hi].
fn convex_increasing_on(w: &WarpSpec, lo: f64, hi: f64) -> bool {
    const SAMPLES: usize = 1000;
    for k in 0..=SAMPLES {
        let r = lo + (hi - lo) * (k as f64) / (SAMPLES as f64);
        let jet = w.eval_unchecked(r);
        if !(jet.value > 0.0 && jet.d1 > 0.0 && jet.d2 > 0.0) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Central differences of the value channel, for checking d1 and d2.
    fn central_diff(w: &WarpSpec, r: f64, h: f64) -> (f64, f64) {
        let fp = w.eval_unchecked(r + h).value;
        let fm = w.eval_unchecked(r - h).value;
        let f0 = w.eval_unchecked(r).value;
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    }

    fn assert_jet_matches_fd(w: &WarpSpec, r: f64) {
        let jet = w.eval_unchecked(r);
        let (fd1, fd2) = central_diff(w, r, 1e-4);
        let scale = jet.value.abs().max(1.0);
        assert!(
            (jet.d1 - fd1).abs() <= 1e-6 * scale.max(jet.d1.abs()),
            "{}: d1 = {} vs fd {} at r = {r}",
            w.describe(),
            jet.d1,
            fd1
        );
        assert!(
            (jet.d2 - fd2).abs() <= 1e-5 * scale.max(jet.d2.abs()),
            "{}: d2 = {} vs fd {} at r = {r}",
            w.describe(),
            jet.d2,
            fd2
        );
    }

    #[test]
    fn exp_jet_at_zero() {
        let w = WarpSpec::Exp { prefactor: 1.0, rate: 1.0, offset: 0.0 };
        assert_eq!(jet_eval(&w, 0.0).unwrap(), Jet2::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn cosh_half_jet_at_zero() {
        let w = WarpSpec::CoshHalf;
        assert_eq!(jet_eval(&w, 0.0).unwrap(), Jet2::new(1.0, 0.0, 0.25));
    }

    #[test]
    fn shifted_exp_keeps_shift_out_of_derivatives() {
        let w = WarpSpec::ShiftedExp { prefactor: 1.0, shift: 3.5 };
        let jet = jet_eval(&w, 0.0).unwrap();
        assert_eq!(jet, Jet2::new(4.5, 1.0, 1.0));
    }

    #[test]
    fn overflow_reports_the_radius() {
        let w = WarpSpec::Exp { prefactor: 1.0, rate: 1.0, offset: 0.0 };
        match jet_eval(&w, 1e4) {
            Err(Error::Range { r, .. }) => assert_eq!(r, 1e4),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn transition_plateaus_are_bit_exact() {
        let t = Transition::new(2.0, 1.0, 0.0, 10.0).unwrap();
        assert_eq!(t.eval(-3.0), Jet2::new(2.0, 0.0, 0.0));
        assert_eq!(t.eval(0.0), Jet2::new(2.0, 0.0, 0.0));
        assert_eq!(t.eval(10.0), Jet2::new(1.0, 0.0, 0.0));
        assert_eq!(t.eval(25.0), Jet2::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn transition_midpoint_slope() {
        // Steepest point of the quintic ramp: s'(1/2) = 15/8, so with a unit
        // drop over a width-10 band the slope is -15/80.
        let t = Transition::new(2.0, 1.0, 0.0, 10.0).unwrap();
        let jet = t.eval(5.0);
        assert_eq!(jet.value, 1.5);
        assert!((jet.d1 - (-0.1875)).abs() < 1e-15);
        assert!((t.max_slope() - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn transition_right_plateau_unit_value() {
        let t = Transition::new(0.5, 1.0, 6.0, 16.0).unwrap();
        assert_eq!(t.eval(16.0), Jet2::new(1.0, 0.0, 0.0));
        assert_eq!(t.eval(40.0), Jet2::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn transition_rejects_empty_band() {
        assert!(Transition::new(1.0, 2.0, 5.0, 5.0).is_err());
        assert!(Transition::new(1.0, 2.0, 5.0, 4.0).is_err());
    }

    #[test]
    fn integral_of_left_plateau_is_linear() {
        // Q = k on the left plateau, pinned q(c) = k*c, gives q(r) = k*r there.
        let k = 2.0;
        let c = 1.0;
        let q = Transition::new(k, 1.0, 3.0, 203.0).unwrap().integrate(c, k * c);
        for r in [1.0, 1.7, 2.4, 3.0] {
            let jet = q.eval(r);
            assert!((jet.value - k * r).abs() < 1e-12, "q({r}) = {}", jet.value);
            assert_eq!(jet.d1, k);
            assert_eq!(jet.d2, 0.0);
        }
    }

    #[test]
    fn integral_derivative_is_the_ramp() {
        let q = Transition::new(2.0, 1.0, 3.0, 203.0).unwrap().integrate(1.0, 2.0);
        for k in 0..=400 {
            let r = -5.0 + 215.0 * (k as f64) / 400.0;
            let jet = q.eval(r);
            let ramp = q.ramp().eval(r);
            assert!((jet.d1 - ramp.value).abs() <= 1e-12);
            assert!((jet.d2 - ramp.d1).abs() <= 1e-12);
        }
    }

    #[test]
    fn integral_tail_is_affine_with_larger_offset() {
        // Past the band the integral grows at the right plateau rate; the
        // constant it settles on exceeds (left-right gap is integrated, not
        // skipped) the naive (k-1)*c guess.
        let k = 2.0;
        let c = 1.0;
        let q = Transition::new(k, 1.0, 3.0, 203.0).unwrap().integrate(c, k * c);
        let offset = q.tail_offset();
        for r in [203.0, 210.0, 250.0] {
            let jet = q.eval(r);
            assert!((jet.value - (r + offset)).abs() < 1e-9, "q({r}) - r not constant");
            assert_eq!(jet.d1, 1.0);
        }
        assert!(offset > (k - 1.0) * c);
    }

    #[test]
    fn smoothed_warp_matches_branches() {
        let w = npc_smoothed_warp(1.0, 6.0).unwrap();
        let left = jet_eval(&w, -2.0).unwrap();
        assert!((left.value - ((-2.0f64).exp() + 1.0)).abs() < 1e-15);
        assert!((left.d1 - (-2.0f64).exp()).abs() < 1e-15);
        let right = jet_eval(&w, 7.0).unwrap();
        assert_eq!(right.value, (7.0f64).exp());
        assert_eq!(right.d1, right.value);
        assert_eq!(right.d2, right.value);
    }

    #[test]
    fn smoothed_warp_is_convex_across_the_band() {
        let w = npc_smoothed_warp(1.0, 6.0).unwrap();
        for k in 0..=1000 {
            let r = 6.0 * (k as f64) / 1000.0;
            let jet = jet_eval(&w, r).unwrap();
            assert!(jet.value > 0.0 && jet.d1 > 0.0 && jet.d2 > 0.0, "violation at r = {r}");
        }
    }

    #[test]
    fn smoothed_warp_rejects_narrow_band_with_feasible_hint() {
        match npc_smoothed_warp(1.0, 0.5) {
            Err(Error::InfeasibleSmoothing { min_feasible, .. }) => {
                assert!(min_feasible > 0.5 && min_feasible < 10.0);
                assert!(npc_smoothed_warp(1.0, min_feasible * 1.01).is_ok());
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn jets_match_finite_differences_everywhere() {
        let q = Transition::new(2.0, 1.0, -1.0, 9.0).unwrap().integrate(-1.0, -2.0);
        let warps = [
            WarpSpec::Exp { prefactor: 0.5, rate: 2.0, offset: 0.1 },
            WarpSpec::Sinh,
            WarpSpec::CoshHalf,
            WarpSpec::ShiftedExp { prefactor: 1.0, shift: 0.7 },
            WarpSpec::TransitionExp { prefactor: 0.5, exponent: q },
            WarpSpec::Const(2.25),
            npc_smoothed_warp(1.0, 6.0).unwrap(),
        ];
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for w in &warps {
            for _ in 0..1000 {
                let r: f64 = rng.gen_range(-20.0..20.0);
                assert_jet_matches_fd(w, r);
            }
        }
    }

    proptest! {
        #[test]
        fn prop_exp_jet_matches_fd(a in 0.1f64..3.0, rate in -2.0f64..2.0, r in -10.0f64..10.0) {
            let w = WarpSpec::Exp { prefactor: a, rate, offset: 0.0 };
            assert_jet_matches_fd(&w, r);
        }

        #[test]
        fn prop_transition_stays_in_range(r in -50.0f64..250.0) {
            let t = Transition::new(2.0, 1.0, 3.0, 203.0).unwrap();
            let q = t.eval(r).value;
            prop_assert!((1.0..=2.0).contains(&q));
        }

        #[test]
        fn prop_blend_stays_between_branches(r in 0.0f64..6.0) {
            let w = npc_smoothed_warp(1.0, 6.0).unwrap();
            let v = jet_eval(&w, r).unwrap().value;
            let lo = r.exp();
            let hi = r.exp() + 1.0;
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
