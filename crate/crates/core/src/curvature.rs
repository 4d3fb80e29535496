//! Ambient curvature of dr^2 + g_r from warp jets and fiber curvature.
//!
//! Index 0 of the ambient frame is the radial direction; indices 1..=n are
//! the orthonormal fiber directions Y_i = X_i / h_i. With u_i = h_i'/h_i the
//! nonzero components are built from four rules:
//!
//! * R(Y_i, Y_j, Y_j, Y_i) = fiber value - u_i u_j,
//! * R(Y_i, Y_j, Y_l, Y_m) = fiber value when {i,j} != {l,m},
//! * R(Y_i, d_r, d_r, Y_i) = -h_i''/h_i, zero off the diagonal,
//! * 2 R(d_r, Y_i, Y_j, Y_k) = gamma_ijk (ln h_k/h_j)'
//!   + gamma_kij (ln h_j/h_k)' + gamma_kji (ln h_i^2/(h_j h_k))'.
//!
//! Everything else follows from the pair antisymmetries and the pair swap,
//! which the assembly enforces by construction; the first Bianchi identity
//! is left as a genuine numerical check on the result.

use crate::error::{Error, Result};
use crate::framealg::{scaled_bracket_coeffs, FiberCurvature, FrameSpec, Tensor4};
use crate::jet::{jet_eval, Jet2, WarpSpec};

/// One-parameter family of metrics dr^2 + g_r with a fixed diagonalizing
/// frame on the fiber.
#[derive(Clone, Debug)]
pub struct MetricFamily {
    pub name: String,
    pub frame: FrameSpec,
    pub warps: Vec<WarpSpec>,
    pub fiber: FiberCurvature,
    /// Radii where the family is defined (warps positive, fiber smooth).
    pub domain: (f64, f64),
    /// Radius past which every warp is a constant multiple of e^r, when the
    /// family settles into that form.
    pub asymptotic_from: Option<f64>,
}

impl MetricFamily {
    /// Ambient dimension: fiber directions plus the radial one.
    pub fn dim(&self) -> usize {
        self.frame.dim() + 1
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.domain.0 && r <= self.domain.1
    }

    /// Warp jets at r, with the positivity invariant enforced.
    pub fn warp_jets(&self, r: f64) -> Result<Vec<Jet2>> {
        let mut jets = Vec::with_capacity(self.warps.len());
        for w in &self.warps {
            let jet = jet_eval(w, r)?;
            if !(jet.value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "warp {} is not positive at r = {r}",
                    w.describe()
                )));
            }
            jets.push(jet);
        }
        Ok(jets)
    }
}

/// Assembled curvature data of the ambient metric at one radius.
#[derive(Clone, Debug)]
pub struct CurvatureTensor {
    pub r: f64,
    dim: usize,
    ambient: Tensor4,
    fiber: Tensor4,
}

impl CurvatureTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ambient component R_abcd, radial index 0.
    pub fn component(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.ambient.get(a, b, c, d)
    }

    /// Fiber component in fiber indices 0..n-1.
    pub fn fiber_component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.fiber.get(i, j, k, l)
    }

    /// Largest |R_ijji| over fiber planes; the size of the fiber's own
    /// contribution to sectional curvature at this radius.
    pub fn fiber_term_max(&self) -> f64 {
        let n = self.dim - 1;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(self.fiber.get(i, j, j, i).abs());
            }
        }
        worst
    }

    pub fn max_symmetry_violation(&self) -> f64 {
        self.ambient.max_symmetry_violation()
    }

    /// Fault-injection hook for the self-check suite's negative control.
    pub fn corrupt_component_for_validation(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        self.ambient.set_raw(a, b, c, d, v);
    }
}

/// Builds the ambient curvature tensor at radius r.
pub fn assemble(family: &MetricFamily, r: f64) -> Result<CurvatureTensor> {
    if !family.contains(r) {
        return Err(Error::OutsideDomain { r, lo: family.domain.0, hi: family.domain.1 });
    }
    let jets = family.warp_jets(r)?;
    let n = family.frame.dim();
    let dim = n + 1;
    let u: Vec<f64> = jets.iter().map(|j| j.d1 / j.value).collect();
    let u2: Vec<f64> = jets.iter().map(|j| j.d2 / j.value).collect();
    let gamma = scaled_bracket_coeffs(&family.frame, &jets);
    let g = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];

    let fiber = family.fiber.components(&family.frame, &jets)?;
    let defect = fiber.max_symmetry_violation();
    if defect > 1e-9 {
        return Err(Error::ProviderAsymmetry { defect, r });
    }

    // Half of the mixed-component rule: R(d_r, Y_i, Y_j, Y_k) in fiber
    // indices, using (ln h_a/h_b)' = u_a - u_b.
    let eq4_half = |i: usize, j: usize, k: usize| {
        0.5 * (g(i, j, k) * (u[k] - u[j])
            + g(k, i, j) * (u[j] - u[k])
            + g(k, j, i) * (2.0 * u[i] - u[j] - u[k]))
    };

    let mut ambient = Tensor4::zeros(dim);
    for a in 0..dim {
        for b in (a + 1)..dim {
            for c in a..dim {
                let d_start = if c == a { b } else { c + 1 };
                for d in d_start..dim {
                    let v = if a == 0 {
                        if c == 0 {
                            if b == d {
                                u2[b - 1]
                            } else {
                                0.0
                            }
                        } else {
                            eq4_half(b - 1, c - 1, d - 1)
                        }
                    } else {
                        let (i, j, k, l) = (a - 1, b - 1, c - 1, d - 1);
                        if (a, b) == (c, d) {
                            fiber.get(i, j, i, j) + u[i] * u[j]
                        } else {
                            fiber.get(i, j, k, l)
                        }
                    };
                    if v != 0.0 {
                        ambient.set_sym(a, b, c, d, v);
                    }
                }
            }
        }
    }

    Ok(CurvatureTensor { r, dim, ambient, fiber })
}

/// Sectional curvature of the plane spanned by u and v.
///
/// The inputs need not be orthonormal; they are orthonormalized first and
/// rejected when the Gram determinant drops to 1e-12 or below.
pub fn sectional(t: &CurvatureTensor, u: &[f64], v: &[f64]) -> Result<f64> {
    assert_eq!(u.len(), t.dim);
    assert_eq!(v.len(), t.dim);
    let uu = dot(u, u);
    let vv = dot(v, v);
    let uv = dot(u, v);
    if uu * vv - uv * uv <= 1e-12 {
        return Err(Error::DegeneratePlane);
    }
    let inv = 1.0 / uu.sqrt();
    let e1: Vec<f64> = u.iter().map(|x| x * inv).collect();
    let mut e2: Vec<f64> = v.to_vec();
    let p = dot(&e2, &e1);
    for (x, y) in e2.iter_mut().zip(&e1) {
        *x -= p * y;
    }
    let norm = dot(&e2, &e2).sqrt();
    if norm <= 1e-12 {
        return Err(Error::DegeneratePlane);
    }
    for x in e2.iter_mut() {
        *x /= norm;
    }
    Ok(sectional_orthonormal(t, &e1, &e2))
}

/// Sectional curvature for an orthonormal pair, contracted over the wedge:
/// K = -sum_{a<b} sum_{c<d} R_abcd w_ab w_cd with w = e1 ^ e2.
pub(crate) fn sectional_orthonormal(t: &CurvatureTensor, e1: &[f64], e2: &[f64]) -> f64 {
    let n = t.dim;
    let mut wedge = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            wedge.push((a, b, e1[a] * e2[b] - e1[b] * e2[a]));
        }
    }
    let mut k = 0.0;
    for &(a, b, wab) in &wedge {
        if wab == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for &(c, d, wcd) in &wedge {
            if wcd != 0.0 {
                inner += t.ambient.get(a, b, c, d) * wcd;
            }
        }
        k -= wab * inner;
    }
    k
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Second fundamental form of the slice {r} x B with respect to d_r:
/// diagonal in the Y-frame with entries -h_i'/h_i.
#[derive(Clone, Debug)]
pub struct SecondForm {
    pub r: f64,
    pub diagonal: Vec<f64>,
}

impl SecondForm {
    /// True exactly when every warp is strictly increasing at r.
    pub fn negative_definite(&self) -> bool {
        self.diagonal.iter().all(|&d| d < 0.0)
    }

    pub fn negative_semidefinite(&self) -> bool {
        self.diagonal.iter().all(|&d| d <= 0.0)
    }
}

pub fn second_form(family: &MetricFamily, r: f64) -> Result<SecondForm> {
    let jets = family.warp_jets(r)?;
    Ok(SecondForm { r, diagonal: jets.iter().map(|j| -j.d1 / j.value).collect() })
}

/// Residual of the tangential curvature rule for the fiber plane (i, j),
/// checked through the slice's second form: the ambient value must equal
/// fiber value + <II(Y_i,Y_j), II(Y_i,Y_j)> - <II(Y_i,Y_i), II(Y_j,Y_j)>.
/// Returns the absolute difference of the two routes.
pub fn gauss_fiber_slice(t: &CurvatureTensor, s: &SecondForm, i: usize, j: usize) -> f64 {
    let ambient = t.component(i + 1, j + 1, j + 1, i + 1);
    let through_ii = t.fiber_component(i, j, j, i) - s.diagonal[i] * s.diagonal[j];
    (ambient - through_ii).abs()
}
