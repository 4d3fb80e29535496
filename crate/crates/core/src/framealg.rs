//! Frame data on the fiber and curvature of the scaled fiber metric.
//!
//! The fiber carries a fixed frame X_1..X_n with constant expansion
//! coefficients [X_i, X_j] = sum_k C_ijk X_k, and the metric at radius r is
//! diagonal in that frame with entries h_i(r)^2. In the orthonormal frame
//! Y_i = X_i / h_i the bracket coefficients rescale to
//! gamma_ijk = C_ijk h_k / (h_i h_j), and for a fixed r the Levi-Civita
//! connection follows from the Koszul formula with constant coefficients:
//! Gamma_ijk = (gamma_ijk - gamma_jki + gamma_kij) / 2.

use crate::error::{Error, Result};
use crate::jet::Jet2;

/// Constant frame bracket coefficients, antisymmetric in the first two slots.
#[derive(Clone, Debug)]
pub struct FrameSpec {
    dim: usize,
    c: Vec<f64>,
}

impl FrameSpec {
    /// Frame with all brackets zero (tori, products of circles).
    pub fn zero(dim: usize) -> Self {
        FrameSpec { dim, c: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    /// Coefficient of X_k in [X_i, X_j].
    pub fn bracket(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[self.idx(i, j, k)]
    }

    /// Sets [X_i, X_j] = v X_k and its mirror [X_j, X_i] = -v X_k.
    pub fn set_bracket(&mut self, i: usize, j: usize, k: usize, v: f64) {
        assert_ne!(i, j, "bracket of a frame field with itself is zero");
        let a = self.idx(i, j, k);
        let b = self.idx(j, i, k);
        self.c[a] = v;
        self.c[b] = -v;
    }

    /// Largest |C_ijk + C_jik|; zero for well-formed frames.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.bracket(i, j, k) + self.bracket(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// Block frame of a metric product: brackets across the factors vanish.
    pub fn block(left: &FrameSpec, right: &FrameSpec) -> FrameSpec {
        let n = left.dim + right.dim;
        let mut out = FrameSpec::zero(n);
        for i in 0..left.dim {
            for j in 0..left.dim {
                for k in 0..left.dim {
                    let at = out.idx(i, j, k);
                    out.c[at] = left.bracket(i, j, k);
                }
            }
        }
        let s = left.dim;
        for i in 0..right.dim {
            for j in 0..right.dim {
                for k in 0..right.dim {
                    let at = out.idx(s + i, s + j, s + k);
                    out.c[at] = right.bracket(i, j, k);
                }
            }
        }
        out
    }

    fn sub_block(&self, start: usize, len: usize) -> FrameSpec {
        let mut out = FrameSpec::zero(len);
        for i in 0..len {
            for j in 0..len {
                for k in 0..len {
                    let at = out.idx(i, j, k);
                    out.c[at] = self.bracket(start + i, start + j, start + k);
                }
            }
        }
        out
    }
}

/// Bracket coefficients of the orthonormal frame Y_i = X_i / h_i:
/// gamma_ijk = C_ijk h_k / (h_i h_j). Returned as a dense dim^3 array.
pub fn scaled_bracket_coeffs(frame: &FrameSpec, warps: &[Jet2]) -> Vec<f64> {
    let n = frame.dim;
    assert_eq!(warps.len(), n);
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = frame.bracket(i, j, k);
                if c != 0.0 {
                    gamma[(i * n + j) * n + k] =
                        c * warps[k].value / (warps[i].value * warps[j].value);
                }
            }
        }
    }
    gamma
}

/// Dense rank-4 tensor of curvature components R_abcd = <R(e_a, e_b)e_c, e_d>.
#[derive(Clone, Debug)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 { dim, data: vec![0.0; dim * dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    /// Writes one component without touching its symmetry images. Exists for
    /// fault injection in the self-check suite; regular assembly never calls
    /// this.
    pub fn set_raw(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    /// Writes a component together with all images under the pair
    /// antisymmetries and the pair swap, keeping the stored tensor exactly
    /// symmetric by construction.
    pub fn set_sym(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let writes = [
            (a, b, c, d, v),
            (b, a, c, d, -v),
            (a, b, d, c, -v),
            (b, a, d, c, v),
            (c, d, a, b, v),
            (d, c, a, b, -v),
            (c, d, b, a, -v),
            (d, c, b, a, v),
        ];
        for (p, q, s, t, val) in writes {
            let i = self.idx(p, q, s, t);
            self.data[i] = val;
        }
    }

    /// Largest violation of the curvature tensor identities: antisymmetry in
    /// each index pair, symmetry under swapping the pairs, and the first
    /// Bianchi identity.
    pub fn max_symmetry_violation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = self.get(a, b, c, d);
                        worst = worst.max((v + self.get(b, a, c, d)).abs());
                        worst = worst.max((v + self.get(a, b, d, c)).abs());
                        worst = worst.max((v - self.get(c, d, a, b)).abs());
                        let bianchi = v + self.get(b, c, a, d) + self.get(c, a, b, d);
                        worst = worst.max(bianchi.abs());
                    }
                }
            }
        }
        worst
    }
}

/// How to produce the curvature tensor of the fiber metric at a radius.
#[derive(Clone, Debug)]
pub enum FiberCurvature {
    /// Flat fiber (tori): all components zero.
    Flat,
    /// Locally homogeneous fiber: Koszul formula on the scaled brackets.
    Koszul,
    /// Fiber of constant curvature `curvature`, all warps equal h:
    /// sectional curvature scales as curvature / h^2.
    ConstantCurvature { curvature: f64 },
    /// Three-dimensional circle-bundle fiber with warp layout (v, h, h):
    /// closed-form components of the slice metric v^2 dphi^2 + h^2 k, with
    /// s = v / h^2 and bundle coefficient c23.
    BundleExplicit { c23: f64 },
    /// Metric product of two fibers: block components, mixed blocks zero.
    Product { split: usize, left: Box<FiberCurvature>, right: Box<FiberCurvature> },
}

/// Product-fiber provider for a metric product whose first factor has
/// `left_dim` fiber directions.
pub fn product_fiber(left: FiberCurvature, left_dim: usize, right: FiberCurvature) -> FiberCurvature {
    FiberCurvature::Product { split: left_dim, left: Box::new(left), right: Box::new(right) }
}

impl FiberCurvature {
    pub fn components(&self, frame: &FrameSpec, warps: &[Jet2]) -> Result<Tensor4> {
        let n = frame.dim();
        assert_eq!(warps.len(), n);
        match self {
            FiberCurvature::Flat => Ok(Tensor4::zeros(n)),
            FiberCurvature::Koszul => Ok(koszul_fiber_curvature(frame, warps)),
            FiberCurvature::ConstantCurvature { curvature } => {
                let h = warps[0].value;
                for w in warps {
                    if (w.value - h).abs() > 1e-12 * h.abs() {
                        return Err(Error::InvalidParams(
                            "constant-curvature fiber needs equal warps".into(),
                        ));
                    }
                }
                let k = curvature / (h * h);
                let mut t = Tensor4::zeros(n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        t.set_sym(i, j, j, i, k);
                    }
                }
                Ok(t)
            }
            FiberCurvature::BundleExplicit { c23 } => {
                if n != 3 {
                    return Err(Error::InvalidParams(format!(
                        "bundle fiber is three-dimensional, got {n}"
                    )));
                }
                let v = warps[0].value;
                let h = warps[1].value;
                if (warps[2].value - h).abs() > 1e-12 * h.abs() {
                    return Err(Error::InvalidParams(
                        "bundle fiber needs warp layout (v, h, h)".into(),
                    ));
                }
                let s = v / (h * h);
                let c2 = c23 * c23;
                let mut t = Tensor4::zeros(3);
                // Circle direction against either base direction.
                t.set_sym(1, 0, 0, 1, s * s / 16.0);
                t.set_sym(2, 0, 0, 2, s * s / 16.0);
                // Base pair.
                t.set_sym(2, 1, 1, 2, -0.25 / (h * h) - 3.0 * c2 / (h * h) - 0.75 * c2 * s * s);
                Ok(t)
            }
            FiberCurvature::Product { split, left, right } => {
                let lf = frame.sub_block(0, *split);
                let rf = frame.sub_block(*split, n - *split);
                let lt = left.components(&lf, &warps[..*split])?;
                let rt = right.components(&rf, &warps[*split..])?;
                let mut t = Tensor4::zeros(n);
                for a in 0..*split {
                    for b in 0..*split {
                        for c in 0..*split {
                            for d in 0..*split {
                                t.set_raw(a, b, c, d, lt.get(a, b, c, d));
                            }
                        }
                    }
                }
                let s = *split;
                let m = n - s;
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            for d in 0..m {
                                t.set_raw(s + a, s + b, s + c, s + d, rt.get(a, b, c, d));
                            }
                        }
                    }
                }
                Ok(t)
            }
        }
    }
}

/// Curvature of a locally homogeneous fiber from the Koszul connection.
///
/// With constant orthonormal-frame brackets gamma and connection
/// Gamma_ijk = (gamma_ijk - gamma_jki + gamma_kij) / 2 the components are
/// R_ijkl = sum_m (Gamma_jkm Gamma_iml - Gamma_ikm Gamma_jml - gamma_ijm Gamma_mkl).
pub fn koszul_fiber_curvature(frame: &FrameSpec, warps: &[Jet2]) -> Tensor4 {
    let n = frame.dim();
    let gamma = scaled_bracket_coeffs(frame, warps);
    let g = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    let mut conn = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                conn[(i * n + j) * n + k] = 0.5 * (g(i, j, k) - g(j, k, i) + g(k, i, j));
            }
        }
    }
    let c = |i: usize, j: usize, k: usize| conn[(i * n + j) * n + k];
    let mut t = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut sum = 0.0;
                    for m in 0..n {
                        sum += c(j, k, m) * c(i, m, l) - c(i, k, m) * c(j, m, l)
                            - g(i, j, m) * c(m, k, l);
                    }
                    t.set_raw(i, j, k, l, sum);
                }
            }
        }
    }
    t
}
