//! Built-in invariant suite behind the `selfcheck` subcommand.
//!
//! Each suite bundles related checks and reports how many ran and how many
//! failed, with the first failure spelled out. The suites cover jet
//! arithmetic against finite differences, tensor symmetries (plus a
//! negative control with a deliberately corrupted component), the model
//! oracles with known closed forms, the two defect functionals, volume
//! verdicts, and determinism of the seeded extremizer. Runs are
//! deterministic for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::{assemble, sectional, MetricFamily};
use crate::grassmann::{dense_scan, derive_seed, multistart_extremize, ExtremeMode};
use crate::jet::{jet_eval, Transition, WarpSpec};
use crate::models::{
    cusp, infranil, npc_base, product, product_defect, type_k, type_k_components, type_k_defect,
    InfranilParams, NpcBaseParams, TypeKParams,
};
use crate::volume::{end_volume, VolumeVerdict};

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u32,
    pub failures: u32,
    /// First failing check, for the summary line.
    pub first_failure: Option<String>,
}

struct Suite {
    result: SuiteResult,
}

impl Suite {
    fn new(name: &'static str) -> Suite {
        Suite { result: SuiteResult { name, checks: 0, failures: 0, first_failure: None } }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.result.checks += 1;
        if !ok {
            self.result.failures += 1;
            if self.result.first_failure.is_none() {
                self.result.first_failure = Some(detail());
            }
        }
    }

    fn finish(self) -> SuiteResult {
        self.result
    }
}

fn shipped_families() -> Vec<MetricFamily> {
    let tk = type_k(&TypeKParams::default()).unwrap();
    let nb = npc_base(&NpcBaseParams::default()).unwrap();
    vec![
        cusp(2).unwrap(),
        nb.clone(),
        infranil(&InfranilParams::default()).unwrap(),
        tk.clone(),
        product(&tk, &nb).unwrap(),
    ]
}

fn sample_radius(family: &MetricFamily, rng: &mut ChaCha8Rng) -> f64 {
    let lo = family.domain.0.max(-12.0);
    let hi = family.domain.1.min(12.0);
    lo + (hi - lo) * rng.gen::<f64>()
}

fn jet_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("jet finite differences");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let q = Transition::new(2.0, 1.0, 1.0, 6.0).unwrap().integrate(0.0, 0.0);
    let variants: Vec<WarpSpec> = vec![
        WarpSpec::Exp { prefactor: 0.7, rate: 1.3, offset: 0.2 },
        WarpSpec::Sinh,
        WarpSpec::CoshHalf,
        WarpSpec::ShiftedExp { prefactor: 1.0, shift: 0.5 },
        WarpSpec::TransitionExp { prefactor: 0.5, exponent: q },
        crate::jet::npc_smoothed_warp(1.0, 5.0).unwrap(),
    ];
    let h = 1e-5;
    for w in &variants {
        for _ in 0..120 {
            let r = match w {
                WarpSpec::Sinh => 0.3 + 7.0 * rng.gen::<f64>(),
                _ => -6.0 + 14.0 * rng.gen::<f64>(),
            };
            let jet = jet_eval(w, r).unwrap();
            let fp = jet_eval(w, r + h).unwrap().value;
            let fm = jet_eval(w, r - h).unwrap().value;
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (fp - 2.0 * jet.value + fm) / (h * h);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
            s.check(rel(jet.d1, d1) < 1e-6, || {
                format!("{w:?} at r = {r}: d1 {} vs FD {d1}", jet.d1)
            });
            s.check(rel(jet.d2, d2) < 1e-4, || {
                format!("{w:?} at r = {r}: d2 {} vs FD {d2}", jet.d2)
            });
        }
    }
    s.finish()
}

fn symmetry_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("tensor symmetries");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    for family in &shipped_families() {
        for _ in 0..40 {
            let r = sample_radius(family, &mut rng);
            let v = assemble(family, r).unwrap().max_symmetry_violation();
            s.check(v <= 1e-9, || format!("{} at r = {r}: violation {v}", family.name));
        }
    }
    s.finish()
}

fn corruption_control_suite() -> SuiteResult {
    let mut s = Suite::new("corruption is detected (negative control)");
    let family = cusp(2).unwrap();
    let mut t = assemble(&family, 0.5).unwrap();
    s.check(t.max_symmetry_violation() <= 1e-9, || "clean tensor flagged".into());
    t.corrupt_component_for_validation(0, 1, 1, 0, 3.0);
    let v = t.max_symmetry_violation();
    s.check(v > 1.0, || format!("injected asymmetry missed: violation {v}"));
    s.finish()
}

fn oracle_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("model oracles");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));

    let m = cusp(3).unwrap();
    for r in [-4.0, 0.0, 3.0] {
        let t = assemble(&m, r).unwrap();
        let (lo, hi) = dense_scan(&t, 400).unwrap();
        s.check((lo.value + 1.0).abs() < 1e-8, || format!("cusp min {}", lo.value));
        s.check((hi.value + 1.0).abs() < 1e-8, || format!("cusp max {}", hi.value));
    }

    let params = NpcBaseParams::default();
    let m = npc_base(&params).unwrap();
    for _ in 0..60 {
        let r = -10.0 + 18.0 * rng.gen::<f64>();
        let t = assemble(&m, r).unwrap();
        let h = m.warp_jets(r).unwrap()[0];
        let th = std::f64::consts::TAU * rng.gen::<f64>();
        let (cc, dd) = (th.cos(), th.sin());
        let got = sectional(&t, &[0.0, 1.0, 0.0], &[dd, 0.0, cc]).unwrap();
        let want = cc * cc * (params.base_curvature / (h.value * h.value) - (h.d1 / h.value).powi(2))
            - dd * dd * h.d2 / h.value;
        s.check((got - want).abs() < 1e-10, || format!("npc_base at r = {r}: {got} vs {want}"));
    }

    let m = infranil(&InfranilParams::default()).unwrap();
    for r in [1.0, 2.0, 3.0] {
        let t = assemble(&m, r).unwrap();
        s.check((t.component(1, 2, 2, 1) + 4.0).abs() < 1e-8, || {
            format!("infranil layer plane at r = {r}: {}", t.component(1, 2, 2, 1))
        });
        s.check((t.component(1, 3, 3, 1) + 1.0).abs() < 1e-8, || {
            format!("infranil mixed plane at r = {r}: {}", t.component(1, 3, 3, 1))
        });
    }

    let tk = TypeKParams::default();
    for _ in 0..40 {
        let r = 0.5 + 3.0 * rng.gen::<f64>();
        let table = type_k_components(&tk, r).unwrap();
        s.check((table.k_circle_base + 0.25).abs() < 1e-12, || {
            format!("cylinder K(Y2,Y1) at r = {r}: {}", table.k_circle_base)
        });
        s.check((table.k_base_base + 1.0).abs() < 1e-12, || {
            format!("cylinder K(Y3,Y2) at r = {r}: {}", table.k_base_base)
        });
    }
    s.finish()
}

fn random_split_pair(rng: &mut ChaCha8Rng) -> ([f64; 4], [f64; 2]) {
    loop {
        let a = std::f64::consts::TAU * rng.gen::<f64>();
        let d = [a.cos(), a.sin()];
        let mut c = [0.0f64; 4];
        for x in c.iter_mut() {
            *x = rng.gen::<f64>() * 2.0 - 1.0;
        }
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

fn defect_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("defect functionals");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));

    let tk = TypeKParams::default();
    let m = type_k(&tk).unwrap();
    for _ in 0..150 {
        let r = tk.t0 + (tk.t2 + 10.0 - tk.t0) * rng.gen::<f64>();
        let (c, d) = random_split_pair(&mut rng);
        let defect = type_k_defect(&tk, r, &c, &d).unwrap();
        s.check(defect <= 1e-12, || format!("type_k defect at r = {r}: {defect}"));
        let t = assemble(&m, r).unwrap();
        let table = type_k_components(&tk, r).unwrap();
        let got = sectional(&t, &c, &[0.0, d[0], d[1], 0.0]).unwrap();
        let want = table.sectional_from_table(&c, &d);
        s.check((got - want).abs() < 1e-9, || {
            format!("formula vs contraction at r = {r}: {got} vs {want}")
        });
    }

    let left = cusp(2).unwrap();
    let right = npc_base(&NpcBaseParams::default()).unwrap();
    for _ in 0..150 {
        let r = -6.0 + 12.0 * rng.gen::<f64>();
        let mut pick = || {
            let mut v = [0.0f64; 2];
            for x in v.iter_mut() {
                *x = rng.gen::<f64>() * 2.0 - 1.0;
            }
            v
        };
        let (c1, c2, d1, d2) = (pick(), pick(), pick(), pick());
        let defect = product_defect(&left, &right, r, (&c1, &c2), (&d1, &d2)).unwrap();
        s.check(defect <= 1e-12, || format!("product defect at r = {r}: {defect}"));
    }
    s.finish()
}

fn volume_suite() -> SuiteResult {
    let mut s = Suite::new("volume verdicts");
    for m in 1..=3usize {
        let verdict = end_volume(&cusp(m).unwrap(), 0.0).unwrap();
        match verdict {
            VolumeVerdict::Finite { value, .. } => {
                let want = 1.0 / m as f64;
                s.check((value - want).abs() / want <= 1e-6, || {
                    format!("cusp({m}) volume {value} vs {want}")
                });
            }
            other => s.check(false, || format!("cusp({m}) verdict {other:?}")),
        }
    }
    let nb = npc_base(&NpcBaseParams::default()).unwrap();
    s.check(
        matches!(end_volume(&nb, 0.0).unwrap(), VolumeVerdict::Divergent { .. }),
        || "npc_base should diverge".into(),
    );
    let joint = product(&cusp(1).unwrap(), &nb).unwrap();
    s.check(end_volume(&joint, 0.0).unwrap().is_finite(), || {
        "cusp x npc_base should be finite".into()
    });
    s.finish()
}

fn extremizer_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("extremizer determinism and agreement");
    let m = type_k(&TypeKParams::default()).unwrap();
    let t = assemble(&m, 1.5).unwrap();
    let (lo_a, hi_a) = dense_scan(&t, 2000).unwrap();
    let (lo_b, hi_b) = dense_scan(&t, 2000).unwrap();
    s.check(
        lo_a.value.to_bits() == lo_b.value.to_bits()
            && hi_a.value.to_bits() == hi_b.value.to_bits()
            && lo_a.plane == lo_b.plane,
        || "dense scan not reproducible".into(),
    );
    let refined = multistart_extremize(&t, ExtremeMode::Min, 6, seed).unwrap();
    let again = multistart_extremize(&t, ExtremeMode::Min, 6, seed).unwrap();
    s.check(refined.value.to_bits() == again.value.to_bits(), || {
        "multistart not reproducible".into()
    });
    s.check(refined.value >= lo_a.value - 1e-9, || {
        format!("multistart {} escaped the dense bracket {}", refined.value, lo_a.value)
    });
    s.check(refined.value <= lo_a.value + 5e-3, || {
        format!("multistart {} far above dense min {}", refined.value, lo_a.value)
    });
    // The cylindrical profile pins the extrema near [-1, -1/4].
    s.check((lo_a.value + 1.0).abs() < 5e-3, || format!("cylinder min {}", lo_a.value));
    s.check((hi_a.value + 0.25).abs() < 5e-3, || format!("cylinder max {}", hi_a.value));
    s.finish()
}

fn settling_suite() -> SuiteResult {
    let mut s = Suite::new("exponential settling");
    for family in shipped_families() {
        let Some(from) = family.asymptotic_from else { continue };
        let a = family.warp_jets(from + 1.0).unwrap();
        let b = family.warp_jets(from + 5.0).unwrap();
        for (ja, jb) in a.iter().zip(&b) {
            let xa = ja.value * (-(from + 1.0)).exp();
            let xb = jb.value * (-(from + 5.0)).exp();
            s.check((xa - xb).abs() / xb.abs() <= 1e-12, || {
                format!("{}: {xa} vs {xb}", family.name)
            });
        }
    }
    s.finish()
}

/// Run every suite. Deterministic for a fixed seed.
pub fn run(seed: u64) -> Vec<SuiteResult> {
    vec![
        jet_suite(seed),
        symmetry_suite(seed),
        corruption_control_suite(),
        oracle_suite(seed),
        defect_suite(seed),
        volume_suite(),
        extremizer_suite(seed),
        settling_suite(),
    ]
}
