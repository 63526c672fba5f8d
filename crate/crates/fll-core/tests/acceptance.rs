//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use fll_core::boxdim::{
    covering_upper_bound, fit_dimension, level_cells, LevelQuery, ThicknessRule,
};
use fll_core::experiments::{
    audit_fits, run_main, run_phi_levelsets, run_slice_survey, run_upper_bound_audit,
    ExperimentConfig, ExperimentReport, PhiLevelSetConfig, SliceSurveyConfig,
};
use fll_core::holder::{
    holder_certify, holder_exponent, phi_eval, AffineFunction, AuxiliaryFunction, BoxSampler,
    PhiFunction,
};
use fll_core::ifs::CoverOptions;
use fll_core::{attractor_cells, moran_dimension, GridSpec, SimilaritySystem};
use std::sync::OnceLock;
use std::time::Instant;

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion} ({name}): {verdict} — {detail}");
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn main_experiment_config() -> ExperimentConfig {
    ExperimentConfig {
        system_ref: "built-in right gasket".into(),
        alpha: 0.3,
        epsilon: 0.1,
        seed: 2,
        levels: (1, 5),
        num_level_values: 20,
        percentile: 10.0,
        base_override: None,
    }
}

fn main_experiment_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        run_main(&main_experiment_config(), &SimilaritySystem::right_gasket())
            .expect("main experiment runs")
    })
}

#[test]
fn criterion_01_moran_dimension() {
    let t0 = Instant::now();
    let s_gasket = moran_dimension(&SimilaritySystem::right_gasket(), 1e-12).unwrap();
    let gasket_time = t0.elapsed();
    let t1 = Instant::now();
    let s_carpet = moran_dimension(&SimilaritySystem::carpet(), 1e-12).unwrap();
    let carpet_time = t1.elapsed();

    let d_gasket = (s_gasket - 3f64.ln() / 2f64.ln()).abs();
    let d_carpet = (s_carpet - 8f64.ln() / 3f64.ln()).abs();
    let pass = d_gasket < 1e-9
        && d_carpet < 1e-9
        && gasket_time.as_secs_f64() < 1.0
        && carpet_time.as_secs_f64() < 1.0;
    report(
        1,
        "moran dimension",
        pass,
        &format!(
            "gasket |Δ| = {d_gasket:.2e}, carpet |Δ| = {d_carpet:.2e}, runtimes {:?}/{:?}",
            gasket_time, carpet_time
        ),
    );
}

#[test]
fn criterion_02_exponent_identity() {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for n in [3u32, 5, 7, 9, 11] {
        for m in [2u32, 3, 4, 5] {
            let aux = AuxiliaryFunction::new(n, m).unwrap();
            let alpha = aux.alpha();
            let recon = ((n * m) as f64).powf(1.0 - alpha);
            worst = worst.max((recon - n as f64).abs());
            pairs += 1;
        }
    }
    report(
        2,
        "exponent identity",
        pairs == 20 && worst < 1e-12,
        &format!("{pairs} pairs, worst |n − (nm)^(1−α)| = {worst:.2e}"),
    );
}

#[test]
fn criterion_03_phi_grid_exactness_and_sup_norm() {
    let aux = AuxiliaryFunction::new(3, 2).unwrap();
    let cells = 6u32.pow(4);
    let mut stable = true;
    let mut sup: f64 = 0.0;
    for i in 0..=cells {
        let x = i as f64 / cells as f64;
        let (v4, _) = phi_eval(&aux, x, 4);
        for depth in 5..=8 {
            if phi_eval(&aux, x, depth).0 != v4 {
                stable = false;
            }
        }
        sup = sup.max((v4 - x).abs());
    }
    report(
        3,
        "phi grid exactness & sup norm",
        stable && sup <= 0.5,
        &format!(
            "{} grid points bitwise stable across depths 4..8: {stable}; max |φ−id| = {sup:.6}",
            cells + 1
        ),
    );
}

#[test]
fn criterion_04_holder_certificate() {
    // Stated bound: max_ratio ≤ 1 + 1e−9 for φ_{3,2} against α_{3,2}.
    // The pinned construction forces φ(1/3)=0, φ(2/3)=1 (ratio 3^α ≈ 1.53)
    // and the limit pair φ(2/5)=0, φ(3/5)=1 (ratio 5^α ≈ 1.864), so the
    // sharp constant exceeds 1 and this criterion cannot pass as stated.
    let aux = AuxiliaryFunction::new(3, 2).unwrap();
    let alpha = aux.alpha();
    let phi = PhiFunction::new(aux);
    let t0 = Instant::now();
    let cert = holder_certify(&phi, &BoxSampler::unit_interval(), 1.0, alpha, 100_000, 1);
    let elapsed = t0.elapsed();
    let in_time = elapsed.as_secs_f64() < 10.0;
    let pass = cert.max_ratio <= 1.0 + 1e-9 && in_time;
    report(
        4,
        "phi Hölder certificate",
        pass,
        &format!(
            "max_ratio = {:.6} over {} pairs (seed 1) in {:?}; forced grid pair gives 3^α = {:.6}, limit pair 5^α = {:.6}",
            cert.max_ratio,
            cert.sample_count,
            elapsed,
            3f64.powf(alpha),
            5f64.powf(alpha),
        ),
    );
}

#[test]
fn criterion_05_phi_level_sets() {
    let t0 = Instant::now();
    let cfg = PhiLevelSetConfig {
        n: 3,
        m: 2,
        levels: (4, 8),
        num_values: 50,
        seed: 1,
    };
    let rep = run_phi_levelsets(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let diff = (rep.median_dim - rep.predicted).abs();
    let pass = diff <= 0.07 && elapsed.as_secs_f64() < 60.0;
    report(
        5,
        "phi level-set dimensions",
        pass,
        &format!(
            "median = {:.5} vs 1 − α = {:.5} (|Δ| = {diff:.5}), {} values fitted, {:?}",
            rep.median_dim,
            rep.predicted,
            rep.spectrum.dims.len(),
            elapsed
        ),
    );
}

#[test]
fn criterion_06_main_theorem_desk_scale() {
    let t0 = Instant::now();
    let rep = main_experiment_report();
    let elapsed = t0.elapsed();
    let diff = (rep.median_dim - rep.predicted).abs();
    let confident = rep
        .fits
        .iter()
        .filter(|vf| vf.fit.r_squared >= 0.95)
        .count();
    let frac = confident as f64 / rep.fits.len() as f64;
    let pass = diff <= 0.15 && frac >= 0.8 && elapsed.as_secs_f64() < 300.0;
    report(
        6,
        "main dimension formula",
        pass,
        &format!(
            "(n,m)=({},{}), s = {:.5}, predicted s−α = {:.5}, median = {:.5} (|Δ| = {diff:.5}), r²≥0.95 on {confident}/{} fits, {:?}",
            rep.n,
            rep.m,
            rep.s,
            rep.predicted,
            rep.median_dim,
            rep.fits.len(),
            elapsed
        ),
    );
}

#[test]
fn criterion_07_upper_bound_audit() {
    let rep = main_experiment_report();
    let audit = run_upper_bound_audit(rep);

    // auditor sanity: injected full-grid growth must be flagged
    let synthetic_counts: Vec<(u32, u64)> = (1..=5).map(|k| (k, 4u64.pow(k))).collect();
    let synthetic_fit = fit_dimension(&synthetic_counts, 2, 3, 5).unwrap();
    let injected = vec![fll_core::boxdim::ValueFit {
        value: 0.5,
        fit: synthetic_fit,
    }];
    let flagged = audit_fits(&injected, rep.s_fit, rep.alpha_nm, 0.1);

    let s_exact = 3f64.ln() / 2f64.ln();
    let s_fit_ok = (rep.s_fit - s_exact).abs() < 0.05;
    let pass = audit.violations.is_empty() && flagged.len() == 1 && s_fit_ok;
    report(
        7,
        "covering upper-bound audit",
        pass,
        &format!(
            "violations = {} over {} fits (bound {:.5}), injected full-grid slope {:.3} flagged = {}, s_fit = {:.5} vs {:.5}",
            audit.violations.len(),
            audit.checked,
            audit.bound,
            injected[0].fit.slope,
            flagged.len() == 1,
            rep.s_fit,
            s_exact
        ),
    );
}

#[test]
fn criterion_08_slice_survey() {
    let t0 = Instant::now();
    let cfg = SliceSurveyConfig {
        num_directions: 20,
        offsets_per_direction: 20,
        levels: (1, 5),
        base: 5,
        seed: 11,
    };
    let rep = run_slice_survey(&SimilaritySystem::right_gasket(), &cfg).unwrap();
    let elapsed = t0.elapsed();
    let diff = (rep.global_median - rep.predicted).abs();
    let pass = diff <= 0.15 && elapsed.as_secs_f64() < 180.0;
    report(
        8,
        "slice dimension drop",
        pass,
        &format!(
            "global median = {:.5} vs s − 1 = {:.5} (|Δ| = {diff:.5}), {} fits, {} skipped, {:?}",
            rep.global_median,
            rep.predicted,
            rep.all_dims.len(),
            rep.total_skipped,
            elapsed
        ),
    );
}

/// Exact slab/cube oracle for affine level sets, in i128 dyadic arithmetic.
mod slab_oracle {
    /// All quantities scaled to integers over 2^COMMON.
    const COMMON: i32 = 80;

    pub struct DyadicAffine {
        /// gradient numerators over 2^10
        pub gx: i64,
        pub gy: i64,
        /// offset numerator over 2^10
        pub b: i64,
    }

    fn to_common(num: i128, denom_pow: i32) -> i128 {
        num << (COMMON - denom_pow)
    }

    /// Exact f64 → (num / 2^COMMON); panics if the value needs more bits.
    pub fn f64_to_common(x: f64) -> i128 {
        assert!(x.is_finite());
        if x == 0.0 {
            return 0;
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        assert!(exp != 0, "subnormal tolerance not supported");
        let mant = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as i128;
        let e2 = exp - 1075; // x = mant·2^e2
        let shift = e2 + COMMON;
        assert!((0..=74).contains(&shift), "tolerance out of range");
        let v = mant << shift;
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    /// Cells of the level-k cover whose closed cube meets the slab
    /// {x : |f(x) − r| ≤ t}, with t = τ − (|gx|+|gy|)·δ/2 matching the
    /// center rule exactly for affine f.
    pub fn slab_cells(
        cover: &fll_core::CellSet,
        f: &DyadicAffine,
        r_num: i64,
        tau: f64,
        k: u32,
    ) -> Vec<Vec<u64>> {
        let tau_c = f64_to_common(tau);
        let half_reach = to_common((f.gx.abs() + f.gy.abs()) as i128, 11 + k as i32);
        let t = tau_c - half_reach;
        let r = to_common(r_num as i128, 10);
        let mut out = Vec::new();
        for idx in cover.iter() {
            // corner values of f over the cube, exact over 2^(10+k)
            let (ix, iy) = (idx[0] as i128, idx[1] as i128);
            let quarter = |gx_pick: i128, gy_pick: i128| -> i128 {
                to_common(
                    f.gx as i128 * gx_pick + f.gy as i128 * gy_pick + ((f.b as i128) << k),
                    10 + k as i32,
                )
            };
            let (x_lo, x_hi) = (ix, ix + 1);
            let (y_lo, y_hi) = (iy, iy + 1);
            let fmin = quarter(
                if f.gx >= 0 { x_lo } else { x_hi },
                if f.gy >= 0 { y_lo } else { y_hi },
            );
            let fmax = quarter(
                if f.gx >= 0 { x_hi } else { x_lo },
                if f.gy >= 0 { y_hi } else { y_lo },
            );
            if fmin <= r + t && fmax >= r - t {
                out.push(idx);
            }
        }
        out.sort();
        out
    }
}

#[test]
fn criterion_09_oracle_equivalence() {
    use slab_oracle::DyadicAffine;

    let sys = SimilaritySystem::right_gasket();
    let opts = CoverOptions::default();

    // seeded dyadic (gradient, offset, value, thickness) tuples
    let mut state = 0x5EED_CAFEu64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) as i64
    };
    let mut checked = 0;
    for case in 0..10 {
        let gx = (next() % 512) - 256;
        let gx = if gx == 0 { 17 } else { gx };
        let gy = (next() % 512) - 256;
        let gy = if gy == 0 { -23 } else { gy };
        let b = next() % 1024;
        let r_num = next() % 1024;
        let extra = (next() % 400) + 32;
        let c_num = (gx.abs() + gy.abs()) / 2 + extra;

        let f = AffineFunction::new(vec![gx as f64 / 1024.0, gy as f64 / 1024.0], b as f64 / 1024.0);
        let dyadic = DyadicAffine { gx, gy, b };
        let rule = ThicknessRule {
            constant: (c_num as f64 / 1024.0) / 2f64.sqrt(),
            exponent: 1.0,
        };
        for k in 1..=3u32 {
            let spec = GridSpec::new(2, k, vec![0.0, 0.0], 1.0).unwrap();
            let cover = attractor_cells(&sys, &spec, &opts).unwrap();
            let tau = rule.tolerance(&spec);
            let query = LevelQuery {
                value: r_num as f64 / 1024.0,
                thickness_rule: rule,
            };
            let got = level_cells(&f, &cover, &query).sorted_indices();
            let want = slab_oracle::slab_cells(&cover, &dyadic, r_num, tau, k);
            assert_eq!(
                got, want,
                "case {case}, k={k}: center rule disagrees with the exact slab oracle"
            );
            checked += 1;
        }
    }
    report(
        9,
        "slab/cube oracle equivalence",
        checked == 30,
        &format!("{checked} (case, level) set equalities, exact i128 arithmetic"),
    );
}

#[test]
fn criterion_10_regression_exactness() {
    let mut worst: f64 = 0.0;
    for (c, b, s) in [(1.0, 2u32, 1.0), (5.0, 3, 1.5), (2.0, 6, 0.613)] {
        let counts: Vec<(u32, u64)> = (2..=8)
            .map(|k| (k, (c * (b as f64).powf(s * k as f64)).floor() as u64))
            .collect();
        let fit = fit_dimension(&counts, b, 2, 8).unwrap();
        worst = worst.max((fit.slope - s).abs());
    }

    // constant-factor overcount leaves the slope unchanged
    let counts: Vec<(u32, u64)> = (2..=8)
        .map(|k| (k, (10.0 * 2f64.powf(1.3 * k as f64)) as u64))
        .collect();
    let scaled: Vec<(u32, u64)> = counts.iter().map(|(k, n)| (*k, n * 37)).collect();
    let f1 = fit_dimension(&counts, 2, 2, 8).unwrap();
    let f2 = fit_dimension(&scaled, 2, 2, 8).unwrap();
    let overcount_drift = (f1.slope - f2.slope).abs();

    let pass = worst < 0.01 && overcount_drift < 1e-12;
    report(
        10,
        "regression exactness",
        pass,
        &format!("worst slope error = {worst:.5}, overcount drift = {overcount_drift:.2e}"),
    );
}

#[test]
fn criterion_11_covering_bound_formula() {
    let alpha = holder_exponent(3, 2).unwrap();
    let got = covering_upper_bound(3.0, 2.0, alpha).unwrap();
    let want = 3f64.ln() / 2f64.ln() - alpha;
    let diff = (got - want).abs();
    report(
        11,
        "covering bound formula",
        diff < 1e-12,
        &format!("log3/log2 − α_(3,2) = {want:.12}, got {got:.12}, |Δ| = {diff:.2e}"),
    );
}

#[test]
fn criterion_12_determinism() {
    // criterion 5 rerun
    let phi_cfg = PhiLevelSetConfig {
        n: 3,
        m: 2,
        levels: (4, 8),
        num_values: 50,
        seed: 1,
    };
    let phi_a = run_phi_levelsets(&phi_cfg).unwrap().reproducibility_digest();
    let phi_b = run_phi_levelsets(&phi_cfg).unwrap().reproducibility_digest();

    // criterion 6 rerun against the shared report
    let main_a = main_experiment_report().reproducibility_digest();
    let main_b = run_main(&main_experiment_config(), &SimilaritySystem::right_gasket())
        .unwrap()
        .reproducibility_digest();

    // criterion 8 rerun
    let slice_cfg = SliceSurveyConfig {
        num_directions: 20,
        offsets_per_direction: 20,
        levels: (1, 5),
        base: 5,
        seed: 11,
    };
    let gasket = SimilaritySystem::right_gasket();
    let slice_a = run_slice_survey(&gasket, &slice_cfg)
        .unwrap()
        .reproducibility_digest();
    let slice_b = run_slice_survey(&gasket, &slice_cfg)
        .unwrap()
        .reproducibility_digest();

    let pass = phi_a == phi_b && main_a == main_b && slice_a == slice_b;
    report(
        12,
        "determinism",
        pass,
        &format!(
            "bit-identical reruns: phi {}, main {}, slices {}",
            phi_a == phi_b,
            main_a == main_b,
            slice_a == slice_b
        ),
    );
}
