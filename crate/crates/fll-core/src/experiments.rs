//! Experiment orchestration: the main dimension-formula reproduction, the
//! covering upper-bound audit, the slice dimension-drop survey, and level-set
//! statistics of the zig-zag functions.
//!
//! Every run is deterministic given its seed: reports embed the full
//! configuration, and rerunning reproduces them bit for bit (wall-clock time
//! excluded via `reproducibility_digest`).

use crate::boxdim::{
    self, default_fit_window, fit_dimension, percentile, BoxdimError, ExcludedValue,
    SpectrumEstimate, SpectrumOutcome, ThicknessRule, ValueFit,
};
use crate::field::ScalarField;
use crate::grid::{CellSet, GridError, GridRange, GridSpec};
use crate::holder::{
    compose, k_epsilon, permitted_pair, AffineFunction, AuxiliaryFunction, HolderError,
    PhiFunction, PHI_HOLDER_BOUND,
};
use crate::ifs::{attractor_cells, moran_dimension, CoverOptions, IfsError, SimilaritySystem};
use crate::linalg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Lipschitz target for the seeded base affine function; small enough that
/// the two-bound split admits small permitted pairs while h(F) stays well
/// inside [0,1].
const H_LIPSCHITZ_TARGET: f64 = 0.4;
/// Fraction of the observed range used for level values.
const CENTRAL_RANGE: f64 = 0.8;
/// Confidence gate on per-value fits.
const R_SQUARED_GATE: f64 = 0.95;
/// Slack in the upper-bound audit d ≤ s_fit − α + slack.
const AUDIT_SLACK: f64 = 0.1;
/// Ceiling for the permitted-pair scan.
const PERMITTED_M_CEILING: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error(transparent)]
    Holder(#[from] HolderError),
    #[error(transparent)]
    Boxdim(#[from] BoxdimError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Path of the system definition file.
    pub system_ref: String,
    pub alpha: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// (k_min, k_max) grid levels.
    pub levels: (u32, u32),
    pub num_level_values: usize,
    /// Percentile of the per-value dimensions reported as the
    /// essential-infimum surrogate.
    pub percentile: f64,
    #[serde(default)]
    pub base_override: Option<u32>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.alpha > 0.0 && self.epsilon > 0.0 && self.alpha + self.epsilon < 1.0) {
            return Err(ExperimentError::BadConfig(format!(
                "need 0 < alpha and alpha + epsilon < 1, got alpha={}, epsilon={}",
                self.alpha, self.epsilon
            )));
        }
        if self.levels.1 < self.levels.0 + 2 {
            return Err(ExperimentError::BadConfig(format!(
                "need k_max >= k_min + 2, got ({}, {})",
                self.levels.0, self.levels.1
            )));
        }
        if self.num_level_values == 0 {
            return Err(ExperimentError::BadConfig("num_level_values is zero".into()));
        }
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(ExperimentError::BadConfig(format!(
                "percentile {} outside [0, 100]",
                self.percentile
            )));
        }
        Ok(())
    }

    pub fn from_file(path: &str) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ExperimentError::Parse {
            path: path.into(),
            source,
        })
    }
}

/// One upper-bound violation: a fitted level-set dimension above the audited
/// covering bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub value: f64,
    pub dim: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub s: f64,
    pub alpha_nm: f64,
    /// s − α_{n,m}.
    pub predicted: f64,
    pub n: u32,
    pub m: u32,
    pub k_bound: u64,
    pub base: u32,
    pub grid: GridRange,
    pub h: AffineFunction,
    pub holder_constant_h: f64,
    pub spectrum: SpectrumEstimate,
    pub fits: Vec<ValueFit>,
    pub excluded: Vec<ExcludedValue>,
    pub counts: Vec<(f64, u32, u64)>,
    pub cover_counts: Vec<(u32, u64)>,
    pub fit_window: (u32, u32),
    pub median_dim: f64,
    pub low_confidence_values: Vec<f64>,
    pub s_fit: f64,
    pub upper_bound_violations: Vec<BoundViolation>,
    pub runtime_ms: u64,
    pub config_echo: ExperimentConfig,
}

impl ExperimentReport {
    /// Serialization with the wall-clock field zeroed; bitwise identical
    /// across reruns with the same seed.
    pub fn reproducibility_digest(&self) -> String {
        let mut clone = self.clone();
        clone.runtime_ms = 0;
        serde_json::to_string(&clone).expect("report serializes")
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let norm = linalg::norm(&v);
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Projection range of the attractor onto a unit direction, certified by
/// leaf-ball expansion (each leaf contributes its center ± its radius).
fn projection_range(
    system: &SimilaritySystem,
    direction: &[f64],
    rel_resolution: f64,
) -> Result<(f64, f64), IfsError> {
    let ball = system.bounding_ball()?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut stack = vec![(ball.center.clone(), 1.0f64)];
    // expand points instead of full affine words: S_w(center) tracks the
    // ball center under each word
    while let Some((pt, ratio)) = stack.pop() {
        if ratio <= rel_resolution {
            let proj = linalg::dot(direction, &pt);
            let r = ratio * ball.radius;
            lo = lo.min(proj - r);
            hi = hi.max(proj + r);
            continue;
        }
        for map in &system.maps {
            stack.push((map.apply(&pt), ratio * map.ratio));
        }
    }
    Ok((lo, hi))
}

/// Shared spectrum loop over prebuilt covers: evaluates `f` once per cover
/// cell, counts each level value against the thickened window, and fits one
/// dimension per value over the default window.
fn spectrum_over_covers<F: ScalarField + ?Sized>(
    f: &F,
    covers: &[(u32, CellSet)],
    level_values: &[f64],
    rule: &ThicknessRule,
    pct: f64,
) -> Result<SpectrumOutcome, BoxdimError> {
    let k_min = covers.iter().map(|(k, _)| *k).min().unwrap();
    let k_max = covers.iter().map(|(k, _)| *k).max().unwrap();
    let base = covers[0].1.spec().base;
    let mut counts = Vec::new();
    let mut cover_counts = Vec::new();
    for (k, cover) in covers {
        cover_counts.push((*k, cover.len() as u64));
        let spec = cover.spec();
        let tau = rule.tolerance(spec);
        let indices: Vec<Vec<u64>> = cover.iter().collect();
        let values: Vec<f64> = indices
            .par_iter()
            .map(|idx| f.value(&spec.cell_center(idx)))
            .collect();
        for &r in level_values {
            let n = values.iter().filter(|v| (**v - r).abs() <= tau).count() as u64;
            counts.push((r, *k, n));
        }
    }
    let window = default_fit_window(k_min, k_max);
    let mut fits = Vec::new();
    let mut excluded = Vec::new();
    let mut dims = Vec::new();
    let mut kept = Vec::new();
    for &r in level_values {
        let per_level: Vec<(u32, u64)> = counts
            .iter()
            .filter(|(rv, _, _)| *rv == r)
            .map(|(_, k, n)| (*k, *n))
            .collect();
        if per_level.iter().all(|(_, n)| *n == 0) {
            excluded.push(ExcludedValue {
                value: r,
                reason: "level set empty at every level".into(),
            });
            continue;
        }
        match fit_dimension(&per_level, base, window.0, window.1) {
            Ok(fit) => {
                dims.push(fit.slope);
                kept.push(r);
                fits.push(ValueFit { value: r, fit });
            }
            Err(BoxdimError::ZeroCount { k }) => excluded.push(ExcludedValue {
                value: r,
                reason: format!("zero count at level {k} inside the fit window"),
            }),
            Err(e) => return Err(e),
        }
    }
    if dims.is_empty() {
        return Err(BoxdimError::AllValuesEmpty);
    }
    Ok(SpectrumOutcome {
        estimate: SpectrumEstimate {
            level_values: kept,
            essential_inf_estimate: percentile(&dims, pct),
            dims,
            percentile: pct,
        },
        fits,
        excluded,
        counts,
        cover_counts,
        fit_window: window,
    })
}

/// Runs the main experiment: a seeded typically-oriented affine base map h
/// scaled into [0,1], the permitted zig-zag perturbation g = φ_{n,m} ∘ h,
/// covers at base nm, and level-set dimension fits against s − α_{n,m}.
pub fn run_main(
    config: &ExperimentConfig,
    system: &SimilaritySystem,
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    config.validate()?;
    system.validate()?;
    if !(system.connected_assertion && system.osc_assertion) {
        return Err(ExperimentError::BadConfig(
            "system must assert connectedness and the open set condition".into(),
        ));
    }

    let s = moran_dimension(system, 1e-12)?;
    let p = system.ambient_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let direction = random_unit_vector(&mut rng, p);

    // scale the projection into [0,1] with a deliberately small Lipschitz
    // constant: h(F) only needs containment, and a small constant keeps the
    // K bound (and with it nm) small
    let (lo, hi) = projection_range(system, &direction, 1e-4)?;
    let width = (hi - lo).max(1e-9);
    let ball = system.bounding_ball()?;
    let diam = (2.0 * ball.radius).max(1e-9);
    let mut scale = H_LIPSCHITZ_TARGET.min(0.8 / width);
    // keep the Hölder constant of h strictly contracting
    let alpha = config.alpha;
    if scale * diam.powf(1.0 - alpha) >= 0.9 {
        scale = 0.9 / diam.powf(1.0 - alpha);
    }
    let gradient: Vec<f64> = direction.iter().map(|u| u * scale).collect();
    let offset = 0.5 - scale * (lo + hi) / 2.0;
    let h = AffineFunction::new(gradient, offset);
    let c_h = h.holder_constant(alpha, diam);

    let k_bound = k_epsilon(c_h, alpha, config.epsilon, h.lipschitz)?;
    let aux = permitted_pair(alpha, config.epsilon, k_bound, PERMITTED_M_CEILING)?;
    let alpha_nm = aux.alpha();
    let base = config.base_override.unwrap_or(aux.nm() as u32);

    let (origin, extent) = system.natural_box()?;
    let grid = GridRange {
        base,
        k_min: config.levels.0,
        k_max: config.levels.1,
        origin,
        extent,
    };
    let cover_opts = CoverOptions::default();
    let mut covers = Vec::new();
    for k in grid.levels() {
        let spec = grid.spec_at(k)?;
        covers.push((k, attractor_cells(system, &spec, &cover_opts)?));
    }

    // thickening from g's certified half-diagonal modulus: a cell meeting
    // {g = r} has |g(center) − r| ≤ c_φ·(M_h·√p·δ/2)^α = c·(√p·δ)^α with
    // c = c_φ·(M_h/2)^α, so no truly intersecting cell is missed while the
    // coarse levels saturate less
    let rule = ThicknessRule {
        constant: PHI_HOLDER_BOUND * (h.lipschitz / 2.0).powf(alpha_nm),
        exponent: alpha_nm,
    };
    let finest = covers.last().unwrap().1.spec().clone();
    let tau_min = rule.tolerance(&finest);
    let g = compose(aux, h.clone(), tau_min * 1e-3);

    // observed range of g over the finest cover, central 80% sampled
    let indices: Vec<Vec<u64>> = covers.last().unwrap().1.iter().collect();
    let (g_lo, g_hi) = indices
        .par_iter()
        .map(|idx| g.value(&finest.cell_center(idx)))
        .fold(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    let g_width = g_hi - g_lo;
    let inset = g_lo + (1.0 - CENTRAL_RANGE) / 2.0 * g_width;
    let span = CENTRAL_RANGE * g_width;
    let values: Vec<f64> = (0..config.num_level_values)
        .map(|i| {
            if config.num_level_values == 1 {
                inset + span / 2.0
            } else {
                inset + span * i as f64 / (config.num_level_values - 1) as f64
            }
        })
        .collect();

    let outcome = spectrum_over_covers(&g, &covers, &values, &rule, config.percentile)?;

    let dims = &outcome.estimate.dims;
    let median_dim = percentile(dims, 50.0);
    let low_confidence_values: Vec<f64> = outcome
        .fits
        .iter()
        .filter(|vf| vf.fit.r_squared < R_SQUARED_GATE)
        .map(|vf| vf.value)
        .collect();

    let s_fit = fit_dimension(
        &outcome.cover_counts,
        base,
        outcome.fit_window.0,
        outcome.fit_window.1,
    )?
    .slope;
    let upper_bound_violations = audit_fits(&outcome.fits, s_fit, alpha_nm, AUDIT_SLACK);

    Ok(ExperimentReport {
        s,
        alpha_nm,
        predicted: s - alpha_nm,
        n: aux.n,
        m: aux.m,
        k_bound,
        base,
        grid,
        h,
        holder_constant_h: c_h,
        spectrum: outcome.estimate,
        fits: outcome.fits,
        excluded: outcome.excluded,
        counts: outcome.counts,
        cover_counts: outcome.cover_counts,
        fit_window: outcome.fit_window,
        median_dim,
        low_confidence_values,
        s_fit,
        upper_bound_violations,
        runtime_ms: start.elapsed().as_millis() as u64,
        config_echo: config.clone(),
    })
}

/// Loads the system named by the config and runs the main experiment.
pub fn run_main_from_config(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let text =
        std::fs::read_to_string(&config.system_ref).map_err(|source| ExperimentError::Io {
            path: config.system_ref.clone(),
            source,
        })?;
    let system = SimilaritySystem::from_json(&text).map_err(|source| ExperimentError::Parse {
        path: config.system_ref.clone(),
        source,
    })?;
    run_main(config, &system)
}

/// Checks fitted level-set dimensions against d ≤ s_fit − alpha + slack.
pub fn audit_fits(
    fits: &[ValueFit],
    s_fit: f64,
    alpha: f64,
    slack: f64,
) -> Vec<BoundViolation> {
    let bound = s_fit - alpha + slack;
    fits.iter()
        .filter(|vf| vf.fit.slope > bound)
        .map(|vf| BoundViolation {
            value: vf.value,
            dim: vf.fit.slope,
            bound,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub s_fit: f64,
    pub alpha: f64,
    pub slack: f64,
    pub bound: f64,
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
}

/// Re-audits an experiment report against the covering upper bound.
pub fn run_upper_bound_audit(report: &ExperimentReport) -> AuditReport {
    let violations = audit_fits(&report.fits, report.s_fit, report.alpha_nm, AUDIT_SLACK);
    AuditReport {
        s_fit: report.s_fit,
        alpha: report.alpha_nm,
        slack: AUDIT_SLACK,
        bound: report.s_fit - report.alpha_nm + AUDIT_SLACK,
        checked: report.fits.len(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSurveyConfig {
    pub num_directions: usize,
    pub offsets_per_direction: usize,
    pub levels: (u32, u32),
    pub base: u32,
    pub seed: u64,
}

impl Default for SliceSurveyConfig {
    fn default() -> Self {
        Self {
            num_directions: 20,
            offsets_per_direction: 20,
            levels: (1, 5),
            base: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub normal: Vec<f64>,
    pub median_dim: f64,
    pub fitted_offsets: usize,
    pub skipped_offsets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSurveyReport {
    pub s: f64,
    /// s − 1, the expected typical slice dimension.
    pub predicted: f64,
    pub directions: Vec<DirectionSummary>,
    pub global_median: f64,
    pub all_dims: Vec<f64>,
    pub total_skipped: usize,
    pub fit_window: (u32, u32),
    pub runtime_ms: u64,
    pub config_echo: SliceSurveyConfig,
}

impl SliceSurveyReport {
    pub fn reproducibility_digest(&self) -> String {
        let mut clone = self.clone();
        clone.runtime_ms = 0;
        serde_json::to_string(&clone).expect("report serializes")
    }
}

/// Seeded survey of hyperplane slice dimensions across random directions and
/// equispaced offsets; the dimension-drop prediction is s − 1.
pub fn run_slice_survey(
    system: &SimilaritySystem,
    config: &SliceSurveyConfig,
) -> Result<SliceSurveyReport, ExperimentError> {
    let start = Instant::now();
    system.validate()?;
    let s = moran_dimension(system, 1e-12)?;
    if s <= 1.0 {
        return Err(ExperimentError::BadConfig(format!(
            "slice survey needs similarity dimension > 1, got {s}"
        )));
    }
    if config.num_directions == 0 || config.offsets_per_direction == 0 {
        return Err(ExperimentError::BadConfig(
            "need at least one direction and one offset".into(),
        ));
    }
    let p = system.ambient_dim;
    let (origin, extent) = system.natural_box()?;
    let grid = GridRange {
        base: config.base,
        k_min: config.levels.0,
        k_max: config.levels.1,
        origin,
        extent,
    };
    let cover_opts = CoverOptions::default();
    let mut covers = Vec::new();
    for k in grid.levels() {
        covers.push((k, attractor_cells(system, &grid.spec_at(k)?, &cover_opts)?));
    }
    let window = default_fit_window(config.levels.0, config.levels.1);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normals: Vec<Vec<f64>> = (0..config.num_directions)
        .map(|_| random_unit_vector(&mut rng, p))
        .collect();

    // per level: cell centers projected on demand
    let centers: Vec<(u32, Vec<Vec<f64>>, f64)> = covers
        .iter()
        .map(|(k, cover)| {
            let spec = cover.spec();
            let pts: Vec<Vec<f64>> = cover.iter().map(|idx| spec.cell_center(&idx)).collect();
            let half_diag = (p as f64).sqrt() * spec.cell_side() / 2.0;
            (*k, pts, half_diag)
        })
        .collect();

    let mut directions = Vec::new();
    let mut all_dims = Vec::new();
    let mut total_skipped = 0usize;
    for normal in &normals {
        // projection range over the finest cover
        let (_, finest_pts, _) = centers.last().unwrap();
        let (lo, hi) = finest_pts
            .iter()
            .map(|c| linalg::dot(normal, c))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let mut dims = Vec::new();
        let mut skipped = 0usize;
        for i in 0..config.offsets_per_direction {
            let a = lo + (hi - lo) * (i as f64 + 0.5) / config.offsets_per_direction as f64;
            let counts: Vec<(u32, u64)> = centers
                .par_iter()
                .map(|(k, pts, half_diag)| {
                    let n = pts
                        .iter()
                        .filter(|c| (linalg::dot(normal, c) - a).abs() <= *half_diag)
                        .count() as u64;
                    (*k, n)
                })
                .collect();
            match fit_dimension(&counts, config.base, window.0, window.1) {
                Ok(fit) => dims.push(fit.slope),
                Err(BoxdimError::ZeroCount { .. }) | Err(BoxdimError::TooFewPoints { .. }) => {
                    skipped += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        total_skipped += skipped;
        let median = if dims.is_empty() {
            f64::NAN
        } else {
            percentile(&dims, 50.0)
        };
        all_dims.extend(dims.iter().copied());
        directions.push(DirectionSummary {
            normal: normal.clone(),
            median_dim: median,
            fitted_offsets: dims.len(),
            skipped_offsets: skipped,
        });
    }
    if all_dims.is_empty() {
        return Err(ExperimentError::Boxdim(BoxdimError::AllValuesEmpty));
    }
    let global_median = percentile(&all_dims, 50.0);
    Ok(SliceSurveyReport {
        s,
        predicted: s - 1.0,
        directions,
        global_median,
        all_dims,
        total_skipped,
        fit_window: window,
        runtime_ms: start.elapsed().as_millis() as u64,
        config_echo: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiLevelSetConfig {
    pub n: u32,
    pub m: u32,
    pub levels: (u32, u32),
    pub num_values: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiLevelSetReport {
    pub n: u32,
    pub m: u32,
    pub alpha_nm: f64,
    /// 1 − α_{n,m}.
    pub predicted: f64,
    pub spectrum: SpectrumEstimate,
    pub fits: Vec<ValueFit>,
    pub excluded: Vec<ExcludedValue>,
    pub counts: Vec<(f64, u32, u64)>,
    pub median_dim: f64,
    pub fit_window: (u32, u32),
    pub runtime_ms: u64,
    pub config_echo: PhiLevelSetConfig,
}

impl PhiLevelSetReport {
    pub fn reproducibility_digest(&self) -> String {
        let mut clone = self.clone();
        clone.runtime_ms = 0;
        serde_json::to_string(&clone).expect("report serializes")
    }
}

/// Level-set dimension statistics of φ_{n,m} on [0,1] under its own base-nm
/// grid; the prediction is 1 − α_{n,m}.
pub fn run_phi_levelsets(config: &PhiLevelSetConfig) -> Result<PhiLevelSetReport, ExperimentError> {
    let start = Instant::now();
    let aux = AuxiliaryFunction::new(config.n, config.m)?;
    if config.levels.1 < config.levels.0 + 2 {
        return Err(ExperimentError::BadConfig(format!(
            "need k_max >= k_min + 2, got {:?}",
            config.levels
        )));
    }
    if config.num_values == 0 {
        return Err(ExperimentError::BadConfig("num_values is zero".into()));
    }
    let alpha_nm = aux.alpha();
    let base = aux.nm() as u32;
    let rule = ThicknessRule {
        constant: PHI_HOLDER_BOUND,
        exponent: alpha_nm,
    };

    // the cover of [0,1] under its own grid is the full grid
    let mut covers = Vec::new();
    for k in config.levels.0..=config.levels.1 {
        let spec = GridSpec::new(base, k, vec![0.0], 1.0)?;
        covers.push((k, CellSet::full(spec)?));
    }
    let finest = covers.last().unwrap().1.spec().clone();
    let tau_min = rule.tolerance(&finest);
    let depth = aux
        .depth_for_tolerance(tau_min * 1e-3)
        .max(aux.default_depth());
    let phi = PhiFunction::with_depth(aux, depth);

    // seeded values in the central 80% of the observed range
    let indices: Vec<Vec<u64>> = covers.last().unwrap().1.iter().collect();
    let (lo, hi) = indices
        .par_iter()
        .map(|idx| phi.value(&finest.cell_center(idx)))
        .fold(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    let width = hi - lo;
    let inset = lo + (1.0 - CENTRAL_RANGE) / 2.0 * width;
    let span = CENTRAL_RANGE * width;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let values: Vec<f64> = (0..config.num_values)
        .map(|_| inset + span * rng.gen::<f64>())
        .collect();

    let outcome = spectrum_over_covers(&phi, &covers, &values, &rule, 50.0)?;
    let median_dim = percentile(&outcome.estimate.dims, 50.0);
    Ok(PhiLevelSetReport {
        n: config.n,
        m: config.m,
        alpha_nm,
        predicted: 1.0 - alpha_nm,
        spectrum: outcome.estimate,
        fits: outcome.fits,
        excluded: outcome.excluded,
        counts: outcome.counts,
        median_dim,
        fit_window: outcome.fit_window,
        runtime_ms: start.elapsed().as_millis() as u64,
        config_echo: config.clone(),
    })
}

/// Plot data: one row per (series, level, log count).
pub fn loglog_csv(counts: &[(f64, u32, u64)], cover_counts: &[(u32, u64)]) -> String {
    let mut out = String::from("series,k,logN\n");
    for (k, n) in cover_counts {
        if *n > 0 {
            out.push_str(&format!(
                "cover,{},{}\n",
                k,
                boxdim::format_g17((*n as f64).ln())
            ));
        }
    }
    for (r, k, n) in counts {
        if *n > 0 {
            out.push_str(&format!(
                "r={},{},{}\n",
                boxdim::format_g17(*r),
                k,
                boxdim::format_g17((*n as f64).ln())
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxdim::DimensionFit;

    fn small_main_config() -> ExperimentConfig {
        ExperimentConfig {
            system_ref: "unused".into(),
            alpha: 0.3,
            epsilon: 0.1,
            seed: 7,
            levels: (1, 4),
            num_level_values: 8,
            percentile: 10.0,
            base_override: None,
        }
    }

    #[test]
    fn degenerate_config_rejected_before_work() {
        let mut cfg = small_main_config();
        cfg.alpha = 0.8;
        cfg.epsilon = 0.3;
        assert!(matches!(
            run_main(&cfg, &SimilaritySystem::right_gasket()),
            Err(ExperimentError::BadConfig(_))
        ));
        let mut cfg2 = small_main_config();
        cfg2.levels = (3, 4);
        assert!(cfg2.validate().is_err());
    }

    #[test]
    fn main_run_prediction_is_consistent() {
        let cfg = small_main_config();
        let report = run_main(&cfg, &SimilaritySystem::right_gasket()).unwrap();
        assert!((report.predicted - (report.s - report.alpha_nm)).abs() < 1e-12);
        let aux = AuxiliaryFunction::new(report.n, report.m).unwrap();
        assert!((aux.alpha() - report.alpha_nm).abs() < 1e-15);
        // small Lipschitz target admits the smallest zig-zag pair
        assert_eq!((report.n, report.m), (3, 2));
        assert_eq!(report.base, 6);
    }

    #[test]
    fn main_run_is_reproducible() {
        let cfg = small_main_config();
        let sys = SimilaritySystem::right_gasket();
        let a = run_main(&cfg, &sys).unwrap();
        let b = run_main(&cfg, &sys).unwrap();
        assert_eq!(a.reproducibility_digest(), b.reproducibility_digest());
    }

    #[test]
    fn audit_flags_injected_full_grid_counts() {
        // a fabricated fit with slope p = 2 must violate the bound
        let fit = DimensionFit {
            levels: vec![2, 3, 4],
            counts: vec![16, 64, 256],
            slope: 2.0,
            intercept: 0.0,
            r_squared: 1.0,
            base: 2,
        };
        let fits = vec![ValueFit { value: 0.5, fit }];
        let violations = audit_fits(&fits, 1.585, 0.3868, AUDIT_SLACK);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].dim > violations[0].bound);
    }

    #[test]
    fn slice_survey_rejects_thin_systems() {
        // a Cantor-like system with dimension < 1
        let sys = SimilaritySystem::new(
            2,
            vec![
                crate::ifs::SimilarityMap::scaling(0.25, vec![0.0, 0.0]),
                crate::ifs::SimilarityMap::scaling(0.25, vec![0.75, 0.0]),
            ],
            true,
            true,
        )
        .unwrap();
        assert!(matches!(
            run_slice_survey(&sys, &SliceSurveyConfig::default()),
            Err(ExperimentError::BadConfig(_))
        ));
    }

    #[test]
    fn slice_survey_directions_are_unit_and_distinct() {
        let cfg = SliceSurveyConfig {
            num_directions: 6,
            offsets_per_direction: 4,
            levels: (1, 4),
            base: 4,
            seed: 3,
        };
        let report = run_slice_survey(&SimilaritySystem::right_gasket(), &cfg).unwrap();
        for d in &report.directions {
            assert!((linalg::norm(&d.normal) - 1.0).abs() < 1e-12);
        }
        for i in 0..report.directions.len() {
            for j in (i + 1)..report.directions.len() {
                assert_ne!(report.directions[i].normal, report.directions[j].normal);
            }
        }
    }

    #[test]
    fn phi_levelset_counts_stay_in_bounds() {
        let cfg = PhiLevelSetConfig {
            n: 3,
            m: 2,
            levels: (2, 5),
            num_values: 10,
            seed: 1,
        };
        let report = run_phi_levelsets(&cfg).unwrap();
        for (_, k, n) in &report.counts {
            assert!(*n >= 1 || *n == 0);
            assert!(*n <= 6u64.pow(*k));
        }
        assert!((report.predicted - (1.0 - report.alpha_nm)).abs() < 1e-15);
    }

    #[test]
    fn thickened_counts_grow_at_most_by_the_branching_factor() {
        // N_k ≤ base^p · N_{k−1} for the per-value thickened counts
        let cfg = PhiLevelSetConfig {
            n: 3,
            m: 2,
            levels: (2, 6),
            num_values: 12,
            seed: 4,
        };
        let report = run_phi_levelsets(&cfg).unwrap();
        for vf in &report.fits {
            let per: Vec<(u32, u64)> = report
                .counts
                .iter()
                .filter(|(r, _, _)| *r == vf.value)
                .map(|(_, k, n)| (*k, *n))
                .collect();
            for w in per.windows(2) {
                let (_, prev) = w[0];
                let (k, next) = w[1];
                assert!(
                    next <= prev * 6,
                    "r={}, k={k}: {next} > 6·{prev}",
                    vf.value
                );
            }
        }
    }

    #[test]
    fn phi_levelset_rerun_is_bit_identical() {
        let cfg = PhiLevelSetConfig {
            n: 3,
            m: 2,
            levels: (2, 5),
            num_values: 6,
            seed: 42,
        };
        let a = run_phi_levelsets(&cfg).unwrap();
        let b = run_phi_levelsets(&cfg).unwrap();
        assert_eq!(a.reproducibility_digest(), b.reproducibility_digest());
    }
}
