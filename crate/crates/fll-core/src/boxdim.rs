//! Box counting of level sets and slices, log–log slope fits, and the
//! closed-form covering bound.
//!
//! Counting is center-based: a cell at level k is charged to the level set
//! f⁻¹(r) when |f(center) − r| ≤ τ_k, with τ_k = c·(√p·δ_k)^α from the
//! function's Hölder data. The Hölder modulus over one cell diagonal bounds
//! how far the center value can sit from values attained inside the cell, so
//! no truly intersecting cell is missed, and the overcount is a k-independent
//! factor that cancels in slopes.

use crate::field::ScalarField;
use crate::grid::{CellSet, GridError, GridRange, GridSpec};
use crate::ifs::{attractor_cells, CoverOptions, IfsError, SimilaritySystem};
use crate::linalg;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoxdimError {
    #[error("regression window [{k_min}, {k_max}] holds {points} points; need at least 3")]
    TooFewPoints { k_min: u32, k_max: u32, points: usize },
    #[error("zero cell count at level {k}: the level value misses the function's range")]
    ZeroCount { k: u32 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("no level value has a non-empty level set")]
    AllValuesEmpty,
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Thickening rule τ_k = constant·(√p·δ_k)^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessRule {
    pub constant: f64,
    pub exponent: f64,
}

impl ThicknessRule {
    pub fn tolerance(&self, spec: &GridSpec) -> f64 {
        let diag = (spec.dim() as f64).sqrt() * spec.cell_side();
        self.constant * diag.powf(self.exponent)
    }
}

/// A level-set query: the target value r and the thickening rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelQuery {
    pub value: f64,
    pub thickness_rule: ThicknessRule,
}

/// A hyperplane slice {x : ⟨normal, x⟩ = offset}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl SliceSpec {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self, BoxdimError> {
        let len = linalg::norm(&normal);
        if (len - 1.0).abs() > 1e-12 {
            return Err(BoxdimError::BadParameter(format!(
                "slice normal must be a unit vector, |n| = {len}"
            )));
        }
        Ok(Self { normal, offset })
    }

    pub fn normalized(direction: Vec<f64>, offset: f64) -> Result<Self, BoxdimError> {
        let len = linalg::norm(&direction);
        if len == 0.0 {
            return Err(BoxdimError::BadParameter("zero direction".into()));
        }
        Self::new(direction.into_iter().map(|v| v / len).collect(), offset)
    }
}

/// Cells of the cover whose center value is within the thickened window of r.
pub fn level_cells<F: ScalarField + ?Sized>(
    f: &F,
    cells: &CellSet,
    query: &LevelQuery,
) -> CellSet {
    let spec = cells.spec();
    let tau = query.thickness_rule.tolerance(spec);
    let indices: Vec<Vec<u64>> = cells.iter().collect();
    let kept: Vec<Vec<u64>> = indices
        .into_par_iter()
        .filter(|idx| {
            let c = spec.cell_center(idx);
            (f.value(&c) - query.value).abs() <= tau
        })
        .collect();
    let mut out = CellSet::new(spec.clone());
    for idx in kept {
        out.insert(&idx).expect("filtered indices are in range");
    }
    out
}

/// Cells whose center lies within `thickness` of the slice hyperplane;
/// identical to `level_cells` with the affine function ⟨normal, ·⟩.
pub fn slice_cells(cells: &CellSet, slice: &SliceSpec, thickness: f64) -> CellSet {
    let spec = cells.spec();
    let mut out = CellSet::new(spec.clone());
    for idx in cells.iter() {
        let c = spec.cell_center(&idx);
        if (linalg::dot(&slice.normal, &c) - slice.offset).abs() <= thickness {
            out.insert(&idx).expect("index came from the same grid");
        }
    }
    out
}

/// A log–log regression of counts against levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub levels: Vec<u32>,
    pub counts: Vec<u64>,
    /// Least-squares slope of log N_k against k·log base: the dimension estimate.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub base: u32,
}

/// Ordinary least squares of log N_k on k·log(base) over [k_min, k_max].
pub fn fit_dimension(
    counts: &[(u32, u64)],
    base: u32,
    k_min: u32,
    k_max: u32,
) -> Result<DimensionFit, BoxdimError> {
    if base < 2 {
        return Err(BoxdimError::BadParameter(format!("base {base} < 2")));
    }
    let window: Vec<(u32, u64)> = counts
        .iter()
        .copied()
        .filter(|(k, _)| *k >= k_min && *k <= k_max)
        .collect();
    if window.len() < 3 {
        return Err(BoxdimError::TooFewPoints {
            k_min,
            k_max,
            points: window.len(),
        });
    }
    if let Some(&(k, _)) = window.iter().find(|(_, n)| *n == 0) {
        return Err(BoxdimError::ZeroCount { k });
    }
    let ln_b = (base as f64).ln();
    let pts: Vec<(f64, f64)> = window
        .iter()
        .map(|(k, n)| (*k as f64 * ln_b, (*n as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let xm = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let ym = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|(x, _)| (x - xm) * (x - xm)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = pts
        .iter()
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - ym) * (y - ym)).sum();
    let r_squared = if ss_tot < 1e-30 {
        if ss_res < 1e-24 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(DimensionFit {
        levels: window.iter().map(|(k, _)| *k).collect(),
        counts: window.iter().map(|(_, n)| *n).collect(),
        slope,
        intercept,
        r_squared,
        base,
    })
}

/// Closed-form covering bound log l / log ρ − α. May be negative; callers
/// decide whether to clamp.
pub fn covering_upper_bound(l: f64, rho: f64, alpha: f64) -> Result<f64, BoxdimError> {
    if !(l > 1.0) || !(rho > 1.0) || !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BoxdimError::BadParameter(format!(
            "need l > 1, rho > 1, alpha in (0,1]; got l={l}, rho={rho}, alpha={alpha}"
        )));
    }
    Ok(l.ln() / rho.ln() - alpha)
}

/// Default regression window: drop the two coarsest levels when enough
/// levels remain, otherwise keep the three finest.
pub fn default_fit_window(k_min: u32, k_max: u32) -> (u32, u32) {
    let start = (k_min + 2).min(k_max.saturating_sub(2)).max(k_min);
    (start, k_max)
}

/// Estimate of the level-set dimension spectrum over a family of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub level_values: Vec<f64>,
    pub dims: Vec<f64>,
    /// Configured percentile of `dims`: the essential-infimum surrogate.
    pub essential_inf_estimate: f64,
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFit {
    pub value: f64,
    pub fit: DimensionFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedValue {
    pub value: f64,
    pub reason: String,
}

/// Full spectrum run output: per-value fits, exclusions, the raw counts
/// table, and the cover counts of the attractor itself at each level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOutcome {
    pub estimate: SpectrumEstimate,
    pub fits: Vec<ValueFit>,
    pub excluded: Vec<ExcludedValue>,
    /// Rows (r, k, N_k).
    pub counts: Vec<(f64, u32, u64)>,
    /// Rows (k, cover cell count).
    pub cover_counts: Vec<(u32, u64)>,
    pub fit_window: (u32, u32),
}

/// Linear-interpolation percentile of an unsorted sample.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let t = (pct.clamp(0.0, 100.0) / 100.0) * (sorted.len() - 1) as f64;
    let lo = t.floor() as usize;
    let frac = t - lo as f64;
    if lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// Counts thickened level-set cells of `f` over attractor covers at each
/// level of `range`, fits one dimension per level value, and reduces the fits
/// to a percentile estimate. Values whose level set is empty (or empty
/// somewhere in the fit window) are excluded and reported.
pub fn spectrum<F: ScalarField + ?Sized>(
    f: &F,
    system: &SimilaritySystem,
    range: &GridRange,
    level_values: &[f64],
    rule: &ThicknessRule,
    pct: f64,
    cover_opts: &CoverOptions,
) -> Result<SpectrumOutcome, BoxdimError> {
    if level_values.is_empty() {
        return Err(BoxdimError::BadParameter("no level values".into()));
    }
    if range.k_max < range.k_min {
        return Err(BoxdimError::BadParameter(format!(
            "bad level range [{}, {}]",
            range.k_min, range.k_max
        )));
    }

    let mut counts: Vec<(f64, u32, u64)> = Vec::new();
    let mut cover_counts: Vec<(u32, u64)> = Vec::new();
    for k in range.levels() {
        let spec = range.spec_at(k)?;
        let cover = attractor_cells(system, &spec, cover_opts)?;
        cover_counts.push((k, cover.len() as u64));
        let tau = rule.tolerance(&spec);
        let indices: Vec<Vec<u64>> = cover.iter().collect();
        let values: Vec<f64> = indices
            .par_iter()
            .map(|idx| f.value(&spec.cell_center(idx)))
            .collect();
        for &r in level_values {
            let n = values.iter().filter(|v| (**v - r).abs() <= tau).count() as u64;
            counts.push((r, k, n));
        }
    }

    let window = default_fit_window(range.k_min, range.k_max);
    let mut fits = Vec::new();
    let mut excluded = Vec::new();
    let mut dims = Vec::new();
    let mut kept_values = Vec::new();
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
        match fit_dimension(&per_level, range.base, window.0, window.1) {
            Ok(fit) => {
                dims.push(fit.slope);
                kept_values.push(r);
                fits.push(ValueFit { value: r, fit });
            }
            Err(BoxdimError::ZeroCount { k }) => {
                excluded.push(ExcludedValue {
                    value: r,
                    reason: format!("zero count at level {k} inside the fit window"),
                });
            }
            Err(e) => return Err(e),
        }
    }
    if dims.is_empty() {
        return Err(BoxdimError::AllValuesEmpty);
    }
    let estimate = SpectrumEstimate {
        level_values: kept_values,
        essential_inf_estimate: percentile(&dims, pct),
        dims,
        percentile: pct,
    };
    Ok(SpectrumOutcome {
        estimate,
        fits,
        excluded,
        counts,
        cover_counts,
        fit_window: window,
    })
}

/// 17-significant-digit float formatting for the CSV interfaces.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Counts table: columns r,k,N_k.
pub fn counts_csv(counts: &[(f64, u32, u64)]) -> String {
    let mut out = String::from("r,k,N_k\n");
    for (r, k, n) in counts {
        out.push_str(&format!("{},{},{}\n", format_g17(*r), k, n));
    }
    out
}

/// Fit table: columns r,slope,intercept,r_squared,k_min,k_max.
pub fn fits_csv(fits: &[ValueFit]) -> String {
    let mut out = String::from("r,slope,intercept,r_squared,k_min,k_max\n");
    for vf in fits {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_g17(vf.value),
            format_g17(vf.fit.slope),
            format_g17(vf.fit.intercept),
            format_g17(vf.fit.r_squared),
            vf.fit.levels.first().copied().unwrap_or(0),
            vf.fit.levels.last().copied().unwrap_or(0),
        ));
    }
    out
}
