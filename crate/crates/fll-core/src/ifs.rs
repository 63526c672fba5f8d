//! Iterated function systems of contracting similarities: the attractor's
//! similarity dimension and certified sparse grid covers of it.

use crate::grid::{CellSet, GridError, GridSpec};
use crate::linalg;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IfsError {
    #[error("system has no maps")]
    EmptySystem,
    #[error("contraction ratio must lie in (0,1), got {0}")]
    BadRatio(f64),
    #[error("orthogonal part of map {map} deviates from orthogonality by {defect:e}")]
    NotOrthogonal { map: usize, defect: f64 },
    #[error("map {map} has dimension {found}, system is {expected}-dimensional")]
    DimensionMismatch {
        map: usize,
        found: usize,
        expected: usize,
    },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("word depth {required} exceeds the configured limit {limit}")]
    DepthOverflow { required: u32, limit: u32 },
    #[error("bounding cube does not contain the attractor (leaf ball escapes by {excess:e})")]
    BoxTooSmall { excess: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("fixed point solve failed for map {0} (numerically singular I - rO)")]
    FixedPointSingular(usize),
}

/// One contracting similarity x ↦ ratio·O·x + translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMap {
    pub ratio: f64,
    /// Row-major p×p orthogonal matrix.
    pub orthogonal: Vec<f64>,
    pub translation: Vec<f64>,
}

impl SimilarityMap {
    /// Axis-aligned scaling map x ↦ ratio·x + translation (identity orthogonal part).
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Self {
        let p = translation.len();
        let mut orthogonal = vec![0.0; p * p];
        for i in 0..p {
            orthogonal[i * p + i] = 1.0;
        }
        Self {
            ratio,
            orthogonal,
            translation,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    fn validate(&self, index: usize, expected_dim: usize) -> Result<(), IfsError> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(IfsError::BadRatio(self.ratio));
        }
        let p = self.dim();
        if p != expected_dim || self.orthogonal.len() != p * p {
            return Err(IfsError::DimensionMismatch {
                map: index,
                found: p,
                expected: expected_dim,
            });
        }
        let defect = linalg::orthogonality_defect(&self.orthogonal, p);
        if defect > ORTHO_TOL {
            return Err(IfsError::NotOrthogonal { map: index, defect });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let p = self.dim();
        let mut out = vec![0.0; p];
        linalg::mat_vec(&self.orthogonal, x, &mut out);
        for (o, t) in out.iter_mut().zip(&self.translation) {
            *o = self.ratio * *o + t;
        }
        out
    }

    /// The unique fixed point, solving (I − ratio·O)·x = translation.
    pub fn fixed_point(&self) -> Option<Vec<f64>> {
        let p = self.dim();
        let mut m = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                let id = if i == j { 1.0 } else { 0.0 };
                m[i * p + j] = id - self.ratio * self.orthogonal[i * p + j];
            }
        }
        linalg::solve(&m, &self.translation)
    }
}

/// A finite system of contracting similarities defining a self-similar set F.
///
/// Connectedness and the open set condition are caller assertions: both are
/// not verified here, and the dimension identities (similarity = Hausdorff =
/// box dimension) are only meaningful when they hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySystem {
    pub ambient_dim: usize,
    pub maps: Vec<SimilarityMap>,
    #[serde(rename = "connected")]
    pub connected_assertion: bool,
    #[serde(rename = "osc")]
    pub osc_assertion: bool,
}

/// A ball certified to contain the attractor.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SimilaritySystem {
    pub fn new(
        ambient_dim: usize,
        maps: Vec<SimilarityMap>,
        connected: bool,
        osc: bool,
    ) -> Result<Self, IfsError> {
        let sys = Self {
            ambient_dim,
            maps,
            connected_assertion: connected,
            osc_assertion: osc,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), IfsError> {
        if self.maps.is_empty() {
            return Err(IfsError::EmptySystem);
        }
        for (i, map) in self.maps.iter().enumerate() {
            map.validate(i, self.ambient_dim)?;
        }
        // the bounding ball must come out finite
        let ball = self.bounding_ball()?;
        if !ball.radius.is_finite() || ball.center.iter().any(|c| !c.is_finite()) {
            return Err(IfsError::BadRatio(self.max_ratio()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn max_ratio(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(0.0, f64::max)
    }

    /// Certified bounding ball from the fixed-point bound: with x₀ the
    /// centroid of the maps' fixed points and R = max |S_i(x₀) − x₀|/(1 − r_max),
    /// every S_i maps B(x₀,R) into itself, so F ⊆ B(x₀,R).
    pub fn bounding_ball(&self) -> Result<BoundingBall, IfsError> {
        let p = self.ambient_dim;
        let mut center = vec![0.0; p];
        for (i, map) in self.maps.iter().enumerate() {
            let fp = map
                .fixed_point()
                .ok_or(IfsError::FixedPointSingular(i))?;
            for (c, f) in center.iter_mut().zip(&fp) {
                *c += f / self.maps.len() as f64;
            }
        }
        let spread = self
            .maps
            .iter()
            .map(|m| linalg::dist(&m.apply(&center), &center))
            .fold(0.0, f64::max);
        let radius = spread / (1.0 - self.max_ratio());
        Ok(BoundingBall { center, radius })
    }

    /// Axis-aligned cube certified to contain F, as (origin, extent).
    pub fn natural_box(&self) -> Result<(Vec<f64>, f64), IfsError> {
        let ball = self.bounding_ball()?;
        // degenerate single-point attractor still needs a positive extent
        let r = ball.radius.max(0.5);
        let origin = ball.center.iter().map(|c| c - r).collect();
        Ok((origin, 2.0 * r))
    }

    /// The unit interval [0,1] as a 1-dimensional self-similar set.
    pub fn unit_interval() -> Self {
        Self::new(
            1,
            vec![
                SimilarityMap::scaling(0.5, vec![0.0]),
                SimilarityMap::scaling(0.5, vec![0.5]),
            ],
            true,
            true,
        )
        .expect("unit interval system is valid")
    }

    /// Right-angle Sierpiński gasket on the triangle (0,0), (1,0), (0,1).
    pub fn right_gasket() -> Self {
        Self::new(
            2,
            vec![
                SimilarityMap::scaling(0.5, vec![0.0, 0.0]),
                SimilarityMap::scaling(0.5, vec![0.5, 0.0]),
                SimilarityMap::scaling(0.5, vec![0.0, 0.5]),
            ],
            true,
            true,
        )
        .expect("gasket system is valid")
    }

    /// Sierpiński carpet on [0,1]²: eight maps of ratio 1/3.
    pub fn carpet() -> Self {
        let mut maps = Vec::new();
        for iy in 0..3 {
            for ix in 0..3 {
                if ix == 1 && iy == 1 {
                    continue;
                }
                maps.push(SimilarityMap::scaling(
                    1.0 / 3.0,
                    vec![ix as f64 / 3.0, iy as f64 / 3.0],
                ));
            }
        }
        Self::new(2, maps, true, true).expect("carpet system is valid")
    }
}

/// Computes the similarity dimension s solving Σ ratio_i^s = 1 by bisection
/// on the strictly decreasing map s ↦ Σ ratio_i^s.
pub fn moran_dimension(system: &SimilaritySystem, tol: f64) -> Result<f64, IfsError> {
    if system.maps.is_empty() {
        return Err(IfsError::EmptySystem);
    }
    if !(tol > 0.0) {
        return Err(IfsError::BadTolerance(tol));
    }
    if system.maps.len() == 1 {
        return Ok(0.0);
    }
    let residual = |s: f64| -> f64 {
        system
            .maps
            .iter()
            .map(|m| m.ratio.powf(s))
            .sum::<f64>()
            - 1.0
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while residual(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1024.0 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() < tol {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Word-expansion options for cover generation.
#[derive(Debug, Clone)]
pub struct CoverOptions {
    /// Hard cap on the symbolic word depth.
    pub max_depth: u32,
    /// Allowed leaf-ball excursion beyond the bounding cube, relative to extent.
    pub box_tolerance: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            max_depth: 64,
            box_tolerance: 1e-9,
        }
    }
}

struct Word {
    mat: Vec<f64>,
    tr: Vec<f64>,
    ratio: f64,
}

struct ExpandCtx<'a> {
    system: &'a SimilaritySystem,
    spec: &'a GridSpec,
    center: Vec<f64>,
    radius: f64,
    leaf_ratio: f64,
    mark_slack: f64,
    box_tol: f64,
}

/// Produces a sparse cell cover of the attractor at the requested grid level.
///
/// IFS words are expanded until each word's image ball has diameter at most
/// half a cell; every cell within `ratio·R + δ/(2(base−1))` of the image ball
/// center is marked. The result contains every cell whose closed cube meets
/// the attractor and no cell farther than √p·δ from it, and refining it once
/// reproduces the level k+1 cover exactly.
pub fn attractor_cells(
    system: &SimilaritySystem,
    spec: &GridSpec,
    opts: &CoverOptions,
) -> Result<CellSet, IfsError> {
    system.validate()?;
    let p = spec.dim();
    if p != system.ambient_dim {
        return Err(IfsError::DimensionMismatch {
            map: 0,
            found: p,
            expected: system.ambient_dim,
        });
    }
    let ball = system.bounding_ball()?;
    let delta = spec.cell_side();
    let diam = 2.0 * ball.radius;

    // quick containment sanity: fixed points are attractor points
    for (i, map) in system.maps.iter().enumerate() {
        let fp = map.fixed_point().ok_or(IfsError::FixedPointSingular(i))?;
        let tol = opts.box_tolerance * spec.extent;
        for (j, &x) in fp.iter().enumerate() {
            let lo = spec.origin[j] - tol;
            let hi = spec.origin[j] + spec.extent + tol;
            if x < lo || x > hi {
                return Err(IfsError::BoxTooSmall { excess: (lo - x).max(x - hi) });
            }
        }
    }

    // required depth under the worst contraction ratio
    if diam > 0.0 {
        let needed = (delta / (2.0 * diam)).ln() / system.max_ratio().ln();
        let required = needed.max(0.0).ceil() as u32;
        if required > opts.max_depth {
            return Err(IfsError::DepthOverflow {
                required,
                limit: opts.max_depth,
            });
        }
    }

    let leaf_ratio = if diam > 0.0 { delta / (2.0 * diam) } else { 1.0 };
    let ctx = ExpandCtx {
        system,
        spec,
        center: ball.center.clone(),
        radius: ball.radius,
        leaf_ratio,
        mark_slack: delta / (2.0 * (spec.base as f64 - 1.0)),
        box_tol: opts.box_tolerance * spec.extent,
    };

    let mut identity = vec![0.0; p * p];
    for i in 0..p {
        identity[i * p + i] = 1.0;
    }
    let root = Word {
        mat: identity,
        tr: vec![0.0; p],
        ratio: 1.0,
    };

    // breadth-first split into prefixes for parallel expansion
    let mut prefixes = vec![root];
    let target = 4 * rayon::current_num_threads().max(1);
    while prefixes.len() < target {
        let mut next = Vec::with_capacity(prefixes.len() * system.maps.len());
        let mut grew = false;
        for w in prefixes {
            if w.ratio <= ctx.leaf_ratio {
                next.push(w);
            } else {
                grew = true;
                for map in &system.maps {
                    next.push(compose(&w, map, p));
                }
            }
        }
        prefixes = next;
        if !grew {
            break;
        }
    }

    let partials: Vec<Result<CellSet, IfsError>> = prefixes
        .par_iter()
        .map(|w| {
            let mut set = CellSet::new(spec.clone());
            expand_word(&ctx, w, &mut set)?;
            Ok(set)
        })
        .collect();

    let mut out = CellSet::new(spec.clone());
    for part in partials {
        out.union_with(part?)?;
    }
    Ok(out)
}

fn compose(w: &Word, map: &SimilarityMap, p: usize) -> Word {
    // S_w ∘ S_i: matrix w.mat·(r_i O_i), translation w applied to t_i
    let mut scaled = vec![0.0; p * p];
    for (s, o) in scaled.iter_mut().zip(&map.orthogonal) {
        *s = map.ratio * o;
    }
    let mut mat = vec![0.0; p * p];
    linalg::mat_mul(&w.mat, &scaled, &mut mat);
    let mut tr = vec![0.0; p];
    linalg::mat_vec(&w.mat, &map.translation, &mut tr);
    for (t, wt) in tr.iter_mut().zip(&w.tr) {
        *t += wt;
    }
    Word {
        mat,
        tr,
        ratio: w.ratio * map.ratio,
    }
}

fn expand_word(ctx: &ExpandCtx, w: &Word, out: &mut CellSet) -> Result<(), IfsError> {
    if w.ratio <= ctx.leaf_ratio {
        return mark_leaf(ctx, w, out);
    }
    for map in &ctx.system.maps {
        let child = compose(w, map, ctx.spec.dim());
        expand_word(ctx, &child, out)?;
    }
    Ok(())
}

fn mark_leaf(ctx: &ExpandCtx, w: &Word, out: &mut CellSet) -> Result<(), IfsError> {
    let spec = ctx.spec;
    let p = spec.dim();
    let delta = spec.cell_side();
    let last = spec.cells_per_axis() - 1;

    // image ball of the word
    let mut q = vec![0.0; p];
    linalg::mat_vec(&w.mat, &ctx.center, &mut q);
    for (qi, t) in q.iter_mut().zip(&w.tr) {
        *qi += t;
    }
    let ball_r = w.ratio * ctx.radius;

    // sanity guard on containment: leaf centers track S_w applied to a point
    // of the attractor's convex hull, so they stay inside any cube holding
    // the attractor; a center escaping the cube flags a bad bounding box
    let mut excess: f64 = 0.0;
    for j in 0..p {
        let lo = spec.origin[j];
        let hi = spec.origin[j] + spec.extent;
        excess = excess.max(lo - q[j]).max(q[j] - hi);
    }
    if excess > ctx.box_tol {
        return Err(IfsError::BoxTooSmall { excess });
    }

    let mark_r = ball_r + ctx.mark_slack;
    let mut lo_idx = vec![0u64; p];
    let mut hi_idx = vec![0u64; p];
    for j in 0..p {
        let lo = ((q[j] - mark_r - spec.origin[j]) / delta).floor().max(0.0) as u64;
        let hi = ((q[j] + mark_r - spec.origin[j]) / delta).floor().max(0.0) as u64;
        lo_idx[j] = lo.min(last);
        hi_idx[j] = hi.min(last);
    }

    let mut idx = lo_idx.clone();
    loop {
        // exact point-to-cube distance against the marking radius
        let (clo, chi) = spec.cell_bounds(&idx);
        let mut d2 = 0.0;
        for j in 0..p {
            let gap = if q[j] < clo[j] {
                clo[j] - q[j]
            } else if q[j] > chi[j] {
                q[j] - chi[j]
            } else {
                0.0
            };
            d2 += gap * gap;
        }
        if d2 <= mark_r * mark_r {
            out.insert(&idx)?;
        }
        let mut axis = 0;
        loop {
            if axis == p {
                return Ok(());
            }
            idx[axis] += 1;
            if idx[axis] <= hi_idx[axis] {
                break;
            }
            idx[axis] = lo_idx[axis];
            axis += 1;
        }
    }
}

/// Refines a cover one level: only the base^p children of occupied cells are
/// re-tested. For covers produced by `attractor_cells` the result equals
/// `attractor_cells` at level k+1.
pub fn refine_cells(
    system: &SimilaritySystem,
    cells: &CellSet,
    opts: &CoverOptions,
) -> Result<CellSet, IfsError> {
    let refined_spec = cells.spec().refined()?;
    if cells.is_empty() {
        return Ok(CellSet::new(refined_spec));
    }
    let fine = attractor_cells(system, &refined_spec, opts)?;
    let base = cells.spec().base;
    Ok(fine.filter(|idx| cells.contains(&CellSet::parent_index(idx, base))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gasket_spec(level: u32) -> GridSpec {
        GridSpec::new(2, level, vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn moran_gasket_matches_closed_form() {
        let s = moran_dimension(&SimilaritySystem::right_gasket(), 1e-12).unwrap();
        let expected = 3f64.ln() / 2f64.ln();
        assert!((s - expected).abs() < 1e-9, "s = {s}");
    }

    #[test]
    fn moran_carpet_matches_closed_form() {
        let s = moran_dimension(&SimilaritySystem::carpet(), 1e-12).unwrap();
        let expected = 8f64.ln() / 3f64.ln();
        assert!((s - expected).abs() < 1e-9);
    }

    #[test]
    fn moran_single_map_is_zero() {
        let sys = SimilaritySystem::new(
            1,
            vec![SimilarityMap::scaling(0.5, vec![0.25])],
            true,
            true,
        )
        .unwrap();
        assert_eq!(moran_dimension(&sys, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn moran_rejects_empty_and_bad_tol() {
        let sys = SimilaritySystem {
            ambient_dim: 1,
            maps: vec![],
            connected_assertion: false,
            osc_assertion: false,
        };
        assert!(matches!(
            moran_dimension(&sys, 1e-9),
            Err(IfsError::EmptySystem)
        ));
        assert!(moran_dimension(&SimilaritySystem::right_gasket(), 0.0).is_err());
    }

    #[test]
    fn validation_rejects_bad_maps() {
        let mut skew = SimilarityMap::scaling(0.5, vec![0.0, 0.0]);
        skew.orthogonal = vec![1.0, 0.2, 0.0, 1.0];
        assert!(SimilaritySystem::new(2, vec![skew], true, true).is_err());

        let big = SimilarityMap::scaling(1.0, vec![0.0]);
        assert!(SimilaritySystem::new(1, vec![big], true, true).is_err());
    }

    #[test]
    fn gasket_level_one_cover_is_all_four_cells() {
        let cover = attractor_cells(
            &SimilaritySystem::right_gasket(),
            &gasket_spec(1),
            &CoverOptions::default(),
        )
        .unwrap();
        let got = cover.sorted_indices();
        let want = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        assert_eq!(got, want);
    }

    #[test]
    fn level_zero_cover_is_single_cell() {
        let cover = attractor_cells(
            &SimilaritySystem::right_gasket(),
            &gasket_spec(0),
            &CoverOptions::default(),
        )
        .unwrap();
        assert_eq!(cover.sorted_indices(), vec![vec![0, 0]]);
    }

    #[test]
    fn gasket_cover_counts_track_three_to_the_k() {
        for k in 1..=6 {
            let cover = attractor_cells(
                &SimilaritySystem::right_gasket(),
                &gasket_spec(k),
                &CoverOptions::default(),
            )
            .unwrap();
            let ratio = cover.len() as f64 / 3f64.powi(k as i32);
            assert!(
                (1.0..=9.0).contains(&ratio),
                "k={k}: |cells|={} ratio={ratio}",
                cover.len()
            );
        }
    }

    #[test]
    fn monotone_counting_between_levels() {
        let sys = SimilaritySystem::right_gasket();
        let mut prev = None;
        for k in 0..=6 {
            let n = attractor_cells(&sys, &gasket_spec(k), &CoverOptions::default())
                .unwrap()
                .len();
            if let Some(p) = prev {
                assert!(n >= p, "k={k}: {n} < {p}");
                assert!(n <= 4 * p, "k={k}: {n} > 4·{p}");
            }
            prev = Some(n);
        }
    }

    #[test]
    fn refine_matches_direct_cover() {
        let sys = SimilaritySystem::right_gasket();
        let opts = CoverOptions::default();
        for k in 0..=3 {
            let coarse = attractor_cells(&sys, &gasket_spec(k), &opts).unwrap();
            let refined = refine_cells(&sys, &coarse, &opts).unwrap();
            let direct = attractor_cells(&sys, &gasket_spec(k + 1), &opts).unwrap();
            assert_eq!(refined, direct, "level {k} -> {}", k + 1);
            assert!(refined.len() >= coarse.len());
            assert!(refined.len() <= coarse.len() * 4);
        }
    }

    #[test]
    fn refine_empty_is_empty() {
        let sys = SimilaritySystem::right_gasket();
        let empty = CellSet::new(gasket_spec(2));
        let refined = refine_cells(&sys, &empty, &CoverOptions::default()).unwrap();
        assert!(refined.is_empty());
    }

    #[test]
    fn cover_soundness_contains_all_word_image_cells() {
        // every deep-word image point must land in a marked cell
        let sys = SimilaritySystem::right_gasket();
        let opts = CoverOptions::default();
        for k in 0..=3u32 {
            let spec = gasket_spec(k);
            let cover = attractor_cells(&sys, &spec, &opts).unwrap();
            let ball = sys.bounding_ball().unwrap();
            let depth = {
                let mut d = 0;
                while 0.5f64.powi(d) * 2.0 * ball.radius > spec.cell_side() / 2.0 {
                    d += 1;
                }
                d
            };
            let mut points = vec![ball.center.clone()];
            for _ in 0..depth {
                points = points
                    .iter()
                    .flat_map(|pt| sys.maps.iter().map(move |m| m.apply(pt)))
                    .collect();
            }
            for pt in points {
                let idx = spec.cell_of(&pt);
                assert!(cover.contains(&idx), "k={k}: missing cell {idx:?} for {pt:?}");
            }
        }
    }

    #[test]
    fn cover_is_deterministic() {
        let sys = SimilaritySystem::carpet();
        let spec = GridSpec::new(3, 3, vec![0.0, 0.0], 1.0).unwrap();
        let a = attractor_cells(&sys, &spec, &CoverOptions::default()).unwrap();
        let b = attractor_cells(&sys, &spec, &CoverOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn depth_overflow_reports_required_depth() {
        let sys = SimilaritySystem::right_gasket();
        let spec = gasket_spec(8);
        let opts = CoverOptions {
            max_depth: 3,
            box_tolerance: 1e-9,
        };
        match attractor_cells(&sys, &spec, &opts) {
            Err(IfsError::DepthOverflow { required, limit }) => {
                assert_eq!(limit, 3);
                assert!(required > 3);
            }
            other => panic!("expected depth overflow, got {other:?}"),
        }
    }

    #[test]
    fn undersized_box_is_rejected() {
        let sys = SimilaritySystem::right_gasket();
        let small = GridSpec::new(2, 2, vec![0.0, 0.0], 0.75).unwrap();
        assert!(matches!(
            attractor_cells(&sys, &small, &CoverOptions::default()),
            Err(IfsError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn json_round_trip_preserves_system() {
        let sys = SimilaritySystem::right_gasket();
        let text = serde_json::to_string(&sys).unwrap();
        let back = SimilaritySystem::from_json(&text).unwrap();
        assert_eq!(sys, back);
    }

    proptest! {
        #[test]
        fn moran_residual_below_tolerance(
            ratios in proptest::collection::vec(0.05f64..0.85, 2..6)
        ) {
            let maps: Vec<SimilarityMap> = ratios
                .iter()
                .enumerate()
                .map(|(i, &r)| SimilarityMap::scaling(r, vec![i as f64]))
                .collect();
            let sys = SimilaritySystem::new(1, maps, false, false).unwrap();
            let s = moran_dimension(&sys, 1e-10).unwrap();
            let residual: f64 = sys.maps.iter().map(|m| m.ratio.powf(s)).sum::<f64>() - 1.0;
            prop_assert!(residual.abs() < 1e-10);
        }
    }
}
