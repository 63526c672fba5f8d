//! Piecewise-affine interpolants on Kuhn-triangulated cube grids, and the
//! randomized translation adjustment that moves simplex boundaries off the
//! attractor.

use super::{AffineFunction, HolderError};
use crate::field::ScalarField;
use crate::holder::certify::{holder_certify, BoxSampler};
use crate::ifs::{IfsError, SimilaritySystem};
use crate::linalg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A non-degenerate p-simplex given by its p+1 vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Signed volume magnitude, |det(edge matrix)| / p!.
    pub fn volume(&self) -> f64 {
        let p = self.dim();
        let mut m = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                m[i * p + j] = self.vertices[i + 1][j] - self.vertices[0][j];
            }
        }
        (determinant(&m, p) / factorial(p)).abs()
    }

    /// Signed distances of `q` to each facet plane, oriented inward: all
    /// non-negative exactly when q lies in the simplex, and their minimum is
    /// the distance to the boundary for interior points.
    pub fn facet_margins(&self, q: &[f64]) -> Vec<f64> {
        let p = self.dim();
        let mut out = Vec::with_capacity(p + 1);
        for opposite in 0..=p {
            let facet: Vec<&Vec<f64>> = self
                .vertices
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != opposite)
                .map(|(_, v)| v)
                .collect();
            let base = facet[0];
            // normal: orthogonal to the facet span, unit response at the
            // opposite vertex; p×p solve keeps this dimension-generic
            let mut sys = vec![0.0; p * p];
            let mut rhs = vec![0.0; p];
            for (row, f) in facet.iter().enumerate().skip(1) {
                for j in 0..p {
                    sys[(row - 1) * p + j] = f[j] - base[j];
                }
            }
            for j in 0..p {
                sys[(p - 1) * p + j] = self.vertices[opposite][j] - base[j];
            }
            rhs[p - 1] = 1.0;
            let n = linalg::solve(&sys, &rhs).expect("non-degenerate simplex facet");
            let nn = linalg::norm(&n);
            let mut signed = 0.0;
            for j in 0..p {
                signed += n[j] * (q[j] - base[j]);
            }
            out.push(signed / nn);
        }
        out
    }

    /// Distance to the boundary for interior points, negative outside.
    pub fn margin(&self, q: &[f64]) -> f64 {
        self.facet_margins(q).into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn determinant(m: &[f64], p: usize) -> f64 {
    match p {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => {
            // expansion along the first row; fine for the tiny p used here
            let mut acc = 0.0;
            for j in 0..p {
                let mut minor = Vec::with_capacity((p - 1) * (p - 1));
                for r in 1..p {
                    for c in 0..p {
                        if c != j {
                            minor.push(m[r * p + c]);
                        }
                    }
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * m[j] * determinant(&minor, p - 1);
            }
            acc
        }
    }
}

fn factorial(p: usize) -> f64 {
    (1..=p).product::<usize>() as f64
}

/// A continuous piecewise-affine function on a Kuhn triangulation of a cube
/// grid. Pieces agree on shared faces because they interpolate shared
/// vertices; evaluation uses the order-statistics form of Kuhn interpolation
/// rather than a simplex search.
#[derive(Debug, Clone)]
pub struct PiecewiseAffine {
    pub simplices: Vec<Simplex>,
    pub pieces: Vec<AffineFunction>,
    pub holder_constant: f64,
    pub holder_exponent: f64,
    origin: Vec<f64>,
    step: f64,
    cells_per_axis: usize,
    vertex_values: Vec<f64>,
}

impl PiecewiseAffine {
    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn grid_step(&self) -> f64 {
        self.step
    }

    fn vertex_strides(&self) -> Vec<usize> {
        let verts = self.cells_per_axis + 1;
        let p = self.dim();
        let mut s = vec![1usize; p];
        for j in 1..p {
            s[j] = s[j - 1] * verts;
        }
        s
    }

    fn vertex_value(&self, idx: &[usize]) -> f64 {
        let strides = self.vertex_strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.vertex_values[flat]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let p = self.dim();
        let last = self.cells_per_axis - 1;
        let mut cell = vec![0usize; p];
        let mut local = vec![0.0; p];
        for j in 0..p {
            let t = (x[j] - self.origin[j]) / self.step;
            let c = (t.floor().max(0.0) as usize).min(last);
            cell[j] = c;
            local[j] = (t - c as f64).clamp(0.0, 1.0);
        }
        // walk axes in decreasing local coordinate: Kuhn interpolation
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| local[b].partial_cmp(&local[a]).unwrap());
        let mut corner = cell.clone();
        let mut value = self.vertex_value(&corner);
        for &axis in &order {
            let prev = self.vertex_value(&corner);
            corner[axis] += 1;
            let next = self.vertex_value(&corner);
            value += (next - prev) * local[axis];
        }
        value
    }

    /// Structural checks: positive simplex volumes and continuity across
    /// facet midpoints.
    pub fn validate(&self) -> Result<(), HolderError> {
        let p = self.dim();
        let min_volume = self.step.powi(p as i32) / factorial(p) * 0.5;
        for (s, piece) in self.simplices.iter().zip(&self.pieces) {
            if s.volume() < min_volume {
                return Err(HolderError::BadParameter(format!(
                    "degenerate simplex of volume {:e}",
                    s.volume()
                )));
            }
            // the global evaluator and the local affine piece must agree on
            // the simplex, including facet midpoints shared with neighbours
            let centroid = centroid_of(&s.vertices);
            let targets = std::iter::once(centroid).chain((0..=p).map(|skip| {
                let kept: Vec<&Vec<f64>> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| v)
                    .collect();
                centroid_of_refs(&kept)
            }));
            for q in targets {
                let direct = piece.eval(&q);
                let global = self.eval(&q);
                if (direct - global).abs() > 1e-9 {
                    return Err(HolderError::BadParameter(format!(
                        "face discontinuity {:e}",
                        (direct - global).abs()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn centroid_of(vertices: &[Vec<f64>]) -> Vec<f64> {
    let p = vertices[0].len();
    let mut c = vec![0.0; p];
    for v in vertices {
        for j in 0..p {
            c[j] += v[j] / vertices.len() as f64;
        }
    }
    c
}

fn centroid_of_refs(vertices: &[&Vec<f64>]) -> Vec<f64> {
    let p = vertices[0].len();
    let mut c = vec![0.0; p];
    for v in vertices {
        for j in 0..p {
            c[j] += v[j] / vertices.len() as f64;
        }
    }
    c
}

impl ScalarField for PiecewiseAffine {
    fn dim(&self) -> usize {
        self.origin.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

fn permutations(p: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: &mut Vec<usize>, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(current.clone());
            return;
        }
        for i in 0..remaining.len() {
            let v = remaining.remove(i);
            current.push(v);
            rec(remaining, current, out);
            current.pop();
            remaining.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..p).collect(), &mut Vec::new(), &mut out);
    out
}

/// Interpolates `f` on a Kuhn triangulation of the cube `origin + [0,extent]^p`
/// with simplices of diameter ≤ about `mesh`, certifies the interpolant below
/// `c_target`, and perturbs vertex values (within the spare Hölder budget)
/// wherever a piece would otherwise be constant.
pub fn pwa_approximate<F: ScalarField + ?Sized>(
    f: &F,
    origin: &[f64],
    extent: f64,
    mesh: f64,
    c_target: f64,
    alpha: f64,
) -> Result<PiecewiseAffine, HolderError> {
    let p = origin.len();
    if !(mesh > 0.0) || !(extent > 0.0) || !(alpha > 0.0 && alpha <= 1.0) || !(c_target > 0.0) {
        return Err(HolderError::BadParameter(
            "mesh, extent, c_target must be positive and alpha in (0,1]".into(),
        ));
    }
    // mesh bounds the simplex diameter h·√p
    let cells = ((extent * (p as f64).sqrt() / mesh).ceil() as usize).max(1);
    if (cells + 1).pow(p as u32) > 20_000_000 {
        return Err(HolderError::BadParameter(format!(
            "mesh {mesh} produces {} vertices",
            (cells + 1).pow(p as u32)
        )));
    }
    let step = extent / cells as f64;
    let verts = cells + 1;
    let total_vertices = verts.pow(p as u32);

    let mut strides = vec![1usize; p];
    for j in 1..p {
        strides[j] = strides[j - 1] * verts;
    }
    let vertex_point = |flat: usize| -> Vec<f64> {
        let mut rem = flat;
        let mut x = vec![0.0; p];
        for j in 0..p {
            let i = rem % verts;
            rem /= verts;
            x[j] = origin[j] + i as f64 * step;
        }
        x
    };

    let base_values: Vec<f64> = (0..total_vertices)
        .map(|flat| f.value(&vertex_point(flat)))
        .collect();

    // measured constant of the raw interpolant; also the pre-check on f's
    // own certificate budget
    let build = |values: Vec<f64>| -> PiecewiseAffine {
        build_pwa(
            origin.to_vec(),
            step,
            cells,
            values,
            c_target,
            alpha,
        )
    };
    let raw = build(base_values.clone());
    let cert = holder_certify(
        &raw,
        &BoxSampler::new(origin.to_vec(), extent),
        c_target,
        alpha,
        20_000,
        0xF11,
    );
    if cert.max_ratio >= c_target {
        return Err(HolderError::CertificationFailure {
            ratio: cert.max_ratio,
            target: c_target,
        });
    }

    let constant_pieces = |pwa: &PiecewiseAffine| -> Vec<usize> {
        pwa.pieces
            .iter()
            .enumerate()
            .filter(|(_, piece)| piece.lipschitz < 1e-12)
            .map(|(i, _)| i)
            .collect()
    };

    let mut result = raw;
    let offenders = constant_pieces(&result);
    if !offenders.is_empty() {
        // checkerboard bump on the vertices of constant pieces, inside the
        // spare budget mesh^alpha·(c_target − certified)/4
        let budget = mesh.powf(alpha) * (c_target - cert.max_ratio) / 4.0;
        let mut amp = budget / 2.0;
        let mut fixed = false;
        for _ in 0..4 {
            let mut values = base_values.clone();
            let mut touched = vec![false; total_vertices];
            for &pi in &offenders {
                for v in &result.simplices[pi].vertices {
                    let mut flat = 0usize;
                    for j in 0..p {
                        let i = ((v[j] - origin[j]) / step).round() as usize;
                        flat += i.min(verts - 1) * strides[j];
                    }
                    touched[flat] = true;
                }
            }
            for (flat, t) in touched.iter().enumerate() {
                if !t {
                    continue;
                }
                let mut rem = flat;
                let mut parity = 0usize;
                for _ in 0..p {
                    parity += rem % verts;
                    rem /= verts;
                }
                values[flat] += if parity % 2 == 0 { amp } else { -amp };
            }
            let candidate = build(values);
            if constant_pieces(&candidate).is_empty() {
                result = candidate;
                fixed = true;
                break;
            }
            amp *= 0.5;
        }
        if !fixed {
            return Err(HolderError::BadParameter(
                "could not remove constant pieces within the perturbation budget".into(),
            ));
        }
    }

    Ok(result)
}

fn build_pwa(
    origin: Vec<f64>,
    step: f64,
    cells: usize,
    vertex_values: Vec<f64>,
    holder_constant: f64,
    holder_exponent: f64,
) -> PiecewiseAffine {
    let p = origin.len();
    let verts = cells + 1;
    let mut strides = vec![1usize; p];
    for j in 1..p {
        strides[j] = strides[j - 1] * verts;
    }
    let perms = permutations(p);

    let mut simplices = Vec::new();
    let mut pieces = Vec::new();
    let mut cube = vec![0usize; p];
    loop {
        let corner: Vec<f64> = cube
            .iter()
            .zip(&origin)
            .map(|(c, o)| o + *c as f64 * step)
            .collect();
        for perm in &perms {
            let mut vertices = vec![corner.clone()];
            let mut idx = cube.clone();
            let mut vals = vec![{
                let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                vertex_values[flat]
            }];
            for &axis in perm {
                idx[axis] += 1;
                let mut v = vertices.last().unwrap().clone();
                v[axis] += step;
                vertices.push(v);
                let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                vals.push(vertex_values[flat]);
            }
            let mut gradient = vec![0.0; p];
            for (i, &axis) in perm.iter().enumerate() {
                gradient[axis] = (vals[i + 1] - vals[i]) / step;
            }
            let offset = vals[0] - linalg::dot(&gradient, &vertices[0]);
            simplices.push(Simplex { vertices });
            pieces.push(AffineFunction::new(gradient, offset));
        }
        let mut axis = 0;
        loop {
            if axis == p {
                return PiecewiseAffine {
                    simplices,
                    pieces,
                    holder_constant,
                    holder_exponent,
                    origin,
                    step,
                    cells_per_axis: cells,
                    vertex_values,
                };
            }
            cube[axis] += 1;
            if cube[axis] < cells {
                break;
            }
            cube[axis] = 0;
            axis += 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TranslationAdjustOptions {
    /// Cap on |u|.
    pub bound: f64,
    /// Word depth of the attractor point sample.
    pub word_depth: u32,
    /// Required interior clearance; defaults to the sampling resolution.
    pub margin: Option<f64>,
}

impl Default for TranslationAdjustOptions {
    fn default() -> Self {
        Self {
            bound: 0.05,
            word_depth: 8,
            margin: None,
        }
    }
}

/// Outcome of a translation search: the chosen u and, per simplex, the best
/// interior margin among sampled attractor points (negative infinity when the
/// translated simplex captures no sample).
#[derive(Debug, Clone)]
pub struct TranslationAdjustment {
    pub u: Vec<f64>,
    pub per_simplex_margin: Vec<f64>,
    pub candidates_tried: usize,
    pub uncovered_points: usize,
}

/// Searches for a small translation u making every simplex non-boundary at
/// the sampling resolution: each translated simplex either holds a sampled
/// attractor point well inside, or holds none at all.
pub fn translation_adjust(
    pwa: &PiecewiseAffine,
    system: &SimilaritySystem,
    budget: usize,
    seed: u64,
    opts: &TranslationAdjustOptions,
) -> Result<TranslationAdjustment, HolderError> {
    let points = sample_attractor_points(system, opts.word_depth)
        .map_err(|e| HolderError::BadParameter(format!("attractor sampling failed: {e}")))?;
    let ball = system
        .bounding_ball()
        .map_err(|e| HolderError::BadParameter(format!("bounding ball failed: {e}")))?;
    let resolution = system.max_ratio().powi(opts.word_depth as i32) * 2.0 * ball.radius;
    let margin_req = opts.margin.unwrap_or(resolution);
    let p = pwa.dim();

    let evaluate = |u: &[f64]| -> (usize, Vec<f64>, usize) {
        let mut per_simplex = vec![f64::NEG_INFINITY; pwa.simplices.len()];
        let mut uncovered = 0usize;
        let mut shifted = vec![0.0; p];
        for q in &points {
            for j in 0..p {
                shifted[j] = q[j] + u[j];
            }
            let mut covered = false;
            for (si, s) in pwa.simplices.iter().enumerate() {
                let m = s.margin(&shifted);
                if m >= 0.0 {
                    covered = true;
                }
                if m > per_simplex[si] {
                    per_simplex[si] = m;
                }
            }
            if !covered {
                uncovered += 1;
            }
        }
        let violations = per_simplex
            .iter()
            .filter(|&&m| m >= 0.0 && m <= margin_req)
            .count();
        (violations, per_simplex, uncovered)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec<f64>, Vec<f64>, usize)> = None;
    let mut tried = 0usize;
    for attempt in 0..=budget {
        let u: Vec<f64> = if attempt == 0 {
            vec![0.0; p]
        } else {
            (0..p)
                .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * opts.bound)
                .collect()
        };
        if linalg::norm(&u) > opts.bound {
            continue;
        }
        tried += 1;
        let (violations, per_simplex, uncovered) = evaluate(&u);
        if violations == 0 {
            return Ok(TranslationAdjustment {
                u,
                per_simplex_margin: per_simplex,
                candidates_tried: tried,
                uncovered_points: uncovered,
            });
        }
        let better = match &best {
            None => true,
            Some((bv, ..)) => violations < *bv,
        };
        if better {
            best = Some((violations, u, per_simplex, uncovered));
        }
    }
    let (violations, ..) = best.expect("at least the zero candidate was tried");
    Err(HolderError::AdjustExhausted {
        budget,
        violations,
    })
}

fn sample_attractor_points(
    system: &SimilaritySystem,
    depth: u32,
) -> Result<Vec<Vec<f64>>, IfsError> {
    let ball = system.bounding_ball()?;
    let mut pts = vec![ball.center.clone()];
    for _ in 0..depth {
        if pts.len() * system.maps.len() > 400_000 {
            break;
        }
        pts = pts
            .iter()
            .flat_map(|q| system.maps.iter().map(move |m| m.apply(q)))
            .collect();
    }
    Ok(pts)
}
