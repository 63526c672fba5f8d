//! Sampled Hölder certificates.
//!
//! A certificate records the largest observed ratio |Δf| / |Δx|^α over a
//! seeded set of point pairs with distances stratified across dyadic scale
//! octaves, so both the coarse and the vanishing-separation regimes of the
//! composite bounds get exercised. A certificate documents a sampling run;
//! it never proves the global Hölder property.

use crate::field::ScalarField;
use crate::ifs::SimilaritySystem;
use crate::linalg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of dyadic scale octaves pairs are spread over.
const SCALE_OCTAVES: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCertificate {
    /// The claimed Hölder constant the run was checked against.
    pub constant: f64,
    pub exponent: f64,
    pub sample_count: u64,
    /// Largest |f(x)−f(y)| / |x−y|^exponent over the sampled pairs.
    pub max_ratio: f64,
    pub seed: u64,
}

impl HolderCertificate {
    /// Whether the sampled check passed (max_ratio within the constant).
    pub fn passes(&self) -> bool {
        self.max_ratio <= self.constant
    }
}

/// Produces seeded point pairs at a requested separation scale.
pub trait DomainSampler: Sync {
    fn dim(&self) -> usize;
    /// An upper bound on the domain diameter; octave scales divide it.
    fn diameter(&self) -> f64;
    /// A pair with separation roughly inside [lo, hi]; the exact distance is
    /// recomputed by the caller.
    fn sample_pair(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>);
}

/// Uniform sampling over an axis-aligned cube.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    pub origin: Vec<f64>,
    pub extent: f64,
}

impl BoxSampler {
    pub fn new(origin: Vec<f64>, extent: f64) -> Self {
        Self { origin, extent }
    }

    pub fn unit_interval() -> Self {
        Self::new(vec![0.0], 1.0)
    }

    fn clamp_into(&self, x: &mut [f64]) {
        for (xi, oi) in x.iter_mut().zip(&self.origin) {
            *xi = xi.clamp(*oi, *oi + self.extent);
        }
    }
}

impl DomainSampler for BoxSampler {
    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn diameter(&self) -> f64 {
        self.extent * (self.dim() as f64).sqrt()
    }

    fn sample_pair(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.dim();
        let x: Vec<f64> = self
            .origin
            .iter()
            .map(|o| o + rng.gen::<f64>() * self.extent)
            .collect();
        let d = lo + rng.gen::<f64>() * (hi - lo);
        let mut dir = vec![0.0; p];
        loop {
            for v in dir.iter_mut() {
                *v = rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            let norm = linalg::norm(&dir);
            if norm > 1e-12 {
                for v in dir.iter_mut() {
                    *v /= norm;
                }
                break;
            }
        }
        let mut y: Vec<f64> = x.iter().zip(&dir).map(|(xi, u)| xi + d * u).collect();
        self.clamp_into(&mut y);
        (x, y)
    }
}

/// Pairs of near-attractor points: a shared random word prefix contracts the
/// separation to the requested scale, two independent deep suffixes land the
/// points inside that cylinder.
pub struct AttractorSampler {
    system: SimilaritySystem,
    center: Vec<f64>,
    diameter: f64,
    tail_depth: u32,
}

impl AttractorSampler {
    pub fn new(system: &SimilaritySystem) -> Result<Self, crate::ifs::IfsError> {
        let ball = system.bounding_ball()?;
        Ok(Self {
            system: system.clone(),
            center: ball.center,
            diameter: (2.0 * ball.radius).max(f64::MIN_POSITIVE),
            tail_depth: 12,
        })
    }

    fn random_point_in_cylinder(&self, rng: &mut ChaCha8Rng, prefix: &[usize]) -> Vec<f64> {
        let mut x = self.center.clone();
        for _ in 0..self.tail_depth {
            let i = rng.gen_range(0..self.system.maps.len());
            x = self.system.maps[i].apply(&x);
        }
        for &i in prefix.iter().rev() {
            x = self.system.maps[i].apply(&x);
        }
        x
    }
}

impl DomainSampler for AttractorSampler {
    fn dim(&self) -> usize {
        self.system.ambient_dim
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }

    fn sample_pair(&self, rng: &mut ChaCha8Rng, _lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let mut prefix = Vec::new();
        let mut ratio = 1.0;
        while ratio * self.diameter > hi && prefix.len() < 48 {
            let i = rng.gen_range(0..self.system.maps.len());
            ratio *= self.system.maps[i].ratio;
            prefix.push(i);
        }
        let x = self.random_point_in_cylinder(rng, &prefix);
        let y = self.random_point_in_cylinder(rng, &prefix);
        (x, y)
    }
}

/// Runs the seeded, stratified Hölder check of `f` against constant `c` and
/// exponent `alpha`. Deterministic given the seed: each pair draws from its
/// own counter-derived stream, and the reduction is a max.
pub fn holder_certify<F: ScalarField + ?Sized, S: DomainSampler + ?Sized>(
    f: &F,
    sampler: &S,
    c: f64,
    alpha: f64,
    pairs: u64,
    seed: u64,
) -> HolderCertificate {
    let diam = sampler.diameter();
    let max_ratio = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + 1);
            let octave = i % SCALE_OCTAVES;
            let hi = diam * 0.5f64.powi(octave as i32);
            let lo = hi * 0.5;
            let (x, y) = sampler.sample_pair(&mut rng, lo, hi);
            let d = linalg::dist(&x, &y);
            if d == 0.0 {
                return 0.0;
            }
            (f.value(&x) - f.value(&y)).abs() / d.powf(alpha)
        })
        .reduce(|| 0.0, f64::max);
    HolderCertificate {
        constant: c,
        exponent: alpha,
        sample_count: pairs,
        max_ratio,
        seed,
    }
}
