//! McShane extension: extends sampled values to a c-Hölder-α function on all
//! of R^p by infimal convolution g(x) = min_i (v_i + c·|x − p_i|^α).
//!
//! When the samples themselves satisfy the pairwise c-Hölder-α condition the
//! extension reproduces every sample value exactly and is globally
//! c-Hölder-α.

use super::HolderError;
use crate::field::ScalarField;
use crate::linalg;

#[derive(Debug, Clone)]
pub struct McShaneExtension {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    c: f64,
    alpha: f64,
}

impl McShaneExtension {
    /// Builds the extension after checking pairwise consistency. An exact
    /// boundary pair |Δv| = c·d^α is admitted (tiny relative slack absorbs
    /// the floating-point comparison).
    pub fn new(
        samples: &[(Vec<f64>, f64)],
        c: f64,
        alpha: f64,
    ) -> Result<Self, HolderError> {
        if samples.is_empty() {
            return Err(HolderError::BadParameter("no samples".into()));
        }
        if !(c >= 0.0) || !(alpha > 0.0 && alpha <= 1.0) {
            return Err(HolderError::BadParameter(format!(
                "need c >= 0 and alpha in (0,1], got c={c}, alpha={alpha}"
            )));
        }
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                let d = linalg::dist(&samples[i].0, &samples[j].0);
                let dv = (samples[i].1 - samples[j].1).abs();
                let bound = c * d.powf(alpha);
                if dv > bound * (1.0 + 1e-12) + 1e-15 {
                    return Err(HolderError::InconsistentSamples {
                        c,
                        alpha,
                        i,
                        j,
                        dv,
                        bound,
                    });
                }
            }
        }
        Ok(Self {
            points: samples.iter().map(|(p, _)| p.clone()).collect(),
            values: samples.iter().map(|(_, v)| *v).collect(),
            c,
            alpha,
        })
    }

    pub fn eval(&self, query: &[f64]) -> f64 {
        // a query coinciding with a sample point returns that value exactly
        let mut best = f64::INFINITY;
        for (p, &v) in self.points.iter().zip(&self.values) {
            let d = linalg::dist(p, query);
            if d == 0.0 {
                return v;
            }
            best = best.min(v + self.c * d.powf(self.alpha));
        }
        best
    }
}

impl ScalarField for McShaneExtension {
    fn dim(&self) -> usize {
        self.points[0].len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// One-shot form: builds the extension and evaluates it at `query`.
pub fn mcshane_extend(
    samples: &[(Vec<f64>, f64)],
    c: f64,
    alpha: f64,
    query: &[f64],
) -> Result<f64, HolderError> {
    Ok(McShaneExtension::new(samples, c, alpha)?.eval(query))
}
