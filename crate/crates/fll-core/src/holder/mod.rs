//! Explicit Hölder-continuous function constructions: the zig-zag family
//! φ_{n,m}, affine and piecewise-affine functions, compositions, McShane
//! extensions, exponent-window parameter search, and sampled certification.

pub mod certify;
pub mod compose;
pub mod mcshane;
pub mod phi;
pub mod pwa;

pub use certify::{holder_certify, AttractorSampler, BoxSampler, DomainSampler, HolderCertificate};
pub use compose::{compose, ComposedPhi};
pub use mcshane::{mcshane_extend, McShaneExtension};
pub use phi::{fold_to_unit, holder_exponent, phi_eval, PhiFunction, PHI_HOLDER_BOUND};
pub use pwa::{pwa_approximate, translation_adjust, PiecewiseAffine, TranslationAdjustOptions};

use crate::field::ScalarField;
use crate::linalg;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HolderError {
    #[error("n must be an odd integer >= 3, got {0}")]
    BadN(u32),
    #[error("m must be an integer >= 2, got {0}")]
    BadM(u32),
    #[error("n*m = {0} exceeds the supported limit {1}")]
    ProductTooLarge(u64, u64),
    #[error("invalid exponent window: alpha={alpha}, epsilon={epsilon}")]
    BadWindow { alpha: f64, epsilon: f64 },
    #[error("no permitted pair with m <= {m_ceiling} (alpha={alpha}, epsilon={epsilon}, K={k})")]
    SearchExhausted {
        alpha: f64,
        epsilon: f64,
        k: u64,
        m_ceiling: u64,
    },
    #[error("K bound requires Hölder constant c < 1, got {0}")]
    ConstantNotContracting(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("samples violate the {c}-Hölder-{alpha} condition: points {i} and {j} have |Δv| = {dv:.6e} > c·d^α = {bound:.6e}")]
    InconsistentSamples {
        c: f64,
        alpha: f64,
        i: usize,
        j: usize,
        dv: f64,
        bound: f64,
    },
    #[error("piecewise-affine certification failed: sampled pair with ratio {ratio:.6e} >= target {target:.6e}")]
    CertificationFailure { ratio: f64, target: f64 },
    #[error("translation search exhausted after {budget} candidates; best candidate leaves {violations} simplices on the boundary")]
    AdjustExhausted { budget: usize, violations: usize },
}

/// Parameters (n, m) of the zig-zag function φ_{n,m}, with its Hölder
/// exponent α_{n,m} = log m / (log n + log m). The identity
/// n = (nm)^{1−α_{n,m}} pins the exponent to the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliaryFunction {
    pub n: u32,
    pub m: u32,
}

impl AuxiliaryFunction {
    pub fn new(n: u32, m: u32) -> Result<Self, HolderError> {
        if n < 3 || n % 2 == 0 {
            return Err(HolderError::BadN(n));
        }
        if m < 2 {
            return Err(HolderError::BadM(m));
        }
        let prod = n as u64 * m as u64;
        if prod > phi::MAX_NM {
            return Err(HolderError::ProductTooLarge(prod, phi::MAX_NM));
        }
        Ok(Self { n, m })
    }

    pub fn alpha(&self) -> f64 {
        let ln_m = (self.m as f64).ln();
        ln_m / ((self.n as f64).ln() + ln_m)
    }

    pub fn nm(&self) -> u64 {
        self.n as u64 * self.m as u64
    }
}

/// An affine function x ↦ ⟨gradient, x⟩ + offset; its Lipschitz constant is
/// the Euclidean norm of the gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub gradient: Vec<f64>,
    pub offset: f64,
    pub lipschitz: f64,
}

impl AffineFunction {
    pub fn new(gradient: Vec<f64>, offset: f64) -> Self {
        let lipschitz = linalg::norm(&gradient);
        Self {
            gradient,
            offset,
            lipschitz,
        }
    }

    pub fn validate(&self) -> Result<(), HolderError> {
        let norm = linalg::norm(&self.gradient);
        if (norm - self.lipschitz).abs() > 1e-12 {
            return Err(HolderError::BadParameter(format!(
                "lipschitz field {} does not match |gradient| = {}",
                self.lipschitz, norm
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.gradient, x) + self.offset
    }

    /// Hölder-α constant of this function over a set of diameter `diam`:
    /// affine growth M·d matched against c·d^α at the largest distance.
    pub fn holder_constant(&self, alpha: f64, diam: f64) -> f64 {
        if diam <= 0.0 {
            return 0.0;
        }
        self.lipschitz * diam.powf(1.0 - alpha)
    }
}

impl ScalarField for AffineFunction {
    fn dim(&self) -> usize {
        self.gradient.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Finds the pair (n, m) with smallest m > K (ties broken by smallest odd n)
/// whose exponent lies strictly inside (alpha + epsilon/2, alpha + epsilon).
///
/// Exponents α_{n,m} are dense in (0,1), so the search succeeds for any
/// valid window; `m_ceiling` bounds the scan defensively.
pub fn permitted_pair(
    alpha: f64,
    epsilon: f64,
    k: u64,
    m_ceiling: u64,
) -> Result<AuxiliaryFunction, HolderError> {
    if !(alpha > 0.0 && epsilon > 0.0 && alpha + epsilon < 1.0) {
        return Err(HolderError::BadWindow { alpha, epsilon });
    }
    if k < 1 {
        return Err(HolderError::BadParameter(format!(
            "K must be a positive integer, got {k}"
        )));
    }
    let lo = alpha + epsilon / 2.0;
    let hi = alpha + epsilon;
    // α_{n,m} ∈ (lo, hi) ⟺ log n / log m ∈ (1/hi − 1, 1/lo − 1)
    let exp_lo = 1.0 / hi - 1.0;
    let exp_hi = 1.0 / lo - 1.0;

    for m in (k + 1).. {
        if m > m_ceiling {
            return Err(HolderError::SearchExhausted {
                alpha,
                epsilon,
                k,
                m_ceiling,
            });
        }
        let ln_m = (m as f64).ln();
        let n_lo = (exp_lo * ln_m).exp();
        let n_hi = (exp_hi * ln_m).exp();
        if n_lo > 1e9 {
            continue;
        }
        // smallest odd n strictly above n_lo, also >= 3
        let mut n = (n_lo.floor() as u64 + 1).max(3);
        if n % 2 == 0 {
            n += 1;
        }
        while (n as f64) < n_hi {
            if n * m <= phi::MAX_NM {
                if let Ok(aux) = AuxiliaryFunction::new(n as u32, m as u32) {
                    let a = aux.alpha();
                    if a > lo && a < hi {
                        return Ok(aux);
                    }
                }
            }
            n += 2;
        }
    }
    unreachable!("unbounded range")
}

/// Smallest positive integer K splitting all pair distances between the two
/// composite Hölder bounds: below d₀ the Lipschitz-through-φ bound
/// (M·d)^{α+ε/2} ≤ d^α applies, and K is minimal so that from
/// d₁(K) = (2/(K(1−c)))^{1/α} downwards to d₀ the direct bound
/// c·d^α + 2/K ≤ d^α takes over (d₁ ≤ d₀).
pub fn k_epsilon(c: f64, alpha: f64, epsilon: f64, lipschitz: f64) -> Result<u64, HolderError> {
    if c >= 1.0 {
        return Err(HolderError::ConstantNotContracting(c));
    }
    if !(c >= 0.0) || !(alpha > 0.0) || !(epsilon > 0.0) || !(lipschitz > 0.0) {
        return Err(HolderError::BadParameter(format!(
            "need 0 <= c < 1, alpha > 0, epsilon > 0, lipschitz > 0; got c={c}, alpha={alpha}, epsilon={epsilon}, lipschitz={lipschitz}"
        )));
    }
    if alpha + epsilon / 2.0 >= 1.0 {
        return Err(HolderError::BadWindow { alpha, epsilon });
    }
    // d₀ solves M^{α+ε/2}·d₀^{ε/2} = 1
    let d0 = lipschitz.powf(-(alpha + epsilon / 2.0) * 2.0 / epsilon);
    let needed = 2.0 / ((1.0 - c) * d0.powf(alpha));
    let k = if needed.is_finite() {
        needed.ceil().max(1.0) as u64
    } else {
        return Err(HolderError::BadParameter(format!(
            "bound computation overflowed (c={c}, lipschitz={lipschitz})"
        )));
    };
    Ok(k.max(1))
}
