//! Composition g = φ_{n,m} ∘ h of the zig-zag function with an affine map.
//!
//! When h ranges in [0,1], the composite stays within 1/m of h in sup norm,
//! and it is 1-Hölder-α_{n,m} whenever h is 1-Lipschitz; these two facts make
//! the composites dense perturbations with large level sets.

use super::phi::phi_eval;
use super::{AffineFunction, AuxiliaryFunction};
use crate::field::ScalarField;

/// g(x) = φ_{n,m}(h(x)), evaluated at a digit depth chosen from a tolerance.
#[derive(Debug, Clone)]
pub struct ComposedPhi {
    pub aux: AuxiliaryFunction,
    pub h: AffineFunction,
    pub depth: u32,
}

impl ComposedPhi {
    pub fn eval(&self, x: &[f64]) -> f64 {
        phi_eval(&self.aux, self.h.eval(x), self.depth).0
    }

    /// Certified bound on the evaluation error, m^{-depth}.
    pub fn eval_error(&self) -> f64 {
        (self.aux.m as f64).powi(-(self.depth as i32))
    }
}

impl ScalarField for ComposedPhi {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Builds φ_{n,m} ∘ h with the evaluation depth chosen so the certified
/// error bound sits below `tol`.
pub fn compose(aux: AuxiliaryFunction, h: AffineFunction, tol: f64) -> ComposedPhi {
    let depth = aux.depth_for_tolerance(tol).max(aux.default_depth());
    ComposedPhi { aux, h, depth }
}
