//! Scalar fields: real-valued functions on R^p evaluated pointwise.

/// A real-valued function on R^p. All implementations are pure: the same
/// input always produces the same output, so fields can be shared across
/// worker threads.
pub trait ScalarField: Sync {
    /// Ambient dimension of the domain.
    fn dim(&self) -> usize;

    /// Evaluates the field at `x` (`x.len() == self.dim()`).
    fn value(&self, x: &[f64]) -> f64;
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
}

/// Wraps a closure as a field; handy in tests and experiment plumbing.
pub struct ClosureField<F: Fn(&[f64]) -> f64 + Sync> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ClosureField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarField for ClosureField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}
