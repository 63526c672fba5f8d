//! The two-parameter zig-zag function φ_{n,m} and its exact evaluator.
//!
//! φ_{n,m} is the limit of piecewise-linear refinements on [0,1]: at the
//! first stage the graph zig-zags across each block [i/m, (i+1)/m] in n
//! linear pieces, rising from i/m to (i+1)/m; at each later stage every
//! linear piece is replaced by a scaled copy of the first-stage graph with
//! endpoint values kept. Values at level-k grid points i/(nm)^k are fixed
//! from stage k on, and |φ(x) − value_at_stage_k(x)| ≤ m^{-k} everywhere.
//!
//! Evaluation walks base-(nm) digits of the input with exact fixed-point
//! integer arithmetic: the digit selects a linear piece, whose endpoint value
//! and orientation are accumulated as an exact integer over m^depth. Inputs
//! are snapped to the nearest level-`depth` grid point, which keeps values
//! at grid points bitwise stable across depths while the returned bound
//! m^{-depth} still dominates the true error.

use super::{AuxiliaryFunction, HolderError};
use crate::field::ScalarField;

/// Fractional bits of the fixed-point digit accumulator. With nm ≤ 2^17 the
/// per-step product stays below 2^119.
const FRAC_BITS: u32 = 102;
const FRAC_MASK: u128 = (1u128 << FRAC_BITS) - 1;
const FRAC_HALF: u128 = 1u128 << (FRAC_BITS - 1);

/// Largest product n·m the exact evaluator supports.
pub const MAX_NM: u64 = 1 << 17;

/// Certified Hölder-α_{n,m} constant bound for the whole family. The sharp
/// constant exceeds 1 (block-boundary valley/peak pairs give
/// (2/m)^{1−α}(nm−1)^α, e.g. 5^α ≈ 1.864 for (3,2)) but stays below 2.
pub const PHI_HOLDER_BOUND: f64 = 2.0;

/// Caps depth so the value accumulator (≤ m^depth) fits in u128.
fn max_depth(m: u32) -> u32 {
    (126.0 * std::f64::consts::LN_2 / (m as f64).ln()).floor() as u32
}

/// x scaled by 2^FRAC_BITS, exactly for x with at most FRAC_BITS
/// fractional bits (all x ≥ 2^-49), rounded otherwise.
fn to_fixed(x: f64) -> u128 {
    debug_assert!((0.0..1.0).contains(&x));
    if x == 0.0 {
        return 0;
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = if raw_exp == 0 {
        bits & ((1u64 << 52) - 1)
    } else {
        (bits & ((1u64 << 52) - 1)) | (1u64 << 52)
    };
    let exp2 = if raw_exp == 0 { -1074 } else { raw_exp - 1075 };
    let shift = exp2 + FRAC_BITS as i32;
    if shift >= 0 {
        (mantissa as u128) << shift
    } else if shift > -64 {
        let s = (-shift) as u32;
        let half = 1u128 << (s - 1);
        ((mantissa as u128) + half) >> s
    } else {
        0
    }
}

/// Folds a real onto [0,1] by the even, period-2 reflection extension:
/// φ(x) = φ({x}) for even integer part and φ(1−{x}) for odd. Both the
/// absolute value and the `2 − r` branch are exact in f64.
pub fn fold_to_unit(x: f64) -> f64 {
    let ax = x.abs();
    if !ax.is_finite() {
        return f64::NAN;
    }
    let r = ax % 2.0;
    if r <= 1.0 {
        r
    } else {
        2.0 - r
    }
}

/// Evaluates φ_{n,m} at `x` with `depth` digit steps.
///
/// Returns the value together with a certified error bound: the value is the
/// exact φ of the level-`depth` grid point nearest to the (folded) input,
/// so |φ(x) − value| ≤ m^{-depth}; the bound is 0 when the input is itself
/// a grid point of level ≤ depth.
pub fn phi_eval(aux: &AuxiliaryFunction, x: f64, depth: u32) -> (f64, f64) {
    let y = fold_to_unit(x);
    if y.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    let n = aux.n;
    let m = aux.m;
    let depth = depth.clamp(1, max_depth(m));
    let err = (m as f64).powi(-(depth as i32));

    if y == 0.0 {
        return (0.0, 0.0);
    }
    if y == 1.0 {
        return (1.0, 0.0);
    }

    let nm = (n as u128) * (m as u128);
    let mut a = to_fixed(y);
    let mut digits = [0u32; 128];
    for d in digits.iter_mut().take(depth as usize) {
        a *= nm;
        *d = (a >> FRAC_BITS) as u32;
        a &= FRAC_MASK;
    }
    let exact_grid_point = a == 0;

    // snap to the nearest grid point: round the remainder, carrying upward
    if a >= FRAC_HALF {
        let mut i = depth as usize;
        loop {
            if i == 0 {
                // rounded all the way up to 1
                return (1.0, err);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < nm as u32 {
                break;
            }
            digits[i] = 0;
        }
    }

    // exact value walk: v over m^depth, orientation flips on odd positions
    let mut v: u128 = 0;
    let mut ascending = true;
    for &d in digits.iter().take(depth as usize) {
        let pos = d % n;
        let w = (d / n + (pos & 1)) as u128;
        v *= m as u128;
        if ascending {
            v += w;
        } else {
            v -= w;
        }
        if pos & 1 == 1 {
            ascending = !ascending;
        }
    }

    // reduce v / m^depth so equal rationals convert identically
    let mut den_pow = depth;
    while den_pow > 0 && v % (m as u128) == 0 {
        v /= m as u128;
        den_pow -= 1;
    }
    let value = (v as f64) / (m as f64).powi(den_pow as i32);
    (value, if exact_grid_point { 0.0 } else { err })
}

/// φ_{n,m} as a one-dimensional scalar field with a fixed digit depth.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    pub aux: AuxiliaryFunction,
    pub depth: u32,
}

impl PhiFunction {
    pub fn new(aux: AuxiliaryFunction) -> Self {
        let depth = aux.default_depth();
        Self { aux, depth }
    }

    pub fn with_depth(aux: AuxiliaryFunction, depth: u32) -> Self {
        Self { aux, depth }
    }

    pub fn eval(&self, x: f64) -> f64 {
        phi_eval(&self.aux, x, self.depth).0
    }
}

impl ScalarField for PhiFunction {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }
}

impl AuxiliaryFunction {
    /// Digit depth giving value error ≤ 1e-12 and grid snap distance small
    /// enough for certificate sampling at dyadic scales down to ~2^-80.
    pub fn default_depth(&self) -> u32 {
        let for_value = (12.0 * std::f64::consts::LN_10 / (self.m as f64).ln()).ceil() as u32;
        let for_snap =
            (80.0 * std::f64::consts::LN_2 / ((self.n * self.m) as f64).ln()).ceil() as u32;
        for_value.max(for_snap).clamp(1, max_depth(self.m))
    }

    /// Smallest depth whose certified evaluation error m^{-depth} is ≤ tol.
    pub fn depth_for_tolerance(&self, tol: f64) -> u32 {
        if !(tol > 0.0) {
            return max_depth(self.m);
        }
        let d = (-tol.ln() / (self.m as f64).ln()).ceil().max(1.0) as u32;
        d.clamp(1, max_depth(self.m))
    }
}

/// Rejects invalid (n, m) and returns the Hölder exponent
/// α_{n,m} = log m / (log n + log m).
pub fn holder_exponent(n: u32, m: u32) -> Result<f64, HolderError> {
    AuxiliaryFunction::new(n, m).map(|aux| aux.alpha())
}
