//! Bisection for nondecreasing functions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute tolerance on the value axis used by the functional estimators.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug)]
pub struct Bisection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Bisection {
    fn default() -> Self {
        Bisection { tol: DEFAULT_TOL, max_iter: MAX_ITER }
    }
}

impl Bisection {
    /// Approximates `inf { x in [lo, hi] : f(x) >= 0 }` for nondecreasing `f`.
    ///
    /// Returns `lo` when `f(lo) >= 0` already; errors when `f(hi) < 0`.
    pub fn lower_root<T: Scalar, F: FnMut(T) -> T>(&self, mut f: F, lo: T, hi: T) -> Result<T> {
        self.check_bracket(lo, hi)?;
        let f_lo = eval(&mut f, lo)?;
        if f_lo >= T::zero() {
            return Ok(lo);
        }
        if eval(&mut f, hi)? < T::zero() {
            return Err(Error::RootFinding(format!("no sign change on [{lo}, {hi}]")));
        }
        self.run(lo, hi, |x| Ok(eval(&mut f, x)? >= T::zero()))
    }

    /// Approximates `sup { x in [lo, hi] : f(x) <= 0 }` for nondecreasing `f`.
    pub fn upper_root<T: Scalar, F: FnMut(T) -> T>(&self, mut f: F, lo: T, hi: T) -> Result<T> {
        self.check_bracket(lo, hi)?;
        if eval(&mut f, hi)? <= T::zero() {
            return Ok(hi);
        }
        if eval(&mut f, lo)? > T::zero() {
            return Err(Error::RootFinding(format!("no sign change on [{lo}, {hi}]")));
        }
        self.run(lo, hi, |x| Ok(eval(&mut f, x)? > T::zero()))
    }

    fn check_bracket<T: Scalar>(&self, lo: T, hi: T) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::RootFinding(format!("invalid bracket [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Shrinks `[lo, hi]` keeping `goes_high(hi) == true`, `goes_high(lo) == false`.
    fn run<T: Scalar>(
        &self,
        mut lo: T,
        mut hi: T,
        mut goes_high: impl FnMut(T) -> Result<bool>,
    ) -> Result<T> {
        let tol = T::lit(self.tol);
        for _ in 0..self.max_iter {
            if hi - lo <= tol {
                break;
            }
            let mid = lo + (hi - lo) / T::two();
            if mid <= lo || mid >= hi {
                break;
            }
            if goes_high(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo + (hi - lo) / T::two())
    }
}

fn eval<T: Scalar>(f: &mut impl FnMut(T) -> T, x: T) -> Result<T> {
    let v = f(x);
    if v.is_nan() {
        Err(Error::RootFinding(format!("objective is NaN at {x}")))
    } else {
        Ok(v)
    }
}
