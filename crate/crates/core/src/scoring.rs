//! Pointwise scoring functions of the Huber quantile family.
//!
//! All scores are negatively oriented and take the prediction `x` first and
//! the observation `y` second. Caps `a` (underprediction, `y > x`) and `b`
//! (overprediction, `x > y`) may be `+inf`, in which case the corresponding
//! side is uncapped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Level and caps of a Huber quantile scoring function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScoreParams<T>", into = "RawScoreParams<T>")]
#[serde(bound = "T: Scalar")]
pub struct ScoreParams<T> {
    tau: T,
    a: T,
    b: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawScoreParams<T> {
    tau: T,
    #[serde(with = "crate::scalar::serde_extended")]
    a: T,
    #[serde(with = "crate::scalar::serde_extended")]
    b: T,
}

impl<T: Scalar> TryFrom<RawScoreParams<T>> for ScoreParams<T> {
    type Error = Error;
    fn try_from(raw: RawScoreParams<T>) -> Result<Self> {
        ScoreParams::new(raw.tau, raw.a, raw.b)
    }
}

impl<T: Scalar> From<ScoreParams<T>> for RawScoreParams<T> {
    fn from(p: ScoreParams<T>) -> Self {
        RawScoreParams { tau: p.tau, a: p.a, b: p.b }
    }
}

pub(crate) fn check_level<T: Scalar>(tau: T) -> Result<T> {
    if tau > T::zero() && tau < T::one() {
        Ok(tau)
    } else {
        Err(Error::invalid(format!("level tau must lie in (0, 1), got {tau}")))
    }
}

impl<T: Scalar> ScoreParams<T> {
    /// Validated constructor: `0 < tau < 1`, `a > 0`, `b > 0` (`+inf` allowed).
    pub fn new(tau: T, a: T, b: T) -> Result<Self> {
        check_level(tau)?;
        for (name, cap) in [("a", a), ("b", b)] {
            if cap.is_nan() || cap <= T::zero() {
                return Err(Error::invalid(format!("cap {name} must be positive, got {cap}")));
            }
        }
        Ok(ScoreParams { tau, a, b })
    }

    /// Uncapped parameters; the score reduces to the expectile score.
    pub fn uncapped(tau: T) -> Result<Self> {
        Self::new(tau, T::infinity(), T::infinity())
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// Unchecked hot-path evaluation of [`huber_quantile_score`].
    #[inline]
    pub fn score(&self, x: T, y: T) -> T {
        let u = x - y;
        let k = cap(u, self.a, self.b);
        asymmetry(x, y, self.tau) * (k * (T::two() * u - k))
    }

    /// Unchecked hot-path evaluation of [`score_subgradient`].
    #[inline]
    pub fn subgradient(&self, x: T, y: T) -> T {
        T::two() * asymmetry(x, y, self.tau) * cap(x - y, self.a, self.b)
    }
}

impl<T: Scalar> Default for ScoreParams<T> {
    /// Level 1/2 without caps: half the squared error.
    fn default() -> Self {
        ScoreParams { tau: T::half(), a: T::infinity(), b: T::infinity() }
    }
}

/// `|1{x >= y} - tau|`.
#[inline]
pub fn asymmetry<T: Scalar>(x: T, y: T, tau: T) -> T {
    if x >= y {
        T::one() - tau
    } else {
        tau
    }
}

/// Clamp of `t` to `[-a, b]`.
#[inline]
pub fn cap<T: Scalar>(t: T, a: T, b: T) -> T {
    t.min(b).max(-a)
}

/// Clamp of `t` to `[0, c]`.
#[inline]
pub fn cap_pos<T: Scalar>(t: T, c: T) -> T {
    t.max(T::zero()).min(c)
}

fn check_pair<T: Scalar>(x: T, y: T) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite("prediction"));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("observation"));
    }
    Ok(())
}

/// Generalized Huber score with `phi(t) = t^2`.
///
/// Evaluated as `w * k * (2(x - y) - k)` with `k` the capped residual, which
/// is algebraically identical to `w * (y^2 - (k + y)^2 + 2 x k)` but free of
/// cancellation for large `|y|`.
pub fn huber_quantile_score<T: Scalar>(x: T, y: T, p: &ScoreParams<T>) -> Result<T> {
    check_pair(x, y)?;
    Ok(p.score(x, y))
}

/// Asymmetric piecewise linear score `2 |1{x >= y} - tau| |x - y|`.
pub fn quantile_score<T: Scalar>(x: T, y: T, tau: T) -> Result<T> {
    check_pair(x, y)?;
    check_level(tau)?;
    Ok(T::two() * asymmetry(x, y, tau) * (x - y).abs())
}

/// Asymmetric squared score `|1{x >= y} - tau| (x - y)^2`.
pub fn expectile_score<T: Scalar>(x: T, y: T, tau: T) -> Result<T> {
    check_pair(x, y)?;
    check_level(tau)?;
    let u = x - y;
    Ok(asymmetry(x, y, tau) * (u * u))
}

/// Huber loss with threshold `a`: quadratic inside `|x - y| <= a`, linear beyond.
pub fn huber_loss<T: Scalar>(x: T, y: T, a: T) -> Result<T> {
    check_pair(x, y)?;
    if a.is_nan() || a <= T::zero() {
        return Err(Error::invalid(format!("Huber threshold must be positive, got {a}")));
    }
    let r = (x - y).abs();
    Ok(if r <= a { r * r / T::two() } else { a * r - a * a / T::two() })
}

/// A convex function together with one of its subgradients.
pub trait ConvexSpec<T> {
    fn phi(&self, t: T) -> T;
    fn phi_prime(&self, t: T) -> T;
}

/// `phi(t) = t^2`, the choice that yields the generalized Huber score.
#[derive(Clone, Copy, Debug, Default)]
pub struct Square;

impl<T: Scalar> ConvexSpec<T> for Square {
    fn phi(&self, t: T) -> T {
        t * t
    }
    fn phi_prime(&self, t: T) -> T {
        T::two() * t
    }
}

/// Adapter turning a pair of closures into a [`ConvexSpec`].
#[derive(Clone, Copy)]
pub struct ConvexFn<F, G> {
    pub phi: F,
    pub phi_prime: G,
}

impl<T, F: Fn(T) -> T, G: Fn(T) -> T> ConvexSpec<T> for ConvexFn<F, G> {
    fn phi(&self, t: T) -> T {
        (self.phi)(t)
    }
    fn phi_prime(&self, t: T) -> T {
        (self.phi_prime)(t)
    }
}

/// General consistent score for Huber quantiles built from a convex `phi`:
/// `w * (phi(y) - phi(k + y) + k phi'(x))`, `k` the capped residual.
pub fn generic_score<T: Scalar, C: ConvexSpec<T> + ?Sized>(
    x: T,
    y: T,
    p: &ScoreParams<T>,
    c: &C,
) -> Result<T> {
    check_pair(x, y)?;
    let k = cap(x - y, p.a, p.b);
    let phi_y = c.phi(y);
    let phi_ky = c.phi(k + y);
    let slope = c.phi_prime(x);
    if !(phi_y.is_finite() && phi_ky.is_finite() && slope.is_finite()) {
        return Err(Error::NonFinite("convex function evaluation"));
    }
    Ok(asymmetry(x, y, p.tau) * (phi_y - phi_ky + k * slope))
}

/// General consistent score for quantiles: `w * |g(x) - g(y)|`, `g` nondecreasing.
pub fn generic_quantile_score<T: Scalar, G: Fn(T) -> T>(x: T, y: T, tau: T, g: G) -> Result<T> {
    check_pair(x, y)?;
    check_level(tau)?;
    let (gx, gy) = (g(x), g(y));
    if !(gx.is_finite() && gy.is_finite()) {
        return Err(Error::NonFinite("transformation g"));
    }
    if (x < y && gx > gy) || (x > y && gx < gy) {
        return Err(Error::invalid("g must be nondecreasing"));
    }
    Ok(asymmetry(x, y, tau) * (gx - gy).abs())
}

/// Analytic subgradient in `x` of [`huber_quantile_score`]: `2 w k`.
///
/// At the tie `x == y` the capped residual is zero, so the value returned is 0.
pub fn score_subgradient<T: Scalar>(x: T, y: T, p: &ScoreParams<T>) -> T {
    p.subgradient(x, y)
}

/// Family selector for [`elementary_score`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementaryKind {
    Huber,
    Quantile,
    Expectile,
}

/// Elementary score at threshold `theta`. Nonzero only on `y <= theta < x`
/// or `x <= theta < y`. Caps are ignored for quantile and expectile kinds.
pub fn elementary_score<T: Scalar>(
    kind: ElementaryKind,
    x: T,
    y: T,
    theta: T,
    p: &ScoreParams<T>,
) -> T {
    let tau = p.tau;
    if y <= theta && theta < x {
        match kind {
            ElementaryKind::Huber => (T::one() - tau) * (theta - y).min(p.b),
            ElementaryKind::Quantile => T::one() - tau,
            ElementaryKind::Expectile => (T::one() - tau) * (theta - y).abs(),
        }
    } else if x <= theta && theta < y {
        match kind {
            ElementaryKind::Huber => tau * (y - theta).min(p.a),
            ElementaryKind::Quantile => tau,
            ElementaryKind::Expectile => tau * (theta - y).abs(),
        }
    } else {
        T::zero()
    }
}
