//! Quantiles, expectiles and Huber quantiles of samples and of log-normal laws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::roots::Bisection;
use crate::scalar::Scalar;
use crate::scoring::{cap_pos, check_level, ScoreParams};

/// A nonempty, immutable set of finite observations.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSample<T> {
    sorted: Vec<T>,
}

impl<T: Scalar> EmpiricalSample<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample value"));
        }
        let mut sorted = values;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalSample { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Values in ascending order.
    pub fn sorted(&self) -> &[T] {
        &self.sorted
    }

    pub fn min(&self) -> T {
        self.sorted[0]
    }

    pub fn max(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn mean(&self) -> T {
        crate::scalar::pairwise_mean(&self.sorted).expect("nonempty")
    }

    /// Empirical CDF `#{y <= x} / n`.
    pub fn cdf(&self, x: T) -> T {
        self.fraction(self.sorted.partition_point(|&v| v <= x))
    }

    /// Left limit of the empirical CDF, `#{y < x} / n`.
    pub fn cdf_left(&self, x: T) -> T {
        self.fraction(self.sorted.partition_point(|&v| v < x))
    }

    fn fraction(&self, count: usize) -> T {
        T::from_usize(count).unwrap() / T::from_usize(self.len()).unwrap()
    }
}

/// Smallest order statistic whose empirical CDF reaches `tau` (no interpolation).
pub fn empirical_quantile<T: Scalar>(s: &EmpiricalSample<T>, tau: T) -> Result<T> {
    check_level(tau)?;
    let n = T::from_usize(s.len()).unwrap();
    // smallest k (1-based) with k/n >= tau
    let (mut lo, mut hi) = (1, s.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if T::from_usize(mid).unwrap() / n >= tau {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(s.sorted[lo - 1])
}

/// Root interval of a set-valued Huber quantile and the point reported for it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuberQuantileEstimate<T> {
    /// Midpoint of `[lower, upper]`.
    pub value: T,
    pub lower: T,
    pub upper: T,
}

fn check_caps<T: Scalar>(a: T, b: T) -> Result<()> {
    for (name, cap) in [("a", a), ("b", b)] {
        if cap.is_nan() || cap < T::zero() {
            return Err(Error::invalid(format!("cap {name} must be nonnegative, got {cap}")));
        }
    }
    Ok(())
}

/// Balance function of the sample: capped overshoots weighted by `1 - tau`
/// minus capped shortfalls weighted by `tau`. Nondecreasing in `x`.
fn balance<T: Scalar>(values: &[T], tau: T, a: T, b: T, x: T) -> T {
    let mut over = T::zero();
    let mut under = T::zero();
    for &y in values {
        over += cap_pos(x - y, b);
        under += cap_pos(y - x, a);
    }
    (T::one() - tau) * over - tau * under
}

/// Huber quantile of a sample. Caps may be zero or `+inf` here.
pub fn empirical_huber_quantile<T: Scalar>(
    s: &EmpiricalSample<T>,
    tau: T,
    a: T,
    b: T,
) -> Result<HuberQuantileEstimate<T>> {
    check_level(tau)?;
    check_caps(a, b)?;
    let g = |x: T| balance(&s.sorted, tau, a, b, x);
    let bisect = Bisection::default();
    let lower = bisect.lower_root(g, s.min(), s.max())?;
    let upper = bisect.upper_root(g, s.min(), s.max())?.max(lower);
    Ok(HuberQuantileEstimate { value: lower + (upper - lower) / T::two(), lower, upper })
}

/// Expectile of a sample, the uncapped Huber quantile.
pub fn empirical_expectile<T: Scalar>(s: &EmpiricalSample<T>, tau: T) -> Result<T> {
    Ok(empirical_huber_quantile(s, tau, T::infinity(), T::infinity())?.value)
}

impl<T: Scalar> EmpiricalSample<T> {
    pub fn quantile(&self, tau: T) -> Result<T> {
        empirical_quantile(self, tau)
    }

    pub fn expectile(&self, tau: T) -> Result<T> {
        empirical_expectile(self, tau)
    }

    pub fn huber_quantile(&self, p: &ScoreParams<T>) -> Result<T> {
        Ok(empirical_huber_quantile(self, p.tau(), p.a(), p.b())?.value)
    }
}

/// Log-normal law: `log Y ~ N(mu, sigma^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams<T> {
    pub mu: T,
    pub sigma: T,
}

/// Which functional to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    Quantile,
    Expectile,
    Huber,
}

impl std::str::FromStr for FunctionalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quantile" => Ok(FunctionalKind::Quantile),
            "expectile" => Ok(FunctionalKind::Expectile),
            "huber" => Ok(FunctionalKind::Huber),
            other => Err(Error::invalid(format!("unknown functional kind {other:?}"))),
        }
    }
}

/// A functional together with its level (and caps, used only for `Huber`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalRequest<T> {
    pub kind: FunctionalKind,
    pub params: ScoreParams<T>,
}

impl<T: Scalar> FunctionalRequest<T> {
    /// Evaluates the functional on a sample.
    pub fn on_sample(&self, s: &EmpiricalSample<T>) -> Result<T> {
        let tau = self.params.tau();
        match self.kind {
            FunctionalKind::Quantile => empirical_quantile(s, tau),
            FunctionalKind::Expectile => empirical_expectile(s, tau),
            FunctionalKind::Huber => s.huber_quantile(&self.params),
        }
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf<T: Scalar>(z: T) -> T {
    let z = z.to_f64_lossy();
    T::lit(0.5 * libm::erfc(-z / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn std_normal_pdf<T: Scalar>(z: T) -> T {
    (-(z * z) / T::two()).exp() / (T::TAU()).sqrt()
}

// The integrand mass on the normal scale is negligible outside this window.
const Z_SPAN: f64 = 38.5;

impl<T: Scalar> LogNormalParams<T> {
    pub fn new(mu: T, sigma: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite("log-normal mu"));
        }
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::invalid(format!("log-normal sigma must be positive, got {sigma}")));
        }
        Ok(LogNormalParams { mu, sigma })
    }

    pub fn median(&self) -> T {
        self.mu.exp()
    }

    pub fn mean(&self) -> T {
        (self.mu + self.sigma * self.sigma / T::two()).exp()
    }

    fn z_of(&self, x: T) -> T {
        (x.ln() - self.mu) / self.sigma
    }

    fn value_at(&self, z: T) -> T {
        (self.mu + self.sigma * z).exp()
    }

    /// Density and CDF at `x > 0`.
    pub fn eval(&self, x: T) -> Result<(T, T)> {
        lognormal_eval(self, x)
    }

    /// `n` independent draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.value_at(T::lit(z))
            })
            .collect()
    }

    fn z_window(&self) -> (T, T) {
        (T::lit(-Z_SPAN), self.sigma.max(T::zero()) + T::lit(Z_SPAN))
    }

    /// `E[min((Y - x)_+, a)]` by quadrature on the normal scale.
    pub fn expected_shortfall_capped(&self, x: T, a: T, quad: &Quadrature) -> Result<T> {
        let (z_lo, z_hi) = self.z_window();
        let clamp = |z: T| z.max(z_lo).min(z_hi);
        let z_start = if x > T::zero() { clamp(self.z_of(x)) } else { z_lo };
        let z_cap = if a.is_finite() { clamp(self.z_of(x + a)) } else { z_hi };
        let body = quad.integrate(|z| (self.value_at(z) - x).max(T::zero()) * std_normal_pdf(z), z_start, z_cap)?;
        let tail = if a.is_finite() {
            quad.integrate(|z| a * std_normal_pdf(z), z_cap, z_hi)?
        } else {
            T::zero()
        };
        Ok(body + tail)
    }

    /// `E[min((x - Y)_+, b)]` by quadrature on the normal scale.
    pub fn expected_overshoot_capped(&self, x: T, b: T, quad: &Quadrature) -> Result<T> {
        if x <= T::zero() {
            return Ok(T::zero());
        }
        let (z_lo, z_hi) = self.z_window();
        let clamp = |z: T| z.max(z_lo).min(z_hi);
        let z_end = clamp(self.z_of(x));
        let z_cap = if b.is_finite() && x - b > T::zero() { clamp(self.z_of(x - b)) } else { z_lo };
        let body = quad.integrate(|z| (x - self.value_at(z)).max(T::zero()) * std_normal_pdf(z), z_cap, z_end)?;
        let tail = if z_cap > z_lo {
            quad.integrate(|z| b * std_normal_pdf(z), z_lo, z_cap)?
        } else {
            T::zero()
        };
        Ok(body + tail)
    }
}

/// Density and CDF of a log-normal law at `x > 0`.
pub fn lognormal_eval<T: Scalar>(d: &LogNormalParams<T>, x: T) -> Result<(T, T)> {
    if !(x.is_finite() && x > T::zero()) {
        return Err(Error::invalid(format!("log-normal evaluated at non-positive {x}")));
    }
    let z = d.z_of(x);
    let density = (-(z * z) / T::two()).exp() / (x * d.sigma * T::TAU().sqrt());
    Ok((density, std_normal_cdf(z)))
}

/// Exact maximum-likelihood fit (variance denominator `n`).
pub fn lognormal_fit_mle<T: Scalar>(s: &EmpiricalSample<T>) -> Result<LogNormalParams<T>> {
    if s.len() < 2 {
        return Err(Error::invalid("log-normal fit needs at least two observations"));
    }
    if s.min() <= T::zero() {
        return Err(Error::invalid("log-normal fit needs strictly positive observations"));
    }
    let logs: Vec<T> = s.sorted().iter().map(|v| v.ln()).collect();
    let mu = crate::scalar::pairwise_mean(&logs).unwrap();
    let dev: Vec<T> = logs.iter().map(|&l| (l - mu) * (l - mu)).collect();
    let sigma = crate::scalar::pairwise_mean(&dev).unwrap().sqrt();
    LogNormalParams::new(mu, sigma)
}

/// Quantile, expectile or Huber quantile of a log-normal law.
pub fn distribution_huber_quantile<T: Scalar>(
    d: &LogNormalParams<T>,
    req: &FunctionalRequest<T>,
) -> Result<T> {
    distribution_functional_with(d, req, &Quadrature::default())
}

pub fn distribution_functional_with<T: Scalar>(
    d: &LogNormalParams<T>,
    req: &FunctionalRequest<T>,
    quad: &Quadrature,
) -> Result<T> {
    let tau = req.params.tau();
    let bisect = Bisection::default();
    let spread = T::lit(10.0) * d.sigma;
    let (mut lo, mut hi) = ((d.mu - spread).exp(), (d.mu + spread).exp());

    match req.kind {
        FunctionalKind::Quantile => {
            let g = |x: T| std_normal_cdf(d.z_of(x)) - tau;
            bisect.lower_root(g, lo, hi)
        }
        FunctionalKind::Expectile | FunctionalKind::Huber => {
            let (a, b) = match req.kind {
                FunctionalKind::Huber => (req.params.a(), req.params.b()),
                _ => (T::infinity(), T::infinity()),
            };
            let mut failure = None;
            let mut g = |x: T| {
                let over = d.expected_overshoot_capped(x, b, quad);
                let under = d.expected_shortfall_capped(x, a, quad);
                match (over, under) {
                    (Ok(o), Ok(u)) => (T::one() - tau) * o - tau * u,
                    (Err(e), _) | (_, Err(e)) => {
                        failure.get_or_insert(e);
                        T::nan()
                    }
                }
            };
            for _ in 0..60 {
                if g(lo) <= T::zero() {
                    break;
                }
                lo = lo * (-d.sigma).exp();
            }
            for _ in 0..60 {
                if g(hi) >= T::zero() {
                    break;
                }
                hi = hi * d.sigma.exp();
            }
            let root = bisect.lower_root(&mut g, lo, hi);
            match failure {
                Some(e) => Err(e),
                None => root,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> EmpiricalSample<f64> {
        EmpiricalSample::new(v.to_vec()).unwrap()
    }

    /// Enumerates sample points satisfying `F(x-) <= tau <= F(x)`.
    fn quantile_members(s: &EmpiricalSample<f64>, tau: f64) -> Vec<f64> {
        s.sorted()
            .iter()
            .copied()
            .filter(|&x| s.cdf_left(x) <= tau && tau <= s.cdf(x))
            .collect()
    }

    #[test]
    fn empirical_quantile_examples() {
        let s = sample(&[3.0, 0.0, 2.0, 1.0]);
        assert_eq!(empirical_quantile(&s, 0.5).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&s, 0.9).unwrap(), 3.0);
        assert_eq!(quantile_members(&s, 0.9), vec![3.0]);
        assert_eq!(quantile_members(&s, 0.5)[0], 1.0);
        let c = sample(&[2.5; 7]);
        for tau in [0.01, 0.5, 0.99] {
            assert_eq!(empirical_quantile(&c, tau).unwrap(), 2.5);
        }
        // 3/10 == 0.3 exactly; a ceil(n*tau) rule would pick the 4th value
        let ten = sample(&(0..10).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(empirical_quantile(&ten, 0.3).unwrap(), 2.0);
    }

    #[test]
    fn empty_and_non_finite_samples_rejected() {
        assert!(EmpiricalSample::<f64>::new(vec![]).is_err());
        assert!(EmpiricalSample::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn empirical_expectile_examples() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        assert!((empirical_expectile(&s, 0.6).unwrap() - 1.7).abs() < 1e-9);
        assert!((empirical_expectile(&s, 0.5).unwrap() - 1.5).abs() < 1e-9);
        assert!(empirical_expectile(&sample(&[-1.0, 1.0]), 0.5).unwrap().abs() < 1e-9);
    }

    #[test]
    fn expectile_grid_scan_oracle() {
        // sign change of the defining residual on a dense grid
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        let resid = |x: f64| {
            let up: f64 = s.sorted().iter().map(|&y| (y - x).max(0.0)).sum();
            let down: f64 = s.sorted().iter().map(|&y| (x - y).max(0.0)).sum();
            0.6 * up - 0.4 * down
        };
        let grid: Vec<f64> = (0..=30000).map(|i| i as f64 * 1e-4).collect();
        let cross = grid.windows(2).find(|w| resid(w[0]) > 0.0 && resid(w[1]) <= 0.0).unwrap();
        assert!((cross[1] - 1.7).abs() <= 1e-4);
    }

    #[test]
    fn empirical_huber_examples() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        let h = empirical_huber_quantile(&s, 0.6, 0.5, 0.4).unwrap();
        // root of 0.4 * 0.8 = 0.6 * ((2 - x) + 0.5)  =>  x = 2.5 - 0.32 / 0.6
        assert!((h.value - (2.5 - 0.32 / 0.6)).abs() < 1e-9);
        assert!((h.value - 1.9667).abs() < 1e-4);
        let m = empirical_huber_quantile(&s, 0.5, f64::INFINITY, f64::INFINITY).unwrap();
        assert!((m.value - 1.5).abs() < 1e-9);
        let sym = empirical_huber_quantile(&sample(&[-1.0, 1.0]), 0.5, 1.0, 1.0).unwrap();
        assert!(sym.value.abs() < 1e-9);
    }

    #[test]
    fn huber_grid_argmin_oracle() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        let p = ScoreParams::new(0.6, 0.5, 0.4).unwrap();
        let mean_score = |x: f64| s.sorted().iter().map(|&y| p.score(x, y)).sum::<f64>();
        let (best, _) = (0..=30000)
            .map(|i| i as f64 * 1e-4)
            .map(|x| (x, mean_score(x)))
            .fold((0.0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        let h = empirical_huber_quantile(&s, 0.6, 0.5, 0.4).unwrap().value;
        assert!((best - h).abs() <= 1e-4);
    }

    #[test]
    fn zero_caps_yield_full_interval() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        let h = empirical_huber_quantile(&s, 0.3, 0.0, 0.0).unwrap();
        assert_eq!((h.lower, h.upper, h.value), (0.0, 3.0, 1.5));
        assert!(empirical_huber_quantile(&s, 0.3, -1.0, 0.0).is_err());
    }

    #[test]
    fn flat_root_interval_midpoint() {
        // n * tau integer with tiny caps: every x in (1, 2) balances
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        let h = empirical_huber_quantile(&s, 0.5, 1e-9, 1e-9).unwrap();
        assert!(h.lower < 1.0 + 1e-8 && h.upper > 2.0 - 1e-8);
        assert!((h.value - 1.5).abs() < 1e-8);
    }

    #[test]
    fn lognormal_eval_examples() {
        let d = LogNormalParams::<f64>::new(-0.063, 0.534).unwrap();
        let (_, c) = d.eval(d.median()).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
        let (_, c1) = d.eval((d.mu + d.sigma).exp()).unwrap();
        assert!((c1 - 0.841_344_746_068_543).abs() < 1e-12);
        assert!(d.eval(0.0).is_err());
        assert!(d.eval(-1.0).is_err());
        let total = Quadrature::default()
            .integrate(|u: f64| d.eval(u.exp()).unwrap().0 * u.exp(), -12.0, 12.0)
            .unwrap();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lognormal_mle_edge_cases() {
        let e = std::f64::consts::E;
        assert!(lognormal_fit_mle(&sample(&[e, e, e])).is_err());
        assert!(lognormal_fit_mle(&sample(&[1.0])).is_err());
        assert!(lognormal_fit_mle(&sample(&[1.0, 0.0])).is_err());
        let fit = lognormal_fit_mle(&sample(&[1.0, e * e])).unwrap();
        assert!((fit.mu - 1.0).abs() < 1e-15 && (fit.sigma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lognormal_mle_recovers_parameters() {
        let d = LogNormalParams::<f64>::new(-0.063, 0.534).unwrap();
        let s = EmpiricalSample::new(d.sample(100_000, 11)).unwrap();
        let fit = lognormal_fit_mle(&s).unwrap();
        assert!((fit.mu + 0.063).abs() < 0.01);
        assert!((fit.sigma - 0.534).abs() < 0.01);
    }

    /// Closed-form partial expectations of the log-normal, independent of the quadrature.
    fn partial_upper(d: &LogNormalParams<f64>, k: f64) -> f64 {
        // E[(Y - k)_+]
        let z = (k.ln() - d.mu) / d.sigma;
        d.mean() * std_normal_cdf(d.sigma - z) - k * std_normal_cdf(-z)
    }

    #[test]
    fn capped_expectations_match_closed_form() {
        let d = LogNormalParams::new(-0.063, 0.534).unwrap();
        let q = Quadrature::default();
        for &(x, c) in &[(0.5, 0.4), (0.94, 0.5), (2.0, 1.0), (0.9, f64::INFINITY)] {
            let under = d.expected_shortfall_capped(x, c, &q).unwrap();
            let exact = if c.is_finite() {
                partial_upper(&d, x) - partial_upper(&d, x + c)
            } else {
                partial_upper(&d, x)
            };
            assert!((under - exact).abs() < 1e-9, "x={x} c={c}: {under} vs {exact}");
            // E[(x - Y)_+] = x - E[Y] + E[(Y - x)_+]
            let over_exact = if c.is_finite() && x - c > 0.0 {
                (x - d.mean() + partial_upper(&d, x)) - (x - c - d.mean() + partial_upper(&d, x - c))
            } else {
                x - d.mean() + partial_upper(&d, x)
            };
            let over = d.expected_overshoot_capped(x, c, &q).unwrap();
            assert!((over - over_exact).abs() < 1e-9, "x={x} c={c}: {over} vs {over_exact}");
        }
    }

    #[test]
    fn distribution_functional_examples() {
        let d = LogNormalParams::new(-0.063, 0.534).unwrap();
        let req = |kind, tau: f64, a: f64, b: f64| FunctionalRequest {
            kind,
            params: ScoreParams::new(tau, a, b).unwrap(),
        };
        let inf = f64::INFINITY;
        let median = distribution_huber_quantile(&d, &req(FunctionalKind::Quantile, 0.5, inf, inf)).unwrap();
        assert!((median - (-0.063f64).exp()).abs() < 1e-9);
        assert!((median - 0.939).abs() < 1e-3);
        let mean = distribution_huber_quantile(&d, &req(FunctionalKind::Expectile, 0.5, inf, inf)).unwrap();
        assert!((mean - d.mean()).abs() < 1e-8);
        let e7 = distribution_huber_quantile(&d, &req(FunctionalKind::Expectile, 0.7, inf, inf)).unwrap();
        let h7 = distribution_huber_quantile(&d, &req(FunctionalKind::Huber, 0.7, 1e6, 1e6)).unwrap();
        assert!((e7 - h7).abs() < 1e-6);
        let q3 = distribution_huber_quantile(&d, &req(FunctionalKind::Quantile, 0.3, inf, inf)).unwrap();
        let z = statrs::distribution::ContinuousCDF::inverse_cdf(
            &statrs::distribution::Normal::standard(),
            0.3,
        );
        assert!((q3 - (d.mu + d.sigma * z).exp()).abs() < 1e-8);
    }
}
