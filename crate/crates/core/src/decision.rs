//! Binary invest/refrain rule with capped gains and losses.
//!
//! An amount `theta` buys an asset later sold at `y`; the investor buys iff
//! the prediction `x > theta`. Losses are capped at `b` and reduced by the
//! deduction rate `r_l`; gains are capped at `a` and taxed at `r_g`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::PredictionSet;
use crate::scalar::Scalar;
use crate::scoring::{cap_pos, ScoreParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecisionPolicy<T> {
    pub theta: T,
    #[serde(with = "crate::scalar::serde_extended")]
    pub a: T,
    #[serde(with = "crate::scalar::serde_extended")]
    pub b: T,
    pub r_l: T,
    pub r_g: T,
}

fn check_rate<T: Scalar>(name: &str, r: T) -> Result<()> {
    if r >= T::zero() && r < T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("rate {name} must lie in [0, 1), got {r}")))
    }
}

// written as a ratio of the two net fractions so equal rates give exactly 1/2
fn level<T: Scalar>(r_l: T, r_g: T) -> T {
    let (keep_l, keep_g) = (T::one() - r_l, T::one() - r_g);
    keep_g / (keep_l + keep_g)
}

/// Level implied by the deduction and tax rates: `(1 - r_g) / (2 - r_l - r_g)`.
pub fn tau_from_rates<T: Scalar>(r_l: T, r_g: T) -> Result<T> {
    check_rate("r_L", r_l)?;
    check_rate("r_G", r_g)?;
    Ok(level(r_l, r_g))
}

impl<T: Scalar> DecisionPolicy<T> {
    pub fn new(theta: T, a: T, b: T, r_l: T, r_g: T) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("investment threshold"));
        }
        check_rate("r_L", r_l)?;
        check_rate("r_G", r_g)?;
        // reuse the cap validation of the scoring parameters
        ScoreParams::new(T::half(), a, b)?;
        Ok(DecisionPolicy { theta, a, b, r_l, r_g })
    }

    pub fn tau(&self) -> T {
        level(self.r_l, self.r_g)
    }

    /// Scoring parameters whose elementary score at `theta` is proportional to the regret.
    pub fn score_params(&self) -> ScoreParams<T> {
        ScoreParams::new(self.tau(), self.a, self.b).expect("validated policy")
    }

    /// `2 - r_l - r_g`, the factor between regret and elementary score.
    pub fn regret_scale(&self) -> T {
        T::two() - self.r_l - self.r_g
    }

    pub fn invests(&self, x: T) -> bool {
        x > self.theta
    }
}

/// Realized monetary payoff of the rule.
pub fn payoff<T: Scalar>(x: T, y: T, pol: &DecisionPolicy<T>) -> T {
    if !pol.invests(x) {
        T::zero()
    } else if y <= pol.theta {
        -(T::one() - pol.r_l) * cap_pos(pol.theta - y, pol.b)
    } else {
        (T::one() - pol.r_g) * cap_pos(y - pol.theta, pol.a)
    }
}

/// Opportunity loss relative to perfect foresight.
pub fn regret<T: Scalar>(x: T, y: T, pol: &DecisionPolicy<T>) -> T {
    match (pol.invests(x), y > pol.theta) {
        (true, false) => (T::one() - pol.r_l) * cap_pos(pol.theta - y, pol.b),
        (false, true) => (T::one() - pol.r_g) * cap_pos(y - pol.theta, pol.a),
        _ => T::zero(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecisionRow<T> {
    pub id: usize,
    pub prediction: T,
    pub observation: T,
    pub invest: bool,
    pub payoff: T,
    pub regret: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PortfolioTotals<T> {
    pub policy: DecisionPolicy<T>,
    pub tau: T,
    pub total_payoff: T,
    pub total_regret: T,
    pub invested: usize,
    pub refrained: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioOutcome<T> {
    pub rows: Vec<DecisionRow<T>>,
    pub totals: PortfolioTotals<T>,
}

/// Applies the rule row by row and aggregates payoffs and regrets.
pub fn simulate_portfolio<T: Scalar>(ps: &PredictionSet<T>, pol: &DecisionPolicy<T>) -> PortfolioOutcome<T> {
    let rows: Vec<DecisionRow<T>> = ps
        .ids()
        .iter()
        .zip(ps.predictions().iter().zip(ps.observations()))
        .map(|(&id, (&x, &y))| DecisionRow {
            id,
            prediction: x,
            observation: y,
            invest: pol.invests(x),
            payoff: payoff(x, y, pol),
            regret: regret(x, y, pol),
        })
        .collect();
    let payoffs: Vec<T> = rows.iter().map(|r| r.payoff).collect();
    let regrets: Vec<T> = rows.iter().map(|r| r.regret).collect();
    let invested = rows.iter().filter(|r| r.invest).count();
    let totals = PortfolioTotals {
        policy: *pol,
        tau: pol.tau(),
        total_payoff: crate::scalar::pairwise_sum(&payoffs),
        total_regret: crate::scalar::pairwise_sum(&regrets),
        invested,
        refrained: rows.len() - invested,
    };
    PortfolioOutcome { rows, totals }
}

impl<T: Scalar> PortfolioOutcome<T> {
    /// `id,prediction,observation,decision,payoff,regret`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "prediction", "observation", "decision", "payoff", "regret"])?;
        for r in &self.rows {
            w.write_record([
                r.id.to_string(),
                r.prediction.to_string(),
                r.observation.to_string(),
                (if r.invest { "invest" } else { "refrain" }).to_string(),
                r.payoff.to_string(),
                r.regret.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn totals_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.totals)?)
    }
}
