//! Risk measures in the loss convention: larger is worse.
//!
//! Expected Shortfall is the upper tail average
//! `ES_a(X) = 1/(1-a) * integral_a^1 VaR_u(X) du`, evaluated exactly on atoms
//! with the boundary atom split in proportion to the tail mass it contributes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probspace::RandomVariable;

/// Convex piecewise-linear load `alpha (x-R)^+ + (beta-alpha)(x-R-B)^+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    #[serde(with = "crate::real")]
    pub alpha: f64,
    #[serde(with = "crate::real")]
    pub beta: f64,
    #[serde(with = "crate::real")]
    pub retention: f64,
    #[serde(with = "crate::real")]
    pub width: f64,
}

impl Ladder {
    pub fn new(alpha: f64, beta: f64, retention: f64, width: f64) -> Result<Self> {
        let l = Self { alpha, beta, retention, width };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.alpha && self.alpha <= self.beta && self.width >= 0.0) {
            return Err(Error::Domain(format!(
                "ladder needs 0 <= alpha <= beta and width >= 0, got {self:?}"
            )));
        }
        if !self.retention.is_finite() || !self.beta.is_finite() || !self.width.is_finite() {
            return Err(Error::Domain("ladder parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.alpha * (x - self.retention).max(0.0)
            + (self.beta - self.alpha) * (x - self.retention - self.width).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMeasureSpec {
    Var {
        #[serde(with = "crate::real")]
        alpha: f64,
    },
    Es {
        #[serde(with = "crate::real")]
        alpha: f64,
    },
    MeanVariance {
        #[serde(with = "crate::real")]
        delta: f64,
    },
    ExpectedConvexLoss {
        ladder: Ladder,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CxConsistency {
    Consistent,
    NotConsistent,
}

impl RiskMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RiskMeasureSpec::Var { alpha } | RiskMeasureSpec::Es { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Domain(format!("level {alpha} outside (0,1)")));
                }
            }
            RiskMeasureSpec::MeanVariance { delta } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::Domain(format!("risk aversion {delta} must be positive")));
                }
            }
            RiskMeasureSpec::ExpectedConvexLoss { ladder } => ladder.validate()?,
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &RandomVariable) -> Result<f64> {
        self.validate()?;
        match *self {
            RiskMeasureSpec::Var { alpha } => var(x, alpha),
            RiskMeasureSpec::Es { alpha } => es(x, alpha),
            RiskMeasureSpec::MeanVariance { delta } => mean_variance(x, delta),
            RiskMeasureSpec::ExpectedConvexLoss { ladder } => Ok(expected_convex_loss(x, &ladder)),
        }
    }

    pub fn cx_consistency(&self) -> CxConsistency {
        cx_consistency_flag(self)
    }

    pub fn name(&self) -> String {
        match *self {
            RiskMeasureSpec::Var { alpha } => format!("VaR({alpha})"),
            RiskMeasureSpec::Es { alpha } => format!("ES({alpha})"),
            RiskMeasureSpec::MeanVariance { delta } => format!("MV({delta})"),
            RiskMeasureSpec::ExpectedConvexLoss { .. } => "E[phi]".to_string(),
        }
    }
}

/// Lower `alpha`-quantile.
pub fn var(x: &RandomVariable, alpha: f64) -> Result<f64> {
    x.quantile(alpha)
}

pub fn es(x: &RandomVariable, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("ES level {alpha} outside (0,1)")));
    }
    let tail = 1.0 - alpha;
    let points = x.distribution();
    let mut remaining = tail;
    let mut acc = 0.0;
    for &(v, p) in points.points().iter().rev() {
        if remaining <= 0.0 {
            break;
        }
        let take = p.min(remaining);
        acc += take * v;
        remaining -= take;
    }
    // float shortfall in the accumulated mass is taken at the minimum
    if remaining > 0.0 {
        acc += remaining * points.points()[0].0;
    }
    Ok(acc / tail)
}

pub fn mean_variance(x: &RandomVariable, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("risk aversion {delta} must be positive")));
    }
    let (m, v) = x.moments();
    Ok(m + delta * v)
}

pub fn expected_convex_loss(x: &RandomVariable, ladder: &Ladder) -> f64 {
    x.expect(|v| ladder.eval(v))
}

pub fn cx_consistency_flag(spec: &RiskMeasureSpec) -> CxConsistency {
    match spec {
        RiskMeasureSpec::Var { .. } => CxConsistency::NotConsistent,
        _ => CxConsistency::Consistent,
    }
}
