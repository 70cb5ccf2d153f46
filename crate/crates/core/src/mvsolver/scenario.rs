//! Two mean-variance agents under a Value-at-Risk ceiling, with a continuous
//! Gamma(2,1) aggregate (the sum of two independent unit exponentials).
//!
//! Every rule considered here is piecewise affine in `s`, so its first two
//! moments under the density `s e^{-s}` come from the incomplete-gamma
//! identity `int_x^inf t^n e^{-t} dt = n! e^{-x} sum_{j<=n} x^j / j!`. The
//! reported optima are cross-checked against adaptive Simpson quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_min;
use crate::probspace::GammaAggregate;

/// Quadrature is truncated here; the Gamma(2,1) tail mass beyond is ~1e-33.
const TAIL_CUTOFF: f64 = 80.0;
const QUAD_TOL: f64 = 1e-8;
const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarScenario {
    pub delta1: f64,
    pub delta2: f64,
    /// VaR confidence level.
    pub level: f64,
    /// VaR ceiling imposed on each share.
    pub ceiling: f64,
}

impl Default for VarScenario {
    fn default() -> Self {
        Self { delta1: 0.01, delta2: 1.0, level: 0.95, ceiling: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    lo: f64,
    hi: f64,
    alpha: f64,
    beta: f64,
}

/// A piecewise-affine function of `s` on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRule {
    pieces: Vec<Piece>,
}

/// `int_x^inf t^n e^{-t} dt`.
fn upper_gamma_int(n: u32, x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut fact = 1.0;
    for j in 1..=n {
        term *= x / j as f64;
        sum += term;
        fact *= j as f64;
    }
    fact * (-x).exp() * sum
}

fn partial_moment(n: u32, lo: f64, hi: f64) -> f64 {
    upper_gamma_int(n, lo) - upper_gamma_int(n, hi)
}

fn gamma_cdf(x: f64) -> f64 {
    GammaAggregate.cdf(x)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!("no convergence on [{a}, {b}] (error estimate {delta:e})")));
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    // start from a few panels so narrow features are not skipped
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson(&f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 50)?;
    }
    Ok(total)
}

impl AffineRule {
    /// Samples `f` inside each interval between consecutive `breaks` (the
    /// last one open-ended); `f` must be affine on each interval.
    pub fn from_fn(breaks: &[f64], f: impl Fn(f64) -> f64) -> Self {
        let mut b: Vec<f64> = breaks.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
        b.push(0.0);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b.push(f64::INFINITY);
        let pieces = b
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let (x1, x2) = if hi.is_finite() {
                    (lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0)
                } else {
                    (lo + 1.0, lo + 2.0)
                };
                let beta = (f(x2) - f(x1)) / (x2 - x1);
                Piece { lo, hi, alpha: f(x1) - beta * x1, beta }
            })
            .collect();
        Self { pieces }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let p = self
            .pieces
            .iter()
            .find(|p| s < p.hi)
            .unwrap_or_else(|| self.pieces.last().expect("nonempty rule"));
        p.alpha + p.beta * s
    }

    /// `s - g(s)`.
    pub fn complement(&self) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { alpha: -p.alpha, beta: 1.0 - p.beta, ..*p })
                .collect(),
        }
    }

    /// `(E[g(S)], E[g(S)^2])` in closed form.
    pub fn moments(&self) -> (f64, f64) {
        self.pieces.iter().fold((0.0, 0.0), |(m1, m2), p| {
            let (i1, i2, i3) = (
                partial_moment(1, p.lo, p.hi),
                partial_moment(2, p.lo, p.hi),
                partial_moment(3, p.lo, p.hi),
            );
            (
                m1 + p.alpha * i1 + p.beta * i2,
                m2 + p.alpha * p.alpha * i1 + 2.0 * p.alpha * p.beta * i2 + p.beta * p.beta * i3,
            )
        })
    }

    /// The same moments by adaptive quadrature, piece by piece.
    pub fn moments_by_quadrature(&self) -> Result<(f64, f64)> {
        let mut m = (0.0, 0.0);
        for p in &self.pieces {
            let hi = p.hi.min(TAIL_CUTOFF);
            let g = |s: f64| p.alpha + p.beta * s;
            m.0 += adaptive_simpson(|s| g(s) * s * (-s).exp(), p.lo, hi, QUAD_TOL)?;
            m.1 += adaptive_simpson(|s| g(s) * g(s) * s * (-s).exp(), p.lo, hi, QUAD_TOL)?;
        }
        Ok(m)
    }

    pub fn variance(&self) -> f64 {
        let (m1, m2) = self.moments();
        m2 - m1 * m1
    }

    /// `P(g(S) <= t)`.
    pub fn prob_le(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let (lo, hi) = if p.beta == 0.0 {
                    if p.alpha <= t { (p.lo, p.hi) } else { return 0.0 }
                } else {
                    let thr = (t - p.alpha) / p.beta;
                    if p.beta > 0.0 { (p.lo, p.hi.min(thr)) } else { (p.lo.max(thr), p.hi) }
                };
                if hi > lo { gamma_cdf(hi) - gamma_cdf(lo) } else { 0.0 }
            })
            .sum()
    }

    /// Smallest value the rule takes, `-inf` if it decreases without bound.
    pub fn infimum(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                if p.hi.is_finite() {
                    (p.alpha + p.beta * p.lo).min(p.alpha + p.beta * p.hi)
                } else if p.beta < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    p.alpha + p.beta * p.lo
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Parameters of the comonotonic family searched for the restricted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComonotonicParams {
    /// Offset of the interior slope segment below `q`.
    pub m: f64,
    /// Level where agent 1's share is held below `q`.
    pub cap: f64,
    /// Offset of the proportional segment beyond `q`.
    pub m_tail: f64,
}

/// Two states straddling `q` where agent 1's share rises and agent 2's falls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingWitness {
    pub s1: f64,
    pub s2: f64,
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioValues {
    pub unconstrained: f64,
    pub constrained: f64,
    pub comonotonic: f64,
    pub autarky: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioFeasibility {
    pub constrained: bool,
    pub comonotonic: bool,
    pub autarky: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarScenarioReport {
    pub params: VarScenario,
    pub lambda: f64,
    /// VaR of the aggregate at the scenario level.
    pub q: f64,
    pub m_star: f64,
    pub a: f64,
    pub r: f64,
    pub values: ScenarioValues,
    pub unconstrained_closed_form: f64,
    pub comonotonic_params: ComonotonicParams,
    /// Jumps `X_i(q+) - X_i(q-)` of the constrained optimum.
    pub jump_x1: f64,
    pub jump_x2: f64,
    pub witness: CrossingWitness,
    /// VaR of each unit-exponential endowment.
    pub autarky_var: f64,
    pub feasible: ScenarioFeasibility,
    /// `unconstrained < constrained < comonotonic < autarky`.
    pub ordering_holds: bool,
    /// Largest gap between closed-form and quadrature objective values.
    pub quadrature_gap: f64,
}

impl VarScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 > 0.0 && self.delta2 > 0.0) {
            return Err(Error::Domain("risk aversions must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Domain(format!("VaR level {} outside (0,1)", self.level)));
        }
        if !(self.ceiling > 0.0 && self.ceiling.is_finite()) {
            return Err(Error::Domain("ceiling must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.delta1 / (self.delta1 + self.delta2)
    }

    pub fn q(&self) -> Result<f64> {
        GammaAggregate.quantile(self.level)
    }

    /// `E[S] + delta_1 Var(X_1) + delta_2 Var(S - X_1)` for `X_1 = g(S)`.
    pub fn objective(&self, x1: &AffineRule) -> f64 {
        GammaAggregate.mean() + self.delta1 * x1.variance() + self.delta2 * x1.complement().variance()
    }

    fn objective_by_quadrature(&self, x1: &AffineRule) -> Result<f64> {
        let var = |r: &AffineRule| -> Result<f64> {
            let (m1, m2) = r.moments_by_quadrature()?;
            Ok(m2 - m1 * m1)
        };
        Ok(GammaAggregate.mean() + self.delta1 * var(x1)? + self.delta2 * var(&x1.complement())?)
    }

    /// Agent 1's share under the four-regime rule with offset `m`: zero, then
    /// the proportional slope, then pinned at the ceiling up to `q`, then the
    /// proportional slope again beyond `q`.
    pub fn constrained_rule(&self, m: f64, q: f64) -> AffineRule {
        let lam = self.lambda();
        let c = self.ceiling;
        let a = m / (1.0 - lam);
        let r = (c + m) / (1.0 - lam);
        AffineRule::from_fn(&[a, r, q], |s| {
            if s <= a {
                0.0
            } else if s <= r {
                (1.0 - lam) * s - m
            } else if s <= q {
                c
            } else {
                (1.0 - lam) * s - m
            }
        })
    }

    /// Agent 1's share under a continuous nondecreasing rule with slopes in
    /// `[0, 1]`: the proportional segment held at `cap` below `q`, then beyond
    /// `q` the smaller of "agent 1 takes everything" and a proportional
    /// segment with offset `m_tail`.
    pub fn comonotonic_rule(&self, p: ComonotonicParams, q: f64) -> AffineRule {
        let lam = self.lambda();
        let below = |s: f64| ((1.0 - lam) * s - p.m).max(0.0).min(p.cap);
        let gq = below(q);
        let t0 = p.m / (1.0 - lam);
        let t1 = (p.cap + p.m) / (1.0 - lam);
        let t2 = (gq + p.m_tail) / (1.0 - lam);
        let t3 = (q - gq - p.m_tail) / lam;
        // superfluous breaks are harmless: the rule is affine between any of them
        AffineRule::from_fn(&[t0, t1, q, t2, t3], move |s| {
            if s <= q {
                below(s)
            } else {
                (gq + s - q).min(gq.max((1.0 - lam) * s - p.m_tail))
            }
        })
    }

    fn var_feasible(&self, x1: &AffineRule) -> bool {
        let x2 = x1.complement();
        x1.infimum() >= -1e-12
            && x2.infimum() >= -1e-12
            && x1.prob_le(self.ceiling + 1e-12) >= self.level - 1e-12
            && x2.prob_le(self.ceiling + 1e-12) >= self.level - 1e-12
    }
}

/// Solves the scenario: closed-form benchmark values, the constrained optimum
/// over the four-regime family (offset recovered by golden-section search),
/// and the best rule in the comonotonic family (nested golden-section
/// searches).
pub fn var_scenario(params: &VarScenario) -> Result<VarScenarioReport> {
    params.validate()?;
    let lam = params.lambda();
    let c = params.ceiling;
    let q = params.q()?;
    let var_s = GammaAggregate.variance();
    let mean_s = GammaAggregate.mean();

    let unconstrained_closed_form =
        mean_s + (params.delta1 * (1.0 - lam).powi(2) + params.delta2 * lam * lam) * var_s;
    let uncon_rule = AffineRule::from_fn(&[], |s| (1.0 - lam) * s);
    let unconstrained = params.objective(&uncon_rule);
    // each endowment is a unit exponential: mean 1, variance 1
    let autarky = mean_s + params.delta1 + params.delta2;
    let autarky_var = -(1.0 - params.level).ln();

    let m_hi = (1.0 - lam) * q - c;
    if m_hi <= 0.0 {
        return Err(Error::Domain(format!(
            "ceiling {c} leaves no room for the four-regime rule below q = {q}"
        )));
    }
    let (m_star, constrained) = golden_min(|m| params.objective(&params.constrained_rule(m, q)), 0.0, m_hi, 1e-10);
    let best_rule = params.constrained_rule(m_star, q);

    // comonotonic family: cap in [q - C, C] keeps both VaRs at most C
    if q - c > c {
        return Err(Error::Domain("no comonotonic rule meets both VaR ceilings".into()));
    }
    let eval = |p: ComonotonicParams| params.objective(&params.comonotonic_rule(p, q));
    let m_max = c - lam * q;
    let inner = |cap: f64, m: f64| golden_min(|mt| eval(ComonotonicParams { m, cap, m_tail: mt }), -2.0, 6.0, 1e-7);
    let middle = |cap: f64| golden_min(|m| inner(cap, m).1, 0.0, m_max, 1e-7);
    let (cap, comonotonic) = golden_min(|k| middle(k).1, q - c, c, 1e-7);
    let (m_c, _) = middle(cap);
    let (m_tail, _) = inner(cap, m_c);
    let comonotonic_params = ComonotonicParams { m: m_c, cap, m_tail };
    let como_rule = params.comonotonic_rule(comonotonic_params, q);

    let mut quadrature_gap: f64 = 0.0;
    for (rule, value) in [(&uncon_rule, unconstrained), (&best_rule, constrained), (&como_rule, comonotonic)] {
        let check = params.objective_by_quadrature(rule)?;
        quadrature_gap = quadrature_gap.max((check - value).abs());
    }
    if quadrature_gap > CROSS_CHECK_TOL {
        return Err(Error::Quadrature(format!(
            "closed-form and quadrature objectives differ by {quadrature_gap:e}"
        )));
    }

    let x1_at = |s: f64| best_rule.eval(s);
    let jump_x1 = ((1.0 - lam) * q - m_star) - c;
    let (s1, s2) = (0.5 * ((c + m_star) / (1.0 - lam) + q), q + 0.5);
    let witness = CrossingWitness {
        s1,
        s2,
        x1: (x1_at(s1), x1_at(s2)),
        x2: (s1 - x1_at(s1), s2 - x1_at(s2)),
    };
    let values = ScenarioValues { unconstrained, constrained, comonotonic, autarky };
    Ok(VarScenarioReport {
        params: *params,
        lambda: lam,
        q,
        m_star,
        a: m_star / (1.0 - lam),
        r: (c + m_star) / (1.0 - lam),
        values,
        unconstrained_closed_form,
        comonotonic_params,
        jump_x1,
        jump_x2: -jump_x1,
        witness,
        autarky_var,
        feasible: ScenarioFeasibility {
            constrained: params.var_feasible(&best_rule),
            comonotonic: params.var_feasible(&como_rule),
            autarky: autarky_var <= c,
        },
        ordering_holds: unconstrained < constrained && constrained < comonotonic && comonotonic < autarky,
        quadrature_gap,
    })
}

impl VarScenarioReport {
    /// `(X_1, X_2)` of the constrained optimum at aggregate level `s`.
    pub fn constrained_shares(&self, s: f64) -> (f64, f64) {
        let x1 = self.params.constrained_rule(self.m_star, self.q).eval(s);
        (x1, s - x1)
    }

    /// `(X_1, X_2)` of the best comonotonic rule at aggregate level `s`.
    pub fn comonotonic_shares(&self, s: f64) -> (f64, f64) {
        let x1 = self.params.comonotonic_rule(self.comonotonic_params, self.q).eval(s);
        (x1, s - x1)
    }
}
