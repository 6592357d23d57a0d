//! Right-hand sides f(x, t) of the equation and sampled checks of the
//! structural hypotheses the solver pipeline relies on.
//!
//! Nonlinearities come from a small catalog (no expression parser); every
//! entry knows its own primitive F(x, t) = integral of f(x, .) from 0 to t,
//! its t-derivative where available, and growth/asymptotic metadata. All
//! hypothesis checks are sampled: a passing check means "verified on the
//! sample set", never a proof.

use crate::grid::{DomainSpec, FeFunction, Point};
use crate::{Error, Result};

/// |t|^{p-2} t with the removable singularity at 0 filled by 0.
pub fn phi_p(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// d/dt of `phi_p`: (p-1)|t|^{p-2}. Infinite at 0 when p < 2.
pub fn dphi_p(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        if p > 2.0 {
            0.0
        } else if p == 2.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        (p - 1.0) * t.abs().powf(p - 2.0)
    }
}

/// Catalog of admissible nonlinearities.
#[derive(Debug, Clone)]
pub enum Catalog {
    /// f = lambda |t|^{p-2} t
    Linear { lambda: f64 },
    /// f = lambda |t|^{p-2} t / (1 + |t/delta|^{p-1}); odd, bounded by
    /// lambda delta^{p-1}, slope lambda at 0
    Saturating { lambda: f64, delta: f64 },
    /// f = lambda |t|^{p-2} t - g(x)
    AffineForcing { lambda: f64, g: FeFunction },
    /// f = c, independent of t
    Constant { value: f64 },
    /// f = c |t|^{q-2} t
    OddPower { coeff: f64, exponent: f64 },
}

/// Growth bound |f(x,t)| <= c1 + c2 |t|^{q-1}.
#[derive(Debug, Clone, Copy)]
pub struct Growth {
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Asymptotic slope bound: f(x,t)/phi_p(t) <= mu for |t| > r.
#[derive(Debug, Clone, Copy)]
pub struct Asymptotic {
    pub mu: f64,
    pub r: f64,
}

/// A nonlinearity together with the exponent p of the driving operator and
/// the metadata the pipeline checks against.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    pub p: f64,
    pub catalog: Catalog,
    /// monotonicity shift M: h(x,t) = f(x,t) + M phi_p(t) is nondecreasing
    pub m_shift: f64,
    pub growth: Growth,
    pub asymptotic: Option<Asymptotic>,
    /// limit of f(x,t)/phi_p(t) as t -> 0, when it exists
    pub zero_slope: Option<f64>,
}

fn require(cond: bool, name: &'static str, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::parameter(name, msg.to_string()))
    }
}

impl NonlinearitySpec {
    pub fn linear(p: f64, lambda: f64) -> Result<Self> {
        require(p > 1.0, "p", "exponent must exceed 1")?;
        Ok(NonlinearitySpec {
            p,
            catalog: Catalog::Linear { lambda },
            m_shift: if lambda >= 0.0 { 0.0 } else { -lambda },
            growth: Growth { q: p, c1: 0.0, c2: lambda.abs() },
            asymptotic: Some(Asymptotic { mu: lambda, r: 1.0 }),
            zero_slope: Some(lambda),
        })
    }

    pub fn saturating(p: f64, lambda: f64, delta: f64) -> Result<Self> {
        require(p > 1.0, "p", "exponent must exceed 1")?;
        require(delta > 0.0, "delta", "saturation scale must be positive")?;
        require(lambda > 0.0, "lambda", "slope must be positive")?;
        // f/phi_p = lambda/(1+|t/delta|^{p-1}) falls below mu once
        // |t| > delta ((lambda-mu)/mu)^{1/(p-1)}; default mu = lambda/4
        let mu = lambda / 4.0;
        let r = delta * ((lambda - mu) / mu).powf(1.0 / (p - 1.0));
        Ok(NonlinearitySpec {
            p,
            catalog: Catalog::Saturating { lambda, delta },
            m_shift: 0.0, // f is already nondecreasing
            growth: Growth { q: p, c1: 0.0, c2: lambda },
            asymptotic: Some(Asymptotic { mu, r }),
            zero_slope: Some(lambda),
        })
    }

    pub fn affine_forcing(p: f64, lambda: f64, g: FeFunction) -> Result<Self> {
        require(p > 1.0, "p", "exponent must exceed 1")?;
        let c1 = g.max_abs();
        Ok(NonlinearitySpec {
            p,
            catalog: Catalog::AffineForcing { lambda, g },
            m_shift: if lambda >= 0.0 { 0.0 } else { -lambda },
            growth: Growth { q: p, c1, c2: lambda.abs() },
            asymptotic: Some(Asymptotic { mu: lambda, r: 1.0 }),
            zero_slope: None, // the forcing term dominates near 0
        })
    }

    pub fn constant(p: f64, value: f64) -> Result<Self> {
        require(p > 1.0, "p", "exponent must exceed 1")?;
        Ok(NonlinearitySpec {
            p,
            catalog: Catalog::Constant { value },
            m_shift: 0.0,
            growth: Growth { q: p, c1: value.abs(), c2: 0.0 },
            asymptotic: None,
            zero_slope: None,
        })
    }

    pub fn odd_power(p: f64, coeff: f64, exponent: f64) -> Result<Self> {
        require(p > 1.0, "p", "exponent must exceed 1")?;
        require(exponent > 1.0, "exponent", "growth exponent must exceed 1")?;
        Ok(NonlinearitySpec {
            p,
            catalog: Catalog::OddPower { coeff, exponent },
            m_shift: 0.0,
            growth: Growth { q: exponent, c1: 0.0, c2: coeff.abs() },
            asymptotic: None,
            zero_slope: None,
        })
    }

    /// Tightens the asymptotic slope bound to `mu`, recomputing the entry
    /// radius for catalogs whose quotient decays (saturating). Errors when
    /// the catalog cannot honor the requested bound.
    pub fn with_asymptotic_mu(mut self, mu: f64) -> Result<Self> {
        require(mu > 0.0, "mu", "asymptotic bound must be positive")?;
        match &self.catalog {
            Catalog::Saturating { lambda, delta } => {
                if mu >= *lambda {
                    self.asymptotic = Some(Asymptotic { mu, r: *delta });
                } else {
                    let r = delta * ((lambda - mu) / mu).powf(1.0 / (self.p - 1.0));
                    self.asymptotic = Some(Asymptotic { mu, r });
                }
                Ok(self)
            }
            Catalog::Linear { lambda } | Catalog::AffineForcing { lambda, .. } => {
                if *lambda <= mu {
                    self.asymptotic = Some(Asymptotic { mu, r: 1.0 });
                    Ok(self)
                } else {
                    Err(Error::Build(format!(
                        "quotient stays at {lambda}, cannot bound it by {mu}"
                    )))
                }
            }
            _ => Err(Error::Build(
                "no asymptotic slope bound available for this catalog entry".into(),
            )),
        }
    }

    pub fn f(&self, x: &Point, t: f64) -> f64 {
        match &self.catalog {
            Catalog::Linear { lambda } => lambda * phi_p(t, self.p),
            Catalog::Saturating { lambda, delta } => {
                lambda * phi_p(t, self.p) / (1.0 + (t.abs() / delta).powf(self.p - 1.0))
            }
            Catalog::AffineForcing { lambda, g } => lambda * phi_p(t, self.p) - g.eval_at(x),
            Catalog::Constant { value } => *value,
            Catalog::OddPower { coeff, exponent } => coeff * phi_p(t, *exponent),
        }
    }

    /// Primitive F(x, t), normalized by F(x, 0) = 0.
    pub fn f_prim(&self, x: &Point, t: f64) -> f64 {
        let p = self.p;
        match &self.catalog {
            Catalog::Linear { lambda } => lambda * t.abs().powf(p) / p,
            Catalog::Saturating { lambda, delta } => sat_primitive(p, *lambda, *delta, t),
            Catalog::AffineForcing { lambda, g } => {
                lambda * t.abs().powf(p) / p - g.eval_at(x) * t
            }
            Catalog::Constant { value } => value * t,
            Catalog::OddPower { coeff, exponent } => coeff * t.abs().powf(*exponent) / exponent,
        }
    }

    /// t-derivative of f where the catalog provides it in closed form.
    pub fn df_dt(&self, _x: &Point, t: f64) -> Option<f64> {
        let p = self.p;
        match &self.catalog {
            Catalog::Linear { lambda } => Some(lambda * dphi_p(t, p)),
            Catalog::Saturating { lambda, delta } => {
                let v = (t.abs() / delta).powf(p - 1.0);
                Some(lambda * dphi_p(t, p) / ((1.0 + v) * (1.0 + v)))
            }
            Catalog::AffineForcing { lambda, .. } => Some(lambda * dphi_p(t, p)),
            Catalog::Constant { .. } => Some(0.0),
            Catalog::OddPower { coeff, exponent } => Some(coeff * dphi_p(t, *exponent)),
        }
    }

    /// Shifted nonlinearity h(x,t) = f(x,t) + M phi_p(t); nondecreasing in t
    /// when M is at least the monotonicity constant.
    pub fn h(&self, x: &Point, t: f64) -> f64 {
        self.f(x, t) + self.m_shift * phi_p(t, self.p)
    }
}

/// Primitive of the saturating entry, even in t. Closed forms for p = 2 and
/// p = 3; otherwise an alternating series near 0 (where the integrand powers
/// are not smooth) glued to composite Gauss quadrature away from it.
fn sat_primitive(p: f64, lambda: f64, delta: f64, t: f64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        let u = a / delta;
        return lambda * delta * delta * (u - (1.0 + u).ln());
    }
    if p == 3.0 {
        return lambda * delta * delta * (a - delta * (a / delta).atan());
    }
    let cut = 0.5 * delta;
    if a <= cut {
        return sat_primitive_series(p, lambda, delta, a);
    }
    let integrand = |s: f64| lambda * s.powf(p - 1.0) / (1.0 + (s / delta).powf(p - 1.0));
    let panels = (2.0 * (a - cut) / delta).ceil().max(2.0).min(32.0) as usize;
    sat_primitive_series(p, lambda, delta, cut) + gauss_integral(integrand, cut, a, panels)
}

/// integral_0^T lambda s^{p-1}/(1 + (s/delta)^{p-1}) ds
///   = lambda T^p sum_k (-v)^k / (p + k(p-1)),  v = (T/delta)^{p-1} < 1.
fn sat_primitive_series(p: f64, lambda: f64, delta: f64, t_abs: f64) -> f64 {
    let v = (t_abs / delta).powf(p - 1.0);
    debug_assert!(v < 1.0);
    let mut sum = 0.0;
    let mut vk = 1.0; // (-v)^k
    for k in 0..200 {
        let term = vk / (p + k as f64 * (p - 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        vk *= -v;
    }
    lambda * t_abs.powf(p) * sum
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];

/// Composite 8-point Gauss quadrature of a smooth scalar function.
pub fn gauss_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let dx = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * dx;
        let mid = lo + dx / 2.0;
        let half = dx / 2.0;
        for (xi, w) in GAUSS8 {
            acc += w * f(mid + half * xi);
        }
    }
    acc * (b - a) / (2.0 * panels as f64)
}

/// Minimal shift M making h(x,t) = f + M phi_p nondecreasing on the sampled
/// t-range, estimated via the t-derivative (finite differences if no closed
/// form). Samples avoid the degenerate origin.
pub fn estimate_monotonicity_constant(
    spec: &NonlinearitySpec,
    t_max: f64,
    samples: usize,
) -> f64 {
    let p = spec.p;
    let x0: Point = [0.5, 0.5];
    let mut m = 0.0f64;
    for k in 0..samples {
        let frac = (k as f64 + 0.5) / samples as f64;
        // log-spaced magnitudes from 1e-6 to t_max, both signs
        let mag = 1e-6 * (t_max / 1e-6).powf(frac);
        for t in [mag, -mag] {
            let df = spec.df_dt(&x0, t).unwrap_or_else(|| {
                let h = 1e-6 * (1.0 + t.abs());
                (spec.f(&x0, t + h) - spec.f(&x0, t - h)) / (2.0 * h)
            });
            let weight = dphi_p(t, p);
            if df < 0.0 && weight.is_finite() && weight > 0.0 {
                m = m.max(-df / weight);
            }
        }
    }
    m
}

/// Outcome of one sampled hypothesis check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    VerifiedOnSamples,
    Violated,
    NotApplicable,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CheckStatus::VerifiedOnSamples => "verified-on-samples",
            CheckStatus::Violated => "violated",
            CheckStatus::NotApplicable => "not-applicable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
    /// worst sampled (t, value) pair, when meaningful
    pub witness: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    /// True when no check is violated (not-applicable entries pass).
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Violated)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Sampling resolution for hypothesis checks.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisParams {
    pub t_max: f64,
    pub t_samples: usize,
    pub x_samples: usize,
    pub tol: f64,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        HypothesisParams {
            t_max: 1e3,
            t_samples: 160,
            x_samples: 9,
            tol: 1e-9,
        }
    }
}

fn sample_points(domain: &DomainSpec, count: usize) -> Vec<Point> {
    match domain {
        DomainSpec::Interval { a, b } => (0..count)
            .map(|k| [a + (b - a) * (k as f64 + 0.5) / count as f64, 0.0])
            .collect(),
        DomainSpec::UnitSquare => {
            let side = (count as f64).sqrt().ceil() as usize;
            let mut pts = Vec::new();
            for j in 0..side {
                for i in 0..side {
                    pts.push([
                        (i as f64 + 0.5) / side as f64,
                        (j as f64 + 0.5) / side as f64,
                    ]);
                }
            }
            pts
        }
    }
}

fn sample_ts(params: &HypothesisParams) -> Vec<f64> {
    let mut ts = vec![0.0];
    for k in 0..params.t_samples {
        let frac = k as f64 / (params.t_samples - 1) as f64;
        let mag = 1e-6 * (params.t_max / 1e-6).powf(frac);
        ts.push(mag);
        ts.push(-mag);
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts
}

/// Runs the sampled structural checks: growth, modulus of continuity,
/// shifted monotonicity, asymptotic slope bound, zero-limit slope, and (for
/// p > 2) the derivative bound near 0 used by the cone ladder.
pub fn check_hypotheses(
    spec: &NonlinearitySpec,
    domain: &DomainSpec,
    params: &HypothesisParams,
) -> HypothesisReport {
    let p = spec.p;
    let dim = domain.dim() as f64;
    let xs = sample_points(domain, params.x_samples);
    let ts = sample_ts(params);
    let mut checks = Vec::new();

    // growth: |f| <= c1 + c2 |t|^{q-1} with 1 < q < p*
    {
        let Growth { q, c1, c2 } = spec.growth;
        let p_star = if p < dim { dim * p / (dim - p) } else { f64::INFINITY };
        let mut worst: Option<(f64, f64)> = None;
        let mut ok = q > 1.0 && q < p_star;
        let mut detail = format!("q={q}, c1={c1}, c2={c2}, p*={p_star}");
        if !ok {
            detail.push_str(" (exponent window violated)");
        }
        for x in &xs {
            for &t in &ts {
                let bound = c1 + c2 * t.abs().powf(q - 1.0);
                let excess = spec.f(x, t).abs() - bound;
                if excess > params.tol * (1.0 + bound) {
                    ok = false;
                    if worst.map_or(true, |(_, e)| excess > e) {
                        worst = Some((t, excess));
                    }
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "growth",
            status: if ok { CheckStatus::VerifiedOnSamples } else { CheckStatus::Violated },
            detail,
            witness: worst,
        });
    }

    // modulus of continuity in t: Lipschitz for p >= 2, (p-1)-Hoelder below
    {
        let gamma = (p - 1.0).min(1.0);
        let mut max_ratio = 0.0f64;
        let mut at = 0.0;
        for x in &xs {
            for w in ts.windows(2) {
                let (s, t) = (w[0], w[1]);
                let d = (t - s).abs();
                if d == 0.0 {
                    continue;
                }
                let ratio = (spec.f(x, t) - spec.f(x, s)).abs() / d.powf(gamma);
                if ratio > max_ratio {
                    max_ratio = ratio;
                    at = t;
                }
            }
        }
        let ok = max_ratio.is_finite() && max_ratio < 1e12;
        checks.push(HypothesisCheck {
            name: "continuity",
            status: if ok { CheckStatus::VerifiedOnSamples } else { CheckStatus::Violated },
            detail: format!("exponent {gamma}, max sampled ratio {max_ratio:.6e}"),
            witness: Some((at, max_ratio)),
        });
    }

    // shifted monotonicity: h(x, .) nondecreasing with the stored M
    {
        let mut worst: Option<(f64, f64)> = None;
        for x in &xs {
            for w in ts.windows(2) {
                let drop = spec.h(x, w[0]) - spec.h(x, w[1]);
                let scale = 1.0 + spec.h(x, w[0]).abs();
                if drop > params.tol * scale && worst.map_or(true, |(_, d)| drop > d) {
                    worst = Some((w[1], drop));
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "shifted-monotonicity",
            status: if worst.is_none() {
                CheckStatus::VerifiedOnSamples
            } else {
                CheckStatus::Violated
            },
            detail: format!("M = {}", spec.m_shift),
            witness: worst,
        });
    }

    // asymptotic slope bound: f/phi_p <= mu for |t| > r
    {
        match spec.asymptotic {
            None => checks.push(HypothesisCheck {
                name: "asymptotic-bound",
                status: CheckStatus::NotApplicable,
                detail: "no (mu, r) declared".into(),
                witness: None,
            }),
            Some(Asymptotic { mu, r }) => {
                let mut worst: Option<(f64, f64)> = None;
                for x in &xs {
                    for &t in &ts {
                        if t.abs() <= r {
                            continue;
                        }
                        let quotient = spec.f(x, t) / phi_p(t, p);
                        let excess = quotient - mu;
                        if excess > params.tol * (1.0 + mu.abs())
                            && worst.map_or(true, |(_, e)| excess > e)
                        {
                            worst = Some((t, quotient));
                        }
                    }
                }
                checks.push(HypothesisCheck {
                    name: "asymptotic-bound",
                    status: if worst.is_none() {
                        CheckStatus::VerifiedOnSamples
                    } else {
                        CheckStatus::Violated
                    },
                    detail: format!("mu = {mu}, r = {r}"),
                    witness: worst,
                });
            }
        }
    }

    // zero-limit slope: f/phi_p within 5% of the declared slope at |t| = 1e-4
    {
        match spec.zero_slope {
            None => checks.push(HypothesisCheck {
                name: "zero-slope",
                status: CheckStatus::NotApplicable,
                detail: "no zero-limit slope declared".into(),
                witness: None,
            }),
            Some(lambda) => {
                let mut worst: Option<(f64, f64)> = None;
                for x in &xs {
                    for t in [1e-4, -1e-4] {
                        let quotient = spec.f(x, t) / phi_p(t, p);
                        let rel = (quotient - lambda).abs() / lambda.abs().max(1e-300);
                        if rel > 0.05 && worst.map_or(true, |(_, q)| {
                            (q - lambda).abs() < (quotient - lambda).abs()
                        }) {
                            worst = Some((t, quotient));
                        }
                    }
                }
                checks.push(HypothesisCheck {
                    name: "zero-slope",
                    status: if worst.is_none() {
                        CheckStatus::VerifiedOnSamples
                    } else {
                        CheckStatus::Violated
                    },
                    detail: format!("declared slope {lambda}"),
                    witness: worst,
                });
            }
        }
    }

    // derivative bound near 0 for degenerate p: |f'(t)| < 2(p-1) lambda |t|^{p-2}
    if p > 2.0 {
        match spec.zero_slope {
            None => checks.push(HypothesisCheck {
                name: "zero-derivative-bound",
                status: CheckStatus::NotApplicable,
                detail: "no zero-limit slope declared".into(),
                witness: None,
            }),
            Some(lambda) => {
                let x0: Point = [0.5, 0.5];
                let mut worst: Option<(f64, f64)> = None;
                for k in 0..60 {
                    let t = 1e-6 * (1e4f64).powf(k as f64 / 59.0); // up to 1e-2
                    for t in [t, -t] {
                        let df = spec.df_dt(&x0, t).unwrap_or(f64::INFINITY);
                        let bound = 2.0 * (p - 1.0) * lambda * t.abs().powf(p - 2.0);
                        if df.abs() >= bound && worst.map_or(true, |(_, d)| df.abs() > d) {
                            worst = Some((t, df.abs()));
                        }
                    }
                }
                checks.push(HypothesisCheck {
                    name: "zero-derivative-bound",
                    status: if worst.is_none() {
                        CheckStatus::VerifiedOnSamples
                    } else {
                        CheckStatus::Violated
                    },
                    detail: format!("bound 2(p-1) lambda |t|^{{p-2}} with lambda = {lambda}"),
                    witness: worst,
                });
            }
        }
    }

    HypothesisReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, interpolate};

    fn params() -> HypothesisParams {
        HypothesisParams::default()
    }

    #[test]
    fn phi_p_handles_origin_and_signs() {
        assert_eq!(phi_p(0.0, 1.5), 0.0);
        assert_eq!(phi_p(0.0, 3.0), 0.0);
        assert!((phi_p(2.0, 3.0) - 4.0).abs() < 1e-15);
        assert!((phi_p(-2.0, 3.0) + 4.0).abs() < 1e-15);
        assert!((phi_p(0.25, 1.5) - 0.5).abs() < 1e-15); // |t|^{-1/2} t = sqrt(t)
    }

    #[test]
    fn saturating_is_bounded_and_has_declared_slope() {
        let spec = NonlinearitySpec::saturating(2.0, 10.0, 1.0).unwrap();
        let x = [0.5, 0.0];
        for t in [-1e4, -3.0, -0.1, 0.1, 3.0, 1e4] {
            assert!(spec.f(&x, t).abs() <= 10.0);
        }
        let q = spec.f(&x, 1e-4) / phi_p(1e-4, 2.0);
        assert!((q - 10.0).abs() / 10.0 < 5e-4);
    }

    #[test]
    fn cubic_growth_verified_with_quartic_exponent() {
        // f(t) = t^3 on a 2d domain with p = 2: growth exponent q = 4 < p* = infinity? no:
        // p* = 2*2/(2-2) is infinite only for p >= N; here p = N = 2 so p* = infinity
        let spec = NonlinearitySpec::odd_power(2.0, 1.0, 4.0).unwrap();
        let report = check_hypotheses(&spec, &DomainSpec::UnitSquare, &params());
        assert_eq!(report.get("growth").unwrap().status, CheckStatus::VerifiedOnSamples);
        assert_eq!(spec.growth.q, 4.0);
    }

    #[test]
    fn hypothesis_suite_passes_for_saturating() {
        for p in [1.5, 2.0, 3.0] {
            let spec = NonlinearitySpec::saturating(p, 25.0, 1.0).unwrap();
            let report = check_hypotheses(&spec, &DomainSpec::unit_interval(), &params());
            assert!(report.all_ok(), "p={p}: {:?}", report.checks);
        }
    }

    #[test]
    fn decreasing_nonlinearity_flagged_without_shift() {
        // f(t) = -t with p = 2 needs M >= 1 to make h nondecreasing
        let mut spec = NonlinearitySpec::linear(2.0, -1.0).unwrap();
        assert!((spec.m_shift - 1.0).abs() < 1e-15);
        let est = estimate_monotonicity_constant(&spec, 10.0, 200);
        assert!((est - 1.0).abs() < 1e-9, "estimate {est}");
        spec.m_shift = 0.0;
        let report = check_hypotheses(&spec, &DomainSpec::unit_interval(), &params());
        assert_eq!(
            report.get("shifted-monotonicity").unwrap().status,
            CheckStatus::Violated
        );
    }

    #[test]
    fn saturating_needs_no_shift() {
        let spec = NonlinearitySpec::saturating(1.5, 40.0, 2.0).unwrap();
        assert_eq!(estimate_monotonicity_constant(&spec, 100.0, 300), 0.0);
    }

    #[test]
    fn constant_entry_has_no_zero_slope() {
        let spec = NonlinearitySpec::constant(2.0, 1.0).unwrap();
        let report = check_hypotheses(&spec, &DomainSpec::unit_interval(), &params());
        assert_eq!(report.get("zero-slope").unwrap().status, CheckStatus::NotApplicable);
        assert!(report.all_ok());
        assert_eq!(spec.h(&[0.3, 0.0], 0.0), 1.0);
    }

    #[test]
    fn primitive_matches_numerical_integral() {
        // independent check with fine midpoint integration
        for (p, lambda, delta) in [(1.7, 12.0, 1.0), (2.0, 8.0, 0.5), (3.0, 20.0, 2.0), (2.4, 5.0, 1.3)] {
            let spec = NonlinearitySpec::saturating(p, lambda, delta).unwrap();
            let x = [0.25, 0.0];
            for t in [-2.7f64, -0.3, 0.4, 1.9, 6.0] {
                let n = 40_000;
                let dt = t / n as f64;
                let mut acc = 0.0;
                for k in 0..n {
                    acc += spec.f(&x, (k as f64 + 0.5) * dt) * dt;
                }
                let got = spec.f_prim(&x, t);
                assert!(
                    (got - acc).abs() < 1e-7 * (1.0 + acc.abs()),
                    "p={p} t={t}: {got} vs {acc}"
                );
            }
        }
    }

    #[test]
    fn affine_forcing_evaluates_the_field() {
        let mesh = build_mesh(DomainSpec::unit_interval(), 64).unwrap();
        let g = interpolate(&mesh, |p| 1.0 + p[0]);
        let spec = NonlinearitySpec::affine_forcing(2.0, 3.0, g).unwrap();
        let x = [0.5, 0.0];
        assert!((spec.f(&x, 2.0) - (6.0 - 1.5)).abs() < 1e-12);
        assert!((spec.f_prim(&x, 2.0) - (6.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_bound_tightening() {
        let spec = NonlinearitySpec::saturating(2.0, 10.0, 1.0).unwrap();
        let tightened = spec.with_asymptotic_mu(1.0).unwrap();
        let a = tightened.asymptotic.unwrap();
        assert!((a.r - 9.0).abs() < 1e-12); // (10-1)/1 = 9 with p-1 = 1
        let x = [0.5, 0.0];
        let q = tightened.f(&x, 9.5) / phi_p(9.5, 2.0);
        assert!(q <= 1.0);
        // a linear entry above the bound cannot be tightened
        let lin = NonlinearitySpec::linear(2.0, 10.0).unwrap();
        assert!(lin.with_asymptotic_mu(1.0).is_err());
    }
}
