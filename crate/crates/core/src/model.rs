//! Problem definitions for the log-price, time-reversed equation
//!
//! ```text
//!   D^α u = a u_ss + b u_s − c u + f(s, η)
//!   u(lo, η) = left_bc(η),  u(hi, η) = right_bc(η),  u(s, 0) = initial(s)
//! ```
//!
//! obtained from the option value `Q(S, τ)` through `s = ln S` and
//! `η = T − τ`, with `a = σ²/2`, `b = r − a`, `c = r`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::gamma_fn;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Keys accepted by [`build_problem`].
pub const PROBLEM_KEYS: [&str; 4] = ["example1", "example2", "european-call-demo", "custom"];

const COMPATIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub r: f64,
    pub sigma: f64,
    /// Expiry `T`.
    pub expiry: f64,
}

impl MarketParams {
    pub fn new(r: f64, sigma: f64, expiry: f64) -> Result<Self> {
        let m = Self { r, sigma, expiry };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(Error::param("sigma", self.sigma, "volatility must be >= 0"));
        }
        if !(self.expiry > 0.0) {
            return Err(Error::param("expiry", self.expiry, "expiry must be > 0"));
        }
        if !(self.r > 0.0) {
            return Err(Error::param("r", self.r, "the rate must be > 0"));
        }
        Ok(())
    }
}

/// Diffusion `a`, advection `b`, reaction `c` and fractional order `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
}

impl Coefficients {
    /// Direct entry, e.g. when `a` is prescribed without a matching `σ`.
    pub fn new(a: f64, b: f64, c: f64, alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        if !(a > 0.0) {
            return Err(Error::param("a", a, "diffusion coefficient must be > 0"));
        }
        if !(c > 0.0) {
            return Err(Error::param("c", c, "reaction coefficient must be > 0"));
        }
        if !b.is_finite() {
            return Err(Error::param("b", b, "advection coefficient must be finite"));
        }
        Ok(Self { a, b, c, alpha })
    }
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "alpha",
            alpha,
            "fractional order must lie in (0, 1]",
        ))
    }
}

/// `a = σ²/2`, `b = r − a`, `c = r`.
pub fn coefficients_from_market(m: &MarketParams, alpha: f64) -> Result<Coefficients> {
    m.validate()?;
    let a = 0.5 * m.sigma * m.sigma;
    Coefficients::new(a, m.r - a, m.r, alpha)
}

/// `s = ln S`.
pub fn log_transform(price: f64) -> Result<f64> {
    if !(price > 0.0) {
        return Err(Error::param("S", price, "asset price must be > 0"));
    }
    Ok(price.ln())
}

/// `η = T − τ`; expiry maps to `η = 0`.
pub fn time_reverse(tau: f64, expiry: f64) -> Result<f64> {
    if !(0.0..=expiry).contains(&tau) {
        return Err(Error::param("tau", tau, "time must lie in [0, T]"));
    }
    Ok(expiry - tau)
}

/// A fully specified instance. Immutable once built and cheap to clone.
#[derive(Clone)]
pub struct ProblemSpec {
    pub key: String,
    pub coeffs: Coefficients,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub horizon: f64,
    pub left_bc: ScalarFn,
    pub right_bc: ScalarFn,
    pub initial: ScalarFn,
    pub source: FieldFn,
    pub exact: Option<FieldFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("key", &self.key)
            .field("coeffs", &self.coeffs)
            .field("domain", &(self.domain_lo, self.domain_hi))
            .field("horizon", &self.horizon)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Checks domain ordering, horizon and that initial data agrees with the
    /// boundary data at `η = 0`.
    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.coeffs.alpha)?;
        if !(self.domain_lo < self.domain_hi) {
            return Err(Error::param(
                "domain_hi",
                self.domain_hi,
                "domain upper bound must exceed the lower bound",
            ));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::param("horizon", self.horizon, "horizon must be > 0"));
        }
        let gap_lo = ((self.initial)(self.domain_lo) - (self.left_bc)(0.0)).abs();
        if gap_lo > COMPATIBILITY_TOL {
            return Err(Error::param(
                "left_bc",
                gap_lo,
                "initial and left boundary data disagree at eta = 0",
            ));
        }
        let gap_hi = ((self.initial)(self.domain_hi) - (self.right_bc)(0.0)).abs();
        if gap_hi > COMPATIBILITY_TOL {
            return Err(Error::param(
                "right_bc",
                gap_hi,
                "initial and right boundary data disagree at eta = 0",
            ));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.domain_hi - self.domain_lo
    }
}

/// Caputo derivative of `(η + 1)²`: `2η^{2−α}/Γ(3−α) + 2η^{1−α}/Γ(2−α)`.
fn caputo_of_shifted_square(alpha: f64) -> Result<impl Fn(f64) -> f64 + Send + Sync> {
    let g3 = gamma_fn(3.0 - alpha)?;
    let g2 = gamma_fn(2.0 - alpha)?;
    Ok(move |eta: f64| {
        if eta <= 0.0 {
            // η^{1−α} → 0; at α = 1 the second term is the constant 2.
            if alpha == 1.0 {
                2.0 / g2
            } else {
                0.0
            }
        } else {
            2.0 * eta.powf(2.0 - alpha) / g3 + 2.0 * eta.powf(1.0 - alpha) / g2
        }
    })
}

/// Homogeneous Dirichlet test problem on `[0, 1]` with exact solution
/// `(η + 1)² s²(1 − s)`, `r = 0.05`, `σ = 0.25`, `T = 1`.
pub fn example1(alpha: f64) -> Result<ProblemSpec> {
    let market = MarketParams::new(0.05, 0.25, 1.0)?;
    let coeffs = coefficients_from_market(&market, alpha)?;
    let Coefficients { a, b, c, .. } = coeffs;
    let dt = caputo_of_shifted_square(alpha)?;
    let g = |s: f64| s * s * (1.0 - s);
    let p = ProblemSpec {
        key: "example1".into(),
        coeffs,
        domain_lo: 0.0,
        domain_hi: 1.0,
        horizon: market.expiry,
        left_bc: Arc::new(|_| 0.0),
        right_bc: Arc::new(|_| 0.0),
        initial: Arc::new(g),
        source: Arc::new(move |s, eta| {
            let e1 = (eta + 1.0) * (eta + 1.0);
            dt(eta) * g(s) - e1 * (a * (2.0 - 6.0 * s) + b * (2.0 * s - 3.0 * s * s) - c * g(s))
        }),
        exact: Some(Arc::new(move |s, eta| (eta + 1.0) * (eta + 1.0) * g(s))),
    };
    p.validate()?;
    Ok(p)
}

/// Non-homogeneous Dirichlet test problem on `[0, 1]` with exact solution
/// `(η + 1)²(s³ + s² + 1)`, `a = 1`, `r = 0.5`, `T = 1`.
pub fn example2(alpha: f64) -> Result<ProblemSpec> {
    let r = 0.5;
    let coeffs = Coefficients::new(1.0, r - 1.0, r, alpha)?;
    let Coefficients { a, b, c, .. } = coeffs;
    let dt = caputo_of_shifted_square(alpha)?;
    let g = |s: f64| s * s * s + s * s + 1.0;
    let p = ProblemSpec {
        key: "example2".into(),
        coeffs,
        domain_lo: 0.0,
        domain_hi: 1.0,
        horizon: 1.0,
        left_bc: Arc::new(|eta| (eta + 1.0) * (eta + 1.0)),
        right_bc: Arc::new(|eta| 3.0 * (eta + 1.0) * (eta + 1.0)),
        initial: Arc::new(g),
        source: Arc::new(move |s, eta| {
            let e1 = (eta + 1.0) * (eta + 1.0);
            dt(eta) * g(s) - e1 * (a * (6.0 * s + 2.0) + b * (2.0 * s + 3.0 * s * s) - c * g(s))
        }),
        exact: Some(Arc::new(move |s, eta| (eta + 1.0) * (eta + 1.0) * g(s))),
    };
    p.validate()?;
    Ok(p)
}

/// European call on the truncated log-price interval. Illustration only:
/// there is no exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CallDemo {
    pub strike: f64,
    pub market: MarketParams,
    pub domain_lo: f64,
    pub domain_hi: f64,
}

impl Default for CallDemo {
    fn default() -> Self {
        Self {
            strike: 1.0,
            market: MarketParams {
                r: 0.05,
                sigma: 0.25,
                expiry: 1.0,
            },
            domain_lo: -2.0,
            domain_hi: 2.0,
        }
    }
}

pub fn european_call_demo(demo: &CallDemo, alpha: f64) -> Result<ProblemSpec> {
    let coeffs = coefficients_from_market(&demo.market, alpha)?;
    if !(demo.strike > 0.0) {
        return Err(Error::param("strike", demo.strike, "strike must be > 0"));
    }
    let (k, r, hi) = (demo.strike, demo.market.r, demo.domain_hi);
    let p = ProblemSpec {
        key: "european-call-demo".into(),
        coeffs,
        domain_lo: demo.domain_lo,
        domain_hi: demo.domain_hi,
        horizon: demo.market.expiry,
        left_bc: Arc::new(|_| 0.0),
        right_bc: Arc::new(move |eta| hi.exp() - k * (-r * eta).exp()),
        initial: Arc::new(move |s| (s.exp() - k).max(0.0)),
        source: Arc::new(|_, _| 0.0),
        exact: None,
    };
    p.validate()?;
    Ok(p)
}

/// `coef · s^s_pow · η^eta_pow`; `η^0` is taken as 1 even at `η = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default)]
    pub s_pow: i32,
    #[serde(default)]
    pub eta_pow: f64,
}

impl Term {
    fn eval(&self, s: f64, eta: f64) -> f64 {
        let et = if self.eta_pow == 0.0 {
            1.0
        } else {
            eta.powf(self.eta_pow)
        };
        self.coef * s.powi(self.s_pow) * et
    }
}

/// Sum of [`Term`]s in `(s, η)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(pub Vec<Term>);

impl Polynomial {
    pub fn eval(&self, s: f64, eta: f64) -> f64 {
        self.0.iter().map(|t| t.eval(s, eta)).sum()
    }
}

/// Coefficients either direct or derived from market data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientInput {
    Direct { a: f64, b: f64, c: f64 },
    Market { r: f64, sigma: f64 },
}

/// A user problem given entirely by polynomial data, as read from config.
/// The boundary polynomials are evaluated at `s = 0` and only their `η`
/// dependence matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomProblem {
    pub coefficients: CoefficientInput,
    pub domain: (f64, f64),
    pub horizon: f64,
    pub initial: Polynomial,
    pub left_bc: Polynomial,
    pub right_bc: Polynomial,
    #[serde(default)]
    pub source: Polynomial,
    #[serde(default)]
    pub exact: Option<Polynomial>,
}

pub fn custom_problem(def: &CustomProblem, alpha: f64) -> Result<ProblemSpec> {
    let coeffs = match def.coefficients {
        CoefficientInput::Direct { a, b, c } => Coefficients::new(a, b, c, alpha)?,
        CoefficientInput::Market { r, sigma } => {
            coefficients_from_market(&MarketParams::new(r, sigma, def.horizon)?, alpha)?
        }
    };
    let (initial, left, right, source) = (
        def.initial.clone(),
        def.left_bc.clone(),
        def.right_bc.clone(),
        def.source.clone(),
    );
    let p = ProblemSpec {
        key: "custom".into(),
        coeffs,
        domain_lo: def.domain.0,
        domain_hi: def.domain.1,
        horizon: def.horizon,
        left_bc: Arc::new(move |eta| left.eval(0.0, eta)),
        right_bc: Arc::new(move |eta| right.eval(0.0, eta)),
        initial: Arc::new(move |s| initial.eval(s, 0.0)),
        source: Arc::new(move |s, eta| source.eval(s, eta)),
        exact: def
            .exact
            .clone()
            .map(|e| -> FieldFn { Arc::new(move |s, eta| e.eval(s, eta)) }),
    };
    p.validate()?;
    Ok(p)
}

/// Extra inputs some registry entries need.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemOptions {
    #[serde(default)]
    pub custom: Option<CustomProblem>,
    #[serde(default)]
    pub call_demo: Option<CallDemo>,
}

/// Looks up a problem by registry key.
pub fn build_problem(key: &str, alpha: f64, opts: &ProblemOptions) -> Result<ProblemSpec> {
    match key {
        "example1" => example1(alpha),
        "example2" => example2(alpha),
        "european-call-demo" => european_call_demo(&opts.call_demo.unwrap_or_default(), alpha),
        "custom" => {
            let def = opts
                .custom
                .as_ref()
                .ok_or_else(|| Error::Config("problem `custom` needs a `custom` section".into()))?;
            custom_problem(def, alpha)
        }
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}
