//! Time-varying coefficients: the variable mass `eps(t)` and the viscous
//! damping `alpha(t)`.
//!
//! A [`Schedule`] evaluates its value and derivatives up to order three and
//! knows whether it is integrable on `[0, inf)`. The `check_*` validators fit
//! the constants of the structural assumptions the dynamics rely on and
//! report whether they hold on a check grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values of `eps` below this are treated as zero.
pub const EPS_FLOOR: f64 = 1e-14;

/// Highest derivative order exposed by [`Schedule::eval`].
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("invalid schedule: {0}")]
    Invalid(String),
    #[error("derivative of order {order} is not available for tabulated schedules")]
    UnsupportedDerivative { order: usize },
    #[error("derivative order {0} exceeds the supported maximum of 3")]
    OrderTooHigh(usize),
    #[error("schedule evaluated at negative time {0}")]
    NegativeTime(f64),
    #[error("eps drops below the positivity floor at t = {t} (value {value:e})")]
    Degenerate { t: f64, value: f64 },
}

/// Integrability of a schedule on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrability {
    Integrable,
    NonIntegrable,
    Unknown,
}

/// A non-increasing, non-negative coefficient `t -> c(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    /// `c0 / (t + 1)^a`.
    Power {
        c0: f64,
        a: f64,
    },
    Constant {
        c0: f64,
    },
    Zero,
    /// Piecewise-linear interpolation of tabulated values, held constant
    /// after the last sample.
    #[serde(rename = "custom-table")]
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Schedule {
    pub fn power(c0: f64, a: f64) -> Self {
        Schedule::Power { c0, a }
    }

    pub fn constant(c0: f64) -> Self {
        Schedule::Constant { c0 }
    }

    pub fn table(times: Vec<f64>, values: Vec<f64>) -> Result<Self, ScheduleError> {
        let s = Schedule::Table { times, values };
        s.validate()?;
        Ok(s)
    }

    /// Tabulates `f` on `times`.
    pub fn tabulate(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self, ScheduleError> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::table(times, values)
    }

    /// Checks parameter ranges and, for tables, monotonicity of the data.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        match self {
            Schedule::Power { c0, a } => {
                if !(c0.is_finite() && *c0 >= 0.0) {
                    return Err(ScheduleError::Invalid(format!("c0 must be >= 0, got {c0}")));
                }
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(ScheduleError::Invalid(format!("exponent a must be >= 0, got {a}")));
                }
            }
            Schedule::Constant { c0 } => {
                if !(c0.is_finite() && *c0 >= 0.0) {
                    return Err(ScheduleError::Invalid(format!("c0 must be >= 0, got {c0}")));
                }
            }
            Schedule::Zero => {}
            Schedule::Table { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(ScheduleError::Invalid(
                        "table needs at least two (time, value) pairs of equal length".into(),
                    ));
                }
                if times[0] != 0.0 {
                    return Err(ScheduleError::Invalid("table must start at t = 0".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ScheduleError::Invalid("table times must be strictly increasing".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(ScheduleError::Invalid("table values must be finite and >= 0".into()));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(ScheduleError::Invalid("table values must be non-increasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Value at `t = 0`.
    pub fn initial(&self) -> f64 {
        self.value(0.0)
    }

    /// Value at `t`; infallible for every family.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Schedule::Power { c0, a } => {
                if *a == 0.0 {
                    *c0
                } else {
                    c0 * (t + 1.0).powf(-a)
                }
            }
            Schedule::Constant { c0 } => *c0,
            Schedule::Zero => 0.0,
            Schedule::Table { times, values } => {
                let (i, w) = locate(times, t);
                if w == 0.0 {
                    values[i]
                } else {
                    values[i] + w * (values[i + 1] - values[i])
                }
            }
        }
    }

    /// `order`-th derivative at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64, ScheduleError> {
        if t < 0.0 {
            return Err(ScheduleError::NegativeTime(t));
        }
        if order > MAX_ORDER {
            return Err(ScheduleError::OrderTooHigh(order));
        }
        if order == 0 {
            return Ok(self.value(t));
        }
        match self {
            Schedule::Power { c0, a } => {
                // d^k/dt^k (t+1)^-a = (-a)(-a-1)...(-a-k+1) (t+1)^(-a-k)
                let coeff = (0..order).fold(*c0, |acc, j| acc * (-a - j as f64));
                if coeff == 0.0 {
                    return Ok(0.0);
                }
                Ok(coeff * (t + 1.0).powf(-a - order as f64))
            }
            Schedule::Constant { .. } | Schedule::Zero => Ok(0.0),
            Schedule::Table { .. } => Err(ScheduleError::UnsupportedDerivative { order }),
        }
    }

    /// Value and derivatives of orders 1..=3 at `t`.
    pub fn jet(&self, t: f64) -> Result<[f64; 4], ScheduleError> {
        Ok([self.eval(t, 0)?, self.eval(t, 1)?, self.eval(t, 2)?, self.eval(t, 3)?])
    }

    /// First derivative, falling back to the slope of the enclosing segment
    /// for tabulated schedules.
    pub fn slope(&self, t: f64) -> f64 {
        match self {
            Schedule::Table { times, values } => {
                let (mut i, _) = locate(times, t);
                if i + 1 >= times.len() {
                    if t > *times.last().unwrap() {
                        return 0.0;
                    }
                    i = times.len() - 2;
                }
                (values[i + 1] - values[i]) / (times[i + 1] - times[i])
            }
            _ => self.eval(t.max(0.0), 1).unwrap_or(0.0),
        }
    }

    pub fn integrability(&self) -> Integrability {
        match self {
            Schedule::Power { c0, a } => {
                if *c0 == 0.0 || *a > 1.0 {
                    Integrability::Integrable
                } else {
                    Integrability::NonIntegrable
                }
            }
            Schedule::Constant { c0 } => {
                if *c0 == 0.0 {
                    Integrability::Integrable
                } else {
                    Integrability::NonIntegrable
                }
            }
            Schedule::Zero => Integrability::Integrable,
            Schedule::Table { .. } => Integrability::Unknown,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Schedule::Zero => true,
            Schedule::Power { c0, .. } | Schedule::Constant { c0 } => *c0 == 0.0,
            Schedule::Table { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// `(c0, a)` for the analytic families, viewing constants as `a = 0`.
    fn power_params(&self) -> Option<(f64, f64)> {
        match self {
            Schedule::Power { c0, a } => Some((*c0, if *c0 == 0.0 { 0.0 } else { *a })),
            Schedule::Constant { c0 } => Some((*c0, 0.0)),
            Schedule::Zero => Some((0.0, 0.0)),
            Schedule::Table { .. } => None,
        }
    }

    /// Short human-readable label, e.g. `1/(t+1)^2`.
    pub fn label(&self) -> String {
        match self {
            Schedule::Power { c0, a } => format!("{}/(t+1)^{}", short(*c0), short(*a)),
            Schedule::Constant { c0 } => short(*c0),
            Schedule::Zero => "0".into(),
            Schedule::Table { times, .. } => format!("table[{}]", times.len()),
        }
    }

    /// Structural requirements on the coefficient over `[0, horizon]`:
    /// non-negative, non-increasing and, for the mass, positive.
    pub fn check_structure(&self, role: Role, horizon: f64) -> Result<(), ScheduleError> {
        self.validate()?;
        if role == Role::Mass {
            let end = self.value(horizon);
            if self.initial() <= 0.0 {
                return Err(ScheduleError::Invalid("eps must be positive".into()));
            }
            if end < EPS_FLOOR {
                return Err(ScheduleError::Degenerate { t: horizon, value: end });
            }
        }
        Ok(())
    }
}

/// Which coefficient a schedule plays in the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Mass,
    Damping,
}

// Index of the segment containing t and the interpolation weight.
fn locate(times: &[f64], t: f64) -> (usize, f64) {
    let last = times.len() - 1;
    if t <= times[0] {
        return (0, 0.0);
    }
    if t >= times[last] {
        return (last, 0.0);
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    (i, (t - times[i]) / (times[i + 1] - times[i]))
}

/// Times at which assumption checks are evaluated: `{0} ∪ {step·2^j} ∪ {horizon}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckGrid {
    times: Vec<f64>,
}

impl CheckGrid {
    pub fn geometric(step: f64, horizon: f64) -> Self {
        assert!(step > 0.0 && horizon > 0.0, "grid step and horizon must be positive");
        let mut times = vec![0.0];
        let mut t = step;
        while t < horizon {
            times.push(t);
            t *= 2.0;
        }
        times.push(horizon);
        CheckGrid { times }
    }

    pub fn from_times(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        times.dedup();
        CheckGrid { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionId {
    /// `|eps'| <= c1 eps` and `alpha <= c2 eps`.
    A31,
    /// `|eps'| <= c1 eps` and `|alpha'| <= c2 alpha`.
    A35,
    /// `eps0 < (beta lambda)^2 / (2|alpha'(t)| + 4 lambda)`.
    A42,
    /// Integrability requirements of the Liouville-Green analysis.
    A46,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    Violated,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub id: AssumptionId,
    pub status: Status,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Right-hand side of the `eps0` threshold (A42 only).
    pub threshold: Option<f64>,
    /// Grid time of the worst violation.
    pub witness: Option<f64>,
    /// Smallest grid time after which the inequality holds on the rest of the grid.
    pub valid_from: Option<f64>,
    pub note: String,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    fn new(id: AssumptionId) -> Self {
        AssumptionReport {
            id,
            status: Status::Unknown,
            c1: None,
            c2: None,
            threshold: None,
            witness: None,
            valid_from: None,
            note: String::new(),
        }
    }
}

// Ratio samples q(t_i) = num(t_i) / den(t_i) on the grid.
struct RatioFit {
    max: f64,
    argmax: f64,
    unbounded: bool,
}

// A ratio counts as unbounded on the long horizon when it keeps growing by at
// least 25% per doubling of t over the last three grid points.
fn fit_ratio(times: &[f64], q: &[f64]) -> RatioFit {
    let (mut max, mut argmax) = (0.0_f64, 0.0);
    for (&t, &v) in times.iter().zip(q) {
        if v > max {
            max = v;
            argmax = t;
        }
    }
    let n = q.len();
    let unbounded = n >= 4
        && q[n - 3] > 0.0
        && q[n - 2] >= 1.25 * q[n - 3]
        && q[n - 1] >= 1.25 * q[n - 2]
        && argmax == times[n - 1];
    RatioFit { max, argmax, unbounded }
}

fn mass_samples(eps: &Schedule, grid: &CheckGrid) -> Result<Vec<f64>, ScheduleError> {
    grid.times()
        .iter()
        .map(|&t| {
            let v = eps.value(t);
            if v < EPS_FLOOR {
                Err(ScheduleError::Degenerate { t, value: v })
            } else {
                Ok(v)
            }
        })
        .collect()
}

// Fitted c1 = max |eps'|/eps. Power family: a/(t+1), maximal at t = 0.
fn fit_c1(eps: &Schedule, grid: &CheckGrid, e: &[f64]) -> (f64, bool, f64) {
    if let Some((_, a)) = eps.power_params() {
        return (a, false, 0.0);
    }
    let q: Vec<f64> = grid.times().iter().zip(e).map(|(&t, &v)| eps.slope(t).abs() / v).collect();
    let fit = fit_ratio(grid.times(), &q);
    (fit.max, fit.unbounded, fit.argmax)
}

/// Assumption A3.1: `|eps'(t)| <= c1 eps(t)` and `alpha(t) <= c2 eps(t)`.
pub fn check_a31(eps: &Schedule, alpha: &Schedule, grid: &CheckGrid) -> Result<AssumptionReport, ScheduleError> {
    let e = mass_samples(eps, grid)?;
    let mut report = AssumptionReport::new(AssumptionId::A31);
    let (c1, c1_unbounded, c1_at) = fit_c1(eps, grid, &e);

    let q: Vec<f64> = grid.times().iter().zip(&e).map(|(&t, &v)| alpha.value(t) / v).collect();
    let grid_fit = fit_ratio(grid.times(), &q);
    let (c2, c2_unbounded) = match (eps.power_params(), alpha.power_params()) {
        // alpha/eps = (a0/e0) (t+1)^(a-b): bounded iff b >= a, then maximal at 0.
        (Some((e0, a)), Some((a0, b))) => {
            if a0 == 0.0 {
                (0.0, false)
            } else if b >= a {
                (a0 / e0, false)
            } else {
                (grid_fit.max, true)
            }
        }
        _ => (grid_fit.max, grid_fit.unbounded),
    };

    report.c1 = Some(c1);
    report.c2 = Some(c2);
    if c1_unbounded || c2_unbounded {
        report.status = Status::Violated;
        report.witness = Some(if c1_unbounded { c1_at } else { grid_fit.argmax });
        report.note = if c1_unbounded {
            "|eps'|/eps grows without bound on the horizon".into()
        } else {
            "alpha/eps grows without bound; alpha decays slower than eps".into()
        };
    } else {
        report.status = Status::Holds;
        report.valid_from = Some(0.0);
    }
    Ok(report)
}

/// Assumption A3.5: `|eps'(t)| <= c1 eps(t)` and `|alpha'(t)| <= c2 alpha(t)`.
/// An identically zero `alpha` gives `c2 = 0`.
pub fn check_a35(eps: &Schedule, alpha: &Schedule, grid: &CheckGrid) -> Result<AssumptionReport, ScheduleError> {
    let e = mass_samples(eps, grid)?;
    let mut report = AssumptionReport::new(AssumptionId::A35);
    let (c1, c1_unbounded, c1_at) = fit_c1(eps, grid, &e);

    let (c2, c2_unbounded, c2_at) = if alpha.is_identically_zero() {
        (0.0, false, 0.0)
    } else if let Some((_, b)) = alpha.power_params() {
        (b, false, 0.0)
    } else {
        let mut q = Vec::with_capacity(grid.times().len());
        for &t in grid.times() {
            let a = alpha.value(t);
            // alpha reaching zero while still decreasing breaks the inequality
            q.push(if a > 0.0 {
                alpha.slope(t).abs() / a
            } else if alpha.slope(t) != 0.0 {
                f64::INFINITY
            } else {
                0.0
            });
        }
        let fit = fit_ratio(grid.times(), &q);
        (fit.max, fit.unbounded || fit.max.is_infinite(), fit.argmax)
    };

    report.c1 = Some(c1);
    report.c2 = Some(c2);
    if c1_unbounded || c2_unbounded {
        report.status = Status::Violated;
        report.witness = Some(if c1_unbounded { c1_at } else { c2_at });
        report.note = "a logarithmic derivative grows without bound on the horizon".into();
    } else {
        report.status = Status::Holds;
        report.valid_from = Some(0.0);
    }
    Ok(report)
}

/// Assumption A4.2 for one eigenvalue: `eps0 < (beta lambda)^2 / (2|alpha'(t)| + 4 lambda)`
/// on the whole grid.
pub fn check_a42(
    eps: &Schedule,
    alpha: &Schedule,
    lambda: f64,
    beta: f64,
    grid: &CheckGrid,
) -> Result<AssumptionReport, ScheduleError> {
    if !(lambda > 0.0 && beta > 0.0) {
        return Err(ScheduleError::Invalid(format!(
            "lambda and beta must be positive (lambda = {lambda}, beta = {beta})"
        )));
    }
    let eps0 = eps.initial();
    let bound = |t: f64| (beta * lambda).powi(2) / (2.0 * alpha.slope(t).abs() + 4.0 * lambda);
    let values: Vec<f64> = grid.times().iter().map(|&t| bound(t)).collect();

    let mut report = AssumptionReport::new(AssumptionId::A42);
    // |alpha'| is maximal at t = 0 for the analytic families.
    let (min, argmin) = if alpha.power_params().is_some() {
        (values[0], 0.0)
    } else {
        values.iter().zip(grid.times()).fold((f64::INFINITY, 0.0), |acc, (&v, &t)| if v < acc.0 { (v, t) } else { acc })
    };
    report.threshold = Some(min);

    let mut valid_from = None;
    for (i, &t) in grid.times().iter().enumerate() {
        if values[i..].iter().all(|&v| eps0 < v) {
            valid_from = Some(t);
            break;
        }
    }
    report.valid_from = valid_from;
    if eps0 < min {
        report.status = Status::Holds;
    } else {
        report.status = Status::Violated;
        report.witness = Some(argmin);
        report.note = format!("eps0 = {eps0} is not below {min}");
    }
    Ok(report)
}

/// Assumption A4.6, classified analytically for the power/constant/zero
/// families: derivatives of orders 1-3 integrable, `eps -> 0`, and
/// `eps'^2 / eps` integrable. Tabulated schedules yield [`Status::Unknown`].
pub fn check_a46(eps: &Schedule, alpha: &Schedule) -> AssumptionReport {
    let mut report = AssumptionReport::new(AssumptionId::A46);
    let (Some((e0, a)), Some(_)) = (eps.power_params(), alpha.power_params()) else {
        report.note = "tabulated schedule: integrability cannot be classified analytically".into();
        return report;
    };
    // Power derivatives scale like (t+1)^(-a-k), integrable for a > 0 (and
    // identically zero for a = 0), so condition (i) always holds here.
    if e0 <= 0.0 {
        report.status = Status::Violated;
        report.note = "eps must be positive".into();
    } else if a <= 0.0 {
        report.status = Status::Violated;
        report.note = "eps does not vanish at infinity".into();
    } else {
        // eps'^2/eps ~ (t+1)^(-a-2)
        report.status = Status::Holds;
        report.valid_from = Some(0.0);
    }
    report
}

/// Plain decimal for moderate magnitudes, exponent notation otherwise.
fn short(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn labels_stay_short() {
        assert_eq!(Schedule::Power { c0: 1.0, a: 2.0 }.label(), "1/(t+1)^2");
        assert_eq!(Schedule::Constant { c0: 1e308 }.label(), "1e308");
        assert_eq!(Schedule::Constant { c0: 0.05 }.label(), "0.05");
    }

    #[test]
    fn power_derivative_at_origin() {
        let s = Schedule::power(1.0, 1.0);
        assert_eq!(s.eval(0.0, 1).unwrap(), -1.0);
        assert_eq!(Schedule::constant(0.5).eval(3.0, 1).unwrap(), 0.0);
        assert_eq!(Schedule::power(0.1, 2.0).eval(0.0, 0).unwrap(), 0.1);
    }

    #[test]
    fn power_higher_derivatives() {
        // 1/(t+1)^2: -2/(t+1)^3, 6/(t+1)^4, -24/(t+1)^5
        let s = Schedule::power(1.0, 2.0);
        assert_relative_eq!(s.eval(1.0, 1).unwrap(), -2.0 / 8.0);
        assert_relative_eq!(s.eval(1.0, 2).unwrap(), 6.0 / 16.0);
        assert_relative_eq!(s.eval(1.0, 3).unwrap(), -24.0 / 32.0);
    }

    #[test]
    fn table_rejects_derivatives() {
        let s = Schedule::table(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        assert_eq!(s.eval(0.5, 0).unwrap(), 0.75);
        assert_eq!(s.eval(0.5, 1), Err(ScheduleError::UnsupportedDerivative { order: 1 }));
        assert_eq!(s.slope(0.5), -0.5);
        assert_eq!(s.value(7.0), 0.5);
    }

    #[test]
    fn invalid_inputs() {
        assert!(Schedule::power(-1.0, 1.0).validate().is_err());
        assert!(Schedule::table(vec![0.0, 1.0], vec![0.5, 1.0]).is_err());
        assert!(matches!(Schedule::Zero.eval(-1.0, 0), Err(ScheduleError::NegativeTime(_))));
        assert!(matches!(Schedule::Zero.eval(1.0, 4), Err(ScheduleError::OrderTooHigh(4))));
    }

    #[test]
    fn integrability_flags() {
        assert_eq!(Schedule::power(1.0, 2.0).integrability(), Integrability::Integrable);
        assert_eq!(Schedule::power(1.0, 1.0).integrability(), Integrability::NonIntegrable);
        assert_eq!(Schedule::power(1.0, 0.5).integrability(), Integrability::NonIntegrable);
        assert_eq!(Schedule::constant(0.3).integrability(), Integrability::NonIntegrable);
        assert_eq!(Schedule::Zero.integrability(), Integrability::Integrable);
        let t = Schedule::table(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(t.integrability(), Integrability::Unknown);
    }

    #[test]
    fn a31_examples() {
        let grid = CheckGrid::geometric(0.1, 100.0);
        let r = check_a31(&Schedule::power(1.0, 1.0), &Schedule::Zero, &grid).unwrap();
        assert!(r.holds());
        assert_eq!((r.c1, r.c2), (Some(1.0), Some(0.0)));

        let r = check_a31(&Schedule::constant(0.4), &Schedule::constant(0.4), &grid).unwrap();
        assert!(r.holds());
        assert_eq!((r.c1, r.c2), (Some(0.0), Some(1.0)));

        // alpha decays slower than eps
        let r = check_a31(&Schedule::power(1.0, 2.0), &Schedule::power(1.0, 1.0), &grid).unwrap();
        assert_eq!(r.status, Status::Violated);
    }

    #[test]
    fn a31_gaussian_table_is_unbounded() {
        let times: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
        let eps = Schedule::tabulate(times, |t| (-t * t).exp()).unwrap();
        let grid = CheckGrid::geometric(0.1, 5.0);
        let r = check_a31(&eps, &Schedule::Zero, &grid).unwrap();
        assert_eq!(r.status, Status::Violated);
        assert_eq!(r.witness, Some(5.0));
    }

    #[test]
    fn a31_floor_is_degenerate() {
        let eps = Schedule::table(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let grid = CheckGrid::geometric(0.1, 2.0);
        assert!(matches!(check_a31(&eps, &Schedule::Zero, &grid), Err(ScheduleError::Degenerate { .. })));
    }

    #[test]
    fn a35_examples() {
        let grid = CheckGrid::geometric(0.1, 100.0);
        let r = check_a35(&Schedule::power(0.5, 1.0), &Schedule::power(2.0, 2.0), &grid).unwrap();
        assert!(r.holds());
        assert_eq!((r.c1, r.c2), (Some(1.0), Some(2.0)));
        let r = check_a35(&Schedule::power(0.5, 1.0), &Schedule::constant(1.0), &grid).unwrap();
        assert_eq!(r.c2, Some(0.0));
        let r = check_a35(&Schedule::power(0.5, 1.0), &Schedule::Zero, &grid).unwrap();
        assert_eq!(r.c2, Some(0.0));
    }

    #[test]
    fn a42_examples() {
        let grid = CheckGrid::geometric(0.1, 100.0);
        let r = check_a42(&Schedule::constant(0.1), &Schedule::Zero, 1.0, 1.0, &grid).unwrap();
        assert!(r.holds());
        assert_eq!(r.threshold, Some(0.25));
        let r = check_a42(&Schedule::constant(0.3), &Schedule::Zero, 1.0, 1.0, &grid).unwrap();
        assert_eq!(r.status, Status::Violated);
        let r = check_a42(&Schedule::constant(0.3), &Schedule::Zero, 4.0, 1.0, &grid).unwrap();
        assert_eq!(r.threshold, Some(1.0));
        // |alpha'(0)| = 1 tightens the threshold to 1/6
        let r = check_a42(&Schedule::power(0.2, 1.0), &Schedule::power(1.0, 1.0), 1.0, 1.0, &grid).unwrap();
        assert_eq!(r.threshold, Some(1.0 / 6.0));
        assert_eq!(r.status, Status::Violated);
        assert_eq!(r.witness, Some(0.0));
        assert!(r.valid_from.unwrap() > 0.0);
    }

    #[test]
    fn a46_examples() {
        assert!(check_a46(&Schedule::power(0.1, 1.0), &Schedule::constant(1.0)).holds());
        assert_eq!(check_a46(&Schedule::constant(0.1), &Schedule::Zero).status, Status::Violated);
        assert!(check_a46(&Schedule::power(0.1, 2.0), &Schedule::power(1.0, 1.0)).holds());
        let t = Schedule::table(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        assert_eq!(check_a46(&t, &Schedule::Zero).status, Status::Unknown);
    }

    #[test]
    fn geometric_grid_shape() {
        let g = CheckGrid::geometric(0.1, 1.0);
        assert_eq!(g.times(), &[0.0, 0.1, 0.2, 0.4, 0.8, 1.0]);
    }

    #[test]
    fn structure_checks() {
        assert!(Schedule::Zero.check_structure(Role::Mass, 10.0).is_err());
        assert!(Schedule::Zero.check_structure(Role::Damping, 10.0).is_ok());
        assert!(Schedule::power(1.0, 20.0).check_structure(Role::Mass, 1e3).is_err());
    }

    #[test]
    fn config_syntax_round_trip() {
        #[derive(Deserialize)]
        struct W {
            eps: Schedule,
        }
        let w: W = serde_json::from_str(r#"{"eps": {"family": "power", "c0": 0.1, "a": 2}}"#).unwrap();
        assert_eq!(w.eps, Schedule::power(0.1, 2.0));
        assert!(serde_json::from_str::<W>(r#"{"eps": {"family": "power", "c0": 0.1, "b": 2}}"#).is_err());
    }
}
