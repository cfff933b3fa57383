//! Rate functions, model parameters and initial data.
//!
//! A [`RateFunction`] maps a nonnegative particle density to a nonnegative
//! rate. Birth and death rates of the particle system are `ell * b(count / ell)`
//! and `ell * d(count / ell)`; the reaction term of the limiting equation is
//! `f = b - d`.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("torus needs at least 2 sites, got N = {0}")]
    TooFewSites(usize),
    #[error("particles-per-site scale must be positive")]
    ZeroScale,
    #[error("death rate must vanish at zero density, d(0) = {0}")]
    DeathAtZero(f64),
    #[error("reaction term must be nonnegative at zero, b(0) - d(0) = {0}")]
    NegativeSourceAtZero(f64),
    #[error("rate table needs at least one knot with increasing x values")]
    BadTable,
    #[error("rate table {path}: {source}")]
    TableIo {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("rate table {path}, row {row}: cannot parse {value:?}")]
    TableParse {
        path: String,
        row: usize,
        value: String,
    },
}

/// Family tag of a rate function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateFamily {
    Power,
    PowerPlusDeath,
    Truncated,
    Linear,
    Bounded,
    CustomTable,
}

/// Closed form of a rate function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RateKind {
    /// `coef * x^exponent`
    Power { coef: f64, exponent: f64 },
    /// `x^exponent + death(x)`, the birth rate whose reaction term is a pure power.
    PowerPlusDeath {
        exponent: f64,
        death: Box<RateFunction>,
    },
    /// `slope * x`
    Linear { slope: f64 },
    /// `min(slope * x, cap)`
    Bounded { slope: f64, cap: f64 },
    /// `base` on `[0, coincide]`, a cosine ramp down to zero on
    /// `[coincide, coincide + width]`, zero afterwards.
    Truncated {
        base: Box<RateFunction>,
        coincide: f64,
        width: f64,
    },
    /// Piecewise-linear interpolation through `(xs, ys)`, constant beyond the
    /// last knot and equal to the first value before the first knot.
    CustomTable { xs: Vec<f64>, ys: Vec<f64> },
}

/// A Lipschitz constant valid on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    pub constant: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    #[serde(flatten)]
    pub kind: RateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzBound>,
}

impl From<RateKind> for RateFunction {
    fn from(kind: RateKind) -> Self {
        Self {
            kind,
            lipschitz: None,
        }
    }
}

impl RateFunction {
    pub fn zero() -> Self {
        RateKind::Linear { slope: 0.0 }.into()
    }

    pub fn power(exponent: f64) -> Self {
        RateKind::Power {
            coef: 1.0,
            exponent,
        }
        .into()
    }

    pub fn scaled_power(coef: f64, exponent: f64) -> Self {
        RateKind::Power { coef, exponent }.into()
    }

    pub fn power_plus_death(exponent: f64, death: RateFunction) -> Self {
        RateKind::PowerPlusDeath {
            exponent,
            death: Box::new(death),
        }
        .into()
    }

    pub fn linear(slope: f64) -> Self {
        RateKind::Linear { slope }.into()
    }

    pub fn bounded(slope: f64, cap: f64) -> Self {
        RateKind::Bounded { slope, cap }.into()
    }

    /// Table through the given knots. Knot abscissae must be strictly increasing.
    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ModelError> {
        if xs.is_empty() || xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::BadTable);
        }
        Ok(RateKind::CustomTable { xs, ys }.into())
    }

    /// Loads a two-column `x,value` CSV. A non-numeric first row is treated
    /// as a header.
    pub fn table_from_csv(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| ModelError::TableIo {
                path: shown.clone(),
                source,
            })?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|source| ModelError::TableIo {
                path: shown.clone(),
                source,
            })?;
            let field = |i: usize| record.get(i).unwrap_or("").to_string();
            let parsed = (field(0).parse::<f64>(), field(1).parse::<f64>());
            match parsed {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if row == 0 => continue,
                (Err(_), _) => {
                    return Err(ModelError::TableParse {
                        path: shown,
                        row,
                        value: field(0),
                    })
                }
                (_, Err(_)) => {
                    return Err(ModelError::TableParse {
                        path: shown,
                        row,
                        value: field(1),
                    })
                }
            }
        }
        Self::table(xs, ys)
    }

    pub fn with_lipschitz(mut self, bound: LipschitzBound) -> Self {
        self.lipschitz = Some(bound);
        self
    }

    pub fn family(&self) -> RateFamily {
        match self.kind {
            RateKind::Power { .. } => RateFamily::Power,
            RateKind::PowerPlusDeath { .. } => RateFamily::PowerPlusDeath,
            RateKind::Linear { .. } => RateFamily::Linear,
            RateKind::Bounded { .. } => RateFamily::Bounded,
            RateKind::Truncated { .. } => RateFamily::Truncated,
            RateKind::CustomTable { .. } => RateFamily::CustomTable,
        }
    }

    /// Evaluates the rate at density `x`. Negative arguments are clamped to 0.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match &self.kind {
            RateKind::Power { coef, exponent } => coef * pow(x, *exponent),
            RateKind::PowerPlusDeath { exponent, death } => pow(x, *exponent) + death.eval(x),
            RateKind::Linear { slope } => slope * x,
            RateKind::Bounded { slope, cap } => (slope * x).min(*cap),
            RateKind::Truncated {
                base,
                coincide,
                width,
            } => {
                if x <= *coincide {
                    base.eval(x)
                } else if x >= coincide + width {
                    0.0
                } else {
                    let ramp = base.eval(*coincide) * 0.5 * (1.0 + (PI * (x - coincide) / width).cos());
                    ramp.min(base.eval(x)).max(0.0)
                }
            }
            RateKind::CustomTable { xs, ys } => interpolate(xs, ys, x),
        }
    }

    /// True when the function vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            RateKind::Power { coef, .. } => *coef == 0.0,
            RateKind::Linear { slope } => *slope == 0.0,
            RateKind::Bounded { slope, cap } => *slope == 0.0 || *cap == 0.0,
            RateKind::PowerPlusDeath { .. } => false,
            RateKind::Truncated { base, width, coincide } => {
                base.is_zero() || (*coincide <= 0.0 && *width <= 0.0)
            }
            RateKind::CustomTable { ys, .. } => ys.iter().all(|&y| y == 0.0),
        }
    }

    /// Slope when the function is `c * x`.
    pub fn linear_slope(&self) -> Option<f64> {
        match &self.kind {
            RateKind::Linear { slope } => Some(*slope),
            RateKind::Power { coef, exponent } if *exponent == 1.0 => Some(*coef),
            _ => None,
        }
    }

    /// Right end of the support, when compact.
    pub fn support_bound(&self) -> Option<f64> {
        match &self.kind {
            RateKind::Truncated {
                coincide, width, ..
            } => Some(coincide + width),
            _ if self.is_zero() => Some(0.0),
            _ => None,
        }
    }

    /// `sup_x eval(x)` over `[0, inf)`, `None` when unbounded.
    pub fn sup_norm(&self) -> Option<f64> {
        if self.is_zero() {
            return Some(0.0);
        }
        match &self.kind {
            RateKind::Bounded { cap, .. } => Some(cap.max(0.0)),
            RateKind::CustomTable { ys, .. } => ys.iter().copied().reduce(f64::max),
            RateKind::Truncated {
                coincide, width, ..
            } => {
                // Continuous on a compact support: scan a fine grid.
                let hi = coincide + width;
                let steps = 20_000;
                let grid_max = (0..=steps)
                    .map(|i| self.eval(hi * i as f64 / steps as f64))
                    .fold(0.0, f64::max);
                Some(grid_max)
            }
            _ => None,
        }
    }

    /// Largest absolute difference quotient on a uniform grid of `[lo, hi]`.
    /// Returns the stored bound instead when one covers the interval.
    pub fn lipschitz_on(&self, lo: f64, hi: f64, points: usize) -> f64 {
        if let Some(bound) = self.lipschitz {
            if bound.lo <= lo && hi <= bound.hi {
                return bound.constant;
            }
        }
        let points = points.max(2);
        let h = (hi - lo) / (points - 1) as f64;
        let mut prev = self.eval(lo);
        let mut best: f64 = 0.0;
        for i in 1..points {
            let next = self.eval(lo + h * i as f64);
            best = best.max((next - prev).abs() / h);
            prev = next;
        }
        best
    }
}

fn pow(x: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        x.powi(exponent as i32)
    } else {
        x.powf(exponent)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let hi = xs.partition_point(|&k| k <= x);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Replaces `b` above `m + 1` by a cosine ramp of width `w` down to zero.
///
/// The result agrees with `b` on `[0, m + 1]`, vanishes on `[m + 1 + w, inf)`,
/// is continuous and never exceeds `b`.
pub fn truncate_birth(b: &RateFunction, m: f64, w: f64) -> RateFunction {
    assert!(w > 0.0, "taper width must be positive");
    RateKind::Truncated {
        base: Box::new(b.clone()),
        coincide: m + 1.0,
        width: w,
    }
    .into()
}

/// Initial density profile on the continuous torus `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Profile {
    /// `value`
    Constant { value: f64 },
    /// `base + amplitude * sin^2(pi * x)`
    SinSquared { base: f64, amplitude: f64 },
    /// `base + amplitude * sin(2 pi modes x)`
    Sine {
        base: f64,
        amplitude: f64,
        #[serde(default = "one")]
        modes: u32,
    },
    /// `slope * x` on `[0, 1)`; discontinuous across the wrap point.
    Ramp { slope: f64 },
    /// Periodic piecewise-linear profile through equally spaced knots.
    Knots { values: Vec<f64> },
}

fn one() -> u32 {
    1
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        match self {
            Profile::Constant { value } => *value,
            Profile::SinSquared { base, amplitude } => {
                let s = (PI * x).sin();
                base + amplitude * s * s
            }
            Profile::Sine {
                base,
                amplitude,
                modes,
            } => base + amplitude * (2.0 * PI * f64::from(*modes) * x).sin(),
            Profile::Ramp { slope } => slope * x,
            Profile::Knots { values } => {
                let n = values.len();
                let pos = x * n as f64;
                let k = (pos.floor() as usize).min(n - 1);
                let t = pos - k as f64;
                (1.0 - t) * values[k] + t * values[(k + 1) % n]
            }
        }
    }

    /// `max_x profile(x)`, exact for the closed forms.
    pub fn sup(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::SinSquared { base, amplitude } => base + amplitude.max(0.0),
            Profile::Sine {
                base, amplitude, ..
            } => base + amplitude.abs(),
            Profile::Ramp { slope } => slope.max(0.0),
            Profile::Knots { values } => values.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    /// Values at the grid points `k / n`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval(k as f64 / n as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitRule {
    /// `round(ell * phi(k / N))`, halves rounded up.
    #[default]
    DeterministicRound,
    /// Independent Poisson counts with mean `ell * phi(k / N)`.
    Poisson,
}

/// Parameters of the particle system on the discrete torus with `n` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub ell: u64,
    pub birth: RateFunction,
    pub death: RateFunction,
    pub profile: Profile,
    #[serde(default)]
    pub init_rule: InitRule,
}

impl ModelParams {
    pub fn new(
        n: usize,
        ell: u64,
        birth: RateFunction,
        death: RateFunction,
        profile: Profile,
    ) -> Result<Self, ModelError> {
        let params = Self {
            n,
            ell,
            birth,
            death,
            profile,
            init_rule: InitRule::DeterministicRound,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_init_rule(mut self, rule: InitRule) -> Self {
        self.init_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n < 2 {
            return Err(ModelError::TooFewSites(self.n));
        }
        if self.ell == 0 {
            return Err(ModelError::ZeroScale);
        }
        let d0 = self.death.eval(0.0);
        if d0 != 0.0 {
            return Err(ModelError::DeathAtZero(d0));
        }
        let f0 = self.birth.eval(0.0) - d0;
        if f0 < 0.0 {
            return Err(ModelError::NegativeSourceAtZero(f0));
        }
        Ok(())
    }

    /// Reaction term `f(u) = b(u) - d(u)`.
    pub fn source(&self, u: f64) -> f64 {
        self.birth.eval(u) - self.death.eval(u)
    }

    /// Number of particles `ell * N` corresponding to unit mean density.
    pub fn mass_scale(&self) -> f64 {
        self.ell as f64 * self.n as f64
    }
}

/// Event rates at a site holding `count` particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteRates {
    pub jump_right: f64,
    pub jump_left: f64,
    pub birth: f64,
    pub death: f64,
}

impl SiteRates {
    pub fn total(&self) -> f64 {
        self.jump_right + self.jump_left + self.birth + self.death
    }
}

pub fn site_rates(count: u64, params: &ModelParams) -> SiteRates {
    let ell = params.ell as f64;
    let jump = (params.n * params.n) as f64 * count as f64;
    let density = count as f64 / ell;
    SiteRates {
        jump_right: jump,
        jump_left: jump,
        birth: ell * params.birth.eval(density),
        death: if count == 0 {
            0.0
        } else {
            ell * params.death.eval(density)
        },
    }
}

/// Initial occupation numbers drawn according to `params.init_rule`.
pub fn initial_config<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Vec<u64> {
    let ell = params.ell as f64;
    params
        .profile
        .sample(params.n)
        .into_iter()
        .map(|phi| {
            let mean = ell * phi.max(0.0);
            match params.init_rule {
                InitRule::DeterministicRound => (mean + 0.5).floor() as u64,
                InitRule::Poisson => {
                    if mean > 0.0 {
                        Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
                    } else {
                        0
                    }
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn quad_linear(n: usize, ell: u64) -> ModelParams {
        ModelParams::new(
            n,
            ell,
            RateFunction::power(2.0),
            RateFunction::linear(1.0),
            Profile::constant(1.0),
        )
        .unwrap()
    }

    #[test]
    fn site_rates_direct_evaluation() {
        let r = site_rates(3, &quad_linear(2, 2));
        assert_eq!((r.jump_right, r.jump_left, r.birth, r.death), (12.0, 12.0, 4.5, 3.0));

        let p = ModelParams::new(4, 1, RateFunction::power(2.0), RateFunction::zero(), Profile::constant(1.0)).unwrap();
        let r = site_rates(1, &p);
        assert_eq!((r.jump_right, r.jump_left, r.birth, r.death), (16.0, 16.0, 1.0, 0.0));
    }

    #[test]
    fn no_death_on_empty_site() {
        for n in [2, 7, 64] {
            for ell in [1, 5, 100] {
                assert_eq!(site_rates(0, &quad_linear(n, ell)).death, 0.0);
            }
        }
    }

    #[test]
    fn truncation_examples() {
        let b = RateFunction::power(2.0);
        let r = truncate_birth(&b, 5.0, 1.0);
        assert_eq!(r.eval(3.0), 9.0);
        assert_eq!(r.eval(100.0), 0.0);
        assert_eq!(r.support_bound(), Some(7.0));
        assert_eq!(r.family(), RateFamily::Truncated);

        // Cosine ramp at the midpoint is half of b(6) = 36.
        let mid = r.eval(6.5);
        assert_abs_diff_eq!(mid, 18.0, epsilon = 1e-12);
        assert!((0.0..=b.eval(6.5)).contains(&mid));

        let h = 1e-9;
        assert_abs_diff_eq!(r.eval(6.0 - h), r.eval(6.0 + h), epsilon = 1e-6);
        assert_abs_diff_eq!(r.eval(7.0 - h), r.eval(7.0 + h), epsilon = 1e-6);
    }

    #[test]
    fn deterministic_initial_data() {
        let mut rng = replica_rng(1, 0);
        let mut p = quad_linear(4, 8);
        assert_eq!(initial_config(&p, &mut rng), vec![8, 8, 8, 8]);

        p.ell = 10;
        p.profile = Profile::Ramp { slope: 1.0 };
        assert_eq!(initial_config(&p, &mut rng), vec![0, 3, 5, 8]);
    }

    #[test]
    fn poisson_initial_data_mean() {
        let p = quad_linear(4, 8).with_init_rule(InitRule::Poisson);
        let mut rng = replica_rng(7, 3);
        let draws = 10_000;
        let mut sum = [0.0f64; 4];
        let mut sum_sq = [0.0f64; 4];
        for _ in 0..draws {
            for (k, c) in initial_config(&p, &mut rng).into_iter().enumerate() {
                sum[k] += c as f64;
                sum_sq[k] += (c * c) as f64;
            }
        }
        for k in 0..4 {
            let mean = sum[k] / draws as f64;
            let var = sum_sq[k] / draws as f64 - mean * mean;
            let se = (var / draws as f64).sqrt();
            assert!((mean - 8.0).abs() < 3.0 * se, "site {k}: mean {mean}, se {se}");
        }
    }

    #[test]
    fn parameter_validation() {
        let bad_death = ModelParams::new(
            4,
            1,
            RateFunction::power(2.0),
            RateFunction::table(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap(),
            Profile::constant(1.0),
        );
        assert!(matches!(bad_death, Err(ModelError::DeathAtZero(_))));
        let one_site = ModelParams::new(1, 1, RateFunction::zero(), RateFunction::zero(), Profile::constant(1.0));
        assert!(matches!(one_site, Err(ModelError::TooFewSites(1))));
        let no_scale = ModelParams::new(2, 0, RateFunction::zero(), RateFunction::zero(), Profile::constant(1.0));
        assert!(matches!(no_scale, Err(ModelError::ZeroScale)));
    }

    #[test]
    fn table_interpolates_and_extends() {
        let t = RateFunction::table(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 3.0);
        assert_eq!(t.eval(10.0), 4.0);
        assert_eq!(t.sup_norm(), Some(4.0));
        assert!(RateFunction::table(vec![1.0, 0.5], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn table_from_csv_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rate.csv");
        std::fs::write(&path, "x,value\n0,0\n1,1\n2,4\n").unwrap();
        let t = RateFunction::table_from_csv(&path).unwrap();
        assert_eq!(t.eval(1.5), 2.5);
        std::fs::write(&path, "0,0\n1,oops\n").unwrap();
        assert!(matches!(
            RateFunction::table_from_csv(&path),
            Err(ModelError::TableParse { row: 1, .. })
        ));
    }

    #[test]
    fn serde_round_trip_of_rate() {
        let b = RateFunction::power_plus_death(2.0, RateFunction::bounded(1.0, 1.0));
        let text = toml::to_string(&b).unwrap();
        let back: RateFunction = toml::from_str(&text).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn lipschitz_estimate() {
        let f = RateFunction::power(2.0);
        let l = f.lipschitz_on(0.0, 3.0, 3001);
        assert!((l - 6.0).abs() < 1e-2);
        let f = f.with_lipschitz(LipschitzBound { constant: 7.0, lo: 0.0, hi: 4.0 });
        assert_eq!(f.lipschitz_on(0.0, 3.0, 10), 7.0);
    }

    proptest! {
        #[test]
        fn power_rates_convex_nondecreasing(p in 1.0001f64..4.0) {
            let b = RateFunction::power(p);
            let h = 0.01;
            let vals: Vec<f64> = (0..1000).map(|i| b.eval(i as f64 * h)).collect();
            for w in vals.windows(3) {
                prop_assert!(w[1] >= w[0]);
                prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
            }
        }

        #[test]
        fn truncation_below_and_coincident(m in 0.5f64..20.0, w in 0.1f64..5.0, x in 0.0f64..40.0) {
            let b = RateFunction::power(2.0);
            let r = truncate_birth(&b, m, w);
            prop_assert!(r.eval(x) <= b.eval(x));
            prop_assert!(r.eval(x) >= 0.0);
            if x <= m + 1.0 {
                prop_assert_eq!(r.eval(x), b.eval(x));
            }
            if x >= m + 1.0 + w {
                prop_assert_eq!(r.eval(x), 0.0);
            }
        }

        #[test]
        fn rounded_initial_data_close_to_profile(ell in 1u64..200, n in 2usize..200, base in 0.0f64..3.0, amp in 0.0f64..2.0) {
            let profile = Profile::SinSquared { base, amplitude: amp };
            let p = ModelParams::new(n, ell, RateFunction::zero(), RateFunction::zero(), profile.clone()).unwrap();
            let eta = initial_config(&p, &mut replica_rng(0, 0));
            // oscillation of base + amp sin^2(pi x) at scale 1/n is at most amp * pi / n
            let osc = amp * std::f64::consts::PI / n as f64;
            for (k, &c) in eta.iter().enumerate() {
                let err = (c as f64 / ell as f64 - profile.eval(k as f64 / n as f64)).abs();
                prop_assert!(err <= 0.5 / ell as f64 + osc + 1e-12);
            }
        }
    }
}
