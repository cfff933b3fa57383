//! One-dimensional birth-death chains: expected first-passage times, the
//! expected explosion time and exact simulation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelParams;
use crate::pde;

#[derive(Debug, Error, PartialEq)]
pub enum BdError {
    #[error("birth rate vanishes at state {0}")]
    ZeroBirthRate(u64),
    #[error("death rate at the lowest state must be zero, got {0}")]
    DeathAtFloor(f64),
    #[error("remainder bound stays above {tolerance} up to state {reached}")]
    NonSummable { tolerance: f64, reached: u64 },
    #[error("death rate must be bounded or linear, got {0}")]
    UnsupportedDeathRate(String),
}

pub type Rate = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Rates `b_r`, `d_r` of a chain on `{floor, floor + 1, ...}`.
///
/// Rates are given as functions of a real argument so that the remainder of
/// the explosion series can be bracketed by integrals; the chain itself only
/// ever evaluates them at integers. The death rate at `floor` is ignored
/// (reflecting boundary).
#[derive(Clone)]
pub struct BirthDeathSpec {
    birth: Rate,
    death: Rate,
    floor: u64,
}

impl fmt::Debug for BirthDeathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BirthDeathSpec")
            .field("b_floor", &self.b(self.floor))
            .field("floor", &self.floor)
            .finish()
    }
}

impl BirthDeathSpec {
    pub fn from_fns(
        birth: impl Fn(f64) -> f64 + Send + Sync + 'static,
        death: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, BdError> {
        let d0 = death(0.0);
        if d0 != 0.0 {
            return Err(BdError::DeathAtFloor(d0));
        }
        Ok(Self {
            birth: Arc::new(birth),
            death: Arc::new(death),
            floor: 0,
        })
    }

    pub fn pure_birth(birth: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            birth: Arc::new(birth),
            death: Arc::new(|_| 0.0),
            floor: 0,
        }
    }

    /// The chain dominated by the particle system's total mass:
    /// `b_r = ell N b(r / (ell N))`, and `d_r = ell N sup d` for bounded `d`
    /// or `d_r = ell N d(r / (ell N))` for linear `d`.
    pub fn from_model(params: &ModelParams) -> Result<Self, BdError> {
        let mass = params.mass_scale();
        let b = params.birth.clone();
        let d = params.death.clone();
        let birth: Rate = Arc::new(move |r| mass * b.eval(r / mass));
        let death: Rate = if d.is_zero() {
            Arc::new(|_| 0.0)
        } else if d.linear_slope().is_some() {
            Arc::new(move |r| mass * d.eval(r / mass))
        } else if let Some(sup) = d.sup_norm() {
            Arc::new(move |r| if r >= 1.0 { mass * sup } else { 0.0 })
        } else {
            return Err(BdError::UnsupportedDeathRate(format!("{:?}", d.family())));
        };
        Ok(Self {
            birth,
            death,
            floor: 0,
        })
    }

    /// Restricts the chain to `{floor, floor + 1, ...}` by suppressing deaths
    /// at `floor`.
    pub fn reflect_at(mut self, floor: u64) -> Self {
        self.floor = floor;
        self
    }

    pub fn floor(&self) -> u64 {
        self.floor
    }

    pub fn b(&self, r: u64) -> f64 {
        (self.birth)(r as f64)
    }

    pub fn d(&self, r: u64) -> f64 {
        if r <= self.floor {
            0.0
        } else {
            (self.death)(r as f64)
        }
    }

    fn birth_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |s| (self.birth)(s)
    }
}

/// `f[i]` is the expected time to reach `floor + i + 1` from `floor + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimes {
    pub floor: u64,
    pub f: Vec<f64>,
    pub r_max: u64,
    /// Upper bound on `sum_{r > r_max} f_r`; infinite when it cannot be
    /// bounded.
    pub tail_bound: f64,
}

impl HittingTimes {
    pub fn at(&self, r: u64) -> f64 {
        self.f[(r - self.floor) as usize]
    }

    /// Expected time to go from `from` to `to`.
    pub fn passage(&self, from: u64, to: u64) -> f64 {
        (from..to).map(|r| self.at(r)).sum()
    }

    /// CSV with columns `r,b_r,d_r,f_r`.
    pub fn to_csv(&self, spec: &BirthDeathSpec) -> String {
        let mut out = String::from("r,b_r,d_r,f_r\n");
        for (i, f) in self.f.iter().enumerate() {
            let r = self.floor + i as u64;
            out.push_str(&format!(
                "{r},{},{},{}\n",
                crate::fmt17(spec.b(r)),
                crate::fmt17(spec.d(r)),
                crate::fmt17(*f)
            ));
        }
        out
    }
}

/// Runs `f_r = 1/b_r + (d_r/b_r) f_{r-1}` from the floor upwards, calling
/// `visit(r, f_r)` until it returns false or `r_max` is passed.
fn recurse(spec: &BirthDeathSpec, r_max: u64, mut visit: impl FnMut(u64, f64) -> bool) -> Result<(), BdError> {
    let mut prev = 0.0;
    for r in spec.floor..=r_max {
        let b = spec.b(r);
        if !(b > 0.0) {
            return Err(BdError::ZeroBirthRate(r));
        }
        let f = if r == spec.floor {
            1.0 / b
        } else {
            1.0 / b + spec.d(r) / b * prev
        };
        if !visit(r, f) {
            break;
        }
        prev = f;
    }
    Ok(())
}

pub fn expected_hitting_times(spec: &BirthDeathSpec, r_max: u64) -> Result<HittingTimes, BdError> {
    let mut f = Vec::new();
    recurse(spec, r_max, |_, fr| {
        f.push(fr);
        true
    })?;
    let last = *f.last().unwrap_or(&0.0);
    let tail_bound = remainder_bracket(spec, r_max, last).map_or(f64::INFINITY, |(_, hi)| hi);
    Ok(HittingTimes {
        floor: spec.floor,
        f,
        r_max,
        tail_bound,
    })
}

/// Largest `d_r / b_r` over `r > from`, probed at geometrically spaced states.
fn death_ratio_beyond(spec: &BirthDeathSpec, from: u64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut r = from as f64 + 1.0;
    while r < 1e15 {
        let k = r.floor() as u64;
        let b = spec.b(k);
        let ratio = if b.is_infinite() { 0.0 } else { spec.d(k) / b };
        worst = worst.max(ratio);
        r = (r * 1.05).max(r + 1.0);
    }
    worst
}

/// Bracket `[lo, hi]` on `sum_{r > big_r} f_r`, given `f_{big_r}`.
///
/// With `b` nondecreasing beyond `big_r`, `sum_{r > big_r} 1/b_r` lies between
/// `int_{big_r+1}^inf 1/b` and that integral plus `1/b_{big_r+1}`. The upper
/// end also unrolls the recursion once, `S <= sum 1/b_r + rho (f_{big_r} + S)`,
/// with `rho` the largest death ratio beyond `big_r`.
fn remainder_bracket(spec: &BirthDeathSpec, big_r: u64, f_r: f64) -> Option<(f64, f64)> {
    let b = spec.birth_fn();
    let integral = pde::tail_integral(&b, big_r as f64 + 1.0).ok()?;
    let rho = death_ratio_beyond(spec, big_r);
    if rho >= 1.0 {
        return None;
    }
    let upper_birth = integral + 1.0 / spec.b(big_r + 1);
    Some((integral, (upper_birth + rho * f_r) / (1.0 - rho)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplosionTime {
    pub value: f64,
    pub truncation_index: u64,
    pub tail_bound: f64,
}

const MAX_TRUNCATION: u64 = 10_000_000;

/// `sum_{r >= r0} f_r`: the partial sum up to a truncation index plus the
/// midpoint of the remainder bracket, whose half-width is `tail_bound`.
pub fn expected_explosion_time(spec: &BirthDeathSpec, r0: u64, tolerance: f64) -> Result<ExplosionTime, BdError> {
    let r0 = r0.max(spec.floor);
    let non_summable = |reached| BdError::NonSummable { tolerance, reached };
    if remainder_bracket(spec, r0, 0.0).is_none() {
        return Err(non_summable(r0));
    }
    let mut partial = 0.0;
    let mut checkpoint = r0 + 16;
    let mut result = None;
    let mut failure = None;
    recurse(spec, MAX_TRUNCATION, |r, f| {
        if r >= r0 {
            partial += f;
        }
        if r < checkpoint {
            return true;
        }
        checkpoint = checkpoint + checkpoint / 4;
        match remainder_bracket(spec, r, f) {
            Some((lo, hi)) if 0.5 * (hi - lo) < tolerance => {
                result = Some(ExplosionTime {
                    value: partial + 0.5 * (lo + hi),
                    truncation_index: r,
                    tail_bound: 0.5 * (hi - lo),
                });
                false
            }
            Some(_) => true,
            None => {
                failure = Some(r);
                false
            }
        }
    })?;
    match (result, failure) {
        (Some(e), _) => Ok(e),
        (None, Some(r)) => Err(non_summable(r)),
        (None, None) => Err(non_summable(MAX_TRUNCATION)),
    }
}

/// One simulated explosion-time sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdSample {
    /// Time to reach the cap.
    pub elapsed: f64,
    /// Expected remaining time to explosion from the cap, if finite.
    pub tail: Option<f64>,
}

impl BdSample {
    pub fn explosion_time(&self) -> Option<f64> {
        self.tail.map(|t| self.elapsed + t)
    }
}

/// Exact simulation from `r0` until the state reaches `cap`.
pub fn passage_time<R: Rng + ?Sized>(spec: &BirthDeathSpec, r0: u64, cap: u64, rng: &mut R) -> f64 {
    let mut r = r0.max(spec.floor);
    let mut t = 0.0;
    while r < cap {
        let b = spec.b(r);
        let d = spec.d(r);
        let total = b + d;
        if !(total > 0.0) {
            return f64::INFINITY;
        }
        t += rng.sample::<f64, _>(Exp1) / total;
        if rng.random::<f64>() * total < b {
            r += 1;
        } else {
            r -= 1;
        }
    }
    t
}

/// Simulates the chain up to `cap` with the analytic tail beyond it cached.
#[derive(Debug, Clone)]
pub struct BdSimulator {
    spec: BirthDeathSpec,
    cap: u64,
    tail: Option<f64>,
}

impl BdSimulator {
    pub fn new(spec: BirthDeathSpec, cap: u64) -> Self {
        let tail = expected_explosion_time(&spec, cap, 1e-10).ok().map(|e| e.value);
        Self { spec, cap, tail }
    }

    pub fn tail(&self) -> Option<f64> {
        self.tail
    }

    pub fn sample<R: Rng + ?Sized>(&self, r0: u64, rng: &mut R) -> BdSample {
        BdSample {
            elapsed: passage_time(&self.spec, r0, self.cap, rng),
            tail: self.tail,
        }
    }
}

pub fn simulate_bd<R: Rng + ?Sized>(spec: &BirthDeathSpec, r0: u64, cap: u64, rng: &mut R) -> BdSample {
    BdSimulator::new(spec.clone(), cap).sample(r0, rng)
}
