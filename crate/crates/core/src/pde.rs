//! Method-of-lines solver for `u_t = u_xx + f(u)` on the periodic unit interval.
//!
//! Space is discretised on `x_k = k / N` with the `N^2`-scaled periodic
//! second difference; the resulting ODE system is advanced with classical RK4.
//! Every step is checked against two half steps and the step is halved until
//! the two agree, so the time-integration error stays far below the `O(N^-2)`
//! spatial error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Profile;
use crate::quadrature;

#[derive(Debug, Error, PartialEq)]
pub enum PdeError {
    #[error("step size underflow at t = {t}: dt = {dt:e}")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("integral of 1/f from {from} to infinity diverges")]
    DivergentTail { from: f64 },
    #[error("source term is not positive at s = {at} (f = {value})")]
    NonPositiveSource { at: f64, value: f64 },
    #[error("component {k} became negative ({value:e}) at t = {t}")]
    PositivityViolated { t: f64, k: usize, value: f64 },
    #[error("blow-up estimates disagree across caps: {estimates:?}")]
    UnstableBlowupEstimate { estimates: Vec<(f64, f64)> },
    #[error("solution stayed below the cap {cap} up to t = {t_end}")]
    NoBlowup { cap: f64, t_end: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

/// Grid values `u_k(t)` of the semidiscrete system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemidiscreteState {
    pub t: f64,
    pub u: Vec<f64>,
}

impl SemidiscreteState {
    pub fn from_profile(profile: &Profile, n: usize) -> Self {
        Self {
            t: 0.0,
            u: profile.sample(n),
        }
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_stop: f64,
    pub u_cap: f64,
    pub t_est: f64,
    pub method: String,
}

pub(crate) fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// `out_k = N^2 (u_{k+1} - 2 u_k + u_{k-1}) + f(u_k)`, indices mod N.
pub fn rhs<F: Fn(f64) -> f64>(u: &[f64], f: &F, out: &mut [f64]) {
    let n = u.len();
    let scale = (n * n) as f64;
    for k in 0..n {
        let left = u[(k + n - 1) % n];
        let right = u[(k + 1) % n];
        out[k] = scale * (right - 2.0 * u[k] + left) + f(u[k]);
    }
}

/// Right-hand side of the error system
/// `z_k' = N^2 (z_{k+1} - 2 z_k + z_{k-1}) + C (|z_k| + N^-2)`.
pub fn error_system_rhs(z: &[f64], c_star: f64, out: &mut [f64]) {
    let n = z.len();
    let forcing = c_star / (n * n) as f64;
    rhs(z, &|x: f64| c_star * x.abs() + forcing, out);
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub t_end: f64,
    /// Stop once `max_k |u_k| >= cap`.
    pub cap: Option<f64>,
    /// Times at which the state is recorded; each is hit exactly.
    pub sample_times: Vec<f64>,
    pub theta: f64,
    pub pair_tol: f64,
    pub min_dt: f64,
    /// Fail if any component turns negative.
    pub check_positivity: bool,
}

impl IntegrateOptions {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            cap: None,
            sample_times: Vec::new(),
            theta: 0.1,
            pair_tol: 1e-8,
            min_dt: 1e-15,
            check_positivity: false,
        }
    }

    pub fn cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    /// `count + 1` equally spaced sample times on `[0, t_end]`.
    pub fn uniform_samples(self, count: usize) -> Self {
        let t_end = self.t_end;
        self.samples(uniform_times(t_end, count))
    }

    pub fn positivity(mut self, on: bool) -> Self {
        self.check_positivity = on;
        self
    }
}

pub fn uniform_times(t_end: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    (0..=count).map(|i| t_end * i as f64 / count as f64).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `time,u_0,...,u_{N-1}`, values with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("time");
        for k in 0..n {
            out.push_str(&format!(",u_{k}"));
        }
        out.push('\n');
        for (t, u) in self.times.iter().zip(&self.states) {
            out.push_str(&crate::fmt17(*t));
            for x in u {
                out.push(',');
                out.push_str(&crate::fmt17(*x));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub trajectory: Trajectory,
    pub final_state: SemidiscreteState,
    /// Set when the run stopped at the cap.
    pub cap_hit: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn step<R: FnMut(&[f64], &mut [f64])>(&mut self, rhs: &mut R, u: &[f64], dt: f64, out: &mut [f64]) {
        let n = u.len();
        rhs(u, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = u[i] + 0.5 * dt * self.k1[i];
        }
        rhs(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = u[i] + 0.5 * dt * self.k2[i];
        }
        rhs(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = u[i] + dt * self.k3[i];
        }
        rhs(&self.tmp, &mut self.k4);
        for i in 0..n {
            out[i] = u[i] + dt / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Advances an ODE system `u' = rhs(u)` on the `N`-point torus grid.
///
/// `on_step(t, u)` sees every accepted state, including the initial one.
/// Returning `false` from it stops the integration.
pub fn integrate_system<R, S>(
    u0: &[f64],
    mut rhs_fn: R,
    opts: &IntegrateOptions,
    mut on_step: S,
) -> Result<Integration, PdeError>
where
    R: FnMut(&[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    let n = u0.len();
    let parabolic = 0.25 / (n * n) as f64;
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut rk = Rk4::new(n);
    let mut slope = vec![0.0; n];
    let mut full = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let mut half = vec![0.0; n];

    let mut samples: Vec<f64> = opts
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s <= opts.t_end)
        .collect();
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    let mut next_sample = 0;
    let mut trajectory = Trajectory::default();
    let mut record = |t: f64, u: &[f64], next: &mut usize| {
        while *next < samples.len() && samples[*next] <= t {
            trajectory.times.push(samples[*next]);
            trajectory.states.push(u.to_vec());
            *next += 1;
        }
    };

    record(t, &u, &mut next_sample);
    let mut cap_hit = None;
    let mut steps = 0;
    let mut rejected = 0;
    let mut scale: f64 = 1.0;
    let mut keep_going = on_step(t, &u);
    if let Some(cap) = opts.cap {
        if sup_norm(&u) >= cap {
            cap_hit = Some(t);
            keep_going = false;
        }
    }

    while keep_going && t < opts.t_end {
        rhs_fn(&u, &mut slope);
        let size = sup_norm(&u);
        let growth = sup_norm(&slope);
        if !size.is_finite() || !growth.is_finite() {
            return Err(PdeError::NonFinite { t });
        }
        let mut dt = parabolic.min(opts.theta * (1.0 + size) / (1.0 + growth)) * scale;
        let target = samples
            .get(next_sample)
            .copied()
            .unwrap_or(opts.t_end)
            .min(opts.t_end);
        let mut lands_on_target = false;
        if t + dt >= target {
            dt = target - t;
            lands_on_target = true;
        }

        loop {
            if dt < opts.min_dt {
                return Err(PdeError::StepUnderflow { t, dt });
            }
            rk.step(&mut rhs_fn, &u, dt, &mut full);
            rk.step(&mut rhs_fn, &u, 0.5 * dt, &mut mid);
            rk.step(&mut rhs_fn, &mid, 0.5 * dt, &mut half);
            let gap = full
                .iter()
                .zip(&half)
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            let tol = opts.pair_tol * sup_norm(&half).max(1.0);
            if gap <= tol {
                if gap < tol / 64.0 {
                    scale = (scale * 2.0).min(1.0);
                }
                break;
            }
            rejected += 1;
            scale *= 0.5;
            dt *= 0.5;
            lands_on_target = false;
        }

        t = if lands_on_target { target } else { t + dt };
        std::mem::swap(&mut u, &mut half);
        steps += 1;

        if opts.check_positivity {
            if let Some((k, &value)) = u.iter().enumerate().find(|(_, &x)| x < 0.0) {
                return Err(PdeError::PositivityViolated { t, k, value });
            }
        }
        record(t, &u, &mut next_sample);
        keep_going = on_step(t, &u);
        if let Some(cap) = opts.cap {
            if sup_norm(&u) >= cap {
                cap_hit = Some(t);
                break;
            }
        }
    }

    Ok(Integration {
        trajectory,
        final_state: SemidiscreteState { t, u },
        cap_hit,
        steps,
        rejected,
    })
}

/// Integrates the semidiscrete system with reaction term `f` from `u0`.
///
/// Positivity is asserted on every accepted step when `f(0) >= 0` and
/// `u0 >= 0`. When a cap is set and reached, the returned estimate adds the
/// tail `int_{|u(t_stop)|}^inf ds / f(s)` to the stopping time.
pub fn integrate<F: Fn(f64) -> f64>(
    u0: &[f64],
    f: &F,
    opts: &IntegrateOptions,
) -> Result<(Integration, Option<BlowupEstimate>), PdeError> {
    let positive = f(0.0) >= 0.0 && u0.iter().all(|&x| x >= 0.0);
    let mut opts = opts.clone();
    opts.check_positivity |= positive;
    let run = integrate_system(u0, |u: &[f64], out: &mut [f64]| rhs(u, f, out), &opts, |_, _| true)?;
    let estimate = match (run.cap_hit, opts.cap) {
        (Some(t_stop), Some(cap)) => {
            let reached = run.final_state.sup();
            Some(BlowupEstimate {
                t_stop,
                u_cap: cap,
                t_est: t_stop + tail_integral(f, reached)?,
                method: "rk4-cap-tail".into(),
            })
        }
        _ => None,
    };
    Ok((run, estimate))
}

/// Blow-up time estimate checked for stability across several caps.
///
/// Integrates once up to the largest cap, forms `t_i + tail(|u(t_i)|)` at the
/// first crossing of every cap and requires consecutive estimates to agree
/// to `rel_agreement`. The estimate of the largest cap is returned.
pub fn estimate_blowup<F: Fn(f64) -> f64>(
    u0: &[f64],
    f: &F,
    caps: &[f64],
    t_limit: f64,
    rel_agreement: f64,
) -> Result<BlowupEstimate, PdeError> {
    let mut caps = caps.to_vec();
    caps.sort_by(f64::total_cmp);
    let top = *caps.last().expect("at least one cap");
    let mut crossings: Vec<(f64, f64)> = Vec::new();
    let opts = IntegrateOptions::new(t_limit).cap(top).positivity(f(0.0) >= 0.0);
    let run = integrate_system(
        u0,
        |u: &[f64], out: &mut [f64]| rhs(u, f, out),
        &opts,
        |t, u| {
            let s = sup_norm(u);
            while crossings.len() < caps.len() && s >= caps[crossings.len()] {
                crossings.push((t, s));
            }
            true
        },
    )?;
    if run.cap_hit.is_none() || crossings.len() < caps.len() {
        return Err(PdeError::NoBlowup {
            cap: top,
            t_end: t_limit,
        });
    }
    let mut estimates = Vec::with_capacity(caps.len());
    for (&cap, &(t, s)) in caps.iter().zip(&crossings) {
        estimates.push((cap, t + tail_integral(f, s)?));
    }
    let stable = estimates
        .windows(2)
        .all(|w| (w[1].1 - w[0].1).abs() <= rel_agreement * w[1].1.abs());
    if !stable {
        return Err(PdeError::UnstableBlowupEstimate { estimates });
    }
    Ok(BlowupEstimate {
        t_stop: crossings[crossings.len() - 1].0,
        u_cap: top,
        t_est: estimates[estimates.len() - 1].1,
        method: format!("rk4-cap-tail, caps {caps:?} agree to {rel_agreement}"),
    })
}

/// `int_a^inf ds / f(s)` via the substitution `s = a / (1 - tau)`.
///
/// The integrand in `tau` is `a / ((1 - tau)^2 f(a / (1 - tau)))`. The tail is
/// declared divergent when `(1 - tau)` times that integrand does not shrink as
/// `tau -> 1`, which is the case for any `f` growing at most linearly.
pub fn tail_integral<F: Fn(f64) -> f64>(f: &F, a: f64) -> Result<f64, PdeError> {
    assert!(a > 0.0, "lower limit must be positive");
    let g = |tau: f64| {
        let gap = 1.0 - tau;
        a / (gap * gap * f(a / gap))
    };
    let probe = |eps: f64| eps * g(1.0 - eps);
    let near = probe(1e-3);
    let far = probe(1e-12);
    if !(near.is_finite() && far.is_finite()) || (far > 0.0 && far >= 0.5 * near) {
        return Err(PdeError::DivergentTail { from: a });
    }
    for i in 0..=64 {
        let s = a / (1.0 - i as f64 / 65.0);
        let value = f(s);
        if value.is_nan() || value <= 0.0 {
            return Err(PdeError::NonPositiveSource { at: s, value });
        }
    }
    let q = quadrature::integrate(g, 0.0, 1.0, 1e-9, 0.0, 4000);
    if !q.value.is_finite() {
        return Err(PdeError::DivergentTail { from: a });
    }
    Ok(q.value)
}

/// `||phi||_{L1}` on the unit torus.
pub fn l1_norm_of(profile: &Profile) -> f64 {
    quadrature::integrate(|x| profile.eval(x).abs(), 0.0, 1.0, 1e-12, 1e-14, 2000).value
}

/// Upper bound `int_{||phi||_1}^inf ds / f(s)` on the blow-up time, valid when
/// `f` is convex and positive above `r0` and `phi >= r0`.
pub fn blowup_upper_bound<F: Fn(f64) -> f64>(profile: &Profile, f: &F) -> Result<f64, PdeError> {
    tail_integral(f, l1_norm_of(profile))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Smallest residual `z'_k - [N^2 (z_{k+1} - 2 z_k + z_{k-1}) + C (|z_k| + N^-2)]`.
    pub min_residual: f64,
    pub site: usize,
    pub time_index: usize,
}

impl ResidualReport {
    pub fn certifies(&self, tolerance: f64) -> bool {
        self.min_residual >= -tolerance
    }
}

/// Residual of the supersolution inequality for the error system, with `z'`
/// approximated by centred differences on a uniform time grid of step `dt`.
pub fn check_supersolution(z: &[Vec<f64>], dt: f64, c_star: f64) -> ResidualReport {
    assert!(z.len() >= 3, "need at least three time levels");
    let n = z[0].len();
    let mut drift = vec![0.0; n];
    let mut report = ResidualReport {
        min_residual: f64::INFINITY,
        site: 0,
        time_index: 0,
    };
    for j in 1..z.len() - 1 {
        error_system_rhs(&z[j], c_star, &mut drift);
        for k in 0..n {
            let derivative = (z[j + 1][k] - z[j - 1][k]) / (2.0 * dt);
            let residual = derivative - drift[k];
            if residual < report.min_residual {
                report = ResidualReport {
                    min_residual: residual,
                    site: k,
                    time_index: j,
                };
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub steps: usize,
    /// Smallest `zbar_k(t) - z_k(t)` over all accepted steps and sites.
    pub upper_gap: f64,
    /// Smallest `z_k(t) - zlow_k(t)` with the mirrored subsolution `-zbar`.
    pub lower_gap: f64,
    pub violations: usize,
}

/// Integrates the error system from zero and compares it at every accepted
/// step against the explicit supersolution `exp(2 C t) / N^2` and the
/// subsolution `-exp(2 C t) / N^2`.
pub fn comparison_run(n: usize, c_star: f64, t_end: f64) -> Result<ComparisonReport, PdeError> {
    let inv_n2 = 1.0 / (n * n) as f64;
    let mut report = ComparisonReport {
        steps: 0,
        upper_gap: f64::INFINITY,
        lower_gap: f64::INFINITY,
        violations: 0,
    };
    integrate_system(
        &vec![0.0; n],
        |z: &[f64], out: &mut [f64]| error_system_rhs(z, c_star, out),
        &IntegrateOptions::new(t_end),
        |t, z| {
            let bar = (2.0 * c_star * t).exp() * inv_n2;
            for &zk in z {
                report.upper_gap = report.upper_gap.min(bar - zk);
                report.lower_gap = report.lower_gap.min(zk + bar);
                if zk > bar || zk < -bar {
                    report.violations += 1;
                }
            }
            report.steps += 1;
            true
        },
    )?;
    Ok(report)
}

/// The `n`-point solution at the sample times together with a reference
/// computed on a `factor * n` grid and restricted to the coarse knots.
pub fn solution_and_reference<F: Fn(f64) -> f64>(
    profile: &Profile,
    f: &F,
    n: usize,
    factor: usize,
    opts: &IntegrateOptions,
) -> Result<(Trajectory, Trajectory), PdeError> {
    let (coarse, _) = integrate(&profile.sample(n), f, opts)?;
    let (fine, _) = integrate(&profile.sample(factor * n), f, opts)?;
    let restricted = Trajectory {
        times: fine.trajectory.times.clone(),
        states: fine
            .trajectory
            .states
            .iter()
            .map(|u| u.iter().step_by(factor).copied().collect())
            .collect(),
    };
    Ok((coarse.trajectory, restricted))
}

/// `sup_t max_k |a - b|` over two trajectories with matching sample times.
pub fn trajectory_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn square(x: f64) -> f64 {
        x * x
    }

    #[test]
    fn rhs_periodic_example() {
        let mut out = [0.0; 4];
        rhs(&[1.0, 0.0, 0.0, 0.0], &|_| 0.0, &mut out);
        assert_eq!(out, [-32.0, 16.0, 0.0, 16.0]);
    }

    #[test]
    fn rhs_of_constant_is_source() {
        let mut out = [0.0; 7];
        rhs(&[1.5; 7], &square, &mut out);
        assert!(out.iter().all(|&x| x == 2.25));
    }

    #[test]
    fn constant_data_follows_scalar_ode() {
        let opts = IntegrateOptions::new(0.5).uniform_samples(10);
        let (run, estimate) = integrate(&[1.0; 16], &square, &opts).unwrap();
        assert!(estimate.is_none());
        for (t, u) in run.trajectory.times.iter().zip(&run.trajectory.states) {
            for &x in u {
                assert_abs_diff_eq!(x, 1.0 / (1.0 - t), epsilon = 1e-6);
            }
        }
        for &x in &run.final_state.u {
            assert_abs_diff_eq!(x, 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn constant_data_blowup_time() {
        let opts = IntegrateOptions::new(2.0).cap(1e3);
        let (_, estimate) = integrate(&[1.0; 8], &square, &opts).unwrap();
        let estimate = estimate.unwrap();
        assert!(estimate.t_est >= estimate.t_stop);
        assert_abs_diff_eq!(estimate.t_est, 1.0, epsilon = 1e-3);

        let stable = estimate_blowup(&[1.0; 8], &square, &[1e2, 1e3, 1e4], 2.0, 1e-2).unwrap();
        assert_abs_diff_eq!(stable.t_est, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn no_blowup_is_reported() {
        let err = estimate_blowup(&[1.0; 4], &|u: f64| u * (1.0 - u), &[10.0], 1.0, 1e-2).unwrap_err();
        assert!(matches!(err, PdeError::NoBlowup { .. }));
    }

    #[test]
    fn heat_decay_rate_matches_discrete_eigenvalue() {
        let n = 64;
        // Independent oracle: eigenvalue of the N^2-scaled periodic second
        // difference for the first Fourier mode.
        let lambda = 4.0 * (n * n) as f64 * (std::f64::consts::PI / n as f64).sin().powi(2);
        let u0: Vec<f64> = (0..n)
            .map(|k| 1.0 + (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin())
            .collect();
        let times = vec![0.0, 0.002, 0.004, 0.006, 0.008, 0.01];
        let opts = IntegrateOptions::new(0.01).samples(times.clone());
        let (run, _) = integrate(&u0, &|_| 0.0, &opts).unwrap();
        let amps: Vec<f64> = run
            .trajectory
            .states
            .iter()
            .map(|u| u.iter().fold(0.0, |m: f64, x| m.max((x - 1.0).abs())))
            .collect();
        let xs: Vec<f64> = times.clone();
        let ys: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
        let fitted = -crate::stats::least_squares_slope(&xs, &ys);
        assert!((fitted - lambda).abs() < 0.01 * lambda, "fitted {fitted}, lambda {lambda}");
    }

    #[test]
    fn tail_integral_examples() {
        assert_abs_diff_eq!(tail_integral(&square, 1.0).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(tail_integral(&|s: f64| s * s * s, 2.0).unwrap(), 0.125, epsilon = 1e-10);
        assert!(matches!(tail_integral(&|s: f64| s, 1.0), Err(PdeError::DivergentTail { .. })));
        assert!(matches!(tail_integral(&|_| 3.0, 1.0), Err(PdeError::DivergentTail { .. })));
        // s^1.5: int_4^inf = 2 / sqrt(4) = 1
        assert_abs_diff_eq!(tail_integral(&|s: f64| s.powf(1.5), 4.0).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn blowup_bound_examples() {
        assert_abs_diff_eq!(blowup_upper_bound(&Profile::constant(1.0), &square).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(blowup_upper_bound(&Profile::constant(2.0), &square).unwrap(), 0.5, epsilon = 1e-9);
        let bump = Profile::SinSquared { base: 1.0, amplitude: 1.0 };
        assert_abs_diff_eq!(l1_norm_of(&bump), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(blowup_upper_bound(&bump, &square).unwrap(), 2.0 / 3.0, epsilon = 1e-9);
        assert!(blowup_upper_bound(&Profile::constant(1.0), &|s: f64| s).is_err());
    }

    #[test]
    fn explicit_supersolution_certified() {
        for &(n, c) in &[(8usize, 1.0), (16, 5.0)] {
            let dt = 1e-4;
            let z: Vec<Vec<f64>> = (0..200)
                .map(|j| vec![(2.0 * c * j as f64 * dt).exp() / (n * n) as f64; n])
                .collect();
            let report = check_supersolution(&z, dt, c);
            assert!(report.certifies(1e-6), "{report:?}");
        }
    }

    #[test]
    fn zero_is_not_a_supersolution() {
        let n = 8;
        let c = 2.0;
        let z = vec![vec![0.0; n]; 5];
        let report = check_supersolution(&z, 1e-3, c);
        assert_abs_diff_eq!(report.min_residual, -c / (n * n) as f64, epsilon = 1e-15);
        assert!(!report.certifies(1e-6));
    }

    #[test]
    fn integrated_error_system_has_small_residual() {
        let n = 16;
        let c = 3.0;
        let dt = 1e-4;
        let opts = IntegrateOptions::new(0.05).samples((0..=500).map(|j| j as f64 * dt).collect());
        let run = integrate_system(
            &vec![0.0; n],
            |z: &[f64], out: &mut [f64]| error_system_rhs(z, c, out),
            &opts,
            |_, _| true,
        )
        .unwrap();
        let report = check_supersolution(&run.trajectory.states, dt, c);
        assert!(report.min_residual.abs() < 1e-7, "{report:?}");
        // Closed form for zero data: every component equals (exp(C t) - 1) / N^2.
        let last = run.trajectory.states.last().unwrap();
        let exact = ((c * 0.05f64).exp() - 1.0) / (n * n) as f64;
        for &z in last {
            assert_abs_diff_eq!(z, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn comparison_ordering_holds() {
        for n in [8, 16, 32] {
            for c in [1.0, 5.0] {
                let report = comparison_run(n, c, 1.0).unwrap();
                assert_eq!(report.violations, 0);
                assert!(report.upper_gap > 0.0 && report.lower_gap > 0.0);
            }
        }
    }

    #[test]
    fn trajectory_csv_header() {
        let t = Trajectory {
            times: vec![0.0],
            states: vec![vec![1.0, 2.0]],
        };
        let csv = t.to_csv();
        assert!(csv.starts_with("time,u_0,u_1\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    proptest! {
        #[test]
        fn laplacian_part_sums_to_zero(u in prop::collection::vec(-10.0f64..10.0, 2..50)) {
            let mut out = vec![0.0; u.len()];
            rhs(&u, &|_| 0.0, &mut out);
            let total: f64 = out.iter().sum();
            let scale = (u.len() * u.len()) as f64 * 40.0;
            prop_assert!(total.abs() <= 1e-12 * scale);
        }
    }
}
