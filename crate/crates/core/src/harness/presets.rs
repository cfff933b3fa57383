//! The five experiments.

use std::collections::BTreeMap;

use super::{
    aggregate_records, provenance, run_parallel, Check, Derived, ExperimentConfig, ExperimentReport, HarnessError,
    LlnSection, PlotSpec, ReplicaRecord,
};
use crate::bdchain::{expected_explosion_time, expected_hitting_times, passage_time, BirthDeathSpec};
use crate::metrics::{field_from_config, sup_distance};
use crate::model::{initial_config, InitRule, ModelParams};
use crate::pde::{self, IntegrateOptions, Trajectory};
use crate::rng::{replica_rng, stream_id};
use crate::simulator::{
    coupled_domination_run, estimate_explosion_time, DominationOptions, ParticleSystem, Runner, SimOptions,
};
use crate::stats::{loglog_slope, median, quantile};

/// Accuracy of analytic explosion times in the domination check, far below
/// the Monte Carlo standard errors they are compared with.
const SERIES_TOLERANCE: f64 = 1e-7;

const CALIBRATION_NOTE: &str = "Convergence of the particle system holds in probability without a rate; \
     finite-N pass bands of statistical presets are pilot-calibrated, not derived.";

fn metrics(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn derived(name: impl Into<String>, value: f64) -> Derived {
    Derived {
        name: name.into(),
        value,
    }
}

fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn show(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Solution of the equation on the `factor * N` grid at `times`.
fn pde_reference(params: &ModelParams, lln: &LlnSection, times: &[f64]) -> Result<Trajectory, HarnessError> {
    let u0 = params.profile.sample(lln.reference_factor * params.n);
    let f = |u: f64| params.source(u);
    let opts = IntegrateOptions::new(lln.t_end).samples(times.to_vec()).cap(1e8);
    let beyond = |detail: String| HarnessError::BeyondBlowup {
        t_end: lln.t_end,
        detail,
    };
    let (run, _) = pde::integrate(&u0, &f, &opts).map_err(|e| beyond(e.to_string()))?;
    if let Some(t) = run.cap_hit {
        return Err(beyond(format!("reference solution exceeds 1e8 at t = {t}")));
    }
    Ok(run.trajectory)
}

struct SweepGroup {
    params: ModelParams,
    reference: Option<Trajectory>,
}

/// One particle run per replica serves both the distance to the equation on
/// `[0, T]` and, when configured, the explosion-time estimate.
fn particle_sweep(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    let rule = config.ell_rule()?;
    rule.check_growth()?;
    let lln = config.lln.as_ref();
    let blowup = config.blowup.as_ref();
    let times = lln.map(|l| pde::uniform_times(l.t_end, l.samples));

    let mut groups = Vec::new();
    for &n in &config.n_list {
        let params = config.params_for(n, None, None)?;
        let reference = match (lln, &times) {
            (Some(l), Some(ts)) => Some(pde_reference(&params, l, ts)?),
            _ => None,
        };
        groups.push(SweepGroup { params, reference });
    }
    let group_name = format!("ell={rule}");

    let tasks: Vec<(usize, u32)> = (0..groups.len())
        .flat_map(|g| (0..config.replicas).map(move |r| (g, r)))
        .collect();
    let records = run_parallel(tasks, workers, |(g, replica)| {
        let group = &groups[g];
        let params = &group.params;
        let mut rng = replica_rng(config.seed, stream_id(g as u32, replica));
        let (t_end, stop) = match (blowup, lln) {
            (Some(b), _) => (b.t_limit, b.m_stop),
            (None, Some(l)) => (l.t_end, 1e9),
            (None, None) => unreachable!("validated config"),
        };
        let mut opts = SimOptions::new(t_end, stop);
        if let Some(ts) = &times {
            opts = opts.samples(ts.clone());
        }
        let system = ParticleSystem::from_initial(params, &mut rng)?;
        let outcome = Runner::new(system, opts)?.run(&mut rng)?;
        let mut m = metrics(&[("events", outcome.events_processed as f64)]);
        if let (Some(reference), Some(ts)) = (&group.reference, &times) {
            let eps = if outcome.snapshots.len() == ts.len() {
                let mut worst: f64 = 0.0;
                for (snap, u) in outcome.snapshots.iter().zip(&reference.states) {
                    let field = field_from_config(&snap.counts, params.ell);
                    worst = worst.max(sup_distance(&field, u).expect("reference grid refines the torus"));
                }
                worst
            } else {
                // exploded before the last comparison time
                f64::INFINITY
            };
            m.insert("eps".into(), eps);
        }
        if blowup.is_some() {
            let (t_raw, t_corrected) = match estimate_explosion_time(&outcome, &params.birth) {
                Ok(pair) => pair,
                Err(crate::simulator::SimError::NotExploded) => (f64::INFINITY, f64::INFINITY),
                Err(e) => return Err(e.into()),
            };
            m.insert("t_raw".into(), t_raw);
            m.insert("t_corrected".into(), t_corrected);
        }
        Ok(ReplicaRecord {
            group: group_name.clone(),
            n: params.n,
            replica,
            metrics: m,
        })
    })?;

    let aggregates = aggregate_records(&records);
    let mut derived_values = Vec::new();
    let mut checks = Vec::new();
    let mut notes = vec![CALIBRATION_NOTE.to_string()];
    let mut plots = Vec::new();
    let ns: Vec<f64> = config.n_list.iter().map(|&n| n as f64).collect();
    let values_at = |n: usize, metric: &str| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.metrics.get(metric).copied())
            .collect()
    };
    let n_max = *config.n_list.iter().max().expect("nonempty n_list");

    if let Some(l) = lln {
        let medians: Vec<f64> = config.n_list.iter().map(|&n| median(&values_at(n, "eps"))).collect();
        for (&n, &m) in config.n_list.iter().zip(&medians) {
            derived_values.push(derived(format!("median_eps_N{n}"), m));
        }
        if medians.iter().all(|m| m.is_finite() && *m > 0.0) && medians.len() >= 2 {
            derived_values.push(derived("eps_decay_slope", loglog_slope(&ns, &medians)));
        }
        checks.push(check(
            "lln: median distance strictly decreasing in N",
            strictly_decreasing(&medians),
            format!("medians {} for N = {:?}", show(&medians), config.n_list),
        ));
        let last = medians[config.n_list.iter().position(|&n| n == n_max).unwrap()];
        checks.push(check(
            format!("lln: median distance at N = {n_max} below band"),
            last < l.band,
            format!("median {last:.5} vs band {}", l.band),
        ));
        notes.push(format!("lln band {}: {}", l.band, l.band_note));
        plots.push(PlotSpec::LogLog {
            metric: "eps".into(),
            title: "median sup distance to the equation".into(),
        });
    }

    if let Some(b) = blowup {
        let first = &groups[0].params;
        let t_max = blowup_time_of_equation(first, n_max, b.t_limit)?;
        derived_values.push(derived("t_max_equation", t_max));
        let mut tails: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for &n in &config.n_list {
            let ts = values_at(n, "t_corrected");
            let med = median(&ts);
            derived_values.push(derived(format!("median_t_N{n}"), med));
            derived_values.push(derived(format!("iqr_t_N{n}"), quantile(&ts, 0.75) - quantile(&ts, 0.25)));
            for &gamma in &b.gammas {
                let count = ts.len() as f64;
                let lower = ts.iter().filter(|&&t| t < t_max - gamma).count() as f64 / count;
                let upper = ts.iter().filter(|&&t| t > t_max + gamma).count() as f64 / count;
                derived_values.push(derived(format!("lower_tail_g{gamma}_N{n}"), lower));
                derived_values.push(derived(format!("upper_tail_g{gamma}_N{n}"), upper));
                tails.entry(format!("lower_{gamma}")).or_default().push(lower);
                tails.entry(format!("upper_{gamma}")).or_default().push(upper);
            }
        }
        let med = median(&values_at(n_max, "t_corrected"));
        checks.push(check(
            format!("blowup: median estimate at N = {n_max} within {} of {t_max:.4}", b.median_window),
            (med - t_max).abs() <= b.median_window,
            format!("median {med:.5}"),
        ));
        let gamma = b.check_gamma;
        for side in ["lower", "upper"] {
            let fractions = tails.get(&format!("{side}_{gamma}")).cloned().unwrap_or_default();
            checks.push(check(
                format!("blowup: {side} tail fraction at gamma = {gamma} nonincreasing in N"),
                !fractions.is_empty() && nonincreasing(&fractions),
                format!("fractions {} for N = {:?}", show(&fractions), config.n_list),
            ));
        }
        plots.push(PlotSpec::Histogram {
            metric: "t_corrected".into(),
            title: "estimated explosion times".into(),
        });
    }

    Ok(ExperimentReport {
        records,
        aggregates,
        derived: derived_values,
        checks,
        provenance: provenance(config, notes),
        plots,
    })
}

/// Blow-up time of the semidiscrete equation on the `n`-point grid, estimated
/// from three caps that must agree.
fn blowup_time_of_equation(params: &ModelParams, n: usize, t_limit: f64) -> Result<f64, HarnessError> {
    let f = |u: f64| params.source(u);
    let estimate = pde::estimate_blowup(&params.profile.sample(n), &f, &[1e2, 1e3, 1e4], t_limit, 1e-4)?;
    Ok(estimate.t_est)
}

pub fn run_lln_sweep(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    particle_sweep(config, workers)
}

pub fn run_blowup_sweep(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    particle_sweep(config, workers)
}

pub fn run_domination_check(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    let dom = config
        .domination
        .as_ref()
        .ok_or_else(|| HarnessError::Config("missing [domination] section".into()))?;
    let rule = config.ell_rule()?;
    rule.check_growth()?;

    struct Variant {
        name: String,
        params: ModelParams,
        spec: BirthDeathSpec,
        y0: u64,
        cap: u64,
        cap_tail: f64,
        analytic: f64,
    }
    let mut variants = Vec::new();
    for v in &dom.variants {
        for &n in &config.n_list {
            let params = config.params_for(n, Some(&v.birth), Some(&v.death))?;
            if params.init_rule != InitRule::DeterministicRound {
                return Err(HarnessError::Config(
                    "domination-check starts the lower process at the initial particle count and needs \
                     deterministic-round initial data"
                        .into(),
                ));
            }
            let mut unused = replica_rng(config.seed, u64::MAX);
            let y0: u64 = initial_config(&params, &mut unused).iter().sum();
            let spec = BirthDeathSpec::from_model(&params)?;
            let cap = (dom.y_cap_level * params.mass_scale()).ceil() as u64;
            // Reflecting at y0 / 2 keeps the expectations finite; the lower
            // process essentially never drifts that far down.
            let reflected = spec.clone().reflect_at(y0 / 2);
            let cap_tail = expected_explosion_time(&reflected, cap, SERIES_TOLERANCE)?.value;
            let analytic = expected_explosion_time(&reflected, y0, SERIES_TOLERANCE)?.value;
            variants.push(Variant {
                name: v.name.clone(),
                params,
                spec,
                y0,
                cap,
                cap_tail,
                analytic,
            });
        }
    }

    let tasks: Vec<(usize, u32)> = (0..variants.len())
        .flat_map(|g| (0..config.replicas).map(move |r| (g, r)))
        .collect();
    let records = run_parallel(tasks, workers, |(g, replica)| {
        let v = &variants[g];
        let mut rng = replica_rng(config.seed, stream_id(g as u32, replica));
        let opts = DominationOptions {
            sim: SimOptions::new(dom.t_limit, dom.m_stop),
            y0: v.y0,
            y_target: None,
        };
        let run = coupled_domination_run(&v.params, &opts, &mut rng)?;
        let t_stop = run.outcome.final_time;
        let y_explosion = if run.y_final >= v.cap {
            t_stop + expected_explosion_time(&v.spec.clone().reflect_at(v.y0 / 2), run.y_final, SERIES_TOLERANCE)?.value
        } else {
            t_stop + passage_time(&v.spec, run.y_final, v.cap, &mut rng) + v.cap_tail
        };
        Ok(ReplicaRecord {
            group: v.name.clone(),
            n: v.params.n,
            replica,
            metrics: metrics(&[
                ("dominated", if run.dominated { 1.0 } else { 0.0 }),
                ("min_slack", run.min_slack as f64),
                ("clipped_births", run.clipped_births as f64),
                ("system_stop_time", t_stop),
                ("y_at_stop", run.y_final as f64),
                ("y_explosion", y_explosion),
            ]),
        })
    })?;

    let aggregates = aggregate_records(&records);
    let mut checks = Vec::new();
    let mut derived_values = Vec::new();
    let all = records.iter().all(|r| r.metrics["dominated"] == 1.0);
    checks.push(check(
        "domination: Y <= total after every event in every replica",
        all,
        format!(
            "{} of {} replicas dominated",
            records.iter().filter(|r| r.metrics["dominated"] == 1.0).count(),
            records.len()
        ),
    ));
    for v in &variants {
        let agg = aggregates
            .iter()
            .find(|a| a.group == v.name && a.n == v.params.n && a.metric == "y_explosion")
            .map(|a| a.summary.clone());
        let label = format!("{} N={}", v.name, v.params.n);
        derived_values.push(derived(format!("analytic_y_explosion_{label}"), v.analytic));
        let clipped: f64 = records
            .iter()
            .filter(|r| r.group == v.name && r.n == v.params.n)
            .map(|r| r.metrics["clipped_births"])
            .sum();
        derived_values.push(derived(format!("clipped_births_{label}"), clipped));
        let (passed, detail) = match agg {
            Some(s) => (
                s.within_se(v.analytic, dom.se_factor),
                format!(
                    "mean {:.5} +- {:.5} vs analytic {:.5}",
                    s.mean, s.standard_error, v.analytic
                ),
            ),
            None => (false, "no finite explosion times".into()),
        };
        checks.push(check(
            format!("domination: {label} mean explosion time of Y within {} SE of the chain", dom.se_factor),
            passed,
            detail,
        ));
    }

    Ok(ExperimentReport {
        records,
        aggregates,
        derived: derived_values,
        checks,
        provenance: provenance(config, vec![CALIBRATION_NOTE.to_string()]),
        plots: vec![PlotSpec::Histogram {
            metric: "y_explosion".into(),
            title: "explosion times of the dominating chain".into(),
        }],
    })
}

pub fn run_scheme_order(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    let scheme = config
        .scheme
        .as_ref()
        .ok_or_else(|| HarnessError::Config("missing [scheme] section".into()))?;
    let records = run_parallel(config.n_list.clone(), workers, |n| {
        let params = config.params_for(n, None, None)?;
        let f = |u: f64| params.source(u);
        let opts = IntegrateOptions::new(scheme.t_end).uniform_samples(10);
        let (coarse, reference) = pde::solution_and_reference(&params.profile, &f, n, scheme.reference_factor, &opts)?;
        Ok(ReplicaRecord {
            group: "scheme".into(),
            n,
            replica: 0,
            metrics: metrics(&[("error", pde::trajectory_gap(&coarse, &reference))]),
        })
    })?;
    let ns: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.metrics["error"]).collect();
    let slope = loglog_slope(&ns, &errors);
    let checks = vec![check(
        format!("scheme: log-log slope in [{}, {}]", scheme.slope_min, scheme.slope_max),
        (scheme.slope_min..=scheme.slope_max).contains(&slope),
        format!(
            "slope {slope:.4}, errors {}",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )];
    Ok(ExperimentReport {
        aggregates: aggregate_records(&records),
        records,
        derived: vec![derived("slope", slope)],
        checks,
        provenance: provenance(config, Vec::new()),
        plots: vec![PlotSpec::LogLog {
            metric: "error".into(),
            title: "sup-norm error against the refined reference".into(),
        }],
    })
}

/// `sum_{r >= r0} 1 / r^2` by direct summation to `r0 + 999` and the
/// Euler-Maclaurin expansion of the rest.
pub fn inverse_square_tail(r0: u64) -> f64 {
    let k = (r0 + 1000) as f64;
    // Sum the small terms first.
    let head: f64 = (r0..r0 + 1000).rev().map(|r| 1.0 / (r as f64 * r as f64)).sum();
    let rest = 1.0 / k + 1.0 / (2.0 * k * k) + 1.0 / (6.0 * k.powi(3)) - 1.0 / (30.0 * k.powi(5));
    head + rest
}

pub fn run_bd_hitting(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    let bd = config
        .bd
        .as_ref()
        .ok_or_else(|| HarnessError::Config("missing [bd] section".into()))?;
    let lambda = bd.lambda;
    let chains: Vec<(&str, BirthDeathSpec)> = vec![
        ("constant", BirthDeathSpec::pure_birth(move |_| lambda)),
        ("inverse-square", BirthDeathSpec::pure_birth(|r| if r < 1.0 { 1.0 } else { r * r })),
        (
            "geometric-with-deaths",
            BirthDeathSpec::from_fns(|r| 2f64.powf(r), |r| if r >= 1.0 { 1.0 } else { 0.0 })?,
        ),
    ];
    let r_max = bd.states.iter().copied().max().unwrap_or(0);
    let exact: Vec<_> = chains
        .iter()
        .map(|(_, spec)| expected_hitting_times(spec, r_max))
        .collect::<Result<_, _>>()?;

    let batches = config.replicas as u64;
    let per_batch = (bd.samples / batches).max(1);
    let tasks: Vec<(usize, usize, u32)> = (0..chains.len())
        .flat_map(|c| (0..bd.states.len()).flat_map(move |s| (0..config.replicas).map(move |b| (c, s, b))))
        .collect();
    let records = run_parallel(tasks, workers, |(c, s, batch)| {
        let (name, spec) = &chains[c];
        let r = bd.states[s];
        let mut rng = replica_rng(config.seed, stream_id(((c << 16) | s) as u32, batch));
        let total: f64 = (0..per_batch).map(|_| passage_time(spec, r, r + 1, &mut rng)).sum();
        Ok(ReplicaRecord {
            group: name.to_string(),
            n: r as usize,
            replica: batch,
            metrics: metrics(&[("passage_mean", total / per_batch as f64)]),
        })
    })?;
    let aggregates = aggregate_records(&records);

    let mut checks = Vec::new();
    let mut derived_values = Vec::new();
    for ((name, _), hit) in chains.iter().zip(&exact) {
        for &r in &bd.states {
            let f_r = hit.at(r);
            derived_values.push(derived(format!("recursion_{name}_f{r}"), f_r));
            let s = aggregates
                .iter()
                .find(|a| a.group == *name && a.n == r as usize)
                .map(|a| a.summary.clone())
                .expect("every chain and state has batches");
            checks.push(check(
                format!("bd: {name} passage {r} -> {} within {} SE of the recursion", r + 1, bd.se_factor),
                s.within_se(f_r, bd.se_factor),
                format!("mean {:.6} +- {:.6} vs {f_r:.6}", s.mean, s.standard_error),
            ));
        }
    }
    let tol = bd.analytic_tolerance;
    let worst_constant = bd
        .states
        .iter()
        .map(|&r| (exact[0].at(r) - 1.0 / lambda).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "bd: pure-birth constant chain f_r = 1 / lambda",
        worst_constant <= tol,
        format!("max deviation {worst_constant:.3e}"),
    ));
    let basel = expected_explosion_time(&chains[1].1, 1, tol / 10.0)?;
    let basel_exact = std::f64::consts::PI.powi(2) / 6.0;
    derived_values.push(derived("inverse_square_sum_from_1", basel.value));
    checks.push(check(
        "bd: sum of f_r from r = 1 equals pi^2 / 6",
        (basel.value - basel_exact).abs() <= tol,
        format!("{:.12} vs {basel_exact:.12}", basel.value),
    ));
    let series = expected_explosion_time(&chains[1].1, 10, tol / 10.0)?;
    let oracle = inverse_square_tail(10);
    derived_values.push(derived("inverse_square_sum_from_10", series.value));
    checks.push(check(
        "bd: explosion series from r0 = 10 matches the summation oracle",
        (series.value - oracle).abs() <= tol,
        format!("{:.12} vs {oracle:.12}", series.value),
    ));

    Ok(ExperimentReport {
        records,
        aggregates,
        derived: derived_values,
        checks,
        provenance: provenance(
            config,
            vec![format!(
                "{} first-passage samples per chain and state in {batches} batches; standard errors are taken \
                 over batch means",
                per_batch * batches
            )],
        ),
        plots: Vec::new(),
    })
}
