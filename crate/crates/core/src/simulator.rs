//! Exact event-driven simulation of the particle system.
//!
//! Each particle jumps to either neighbour at rate `N^2`; a site holding `c`
//! particles gains one at rate `ell * b(c / ell)` and loses one at rate
//! `ell * d(c / ell)`. Events are drawn with the next-reaction (Gillespie)
//! scheme, which has the same law as the Poisson-clock construction of the
//! process but never materialises particle labels.
//!
//! # Random stream layout
//!
//! Per event the stream is consumed in a fixed order: the waiting time
//! (ziggurat exponential), one uniform for the category (jump right, jump
//! left, birth, death), then the site, then any thinning or acceptance marks. Two systems whose rates agree therefore decode the same stream into
//! the same events, which is what the couplings below rely on.
//!
//! Jumps make up nearly all events and only need the total birth and death
//! rates, which are kept exactly in fixed point (see [`crate::ratetable`]).
//! Jump sites are drawn by rejection against an upper bound on the site
//! counts (a uniformly chosen particle); birth and death sites by scanning
//! the per-site rates.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{initial_config, site_rates, truncate_birth, ModelError, ModelParams, RateFunction};
use crate::pde::{self, PdeError};
use crate::ratetable::{from_fixed, to_fixed, RateTable};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("total event rate is zero: the configuration is absorbed")]
    Extinct,
    #[error("event budget of {events} exhausted at t = {time} before any stop condition")]
    EventBudgetExceeded { events: u64, time: f64 },
    #[error("the run did not reach its stop threshold")]
    NotExploded,
    #[error("residual explosion time diverges: {0}")]
    DivergentTail(PdeError),
    #[error("death rate must be bounded or linear for the domination coupling")]
    UnsupportedDeathRate,
    #[error("invalid options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    JumpRight(usize),
    JumpLeft(usize),
    Birth(usize),
    Death(usize),
    /// A ring of the master death clock whose thinning mark was rejected.
    Idle(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
}

/// How deaths are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeathMode {
    /// Each site dies at its own rate `ell * d(c / ell)`.
    PerSite,
    /// A master clock of rate `ell * N * sup_d` picks a uniform site and kills a
    /// particle there with probability `d(c / ell) / sup_d`.
    Thinned { sup: f64 },
}

/// `ell * rate(c / ell)` in fixed point, memoised by count.
#[derive(Debug, Clone)]
struct RateCache {
    rate: RateFunction,
    ell: f64,
    values: Vec<u128>,
}

impl RateCache {
    fn new(rate: &RateFunction, ell: u64) -> Self {
        Self {
            rate: rate.clone(),
            ell: ell as f64,
            values: Vec::new(),
        }
    }

    #[inline]
    fn get(&mut self, count: u64) -> u128 {
        let c = count as usize;
        if c >= self.values.len() {
            self.grow(c);
        }
        self.values[c]
    }

    #[cold]
    fn grow(&mut self, c: usize) {
        let target = (c + 1).max(2 * self.values.len()).max(64);
        for i in self.values.len()..target {
            self.values.push(to_fixed(self.ell * self.rate.eval(i as f64 / self.ell)));
        }
    }
}

/// Occupation numbers together with the per-site reaction rates.
#[derive(Debug, Clone)]
pub struct ParticleConfig {
    counts: Vec<u64>,
    total: u64,
    births: RateTable,
    deaths: RateTable,
    time: f64,
}

impl ParticleConfig {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Sum of the per-site birth rates.
    pub fn birth_total(&self) -> f64 {
        self.births.total()
    }

    pub fn death_total(&self) -> f64 {
        self.deaths.total()
    }

    pub fn birth_rate_at(&self, site: usize) -> f64 {
        from_fixed(self.births.get(site))
    }
}

/// A running particle system.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    params: ModelParams,
    config: ParticleConfig,
    birth_rates: RateCache,
    death_rates: RateCache,
    death_mode: DeathMode,
    /// Per-site death rates are maintained.
    track_deaths: bool,
    /// Rate at which any single particle jumps (both directions).
    jump_rate: f64,
    /// Upper bound on every site count.
    count_bound: u64,
    until_rescan: u64,
    events: u64,
}

impl ParticleSystem {
    pub fn new(params: &ModelParams, counts: Vec<u64>) -> Result<Self, SimError> {
        params.validate()?;
        if counts.len() != params.n {
            return Err(SimError::BadOptions(format!(
                "configuration has {} sites, model has {}",
                counts.len(),
                params.n
            )));
        }
        let mut birth_rates = RateCache::new(&params.birth, params.ell);
        let mut death_rates = RateCache::new(&params.death, params.ell);
        let b = counts.iter().map(|&c| birth_rates.get(c)).collect();
        let d = counts.iter().map(|&c| death_rates.get(c)).collect();
        let config = ParticleConfig {
            total: counts.iter().sum(),
            births: RateTable::new(b),
            deaths: RateTable::new(d),
            counts,
            time: 0.0,
        };
        let count_bound = config.max_count();
        let n = params.n;
        Ok(Self {
            params: params.clone(),
            config,
            birth_rates,
            death_rates,
            death_mode: DeathMode::PerSite,
            track_deaths: !params.death.is_zero(),
            jump_rate: 2.0 * (n * n) as f64,
            count_bound,
            until_rescan: 4 * n as u64,
            events: 0,
        })
    }

    /// Starts from `initial_config(params, rng)`.
    pub fn from_initial<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Self, SimError> {
        let counts = initial_config(params, rng);
        Self::new(params, counts)
    }

    pub fn with_death_mode(mut self, mode: DeathMode) -> Self {
        self.death_mode = mode;
        self.track_deaths = mode == DeathMode::PerSite && !self.params.death.is_zero();
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &ParticleConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.config.time
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    fn jump_total(&self) -> f64 {
        self.jump_rate * self.config.total as f64
    }

    fn death_channel_total(&self) -> f64 {
        match self.death_mode {
            DeathMode::PerSite => self.config.deaths.total(),
            DeathMode::Thinned { sup } => self.params.mass_scale() * sup,
        }
    }

    /// Total rate of all events.
    pub fn total_rate(&self) -> f64 {
        self.jump_total() + self.config.births.total() + self.death_channel_total()
    }

    /// Draws the next event without applying it. The returned time is absolute.
    pub fn next_event<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Event, SimError> {
        let jumps = self.jump_total();
        let births = self.config.births.total();
        let deaths = self.death_channel_total();
        let total = jumps + births + deaths;
        if total <= 0.0 {
            return Err(SimError::Extinct);
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        let time = self.config.time + wait;
        let pick = rng.random::<f64>() * total;

        let kind = if jumps > 0.0 && (pick < jumps || births + deaths <= 0.0) {
            let right = pick < 0.5 * jumps;
            let site = self.uniform_particle_site(rng);
            if right {
                EventKind::JumpRight(site)
            } else {
                EventKind::JumpLeft(site)
            }
        } else if births > 0.0 && (pick < jumps + births || deaths <= 0.0) {
            EventKind::Birth(self.config.births.search(rng.random::<f64>()))
        } else {
            match self.death_mode {
                DeathMode::PerSite => EventKind::Death(self.config.deaths.search(rng.random::<f64>())),
                DeathMode::Thinned { sup } => {
                    let site = rng.random_range(0..self.params.n);
                    let ell = self.params.ell as f64;
                    let rate = self.params.death.eval(self.config.counts[site] as f64 / ell);
                    if rng.random::<f64>() * sup < rate {
                        EventKind::Death(site)
                    } else {
                        EventKind::Idle(site)
                    }
                }
            }
        };
        Ok(Event { kind, time })
    }

    /// Site of a uniformly chosen particle: a uniform point of the
    /// `N x count_bound` grid of (site, level) cells, accepted when the level
    /// is occupied. One uniform supplies both coordinates.
    fn uniform_particle_site<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let n = self.params.n;
        let bound = self.count_bound as f64;
        loop {
            let x = rng.random::<f64>() * n as f64;
            let site = (x as usize).min(n - 1);
            let level = (x - site as f64) * bound;
            if level < self.config.counts[site] as f64 {
                return site;
            }
        }
    }

    #[inline]
    fn refresh_site(&mut self, site: usize) {
        let c = self.config.counts[site];
        let b = self.birth_rates.get(c);
        self.config.births.set(site, b);
        if self.track_deaths {
            let d = self.death_rates.get(c);
            self.config.deaths.set(site, d);
        }
    }

    #[inline]
    fn shift(&mut self, from: usize, to: usize) {
        let counts = &mut self.config.counts;
        counts[from] -= 1;
        counts[to] += 1;
        self.count_bound = self.count_bound.max(counts[to]);
        self.refresh_site(from);
        self.refresh_site(to);
    }

    #[inline]
    fn add(&mut self, site: usize) {
        self.config.counts[site] += 1;
        self.config.total += 1;
        self.count_bound = self.count_bound.max(self.config.counts[site]);
        self.refresh_site(site);
    }

    #[inline]
    fn remove(&mut self, site: usize) {
        self.config.counts[site] -= 1;
        self.config.total -= 1;
        self.refresh_site(site);
    }

    /// Applies an event drawn by [`Self::next_event`] and returns the site that
    /// gained a particle, if any.
    pub fn apply(&mut self, event: &Event) -> Option<usize> {
        let n = self.params.n;
        self.config.time = event.time;
        self.events += 1;
        let gained = match event.kind {
            EventKind::JumpRight(k) => {
                let to = if k + 1 == n { 0 } else { k + 1 };
                self.shift(k, to);
                Some(to)
            }
            EventKind::JumpLeft(k) => {
                let to = if k == 0 { n - 1 } else { k - 1 };
                self.shift(k, to);
                Some(to)
            }
            EventKind::Birth(k) => {
                self.add(k);
                Some(k)
            }
            EventKind::Death(k) => {
                self.remove(k);
                None
            }
            EventKind::Idle(_) => None,
        };
        self.until_rescan -= 1;
        if self.until_rescan == 0 {
            self.until_rescan = 4 * n as u64;
            self.count_bound = self.config.max_count();
        }
        gained
    }

    /// Draws and applies one event.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Event, SimError> {
        let event = self.next_event(rng)?;
        self.apply(&event);
        Ok(event)
    }

    /// True when every cached per-site rate, and the running totals, equal a
    /// fresh computation from the counts.
    pub fn rate_cache_is_coherent(&self) -> bool {
        let fresh = |pick: fn(&crate::model::SiteRates) -> f64| {
            let rates: Vec<f64> = self
                .config
                .counts
                .iter()
                .map(|&c| pick(&site_rates(c, &self.params)))
                .collect();
            RateTable::from_rates(&rates)
        };
        let total_ok = self.config.total == self.config.counts.iter().sum::<u64>();
        let bound_ok = self.count_bound >= self.config.max_count();
        let births_ok = self.config.births == fresh(|r| r.birth);
        let deaths_ok = !self.track_deaths || self.config.deaths == fresh(|r| r.death);
        total_ok && bound_ok && births_ok && deaths_ok
    }
}

/// Stop conditions and recording options of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_end: f64,
    /// Stop once the largest site density reaches this value.
    pub stop_threshold: f64,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    /// Additional density levels whose hitting times are recorded.
    #[serde(default)]
    pub extra_levels: Vec<f64>,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
}

fn default_max_events() -> u64 {
    100_000_000_000
}

impl SimOptions {
    pub fn new(t_end: f64, stop_threshold: f64) -> Self {
        Self {
            t_end,
            stop_threshold,
            sample_times: Vec::new(),
            extra_levels: Vec::new(),
            max_events: default_max_events(),
        }
    }

    pub fn samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn extra_levels(mut self, levels: Vec<f64>) -> Self {
        self.extra_levels = levels;
        self
    }

    pub fn max_events(mut self, cap: u64) -> Self {
        self.max_events = cap;
        self
    }

    /// `2, 4, 8, ...` below the stop threshold, the stop threshold itself, and
    /// any extra levels, sorted.
    pub fn levels(&self) -> Vec<f64> {
        let mut levels = Vec::new();
        let mut m = 2.0;
        while m < self.stop_threshold {
            levels.push(m);
            m *= 2.0;
        }
        levels.push(self.stop_threshold);
        levels.extend(self.extra_levels.iter().copied().filter(|&l| l < self.stop_threshold));
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub counts: Vec<u64>,
}

/// First times the sup-site density and the mean density reach `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdHit {
    pub level: f64,
    pub t_sup: Option<f64>,
    pub t_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub snapshots: Vec<Snapshot>,
    pub threshold_hits: Vec<ThresholdHit>,
    pub stop_threshold: f64,
    /// The stop threshold was reached before `t_end`.
    pub exploded: bool,
    /// Time of the last event when the configuration became absorbing.
    pub extinct_at: Option<f64>,
    pub events_processed: u64,
    pub final_time: f64,
    pub final_counts: Vec<u64>,
}

impl SimOutcome {
    pub fn hit(&self, level: f64) -> Option<ThresholdHit> {
        self.threshold_hits.iter().copied().find(|h| h.level == level)
    }

    /// Snapshot CSV: header `time,site_0,...` and raw counts.
    pub fn snapshots_csv(&self) -> String {
        let n = self.final_counts.len();
        let mut out = String::from("time");
        for k in 0..n {
            out.push_str(&format!(",site_{k}"));
        }
        out.push('\n');
        for s in &self.snapshots {
            out.push_str(&crate::fmt17(s.time));
            for c in &s.counts {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    /// Threshold CSV: `M,t_hit_sup,t_hit_total`; levels never reached print as `inf`.
    pub fn thresholds_csv(&self) -> String {
        let mut out = String::from("M,t_hit_sup,t_hit_total\n");
        let show = |t: Option<f64>| t.map_or_else(|| "inf".to_string(), crate::fmt17);
        for h in &self.threshold_hits {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::fmt17(h.level),
                show(h.t_sup),
                show(h.t_total)
            ));
        }
        out
    }
}

/// Drives a [`ParticleSystem`] one event at a time while recording snapshots
/// and threshold hits.
#[derive(Debug, Clone)]
pub struct Runner {
    system: ParticleSystem,
    opts: SimOptions,
    samples: Vec<f64>,
    next_sample: usize,
    snapshots: Vec<Snapshot>,
    hits: Vec<ThresholdHit>,
    sup_next: usize,
    total_next: usize,
    /// Particle counts at which the next sup and total levels are reached.
    sup_trigger: u64,
    total_trigger: u64,
    exploded: bool,
    extinct_at: Option<f64>,
    final_time: Option<f64>,
}

impl Runner {
    pub fn new(system: ParticleSystem, opts: SimOptions) -> Result<Self, SimError> {
        if !(opts.t_end > 0.0) {
            return Err(SimError::BadOptions("t_end must be positive".into()));
        }
        let sup_phi = system.params().profile.sup();
        if !(opts.stop_threshold > sup_phi) {
            return Err(SimError::BadOptions(format!(
                "stop threshold {} must exceed the initial profile maximum {sup_phi}",
                opts.stop_threshold
            )));
        }
        let mut samples: Vec<f64> = opts
            .sample_times
            .iter()
            .copied()
            .filter(|&s| s <= opts.t_end)
            .collect();
        samples.sort_by(f64::total_cmp);
        samples.dedup();
        let hits = opts
            .levels()
            .into_iter()
            .map(|level| ThresholdHit {
                level,
                t_sup: None,
                t_total: None,
            })
            .collect();
        let mut runner = Self {
            system,
            opts,
            samples,
            next_sample: 0,
            snapshots: Vec::new(),
            hits,
            sup_next: 0,
            total_next: 0,
            sup_trigger: 0,
            total_trigger: 0,
            exploded: false,
            extinct_at: None,
            final_time: None,
        };
        let max = runner.system.config().max_count();
        runner.record_levels(max);
        Ok(runner)
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn is_done(&self) -> bool {
        self.final_time.is_some()
    }

    fn record_samples_until(&mut self, t: f64) {
        while self.next_sample < self.samples.len() && self.samples[self.next_sample] <= t {
            self.snapshots.push(Snapshot {
                time: self.samples[self.next_sample],
                counts: self.system.config().counts().to_vec(),
            });
            self.next_sample += 1;
        }
    }

    fn record_levels(&mut self, gained_count: u64) {
        let ell = self.system.params().ell as f64;
        let mass = self.system.params().mass_scale();
        let t = self.system.time();
        while self.sup_next < self.hits.len() && gained_count as f64 >= ell * self.hits[self.sup_next].level {
            self.hits[self.sup_next].t_sup = Some(t);
            self.sup_next += 1;
        }
        let total = self.system.config().total();
        while self.total_next < self.hits.len() && total as f64 >= mass * self.hits[self.total_next].level {
            self.hits[self.total_next].t_total = Some(t);
            self.total_next += 1;
        }
        // `c as f64 >= x` holds exactly when `c >= ceil(x)`.
        let trigger = |next: usize, scale: f64| {
            self.hits
                .get(next)
                .map_or(u64::MAX, |h| (scale * h.level).ceil() as u64)
        };
        self.sup_trigger = trigger(self.sup_next, ell);
        self.total_trigger = trigger(self.total_next, mass);
        if self.sup_next == self.hits.len() {
            self.exploded = true;
            self.final_time = Some(t);
        }
    }

    /// Processes one event. Returns the applied event, or `None` once the run
    /// has finished.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<Event>, SimError> {
        if self.is_done() {
            return Ok(None);
        }
        if self.system.events_processed() >= self.opts.max_events {
            return Err(SimError::EventBudgetExceeded {
                events: self.system.events_processed(),
                time: self.system.time(),
            });
        }
        let event = match self.system.next_event(rng) {
            Ok(event) => event,
            Err(SimError::Extinct) => {
                self.extinct_at = Some(self.system.time());
                self.record_samples_until(self.opts.t_end);
                self.final_time = Some(self.opts.t_end);
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        if event.time > self.opts.t_end {
            self.record_samples_until(self.opts.t_end);
            self.final_time = Some(self.opts.t_end);
            return Ok(None);
        }
        if self.samples.get(self.next_sample).is_some_and(|&s| s <= event.time) {
            self.record_samples_until(event.time);
        }
        if let Some(site) = self.system.apply(&event) {
            let count = self.system.config().counts()[site];
            if count >= self.sup_trigger || self.system.config().total() >= self.total_trigger {
                self.record_levels(count);
            }
        }
        Ok(Some(event))
    }

    pub fn run<R: Rng + ?Sized>(mut self, rng: &mut R) -> Result<SimOutcome, SimError> {
        while self.advance(rng)?.is_some() {}
        Ok(self.finish())
    }

    /// Closes the run at the current state.
    pub fn finish(mut self) -> SimOutcome {
        let final_time = match self.final_time {
            Some(t) => t,
            None => {
                let t = self.system.time();
                self.record_samples_until(t);
                t
            }
        };
        SimOutcome {
            snapshots: self.snapshots,
            threshold_hits: self.hits,
            stop_threshold: self.opts.stop_threshold,
            exploded: self.exploded,
            extinct_at: self.extinct_at,
            events_processed: self.system.events_processed(),
            final_time,
            final_counts: self.system.config().counts().to_vec(),
        }
    }
}

/// Simulates from `initial_config(params, rng)` until `t_end` or until the
/// sup-site density reaches the stop threshold.
pub fn simulate<R: Rng + ?Sized>(params: &ModelParams, opts: &SimOptions, rng: &mut R) -> Result<SimOutcome, SimError> {
    let system = ParticleSystem::from_initial(params, rng)?;
    Runner::new(system, opts.clone())?.run(rng)
}

/// Explosion time estimate from a run that reached its stop threshold `M`:
/// the raw hitting time and the hitting time plus `int_M^inf ds / b(s)`.
pub fn estimate_explosion_time(outcome: &SimOutcome, birth: &RateFunction) -> Result<(f64, f64), SimError> {
    if !outcome.exploded {
        return Err(SimError::NotExploded);
    }
    let t_raw = outcome
        .hit(outcome.stop_threshold)
        .and_then(|h| h.t_sup)
        .unwrap_or(outcome.final_time);
    let tail = pde::tail_integral(&|s| birth.eval(s), outcome.stop_threshold).map_err(SimError::DivergentTail)?;
    Ok((t_raw, t_raw + tail))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCoupling {
    pub original: SimOutcome,
    pub truncated: SimOutcome,
    /// Earliest time at which the two runs applied different events.
    pub first_divergence_time: Option<f64>,
    /// First time the truncated run's sup-site density reached `M + 1/2`.
    pub separation_time: Option<f64>,
    /// Events both runs applied identically.
    pub shared_events: u64,
}

/// Runs the model and its copy with birth rate truncated above `M + 1` on
/// clones of one random stream.
///
/// While every site density stays at or below `M + 1` the two rate tables are
/// identical, so both runs decode the stream into the same events; the first
/// divergence can only come after the sup-site density has passed `M + 1/2`.
pub fn coupled_truncation_run<R: Rng + Clone>(
    params: &ModelParams,
    m: f64,
    taper: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<TruncationCoupling, SimError> {
    let mut truncated_params = params.clone();
    truncated_params.birth = truncate_birth(&params.birth, m, taper);
    let separation_level = m + 0.5;
    let opts = {
        let mut o = opts.clone();
        o.extra_levels.push(separation_level);
        o
    };

    let counts = initial_config(params, rng);
    let mut rng_truncated = rng.clone();
    let mut original = Runner::new(ParticleSystem::new(params, counts.clone())?, opts.clone())?;
    let mut truncated = Runner::new(ParticleSystem::new(&truncated_params, counts)?, opts.clone())?;

    let mut divergence = None;
    let mut shared = 0;
    while !(original.is_done() && truncated.is_done()) {
        let a = original.advance(rng)?;
        let b = truncated.advance(&mut rng_truncated)?;
        if divergence.is_none() {
            match (a, b) {
                (Some(x), Some(y)) if x == y => shared += 1,
                (Some(x), Some(y)) => divergence = Some(x.time.min(y.time)),
                // one run stopped: the trajectories agree up to that stop
                _ => {}
            }
        }
    }
    let truncated = truncated.finish();
    let separation_time = truncated.hit(separation_level).and_then(|h| h.t_sup);
    Ok(TruncationCoupling {
        original: original.finish(),
        truncated,
        first_divergence_time: divergence,
        separation_time,
        shared_events: shared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationOptions {
    pub sim: SimOptions,
    pub y0: u64,
    /// Stop once the lower process reaches this value.
    #[serde(default)]
    pub y_target: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YPoint {
    pub time: f64,
    pub y: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationOutcome {
    pub outcome: SimOutcome,
    /// Value of the lower process after each of its moves.
    pub y_path: Vec<YPoint>,
    pub y_final: u64,
    /// `Y(t) <= total(t)` after every event.
    pub dominated: bool,
    pub min_slack: i64,
    /// Time at which `y_target` was reached.
    pub target_time: Option<f64>,
    /// Births at which the acceptance ratio exceeded one and was clipped.
    /// Zero whenever the birth rate is convex and nondecreasing.
    pub clipped_births: u64,
    pub thinned_deaths: bool,
}

/// Builds a one-dimensional birth-death process `Y` jointly with the particle
/// system so that `Y` never exceeds the total number of particles.
///
/// * Births: at every birth of the system, `Y` moves up with probability
///   `ell N b(Y / (ell N)) / sum_k ell b(eta_k / ell)`. For convex
///   nondecreasing `b` and `Y <= total` this lies in `[0, 1]` and gives `Y`
///   the birth rate `ell N b(Y / (ell N))`.
/// * Bounded `d`: deaths of the system are a thinning of a master clock of
///   rate `ell N sup d`; `Y` moves down at every ring.
/// * Linear `d`: at every death of the system, `Y` moves down with
///   probability `Y / total`, which gives it the death rate `slope * Y`.
pub fn coupled_domination_run<R: Rng + ?Sized>(
    params: &ModelParams,
    opts: &DominationOptions,
    rng: &mut R,
) -> Result<DominationOutcome, SimError> {
    let death = &params.death;
    let mode = if death.is_zero() {
        DeathMode::PerSite
    } else if death.linear_slope().is_some() {
        DeathMode::PerSite
    } else if let Some(sup) = death.sup_norm() {
        DeathMode::Thinned { sup }
    } else {
        return Err(SimError::UnsupportedDeathRate);
    };
    let thinned = matches!(mode, DeathMode::Thinned { .. });

    let system = ParticleSystem::from_initial(params, rng)?.with_death_mode(mode);
    if opts.y0 > system.config().total() {
        return Err(SimError::BadOptions(format!(
            "y0 = {} exceeds the initial number of particles {}",
            opts.y0,
            system.config().total()
        )));
    }
    let mass = params.mass_scale();
    let mut runner = Runner::new(system, opts.sim.clone())?;
    let mut y = opts.y0;
    let mut y_path = vec![YPoint {
        time: 0.0,
        y,
        total: runner.system().config().total(),
    }];
    let mut dominated = true;
    let mut min_slack = runner.system().config().total() as i64 - y as i64;
    let mut clipped = 0;
    let mut target_time = opts.y_target.filter(|&t| y >= t).map(|_| 0.0);

    while target_time.is_none() {
        let birth_total = runner.system().config().birth_total();
        let total_before = runner.system().config().total();
        let Some(event) = runner.advance(rng)? else { break };
        let moved = match event.kind {
            EventKind::Birth(_) => {
                let ratio = mass * params.birth.eval(y as f64 / mass) / birth_total;
                if ratio > 1.0 {
                    clipped += 1;
                }
                if rng.random::<f64>() < ratio {
                    y += 1;
                    true
                } else {
                    false
                }
            }
            EventKind::Death(_) | EventKind::Idle(_) if thinned && y > 0 => {
                y -= 1;
                true
            }
            EventKind::Death(_) if y > 0 => {
                // Linear deaths: follow the system with probability Y / total,
                // so that Y dies at rate slope * Y.
                if y == total_before || rng.random::<f64>() * (total_before as f64) < y as f64 {
                    y -= 1;
                    true
                } else {
                    false
                }
            }
            _ => false,
        };
        let total = runner.system().config().total();
        let slack = total as i64 - y as i64;
        min_slack = min_slack.min(slack);
        if slack < 0 {
            dominated = false;
        }
        if moved {
            y_path.push(YPoint {
                time: event.time,
                y,
                total,
            });
            if opts.y_target.is_some_and(|t| y >= t) {
                target_time = Some(event.time);
            }
        }
    }
    Ok(DominationOutcome {
        outcome: runner.finish(),
        y_path,
        y_final: y,
        dominated,
        min_slack,
        target_time,
        clipped_births: clipped,
        thinned_deaths: thinned,
    })
}
