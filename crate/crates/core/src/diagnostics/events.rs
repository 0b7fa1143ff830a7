//! Event flags of instrumented Gaussian Thompson-sampling runs.
//!
//! With `μ̂(s)`, `N(s)` the statistics used at step `s`, `V = diag(1/N)` and
//! `Z(s)` the step's standard normals:
//!
//! * 𝔅_t: `max_{s≤t} max_i √N_i(s) |μ⋆_i − μ̂_i(s)| ≥ σ√(8 ln t)`
//! * ℭ_t: `max_{s≤t} ‖Z(s)‖_∞ ≥ √(6 ln t)`
//! * 𝔇_t: `max_{s≤t} −U⋆(s) ≥ σ√(2f(t))`, `U⋆ = A⋆^⊤(μ̂ − μ⋆)/√(A⋆^⊤VA⋆)`
//! * 𝔈_t: `W_t(t) ≤ C₂ t^α`, `W_t(t) = #{s ≤ t : S⋆(s) ≥ σ√(2f(t))}`,
//!   `S⋆ = σ√(2g(s)) A⋆^⊤V^{1/2}Z / √(A⋆^⊤VA⋆)`
//! * 𝔄_t (clean run): `|A^⊤θ(s) − A^⊤μ⋆| ≤ C₁σ√(m ln t) A^⊤V^{1/2}(s)A` for
//!   all `s ≤ t` and `A`, and `#{s ≤ t : A⋆^⊤θ(s) ≥ A⋆^⊤μ⋆} ≥ C₂ t^α`
//! * 𝔉_t: `∃ i ∈ A(t): μ̂_i − μ⋆_i > Δ_min/(4m)`
//! * 𝔊_t: `A(t)^⊤(θ − μ⋆) > 3Δ(t)/4`
//! * ℌ_t: `A(t)^⊤(θ − μ̂) > σ√(8 f̃(t) A(t)^⊤VA(t))`
//! * ℨ_t: `Δ(t) > 0`
//!
//! Steps played from the initialization queue carry no Thompson sample; they
//! contribute to 𝔅, ℭ and 𝔇 but not to the θ-based quantities.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{BoundDirection, BoundReport, DiagnosticsError, Result};
use crate::agents::{AgentKind, AgentSpec, AgentState};
use crate::combinat::{Action, ActionSetSpec};
use crate::envs::{EnvSpec, MeanSpec};
use crate::harness::{run_episode, CellSeed, Instance, RunTrace};
use crate::schedules::{h_bound, q_tail, Constants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Complement of the clean run 𝔄_t.
    NotClean,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    Z,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::NotClean,
        EventKind::B,
        EventKind::C,
        EventKind::D,
        EventKind::E,
        EventKind::F,
        EventKind::G,
        EventKind::H,
        EventKind::Z,
    ];

    fn holds(self, flags: &EventFlags) -> bool {
        match self {
            EventKind::NotClean => !flags.clean_run,
            EventKind::B => flags.b,
            EventKind::C => flags.c,
            EventKind::D => flags.d,
            EventKind::E => flags.e,
            EventKind::F => flags.f,
            EventKind::G => flags.g,
            EventKind::H => flags.h,
            EventKind::Z => flags.z,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EventKind::NotClean => "not-A",
            EventKind::B => "B",
            EventKind::C => "C",
            EventKind::D => "D",
            EventKind::E => "E",
            EventKind::F => "F",
            EventKind::G => "G",
            EventKind::H => "H",
            EventKind::Z => "Z",
        };
        f.write_str(name)
    }
}

impl FromStr for EventKind {
    type Err = DiagnosticsError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "A" | "NOT-A" | "NOT-CLEAN" => EventKind::NotClean,
            "B" => EventKind::B,
            "C" => EventKind::C,
            "D" => EventKind::D,
            "E" => EventKind::E,
            "F" => EventKind::F,
            "G" => EventKind::G,
            "H" => EventKind::H,
            "Z" => EventKind::Z,
            _ => return Err(DiagnosticsError::UnknownEvent(s.into())),
        })
    }
}

/// Theoretical upper bound on `P(event at t)`, if the analysis provides one.
pub fn event_bound(event: EventKind, t: u64, d: usize, constants: &Constants) -> Option<f64> {
    let t = t as f64;
    let d = d as f64;
    let ln = t.ln();
    let self_normalized = 1.0 / (t * ln * ln);
    let optimistic = (-constants.c4 * t.powf(constants.alpha)).exp();
    match event {
        EventKind::B | EventKind::C => Some(2.0 * d / (t * t)),
        EventKind::H => Some(1.0 / (t * t)),
        EventKind::D => Some(self_normalized),
        EventKind::E => Some(optimistic),
        EventKind::NotClean => Some(4.0 * d / (t * t) + self_normalized + optimistic),
        EventKind::F | EventKind::G | EventKind::Z => None,
    }
}

/// Flags of one step; `t` is the step index.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFlags {
    pub t: u64,
    /// Played from the initialization queue.
    pub init: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
    pub e: bool,
    pub f: bool,
    pub g: bool,
    pub h: bool,
    pub z: bool,
    /// `W_t(t)`.
    pub w: u64,
    /// `#{s ≤ t : A⋆^⊤θ(s) ≥ A⋆^⊤μ⋆}`.
    pub optimistic_count: u64,
    /// `max_{s≤t} max_A |A^⊤(θ(s) − μ⋆)| / A^⊤V^{1/2}(s)A`.
    pub sample_path_ratio: f64,
    pub clean_run: bool,
    /// `¬𝔉 ∧ 𝔊 ∧ ¬ℌ`.
    pub deltatle_premise: bool,
    /// `Δ(t) < 2σ√(8 f̃(t) A^⊤VA)`.
    pub deltatle_conclusion: bool,
}

#[derive(Debug, Clone)]
pub struct InstrumentedRun {
    pub trace: RunTrace,
    pub flags: Vec<EventFlags>,
    /// `S⋆(s)`; `None` on initialization steps.
    pub s_star: Vec<Option<f64>>,
    /// `U⋆(s)`; `None` until every item of `A⋆` has been observed.
    pub u_star: Vec<Option<f64>>,
}

/// Fenwick tree of counts over value ranks.
struct RankCounter {
    tree: Vec<u64>,
}

impl RankCounter {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0; n + 1],
        }
    }

    fn insert(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks `< rank`.
    fn count_below(&self, rank: usize) -> u64 {
        let mut i = rank;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }
}

fn check_gaussian(kind: &AgentKind) -> Result<()> {
    if kind.is_gaussian() {
        Ok(())
    } else {
        Err(DiagnosticsError::UnsupportedAgent(kind.default_label()))
    }
}

/// Per-step flags with `S⋆` and `U⋆`, as in [`InstrumentedRun`].
pub type FlagSeries = (Vec<EventFlags>, Vec<Option<f64>>, Vec<Option<f64>>);

/// Evaluates every flag from a stored trace. Pure: the same trace always
/// yields the same flags.
pub fn evaluate_flags(
    instance: &Instance,
    trace: &RunTrace,
    constants: &Constants,
) -> Result<FlagSeries> {
    let actions = instance
        .actions()
        .enumerate()
        .map_err(crate::harness::HarnessError::from)?;
    evaluate_with(instance, &actions, trace, constants)
}

fn evaluate_with(
    instance: &Instance,
    actions: &[Action],
    trace: &RunTrace,
    constants: &Constants,
) -> Result<FlagSeries> {
    check_gaussian(&trace.agent)?;
    let probe = AgentState::new(trace.agent.clone(), instance.actions().clone(), trace.sigma)?;
    let schedule = probe.schedule();
    let sigma = trace.sigma;
    let mu_star = instance.env().mu_star();
    let d = mu_star.len();
    let m = instance.actions().max_size() as f64;
    let gaps = instance.gaps();
    let a_star = &gaps.optimal_action;
    let f_threshold = gaps.delta_min.map_or(f64::INFINITY, |dm| dm / (4.0 * m));

    // Replayed statistics before each step.
    let mut n = vec![0u64; d];
    let mut sums = vec![0.0; d];
    let mut mu_hat = vec![0.0; d];
    let mut s_star = Vec::with_capacity(trace.steps.len());
    let mut u_star = Vec::with_capacity(trace.steps.len());
    let mut pre_stats = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let z = step.detail.z().ok_or_else(|| {
            DiagnosticsError::UnsupportedAgent(format!(
                "{} (no noise at t={})",
                trace.label, step.t
            ))
        })?;
        let star_ready = a_star.items().iter().all(|&i| n[i] > 0);
        let star_width = || {
            a_star
                .items()
                .iter()
                .map(|&i| 1.0 / n[i] as f64)
                .sum::<f64>()
        };
        u_star.push(star_ready.then(|| {
            let dev: f64 = a_star.items().iter().map(|&i| mu_hat[i] - mu_star[i]).sum();
            dev / star_width().sqrt()
        }));
        s_star.push(match (&step.detail.theta(), star_ready) {
            (Some(_), true) => {
                let proj: f64 = a_star
                    .items()
                    .iter()
                    .map(|&i| z[i] / (n[i] as f64).sqrt())
                    .sum();
                Some(sigma * probe.noise_scale(step.t) * proj / star_width().sqrt())
            }
            _ => None,
        });
        pre_stats.push((n.clone(), mu_hat.clone()));
        for &i in step.action.items() {
            n[i] += 1;
            sums[i] += step.observed[i];
            mu_hat[i] = sums[i] / n[i] as f64;
        }
    }

    let mut sorted: Vec<f64> = s_star.iter().flatten().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let mut counter = RankCounter::new(sorted.len());
    let mut inserted = 0u64;

    let mut max_b = f64::NEG_INFINITY;
    let mut max_z = f64::NEG_INFINITY;
    let mut max_neg_u = f64::NEG_INFINITY;
    let mut max_ratio = 0.0f64;
    let mut optimistic_count = 0u64;
    let mut flags = Vec::with_capacity(trace.steps.len());
    for (k, step) in trace.steps.iter().enumerate() {
        let t = step.t;
        let ln_t = (t as f64).ln();
        let (n, mu_hat) = &pre_stats[k];
        let z = step.detail.z().expect("checked above");

        for i in (0..d).filter(|&i| n[i] > 0) {
            max_b = max_b.max((n[i] as f64).sqrt() * (mu_star[i] - mu_hat[i]).abs());
        }
        max_z = z.iter().fold(max_z, |acc, x| acc.max(x.abs()));
        if let Some(u) = u_star[k] {
            max_neg_u = max_neg_u.max(-u);
        }
        if let Some(s) = s_star[k] {
            counter.insert(sorted.partition_point(|&x| x < s));
            inserted += 1;
        }
        let f_t = schedule.f(t);
        let star_threshold = sigma * (2.0 * f_t).sqrt();
        let w = inserted - counter.count_below(sorted.partition_point(|&x| x < star_threshold));
        let power = constants.c2 * (t as f64).powf(constants.alpha);

        let action = &step.action;
        let width: f64 = action.items().iter().map(|&i| 1.0 / n[i] as f64).sum();
        let radius = sigma * (8.0 * schedule.f_tilde(t) * width).sqrt();
        let (mut f, mut g, mut h) = (false, false, false);
        if let Some(theta) = step.detail.theta() {
            for a in actions {
                let dev: f64 = a.items().iter().map(|&i| theta[i] - mu_star[i]).sum();
                let scale: f64 = a.items().iter().map(|&i| 1.0 / (n[i] as f64).sqrt()).sum();
                max_ratio = max_ratio.max(dev.abs() / scale);
            }
            if a_star.dot(theta) >= gaps.optimal_value {
                optimistic_count += 1;
            }
            f = action
                .items()
                .iter()
                .any(|&i| mu_hat[i] - mu_star[i] > f_threshold);
            let to_truth: f64 = action.items().iter().map(|&i| theta[i] - mu_star[i]).sum();
            g = to_truth > 0.75 * step.gap;
            let to_mean: f64 = action.items().iter().map(|&i| theta[i] - mu_hat[i]).sum();
            h = to_mean > radius;
        }
        let clean_run = max_ratio <= constants.c1 * sigma * (m * ln_t).sqrt()
            && optimistic_count as f64 >= power;
        flags.push(EventFlags {
            t,
            init: step.detail.theta().is_none(),
            b: max_b >= sigma * (8.0 * ln_t).sqrt(),
            c: max_z >= (6.0 * ln_t).sqrt(),
            d: max_neg_u >= star_threshold,
            e: (w as f64) <= power,
            f,
            g,
            h,
            z: step.gap > 0.0,
            w,
            optimistic_count,
            sample_path_ratio: max_ratio,
            clean_run,
            deltatle_premise: !f && g && !h,
            deltatle_conclusion: step.gap < 2.0 * radius,
        });
    }
    Ok((flags, s_star, u_star))
}

/// Runs a Gaussian Thompson sampler and annotates every step.
pub fn instrument_run(
    instance: &Instance,
    agent: &AgentSpec,
    horizon: u64,
    seed: CellSeed,
    constants: &Constants,
) -> Result<InstrumentedRun> {
    check_gaussian(&agent.kind)?;
    let trace = run_episode(instance, agent, horizon, seed)?;
    let (flags, s_star, u_star) = evaluate_flags(instance, &trace, constants)?;
    Ok(InstrumentedRun {
        trace,
        flags,
        s_star,
        u_star,
    })
}

/// Instance and BG-CTS parameters of an event-rate study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub action_set: ActionSetSpec,
    pub env: EnvSpec,
    pub agent: AgentSpec,
    pub constants: Constants,
}

impl StudyConfig {
    /// Two-block set on `d` items (even), Bernoulli rewards 0.4 on the first
    /// block and 0.6 on the second, BG-CTS with `λ = lambda`.
    pub fn two_block(d: usize, lambda: f64) -> Self {
        Self {
            action_set: ActionSetSpec::TwoBlock { d },
            env: EnvSpec::Bernoulli {
                mu: MeanSpec::Blocks {
                    blocks: vec![(d / 2, 0.4), (d / 2, 0.6)],
                },
                sigma: None,
            },
            agent: AgentSpec::new(AgentKind::BgCts {
                lambda,
                boost: None,
            }),
            constants: Constants::default(),
        }
    }
}

/// Frequency of `event` at each grid time over `reps` independent runs,
/// against its theoretical bound. Run `r` uses the streams of replication `r`
/// under `seed`; the result does not depend on `parallelism`.
pub fn event_rate_study(
    study: &StudyConfig,
    event: EventKind,
    t_grid: &[u64],
    reps: u64,
    seed: u64,
    parallelism: Option<usize>,
) -> Result<Vec<BoundReport>> {
    if t_grid.is_empty() || t_grid.contains(&0) {
        return Err(DiagnosticsError::InvalidGrid(
            "times must be positive and the grid nonempty".into(),
        ));
    }
    let instance = Instance::from_specs(&study.action_set, &study.env)?;
    let d = instance.actions().dim();
    let bounds: Vec<Option<f64>> = t_grid
        .iter()
        .map(|&t| event_bound(event, t, d, &study.constants))
        .collect();
    if bounds.iter().any(Option::is_some) {
        let best = bounds.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        if best * (reps as f64) < 10.0 {
            let needed = if best > 0.0 {
                (10.0 / best).ceil().min(u64::MAX as f64) as u64
            } else {
                u64::MAX
            };
            return Err(DiagnosticsError::InsufficientReps { reps, needed });
        }
    }
    check_gaussian(&study.agent.kind)?;
    let horizon = *t_grid.iter().max().expect("nonempty");
    let actions = instance
        .actions()
        .enumerate()
        .map_err(crate::harness::HarnessError::from)?;
    let one_rep = |rep: u64| -> Result<Vec<bool>> {
        let trace = run_episode(
            &instance,
            &study.agent,
            horizon,
            CellSeed::new(seed, rep, 0),
        )?;
        let (flags, _, _) = evaluate_with(&instance, &actions, &trace, &study.constants)?;
        Ok(t_grid
            .iter()
            .map(|&t| event.holds(&flags[t as usize - 1]))
            .collect())
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallelism {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| DiagnosticsError::ThreadPool(e.to_string()))?;
    let hits = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(one_rep)
            .try_fold(
                || vec![0u64; t_grid.len()],
                |mut acc, row| {
                    for (a, hit) in acc.iter_mut().zip(row?) {
                        *a += u64::from(hit);
                    }
                    Ok::<_, DiagnosticsError>(acc)
                },
            )
            .try_reduce(
                || vec![0u64; t_grid.len()],
                |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
            )
    })?;
    Ok(t_grid
        .iter()
        .zip(hits)
        .zip(bounds)
        .map(|((&t, h), bound)| BoundReport::new(event.to_string(), t, h, reps, bound))
        .collect())
}

/// On the runs that are clean at their last step `t`: the fraction with
/// `M_{A⋆}(t) ≥ C₆ t^α` and the fraction with `|A⋆^⊤θ(t) − A⋆^⊤μ⋆| ≤ h(t)`.
/// Runs whose last step has no Thompson sample count against the second
/// fraction.
pub fn optimistic_count_check(
    instance: &Instance,
    runs: &[InstrumentedRun],
    constants: &Constants,
) -> [BoundReport; 2] {
    let a_star = &instance.gaps().optimal_action;
    let m = instance.actions().max_size();
    let (mut clean, mut count_ok, mut band_ok, mut t_last) = (0u64, 0u64, 0u64, 0u64);
    for run in runs {
        let (Some(flags), Some(step)) = (run.flags.last(), run.trace.steps.last()) else {
            continue;
        };
        if !flags.clean_run {
            continue;
        }
        clean += 1;
        let t = step.t;
        t_last = t_last.max(t);
        let plays = run
            .trace
            .steps
            .iter()
            .filter(|s| &s.action == a_star)
            .count() as f64;
        if plays >= constants.c6 * (t as f64).powf(constants.alpha) {
            count_ok += 1;
        }
        if let Some(theta) = step.detail.theta() {
            if (a_star.dot(theta) - instance.gaps().optimal_value).abs()
                <= h_bound(t, m, run.trace.sigma, constants)
            {
                band_ok += 1;
            }
        }
    }
    [
        BoundReport::new("optimal-count", t_last, count_ok, clean, None),
        BoundReport::new("optimal-sample-band", t_last, band_ok, clean, None),
    ]
}

/// Resamples `Z` at the fixed history held by `state` (next step `s`) and
/// compares the frequency of `S⋆(s) ≥ σ√(2f(t))` with its exact value
/// `Q(√(2f(t)) / noise_scale(s))`, which is `Q(√(f(t)/g(s)))` for BG-CTS.
pub fn w_increment_check<R: Rng + ?Sized>(
    state: &AgentState,
    optimal: &Action,
    t: u64,
    reps: u64,
    rng: &mut R,
) -> Result<BoundReport> {
    check_gaussian(state.kind())?;
    let n = state.n_counts();
    if let Some(item) = optimal.items().iter().position(|&i| n[i] == 0) {
        return Err(crate::agents::AgentError::NotInitialized { item }.into());
    }
    let s = state.steps() + 1;
    let sigma = state.sigma();
    let scale = state.noise_scale(s);
    let threshold = sigma * (2.0 * state.schedule().f(t)).sqrt();
    let width: f64 = optimal
        .items()
        .iter()
        .map(|&i| 1.0 / n[i] as f64)
        .sum::<f64>()
        .sqrt();
    let mut z = vec![0.0; n.len()];
    let mut hits = 0;
    for _ in 0..reps {
        z.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        let proj: f64 = optimal
            .items()
            .iter()
            .map(|&i| z[i] / (n[i] as f64).sqrt())
            .sum();
        if sigma * scale * proj / width >= threshold {
            hits += 1;
        }
    }
    let exact = q_tail((2.0 * state.schedule().f(t)).sqrt() / scale);
    Ok(BoundReport::with_direction(
        "W-increment",
        s,
        hits,
        reps,
        Some(exact),
        BoundDirection::TwoSided,
    ))
}
