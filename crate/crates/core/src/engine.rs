//! 2-Opt driver: repeatedly applies an improving 2-change chosen by a pivot
//! rule and records every step.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::GadgetScript;
use crate::geometry::{
    apply_located, length_with, locate_in, Distances, Instance, Located, Tour, TwoChange,
};

/// Step limit used when nothing better is known (`2^31 - 1`).
pub const UNBOUNDED_STEPS: u64 = (1 << 31) - 1;

/// `10 * n^4 * max(phi, 1)` when `phi` is known, else [`UNBOUNDED_STEPS`].
pub fn default_step_limit(n: usize, phi: Option<f64>) -> u64 {
    match phi {
        Some(phi) => {
            let v = 10.0 * (n as f64).powi(4) * phi.max(1.0);
            if v >= UNBOUNDED_STEPS as f64 {
                UNBOUNDED_STEPS
            } else {
                v.ceil() as u64
            }
        }
        None => UNBOUNDED_STEPS,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PivotKind {
    #[serde(alias = "first")]
    FirstImprovement,
    #[serde(alias = "best")]
    BestImprovement,
    #[serde(alias = "random")]
    RandomImprovement,
    #[serde(alias = "script")]
    Scripted,
}

impl PivotKind {
    pub fn name(self) -> &'static str {
        match self {
            PivotKind::FirstImprovement => "first",
            PivotKind::BestImprovement => "best",
            PivotKind::RandomImprovement => "random",
            PivotKind::Scripted => "scripted",
        }
    }
}

impl fmt::Display for PivotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PivotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" | "first_improvement" => Ok(PivotKind::FirstImprovement),
            "best" | "best_improvement" => Ok(PivotKind::BestImprovement),
            "random" | "random_improvement" => Ok(PivotKind::RandomImprovement),
            "scripted" | "script" => Ok(PivotKind::Scripted),
            other => Err(Error::invalid(format!("unknown pivot rule '{other}'"))),
        }
    }
}

/// How the next improving move is chosen.
#[derive(Clone, Debug)]
pub enum PivotRule {
    /// First improving move in lexicographic order of tour positions; the
    /// scan restarts from the top after every applied move.
    FirstImprovement,
    /// Move with the largest improvement; ties go to the first in scan order.
    BestImprovement,
    /// Uniformly random improving move.
    RandomImprovement { seed: u64 },
    /// Follow a prescribed move list.
    Scripted(Arc<GadgetScript>),
}

impl PivotRule {
    pub fn kind(&self) -> PivotKind {
        match self {
            PivotRule::FirstImprovement => PivotKind::FirstImprovement,
            PivotRule::BestImprovement => PivotKind::BestImprovement,
            PivotRule::RandomImprovement { .. } => PivotKind::RandomImprovement,
            PivotRule::Scripted(_) => PivotKind::Scripted,
        }
    }

    /// Builds a rule from its kind; `seed` is required for
    /// [`PivotKind::RandomImprovement`] and `script` for [`PivotKind::Scripted`].
    pub fn from_kind(
        kind: PivotKind,
        seed: Option<u64>,
        script: Option<Arc<GadgetScript>>,
    ) -> Result<Self> {
        match kind {
            PivotKind::FirstImprovement => Ok(PivotRule::FirstImprovement),
            PivotKind::BestImprovement => Ok(PivotRule::BestImprovement),
            PivotKind::RandomImprovement => seed
                .map(|seed| PivotRule::RandomImprovement { seed })
                .ok_or_else(|| Error::invalid("random pivot rule requires a seed")),
            PivotKind::Scripted => script
                .map(PivotRule::Scripted)
                .ok_or_else(|| Error::invalid("scripted pivot rule requires a script")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    /// Oriented as applied: the added edges are `{u1,v1}` and `{u2,v2}`.
    pub change: TwoChange,
    pub delta: f64,
    pub length_after: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    LocalOpt,
    StepLimit,
    ScriptEnd,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::LocalOpt => "LOCAL_OPT",
            Termination::StepLimit => "STEP_LIMIT",
            Termination::ScriptEnd => "SCRIPT_END",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunTrace {
    pub instance_name: String,
    pub n: usize,
    pub initial_tour: Tour,
    pub initial_length: f64,
    pub steps: Vec<StepRecord>,
    pub final_tour: Tour,
    pub terminated: Termination,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_length(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.initial_length, |s| s.length_after)
    }

    /// Re-applies every recorded step to the initial tour.
    pub fn replay(&self) -> Result<Tour> {
        let mut order = self.initial_tour.order().to_vec();
        let mut pos = positions_of(&order);
        for s in &self.steps {
            let loc = locate_in(&order, &pos, &s.change)?;
            apply_located(&mut order, &loc);
            refresh_positions(&order, &mut pos);
        }
        Ok(Tour::from_canonical(order))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub step_limit: u64,
    /// A move counts as improving only if its delta exceeds this.
    pub eps: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            step_limit: UNBOUNDED_STEPS,
            eps: 0.0,
        }
    }
}

fn positions_of(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    refresh_positions(order, &mut pos);
    pos
}

fn refresh_positions(order: &[usize], pos: &mut [usize]) {
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
}

#[inline]
fn change_at(order: &[usize], i: usize, j: usize) -> TwoChange {
    let n = order.len();
    TwoChange::new(order[i], order[i + 1], order[j], order[(j + 1) % n])
}

/// Visits the `n(n-3)/2` pairs of non-adjacent tour edges in lexicographic
/// order of positions; stops early when `f` returns `false`.
#[inline]
fn for_each_pair(n: usize, mut f: impl FnMut(usize, usize) -> bool) {
    for i in 0..n.saturating_sub(2) {
        let j_end = if i == 0 { n - 1 } else { n };
        for j in (i + 2)..j_end {
            if !f(i, j) {
                return;
            }
        }
    }
}

fn scan_first<D: Distances + ?Sized>(order: &[usize], d: &D, eps: f64) -> Option<(Located, f64)> {
    let mut found = None;
    for_each_pair(order.len(), |i, j| {
        let c = change_at(order, i, j);
        let delta = c.gain(d);
        if delta > eps {
            found = Some((Located { i, j, change: c }, delta));
            false
        } else {
            true
        }
    });
    found
}

fn scan_best<D: Distances + ?Sized>(order: &[usize], d: &D, eps: f64) -> Option<(Located, f64)> {
    let mut best: Option<(Located, f64)> = None;
    for_each_pair(order.len(), |i, j| {
        let c = change_at(order, i, j);
        let delta = c.gain(d);
        if delta > eps && best.as_ref().is_none_or(|(_, b)| delta > *b) {
            best = Some((Located { i, j, change: c }, delta));
        }
        true
    });
    best
}

pub(crate) fn scan_all<D: Distances + ?Sized>(order: &[usize], d: &D, eps: f64) -> Vec<(Located, f64)> {
    let mut out = Vec::new();
    for_each_pair(order.len(), |i, j| {
        let c = change_at(order, i, j);
        let delta = c.gain(d);
        if delta > eps {
            out.push((Located { i, j, change: c }, delta));
        }
        true
    });
    out
}

/// All improving 2-changes of `tour` (delta > `eps`) in lexicographic order
/// of tour positions.
pub fn improving_moves(tour: &Tour, inst: &Instance, eps: f64) -> Vec<(TwoChange, f64)> {
    if tour.len() != inst.n() {
        return Vec::new();
    }
    scan_all(tour.order(), inst, eps)
        .into_iter()
        .map(|(loc, delta)| (loc.change, delta))
        .collect()
}

pub fn is_local_optimum(tour: &Tour, inst: &Instance) -> bool {
    tour.len() == inst.n() && scan_first(tour.order(), inst, 0.0).is_none()
}

pub fn run(inst: &Instance, start: &Tour, rule: &PivotRule, step_limit: u64) -> Result<RunTrace> {
    run_with(
        inst,
        start,
        rule,
        &RunOptions {
            step_limit,
            ..RunOptions::default()
        },
    )
}

pub fn run_with(
    inst: &Instance,
    start: &Tour,
    rule: &PivotRule,
    opts: &RunOptions,
) -> Result<RunTrace> {
    let (trace, err) = run_observed(inst, start, rule, opts, &mut |_, _| {})?;
    match err {
        Some(e) => Err(e),
        None => Ok(trace),
    }
}

/// Runs 2-Opt and calls `observe(steps_done, order)` after every step.
///
/// A scripted run that hits an inapplicable or non-improving move stops and
/// returns the partial trace together with the script-violation error.
pub(crate) fn run_observed(
    inst: &Instance,
    start: &Tour,
    rule: &PivotRule,
    opts: &RunOptions,
    observe: &mut dyn FnMut(usize, &[usize]),
) -> Result<(RunTrace, Option<Error>)> {
    if start.len() != inst.n() {
        return Err(Error::SizeMismatch {
            expected: inst.n(),
            found: start.len(),
        });
    }
    if !(opts.eps >= 0.0) {
        return Err(Error::invalid("strictness threshold must be >= 0"));
    }
    let d = inst.distance_matrix();
    let mut order = start.order().to_vec();
    let initial_length = length_with(&order, &d);
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut violation = None;

    let mut push_step =
        |order: &mut Vec<usize>, loc: &Located, delta: f64, steps: &mut Vec<StepRecord>| {
            apply_located(order, loc);
            steps.push(StepRecord {
                index: steps.len(),
                change: loc.change,
                delta,
                length_after: length_with(order, &d),
            });
            observe(steps.len(), order);
        };

    let terminated = match rule {
        PivotRule::Scripted(script) => {
            let mut pos = positions_of(&order);
            let mut term = Termination::ScriptEnd;
            for (k, mv) in script.moves.iter().enumerate() {
                if steps.len() as u64 >= opts.step_limit {
                    term = Termination::StepLimit;
                    break;
                }
                let loc = match locate_in(&order, &pos, mv) {
                    Ok(loc) => loc,
                    Err(e) => {
                        violation = Some(Error::ScriptViolation {
                            step: k,
                            reason: e.to_string(),
                        });
                        break;
                    }
                };
                let delta = loc.change.gain(&d);
                if !(delta > opts.eps) {
                    violation = Some(Error::ScriptViolation {
                        step: k,
                        reason: format!("move {} is not improving (delta = {delta:e})", loc.change),
                    });
                    break;
                }
                push_step(&mut order, &loc, delta, &mut steps);
                refresh_positions(&order, &mut pos);
            }
            term
        }
        PivotRule::FirstImprovement | PivotRule::BestImprovement => {
            let best = matches!(rule, PivotRule::BestImprovement);
            loop {
                if steps.len() as u64 >= opts.step_limit {
                    break if scan_first(&order, &d, opts.eps).is_some() {
                        Termination::StepLimit
                    } else {
                        Termination::LocalOpt
                    };
                }
                let next = if best {
                    scan_best(&order, &d, opts.eps)
                } else {
                    scan_first(&order, &d, opts.eps)
                };
                match next {
                    Some((loc, delta)) => push_step(&mut order, &loc, delta, &mut steps),
                    None => break Termination::LocalOpt,
                }
            }
        }
        PivotRule::RandomImprovement { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            loop {
                let moves = scan_all(&order, &d, opts.eps);
                if moves.is_empty() {
                    break Termination::LocalOpt;
                }
                if steps.len() as u64 >= opts.step_limit {
                    break Termination::StepLimit;
                }
                let (loc, delta) = moves[rng.random_range(0..moves.len())];
                push_step(&mut order, &loc, delta, &mut steps);
            }
        }
    };

    let trace = RunTrace {
        instance_name: inst.name().to_string(),
        n: inst.n(),
        initial_tour: start.clone(),
        initial_length,
        steps,
        final_tour: Tour::from_canonical(order),
        terminated,
    };
    Ok((trace, violation))
}
