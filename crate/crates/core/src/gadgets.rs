//! Instance families on which 2-Opt admits exponentially long improving paths.
//!
//! Every gadget consists of two blocks of four points `A, B, C, D`. A block
//! is *short* when visited as `A B C D` and *long* when visited as `A C B D`.
//! Blocks are laid out in tour order and consecutive blocks are joined by the
//! edge `D -> A` of the next block (the last `D` wraps to the first `A`).
//!
//! Vertex ids are `4 * block + {0, 1, 2, 3}` for `A, B, C, D`.
//!
//! * Euclidean: `g` gadgets `G_0 .. G_{g-1}`, `8g` points, `2^(g+3) - 14` steps.
//! * Manhattan / L_p: `n` propagation/reset pairs `P_0 R_0 .. P_{n-1} R_{n-1}`,
//!   `16n` points, `2^(n+4) - 22` steps.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{run_observed, PivotRule, RunOptions};
use crate::error::{Error, Result};
use crate::geometry::{Instance, Metric, Point, Tour, TwoChange};

type Xy = (f64, f64);
/// Coordinates of one block in `A, B, C, D` order.
type BlockXy = [Xy; 4];

const EUCLID_BASE: BlockXy = [(0.0, 0.0), (1.0, 0.0), (-0.1, 1.4), (-1.1, 4.8)];

const MANHATTAN_RESET: BlockXy = [(0.0, 1.0), (0.0, 0.0), (-0.7, 0.1), (-1.2, 0.08)];
const MANHATTAN_PROP_1: BlockXy = [(-2.0, 1.8), (-3.3, 2.8), (-1.3, 1.4), (1.5, 0.9)];
const MANHATTAN_PROP_2: BlockXy = [(-0.7, 1.6), (-1.5, 1.2), (1.9, -1.5), (-0.8, -1.1)];

const LP_RESET: BlockXy = [(0.0, 1.0), (0.0, 0.0), (3.5, 3.7), (7.8, -3.2)];
const LP_PROP_1: BlockXy = [(-2.5, -2.4), (-4.7, -7.3), (-8.6, -4.6), (3.7, 9.8)];
const LP_PROP_2: BlockXy = [(3.2, 2.0), (7.2, 7.2), (-6.5, -1.6), (-1.5, -7.1)];

/// Maps gadget `i + 1` (or pair `i + 1`) onto gadget `i` (pair `i`).
fn level_map(kind: FamilyKind, (x, y): Xy) -> Xy {
    match kind {
        // rotate by 3*pi/2, scale by 3, translate by (-1.2, 0.1)
        FamilyKind::Euclidean => (3.0 * y - 1.2, -3.0 * x + 0.1),
        // scale by 7.7, translate by (1.93, 0.3)
        FamilyKind::Manhattan => (7.7 * x + 1.93, 7.7 * y + 0.3),
        // rotate by pi, scale by 7.8, translate by (7.2, 5.3)
        FamilyKind::Lp => (-7.8 * x + 7.2, -7.8 * y + 5.3),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Euclidean,
    Manhattan,
    Lp,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Euclidean => "euclidean",
            FamilyKind::Manhattan => "manhattan",
            FamilyKind::Lp => "lp",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(FamilyKind::Euclidean),
            "manhattan" | "l1" => Ok(FamilyKind::Manhattan),
            "lp" => Ok(FamilyKind::Lp),
            other => Err(Error::invalid(format!("unknown gadget family '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GadgetFamily {
    pub kind: FamilyKind,
    pub metric: Metric,
    /// Number of gadgets (Euclidean) or of propagation/reset pairs.
    pub count: usize,
}

impl GadgetFamily {
    pub fn euclidean(gadgets: usize) -> Result<Self> {
        if gadgets == 0 {
            return Err(Error::invalid("the Euclidean family needs at least one gadget"));
        }
        Ok(Self {
            kind: FamilyKind::Euclidean,
            metric: Metric::EUCLIDEAN,
            count: gadgets,
        })
    }

    pub fn manhattan(pairs: usize) -> Result<Self> {
        if pairs == 0 {
            return Err(Error::invalid("the Manhattan family needs at least one pair"));
        }
        Ok(Self {
            kind: FamilyKind::Manhattan,
            metric: Metric::MANHATTAN,
            count: pairs,
        })
    }

    pub fn lp(pairs: usize, metric: Metric) -> Result<Self> {
        if pairs == 0 {
            return Err(Error::invalid("the L_p family needs at least one pair"));
        }
        if matches!(metric, Metric::Lp(1) | Metric::Lp(2)) {
            return Err(Error::invalid(format!(
                "the L_p family covers p >= 3 and p = inf; use the dedicated family for p = {metric}"
            )));
        }
        Ok(Self {
            kind: FamilyKind::Lp,
            metric,
            count: pairs,
        })
    }

    /// Family of the given kind; `metric` is ignored for Euclidean/Manhattan.
    pub fn new(kind: FamilyKind, count: usize, metric: Metric) -> Result<Self> {
        match kind {
            FamilyKind::Euclidean => Self::euclidean(count),
            FamilyKind::Manhattan => Self::manhattan(count),
            FamilyKind::Lp => Self::lp(count, metric),
        }
    }

    pub fn gadget_count(&self) -> usize {
        match self.kind {
            FamilyKind::Euclidean => self.count,
            _ => 2 * self.count,
        }
    }

    pub fn point_count(&self) -> usize {
        8 * self.gadget_count()
    }

    /// Length of the scripted improving path.
    pub fn expected_steps(&self) -> u64 {
        let c = self.count as u32;
        match self.kind {
            FamilyKind::Euclidean => (1u64 << (c + 3)) - 14,
            _ => (1u64 << (c + 4)) - 22,
        }
    }

    pub fn role(&self, gadget: usize) -> GadgetRole {
        match self.kind {
            FamilyKind::Euclidean => GadgetRole::Plain,
            _ if gadget % 2 == 0 => GadgetRole::Propagation,
            _ => GadgetRole::Reset,
        }
    }

    /// Block coordinates in tour order, gadget by gadget.
    fn block_coords(&self) -> Vec<BlockXy> {
        let (base, levels): (Vec<BlockXy>, usize) = match self.kind {
            FamilyKind::Euclidean => (vec![EUCLID_BASE, EUCLID_BASE], self.count),
            FamilyKind::Manhattan => (
                vec![MANHATTAN_PROP_1, MANHATTAN_PROP_2, MANHATTAN_RESET, MANHATTAN_RESET],
                self.count,
            ),
            FamilyKind::Lp => (vec![LP_PROP_1, LP_PROP_2, LP_RESET, LP_RESET], self.count),
        };
        let mut per_level = vec![base; levels];
        for lvl in (0..levels.saturating_sub(1)).rev() {
            per_level[lvl] = per_level[lvl + 1]
                .iter()
                .map(|b| b.map(|p| level_map(self.kind, p)))
                .collect();
        }
        per_level.into_iter().flatten().collect()
    }

    pub fn build(&self) -> Result<GadgetBuild> {
        self.build_inner(None)
    }

    /// Like [`GadgetFamily::build`] but moves every coordinate by an
    /// independent uniform offset in `[-1e-7, 1e-7]`, separating the
    /// coincident points of twin blocks.
    pub fn build_jittered(&self, seed: u64) -> Result<GadgetBuild> {
        self.build_inner(Some(seed))
    }

    fn build_inner(&self, jitter: Option<u64>) -> Result<GadgetBuild> {
        let coords = self.block_coords();
        let mut rng = jitter.map(ChaCha8Rng::seed_from_u64);
        let mut points = Vec::with_capacity(self.point_count());
        for block in &coords {
            for &(x, y) in block {
                let (dx, dy) = match rng.as_mut() {
                    Some(r) => (r.random_range(-1e-7..=1e-7), r.random_range(-1e-7..=1e-7)),
                    None => (0.0, 0.0),
                };
                points.push(Point::xy(x + dx, y + dy));
            }
        }
        let name = format!("{}-{}", self.kind, self.count);
        let instance = Instance::new(name, self.metric, points)?;

        let mut states = vec![BlockState::Short; coords.len()];
        states[0] = BlockState::Long;
        states[1] = BlockState::Long;
        let blocks: Vec<Block> = (0..coords.len())
            .map(|b| Block::at(b, states[b]))
            .collect();
        let tour = tour_for_states(&blocks.iter().map(|b| (*b, b.state)).collect::<Vec<_>>())?;
        let script = ScriptBuilder::new(*self, states).finish();
        Ok(GadgetBuild {
            family: *self,
            instance,
            tour,
            script,
            blocks,
        })
    }

    /// Human-readable name of vertex `v`, e.g. `G2.1.C` or `R0.2.A`.
    pub fn vertex_label(&self, v: usize) -> String {
        let block = v / 4;
        let gadget = block / 2;
        let j = block % 2 + 1;
        let letter = ["A", "B", "C", "D"][v % 4];
        match self.role(gadget) {
            GadgetRole::Plain => format!("G{gadget}.{j}.{letter}"),
            GadgetRole::Propagation => format!("P{}.{j}.{letter}", gadget / 2),
            GadgetRole::Reset => format!("R{}.{j}.{letter}", gadget / 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GadgetRole {
    Plain,
    Propagation,
    Reset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockState {
    Short,
    Long,
}

impl fmt::Display for BlockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockState::Short => "S",
            BlockState::Long => "L",
        })
    }
}

/// Four vertex ids and the state the block starts in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub state: BlockState,
}

impl Block {
    fn at(index: usize, state: BlockState) -> Self {
        let o = 4 * index;
        Self {
            a: o,
            b: o + 1,
            c: o + 2,
            d: o + 3,
            state,
        }
    }

    pub fn visit_order(&self, state: BlockState) -> [usize; 4] {
        match state {
            BlockState::Short => [self.a, self.b, self.c, self.d],
            BlockState::Long => [self.a, self.c, self.b, self.d],
        }
    }

    /// The single 2-change turning the long state into the short one.
    pub fn flip(&self) -> TwoChange {
        TwoChange::new(self.a, self.c, self.b, self.d)
    }

    /// `d(A,C) + d(B,D) - d(A,B) - d(C,D)`, positive when `ABCD` is shorter.
    pub fn short_margin(&self, inst: &Instance) -> f64 {
        self.flip().gain(inst)
    }
}

fn tour_for_states(blocks: &[(Block, BlockState)]) -> Result<Tour> {
    Tour::new(
        blocks
            .iter()
            .flat_map(|(b, s)| b.visit_order(*s))
            .collect(),
    )
}

/// The seven 2-changes by which block `x` goes from long to short while the
/// two blocks `y1`, `y2` of the next gadget go from short to long.
///
/// Each change is oriented so that its added edges are `{u1,v1}`, `{u2,v2}`.
pub fn seven_step_reset(x: &Block, y1: &Block, y2: &Block) -> [TwoChange; 7] {
    let t = TwoChange::new;
    [
        t(x.a, x.c, y2.c, y2.d),
        t(y2.b, y2.a, x.d, x.b),
        t(y2.b, x.d, y1.c, y1.d),
        t(y1.b, y1.a, x.c, y2.d),
        t(x.a, y2.c, x.b, y2.a),
        t(y1.c, y2.b, y1.a, y2.d),
        t(x.c, y1.b, x.d, y1.d),
    ]
}

/// Block states after `after_step` moves of the script.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub after_step: usize,
    pub states: Vec<BlockState>,
}

/// Prescribed improving moves, stored by their removed edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetScript {
    pub moves: Vec<TwoChange>,
    pub expected_count: u64,
    /// Block states at the boundaries between flips and seven-step resets;
    /// empty for scripts read from disk.
    #[serde(default)]
    pub checkpoints: Vec<Checkpoint>,
}

impl GadgetScript {
    pub fn new(moves: Vec<TwoChange>, expected_count: u64) -> Self {
        Self {
            moves,
            expected_count,
            checkpoints: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

struct ScriptBuilder {
    family: GadgetFamily,
    blocks: Vec<Block>,
    states: Vec<BlockState>,
    moves: Vec<TwoChange>,
    checkpoints: Vec<Checkpoint>,
}

impl ScriptBuilder {
    fn new(family: GadgetFamily, states: Vec<BlockState>) -> Self {
        let blocks = (0..states.len()).map(|b| Block::at(b, states[b])).collect();
        let checkpoints = vec![Checkpoint {
            after_step: 0,
            states: states.clone(),
        }];
        Self {
            family,
            blocks,
            states,
            moves: Vec::new(),
            checkpoints,
        }
    }

    fn checkpoint(&mut self) {
        self.checkpoints.push(Checkpoint {
            after_step: self.moves.len(),
            states: self.states.clone(),
        });
    }

    fn flip(&mut self, block: usize) {
        debug_assert_eq!(self.states[block], BlockState::Long);
        self.moves.push(self.blocks[block].flip());
        self.states[block] = BlockState::Short;
        self.checkpoint();
    }

    /// Block `block` resets both blocks of gadget `next`.
    fn reset(&mut self, block: usize, next: usize) {
        let (y1, y2) = (2 * next, 2 * next + 1);
        debug_assert_eq!(self.states[block], BlockState::Long);
        debug_assert_eq!(self.states[y1], BlockState::Short);
        debug_assert_eq!(self.states[y2], BlockState::Short);
        self.moves.extend(seven_step_reset(
            &self.blocks[block],
            &self.blocks[y1],
            &self.blocks[y2],
        ));
        self.states[block] = BlockState::Short;
        self.states[y1] = BlockState::Long;
        self.states[y2] = BlockState::Long;
        self.checkpoint();
    }

    /// Gadget `g` in (L,L), everything after it in (S,S): every block after
    /// `g` ends short. `g` resets its successor twice.
    fn doubling(&mut self, g: usize) {
        let last = self.family.gadget_count() - 1;
        if g == last {
            self.flip(2 * g);
            self.flip(2 * g + 1);
            return;
        }
        self.reset(2 * g, g + 1);
        self.descend(g + 1);
        self.reset(2 * g + 1, g + 1);
        self.descend(g + 1);
    }

    /// Propagation gadget `g`: flips its first block, then resets its
    /// successor once.
    fn propagation(&mut self, g: usize) {
        self.flip(2 * g);
        self.reset(2 * g + 1, g + 1);
        self.descend(g + 1);
    }

    fn descend(&mut self, g: usize) {
        match self.family.role(g) {
            GadgetRole::Propagation => self.propagation(g),
            GadgetRole::Plain | GadgetRole::Reset => self.doubling(g),
        }
    }

    fn finish(mut self) -> GadgetScript {
        self.descend(0);
        GadgetScript {
            moves: self.moves,
            expected_count: self.family.expected_steps(),
            checkpoints: self.checkpoints,
        }
    }
}

/// Everything produced for one family member.
#[derive(Clone, Debug)]
pub struct GadgetBuild {
    pub family: GadgetFamily,
    pub instance: Instance,
    pub tour: Tour,
    pub script: GadgetScript,
    /// Blocks in tour order with their initial states.
    pub blocks: Vec<Block>,
}

impl GadgetBuild {
    pub fn into_parts(self) -> (Instance, Tour, GadgetScript) {
        (self.instance, self.tour, self.script)
    }
}

pub fn build_euclidean_family(gadgets: usize) -> Result<(Instance, Tour, GadgetScript)> {
    Ok(GadgetFamily::euclidean(gadgets)?.build()?.into_parts())
}

pub fn build_manhattan_family(pairs: usize) -> Result<(Instance, Tour, GadgetScript)> {
    Ok(GadgetFamily::manhattan(pairs)?.build()?.into_parts())
}

pub fn build_lp_family(pairs: usize, metric: Metric) -> Result<(Instance, Tour, GadgetScript)> {
    Ok(GadgetFamily::lp(pairs, metric)?.build()?.into_parts())
}

/// State of every block in `order`, or `None` for a block whose four points
/// are not visited consecutively as `ABCD` or `ACBD` (in either direction).
pub fn block_states(order: &[usize], blocks: &[Block]) -> Vec<Option<BlockState>> {
    let n = order.len();
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let consecutive = |seq: [usize; 4]| {
        let fwd = (0..3).all(|k| (pos[seq[k]] + 1) % n == pos[seq[k + 1]]);
        let bwd = (0..3).all(|k| (pos[seq[k + 1]] + 1) % n == pos[seq[k]]);
        fwd || bwd
    };
    blocks
        .iter()
        .map(|b| {
            if consecutive(b.visit_order(BlockState::Short)) {
                Some(BlockState::Short)
            } else if consecutive(b.visit_order(BlockState::Long)) {
                Some(BlockState::Long)
            } else {
                None
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub steps_checked: usize,
    pub expected_count: u64,
    pub min_margin: f64,
    pub max_margin: f64,
    pub checkpoints_checked: usize,
    pub ok: bool,
    pub first_failure: Option<usize>,
    pub failure: Option<String>,
}

/// Replays `script` from `start` with the scripted pivot rule.
///
/// `ok` holds iff every move is applicable and strictly improving, the
/// number of moves equals the expected count, and every recorded block-state
/// checkpoint matches the tour.
pub fn verify_script(inst: &Instance, start: &Tour, script: &GadgetScript) -> VerificationReport {
    let blocks: Vec<Block> = (0..inst.n() / 4).map(|b| Block::at(b, BlockState::Short)).collect();
    let checkpoints = &script.checkpoints;
    let mut next_cp = 0;
    let mut checked = 0;
    let mut state_failure: Option<(usize, String)> = None;
    let mut check = |steps: usize, order: &[usize]| {
        while next_cp < checkpoints.len() && checkpoints[next_cp].after_step < steps {
            next_cp += 1;
        }
        while next_cp < checkpoints.len() && checkpoints[next_cp].after_step == steps {
            let cp = &checkpoints[next_cp];
            next_cp += 1;
            checked += 1;
            if state_failure.is_some() {
                continue;
            }
            let actual = block_states(order, &blocks);
            if let Some((b, got)) = cp
                .states
                .iter()
                .zip(&actual)
                .enumerate()
                .find(|(_, (want, got))| Some(**want) != **got)
                .map(|(b, (_, got))| (b, *got))
            {
                state_failure = Some((
                    steps.saturating_sub(1),
                    format!(
                        "block {b} expected {} after {steps} moves, found {}",
                        cp.states[b],
                        got.map_or("an intermediate configuration".to_string(), |s| s.to_string())
                    ),
                ));
            }
        }
    };

    let rule = PivotRule::Scripted(Arc::new(GadgetScript::new(
        script.moves.clone(),
        script.expected_count,
    )));
    if start.len() == inst.n() {
        check(0, start.order());
    }
    let outcome = run_observed(inst, start, &rule, &RunOptions::default(), &mut check);

    let (trace, violation) = match outcome {
        Ok(pair) => pair,
        Err(e) => {
            return VerificationReport {
                steps_checked: 0,
                expected_count: script.expected_count,
                min_margin: f64::NAN,
                max_margin: f64::NAN,
                checkpoints_checked: 0,
                ok: false,
                first_failure: Some(0),
                failure: Some(e.to_string()),
            }
        }
    };
    let (min_margin, max_margin) = trace
        .steps
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.delta), hi.max(s.delta))
        });
    let steps_checked = trace.steps.len();

    let mut failure = None;
    if let Some(Error::ScriptViolation { step, reason }) = violation {
        failure = Some((step, reason));
    } else if let Some(e) = violation {
        failure = Some((steps_checked, e.to_string()));
    }
    if let Some(sf) = state_failure {
        if failure.as_ref().is_none_or(|(s, _)| sf.0 < *s) {
            failure = Some(sf);
        }
    }
    if failure.is_none() && steps_checked as u64 != script.expected_count {
        failure = Some((
            steps_checked,
            format!(
                "script has {steps_checked} moves but {} were expected",
                script.expected_count
            ),
        ));
    }
    VerificationReport {
        steps_checked,
        expected_count: script.expected_count,
        min_margin,
        max_margin,
        checkpoints_checked: checked,
        ok: failure.is_none(),
        first_failure: failure.as_ref().map(|(s, _)| *s),
        failure: failure.map(|(_, r)| r),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedMargin {
    pub name: String,
    pub value: f64,
}

/// Improvement of every distinct move type of a family, evaluated on the two
/// deepest scaling levels.
///
/// * Euclidean: `block_short`, then seven reset steps for gadget pair
///   `(g-2, g-1)` (`base.1..7`) and for `(g-3, g-2)` (`scaled.1..7`).
/// * Manhattan / L_p: `reset_block_short`, `propagation_flip`, the seven
///   steps of the last propagation gadget resetting the last reset gadget
///   (`p_to_r.1..7`), and those of the second-to-last reset gadget resetting
///   the last propagation gadget (`r_to_p.1..7`).
pub fn inequality_margins(kind: FamilyKind, metric: Metric) -> Result<Vec<NamedMargin>> {
    let family = match kind {
        FamilyKind::Euclidean => GadgetFamily {
            kind,
            metric,
            count: 3,
        },
        FamilyKind::Manhattan | FamilyKind::Lp => GadgetFamily {
            kind,
            metric,
            count: 2,
        },
    };
    let coords = family.block_coords();
    let points = coords
        .iter()
        .flat_map(|b| b.iter().map(|&(x, y)| Point::xy(x, y)))
        .collect();
    let inst = Instance::new("margins", metric, points)?;
    let block = |b: usize| Block::at(b, BlockState::Short);
    let mut out = Vec::new();
    let mut push = |name: String, value: f64| out.push(NamedMargin { name, value });
    let seven = |prefix: &str, x: usize, next_gadget: usize, push: &mut dyn FnMut(String, f64)| {
        let steps = seven_step_reset(&block(x), &block(2 * next_gadget), &block(2 * next_gadget + 1));
        for (k, c) in steps.iter().enumerate() {
            push(format!("{prefix}.{}", k + 1), c.gain(&inst));
        }
    };
    match kind {
        FamilyKind::Euclidean => {
            // gadgets 0, 1, 2; gadget 2 carries the base coordinates
            push("block_short".into(), block(4).short_margin(&inst));
            seven("base", 3, 2, &mut push);
            seven("scaled", 1, 1, &mut push);
        }
        FamilyKind::Manhattan | FamilyKind::Lp => {
            // P0 R0 P1 R1; the pair (P1, R1) carries the base coordinates
            push("reset_block_short".into(), block(6).short_margin(&inst));
            push("propagation_flip".into(), block(4).short_margin(&inst));
            seven("p_to_r", 5, 3, &mut push);
            seven("r_to_p", 3, 2, &mut push);
        }
    }
    Ok(out)
}
