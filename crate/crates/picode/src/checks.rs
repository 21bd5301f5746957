//! Standalone invariant checker for construction states.
//!
//! Works from plain `Snapshot` data rather than engine internals: active
//! status is recomputed from placement order, dvls from the placed labels,
//! leaves from the label map. Checks needing "for every sequence Z" facts are
//! transcribed at the current leaf depth and decided with exact measure
//! arithmetic over the finitely many blocking cylinders, so no 2^depth sweep
//! is needed; unit tests cross-validate against brute-force enumeration.
//!
//! Failures are data, not exceptions: `check_all` reports the first failing
//! check in a fixed evaluation order, with a concrete witness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::class::EnumeratedClass;
use crate::dyadic::{measure_of, weight_of, Dyadic};
use crate::labelling::{LabelledTreeState, Snapshot};
use crate::schedule::Schedule;

/// Named checks, in evaluation order. The order matters for first-failure
/// reporting: structural shape first, then arithmetic bounds, then the
/// bookkeeping facts, then the covering facts that are consequences of the
/// earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckName {
    Restriction,
    Layering,
    Uniqueness,
    Consistency,
    UniformLeafDepth,
    Completeness,
    Finiteness,
    WeightBound,
    WeightCeiling,
    OneActive,
    NoLabelsAboveD,
    InactiveSaturatedOrD,
    DSubsetQ,
    ActiveFrontier,
    Escape,
    Cover,
}

pub const CHECK_ORDER: &[CheckName] = &[
    CheckName::Restriction,
    CheckName::Layering,
    CheckName::Uniqueness,
    CheckName::Consistency,
    CheckName::UniformLeafDepth,
    CheckName::Completeness,
    CheckName::Finiteness,
    CheckName::WeightBound,
    CheckName::WeightCeiling,
    CheckName::OneActive,
    CheckName::NoLabelsAboveD,
    CheckName::InactiveSaturatedOrD,
    CheckName::DSubsetQ,
    CheckName::ActiveFrontier,
    CheckName::Escape,
    CheckName::Cover,
];

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckName::Restriction => "restriction",
            CheckName::Layering => "layering",
            CheckName::Uniqueness => "uniqueness",
            CheckName::Consistency => "consistency",
            CheckName::UniformLeafDepth => "uniform-leaf-depth",
            CheckName::Completeness => "completeness",
            CheckName::Finiteness => "finiteness",
            CheckName::WeightBound => "weight-bound",
            CheckName::WeightCeiling => "weight-ceiling",
            CheckName::OneActive => "one-active-per-label",
            CheckName::NoLabelsAboveD => "no-labels-above-d",
            CheckName::InactiveSaturatedOrD => "inactive-saturated-or-d",
            CheckName::DSubsetQ => "d-subset-q",
            CheckName::ActiveFrontier => "active-frontier",
            CheckName::Escape => "escape",
            CheckName::Cover => "cover",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckFailure {
    pub check: String,
    pub witnesses: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub stage: u64,
    pub passed: Vec<String>,
    pub failed: Option<CheckFailure>,
}

impl CheckReport {
    pub fn is_pass(&self) -> bool {
        self.failed.is_none()
    }
}

fn fail(check: CheckName, witnesses: Vec<String>, detail: impl Into<String>) -> CheckFailure {
    CheckFailure { check: check.to_string(), witnesses, detail: detail.into() }
}

/// Derived views over a snapshot, built once per report.
struct Ctx<'a> {
    snap: &'a Snapshot,
    schedule: &'a Schedule,
    class: &'a EnumeratedClass,
    /// All distinct labels per node, in placement order.
    node_labels: BTreeMap<&'a BitString, Vec<&'a BitString>>,
    /// Well-formed core: node → label, for placements sitting at the correct
    /// level for their label length. Malformed placements are judged by the
    /// shape checks and ignored by the rest.
    wf: BTreeMap<&'a BitString, &'a BitString>,
    /// Longest placed label length over the well-formed core.
    dvls: Option<u64>,
    /// Current leaf depth ℓ_dvls.
    leaf_len: Option<u64>,
    d_set: BTreeSet<&'a BitString>,
}

impl<'a> Ctx<'a> {
    fn new(snap: &'a Snapshot, schedule: &'a Schedule, class: &'a EnumeratedClass) -> Self {
        let mut node_labels: BTreeMap<&BitString, Vec<&BitString>> = BTreeMap::new();
        for (node, sigma) in &snap.placements {
            let labels = node_labels.entry(node).or_default();
            if !labels.contains(&sigma) {
                labels.push(sigma);
            }
        }
        let mut wf: BTreeMap<&BitString, &BitString> = BTreeMap::new();
        for (node, sigma) in &snap.placements {
            if schedule.level_index(node.len()) == Some(sigma.len() as usize)
                && !wf.contains_key(node)
            {
                wf.insert(node, sigma);
            }
        }
        let dvls = wf.values().map(|s| s.len()).max();
        let leaf_len = dvls.and_then(|d| schedule.level(d as usize).ok());
        let d_set = snap.d_entries.iter().map(|(_, d)| d).collect();
        Ctx { snap, schedule, class, node_labels, wf, dvls, leaf_len, d_set }
    }

    fn has_wf_proper_extension(&self, node: &BitString) -> bool {
        use std::ops::Bound;
        self.wf
            .range::<BitString, _>((Bound::Excluded(node), Bound::Unbounded))
            .next()
            .is_some_and(|(k, _)| node.is_prefix_of(k))
    }

    /// Leaves of the well-formed core.
    fn leaves(&self) -> Vec<&'a BitString> {
        self.wf
            .keys()
            .filter(|n| !self.has_wf_proper_extension(n))
            .copied()
            .collect()
    }

    fn wf_extensions_at(&self, node: &BitString, len: u64) -> usize {
        self.wf
            .range::<BitString, _>(node..)
            .take_while(|(k, _)| node.is_prefix_of(k))
            .filter(|(k, _)| k.len() == len)
            .count()
    }

    /// Saturation over the well-formed core; the root counts as level ℓ₋₁.
    fn saturated(&self, node: &BitString) -> bool {
        let next_index = if node.is_empty() {
            0
        } else {
            match self.schedule.level_index(node.len()) {
                Some(i) => i + 1,
                None => return false,
            }
        };
        let Ok(next_level) = self.schedule.level(next_index) else { return false };
        let gap = next_level - node.len();
        if gap >= 32 {
            return false;
        }
        self.wf_extensions_at(node, next_level) == 1usize << gap
    }

    fn has_d_prefix(&self, s: &BitString) -> bool {
        self.d_set.iter().any(|d| d.is_prefix_of(s))
    }
}

/// Exact weight Σ 2^{-|η|} of the snapshot's active set.
pub fn weight_of_active(snap: &Snapshot) -> Dyadic {
    weight_of(snap.active.iter())
}

/// The per-level counting bound: wgt(Uₛ) ≤ Σ_{n ≤ dvls} 2^{n−ℓₙ}.
pub fn check_weight_ceiling(snap: &Snapshot, schedule: &Schedule) -> bool {
    run_check(CheckName::WeightCeiling, snap, schedule, &EnumeratedClass::empty()).is_ok()
}

/// Runs one named check against a snapshot.
pub fn run_check(
    name: CheckName,
    snap: &Snapshot,
    schedule: &Schedule,
    class: &EnumeratedClass,
) -> Result<(), CheckFailure> {
    let ctx = Ctx::new(snap, schedule, class);
    eval(name, &ctx)
}

/// Evaluates every check in order and reports the first failure, if any.
pub fn check_all(snap: &Snapshot, schedule: &Schedule, class: &EnumeratedClass) -> CheckReport {
    let ctx = Ctx::new(snap, schedule, class);
    let mut passed = Vec::new();
    for &name in CHECK_ORDER {
        match eval(name, &ctx) {
            Ok(()) => passed.push(name.to_string()),
            Err(failure) => {
                return CheckReport { stage: snap.stage, passed, failed: Some(failure) }
            }
        }
    }
    CheckReport { stage: snap.stage, passed, failed: None }
}

/// Convenience wrapper checking a live engine state.
pub fn check_state(st: &LabelledTreeState, class: &EnumeratedClass) -> CheckReport {
    check_all(&st.snapshot(), st.schedule(), class)
}

fn eval(name: CheckName, ctx: &Ctx) -> Result<(), CheckFailure> {
    match name {
        CheckName::Restriction => restriction(ctx),
        CheckName::Layering => layering(ctx),
        CheckName::Uniqueness => uniqueness(ctx),
        CheckName::Consistency => consistency(ctx),
        CheckName::UniformLeafDepth => uniform_leaf_depth(ctx),
        CheckName::Completeness => completeness(ctx),
        CheckName::Finiteness => finiteness(ctx),
        CheckName::WeightBound => weight_bound(ctx),
        CheckName::WeightCeiling => weight_ceiling(ctx),
        CheckName::OneActive => one_active(ctx),
        CheckName::NoLabelsAboveD => no_labels_above_d(ctx),
        CheckName::InactiveSaturatedOrD => inactive_saturated_or_d(ctx),
        CheckName::DSubsetQ => d_subset_q(ctx),
        CheckName::ActiveFrontier => active_frontier(ctx),
        CheckName::Escape => escape(ctx),
        CheckName::Cover => cover(ctx),
    }
}

/// Labels sit only on schedule levels.
fn restriction(ctx: &Ctx) -> Result<(), CheckFailure> {
    for (node, _) in &ctx.snap.placements {
        if ctx.schedule.level_index(node.len()).is_none() {
            return Err(fail(
                CheckName::Restriction,
                vec![node.to_string()],
                format!("labelled string of length {} which is not a schedule level", node.len()),
            ));
        }
    }
    Ok(())
}

/// A label x_σ on a level-ℓᵢ string has |σ| = i. Only placements on genuine
/// schedule levels are judged; off-level placements belong to `restriction`.
fn layering(ctx: &Ctx) -> Result<(), CheckFailure> {
    for (node, sigma) in &ctx.snap.placements {
        if let Some(i) = ctx.schedule.level_index(node.len()) {
            if sigma.len() as usize != i {
                return Err(fail(
                    CheckName::Layering,
                    vec![node.to_string(), sigma.to_string()],
                    format!("label of length {} placed on level index {i}", sigma.len()),
                ));
            }
        }
    }
    Ok(())
}

/// At most one label per string.
fn uniqueness(ctx: &Ctx) -> Result<(), CheckFailure> {
    for (node, labels) in &ctx.node_labels {
        if labels.len() > 1 {
            return Err(fail(
                CheckName::Uniqueness,
                vec![node.to_string()],
                format!(
                    "string carries {} distinct labels: {}",
                    labels.len(),
                    labels.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
                ),
            ));
        }
    }
    Ok(())
}

/// If ρ at level ℓ_k has x_σ, then ρ↾ℓᵢ carries x_{σ↾i} for every i < k.
fn consistency(ctx: &Ctx) -> Result<(), CheckFailure> {
    for (node, sigma) in &ctx.wf {
        let k = sigma.len() as usize;
        for i in 0..k {
            let level = ctx.schedule.level(i).expect("levels below a placed label exist");
            let prefix = node.prefix(level);
            let wanted = sigma.prefix(i as u64);
            let ok = ctx
                .node_labels
                .get(&prefix)
                .is_some_and(|labels| labels.iter().any(|l| **l == wanted));
            if !ok {
                return Err(fail(
                    CheckName::Consistency,
                    vec![node.to_string(), prefix.to_string()],
                    format!("prefix at level {level} does not carry label {wanted:?}"),
                ));
            }
        }
    }
    Ok(())
}

/// Every leaf outside D sits at the current frontier depth ℓ_dvls. Leaves
/// already enumerated into D legitimately stay behind at their old depth.
fn uniform_leaf_depth(ctx: &Ctx) -> Result<(), CheckFailure> {
    let Some(leaf_len) = ctx.leaf_len else { return Ok(()) };
    for leaf in ctx.leaves() {
        if !ctx.d_set.contains(leaf) && leaf.len() != leaf_len {
            return Err(fail(
                CheckName::UniformLeafDepth,
                vec![leaf.to_string()],
                format!("leaf outside D at depth {}, frontier is {leaf_len}", leaf.len()),
            ));
        }
    }
    Ok(())
}

/// If x_σ exists then every x_ρ with |ρ| ≤ |σ| exists somewhere. Placed
/// labels of each length are distinct and lexicographic order is numeric
/// order, so the first gap in the sorted sequence names the missing label.
fn completeness(ctx: &Ctx) -> Result<(), CheckFailure> {
    let placed: BTreeSet<&BitString> = ctx.snap.placements.iter().map(|(_, s)| s).collect();
    let Some(dvls) = ctx.dvls else { return Ok(()) };
    for n in 0..=dvls {
        let mut expected = BitString::zeros(n);
        for sigma in placed.iter().filter(|s| s.len() == n) {
            if **sigma != expected {
                break;
            }
            expected = next_of_length(&expected).unwrap_or_else(|| BitString::zeros(n + 1));
        }
        if expected.len() == n {
            return Err(fail(
                CheckName::Completeness,
                vec![expected.to_string()],
                format!("label of length {n} missing while dvls = {dvls}"),
            ));
        }
    }
    Ok(())
}

/// Lexicographic successor among strings of the same length; None at 11…1.
fn next_of_length(s: &BitString) -> Option<BitString> {
    let mut bits = s.bits().to_vec();
    for i in (0..bits.len()).rev() {
        if bits[i] == 0 {
            bits[i] = 1;
            for b in &mut bits[i + 1..] {
                *b = 0;
            }
            return Some(BitString::from_bits(&bits));
        }
    }
    None
}

/// At stage s only strings of length ≤ ℓ_s can be labelled.
fn finiteness(ctx: &Ctx) -> Result<(), CheckFailure> {
    let stage_index = ctx.snap.stage.min(usize::MAX as u64) as usize;
    let Ok(bound) = ctx.schedule.level(stage_index) else { return Ok(()) };
    for (node, _) in &ctx.snap.placements {
        if node.len() > bound {
            return Err(fail(
                CheckName::Finiteness,
                vec![node.to_string()],
                format!("labelled at length {} > ℓ_stage = {bound}", node.len()),
            ));
        }
    }
    Ok(())
}

/// The strict room-to-breathe bound: wgt(Uₛ) + μ(⟦Dₛ⟧) < 1.
fn weight_bound(ctx: &Ctx) -> Result<(), CheckFailure> {
    let weight = weight_of(ctx.snap.active.iter());
    let d_measure = measure_of(ctx.d_set.iter().copied());
    let total = &weight + &d_measure;
    if total < Dyadic::one() {
        Ok(())
    } else {
        Err(fail(
            CheckName::WeightBound,
            vec![],
            format!("wgt(U) = {weight}, μ(D) = {d_measure}, sum {total} is not < 1"),
        ))
    }
}

/// Per-level counting bound: wgt(Uₛ) ≤ Σ_{n ≤ dvls} 2^{n−ℓₙ}.
fn weight_ceiling(ctx: &Ctx) -> Result<(), CheckFailure> {
    let Some(dvls) = ctx.dvls else { return Ok(()) };
    let weight = weight_of(ctx.snap.active.iter());
    let mut ceiling = Dyadic::zero();
    for n in 0..=dvls as usize {
        if let Ok(term) = ctx.schedule.term(n) {
            ceiling += &term;
        }
    }
    if weight <= ceiling {
        Ok(())
    } else {
        Err(fail(
            CheckName::WeightCeiling,
            vec![],
            format!("wgt(U) = {weight} exceeds per-level ceiling {ceiling}"),
        ))
    }
}

/// Exactly one active copy per placed label, and it is the most recently
/// placed copy. Nodes with ambiguous labels are uniqueness's business and are
/// skipped here.
fn one_active(ctx: &Ctx) -> Result<(), CheckFailure> {
    for node in &ctx.snap.active {
        if !ctx.node_labels.contains_key(node) {
            return Err(fail(
                CheckName::OneActive,
                vec![node.to_string()],
                "active string carries no label",
            ));
        }
    }
    let unambiguous =
        |n: &BitString| ctx.node_labels.get(n).map(|l| l.len()) == Some(1);
    let mut nodes_of: BTreeMap<&BitString, Vec<&BitString>> = BTreeMap::new();
    for (node, sigma) in &ctx.snap.placements {
        if unambiguous(node) {
            nodes_of.entry(sigma).or_default().push(node);
        }
    }
    for (sigma, nodes) in &nodes_of {
        let last = *nodes.last().expect("group is nonempty");
        let active: Vec<&&BitString> =
            nodes.iter().filter(|n| ctx.snap.active.contains(**n)).collect();
        if active.len() != 1 || *active[0] != last {
            return Err(fail(
                CheckName::OneActive,
                nodes.iter().map(|n| n.to_string()).collect(),
                format!(
                    "label {sigma:?}: active copies {{{}}}, expected exactly the last-placed {last:?}",
                    active.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
                ),
            ));
        }
    }
    Ok(())
}

/// No proper extension of any δ ∈ D is labelled.
fn no_labels_above_d(ctx: &Ctx) -> Result<(), CheckFailure> {
    for delta in &ctx.d_set {
        for (node, _) in &ctx.snap.placements {
            if delta.is_proper_prefix_of(node) {
                return Err(fail(
                    CheckName::NoLabelsAboveD,
                    vec![delta.to_string(), node.to_string()],
                    "labelled string strictly extends a D entry",
                ));
            }
        }
    }
    Ok(())
}

/// Inactive labelled strings are either saturated or in D.
fn inactive_saturated_or_d(ctx: &Ctx) -> Result<(), CheckFailure> {
    for (node, _) in &ctx.wf {
        if ctx.snap.active.contains(*node) || ctx.d_set.contains(*node) {
            continue;
        }
        if !ctx.saturated(node) {
            return Err(fail(
                CheckName::InactiveSaturatedOrD,
                vec![node.to_string()],
                "inactive labelled string is neither saturated nor in D",
            ));
        }
    }
    Ok(())
}

/// ⟦Dₛ⟧ ⊆ ⟦Qₛ⟧, with the filtered-enumeration timing: an entry at stage t
/// already had a prefix in Q_{t-1}.
fn d_subset_q(ctx: &Ctx) -> Result<(), CheckFailure> {
    for (stage, delta) in &ctx.snap.d_entries {
        let q_stage = stage.saturating_sub(1);
        if !ctx.class.covers_at(q_stage, delta) {
            return Err(fail(
                CheckName::DSubsetQ,
                vec![delta.to_string()],
                format!("D entry from stage {stage} has no prefix in Q_{q_stage}"),
            ));
        }
    }
    Ok(())
}

/// For every frontier-depth string z with no prefix in D, the largest
/// labelled initial segment of z is active. Decided per inactive label ν: a
/// violating z exists iff the cylinders of ν's labelled proper extensions and
/// of the D entries inside ⟦ν⟧ fail to cover ⟦ν⟧.
fn active_frontier(ctx: &Ctx) -> Result<(), CheckFailure> {
    let Some(leaf_len) = ctx.leaf_len else { return Ok(()) };
    for (node, _) in &ctx.wf {
        if ctx.snap.active.contains(*node) || ctx.has_d_prefix(node) {
            continue;
        }
        let mut blockers: Vec<BitString> = ctx
            .wf
            .keys()
            .filter(|k| node.is_proper_prefix_of(k))
            .map(|k| (*k).clone())
            .collect();
        blockers.extend(
            ctx.d_set
                .iter()
                .filter(|d| node.is_proper_prefix_of(d) && d.len() <= leaf_len)
                .map(|d| (*d).clone()),
        );
        if measure_of(blockers.iter()) < Dyadic::cylinder(node) {
            return Err(fail(
                CheckName::ActiveFrontier,
                vec![node.to_string()],
                "some frontier string outside D has this inactive string as its largest labelled prefix",
            ));
        }
    }
    Ok(())
}

/// Every active string has a leaf extension outside D.
fn escape(ctx: &Ctx) -> Result<(), CheckFailure> {
    let leaves = ctx.leaves();
    for tau in &ctx.snap.active {
        let ok = leaves
            .iter()
            .any(|leaf| tau.is_prefix_of(leaf) && !ctx.d_set.contains(*leaf));
        if !ok {
            return Err(fail(
                CheckName::Escape,
                vec![tau.to_string()],
                "active string has no leaf extension outside D",
            ));
        }
    }
    Ok(())
}

/// For every labelled ν, ⟦ν⟧ ⊆ ⟦Dₛ⟧ ∪ ⟦Uₛ(ν)⟧ at frontier depth.
fn cover(ctx: &Ctx) -> Result<(), CheckFailure> {
    let Some(leaf_len) = ctx.leaf_len else { return Ok(()) };
    for (node, _) in &ctx.wf {
        if ctx.snap.active.contains(*node) || ctx.has_d_prefix(node) {
            continue;
        }
        let mut covering: Vec<BitString> = ctx
            .snap
            .active
            .iter()
            .filter(|g| node.is_prefix_of(g) && g.len() <= leaf_len)
            .cloned()
            .collect();
        covering.extend(
            ctx.d_set
                .iter()
                .filter(|d| node.is_proper_prefix_of(d) && d.len() <= leaf_len)
                .map(|d| (*d).clone()),
        );
        if measure_of(covering.iter()) < Dyadic::cylinder(node) {
            return Err(fail(
                CheckName::Cover,
                vec![node.to_string()],
                "cylinder not covered by D and the active extensions of this string",
            ));
        }
    }
    Ok(())
}

/// Synthetic single-fault fixtures demonstrating checker completeness: each
/// named check has a mutation that it, and under the evaluation order it
/// alone, reports first. `unique` records whether the target is also the
/// only check failing in isolation; the covering facts (`active-frontier`,
/// `cover`) are consequences of the bookkeeping facts, so any state violating
/// them violates those too and no uniquely-failing mutation can exist.
pub mod fault {
    use super::*;
    use crate::labelling::LabelledTreeState;

    pub struct FaultFixture {
        pub name: &'static str,
        pub target: CheckName,
        /// The target is the only check failing even when every check is run
        /// in isolation.
        pub unique: bool,
        /// The targeted fact is a consequence of earlier bookkeeping facts,
        /// so its violation is only demonstrable by running the check in
        /// isolation; `check_all` reports the underlying fact first.
        pub derived: bool,
        pub snapshot: Snapshot,
        pub schedule: Schedule,
        pub class: EnumeratedClass,
    }

    fn bs(s: &str) -> BitString {
        s.parse().expect("fixture literal")
    }

    fn run_golden(steps: usize) -> (Snapshot, Schedule, EnumeratedClass) {
        let class = EnumeratedClass::new(vec![(1, bs("0000"))]).expect("golden class");
        let schedule = Schedule::geometric(2);
        let mut st =
            LabelledTreeState::init(schedule.clone(), &class, 16).expect("golden init");
        for _ in 0..steps {
            st.step(&class).expect("golden step");
        }
        (st.snapshot(), schedule, class)
    }

    fn run_expansionary(steps: usize) -> (Snapshot, Schedule, EnumeratedClass) {
        let class = EnumeratedClass::empty();
        let schedule = Schedule::geometric(2);
        let mut st = LabelledTreeState::init(schedule.clone(), &class, 16).expect("init");
        for _ in 0..steps {
            st.step(&class).expect("step");
        }
        (st.snapshot(), schedule, class)
    }

    pub fn battery() -> Vec<FaultFixture> {
        let mut out = Vec::new();

        // Label on a non-schedule length; inserted early so it is not the
        // newest copy of its label.
        let (mut snap, schedule, class) = run_golden(3);
        snap.placements.insert(1, (bs("000"), bs("0")));
        out.push(FaultFixture {
            name: "label-at-non-schedule-length",
            target: CheckName::Restriction,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Length-2 label on a level hosting length-1 labels.
        let (mut snap, schedule, class) = run_golden(3);
        snap.placements.insert(1, (bs("0010"), bs("00")));
        out.push(FaultFixture {
            name: "label-on-wrong-layer",
            target: CheckName::Layering,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // A second, differently-labelled placement on an existing string.
        let (mut snap, schedule, class) = run_golden(3);
        snap.placements.insert(1, (bs("0011"), bs("0")));
        out.push(FaultFixture {
            name: "two-labels-on-one-string",
            target: CheckName::Uniqueness,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Swap the labels of two level-6 placements in a purely expansionary
        // run: both prefixes end up carrying the wrong child label.
        let (mut snap, schedule, class) = run_expansionary(2);
        let i = snap.placements.iter().position(|(n, _)| *n == bs("000000")).unwrap();
        let j = snap.placements.iter().position(|(n, _)| *n == bs("001100")).unwrap();
        snap.placements[i].1 = bs("10");
        snap.placements[j].1 = bs("00");
        out.push(FaultFixture {
            name: "swapped-child-labels",
            target: CheckName::Consistency,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // An extra inactive copy of x_1 parked at level ℓ₁ while the frontier
        // is at ℓ₂: a leaf outside D stuck above the frontier.
        let (mut snap, schedule, class) = run_expansionary(2);
        snap.placements.insert(2, (bs("0010"), bs("1")));
        out.push(FaultFixture {
            name: "stale-shallow-leaf",
            target: CheckName::UniformLeafDepth,
            unique: false,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Delete one level-2 label entirely: the label family is no longer
        // downward complete.
        let (mut snap, schedule, class) = run_golden(3);
        snap.placements.retain(|(n, _)| *n != bs("001111"));
        snap.active.remove(&bs("001111"));
        out.push(FaultFixture {
            name: "missing-sibling-label",
            target: CheckName::Completeness,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Pretend only one stage has passed: depth-6 labels exceed ℓ₁.
        let (mut snap, schedule, class) = run_golden(3);
        snap.stage = 1;
        out.push(FaultFixture {
            name: "labels-beyond-stage-bound",
            target: CheckName::Finiteness,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // A fully active three-label state over the packed schedule ℓᵢ = i+1:
        // the weights alone sum to exactly 1.
        let schedule = Schedule::explicit(vec![1, 2, 3], 3, Dyadic::pow2(-4)).expect("levels");
        let snap = Snapshot {
            placements: vec![
                (bs("0"), BitString::empty()),
                (bs("00"), bs("0")),
                (bs("01"), bs("1")),
            ],
            active: [bs("0"), bs("00"), bs("01")].into_iter().collect(),
            d_entries: vec![],
            stage: 2,
        };
        out.push(FaultFixture {
            name: "weight-at-one",
            target: CheckName::WeightBound,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class: EnumeratedClass::empty(),
        });

        // Reactivate a donor copy: the active set exceeds the per-level
        // counting bound (and, in isolation, also breaks one-active).
        let (mut snap, schedule, class) = run_golden(2);
        snap.active.insert(bs("0000"));
        out.push(FaultFixture {
            name: "extra-active-clone",
            target: CheckName::WeightCeiling,
            unique: false,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Reorder history so the active copy of x_0 is no longer the newest.
        let (mut snap, schedule, class) = run_golden(2);
        let i = snap.placements.iter().position(|(n, _)| *n == bs("0000")).unwrap();
        let j = snap.placements.iter().position(|(n, _)| *n == bs("0001")).unwrap();
        snap.placements.swap(i, j);
        out.push(FaultFixture {
            name: "active-copy-not-newest",
            target: CheckName::OneActive,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Enumerate a string into D whose extensions are already labelled.
        let (mut snap, schedule, _) = run_golden(3);
        snap.d_entries.push((4, bs("0001")));
        let class = EnumeratedClass::new(vec![(1, bs("0000")), (1, bs("0001"))])
            .expect("widened class");
        out.push(FaultFixture {
            name: "labels-above-d-entry",
            target: CheckName::NoLabelsAboveD,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // A hand-built state whose only inactive string is unsaturated and
        // outside D, while every frontier string it owns is shielded by D.
        let schedule = Schedule::geometric(2);
        let class = EnumeratedClass::new(vec![
            (1, bs("0001")),
            (1, bs("0010")),
            (1, bs("0011")),
        ])
        .expect("shield class");
        let snap = Snapshot {
            placements: vec![
                (bs("00"), BitString::empty()),
                (bs("01"), BitString::empty()),
                (bs("0000"), bs("0")),
                (bs("0100"), bs("1")),
            ],
            active: [bs("01"), bs("0000"), bs("0100")].into_iter().collect(),
            d_entries: vec![(2, bs("0001")), (3, bs("0010")), (4, bs("0011"))],
            stage: 5,
        };
        out.push(FaultFixture {
            name: "inactive-unsaturated-outside-d",
            target: CheckName::InactiveSaturatedOrD,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Check the golden state against a class that never enumerated its
        // D entry.
        let (snap, schedule, _) = run_golden(2);
        out.push(FaultFixture {
            name: "d-entry-without-q-prefix",
            target: CheckName::DSubsetQ,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class: EnumeratedClass::empty(),
        });

        // Forget the D entry: its deactivated donor is now an inactive,
        // unsaturated largest labelled prefix of frontier strings (this state
        // equally violates the bookkeeping facts it derives from).
        let (mut snap, schedule, class) = run_golden(2);
        snap.d_entries.clear();
        out.push(FaultFixture {
            name: "frontier-prefix-inactive",
            target: CheckName::ActiveFrontier,
            unique: false,
            derived: true,
            snapshot: snap,
            schedule,
            class,
        });

        // Every leaf under the root label is enumerated into D: the root
        // label has no escape route.
        let schedule = Schedule::geometric(2);
        let class = EnumeratedClass::new(vec![
            (1, bs("0000")),
            (1, bs("0001")),
            (1, bs("0010")),
            (1, bs("0011")),
        ])
        .expect("choking class");
        let snap = Snapshot {
            placements: vec![
                (bs("00"), BitString::empty()),
                (bs("0000"), bs("0")),
                (bs("0010"), bs("1")),
                (bs("0001"), bs("0")),
                (bs("0011"), bs("1")),
            ],
            active: [bs("00"), bs("0001"), bs("0011")].into_iter().collect(),
            d_entries: vec![
                (2, bs("0000")),
                (3, bs("0001")),
                (4, bs("0010")),
                (5, bs("0011")),
            ],
            stage: 6,
        };
        out.push(FaultFixture {
            name: "active-with-all-leaves-in-d",
            target: CheckName::Escape,
            unique: true,
            derived: false,
            snapshot: snap,
            schedule,
            class,
        });

        // Same forgotten-D mutation seen through the covering fact.
        let (mut snap, schedule, class) = run_golden(2);
        snap.d_entries.clear();
        out.push(FaultFixture {
            name: "cylinder-not-covered",
            target: CheckName::Cover,
            unique: false,
            derived: true,
            snapshot: snap,
            schedule,
            class,
        });

        out
    }
}
