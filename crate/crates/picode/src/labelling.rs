//! The stage-by-stage labelling construction over the full binary tree.
//!
//! A state carries a partial map from tree nodes to labels x_σ, exactly one
//! active node per placed label, and the filtered enumeration D that paces the
//! excluded set through the construction. Stages are deterministic: an
//! expansionary stage extends every active leaf's label σ to σ∗0 and σ∗1 at
//! the next level (leftmost and rightmost extensions); an adaptive stage
//! reacts to a leaf entering D by deactivating the tail of its clone chain and
//! cloning the dead branch above its deepest unsaturated ancestor clone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::class::EnumeratedClass;
use crate::dyadic::Dyadic;
use crate::schedule::{validate_schedule, Schedule, ScheduleError, ScheduleReject};

#[derive(Debug, thiserror::Error)]
pub enum InitError {
    #[error("coding hypothesis not met (certified schedule sum vs class budget): {0}")]
    Hypothesis(#[from] ScheduleReject),
    #[error("schedule unusable: {0}")]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum StepError {
    #[error("construction already terminated")]
    AlreadyTerminated,
    #[error("schedule exhausted mid-run: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("no unlabelled slot above an unsaturated clone; state is corrupt")]
    CloneTargetSaturated,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("saturation is only defined for the root and labelled strings, got {0:?}")]
pub struct NotLabelled(pub BitString);

/// What a single stage did. Serialized one-per-line in trace files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEvent {
    pub kind: EventKind,
    pub stage: u64,
    pub placements: Vec<(BitString, BitString)>,
    pub deactivations: Vec<BitString>,
    pub d_append: Option<BitString>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Init,
    Expansionary,
    Adaptive,
    Terminated,
}

/// Outcome of a bounded driver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Satisfied,
    CapExhausted,
    Terminated,
}

/// Full state snapshot consumed by the invariant checker. Deliberately plain
/// data so faults can be injected and traces can be replayed into it without
/// going through the engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// Every (node, σ) placement in the order it was made.
    pub placements: Vec<(BitString, BitString)>,
    pub active: BTreeSet<BitString>,
    pub d_entries: Vec<(u64, BitString)>,
    pub stage: u64,
}

/// The construction state 𝕋ₛ.
#[derive(Debug, Clone)]
pub struct LabelledTreeState {
    schedule: Schedule,
    labels: BTreeMap<BitString, BitString>,
    placements: Vec<(BitString, BitString)>,
    active_clone: BTreeMap<BitString, BitString>,
    active: BTreeSet<BitString>,
    d_set: BTreeSet<BitString>,
    d_entries: Vec<(u64, BitString)>,
    stage: u64,
    code_depth: u64,
    terminated: bool,
    trace: Vec<StageEvent>,
}

impl LabelledTreeState {
    /// Stage 0: verify the coding hypothesis (certified schedule sum strictly
    /// below 1 − μ(⟦Q⟧)), then label the leftmost string of length ℓ₀ with
    /// x_λ and activate it.
    pub fn init(
        schedule: Schedule,
        class: &EnumeratedClass,
        horizon: usize,
    ) -> Result<Self, InitError> {
        let budget = Dyadic::one()
            .checked_sub(class.full_measure())
            .expect("class invariant keeps the measure below 1");
        validate_schedule(&schedule, &budget, horizon)?;
        Self::init_unvalidated(schedule, class)
    }

    /// Stage 0 without the hypothesis check. Runs started this way may
    /// terminate; the coding guarantees only hold behind `init`.
    pub fn init_unvalidated(
        schedule: Schedule,
        _class: &EnumeratedClass,
    ) -> Result<Self, InitError> {
        let root_level = schedule.level(0)?;
        let first = BitString::zeros(root_level);
        let mut st = LabelledTreeState {
            schedule,
            labels: BTreeMap::new(),
            placements: Vec::new(),
            active_clone: BTreeMap::new(),
            active: BTreeSet::new(),
            d_set: BTreeSet::new(),
            d_entries: Vec::new(),
            stage: 0,
            code_depth: 0,
            terminated: false,
            trace: Vec::new(),
        };
        st.place(first.clone(), BitString::empty());
        st.trace.push(StageEvent {
            kind: EventKind::Init,
            stage: 0,
            placements: vec![(first, BitString::empty())],
            deactivations: Vec::new(),
            d_append: None,
        });
        Ok(st)
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    /// dvls(𝕋*ₛ): the length of the longest σ whose label has been placed.
    pub fn code_depth(&self) -> u64 {
        self.code_depth
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn label_of(&self, node: &BitString) -> Option<&BitString> {
        self.labels.get(node)
    }

    pub fn labels(&self) -> &BTreeMap<BitString, BitString> {
        &self.labels
    }

    /// The unique active node currently carrying x_σ.
    pub fn active_clone_of(&self, sigma: &BitString) -> Option<&BitString> {
        self.active_clone.get(sigma)
    }

    pub fn is_active(&self, node: &BitString) -> bool {
        self.active.contains(node)
    }

    pub fn active_nodes(&self) -> &BTreeSet<BitString> {
        &self.active
    }

    pub fn d_entries(&self) -> &[(u64, BitString)] {
        &self.d_entries
    }

    pub fn in_d(&self, node: &BitString) -> bool {
        self.d_set.contains(node)
    }

    pub fn trace(&self) -> &[StageEvent] {
        &self.trace
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            placements: self.placements.clone(),
            active: self.active.clone(),
            d_entries: self.d_entries.clone(),
            stage: self.stage,
        }
    }

    fn has_labelled_proper_extension(&self, node: &BitString) -> bool {
        use std::ops::Bound;
        // Extensions of `node` form a contiguous block right after it in the
        // dictionary order, so one successor probe decides.
        self.labels
            .range((Bound::Excluded(node.clone()), Bound::Unbounded))
            .next()
            .is_some_and(|(k, _)| node.is_prefix_of(k))
    }

    /// Leaves of 𝕋*ₛ: labelled strings with no labelled proper extension, in
    /// lexicographic order.
    pub fn leaves(&self) -> Vec<BitString> {
        self.labels
            .keys()
            .filter(|n| !self.has_labelled_proper_extension(n))
            .cloned()
            .collect()
    }

    /// Labelled extensions of `node` at exactly `len`.
    fn labelled_extensions_at(&self, node: &BitString, len: u64) -> usize {
        self.labels
            .range(node.clone()..)
            .take_while(|(k, _)| node.is_prefix_of(k))
            .filter(|(k, _)| k.len() == len)
            .count()
    }

    fn saturated_unchecked(&self, node: &BitString) -> Result<bool, ScheduleError> {
        let next_index = if node.is_empty() {
            0
        } else {
            match self.schedule.level_index(node.len()) {
                Some(i) => i + 1,
                None => return Ok(false),
            }
        };
        let next_level = self.schedule.level(next_index)?;
        let gap = next_level - node.len();
        if gap >= 32 {
            // More slots than any desk-scale state can fill.
            return Ok(false);
        }
        Ok(self.labelled_extensions_at(node, next_level) == 1usize << gap)
    }

    /// Is every extension of ρ at the next schedule level labelled? The root
    /// counts as sitting below level ℓ₀.
    pub fn is_saturated(&self, rho: &BitString) -> Result<bool, NotLabelled> {
        if !rho.is_empty() && !self.labels.contains_key(rho) {
            return Err(NotLabelled(rho.clone()));
        }
        Ok(self.saturated_unchecked(rho).unwrap_or(false))
    }

    /// The filtered enumeration rule: the lexicographically least leaf of
    /// 𝕋*ₛ outside D with a prefix in Q_s, if any.
    pub fn filtered_step(&self, class: &EnumeratedClass) -> Option<BitString> {
        self.leaves()
            .into_iter()
            .find(|leaf| !self.d_set.contains(leaf) && class.covers_at(self.stage, leaf))
    }

    fn place(&mut self, node: BitString, sigma: BitString) {
        debug_assert!(!self.labels.contains_key(&node), "relabelling {node}");
        self.labels.insert(node.clone(), sigma.clone());
        self.placements.push((node.clone(), sigma.clone()));
        self.code_depth = self.code_depth.max(sigma.len());
        if let Some(old) = self.active_clone.insert(sigma, node.clone()) {
            self.active.remove(&old);
        }
        self.active.insert(node);
    }

    fn expansionary_stage(&mut self, stage: u64) -> Result<StageEvent, StepError> {
        let next_level = self.schedule.level(self.code_depth as usize + 1)?;
        let active_leaves: Vec<(BitString, BitString)> = self
            .leaves()
            .into_iter()
            .filter(|n| self.active.contains(n))
            .map(|n| {
                let sigma = self.labels[&n].clone();
                (n, sigma)
            })
            .collect();
        let mut placements = Vec::new();
        for (node, sigma) in active_leaves {
            let left = node.padded(next_level, 0);
            let right = node.padded(next_level, 1);
            self.place(left.clone(), sigma.child(0));
            self.place(right.clone(), sigma.child(1));
            placements.push((left, sigma.child(0)));
            placements.push((right, sigma.child(1)));
        }
        Ok(StageEvent {
            kind: EventKind::Expansionary,
            stage,
            placements,
            deactivations: Vec::new(),
            d_append: None,
        })
    }

    /// Copies the labels on δ's chain onto the leftmost fresh branch above β,
    /// activating each copy. Returns the placements made.
    fn clone_above(
        &mut self,
        delta: &BitString,
        beta: &BitString,
    ) -> Result<Vec<(BitString, BitString)>, StepError> {
        let start = if beta.is_empty() {
            0
        } else {
            self.schedule
                .level_index(beta.len())
                .expect("clone base sits on a schedule level")
                + 1
        };
        let top = self
            .schedule
            .level_index(delta.len())
            .expect("filtered leaves sit on schedule levels");
        let first_level = self.schedule.level(start)?;
        let eta_prefix = beta
            .extensions(first_level)
            .find(|e| !self.labels.contains_key(e))
            .ok_or(StepError::CloneTargetSaturated)?;
        let eta = eta_prefix.padded(delta.len(), 0);
        let mut placements = Vec::new();
        for i in start..=top {
            let level = self.schedule.level(i)?;
            let node = eta.prefix(level);
            let sigma = self.labels[&delta.prefix(level)].clone();
            self.place(node.clone(), sigma.clone());
            placements.push((node, sigma));
        }
        Ok(placements)
    }

    fn adaptive_stage(&mut self, delta: BitString, stage: u64) -> Result<StageEvent, StepError> {
        self.d_set.insert(delta.clone());
        self.d_entries.push((stage, delta.clone()));

        // α₀ = λ ⊂ α₁ ⊂ … ⊂ α_k = δ: the empty-or-labelled initial segments.
        let mut alphas = vec![BitString::empty()];
        let mut i = 0usize;
        while let Ok(level) = self.schedule.level(i) {
            if level > delta.len() {
                break;
            }
            let prefix = delta.prefix(level);
            if self.labels.contains_key(&prefix) {
                alphas.push(prefix);
            }
            i += 1;
        }
        debug_assert_eq!(alphas.last(), Some(&delta), "filtered leaf must be labelled");
        let k = alphas.len() - 1;

        let betas: Vec<BitString> = alphas
            .iter()
            .enumerate()
            .map(|(j, alpha)| {
                if j == 0 {
                    BitString::empty()
                } else {
                    self.active_clone[&self.labels[alpha]].clone()
                }
            })
            .collect();

        let mut j0 = None;
        for j in (0..k).rev() {
            if !self.saturated_unchecked(&betas[j])? {
                j0 = Some(j);
                break;
            }
        }
        let Some(j0) = j0 else {
            return Ok(StageEvent {
                kind: EventKind::Terminated,
                stage,
                placements: Vec::new(),
                deactivations: Vec::new(),
                d_append: Some(delta),
            });
        };

        let deactivations: Vec<BitString> = betas[j0 + 1..=k].to_vec();
        for b in &deactivations {
            self.active.remove(b);
        }
        let placements = self.clone_above(&delta, &betas[j0])?;
        Ok(StageEvent {
            kind: EventKind::Adaptive,
            stage,
            placements,
            deactivations,
            d_append: Some(delta),
        })
    }

    /// Runs one stage: a new filtered enumeration triggers an adaptive stage,
    /// otherwise the stage is expansionary. Deterministic in (state, class).
    pub fn step(&mut self, class: &EnumeratedClass) -> Result<StageEvent, StepError> {
        if self.terminated {
            return Err(StepError::AlreadyTerminated);
        }
        let stage = self.stage + 1;
        let event = match self.filtered_step(class) {
            Some(delta) => self.adaptive_stage(delta, stage)?,
            None => self.expansionary_stage(stage)?,
        };
        self.stage = stage;
        if event.kind == EventKind::Terminated {
            self.terminated = true;
        }
        self.trace.push(event.clone());
        Ok(event)
    }

    /// Steps until the predicate holds or the stage cap is reached.
    pub fn run_until(
        &mut self,
        class: &EnumeratedClass,
        predicate: impl Fn(&LabelledTreeState) -> bool,
        stage_cap: u64,
    ) -> Result<RunOutcome, StepError> {
        loop {
            if predicate(self) {
                return Ok(RunOutcome::Satisfied);
            }
            if self.stage >= stage_cap {
                return Ok(RunOutcome::CapExhausted);
            }
            let event = self.step(class)?;
            if event.kind == EventKind::Terminated {
                return Ok(RunOutcome::Terminated);
            }
        }
    }
}
