//! Trace files, DOT export, and replay.
//!
//! A trace is one JSON-serialized `StageEvent` per line. Replay rebuilds the
//! state snapshots by applying the recorded events only — none of the
//! engine's decision logic is consulted — so a checker pass over a replayed
//! trace validates the construction from its observable output alone.

use std::fmt::Write as _;

use crate::bits::BitString;
use crate::checks::{check_all, CheckFailure, CheckReport};
use crate::class::EnumeratedClass;
use crate::labelling::{EventKind, LabelledTreeState, Snapshot, StageEvent};
use crate::schedule::Schedule;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("trace line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

pub fn event_to_json(event: &StageEvent) -> String {
    serde_json::to_string(event).expect("stage events always serialize")
}

/// One event per line, each line newline-terminated.
pub fn to_jsonl(events: &[StageEvent]) -> String {
    let mut out = String::new();
    for event in events {
        out.push_str(&event_to_json(event));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<StageEvent>, TraceError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: StageEvent = serde_json::from_str(line)
            .map_err(|source| TraceError::Json { line: i + 1, source })?;
        events.push(event);
    }
    Ok(events)
}

/// DOT rendering of the labelled tree: one node per labelled string with its
/// label, activity and D-membership; edges link each string to its immediate
/// labelled ancestor.
pub fn export_dot(st: &LabelledTreeState) -> String {
    let mut out = String::new();
    out.push_str("digraph labelled_tree {\n");
    out.push_str("  node [shape=box fontname=\"monospace\"];\n");
    for (node, sigma) in st.labels() {
        let mut flags = String::new();
        flags.push_str(if st.is_active(node) { "active" } else { "inactive" });
        if st.in_d(node) {
            flags.push_str(", in D");
        }
        let _ = writeln!(out, "  \"{node}\" [label=\"{node}\\nx={sigma}\\n{flags}\"];");
    }
    for (node, _) in st.labels() {
        if let Some(parent) = immediate_labelled_ancestor(st, node) {
            let _ = writeln!(out, "  \"{parent}\" -> \"{node}\";");
        }
    }
    out.push_str("}\n");
    out
}

fn immediate_labelled_ancestor(st: &LabelledTreeState, node: &BitString) -> Option<BitString> {
    (0..node.len())
        .rev()
        .map(|len| node.prefix(len))
        .find(|p| st.label_of(p).is_some())
}

/// A replayed stage: the applied event and the snapshot after it.
pub struct ReplayedStage {
    pub event: StageEvent,
    pub snapshot: Snapshot,
}

/// Applies a trace event by event, validating the canonical-process shape as
/// it goes and running the full check suite on every rebuilt state.
///
/// Returns one report per trace line; replay continues past failures so a
/// single bad stage does not mask later ones.
pub fn replay_and_check(
    events: &[StageEvent],
    schedule: &Schedule,
    class: &EnumeratedClass,
) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    let mut snapshot = Snapshot {
        placements: Vec::new(),
        active: Default::default(),
        d_entries: Vec::new(),
        stage: 0,
    };
    let mut expected_stage = 0u64;
    for event in events {
        let shape_failure = apply_event(&mut snapshot, event, expected_stage);
        expected_stage = event.stage + 1;
        let report = match shape_failure {
            Some(failure) => CheckReport {
                stage: event.stage,
                passed: Vec::new(),
                failed: Some(failure),
            },
            None => check_all(&snapshot, schedule, class),
        };
        reports.push(report);
    }
    reports
}

/// Applies one event; reports a shape or persistence violation if the event
/// cannot have come from a canonical labelling process.
fn apply_event(
    snapshot: &mut Snapshot,
    event: &StageEvent,
    expected_stage: u64,
) -> Option<CheckFailure> {
    let shape = |detail: String| {
        Some(CheckFailure { check: "trace-shape".into(), witnesses: vec![], detail })
    };
    if event.stage != expected_stage {
        return shape(format!("stage {} out of order, expected {expected_stage}", event.stage));
    }
    match event.kind {
        EventKind::Init => {
            if event.stage != 0 || event.d_append.is_some() || !event.deactivations.is_empty() {
                return shape("malformed init event".into());
            }
        }
        EventKind::Expansionary => {
            if event.d_append.is_some() || !event.deactivations.is_empty() {
                return shape("expansionary stage must not enumerate or deactivate".into());
            }
        }
        EventKind::Adaptive | EventKind::Terminated => {
            if event.d_append.is_none() {
                return shape("adaptive stage without a D entry".into());
            }
        }
    }
    if let Some(delta) = &event.d_append {
        snapshot.d_entries.push((event.stage, delta.clone()));
    }
    for node in &event.deactivations {
        snapshot.active.remove(node);
    }
    for (node, sigma) in &event.placements {
        // Persistence: a placed (string, label) pair never changes, so any
        // re-placement on a labelled string falsifies the trace.
        if let Some((_, prev)) = snapshot.placements.iter().find(|(n, _)| n == node) {
            return Some(CheckFailure {
                check: "persistence".into(),
                witnesses: vec![node.to_string()],
                detail: format!("string relabelled from {prev:?} to {sigma:?}"),
            });
        }
        snapshot.placements.push((node.clone(), sigma.clone()));
        snapshot.active.insert(node.clone());
    }
    snapshot.stage = event.stage;
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn golden_run(steps: usize) -> (LabelledTreeState, EnumeratedClass) {
        let class = EnumeratedClass::new(vec![(1, bs("0000"))]).unwrap();
        let mut st = LabelledTreeState::init(Schedule::geometric(2), &class, 16).unwrap();
        for _ in 0..steps {
            st.step(&class).unwrap();
        }
        (st, class)
    }

    #[test]
    fn jsonl_roundtrip() {
        let (st, _) = golden_run(3);
        let text = to_jsonl(st.trace());
        let back = parse_jsonl(&text).unwrap();
        assert_eq!(back, st.trace());
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn jsonl_lines_are_stable() {
        let (st, _) = golden_run(2);
        let text = to_jsonl(st.trace());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"kind":"init","stage":0,"placements":[["00",""]],"deactivations":[],"d_append":null}"#
        );
        assert_eq!(
            lines[2],
            r#"{"kind":"adaptive","stage":2,"placements":[["0001","0"]],"deactivations":["0000"],"d_append":"0000"}"#
        );
    }

    #[test]
    fn replay_of_genuine_trace_passes_every_stage() {
        let (st, class) = golden_run(3);
        let reports = replay_and_check(st.trace(), st.schedule(), &class);
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(r.is_pass(), "stage {}: {:?}", r.stage, r.failed);
        }
        // The replayed final snapshot matches the engine's own.
        let mut snapshot = Snapshot {
            placements: Vec::new(),
            active: Default::default(),
            d_entries: Vec::new(),
            stage: 0,
        };
        for e in st.trace() {
            assert!(apply_event(&mut snapshot, e, e.stage).is_none());
        }
        assert_eq!(snapshot, st.snapshot());
    }

    #[test]
    fn replay_flags_mutated_sigma() {
        let (st, class) = golden_run(3);
        let mut events = st.trace().to_vec();
        // Redirect the adaptive clone onto the wrong branch with the wrong
        // label: x_1 ends up with two active copies in the rebuilt state.
        events[2].placements[0] = (bs("0010"), bs("1"));
        let reports = replay_and_check(&events, st.schedule(), &class);
        let failed = reports[2].failed.as_ref().unwrap();
        assert_eq!(failed.check, "one-active-per-label");
    }

    #[test]
    fn replay_flags_relabelling_as_persistence_violation() {
        let (st, class) = golden_run(3);
        let mut events = st.trace().to_vec();
        events[2].placements[0] = (bs("0000"), bs("1"));
        let reports = replay_and_check(&events, st.schedule(), &class);
        let failed = reports[2].failed.as_ref().unwrap();
        assert_eq!(failed.check, "persistence");
    }

    #[test]
    fn replay_flags_out_of_order_stages() {
        let (st, class) = golden_run(2);
        let mut events = st.trace().to_vec();
        events[2].stage = 7;
        let reports = replay_and_check(&events, st.schedule(), &class);
        let failed = reports[2].failed.as_ref().unwrap();
        assert_eq!(failed.check, "trace-shape");
    }

    #[test]
    fn empty_trace_passes_vacuously() {
        let class = EnumeratedClass::empty();
        let reports = replay_and_check(&[], &Schedule::geometric(2), &class);
        assert!(reports.is_empty());
    }

    #[test]
    fn dot_export_lists_labels_activity_and_edges() {
        let (st, _) = golden_run(2);
        let dot = export_dot(&st);
        assert!(dot.starts_with("digraph labelled_tree {"));
        assert!(dot.contains("\"0000\" [label=\"0000\\nx=0\\ninactive, in D\"];"));
        assert!(dot.contains("\"0001\" [label=\"0001\\nx=0\\nactive\"];"));
        assert!(dot.contains("\"00\" -> \"0000\";"));
        assert!(dot.contains("\"00\" -> \"0001\";"));
        assert!(!dot.contains("-> \"00\";"), "root label has no labelled ancestor");
    }
}
