//! The coding process: encode a finite prefix into the class, decode it back
//! reading exactly ℓₙ oracle bits.
//!
//! The construction run is a pure function of (schedule, class), so the code
//! for x is read off a *settled* stage: the frontier is past every excluded
//! string length and no pending filtered enumeration remains. From then on
//! every stage is expansionary and nothing is ever deactivated, so the active
//! leaf above x's label is a genuine witness that the code extends into the
//! class. Decoding replays the same deterministic construction until the
//! given prefix is labelled.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::class::EnumeratedClass;
use crate::labelling::{EventKind, InitError, LabelledTreeState, StepError};
use crate::schedule::{Schedule, ScheduleError, DEFAULT_VALIDATION_HORIZON};

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("stage cap {0} exhausted before the construction settled")]
    CapExhausted(u64),
    #[error("construction terminated; the coding hypothesis did not hold")]
    Terminated,
    #[error("input length {0} is not a schedule level, cannot decode")]
    BadCodeLength(u64),
    #[error("settled state is missing the active clone of {0:?}; state is corrupt")]
    MissingWitness(BitString),
}

/// Outcome of encoding a prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeResult {
    pub code_prefix: BitString,
    pub settled_at_stage: u64,
    pub extendible: bool,
    pub leaf_witness: BitString,
}

/// Generous default stage cap: 10·(n + |Q|·2^max_len).
pub fn default_stage_cap(class: &EnumeratedClass, n: u64) -> u64 {
    let slots = (class.entries().len() as u64)
        .saturating_mul(1u64 << class.max_len().min(32));
    10u64.saturating_mul(n + slots.max(1))
}

/// An input tape that records how far it has been read.
pub struct OracleTape<'a> {
    bits: &'a BitString,
    high_water: Cell<u64>,
}

impl<'a> OracleTape<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        OracleTape { bits, high_water: Cell::new(0) }
    }

    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Reads the first `len` bits, recording the access.
    pub fn prefix(&self, len: u64) -> BitString {
        assert!(len <= self.bits.len(), "oracle tape overrun");
        self.high_water.set(self.high_water.get().max(len));
        self.bits.prefix(len)
    }

    /// How many initial bits have been inspected so far.
    pub fn bits_consumed(&self) -> u64 {
        self.high_water.get()
    }
}

fn settled(st: &LabelledTreeState, class: &EnumeratedClass, n: u64) -> Result<bool, CodecError> {
    let depth = st.code_depth();
    if depth < n {
        return Ok(false);
    }
    let level_n = st.schedule().level(n as usize)?;
    let frontier = st.schedule().level(depth as usize)?;
    if frontier < class.max_len().max(level_n) {
        return Ok(false);
    }
    // No labelled leaf outside D may have a prefix in the full Q: once that
    // holds past max_len, every later stage is expansionary.
    Ok(st.leaves().iter().all(|leaf| st.in_d(leaf) || !class.covers(leaf)))
}

/// Runs the construction to its first settled stage for prefix length n.
fn run_to_settled(
    schedule: &Schedule,
    class: &EnumeratedClass,
    n: u64,
    stage_cap: u64,
) -> Result<LabelledTreeState, CodecError> {
    let mut st = LabelledTreeState::init(schedule.clone(), class, DEFAULT_VALIDATION_HORIZON)?;
    loop {
        if settled(&st, class, n)? {
            return Ok(st);
        }
        if st.stage() >= stage_cap {
            return Err(CodecError::CapExhausted(stage_cap));
        }
        let event = st.step(class)?;
        if event.kind == EventKind::Terminated {
            return Err(CodecError::Terminated);
        }
    }
}

/// Encodes x: the length-ℓ_|x| prefix of the active leaf carrying the label
/// of x extended by zeros to the settled frontier. By the consistency
/// property that prefix carries exactly x's label.
pub fn encode(
    x: &BitString,
    schedule: &Schedule,
    class: &EnumeratedClass,
    stage_cap: u64,
) -> Result<CodeResult, CodecError> {
    let n = x.len();
    let st = run_to_settled(schedule, class, n, stage_cap)?;
    let level_n = schedule.level(n as usize)?;
    let sigma_full = x.padded(st.code_depth(), 0);
    let leaf_witness = st
        .active_clone_of(&sigma_full)
        .ok_or_else(|| CodecError::MissingWitness(sigma_full.clone()))?
        .clone();
    let code_prefix = leaf_witness.prefix(level_n);
    let extendible = class.is_extendible(&code_prefix);
    Ok(CodeResult {
        code_prefix,
        settled_at_stage: st.stage(),
        extendible,
        leaf_witness,
    })
}

/// Decodes through an instrumented tape: runs the construction until the
/// first ℓₙ tape bits name a labelled string, and returns that label.
pub fn decode_with_oracle(
    tape: &OracleTape,
    n: u64,
    schedule: &Schedule,
    class: &EnumeratedClass,
    stage_cap: u64,
) -> Result<BitString, CodecError> {
    let level_n = schedule.level(n as usize)?;
    if tape.len() < level_n {
        return Err(CodecError::BadCodeLength(tape.len()));
    }
    let target = tape.prefix(level_n);
    let mut st = LabelledTreeState::init(schedule.clone(), class, DEFAULT_VALIDATION_HORIZON)?;
    loop {
        if let Some(sigma) = st.label_of(&target) {
            return Ok(sigma.clone());
        }
        if st.stage() >= stage_cap {
            return Err(CodecError::CapExhausted(stage_cap));
        }
        let event = st.step(class)?;
        if event.kind == EventKind::Terminated {
            return Err(CodecError::Terminated);
        }
    }
}

/// Decodes a code prefix whose length must be some ℓₙ; returns the decoded
/// prefix and the number of oracle bits consumed (exactly ℓₙ).
pub fn decode_counting(
    y: &BitString,
    schedule: &Schedule,
    class: &EnumeratedClass,
    stage_cap: u64,
) -> Result<(BitString, u64), CodecError> {
    let n = schedule
        .level_index(y.len())
        .ok_or(CodecError::BadCodeLength(y.len()))? as u64;
    let tape = OracleTape::new(y);
    let sigma = decode_with_oracle(&tape, n, schedule, class, stage_cap)?;
    Ok((sigma, tape.bits_consumed()))
}

/// Decodes a code prefix of length ℓₙ back to the n-bit source prefix.
pub fn decode(
    y: &BitString,
    schedule: &Schedule,
    class: &EnumeratedClass,
    stage_cap: u64,
) -> Result<BitString, CodecError> {
    decode_counting(y, schedule, class, stage_cap).map(|(sigma, _)| sigma)
}

/// decode(encode(x)) must reproduce x, consuming exactly ℓ_|x| oracle bits.
pub fn roundtrip(
    x: &BitString,
    schedule: &Schedule,
    class: &EnumeratedClass,
    stage_cap: u64,
) -> Result<bool, CodecError> {
    let result = encode(x, schedule, class, stage_cap)?;
    let (decoded, consumed) = decode_counting(&result.code_prefix, schedule, class, stage_cap)?;
    let level_n = schedule.level(x.len() as usize)?;
    Ok(decoded == *x && consumed == level_n && result.code_prefix.len() == level_n)
}

/// Oracle use and redundancy per prefix length, for reporting.
pub fn oracle_use_profile(
    schedule: &Schedule,
    n_max: u64,
) -> Result<Vec<(u64, u64, i64)>, ScheduleError> {
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let level = schedule.level(n as usize)?;
        rows.push((n, level, level as i64 - n as i64));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelling::RunOutcome;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn golden() -> (Schedule, EnumeratedClass) {
        (
            Schedule::geometric(2),
            EnumeratedClass::new(vec![(1, bs("0000"))]).unwrap(),
        )
    }

    #[test]
    fn decode_golden_examples() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 4);
        assert_eq!(decode(&bs("0011"), &s, &c, cap).unwrap(), bs("1"));
        assert_eq!(decode(&bs("0001"), &s, &c, cap).unwrap(), bs("0"));
        assert_eq!(decode(&bs("00"), &s, &c, cap).unwrap(), BitString::empty());
    }

    #[test]
    fn encode_golden_examples() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 4);
        let r = encode(&bs("0"), &s, &c, cap).unwrap();
        assert_eq!(r.code_prefix, bs("0001"));
        assert!(r.extendible);
        assert!(r.code_prefix.is_prefix_of(&r.leaf_witness));

        let r = encode(&BitString::empty(), &s, &c, cap).unwrap();
        assert_eq!(r.code_prefix, bs("00"));
    }

    #[test]
    fn encode_empty_class_takes_leftmost_branch() {
        let s = Schedule::geometric(2);
        let c = EnumeratedClass::empty();
        let cap = default_stage_cap(&c, 4);
        assert_eq!(encode(&bs("0"), &s, &c, cap).unwrap().code_prefix, bs("0000"));
        assert_eq!(encode(&BitString::empty(), &s, &c, cap).unwrap().code_prefix, bs("00"));
    }

    #[test]
    fn roundtrip_golden_short_prefixes() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 2);
        for x in [BitString::empty(), bs("0"), bs("1")] {
            assert!(roundtrip(&x, &s, &c, cap).unwrap(), "x = {x}");
        }
    }

    #[test]
    fn roundtrip_empty_class_exhaustive_to_length_three() {
        let s = Schedule::geometric(2);
        let c = EnumeratedClass::empty();
        let cap = default_stage_cap(&c, 3);
        for len in 0..=3u64 {
            for x in BitString::empty().extensions(len) {
                assert!(roundtrip(&x, &s, &c, cap).unwrap(), "x = {x}");
            }
        }
    }

    #[test]
    fn decode_consumes_exactly_level_n_bits_of_longer_tapes() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 4);
        let r = encode(&BitString::empty(), &s, &c, cap).unwrap();
        assert!(r.leaf_witness.len() > r.code_prefix.len());
        let tape = OracleTape::new(&r.leaf_witness);
        let sigma = decode_with_oracle(&tape, 0, &s, &c, cap).unwrap();
        assert_eq!(sigma, BitString::empty());
        assert_eq!(tape.bits_consumed(), 2, "only ℓ₀ bits of the longer tape read");
    }

    #[test]
    fn monotone_consistency_of_nested_prefixes() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 5);
        let x = bs("01101");
        let full = encode(&x, &s, &c, cap).unwrap();
        for m in 0..=x.len() {
            let level_m = s.level(m as usize).unwrap();
            // Decoding the ℓ_m-prefix of x's code recovers x↾m.
            let truncated = full.code_prefix.prefix(level_m);
            let (decoded, consumed) = decode_counting(&truncated, &s, &c, cap).unwrap();
            assert_eq!(decoded, x.prefix(m));
            assert_eq!(consumed, level_m);
        }
    }

    #[test]
    fn code_membership_at_settled_stage() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 3);
        for len in 0..=3u64 {
            for x in BitString::empty().extensions(len) {
                let r = encode(&x, &s, &c, cap).unwrap();
                assert!(!c.covers(&r.code_prefix), "x = {x}");
                assert!(!c.covers(&r.leaf_witness), "x = {x}");
                assert!(r.extendible, "x = {x}");
            }
        }
    }

    #[test]
    fn settled_witness_survives_further_stages() {
        let (s, c) = golden();
        let cap = default_stage_cap(&c, 2);
        let r = encode(&bs("01"), &s, &c, cap).unwrap();
        let mut st = LabelledTreeState::init(s.clone(), &c, 16).unwrap();
        let outcome = st
            .run_until(&c, |st| st.stage() >= r.settled_at_stage + 6, 10_000)
            .unwrap();
        assert_eq!(outcome, RunOutcome::Satisfied);
        assert!(st.is_active(&r.leaf_witness));
        let sigma = st.label_of(&r.leaf_witness).unwrap();
        assert!(bs("01").is_prefix_of(sigma));
    }

    #[test]
    fn error_paths() {
        let (s, c) = golden();
        assert!(matches!(
            decode(&bs("000"), &s, &c, 100),
            Err(CodecError::BadCodeLength(3))
        ));
        assert!(matches!(
            encode(&bs("0"), &s, &c, 0),
            Err(CodecError::CapExhausted(0))
        ));
    }

    #[test]
    fn profile_rows() {
        let s = Schedule::geometric(2);
        assert_eq!(
            oracle_use_profile(&s, 3).unwrap(),
            vec![(0, 2, 2), (1, 4, 3), (2, 6, 4), (3, 8, 5)]
        );
        assert_eq!(oracle_use_profile(&s, 0).unwrap().len(), 1);
        // ℓᵢ = i + 2⌊log₂(i+1)⌋ + 3 at i = 7: 7 + 6 + 3 = 16, redundancy 9.
        let log = Schedule::log(2, 3).unwrap();
        assert_eq!(oracle_use_profile(&log, 7).unwrap()[7], (7, 16, 9));
    }
}
