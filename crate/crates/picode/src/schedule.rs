//! Increasing level sequences (ℓᵢ) with certified tail bounds for Σ 2^{i−ℓᵢ}.
//!
//! A schedule is only usable once `validate_schedule` has certified, in exact
//! arithmetic, that its series stays strictly below the measure budget of the
//! target class. Convergence is never assumed: the built-in families carry
//! closed-form tail bounds and explicit schedules must ship a certificate.

use std::fmt;
use std::path::Path;

use crate::bits::BitString;
use crate::dyadic::Dyadic;

pub const DEFAULT_VALIDATION_HORIZON: usize = 32;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("schedule has no level at index {0}")]
    IndexOutOfRange(usize),
    #[error("no tail certificate available from index {0}")]
    NoCertificate(usize),
    #[error("levels not strictly increasing at index {index}: {prev} then {next}")]
    NotIncreasing { index: usize, prev: u64, next: u64 },
    #[error("log schedule needs coefficient a >= 2 for a convergence certificate, got {0}")]
    DivergentFamily(u32),
    #[error("cannot parse schedule spec {0:?}: expected geometric:c, log:a,b or file:<path>")]
    BadSpec(String),
    #[error("schedule file: {0}")]
    BadFile(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScheduleReject {
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("schedule not strictly increasing on the horizon: {0}")]
    NotIncreasing(ScheduleError),
    #[error("schedule not certified beyond the horizon: {0}")]
    NotCertified(ScheduleError),
    #[error("certified total {total} is not strictly below budget {budget}")]
    ExceedsBudget { total: Dyadic, budget: Dyadic },
}

/// The level sequence i ↦ ℓᵢ together with a tail-bound certificate
/// B(N) ≥ Σ_{i≥N} 2^{i−ℓᵢ}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// ℓᵢ = 2i + c, so each term is 2^{-i-c}.
    Geometric { c: u32 },
    /// ℓᵢ = i + a·⌊log₂(i+1)⌋ + b, the optimal-redundancy family. Requires
    /// a ≥ 2 so block sums form a geometric series.
    Log { a: u32, b: u32 },
    /// Finitely many explicit levels plus a caller-supplied certificate for
    /// the series tail starting at `tail_at`.
    Explicit { levels: Vec<u64>, tail_at: usize, tail: Dyadic },
}

impl Schedule {
    pub fn geometric(c: u32) -> Schedule {
        Schedule::Geometric { c }
    }

    pub fn log(a: u32, b: u32) -> Result<Schedule, ScheduleError> {
        if a < 2 {
            return Err(ScheduleError::DivergentFamily(a));
        }
        Ok(Schedule::Log { a, b })
    }

    /// Builds ℓᵢ = i + g(i) from a redundancy table, reusing the caller's
    /// certificate for Σ_{i≥tail_at} 2^{-g(i)} (the two series coincide term
    /// by term). Rejects tables whose induced levels fail to increase.
    pub fn from_redundancy(g: &[u64], tail_at: usize, tail: Dyadic) -> Result<Schedule, ScheduleError> {
        let levels: Vec<u64> = g.iter().enumerate().map(|(i, gi)| i as u64 + gi).collect();
        check_increasing(&levels)?;
        if tail_at > levels.len() {
            return Err(ScheduleError::IndexOutOfRange(tail_at));
        }
        Ok(Schedule::Explicit { levels, tail_at, tail })
    }

    pub fn explicit(levels: Vec<u64>, tail_at: usize, tail: Dyadic) -> Result<Schedule, ScheduleError> {
        check_increasing(&levels)?;
        if tail_at > levels.len() {
            return Err(ScheduleError::IndexOutOfRange(tail_at));
        }
        Ok(Schedule::Explicit { levels, tail_at, tail })
    }

    /// ℓᵢ.
    pub fn level(&self, i: usize) -> Result<u64, ScheduleError> {
        match self {
            Schedule::Geometric { c } => Ok(2 * i as u64 + *c as u64),
            Schedule::Log { a, b } => {
                Ok(i as u64 + *a as u64 * floor_log2(i as u64 + 1) + *b as u64)
            }
            Schedule::Explicit { levels, .. } => {
                levels.get(i).copied().ok_or(ScheduleError::IndexOutOfRange(i))
            }
        }
    }

    /// Highest queryable index, `None` when the family is unbounded.
    pub fn max_index(&self) -> Option<usize> {
        match self {
            Schedule::Explicit { levels, .. } => Some(levels.len().saturating_sub(1)),
            _ => None,
        }
    }

    /// The index i with ℓᵢ = len, if any.
    pub fn level_index(&self, len: u64) -> Option<usize> {
        let mut i = 0usize;
        loop {
            match self.level(i) {
                Ok(l) if l == len => return Some(i),
                Ok(l) if l > len => return None,
                Ok(_) => i += 1,
                Err(_) => return None,
            }
        }
    }

    /// The series term 2^{i−ℓᵢ}.
    pub fn term(&self, i: usize) -> Result<Dyadic, ScheduleError> {
        let l = self.level(i)?;
        Ok(Dyadic::pow2(i as i64 - l as i64))
    }

    /// Exact partial sum Σ_{i<end} 2^{i−ℓᵢ}.
    pub fn partial_sum(&self, end: usize) -> Result<Dyadic, ScheduleError> {
        let mut total = Dyadic::zero();
        for i in 0..end {
            total += &self.term(i)?;
        }
        Ok(total)
    }

    /// Certified B(N) ≥ Σ_{i≥N} 2^{i−ℓᵢ}.
    pub fn tail_bound(&self, n: usize) -> Result<Dyadic, ScheduleError> {
        match self {
            // Σ_{i≥N} 2^{-i-c} = 2^{-N-c+1}, exactly.
            Schedule::Geometric { c } => Ok(Dyadic::pow2(-(n as i64) - *c as i64 + 1)),
            Schedule::Log { a, b } => Ok(log_tail(*a, *b, n)),
            Schedule::Explicit { levels: _, tail_at, tail } => {
                if n > *tail_at {
                    return Err(ScheduleError::NoCertificate(n));
                }
                let mut total = tail.clone();
                for i in n..*tail_at {
                    total += &self.term(i)?;
                }
                Ok(total)
            }
        }
    }

    /// Parses the CLI mini-language: `geometric:c`, `log:a,b`, `file:<path>`.
    pub fn parse(spec: &str) -> Result<Schedule, ScheduleError> {
        if let Some(c) = spec.strip_prefix("geometric:") {
            let c: u32 = c.parse().map_err(|_| ScheduleError::BadSpec(spec.to_string()))?;
            return Ok(Schedule::geometric(c));
        }
        if let Some(ab) = spec.strip_prefix("log:") {
            let (a, b) = ab.split_once(',').ok_or_else(|| ScheduleError::BadSpec(spec.to_string()))?;
            let a: u32 = a.parse().map_err(|_| ScheduleError::BadSpec(spec.to_string()))?;
            let b: u32 = b.parse().map_err(|_| ScheduleError::BadSpec(spec.to_string()))?;
            return Schedule::log(a, b);
        }
        if let Some(path) = spec.strip_prefix("file:") {
            return Schedule::load(Path::new(path));
        }
        Err(ScheduleError::BadSpec(spec.to_string()))
    }

    /// Loads an explicit schedule: lines `i<TAB>ℓᵢ` in index order, then a
    /// final `tail<TAB>N<TAB>num<TAB>exp` certificate line.
    pub fn load(path: &Path) -> Result<Schedule, ScheduleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScheduleError::BadFile(format!("{}: {e}", path.display())))?;
        Schedule::parse_file(&text)
    }

    pub fn parse_file(text: &str) -> Result<Schedule, ScheduleError> {
        let mut levels = Vec::new();
        let mut cert: Option<(usize, Dyadic)> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || ScheduleError::BadFile(format!("line {}: {raw:?}", lineno + 1));
            if fields[0] == "tail" {
                if fields.len() != 4 {
                    return Err(bad());
                }
                let n: usize = fields[1].parse().map_err(|_| bad())?;
                let num: u64 = fields[2].parse().map_err(|_| bad())?;
                let exp: u64 = fields[3].parse().map_err(|_| bad())?;
                cert = Some((n, Dyadic::from_ratio(num, exp)));
            } else {
                if fields.len() != 2 {
                    return Err(bad());
                }
                let i: usize = fields[0].parse().map_err(|_| bad())?;
                if i != levels.len() {
                    return Err(ScheduleError::BadFile(format!(
                        "line {}: expected index {}, got {i}",
                        lineno + 1,
                        levels.len()
                    )));
                }
                levels.push(fields[1].parse().map_err(|_| bad())?);
            }
        }
        let (tail_at, tail) =
            cert.ok_or_else(|| ScheduleError::BadFile("missing tail certificate line".into()))?;
        Schedule::explicit(levels, tail_at, tail)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Geometric { c } => write!(f, "geometric:{c}"),
            Schedule::Log { a, b } => write!(f, "log:{a},{b}"),
            Schedule::Explicit { levels, .. } => write!(f, "explicit[{}]", levels.len()),
        }
    }
}

fn check_increasing(levels: &[u64]) -> Result<(), ScheduleError> {
    for (i, w) in levels.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(ScheduleError::NotIncreasing { index: i + 1, prev: w[0], next: w[1] });
        }
    }
    Ok(())
}

fn floor_log2(v: u64) -> u64 {
    63 - v.leading_zeros() as u64
}

/// Tail bound for the log family. Indices group into blocks
/// k = ⌊log₂(i+1)⌋ of 2^k terms, each term 2^{-(ak+b)}; later blocks form a
/// series with ratio 2^{1-a} ≤ 1/2, bounded by twice the first block term.
/// Exact for a = 2, a valid upper bound for a > 2.
fn log_tail(a: u32, b: u32, n: usize) -> Dyadic {
    let a = a as i64;
    let b = b as i64;
    let k0 = floor_log2(n as u64 + 1) as i64;
    let remaining = (1u64 << (k0 + 1)) - 1 - n as u64;
    let in_block = if remaining == 0 {
        Dyadic::zero()
    } else {
        Dyadic::new(remaining.into(), (a * k0 + b) as u64)
    };
    let later_blocks = Dyadic::pow2((k0 + 1) * (1 - a) - b + 1);
    &in_block + &later_blocks
}

/// Accepts iff partial sum to the horizon plus the certified tail is strictly
/// below the budget; the certified total is returned as witness.
pub fn validate_schedule(
    schedule: &Schedule,
    budget: &Dyadic,
    horizon: usize,
) -> Result<Dyadic, ScheduleReject> {
    if horizon == 0 {
        return Err(ScheduleReject::BadHorizon);
    }
    let mut prev: Option<u64> = None;
    for i in 0..horizon {
        match schedule.level(i) {
            Ok(l) => {
                if let Some(p) = prev {
                    if l <= p {
                        return Err(ScheduleReject::NotIncreasing(ScheduleError::NotIncreasing {
                            index: i,
                            prev: p,
                            next: l,
                        }));
                    }
                }
                prev = Some(l);
            }
            Err(e) => return Err(ScheduleReject::NotCertified(e)),
        }
    }
    let partial = schedule.partial_sum(horizon).map_err(ScheduleReject::NotCertified)?;
    let tail = schedule.tail_bound(horizon).map_err(ScheduleReject::NotCertified)?;
    let total = &partial + &tail;
    if &total < budget {
        Ok(total)
    } else {
        Err(ScheduleReject::ExceedsBudget { total, budget: budget.clone() })
    }
}

/// Levels at which a prefix of the given string sits, i.e. all i with
/// ℓᵢ ≤ |s|. Returns the largest such index, or None when |s| < ℓ₀.
pub fn deepest_level_index(schedule: &Schedule, len: u64) -> Option<usize> {
    let mut best = None;
    let mut i = 0usize;
    while let Ok(l) = schedule.level(i) {
        if l > len {
            break;
        }
        best = Some(i);
        i += 1;
    }
    best
}

/// Convenience for tests and the checker: the cylinder measure of a string.
pub fn cylinder_measure(s: &BitString) -> Dyadic {
    Dyadic::cylinder(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_levels_and_terms() {
        let s = Schedule::geometric(2);
        assert_eq!(s.level(0).unwrap(), 2);
        assert_eq!(s.level(3).unwrap(), 8);
        assert_eq!(s.term(1).unwrap(), Dyadic::from_ratio(1, 3));
        assert_eq!(s.level_index(6), Some(2));
        assert_eq!(s.level_index(5), None);
    }

    #[test]
    fn log_family_matches_hand_evaluation() {
        // ℓᵢ = i + 2⌊log₂(i+1)⌋ + 3 at i = 0..3 gives 3, 6, 7, 10.
        let s = Schedule::log(2, 3).unwrap();
        let got: Vec<u64> = (0..4).map(|i| s.level(i).unwrap()).collect();
        assert_eq!(got, vec![3, 6, 7, 10]);
    }

    #[test]
    fn from_redundancy_constant_plus_index() {
        // g(i) = i + 2 gives the geometric levels 2, 4, 6, ...
        let g: Vec<u64> = (0..8).map(|i| i + 2).collect();
        let s = Schedule::from_redundancy(&g, 8, Dyadic::pow2(-9)).unwrap();
        for i in 0..8 {
            assert_eq!(s.level(i).unwrap(), 2 * i as u64 + 2);
        }
    }

    #[test]
    fn from_redundancy_rejects_decreasing_levels() {
        // g dropping by 2 between consecutive indices makes ℓ non-increasing.
        let err = Schedule::from_redundancy(&[5, 3], 2, Dyadic::zero()).unwrap_err();
        assert!(matches!(err, ScheduleError::NotIncreasing { .. }));
    }

    #[test]
    fn validate_geometric_total_is_one_half() {
        let s = Schedule::geometric(2);
        let total = validate_schedule(&s, &Dyadic::one(), 10).unwrap();
        assert_eq!(total, Dyadic::from_ratio(1, 1));
    }

    #[test]
    fn validate_rejects_identity_levels() {
        // ℓᵢ = i makes every term 1; the partial sum alone reaches the budget.
        let levels: Vec<u64> = (0..4).collect();
        let s = Schedule::explicit(levels, 4, Dyadic::zero()).unwrap();
        let err = validate_schedule(&s, &Dyadic::one(), 4).unwrap_err();
        assert!(matches!(err, ScheduleReject::ExceedsBudget { .. }));
    }

    #[test]
    fn validate_rejects_non_increasing() {
        let s = Schedule::Explicit { levels: vec![2, 2, 3], tail_at: 3, tail: Dyadic::zero() };
        let err = validate_schedule(&s, &Dyadic::one(), 3).unwrap_err();
        assert!(matches!(err, ScheduleReject::NotIncreasing(_)));
    }

    #[test]
    fn validate_is_strict_at_the_budget() {
        // Total exactly 1/2 must be rejected against budget 1/2.
        let s = Schedule::geometric(2);
        let err = validate_schedule(&s, &Dyadic::from_ratio(1, 1), 8).unwrap_err();
        assert!(matches!(err, ScheduleReject::ExceedsBudget { .. }));
        validate_schedule(&s, &Dyadic::from_ratio(3, 2), 8).unwrap();
    }

    #[test]
    fn log_tail_dominates_brute_force_summation() {
        // Verify the certificate by brute-force term summation far past the
        // horizon, for several starting points and both supported families.
        for (a, b) in [(2u32, 3u32), (2, 5), (3, 3)] {
            let s = Schedule::log(a, b).unwrap();
            for n in 0..40usize {
                let mut brute = Dyadic::zero();
                for i in n..4000 {
                    brute += &s.term(i).unwrap();
                }
                let bound = s.tail_bound(n).unwrap();
                assert!(bound >= brute, "tail({n}) for log:{a},{b}: {bound} < {brute}");
                // Pointwise floor: the bound covers at least its own first term.
                assert!(bound >= s.term(n).unwrap());
            }
        }
    }

    #[test]
    fn tail_bounds_are_non_increasing_and_coherent() {
        for s in [Schedule::geometric(2), Schedule::log(2, 3).unwrap()] {
            for n in 0..32usize {
                let here = s.tail_bound(n).unwrap();
                let next = s.tail_bound(n + 1).unwrap();
                assert!(here >= next);
                // B(N) ≥ 2^{N-ℓ_N} + B(N+1): dropping a term costs its value.
                assert!(here >= &next + &s.term(n).unwrap());
            }
        }
    }

    #[test]
    fn explicit_tail_extends_certificate_downwards() {
        let s = Schedule::explicit(vec![2, 4, 6, 8], 4, Dyadic::pow2(-5)).unwrap();
        // tail(2) = term(2) + term(3) + cert = 2^-4 + 2^-5 + 2^-5 = 1/8.
        assert_eq!(s.tail_bound(2).unwrap(), Dyadic::from_ratio(1, 3));
        assert!(s.tail_bound(5).is_err());
        assert!(s.level(4).is_err());
    }

    #[test]
    fn parse_mini_language() {
        assert_eq!(Schedule::parse("geometric:2").unwrap(), Schedule::geometric(2));
        assert_eq!(Schedule::parse("log:2,3").unwrap(), Schedule::log(2, 3).unwrap());
        assert!(Schedule::parse("log:1,3").is_err());
        assert!(Schedule::parse("fibonacci:7").is_err());
    }

    #[test]
    fn parse_file_roundtrip() {
        let text = "# comment\n0\t2\n1\t4\n2\t6\ntail\t3\t1\t4\n";
        let s = Schedule::parse_file(text).unwrap();
        assert_eq!(s.level(2).unwrap(), 6);
        assert_eq!(s.tail_bound(3).unwrap(), Dyadic::from_ratio(1, 4));
        assert!(Schedule::parse_file("0\t2\n").is_err());
    }
}
