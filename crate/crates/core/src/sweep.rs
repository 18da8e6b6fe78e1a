//! Lattice sweeps: evaluate the whole pipeline over a range of tuples.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::construct::construct;
use crate::error::ClassifyError;
use crate::ledger::{audit_case, skeleton_ledger};
use crate::oracle::{cross_validate, DEFAULT_ORACLE_BOUND};
use crate::params::{brill_noether_rho, case_of, classify, CaseTag, Params};
use crate::verify::verify;

/// An inclusive range bound of the form `c`, `c·r`, `c·g`, `c·r·g`, plus an
/// optional constant offset, e.g. `12`, `3r`, `5rg`, `r+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bound {
    pub coef: i64,
    pub times_r: bool,
    pub times_g: bool,
    pub offset: i64,
}

impl Bound {
    pub const fn fixed(c: i64) -> Self {
        Self {
            coef: 0,
            times_r: false,
            times_g: false,
            offset: c,
        }
    }

    pub const fn scaled(coef: i64, times_r: bool, times_g: bool, offset: i64) -> Self {
        Self {
            coef,
            times_r,
            times_g,
            offset,
        }
    }

    pub fn eval(&self, g: i64, r: i64) -> i64 {
        let mut v = self.coef;
        if self.times_r {
            v *= r;
        }
        if self.times_g {
            v *= g;
        }
        v + self.offset
    }

    fn uses_r(&self) -> bool {
        self.coef != 0 && self.times_r
    }

    fn uses_g(&self) -> bool {
        self.coef != 0 && self.times_g
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef == 0 || !(self.times_r || self.times_g) {
            return write!(
                f,
                "{}",
                self.offset
                    + if self.times_r || self.times_g {
                        0
                    } else {
                        self.coef
                    }
            );
        }
        if self.coef != 1 {
            write!(f, "{}", self.coef)?;
        }
        if self.times_r {
            write!(f, "r")?;
        }
        if self.times_g {
            write!(f, "g")?;
        }
        match self.offset {
            0 => Ok(()),
            o if o > 0 => write!(f, "+{o}"),
            o => write!(f, "{o}"),
        }
    }
}

impl FromStr for Bound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || format!("cannot parse bound {s:?} (expected e.g. 12, 3r, 5rg, r+1)");
        if t.is_empty() {
            return Err(bad());
        }
        let split = t[1..].find(['+', '-']).map(|i| i + 1);
        let (head, tail) = match split {
            Some(i) => (&t[..i], Some(&t[i..])),
            None => (t.as_str(), None),
        };
        let offset = match tail {
            Some(o) => o.parse::<i64>().map_err(|_| bad())?,
            None => 0,
        };
        let digits_end = head
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_digit() || (i == 0 && c == '-')))
            .map_or(head.len(), |(i, _)| i);
        let (num, vars) = head.split_at(digits_end);
        if vars.is_empty() {
            let c = num.parse::<i64>().map_err(|_| bad())?;
            return Ok(Bound::fixed(c + offset));
        }
        let coef = match num {
            "" => 1,
            "-" => -1,
            n => n.parse::<i64>().map_err(|_| bad())?,
        };
        let (times_r, times_g) = match vars {
            "r" => (true, false),
            "g" => (false, true),
            "rg" | "gr" => (true, true),
            _ => return Err(bad()),
        };
        Ok(Bound::scaled(coef, times_r, times_g, offset))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub lo: Bound,
    pub hi: Bound,
}

impl Range {
    pub const fn fixed(lo: i64, hi: i64) -> Self {
        Self {
            lo: Bound::fixed(lo),
            hi: Bound::fixed(hi),
        }
    }
}

impl FromStr for Range {
    type Err = String;

    /// `lo..hi` or `lo..=hi` (both inclusive), or a single value.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once("..") {
            Some((lo, hi)) => Ok(Range {
                lo: lo.parse()?,
                hi: hi.trim_start_matches('=').parse()?,
            }),
            None => {
                let b: Bound = s.parse()?;
                Ok(Range { lo: b, hi: b })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub g: Range,
    pub r: Range,
    pub k: Range,
    pub d: Range,
    pub case_filter: Option<CaseTag>,
    pub jobs: usize,
    pub fail_fast: bool,
    /// Cross-validate every constructed skeleton against the exhaustive oracle.
    pub oracle: bool,
    pub oracle_bound: i64,
    /// Test hook: the skeleton of this tuple is corrupted before verification.
    pub inject_corruption: Option<Params>,
}

impl Default for SweepConfig {
    /// `g ∈ [2,12]`, `r ∈ [1,5]`, `k ∈ (r,3r]`, `d ∈ [0,5rg]`.
    fn default() -> Self {
        Self {
            g: Range::fixed(2, 12),
            r: Range::fixed(1, 5),
            k: Range {
                lo: Bound::scaled(1, true, false, 1),
                hi: Bound::scaled(3, true, false, 0),
            },
            d: Range {
                lo: Bound::fixed(0),
                hi: Bound::scaled(5, true, true, 0),
            },
            case_filter: None,
            jobs: 1,
            fail_fast: false,
            oracle: false,
            oracle_bound: DEFAULT_ORACLE_BOUND,
            inject_corruption: None,
        }
    }
}

impl SweepConfig {
    /// Bounds on g and r must be constants, bounds on k may use r, and bounds
    /// on d may use r and g.
    pub fn validate(&self) -> Result<(), String> {
        for (name, range) in [("g", &self.g), ("r", &self.r)] {
            if [range.lo, range.hi]
                .iter()
                .any(|b| b.uses_r() || b.uses_g())
            {
                return Err(format!("range for {name} must be constant"));
            }
        }
        if [self.k.lo, self.k.hi].iter().any(Bound::uses_g) {
            return Err("range for k may only depend on r".into());
        }
        if self.jobs == 0 {
            return Err("jobs must be positive".into());
        }
        Ok(())
    }

    /// Every `(g, r, d, k)` in lattice order: g, then r, then k, then d.
    pub fn lattice(&self) -> impl Iterator<Item = (i64, i64, i64, i64)> + '_ {
        let (g_lo, g_hi) = (self.g.lo.eval(0, 0), self.g.hi.eval(0, 0));
        (g_lo..=g_hi).flat_map(move |g| {
            let (r_lo, r_hi) = (self.r.lo.eval(g, 0), self.r.hi.eval(g, 0));
            (r_lo..=r_hi).flat_map(move |r| {
                (self.k.lo.eval(g, r)..=self.k.hi.eval(g, r)).flat_map(move |k| {
                    (self.d.lo.eval(g, r)..=self.d.hi.eval(g, r)).map(move |d| (g, r, d, k))
                })
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Not a valid tuple at all (e.g. g < 2).
    Invalid,
    KLeR,
    HypothesisFailed,
    ConstructionFailed,
    Constructed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TupleOutcome {
    pub g: i64,
    pub r: i64,
    pub d: i64,
    pub k: i64,
    pub stage: Stage,
    pub case: Option<CaseTag>,
    pub rho: Option<i128>,
    pub ledger_total: Option<i128>,
    pub verified: bool,
    pub ledger_matched: bool,
    pub oracle_agrees: Option<bool>,
    /// Why the tuple was not constructed, or which checks failed.
    pub messages: Vec<String>,
}

impl TupleOutcome {
    pub fn hypothesis_satisfied(&self) -> bool {
        matches!(self.stage, Stage::Constructed | Stage::ConstructionFailed)
    }

    pub fn constructed(&self) -> bool {
        self.stage == Stage::Constructed
    }

    /// A hypothesis-satisfying tuple on which something went wrong.
    pub fn failed(&self) -> bool {
        self.hypothesis_satisfied()
            && !(self.constructed()
                && self.verified
                && self.ledger_matched
                && self.oracle_agrees != Some(false))
    }

    pub fn to_text(&self) -> String {
        let mut line = format!("g={} r={} d={} k={}", self.g, self.r, self.d, self.k);
        if let Some(case) = self.case {
            line += &format!(" {}", case.name());
        }
        let verdict = match self.stage {
            Stage::Invalid => "invalid",
            Stage::KLeR => "not-covered",
            Stage::HypothesisFailed => "hypothesis-failed",
            Stage::ConstructionFailed => "FAIL",
            Stage::Constructed if self.failed() => "FAIL",
            Stage::Constructed => "ok",
        };
        if let (Some(rho), Some(total)) = (self.rho, self.ledger_total) {
            line += &format!(" rho={rho} ledger={total}");
        }
        if let Some(agrees) = self.oracle_agrees {
            line += if agrees {
                " oracle=agree"
            } else {
                " oracle=DISAGREE"
            };
        }
        line += " ";
        line += verdict;
        if !self.messages.is_empty() {
            line += &format!(" ({})", self.messages.join("; "));
        }
        line
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SweepSummary {
    pub tried: u64,
    pub hypothesis_satisfied: u64,
    pub constructed: u64,
    pub verified: u64,
    pub ledger_matched: u64,
    pub failures: u64,
    pub stopped_early: bool,
}

impl SweepSummary {
    fn record(&mut self, o: &TupleOutcome) {
        self.tried += 1;
        self.hypothesis_satisfied += o.hypothesis_satisfied() as u64;
        self.constructed += o.constructed() as u64;
        self.verified += o.verified as u64;
        self.ledger_matched += o.ledger_matched as u64;
        self.failures += o.failed() as u64;
    }

    pub fn to_text(&self) -> String {
        format!(
            "tried {} / hypothesis-satisfied {} / constructed {} / verified {} / ledger-matched {} / failures {}{}",
            self.tried,
            self.hypothesis_satisfied,
            self.constructed,
            self.verified,
            self.ledger_matched,
            self.failures,
            if self.stopped_early { " (stopped at first failure)" } else { "" }
        )
    }
}

/// Runs classify, construct, verify and the ledger audit on one tuple.
pub fn evaluate(g: i64, r: i64, d: i64, k: i64, cfg: &SweepConfig) -> TupleOutcome {
    let mut out = TupleOutcome {
        g,
        r,
        d,
        k,
        stage: Stage::Invalid,
        case: None,
        rho: None,
        ledger_total: None,
        verified: false,
        ledger_matched: false,
        oracle_agrees: None,
        messages: Vec::new(),
    };
    let p = match Params::new(g, r, d, k) {
        Ok(p) => p,
        Err(e) => {
            out.messages.push(e.to_string());
            return out;
        }
    };
    out.case = Some(case_of(&p));
    let classification = match classify(&p) {
        Ok(c) => c,
        Err(e) => {
            out.stage = match e {
                ClassifyError::KLeR { .. } => Stage::KLeR,
                ClassifyError::HypothesisFailed { .. } => Stage::HypothesisFailed,
            };
            out.messages.push(e.to_string());
            return out;
        }
    };
    let rho = brill_noether_rho(&p);
    out.rho = Some(rho);
    let audit = audit_case(&p, classification.case);
    out.ledger_total = Some(audit.ledger_total);
    let mut skeleton = match construct(&p) {
        Ok(s) => s,
        Err(e) => {
            out.stage = Stage::ConstructionFailed;
            out.messages.push(e.to_string());
            return out;
        }
    };
    out.stage = Stage::Constructed;
    if cfg.inject_corruption == Some(p) {
        skeleton.b += 1;
    }
    let report = verify(&skeleton);
    out.verified = report.passed() && report.node_pairing_exact.passed();
    for (name, c) in report.checks() {
        if c.status == crate::verify::Status::Fail {
            let w = c.witness.as_deref().unwrap_or("");
            out.messages.push(format!("{name}: {w}"));
        }
    }
    let per_component = skeleton_ledger(&skeleton).total();
    out.ledger_matched = audit.matches && per_component == rho;
    if !audit.matches {
        out.messages
            .push(format!("ledger total {} ≠ ρ = {rho}", audit.ledger_total));
    }
    if per_component != rho {
        out.messages
            .push(format!("per-component ledger {per_component} ≠ ρ = {rho}"));
    }
    if cfg.oracle {
        let cv = cross_validate(&skeleton, cfg.oracle_bound);
        out.oracle_agrees = Some(cv.agrees());
        for dis in &cv.disagreements {
            out.messages.push(format!(
                "oracle disagrees at {} {}: greedy {}, oracle {}",
                dis.kind, dis.index, dis.greedy, dis.oracle
            ));
        }
    }
    out
}

/// Evaluates the lattice of `cfg`, handing each outcome to `sink` in lattice
/// order. Tuples outside `case_filter` are skipped silently.
pub fn run_sweep<F>(cfg: &SweepConfig, mut sink: F) -> Result<SweepSummary, String>
where
    F: FnMut(&TupleOutcome),
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| e.to_string())?;
    let chunk = 256 * cfg.jobs;
    let mut summary = SweepSummary::default();
    let mut lattice = cfg.lattice().filter(|&(g, r, d, k)| match cfg.case_filter {
        None => true,
        Some(c) => Params::new(g, r, d, k).is_ok_and(|p| case_of(&p) == c),
    });
    loop {
        let batch: Vec<_> = lattice.by_ref().take(chunk).collect();
        if batch.is_empty() {
            break;
        }
        let outcomes: Vec<TupleOutcome> = pool.install(|| {
            batch
                .par_iter()
                .map(|&(g, r, d, k)| evaluate(g, r, d, k, cfg))
                .collect()
        });
        for o in &outcomes {
            summary.record(o);
            sink(o);
            if cfg.fail_fast && o.failed() {
                summary.stopped_early = true;
                return Ok(summary);
            }
        }
    }
    Ok(summary)
}
