//! Input tuples `(g, r, d, k)`, their Euclidean decomposition, the
//! Brill–Noether number and the classification into construction cases.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ClassifyError, ParamsError};

/// Largest absolute value accepted for any parameter.
///
/// Every quantity the engine derives is a polynomial of degree at most three
/// in the parameters, so with this bound all intermediate values fit in an
/// `i128` without overflow.
pub const PARAM_LIMIT: i64 = 1 << 31;

/// A coherent-system type: genus, rank, degree and number of sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Params {
    pub g: i64,
    pub r: i64,
    pub d: i64,
    pub k: i64,
}

impl Params {
    /// Validates `g ≥ 2`, `r ≥ 1`, `d ≥ 0`, `k ≥ 1`.
    ///
    /// `k ≤ r` is accepted here; it is only rejected by [`classify`].
    pub fn new(g: i64, r: i64, d: i64, k: i64) -> Result<Self, ParamsError> {
        for (name, value) in [("g", g), ("r", r), ("d", d), ("k", k)] {
            if value.abs() > PARAM_LIMIT {
                return Err(ParamsError::OutOfRange { name, value });
            }
        }
        if g < 2 {
            return Err(ParamsError::GenusTooSmall(g));
        }
        if r < 1 {
            return Err(ParamsError::RankNotPositive(r));
        }
        if d < 0 {
            return Err(ParamsError::NegativeDegree(d));
        }
        if k < 1 {
            return Err(ParamsError::NoSections(k));
        }
        Ok(Self { g, r, d, k })
    }

    pub fn decompose(&self) -> Decomposition {
        decompose(self)
    }

    pub fn rho(&self) -> i128 {
        brill_noether_rho(self)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(g={}, r={}, d={}, k={})",
            self.g, self.r, self.d, self.k
        )
    }
}

/// `d = r·d1 + d2`, `k = r·k1 + k2` with `0 ≤ d2, k2 < r`, plus
/// `h = gcd(d, r)`, `rbar = r/h`, `dbar = d/h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub d1: i64,
    pub d2: i64,
    pub k1: i64,
    pub k2: i64,
    pub h: i64,
    pub rbar: i64,
    pub dbar: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn decompose(p: &Params) -> Decomposition {
    let h = gcd(p.d, p.r);
    Decomposition {
        d1: p.d.div_euclid(p.r),
        d2: p.d.rem_euclid(p.r),
        k1: p.k.div_euclid(p.r),
        k2: p.k.rem_euclid(p.r),
        h,
        rbar: p.r / h,
        dbar: p.d / h,
    }
}

/// `ρ = r²(g−1) + 1 − k(k − d + r(g−1))` for an arbitrary integer tuple.
///
/// Exact for all arguments with absolute value at most [`PARAM_LIMIT`].
pub fn rho(g: i64, r: i64, d: i64, k: i64) -> i128 {
    let (g, r, d, k) = (g as i128, r as i128, d as i128, k as i128);
    r * r * (g - 1) + 1 - k * (k - d + r * (g - 1))
}

pub fn brill_noether_rho(p: &Params) -> i128 {
    rho(p.g, p.r, p.d, p.k)
}

/// The four construction regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// `d + r(1−g) ≥ k`: generic bundle, sections vary in a Grassmannian.
    LargeSections,
    /// `d2 < k2`.
    SmallA,
    /// `0 ≠ d2 ≥ k2`.
    SmallB,
    /// `d2 = k2 = 0`.
    SmallC,
}

impl CaseTag {
    pub const ALL: [CaseTag; 4] = [
        CaseTag::LargeSections,
        CaseTag::SmallA,
        CaseTag::SmallB,
        CaseTag::SmallC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::LargeSections => "LargeSections",
            CaseTag::SmallA => "SmallA",
            CaseTag::SmallB => "SmallB",
            CaseTag::SmallC => "SmallC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The inequalities checked during classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// `d + r(1−g) ≥ k`.
    LargeSections,
    /// `(*)`: `g − (k1+1)(g − d1 + k1 − 1) ≥ 1`.
    Star,
    /// `(**)`: `g − k1(g − d1 + k1 − 1) > 1`.
    DoubleStar,
    /// `(***)`: `g − (k1+1)(g − d1 + k1) ≥ 1`.
    TripleStar,
    /// `g − d1 + k1 ≥ 1`, required alongside `(***)`.
    DeficiencyA,
    /// `g + k1 − d1 ≥ 2`, required alongside `(*)`.
    DeficiencyB,
}

impl Hypothesis {
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::LargeSections => "d+r(1-g)>=k",
            Hypothesis::Star => "(*)",
            Hypothesis::DoubleStar => "(**)",
            Hypothesis::TripleStar => "(***)",
            Hypothesis::DeficiencyA => "g-d1+k1>=1",
            Hypothesis::DeficiencyB => "g+k1-d1>=2",
        }
    }
}

/// One evaluated inequality `value ≥ bound` (or `value > bound` when strict).
///
/// `factor` and `term` are recorded for the product-form hypotheses so that a
/// failure can be printed as `g−factor·term = value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub value: i128,
    pub bound: i128,
    pub strict: bool,
    pub factor: Option<i128>,
    pub term: Option<i128>,
}

impl HypothesisCheck {
    fn at_least(hypothesis: Hypothesis, value: i128, bound: i128) -> Self {
        Self {
            hypothesis,
            value,
            bound,
            strict: false,
            factor: None,
            term: None,
        }
    }

    fn with_product(mut self, factor: i128, term: i128) -> Self {
        self.factor = Some(factor);
        self.term = Some(term);
        self
    }

    pub fn holds(&self) -> bool {
        if self.strict {
            self.value > self.bound
        } else {
            self.value >= self.bound
        }
    }

    /// `value − bound`; negative (or zero for strict checks) on failure.
    pub fn margin(&self) -> i128 {
        self.value - self.bound
    }
}

impl fmt::Display for HypothesisCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds() { "holds" } else { "fails" };
        let rel = match (self.holds(), self.strict) {
            (true, false) => "≥",
            (true, true) => ">",
            (false, false) => "<",
            (false, true) => "≤",
        };
        write!(f, "{} {}: ", self.hypothesis.label(), verdict)?;
        if let (Some(factor), Some(term)) = (self.factor, self.term) {
            let g = self.value + factor * term;
            write!(f, "{}−{}·{} = ", g, factor, term)?;
        }
        write!(f, "{} {} {}", self.value, rel, self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub case: CaseTag,
    /// Every inequality evaluated for the chosen case, all of which hold.
    pub checks: Vec<HypothesisCheck>,
}

impl Classification {
    pub fn check(&self, h: Hypothesis) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.hypothesis == h)
    }
}

/// The case a tuple falls into, without evaluating its hypotheses.
pub fn case_of(p: &Params) -> CaseTag {
    let dec = decompose(p);
    if p.d + p.r * (1 - p.g) >= p.k {
        CaseTag::LargeSections
    } else if dec.d2 < dec.k2 {
        CaseTag::SmallA
    } else if dec.d2 != 0 {
        CaseTag::SmallB
    } else {
        CaseTag::SmallC
    }
}

/// All hypothesis inequalities relevant to `case`, evaluated at `p`.
pub fn hypothesis_checks(p: &Params, case: CaseTag) -> Vec<HypothesisCheck> {
    let dec = decompose(p);
    let (g, r, d, k) = (p.g as i128, p.r as i128, p.d as i128, p.k as i128);
    let (d1, k1) = (dec.d1 as i128, dec.k1 as i128);
    match case {
        CaseTag::LargeSections => vec![HypothesisCheck::at_least(
            Hypothesis::LargeSections,
            d + r * (1 - g),
            k,
        )],
        CaseTag::SmallA => {
            let t = g - d1 + k1;
            vec![
                HypothesisCheck::at_least(Hypothesis::TripleStar, g - (k1 + 1) * t, 1)
                    .with_product(k1 + 1, t),
                HypothesisCheck::at_least(Hypothesis::DeficiencyA, t, 1),
            ]
        }
        CaseTag::SmallB => {
            let t = g - d1 + k1 - 1;
            vec![
                HypothesisCheck::at_least(Hypothesis::Star, g - (k1 + 1) * t, 1)
                    .with_product(k1 + 1, t),
                HypothesisCheck::at_least(Hypothesis::DeficiencyB, g + k1 - d1, 2),
            ]
        }
        CaseTag::SmallC => {
            let t = g - d1 + k1 - 1;
            let mut c = HypothesisCheck::at_least(Hypothesis::DoubleStar, g - k1 * t, 1)
                .with_product(k1, t);
            c.strict = true;
            vec![c]
        }
    }
}

/// Classifies `p` into one of the four construction cases and checks the
/// hypotheses that case requires.
///
/// `LargeSections` takes precedence; otherwise the case is decided by
/// comparing `d2` with `k2`.
pub fn classify(p: &Params) -> Result<Classification, ClassifyError> {
    if p.k <= p.r {
        return Err(ClassifyError::KLeR { k: p.k, r: p.r });
    }
    let case = case_of(p);
    let checks = hypothesis_checks(p, case);
    if let Some(failed) = checks.iter().find(|c| !c.holds()) {
        return Err(ClassifyError::HypothesisFailed {
            case,
            check: Box::new(*failed),
        });
    }
    Ok(Classification { case, checks })
}
