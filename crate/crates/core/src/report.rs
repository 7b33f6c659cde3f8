use std::fmt;

use crate::coinpress::IntervalState;
use crate::ustat::family::Violation;

/// What an estimator publishes, plus the non-private diagnostics that
/// produced it. Diagnostics are for auditing; they are not private outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport<T> {
    pub estimate: T,
    /// Half-width of the confidence interval the estimator vouches for
    /// (at its own constant confidence level).
    pub radius: T,
    /// Scale of the final noise draw.
    pub noise_scale: T,
    pub epsilon: f64,
    pub diagnostics: Diagnostics<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics<T> {
    pub l_statistic: Option<usize>,
    pub bad_count: Option<usize>,
    pub iterations: Option<usize>,
    pub smooth_bound: Option<T>,
    /// Intervals visited by the iterative estimators, starting with `[-R, R]`.
    pub intervals: Vec<IntervalState<T>>,
    pub preconditions_met: Option<bool>,
}

/// Why an estimator declined to produce a value.
#[derive(Debug, Clone, PartialEq)]
pub enum BottomReason {
    IrregularFamily(Violation),
    NegativeDensityProxy { nu: f64 },
    MajorityBottom { bottoms: usize, chunks: usize },
}

impl fmt::Display for BottomReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BottomReason::IrregularFamily(v) => write!(f, "irregular subset family: {v}"),
            BottomReason::NegativeDensityProxy { nu } => {
                write!(f, "private edge density {nu} is negative")
            }
            BottomReason::MajorityBottom { bottoms, chunks } => {
                write!(f, "{bottoms} of {chunks} chunks returned bottom")
            }
        }
    }
}

/// Result of an estimator that may legitimately refuse to answer (⊥).
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<R> {
    Value(R),
    Bottom(BottomReason),
}

impl<R> Outcome<R> {
    pub fn value(self) -> Option<R> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Bottom(_) => None,
        }
    }

    pub fn as_value(&self) -> Option<&R> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Bottom(_) => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Outcome::Bottom(_))
    }

    pub fn map<S>(self, f: impl FnOnce(R) -> S) -> Outcome<S> {
        match self {
            Outcome::Value(v) => Outcome::Value(f(v)),
            Outcome::Bottom(b) => Outcome::Bottom(b),
        }
    }

    #[track_caller]
    pub fn expect_value(self, msg: &str) -> R {
        match self {
            Outcome::Value(v) => v,
            Outcome::Bottom(b) => panic!("{msg}: {b}"),
        }
    }
}
