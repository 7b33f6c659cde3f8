//! Pure epsilon accounting: sequential spends add, parallel branches over
//! disjoint data cost the most expensive branch.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Relative slack when comparing float sums against the total, so that
/// `eps/2 + eps/2` never trips the limit through rounding.
const REL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    Sequential,
    /// Maximum over this many branches on disjoint data.
    Parallel {
        branches: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
    pub composition: Composition,
    /// Entries recorded inside the most expensive branch of a parallel scope.
    pub detail: Vec<LedgerEntry>,
}

/// Append-only epsilon ledger with a hard cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyBudget {
    total: f64,
    spent: f64,
    ledger: Vec<LedgerEntry>,
}

impl PrivacyBudget {
    pub fn new(total: f64) -> Result<Self> {
        if !(total.is_finite() && total > 0.0) {
            return Err(invalid(format!("total epsilon must be positive and finite, got {total}")));
        }
        Ok(Self { total, spent: 0.0, ledger: Vec::new() })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        (self.total - self.spent).max(0.0)
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    fn check(&self, eps: f64) -> Result<()> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(invalid(format!("epsilon must be non-negative and finite, got {eps}")));
        }
        if self.spent + eps > self.total * (1.0 + REL_TOLERANCE) {
            return Err(Error::BudgetExhausted { requested: eps, remaining: self.remaining() });
        }
        Ok(())
    }

    /// Debit `eps` sequentially.
    pub fn spend(&mut self, label: impl Into<String>, eps: f64) -> Result<()> {
        self.check(eps)?;
        self.spent += eps;
        self.ledger.push(LedgerEntry {
            label: label.into(),
            epsilon: eps,
            composition: Composition::Sequential,
            detail: Vec::new(),
        });
        Ok(())
    }

    /// Open a scope whose branches run on disjoint parts of the data.
    /// Each branch may spend up to what remains here.
    pub fn parallel(&self, label: impl Into<String>) -> ParallelScope {
        ParallelScope { label: label.into(), cap: self.remaining(), branches: Vec::new() }
    }

    /// Debit the most expensive branch of `scope`.
    pub fn commit(&mut self, scope: ParallelScope) -> Result<f64> {
        let worst =
            scope.branches.iter().enumerate().max_by(|a, b| a.1.spent.total_cmp(&b.1.spent)).map(|(i, b)| (i, b.spent));
        let (eps, detail) = match worst {
            Some((i, eps)) => (eps, scope.branches[i].ledger.clone()),
            None => (0.0, Vec::new()),
        };
        self.check(eps)?;
        self.spent += eps;
        self.ledger.push(LedgerEntry {
            label: scope.label,
            epsilon: eps,
            composition: Composition::Parallel { branches: scope.branches.len() },
            detail,
        });
        Ok(eps)
    }
}

impl fmt::Display for PrivacyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "privacy ledger: spent {} of {}", self.spent, self.total)?;
        for e in &self.ledger {
            match e.composition {
                Composition::Sequential => writeln!(f, "  {:<32} {}", e.label, e.epsilon)?,
                Composition::Parallel { branches } => {
                    writeln!(f, "  {:<32} {} (max over {branches} disjoint branches)", e.label, e.epsilon)?
                }
            }
        }
        Ok(())
    }
}

/// Branch budgets collected before being charged as one parallel step.
#[derive(Debug)]
pub struct ParallelScope {
    label: String,
    cap: f64,
    branches: Vec<PrivacyBudget>,
}

impl ParallelScope {
    /// A fresh budget for one branch.
    pub fn branch(&self) -> PrivacyBudget {
        PrivacyBudget { total: self.cap, spent: 0.0, ledger: Vec::new() }
    }

    pub fn absorb(&mut self, branch: PrivacyBudget) {
        self.branches.push(branch);
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }
}
