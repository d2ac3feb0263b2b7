//! Residual reports: named exact residuals from axiom and identity checks.
//!
//! A check never answers just "pass/fail" — it reports, per named condition,
//! the largest absolute value of any residual entry and where it occurred, so
//! a failing input can be diagnosed from the report alone.

use std::fmt;

use num_traits::Zero;

use crate::linalg::Rational;

/// One named residual from a structured check.
#[derive(Debug, Clone)]
pub struct ResidualItem {
    /// Which condition this residual belongs to (e.g. `"jacobi-defect"`).
    pub name: String,
    /// Largest absolute value over all entries of the residual; exact.
    pub max_abs: Rational,
    /// Human-readable location of one offending entry, when nonzero.
    pub detail: Option<String>,
    /// True when the condition has no content for this input (e.g. an anchor
    /// condition over a point); a vacuous item always counts as satisfied.
    pub vacuous: bool,
}

impl ResidualItem {
    pub fn zero(name: &str) -> Self {
        ResidualItem {
            name: name.to_string(),
            max_abs: Rational::zero(),
            detail: None,
            vacuous: false,
        }
    }

    pub fn vacuous(name: &str, why: &str) -> Self {
        ResidualItem {
            name: name.to_string(),
            max_abs: Rational::zero(),
            detail: Some(why.to_string()),
            vacuous: true,
        }
    }

    pub fn new(name: &str, max_abs: Rational, detail: Option<String>) -> Self {
        ResidualItem {
            name: name.to_string(),
            max_abs,
            detail,
            vacuous: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.vacuous || self.max_abs.is_zero()
    }
}

/// The full outcome of a structured check: one item per verified condition.
#[derive(Debug, Clone, Default)]
pub struct ResidualReport {
    pub items: Vec<ResidualItem>,
}

impl ResidualReport {
    pub fn new(items: Vec<ResidualItem>) -> Self {
        ResidualReport { items }
    }

    pub fn empty() -> Self {
        ResidualReport { items: Vec::new() }
    }

    pub fn push(&mut self, item: ResidualItem) {
        self.items.push(item);
    }

    /// True when every (non-vacuous) residual is exactly zero.
    pub fn all_zero(&self) -> bool {
        self.items.iter().all(ResidualItem::is_zero)
    }

    /// Names of the conditions with nonzero residual.
    pub fn failing(&self) -> Vec<&str> {
        self.items
            .iter()
            .filter(|it| !it.is_zero())
            .map(|it| it.name.as_str())
            .collect()
    }

    pub fn item(&self, name: &str) -> Option<&ResidualItem> {
        self.items.iter().find(|it| it.name == name)
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for it in &self.items {
            if it.vacuous {
                writeln!(
                    f,
                    "  {:<24} vacuous ({})",
                    it.name,
                    it.detail.as_deref().unwrap_or("no content for this input")
                )?;
            } else if it.max_abs.is_zero() {
                writeln!(f, "  {:<24} residual 0", it.name)?;
            } else {
                write!(f, "  {:<24} residual max |{}|", it.name, it.max_abs)?;
                if let Some(d) = &it.detail {
                    write!(f, " at {d}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}
