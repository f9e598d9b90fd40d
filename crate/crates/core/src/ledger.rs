//! Query and gate accounting.
//!
//! Charges follow the asymptotic cost statements with leading constant 1 and
//! natural logarithms floored at 1 (see [`lg`]). Counters saturate at
//! `u128::MAX`, which also represents an unbounded charge.

use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{ensure, Result};

/// `max(1, ln x)`, the logarithm used in cost formulas.
pub fn lg(x: f64) -> f64 {
    if x > std::f64::consts::E {
        x.ln()
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Counter {
    QueriesUH,
    QueriesStatePrep,
    ElementaryGates,
    MaxQubits,
    ClassicalSamples,
}

impl Counter {
    pub const ALL: [Counter; 5] = [
        Counter::QueriesUH,
        Counter::QueriesStatePrep,
        Counter::ElementaryGates,
        Counter::MaxQubits,
        Counter::ClassicalSamples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Counter::QueriesUH => "queries_uh",
            Counter::QueriesStatePrep => "queries_state_prep",
            Counter::ElementaryGates => "elementary_gates",
            Counter::MaxQubits => "max_qubits",
            Counter::ClassicalSamples => "classical_samples",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub queries_uh: u128,
    pub queries_state_prep: u128,
    pub elementary_gates: u128,
    pub max_qubits: u128,
    pub classical_samples: u128,
}

/// Rounds a non-negative real charge up to an integer, saturating.
fn to_units(amount: f64) -> Result<u128> {
    ensure!(!amount.is_nan() && amount >= 0.0, Parameter, "charge must be non-negative, got {amount}");
    // `as` saturates for values beyond u128::MAX and for +inf.
    Ok(amount.ceil() as u128)
}

impl CostLedger {
    pub fn get(&self, c: Counter) -> u128 {
        match c {
            Counter::QueriesUH => self.queries_uh,
            Counter::QueriesStatePrep => self.queries_state_prep,
            Counter::ElementaryGates => self.elementary_gates,
            Counter::MaxQubits => self.max_qubits,
            Counter::ClassicalSamples => self.classical_samples,
        }
    }

    fn slot(&mut self, c: Counter) -> &mut u128 {
        match c {
            Counter::QueriesUH => &mut self.queries_uh,
            Counter::QueriesStatePrep => &mut self.queries_state_prep,
            Counter::ElementaryGates => &mut self.elementary_gates,
            Counter::MaxQubits => &mut self.max_qubits,
            Counter::ClassicalSamples => &mut self.classical_samples,
        }
    }

    /// Adds to a counter; `MaxQubits` records a running maximum instead.
    pub fn charge_units(&mut self, c: Counter, units: u128) {
        let slot = self.slot(c);
        *slot = if c == Counter::MaxQubits { (*slot).max(units) } else { slot.saturating_add(units) };
    }

    pub fn charge(&mut self, c: Counter, amount: f64) -> Result<()> {
        let units = to_units(amount)?;
        self.charge_units(c, units);
        Ok(())
    }

    pub fn merge(&mut self, other: &CostLedger) {
        for c in Counter::ALL {
            self.charge_units(c, other.get(c));
        }
    }

    pub fn entries(&self) -> [(&'static str, u128); 5] {
        Counter::ALL.map(|c| (c.name(), self.get(c)))
    }
}

impl fmt::Display for CostLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, v)) in self.entries().iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{name}={v}")?;
        }
        Ok(())
    }
}

/// Shared, thread-safe ledger handle. Clones charge the same ledger.
#[derive(Debug, Clone, Default)]
pub struct LedgerHandle(Arc<Mutex<CostLedger>>);

impl LedgerHandle {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, CostLedger> {
        // A panic while holding the lock cannot leave a ledger half-updated.
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn charge(&self, c: Counter, amount: f64) -> Result<()> {
        let units = to_units(amount)?;
        self.lock().charge_units(c, units);
        Ok(())
    }

    pub fn merge(&self, other: &CostLedger) {
        self.lock().merge(other);
    }

    pub fn snapshot(&self) -> CostLedger {
        *self.lock()
    }

    pub fn same_as(&self, other: &LedgerHandle) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charges_accumulate() {
        let l = LedgerHandle::new();
        l.charge(Counter::QueriesUH, 5.0).unwrap();
        l.charge(Counter::QueriesUH, 5.0).unwrap();
        assert_eq!(l.snapshot().queries_uh, 10);
    }

    #[test]
    fn merge_sums_and_maxes() {
        let mut a = CostLedger { queries_uh: 3, max_qubits: 5, ..Default::default() };
        let b = CostLedger { queries_uh: 4, max_qubits: 7, ..Default::default() };
        a.merge(&b);
        assert_eq!(a.queries_uh, 7);
        assert_eq!(a.max_qubits, 7);
    }

    #[test]
    fn negative_or_nan_charge_is_rejected() {
        let l = LedgerHandle::new();
        assert!(l.charge(Counter::ElementaryGates, -1.0).is_err());
        assert!(l.charge(Counter::ElementaryGates, f64::NAN).is_err());
        assert_eq!(l.snapshot(), CostLedger::default());
    }

    #[test]
    fn saturates_instead_of_overflowing() {
        let mut l = CostLedger::default();
        l.charge(Counter::QueriesUH, f64::INFINITY).unwrap();
        l.charge(Counter::QueriesUH, 1.0).unwrap();
        assert_eq!(l.queries_uh, u128::MAX);
    }

    #[test]
    fn concurrent_charging_matches_sequential() {
        let l = LedgerHandle::new();
        std::thread::scope(|s| {
            for _ in 0..8 {
                let l = l.clone();
                s.spawn(move || {
                    for _ in 0..1000 {
                        l.charge(Counter::ClassicalSamples, 1.0).unwrap();
                    }
                });
            }
        });
        assert_eq!(l.snapshot().classical_samples, 8000);
    }

    #[test]
    fn log_is_floored() {
        assert_eq!(lg(0.5), 1.0);
        assert_eq!(lg(1.0), 1.0);
        assert!((lg(100.0) - 100f64.ln()).abs() < 1e-15);
    }
}
