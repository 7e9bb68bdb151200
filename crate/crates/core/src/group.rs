//! Finite groups as explicit Cayley tables, scalar signals on a group, and
//! the three index-shuffling primitives everything else is built from:
//! group convolution, the involution `v* = (v(g⁻¹))_g`, and the shift
//! operator `(S_g x)_h = x(g⁻¹h)`.
//!
//! The identity element is pinned to index 0 in every representation, so
//! `δ_identity` is always `[1, 0, …, 0]` and serialized tables are canonical.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk description of a group. `Table` carries an explicit Cayley table
/// whose identity must sit at index 0; `Cyclic`/`Product` are rebuilt from
/// their parameters on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupDescriptor {
    Cyclic { n: usize },
    Product { factors: Vec<GroupDescriptor> },
    Table { table: Vec<Vec<usize>> },
}

/// A finite group stored as a full Cayley table.
///
/// `table[g][h] = g·h`, the identity is element 0, and `inverse[g]` is the
/// two-sided inverse of `g`. Groups are immutable after construction and are
/// shared via [`Arc`].
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    size: usize,
    table: Vec<usize>, // row-major, size × size
    inverse: Vec<usize>,
    descriptor: GroupDescriptor,
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.table == other.table
    }
}

impl Eq for FiniteGroup {}

/// A single violated group axiom together with a witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum AxiomViolation {
    /// Row `row` has `len` entries instead of `size`.
    NotSquare { row: usize, len: usize, size: usize },
    /// `table[g][h]` is not a valid element index.
    Closure { g: usize, h: usize, value: usize },
    /// `table[0][g] ≠ g` or `table[g][0] ≠ g`.
    Identity { g: usize },
    /// `(a·b)·c ≠ a·(b·c)`.
    Associativity { a: usize, b: usize, c: usize },
    /// No element `h` satisfies `g·h = h·g = 0`.
    Inverse { g: usize },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::NotSquare { row, len, size } => {
                write!(f, "row {row} has {len} entries, expected {size}")
            }
            AxiomViolation::Closure { g, h, value } => {
                write!(f, "table[{g}][{h}] = {value} is out of range")
            }
            AxiomViolation::Identity { g } => {
                write!(f, "element 0 is not a two-sided identity at g = {g}")
            }
            AxiomViolation::Associativity { a, b, c } => {
                write!(f, "({a}·{b})·{c} ≠ {a}·({b}·{c})")
            }
            AxiomViolation::Inverse { g } => {
                write!(f, "element {g} has no two-sided inverse")
            }
        }
    }
}

/// Outcome of [`validate_table`]: empty means all axioms hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupValidation {
    pub violations: Vec<AxiomViolation>,
}

impl GroupValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively checks the group axioms on a raw table: squareness, closure,
/// identity at index 0, associativity over all triples, and existence of
/// two-sided inverses. Records the first witness per axiom.
pub fn validate_table(table: &[Vec<usize>]) -> GroupValidation {
    let mut violations = Vec::new();
    let n = table.len();

    for (row, entries) in table.iter().enumerate() {
        if entries.len() != n {
            violations.push(AxiomViolation::NotSquare {
                row,
                len: entries.len(),
                size: n,
            });
            return GroupValidation { violations };
        }
    }
    if n == 0 {
        violations.push(AxiomViolation::NotSquare {
            row: 0,
            len: 0,
            size: 0,
        });
        return GroupValidation { violations };
    }

    'closure: for (g, row) in table.iter().enumerate() {
        for (h, &value) in row.iter().enumerate() {
            if value >= n {
                violations.push(AxiomViolation::Closure { g, h, value });
                break 'closure;
            }
        }
    }
    if !violations.is_empty() {
        // With out-of-range entries the remaining checks would index out of bounds.
        return GroupValidation { violations };
    }

    'identity: for (g, row) in table.iter().enumerate() {
        if table[0][g] != g || row[0] != g {
            violations.push(AxiomViolation::Identity { g });
            break 'identity;
        }
    }

    'assoc: for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    violations.push(AxiomViolation::Associativity { a, b, c });
                    break 'assoc;
                }
            }
        }
    }

    'inverse: for (g, row) in table.iter().enumerate() {
        let found = (0..n).any(|h| row[h] == 0 && table[h][g] == 0);
        if !found {
            violations.push(AxiomViolation::Inverse { g });
            break 'inverse;
        }
    }

    GroupValidation { violations }
}

impl FiniteGroup {
    /// The cyclic group Z_n with `table[g][h] = (g+h) mod n`.
    pub fn cyclic(n: usize) -> Result<Arc<FiniteGroup>> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "cyclic group order must be at least 1".into(),
            ));
        }
        let mut table = vec![0usize; n * n];
        for g in 0..n {
            for h in 0..n {
                table[g * n + h] = (g + h) % n;
            }
        }
        let inverse = (0..n).map(|g| (n - g) % n).collect();
        Ok(Arc::new(FiniteGroup {
            size: n,
            table,
            inverse,
            descriptor: GroupDescriptor::Cyclic { n },
        }))
    }

    /// Direct product with lexicographic element indexing:
    /// `(i1, i2) ↦ i1·|G2| + i2`, so the identity `(0,0)` stays at index 0.
    pub fn product(g1: &Arc<FiniteGroup>, g2: &Arc<FiniteGroup>) -> Arc<FiniteGroup> {
        let (n1, n2) = (g1.size, g2.size);
        let n = n1 * n2;
        let mut table = vec![0usize; n * n];
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                for b1 in 0..n1 {
                    for b2 in 0..n2 {
                        let a = a1 * n2 + a2;
                        let b = b1 * n2 + b2;
                        table[a * n + b] = g1.mul(a1, b1) * n2 + g2.mul(a2, b2);
                    }
                }
            }
        }
        let mut inverse = vec![0usize; n];
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                inverse[a1 * n2 + a2] = g1.inverse(a1) * n2 + g2.inverse(a2);
            }
        }
        Arc::new(FiniteGroup {
            size: n,
            table,
            inverse,
            descriptor: GroupDescriptor::Product {
                factors: vec![g1.descriptor.clone(), g2.descriptor.clone()],
            },
        })
    }

    /// Builds a group from an explicit Cayley table, rejecting any table that
    /// violates an axiom (identity must already sit at index 0).
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Arc<FiniteGroup>> {
        let validation = validate_table(&table);
        if let Some(first) = validation.violations.first() {
            return Err(Error::Validation(format!("not a group: {first}")));
        }
        let n = table.len();
        let mut flat = vec![0usize; n * n];
        for (g, row) in table.iter().enumerate() {
            flat[g * n..(g + 1) * n].copy_from_slice(row);
        }
        let inverse = (0..n)
            .map(|g| (0..n).find(|&h| flat[g * n + h] == 0).expect("validated"))
            .collect();
        Ok(Arc::new(FiniteGroup {
            size: n,
            table: flat,
            inverse,
            descriptor: GroupDescriptor::Table { table },
        }))
    }

    /// Builds the group a descriptor denotes. Product descriptors may carry
    /// any number of factors; the element indexing is the left fold of the
    /// binary product.
    pub fn from_descriptor(descriptor: &GroupDescriptor) -> Result<Arc<FiniteGroup>> {
        match descriptor {
            GroupDescriptor::Cyclic { n } => FiniteGroup::cyclic(*n),
            GroupDescriptor::Table { table } => FiniteGroup::from_table(table.clone()),
            GroupDescriptor::Product { factors } => {
                let mut iter = factors.iter();
                let first = iter.next().ok_or_else(|| {
                    Error::Validation("product descriptor needs at least one factor".into())
                })?;
                let mut group = FiniteGroup::from_descriptor(first)?;
                for factor in iter {
                    group = FiniteGroup::product(&group, &FiniteGroup::from_descriptor(factor)?);
                }
                // Keep the descriptor exactly as parsed so files round-trip.
                let inner = FiniteGroup {
                    descriptor: descriptor.clone(),
                    ..(*group).clone()
                };
                Ok(Arc::new(inner))
            }
        }
    }

    pub fn order(&self) -> usize {
        self.size
    }

    /// Group product `g·h`.
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g * self.size + h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub const IDENTITY: usize = 0;

    /// Re-checks the axioms on the stored table.
    pub fn validate(&self) -> GroupValidation {
        validate_table(&self.rows())
    }

    /// The Cayley table as nested rows (the serialized form).
    pub fn rows(&self) -> Vec<Vec<usize>> {
        (0..self.size)
            .map(|g| self.table[g * self.size..(g + 1) * self.size].to_vec())
            .collect()
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }
}

/// Two group handles are compatible when they denote the same group; the
/// pointer check is just a fast path.
pub(crate) fn same_group(a: &Arc<FiniteGroup>, b: &Arc<FiniteGroup>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A real-valued signal indexed by the elements of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSignal {
    group: Arc<FiniteGroup>,
    values: Vec<f64>,
}

impl GroupSignal {
    pub fn new(group: Arc<FiniteGroup>, values: Vec<f64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::IncompatibleOperands(format!(
                "signal has {} values but the group has order {}",
                values.len(),
                group.order()
            )));
        }
        Ok(GroupSignal { group, values })
    }

    pub fn zeros(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        GroupSignal {
            group,
            values: vec![0.0; n],
        }
    }

    /// The Dirac delta at the identity element.
    pub fn delta(group: Arc<FiniteGroup>) -> Self {
        let mut signal = GroupSignal::zeros(group);
        signal.values[FiniteGroup::IDENTITY] = 1.0;
        signal
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of exactly-nonzero entries.
    pub fn l0(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Group convolution: `(a ∗ b)(g) = Σ_h a(h)·b(h⁻¹g)`, accumulated in
    /// ascending h.
    pub fn convolve(&self, other: &GroupSignal) -> Result<GroupSignal> {
        if !same_group(&self.group, &other.group) {
            return Err(Error::IncompatibleOperands(
                "convolution operands live on different groups".into(),
            ));
        }
        let group = &self.group;
        let n = group.order();
        let mut values = vec![0.0; n];
        for (g, out) in values.iter_mut().enumerate() {
            let mut acc = 0.0;
            for h in 0..n {
                acc += self.values[h] * other.values[group.mul(group.inverse(h), g)];
            }
            *out = acc;
        }
        Ok(GroupSignal {
            group: Arc::clone(group),
            values,
        })
    }

    /// The involution `v*(g) = v(g⁻¹)`.
    pub fn involute(&self) -> GroupSignal {
        let values = (0..self.group.order())
            .map(|g| self.values[self.group.inverse(g)])
            .collect();
        GroupSignal {
            group: Arc::clone(&self.group),
            values,
        }
    }

    /// The shift operator `(S_g x)(h) = x(g⁻¹h)`, a coordinate permutation.
    pub fn shift(&self, g: usize) -> Result<GroupSignal> {
        let n = self.group.order();
        if g >= n {
            return Err(Error::InvalidParameter(format!(
                "shift element {g} out of range for group of order {n}"
            )));
        }
        let g_inv = self.group.inverse(g);
        let values = (0..n)
            .map(|h| self.values[self.group.mul(g_inv, h)])
            .collect();
        Ok(GroupSignal {
            group: Arc::clone(&self.group),
            values,
        })
    }
}

/// The symmetric group on three letters, built from permutation composition;
/// lexicographic order puts the identity at index 0. Test fixture for the
/// nonabelian paths.
#[cfg(test)]
pub(crate) fn symmetric_3() -> Arc<FiniteGroup> {
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let index_of = |p: &[usize; 3]| perms.iter().position(|q| q == p).unwrap();
    let table = perms
        .iter()
        .map(|a| {
            perms
                .iter()
                .map(|b| index_of(&[a[b[0]], a[b[1]], a[b[2]]]))
                .collect()
        })
        .collect();
    FiniteGroup::from_table(table).unwrap()
}
