//! Same-origin test between equivalence classes of two releases.
//!
//! Two classes are same-origin when, attribute by attribute, one value is an ancestor of
//! the other in the attribute's hierarchy. Such classes may have been generalized from the
//! same raw records. Within one global-recoding release no two classes are same-origin.

use crate::hierarchy::{GeneralizationHierarchy, LevelVector, QuasiHierarchies};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OriginRule {
    /// Ancestor, descendant or equal.
    #[default]
    Inclusive,
    /// Proper ancestor or proper descendant only; equal values do not count.
    Strict,
}

fn related_at(h: &GeneralizationHierarchy, a: &str, la: usize, b: &str, lb: usize, rule: OriginRule) -> bool {
    if rule == OriginRule::Strict && la == lb {
        return false;
    }
    h.is_ancestor_at(a, la, b, lb) || h.is_ancestor_at(b, lb, a, la)
}

/// Same-origin test with known per-attribute levels for both tuples.
pub fn same_origin_at(
    a: &[String],
    a_levels: &LevelVector,
    b: &[String],
    b_levels: &LevelVector,
    quasi: &QuasiHierarchies,
    rule: OriginRule,
) -> bool {
    quasi.hierarchies().iter().enumerate().all(|(i, h)| {
        related_at(h, &a[i], a_levels.levels()[i], &b[i], b_levels.levels()[i], rule)
    })
}

/// Same-origin test that infers each value's level from the hierarchy. Values outside a
/// hierarchy's domain are never related.
pub fn same_origin(a: &[String], b: &[String], quasi: &QuasiHierarchies, rule: OriginRule) -> bool {
    if a.len() != quasi.len() || b.len() != quasi.len() {
        return false;
    }
    quasi.hierarchies().iter().enumerate().all(|(i, h)| {
        let la = h.levels_of(&a[i]);
        let lb = h.levels_of(&b[i]);
        la.iter()
            .any(|&x| lb.iter().any(|&y| related_at(h, &a[i], x, &b[i], y, rule)))
    })
}
