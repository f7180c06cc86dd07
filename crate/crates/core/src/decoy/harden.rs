use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::anonymize::AnonymizedView;
use crate::error::{Error, Result};
use crate::seed;

use super::origin::{same_origin_at, OriginRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalStrategy {
    /// Protected classes drawn uniformly from all view classes.
    #[default]
    Random,
    /// Protected classes drawn from classes with `k <= size <= floor(1.1 k)`.
    SizeBased,
    /// Reserved name; not implemented.
    RiskBased,
}

impl std::str::FromStr for RemovalStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(RemovalStrategy::Random),
            "size-based" => Ok(RemovalStrategy::SizeBased),
            "risk-based" => Ok(RemovalStrategy::RiskBased),
            other => Err(format!("unknown removal strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardeningPolicy {
    #[serde(default)]
    pub strategy: RemovalStrategy,
    /// Classes protected per recipient.
    pub n_e: usize,
    /// Removal budget in (0, 1].
    pub budget: f64,
}

impl HardeningPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget > 0.0 && self.budget <= 1.0) {
            return Err(Error::Policy(format!("budget {} outside (0, 1]", self.budget)));
        }
        if self.strategy == RemovalStrategy::RiskBased {
            return Err(Error::Policy("the risk-based removal strategy is not implemented".into()));
        }
        Ok(())
    }
}

/// Upper end of the close-to-k band, `floor(1.1 k)`.
pub fn close_to_k_upper(k: usize) -> usize {
    k * 11 / 10
}

/// Recipients supported when each takes a share `f` of the candidate pool: `floor(1/f)`.
pub fn recipient_capacity(f: f64) -> usize {
    (1.0 / f + 1e-9).floor() as usize
}

/// Recipients supported by the size-based strategy with `eligible` close-to-k classes and
/// `per_recipient` protected classes each.
pub fn size_based_capacity(eligible: usize, per_recipient: usize) -> Result<usize> {
    if per_recipient == 0 {
        return Err(Error::Policy("classes per recipient must be >= 1".into()));
    }
    Ok(eligible / per_recipient)
}

/// Non-decoy classes that may be removed on behalf of each recipient: `floor(b E_d / N_r)`.
pub fn removal_budget(b: f64, e_d: usize, n_r: usize) -> usize {
    if n_r == 0 {
        return 0;
    }
    (b * e_d as f64 / n_r as f64 + 1e-9).floor() as usize
}

/// Which classes each recipient keeps exclusively and which are cut from each table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardenReport {
    /// Classes available for removal under the strategy (E_d).
    pub eligible: usize,
    /// Per-recipient removal bound.
    pub budget: usize,
    /// protected[i]: view classes kept only in release i.
    pub protected: Vec<Vec<Vec<String>>>,
    /// removed[i]: view classes cut from release i.
    pub removed: Vec<Vec<Vec<String>>>,
}

impl HardenReport {
    /// Classes removed on behalf of recipient `i`.
    pub fn removals_for(&self, i: usize) -> usize {
        self.protected[i].len()
    }
}

/// Plans collusion hardening for `n_p` recipients sharing `view`: each recipient gets `n_e`
/// protected classes whose same-origin classes are removed from every other release.
/// Protected sets are disjoint and never contain a decoy signature.
pub fn harden(
    view: &AnonymizedView,
    decoy_signatures: &BTreeSet<Vec<String>>,
    policy: &HardeningPolicy,
    n_p: usize,
    master_seed: u64,
) -> Result<HardenReport> {
    policy.validate()?;
    if n_p < 2 {
        return Err(Error::Policy(format!("hardening needs at least 2 recipients, got {n_p}")));
    }
    let k = view.k();
    let upper = close_to_k_upper(k);
    let mut eligible: Vec<&Vec<String>> = view
        .classes()
        .iter()
        .filter(|c| policy.strategy != RemovalStrategy::SizeBased || (c.size() >= k && c.size() <= upper))
        .map(|c| &c.tuple)
        .filter(|t| !decoy_signatures.contains(*t))
        .collect();
    let e_d = eligible.len();
    let budget = removal_budget(policy.budget, e_d, n_p);
    if policy.n_e > budget {
        return Err(Error::BudgetExhausted(format!(
            "n_e = {} exceeds the per-recipient removal budget floor(b x E_d / N_r) = floor({} x {e_d} / {n_p}) = {budget}",
            policy.n_e, policy.budget
        )));
    }
    if n_p * policy.n_e > e_d {
        let bound = size_based_capacity(e_d, policy.n_e)?;
        return Err(Error::Capacity(format!(
            "{n_p} recipients x {} protected classes exceed the {e_d} eligible classes; capacity K/d = {e_d}/{} = {bound}",
            policy.n_e, policy.n_e
        )));
    }

    let mut rng = seed::stage_rng(master_seed, "harden");
    eligible.shuffle(&mut rng);
    let protected: Vec<Vec<Vec<String>>> = (0..n_p)
        .map(|i| {
            let mut set: Vec<Vec<String>> = eligible[i * policy.n_e..(i + 1) * policy.n_e]
                .iter()
                .map(|t| (*t).clone())
                .collect();
            set.sort();
            set
        })
        .collect();

    let lv = view.level_vector();
    let quasi = view.quasi();
    let removed = (0..n_p)
        .map(|i| {
            let mut cut: Vec<Vec<String>> = protected
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, set)| set.iter())
                .flat_map(|p| {
                    view.classes()
                        .iter()
                        .filter(move |c| same_origin_at(p, lv, &c.tuple, lv, quasi, OriginRule::Inclusive))
                        .map(|c| c.tuple.clone())
                })
                .filter(|t| !decoy_signatures.contains(t))
                .collect();
            cut.sort();
            cut.dedup();
            cut
        })
        .collect();
    Ok(HardenReport {
        eligible: e_d,
        budget,
        protected,
        removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_formulas() {
        assert_eq!(removal_budget(0.5, 100, 10), 5);
        assert_eq!(size_based_capacity(1845, 10).unwrap(), 184);
        assert!(size_based_capacity(10, 0).is_err());
        assert_eq!(recipient_capacity(0.1), 10);
        assert_eq!(recipient_capacity(0.3), 3);
        assert_eq!(recipient_capacity(1.0), 1);
        assert_eq!(close_to_k_upper(10), 11);
        assert_eq!(close_to_k_upper(2), 2);
        assert_eq!(close_to_k_upper(20), 22);
    }

    #[test]
    fn strategy_names() {
        assert_eq!("size-based".parse::<RemovalStrategy>().unwrap(), RemovalStrategy::SizeBased);
        let p = HardeningPolicy {
            strategy: RemovalStrategy::RiskBased,
            n_e: 1,
            budget: 1.0,
        };
        assert!(matches!(p.validate(), Err(Error::Policy(_))));
    }
}
