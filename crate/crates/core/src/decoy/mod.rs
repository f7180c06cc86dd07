//! Decoy selection and injection, collusion hardening, per-recipient releases and the
//! owner-side decoy registry.

mod harden;
mod origin;
mod registry;
mod release;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anonymize::AnonymizedView;
use crate::dataset::{Dataset, RecordId};
use crate::error::{Error, Result};
use crate::linkage::DecoyCandidate;
use crate::seed;

pub use harden::{
    close_to_k_upper, harden, recipient_capacity, removal_budget, size_based_capacity, HardenReport,
    HardeningPolicy, RemovalStrategy,
};
pub use origin::{same_origin, same_origin_at, OriginRule};
pub use registry::{CreationMeta, DecoyRegistry, RegistryEntry};
pub use release::{build_releases, write_releases, RecipientRelease, ReleaseManifest, ReleaseRow, ReleaseSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyPolicy {
    /// Decoy classes per recipient.
    pub n_d: usize,
    /// Records injected per decoy class; at least k.
    pub records_per_class: usize,
    /// Inclusive bounds on a candidate's risk multiplication factor.
    pub risk_range: (f64, f64),
    /// Share of the candidate pool handed to each recipient; caps recipients at `1/f`.
    pub pool_fraction: Option<f64>,
    pub seed: u64,
}

impl DecoyPolicy {
    /// One decoy class of exactly `k` records per recipient, any risk factor.
    pub fn new(k: usize, seed: u64) -> Self {
        DecoyPolicy {
            n_d: 1,
            records_per_class: k,
            risk_range: (1.0, f64::INFINITY),
            pool_fraction: None,
            seed,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.n_d == 0 {
            return Err(Error::Policy("n_d must be >= 1".into()));
        }
        if self.records_per_class < k {
            return Err(Error::Policy(format!(
                "records_per_class {} below k={k}",
                self.records_per_class
            )));
        }
        let (lo, hi) = self.risk_range;
        if lo.is_nan() || hi.is_nan() || lo < 1.0 || hi < lo {
            return Err(Error::Policy(format!("invalid risk range [{lo}, {hi}]")));
        }
        if let Some(f) = self.pool_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Policy(format!("pool fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    fn eligible(&self, c: &DecoyCandidate) -> bool {
        let (lo, hi) = self.risk_range;
        c.risk_factor >= lo && c.risk_factor <= hi && c.size() >= self.records_per_class
    }
}

/// Deterministically assigns `n_d` distinct candidate classes to each of `n_p` recipients.
/// No class is given to two recipients.
pub fn select_decoys(
    pool: &[DecoyCandidate],
    policy: &DecoyPolicy,
    k: usize,
    n_p: usize,
) -> Result<Vec<Vec<DecoyCandidate>>> {
    policy.validate(k)?;
    let mut eligible: Vec<&DecoyCandidate> = pool.iter().filter(|c| policy.eligible(c)).collect();
    eligible.sort_by(|a, b| a.class.tuple.cmp(&b.class.tuple));
    eligible.dedup_by(|a, b| a.class.tuple == b.class.tuple);

    if let Some(f) = policy.pool_fraction {
        let bound = recipient_capacity(f);
        if n_p > bound {
            return Err(Error::Capacity(format!(
                "{n_p} recipients requested but a pool fraction of {f} supports at most 1/f = {bound}"
            )));
        }
        let share = (f * eligible.len() as f64 + 1e-9).floor() as usize;
        if policy.n_d > share {
            return Err(Error::Capacity(format!(
                "n_d = {} exceeds the per-recipient share f x N_d = {share} (f = {f}, N_d = {})",
                policy.n_d,
                eligible.len()
            )));
        }
    }
    let needed = n_p * policy.n_d;
    if needed > eligible.len() {
        return Err(Error::Capacity(format!(
            "{n_p} recipients x {} decoy classes = {needed} needed, {} eligible candidates in the risk range",
            policy.n_d,
            eligible.len()
        )));
    }
    let mut rng = seed::stage_rng(policy.seed, "select");
    eligible.shuffle(&mut rng);
    Ok(eligible
        .chunks(policy.n_d)
        .take(n_p)
        .map(|chunk| chunk.iter().map(|&c| c.clone()).collect())
        .collect())
}

/// One injected decoy row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyRecord {
    /// Generalized quasi tuple, equal to the decoy class signature.
    pub tuple: Vec<String>,
    /// Synthesized sensitive values.
    pub sensitive: Vec<String>,
    /// Population record the row was drawn from.
    pub source_id: RecordId,
}

/// Draws `records_per_class` population members from each assigned class, generalizes them
/// under the view's level vector and gives each a sensitive-value vector sampled from the
/// view's retained records.
pub fn materialize_decoys(
    assignment: &[Vec<DecoyCandidate>],
    population: &Dataset,
    view: &AnonymizedView,
    policy: &DecoyPolicy,
) -> Result<Vec<Vec<DecoyRecord>>> {
    let positions: HashMap<RecordId, usize> =
        population.ids().iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let quasi_cols = population.schema().indices_of(view.quasi().attributes())?;
    let sensitive_pool: Vec<Vec<String>> = view
        .generalized_rows()
        .into_iter()
        .map(|(_, _, sens)| sens)
        .collect();
    let lv = view.level_vector();
    let mut rng = seed::stage_rng(policy.seed, "materialize");

    assignment
        .iter()
        .map(|classes| {
            let mut rows = Vec::new();
            for cand in classes {
                let class = &cand.class;
                if class.size() < policy.records_per_class {
                    return Err(Error::InsufficientClass {
                        tuple: class.tuple.clone(),
                        available: class.size(),
                        required: policy.records_per_class,
                    });
                }
                let mut picked =
                    rand::seq::index::sample(&mut rng, class.size(), policy.records_per_class).into_vec();
                picked.sort_unstable();
                for p in picked {
                    let id = class.members[p];
                    let pos = *positions.get(&id).ok_or_else(|| {
                        Error::Schema(format!("decoy member {id} not found in population"))
                    })?;
                    let row = population.row(pos);
                    let raw: Vec<&str> = quasi_cols.iter().map(|&c| row[c].as_str()).collect();
                    let tuple = view.quasi().generalize_tuple(&raw, lv)?;
                    if tuple != class.tuple {
                        return Err(Error::Schema(format!(
                            "population record {id} generalizes to {tuple:?}, not {:?}",
                            class.tuple
                        )));
                    }
                    let sensitive = if sensitive_pool.is_empty() {
                        Vec::new()
                    } else {
                        sensitive_pool[rng.random_range(0..sensitive_pool.len())].clone()
                    };
                    rows.push(DecoyRecord {
                        tuple,
                        sensitive,
                        source_id: id,
                    });
                }
            }
            Ok(rows)
        })
        .collect()
}

/// Chance that a class picked from the suspect set of a hardened release is a decoy, for an
/// attacker who knows `n_d` and `n_e`.
pub fn decoy_guess_probability(n_d: usize, n_e: usize) -> Result<f64> {
    if n_d + n_e == 0 {
        return Err(Error::Policy("n_d + n_e must be positive".into()));
    }
    Ok(n_d as f64 / (n_d + n_e) as f64)
}
