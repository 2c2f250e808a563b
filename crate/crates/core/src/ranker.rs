//! Criticalness scoring and the threshold gate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analyzers::PropertyId;

/// Likelihood, severity and detection difficulty, each from 1 to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fmea {
    pub likelihood: u8,
    pub severity: u8,
    pub difficulty: u8,
}

impl Fmea {
    pub const fn new(likelihood: u8, severity: u8, difficulty: u8) -> Self {
        Fmea {
            likelihood,
            severity,
            difficulty,
        }
    }

    pub fn product(&self) -> f64 {
        (self.likelihood as u32 * self.severity as u32 * self.difficulty as u32) as f64
    }

    fn in_range(&self) -> bool {
        [self.likelihood, self.severity, self.difficulty]
            .iter()
            .all(|v| (1..=3).contains(v))
    }
}

/// Default FMEA triples per property.
pub const DEFAULT_FMEA: [(PropertyId, Fmea); 4] = [
    (PropertyId::TransferLimit, Fmea::new(1, 2, 2)),
    (PropertyId::NonExistingAddress, Fmea::new(1, 3, 2)),
    (PropertyId::GuardSuicide, Fmea::new(2, 3, 3)),
    (PropertyId::BlackHole, Fmea::new(3, 2, 2)),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankConfigError {
    #[error("alpha for {0} must be positive")]
    NonPositiveAlpha(PropertyId),
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("FMEA factors for {0} must lie in 1..=3")]
    FmeaRange(PropertyId),
    #[error("alpha for {prop} is {alpha} but its FMEA product is {product}")]
    FmeaMismatch {
        prop: PropertyId,
        alpha: f64,
        product: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    pub alpha: BTreeMap<PropertyId, f64>,
    pub epsilon: f64,
    pub threshold: f64,
    pub fmea: BTreeMap<PropertyId, Fmea>,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            alpha: DEFAULT_FMEA.iter().map(|(p, f)| (*p, f.product())).collect(),
            epsilon: 1.0,
            threshold: 10.0,
            fmea: DEFAULT_FMEA.into_iter().collect(),
        }
    }
}

impl RankConfig {
    /// Overrides one weight. Any FMEA triple for the property is dropped,
    /// since the explicit value replaces it.
    pub fn set_alpha(&mut self, prop: PropertyId, value: f64) {
        self.alpha.insert(prop, value);
        self.fmea.remove(&prop);
    }

    /// Sets a triple and derives the weight from it.
    pub fn set_fmea(&mut self, prop: PropertyId, f: Fmea) {
        self.fmea.insert(prop, f);
        self.alpha.insert(prop, f.product());
    }

    pub fn alpha_of(&self, prop: PropertyId) -> f64 {
        if prop == PropertyId::MaxGas {
            return 0.0;
        }
        self.alpha.get(&prop).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), RankConfigError> {
        if !(self.epsilon > 0.0) {
            return Err(RankConfigError::NonPositiveEpsilon);
        }
        for (p, a) in &self.alpha {
            if *p != PropertyId::MaxGas && !(*a > 0.0) {
                return Err(RankConfigError::NonPositiveAlpha(*p));
            }
        }
        for (p, f) in &self.fmea {
            if !f.in_range() {
                return Err(RankConfigError::FmeaRange(*p));
            }
            let alpha = self.alpha_of(*p);
            if alpha != f.product() {
                return Err(RankConfigError::FmeaMismatch {
                    prop: *p,
                    alpha,
                    product: f.product(),
                });
            }
        }
        Ok(())
    }
}

/// Sum of weights over the distinct properties divided by `epsilon * length`.
pub fn score(props: &BTreeSet<PropertyId>, length: usize, config: &RankConfig) -> f64 {
    assert!(length >= 1, "a path has at least one call");
    let sum: f64 = props.iter().map(|p| config.alpha_of(*p)).sum();
    sum / (config.epsilon * length as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPath<T> {
    pub item: T,
    /// Block ids, used to break ties.
    pub blocks: Vec<u32>,
    pub properties: BTreeSet<PropertyId>,
    /// Number of calls.
    pub length: usize,
    pub score: f64,
}

impl<T> RankedPath<T> {
    pub fn new(item: T, blocks: Vec<u32>, properties: BTreeSet<PropertyId>, length: usize, config: &RankConfig) -> Self {
        let score = score(&properties, length, config);
        RankedPath {
            item,
            blocks,
            properties,
            length,
            score,
        }
    }
}

/// Paths above the threshold, split into the first representative of each
/// violated property set and the rest, which wait until their
/// representative is refuted.
#[derive(Debug, Clone, PartialEq)]
pub struct Gated<T> {
    pub primary: Vec<RankedPath<T>>,
    pub deferred: Vec<RankedPath<T>>,
    pub rejected: Vec<RankedPath<T>>,
}

impl<T> Default for Gated<T> {
    fn default() -> Self {
        Gated {
            primary: Vec::new(),
            deferred: Vec::new(),
            rejected: Vec::new(),
        }
    }
}

/// Score descending, then fewer calls, then block ids.
pub fn sort_ranked<T>(paths: &mut [RankedPath<T>]) {
    paths.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.length.cmp(&b.length))
            .then_with(|| a.blocks.cmp(&b.blocks))
    });
}

pub fn rank_and_gate<T>(mut paths: Vec<RankedPath<T>>, config: &RankConfig) -> Gated<T> {
    sort_ranked(&mut paths);
    let mut out = Gated::default();
    let mut seen: BTreeSet<BTreeSet<PropertyId>> = BTreeSet::new();
    for p in paths {
        if !(p.score > config.threshold) {
            out.rejected.push(p);
        } else if seen.insert(p.properties.clone()) {
            out.primary.push(p);
        } else {
            out.deferred.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use PropertyId::*;

    fn set(ps: &[PropertyId]) -> BTreeSet<PropertyId> {
        ps.iter().copied().collect()
    }

    #[test]
    fn defaults_are_fmea_products() {
        let c = RankConfig::default();
        assert_eq!(c.alpha_of(TransferLimit), 4.0);
        assert_eq!(c.alpha_of(NonExistingAddress), 6.0);
        assert_eq!(c.alpha_of(GuardSuicide), 18.0);
        assert_eq!(c.alpha_of(BlackHole), 12.0);
        assert_eq!(c.alpha_of(MaxGas), 0.0);
        c.validate().unwrap();
    }

    #[test]
    fn score_examples() {
        let c = RankConfig::default();
        assert_eq!(score(&set(&[GuardSuicide]), 1, &c), 18.0);
        assert_eq!(score(&set(&[]), 1, &c), 0.0);
        assert_eq!(score(&set(&[NonExistingAddress, GuardSuicide]), 2, &c), 12.0);
        assert_eq!(score(&set(&[MaxGas]), 1, &c), 0.0);
    }

    #[test]
    fn mismatched_fmea_is_rejected() {
        let mut c = RankConfig::default();
        c.alpha.insert(BlackHole, 5.0);
        assert!(matches!(c.validate(), Err(RankConfigError::FmeaMismatch { .. })));
        c.set_alpha(BlackHole, 5.0);
        c.validate().unwrap();
    }

    #[test]
    fn gate_and_deferral() {
        let c = RankConfig::default();
        let paths = vec![
            RankedPath::new("a", vec![1, 2], set(&[BlackHole]), 2, &c),
            RankedPath::new("b", vec![1], set(&[BlackHole]), 1, &c),
            RankedPath::new("c", vec![3], set(&[GuardSuicide]), 1, &c),
            RankedPath::new("d", vec![4], set(&[TransferLimit]), 1, &c),
        ];
        let g = rank_and_gate(paths, &c);
        let names: Vec<_> = g.primary.iter().map(|p| p.item).collect();
        assert_eq!(names, ["c", "b"]);
        assert!(g.deferred.is_empty());
        let rejected: Vec<_> = g.rejected.iter().map(|p| p.item).collect();
        assert_eq!(rejected, ["a", "d"]);
    }

    #[test]
    fn equal_sets_keep_the_shorter_first() {
        let mut c = RankConfig::default();
        c.threshold = 1.0;
        let paths = vec![
            RankedPath::new("long", vec![1, 5], set(&[BlackHole]), 2, &c),
            RankedPath::new("short", vec![1], set(&[BlackHole]), 1, &c),
        ];
        let g = rank_and_gate(paths, &c);
        assert_eq!(g.primary[0].item, "short");
        assert_eq!(g.deferred[0].item, "long");
    }

    #[test]
    fn empty_input() {
        let g = rank_and_gate(Vec::<RankedPath<()>>::new(), &RankConfig::default());
        assert!(g.primary.is_empty() && g.deferred.is_empty() && g.rejected.is_empty());
    }
}
