//! Combinatorial action sets `𝒜 ⊂ {0,1}^d`.
//!
//! An [`Action`] is a binary incidence vector over `d` items. An
//! [`ActionSetSpec`] describes a family of actions (two disjoint blocks, all
//! size-`m` subsets, or an explicit list); [`ActionSet`] is the validated form
//! and provides enumeration, the linear maximization oracle and the covering
//! initialization used by the Gaussian samplers.
//!
//! Actions are totally ordered lexicographically with set bits ranked first:
//! at the first position where two bit vectors differ, the one holding a `1`
//! comes first. Under this order `(1,1,0,0)` precedes `(0,0,1,1)`, and
//! same-size actions are ordered like their sorted item lists. Enumeration
//! follows this order and every tie is broken towards the earliest action.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default bound on the number of actions any enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombinatError {
    #[error("action set has {count} actions, above the enumeration cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: usize },
    #[error("invalid action set: {0}")]
    InvalidSpec(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("item {0} belongs to no action")]
    UncoverableItem(usize),
}

pub type Result<T> = std::result::Result<T, CombinatError>;

/// Binary incidence vector of a subset of items.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Action {
    bits: Box<[bool]>,
    items: Box<[usize]>,
}

impl Action {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let items = bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Self {
            bits: bits.into_boxed_slice(),
            items,
        }
    }

    /// Builds the action over `d` items containing exactly `items`.
    ///
    /// Panics if an item index is out of range.
    pub fn from_items(d: usize, items: &[usize]) -> Self {
        let mut bits = vec![false; d];
        for &i in items {
            bits[i] = true;
        }
        Self::from_bits(bits)
    }

    /// Parses a 0/1 vector.
    pub fn from_indicator(values: &[u8]) -> Result<Self> {
        let bits = values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(CombinatError::InvalidSpec(format!(
                    "action entries must be 0 or 1, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(bits))
    }

    /// Number of items `d` the vector ranges over.
    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    /// `‖A‖₁`.
    pub fn size(&self) -> usize {
        self.items.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Indices of the items in the action, ascending.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn contains(&self, item: usize) -> bool {
        self.bits.get(item).copied().unwrap_or(false)
    }

    /// `A^⊤ w`, summed in ascending item order.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.items.iter().map(|&i| weights[i]).sum()
    }

    pub fn to_indicator(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| u8::from(b)).collect()
    }
}

impl Ord for Action {
    fn cmp(&self, other: &Self) -> Ordering {
        // `false < true` for bool, so reversing puts set bits first.
        other.bits.cmp(&self.bits)
    }
}

impl PartialOrd for Action {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Action({self})")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in self.bits.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_indicator().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(deserializer)?;
        Action::from_indicator(&raw).map_err(D::Error::custom)
    }
}

/// Description of an action set, as written in experiment configs.
///
/// ```json
/// {"kind": "two-block", "d": 100}
/// {"kind": "top-m", "d": 6, "m": 2}
/// {"kind": "explicit", "actions": [[1, 0], [0, 1]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionSetSpec {
    /// `{(1,…,1,0,…,0), (0,…,0,1,…,1)}` with blocks of size `d/2`.
    TwoBlock {
        d: usize,
    },
    /// Every subset of exactly `m` items.
    TopM {
        d: usize,
        m: usize,
    },
    Explicit {
        actions: Vec<Action>,
    },
}

/// A validated action set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    spec: ActionSetSpec,
    d: usize,
    m: usize,
    /// Sorted copy of the explicit list.
    explicit: Vec<Action>,
}

impl ActionSet {
    pub fn new(spec: ActionSetSpec) -> Result<Self> {
        let (d, m, explicit) = match &spec {
            ActionSetSpec::TwoBlock { d } => {
                if *d < 2 || d % 2 != 0 {
                    return Err(CombinatError::InvalidSpec(format!(
                        "two-block requires an even d >= 2, got {d}"
                    )));
                }
                (*d, d / 2, Vec::new())
            }
            ActionSetSpec::TopM { d, m } => {
                if *m == 0 || m > d {
                    return Err(CombinatError::InvalidSpec(format!(
                        "top-m requires 1 <= m <= d, got d={d}, m={m}"
                    )));
                }
                (*d, *m, Vec::new())
            }
            ActionSetSpec::Explicit { actions } => {
                let first = actions.first().ok_or_else(|| {
                    CombinatError::InvalidSpec("explicit action list is empty".into())
                })?;
                let d = first.dim();
                if d == 0 {
                    return Err(CombinatError::InvalidSpec(
                        "actions must have d >= 1".into(),
                    ));
                }
                if let Some(bad) = actions.iter().find(|a| a.dim() != d) {
                    return Err(CombinatError::InvalidSpec(format!(
                        "action {bad} has length {} but d = {d}",
                        bad.dim()
                    )));
                }
                if let Some(empty) = actions.iter().find(|a| a.size() == 0) {
                    return Err(CombinatError::InvalidSpec(format!(
                        "action {empty} selects no item"
                    )));
                }
                let mut sorted = actions.clone();
                sorted.sort();
                if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                    return Err(CombinatError::InvalidSpec(format!(
                        "duplicate action {}",
                        w[0]
                    )));
                }
                let m = sorted.iter().map(Action::size).max().unwrap_or(0);
                (d, m, sorted)
            }
        };
        Ok(Self {
            spec,
            d,
            m,
            explicit,
        })
    }

    pub fn spec(&self) -> &ActionSetSpec {
        &self.spec
    }

    /// Number of items `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Maximal action size `m`.
    pub fn max_size(&self) -> usize {
        self.m
    }

    /// `|𝒜|`, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        match &self.spec {
            ActionSetSpec::TwoBlock { .. } => 2,
            ActionSetSpec::TopM { d, m } => binomial(*d, *m),
            ActionSetSpec::Explicit { .. } => self.explicit.len() as u128,
        }
    }

    pub fn enumerate(&self) -> Result<Vec<Action>> {
        self.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    /// All actions in order; fails when `|𝒜|` exceeds `cap`.
    pub fn enumerate_with_cap(&self, cap: usize) -> Result<Vec<Action>> {
        let count = self.count();
        if count > cap as u128 {
            return Err(CombinatError::EnumerationTooLarge { count, cap });
        }
        Ok(match &self.spec {
            ActionSetSpec::TwoBlock { d } => two_block(*d).to_vec(),
            ActionSetSpec::TopM { d, m } => Combinations::new(*d, *m)
                .map(|items| Action::from_items(*d, &items))
                .collect(),
            ActionSetSpec::Explicit { .. } => self.explicit.clone(),
        })
    }

    /// An action maximizing `A^⊤ weights`, earliest in order among ties.
    pub fn argmax_linear(&self, weights: &[f64]) -> Result<Action> {
        if weights.len() != self.d {
            return Err(CombinatError::InvalidWeights(format!(
                "expected {} weights, got {}",
                self.d,
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(CombinatError::InvalidWeights(format!(
                "weight {i} is not finite ({})",
                weights[i]
            )));
        }
        Ok(match &self.spec {
            ActionSetSpec::TwoBlock { d } => {
                let [first, second] = two_block(*d);
                if second.dot(weights) > first.dot(weights) {
                    second
                } else {
                    first
                }
            }
            ActionSetSpec::TopM { d, m } => {
                let mut order: Vec<usize> = (0..*d).collect();
                // Heaviest first; equal weights keep the lower index.
                order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
                Action::from_items(*d, &order[..*m])
            }
            ActionSetSpec::Explicit { .. } => {
                let mut best = &self.explicit[0];
                let mut best_value = best.dot(weights);
                for action in &self.explicit[1..] {
                    let value = action.dot(weights);
                    if value > best_value {
                        best = action;
                        best_value = value;
                    }
                }
                best.clone()
            }
        })
    }

    /// Greedy cover: repeatedly take the action covering the most uncovered
    /// items (earliest on ties) until every item is covered.
    pub fn covering_init_sequence(&self) -> Result<Vec<Action>> {
        match &self.spec {
            ActionSetSpec::TwoBlock { d } => Ok(two_block(*d).to_vec()),
            ActionSetSpec::TopM { d, m } => {
                let mut sequence = Vec::new();
                let mut next = 0;
                while next < *d {
                    let end = (next + m).min(*d);
                    let mut items: Vec<usize> = (next..end).collect();
                    // Pad the last chunk with the lowest already-covered items.
                    items.extend(0..m - items.len());
                    items.sort_unstable();
                    sequence.push(Action::from_items(*d, &items));
                    next = end;
                }
                Ok(sequence)
            }
            ActionSetSpec::Explicit { .. } => {
                let mut covered = vec![false; self.d];
                for action in &self.explicit {
                    for &i in action.items() {
                        covered[i] = true;
                    }
                }
                if let Some(i) = covered.iter().position(|c| !c) {
                    return Err(CombinatError::UncoverableItem(i));
                }
                covered.fill(false);
                let mut remaining = self.d;
                let mut sequence = Vec::new();
                while remaining > 0 {
                    let gain = |a: &Action| a.items().iter().filter(|&&i| !covered[i]).count();
                    let mut best = &self.explicit[0];
                    let mut best_gain = gain(best);
                    for action in &self.explicit[1..] {
                        let g = gain(action);
                        if g > best_gain {
                            best = action;
                            best_gain = g;
                        }
                    }
                    for &i in best.items() {
                        covered[i] = true;
                    }
                    remaining -= best_gain;
                    sequence.push(best.clone());
                }
                Ok(sequence)
            }
        }
    }
}

pub fn enumerate_actions(spec: &ActionSetSpec) -> Result<Vec<Action>> {
    ActionSet::new(spec.clone())?.enumerate()
}

pub fn argmax_linear(spec: &ActionSetSpec, weights: &[f64]) -> Result<Action> {
    ActionSet::new(spec.clone())?.argmax_linear(weights)
}

pub fn covering_init_sequence(spec: &ActionSetSpec) -> Result<Vec<Action>> {
    ActionSet::new(spec.clone())?.covering_init_sequence()
}

fn two_block(d: usize) -> [Action; 2] {
    let half = d / 2;
    let first: Vec<bool> = (0..d).map(|i| i < half).collect();
    let second: Vec<bool> = (0..d).map(|i| i >= half).collect();
    [Action::from_bits(first), Action::from_bits(second)]
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is always an integer at this point.
        let Some(next) = acc.checked_mul((n - i) as u128) else {
            return u128::MAX;
        };
        acc = next / (i as u128 + 1);
    }
    acc
}

/// Size-`k` subsets of `0..n` in lexicographic order of their item lists.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let current = self.current.as_mut().unwrap();
        match (0..k).rev().find(|&i| current[i] < self.n - k + i) {
            Some(i) => {
                current[i] += 1;
                for j in i + 1..k {
                    current[j] = current[j - 1] + 1;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(v: &[u8]) -> Action {
        Action::from_indicator(v).unwrap()
    }

    fn set(spec: ActionSetSpec) -> ActionSet {
        ActionSet::new(spec).unwrap()
    }

    /// Every subset of `0..d` with exactly `m` items, by scanning all `2^d` masks.
    fn brute_force_subsets(d: usize, m: usize) -> Vec<Action> {
        let mut out: Vec<Action> = (0u32..1 << d)
            .filter(|mask| mask.count_ones() as usize == m)
            .map(|mask| Action::from_bits((0..d).map(|i| mask >> i & 1 == 1).collect()))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn two_block_enumeration() {
        let actions = enumerate_actions(&ActionSetSpec::TwoBlock { d: 4 }).unwrap();
        assert_eq!(actions, vec![bits(&[1, 1, 0, 0]), bits(&[0, 0, 1, 1])]);
    }

    #[test]
    fn explicit_singleton_passthrough() {
        let spec = ActionSetSpec::Explicit {
            actions: vec![bits(&[1, 0])],
        };
        assert_eq!(enumerate_actions(&spec).unwrap(), vec![bits(&[1, 0])]);
    }

    #[test]
    fn top_m_matches_subset_scan() {
        let actions = enumerate_actions(&ActionSetSpec::TopM { d: 4, m: 2 }).unwrap();
        assert_eq!(actions.len(), 6);
        assert_eq!(actions, brute_force_subsets(4, 2));
        for (d, m) in [(6, 3), (8, 1), (9, 4), (10, 10)] {
            let actions = enumerate_actions(&ActionSetSpec::TopM { d, m }).unwrap();
            assert_eq!(actions, brute_force_subsets(d, m), "d={d} m={m}");
        }
    }

    #[test]
    fn enumeration_cap() {
        let s = set(ActionSetSpec::TopM { d: 40, m: 20 });
        assert!(matches!(
            s.enumerate(),
            Err(CombinatError::EnumerationTooLarge { count, .. }) if count == binomial(40, 20)
        ));
        assert_eq!(
            s.enumerate_with_cap(10).unwrap_err(),
            CombinatError::EnumerationTooLarge {
                count: binomial(40, 20),
                cap: 10
            }
        );
        assert_eq!(
            set(ActionSetSpec::TopM { d: 6, m: 3 })
                .enumerate_with_cap(20)
                .unwrap()
                .len(),
            20
        );
    }

    #[test]
    fn invalid_specs() {
        assert!(ActionSet::new(ActionSetSpec::TwoBlock { d: 5 }).is_err());
        assert!(ActionSet::new(ActionSetSpec::TwoBlock { d: 0 }).is_err());
        assert!(ActionSet::new(ActionSetSpec::TopM { d: 3, m: 0 }).is_err());
        assert!(ActionSet::new(ActionSetSpec::TopM { d: 3, m: 4 }).is_err());
        let explicit = |actions| ActionSet::new(ActionSetSpec::Explicit { actions });
        assert!(explicit(vec![]).is_err());
        assert!(explicit(vec![bits(&[1, 0]), bits(&[1, 0])]).is_err());
        assert!(explicit(vec![bits(&[1, 0]), bits(&[1, 0, 1])]).is_err());
        assert!(explicit(vec![bits(&[0, 0])]).is_err());
        assert!(Action::from_indicator(&[0, 2]).is_err());
    }

    #[test]
    fn argmax_examples() {
        let s = set(ActionSetSpec::TwoBlock { d: 4 });
        assert_eq!(
            s.argmax_linear(&[0.7, 0.7, 0.9, 0.9]).unwrap(),
            bits(&[0, 0, 1, 1])
        );
        assert_eq!(s.argmax_linear(&[0.0; 4]).unwrap(), bits(&[1, 1, 0, 0]));
        let t = set(ActionSetSpec::TopM { d: 5, m: 2 });
        assert_eq!(
            t.argmax_linear(&[0.0; 5]).unwrap(),
            t.enumerate().unwrap()[0]
        );
        let e = set(ActionSetSpec::Explicit {
            actions: vec![bits(&[0, 1, 1]), bits(&[1, 0, 0]), bits(&[0, 1, 0])],
        });
        assert_eq!(e.argmax_linear(&[0.0; 3]).unwrap(), bits(&[1, 0, 0]));
    }

    #[test]
    fn argmax_rejects_bad_weights() {
        let s = set(ActionSetSpec::TopM { d: 3, m: 1 });
        assert!(matches!(
            s.argmax_linear(&[0.0, f64::NAN, 1.0]),
            Err(CombinatError::InvalidWeights(_))
        ));
        assert!(matches!(
            s.argmax_linear(&[0.0, f64::INFINITY, 1.0]),
            Err(CombinatError::InvalidWeights(_))
        ));
        assert!(matches!(
            s.argmax_linear(&[0.0, 1.0]),
            Err(CombinatError::InvalidWeights(_))
        ));
    }

    #[test]
    fn top_m_argmax_equals_exhaustive_scan() {
        let s = set(ActionSetSpec::TopM { d: 6, m: 3 });
        let all = s.enumerate().unwrap();
        assert_eq!(all.len(), 20);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let best = all
                .iter()
                .fold(None::<&Action>, |acc, a| match acc {
                    Some(b) if b.dot(&w) >= a.dot(&w) => Some(b),
                    _ => Some(a),
                })
                .unwrap();
            assert_eq!(&s.argmax_linear(&w).unwrap(), best);
        }
    }

    #[test]
    fn top_m_ties_prefer_lower_items() {
        let s = set(ActionSetSpec::TopM { d: 5, m: 2 });
        let a = s.argmax_linear(&[0.1, 0.5, 0.3, 0.5, 0.5]).unwrap();
        assert_eq!(a, bits(&[0, 1, 0, 1, 0]));
    }

    fn assert_covers(seq: &[Action], d: usize) {
        assert!(seq.len() <= d);
        for i in 0..d {
            assert!(seq.iter().any(|a| a.contains(i)), "item {i} uncovered");
        }
    }

    #[test]
    fn covering_examples() {
        assert_eq!(
            covering_init_sequence(&ActionSetSpec::TwoBlock { d: 4 }).unwrap(),
            vec![bits(&[1, 1, 0, 0]), bits(&[0, 0, 1, 1])]
        );
        assert_eq!(
            covering_init_sequence(&ActionSetSpec::TopM { d: 4, m: 4 }).unwrap(),
            vec![bits(&[1, 1, 1, 1])]
        );
        let seq = covering_init_sequence(&ActionSetSpec::TopM { d: 6, m: 2 }).unwrap();
        assert_eq!(seq.len(), 3);
        let sums: Vec<usize> = (0..6)
            .map(|i| seq.iter().filter(|a| a.contains(i)).count())
            .collect();
        assert!(sums.iter().all(|&s| s >= 1));
        let seq = covering_init_sequence(&ActionSetSpec::TopM { d: 7, m: 3 }).unwrap();
        assert_eq!(seq.last().unwrap(), &bits(&[1, 1, 0, 0, 0, 0, 1]));
        assert_covers(&seq, 7);
    }

    #[test]
    fn top_m_cover_agrees_with_greedy_definition() {
        for (d, m) in [(5, 2), (6, 4), (7, 3), (8, 8), (9, 1)] {
            let direct = set(ActionSetSpec::TopM { d, m })
                .covering_init_sequence()
                .unwrap();
            let all = set(ActionSetSpec::TopM { d, m }).enumerate().unwrap();
            let greedy = set(ActionSetSpec::Explicit { actions: all })
                .covering_init_sequence()
                .unwrap();
            assert_eq!(direct, greedy, "d={d} m={m}");
        }
    }

    #[test]
    fn uncoverable_item() {
        let s = set(ActionSetSpec::Explicit {
            actions: vec![bits(&[1, 0, 0]), bits(&[0, 1, 0])],
        });
        assert_eq!(
            s.covering_init_sequence().unwrap_err(),
            CombinatError::UncoverableItem(2)
        );
    }

    #[test]
    fn spec_json_shapes() {
        let spec: ActionSetSpec = serde_json::from_str(r#"{"kind":"two-block","d":100}"#).unwrap();
        assert_eq!(spec, ActionSetSpec::TwoBlock { d: 100 });
        let spec: ActionSetSpec = serde_json::from_str(r#"{"kind":"top-m","d":6,"m":2}"#).unwrap();
        assert_eq!(spec, ActionSetSpec::TopM { d: 6, m: 2 });
        let spec: ActionSetSpec =
            serde_json::from_str(r#"{"kind":"explicit","actions":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(
            spec,
            ActionSetSpec::Explicit {
                actions: vec![bits(&[1, 0]), bits(&[0, 1])]
            }
        );
        assert!(
            serde_json::from_str::<ActionSetSpec>(r#"{"kind":"explicit","actions":[[1,3]]}"#)
                .is_err()
        );
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(100, 50), 100_891_344_545_564_193_334_812_497_256);
        assert_eq!(binomial(3, 5), 0);
    }
}
