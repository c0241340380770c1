//! Synapse-group search.
//!
//! Inputs are partitioned into groups whose combined signal should move the
//! same way the target does. A partition is scored by how far each group's
//! shape, once rescaled to the target's shape magnitude, sits from the
//! target shape, plus a per-group penalty. Two searches are provided: an
//! exhaustive sweep over every set partition (optionally of every subset,
//! with the rest dropped) and an agglomerative greedy merge.
//!
//! Equal scores are resolved by, in order: fewer groups, lower incoherence
//! (members whose own shapes disagree with their group's shape), and the
//! lexicographically smallest sorted group structure.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::shape::{shape_distance, shape_of, ShapeVector};

/// Relative band inside which two scores count as equal.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Hard ceiling for the exhaustive sweep regardless of configuration; the
/// per-subset table has `2^arity` entries.
const EXHAUSTIVE_HARD_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    #[default]
    Sum,
    Mean,
}

/// Which pattern sequence shapes are taken over during search and fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PatternOrder {
    /// Patterns sorted by target, then by inputs. Makes training independent
    /// of presentation order.
    #[default]
    Canonical,
    /// Patterns exactly as presented.
    Presented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingConfig {
    pub combine_mode: CombineMode,
    pub max_exhaustive_inputs: usize,
    /// `None` resolves to `0.01 * (target shape change average + 1)`.
    pub group_count_penalty: Option<f64>,
    pub allow_drop: bool,
    pub sign_aware: bool,
    pub pattern_order: PatternOrder,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            combine_mode: CombineMode::Sum,
            max_exhaustive_inputs: 10,
            group_count_penalty: None,
            allow_drop: false,
            sign_aware: true,
            pattern_order: PatternOrder::Canonical,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_exhaustive_inputs < 1 {
            return Err(Error::InvalidConfig("max_exhaustive_inputs must be >= 1".into()));
        }
        if let Some(p) = self.group_count_penalty {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidConfig("group_count_penalty must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn resolved_penalty(&self, dataset: &Dataset) -> Result<f64> {
        match self.group_count_penalty {
            Some(p) => Ok(p),
            None => Ok(0.01 * (shape_of(&dataset.targets())?.magnitude() + 1.0)),
        }
    }
}

/// Sorts patterns by target, then inputs, using IEEE total order.
pub fn canonical_order(dataset: &Dataset) -> Dataset {
    let patterns = dataset.patterns();
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&patterns[a], &patterns[b]);
        pa.target.total_cmp(&pb.target).then_with(|| {
            pa.inputs
                .iter()
                .zip(&pb.inputs)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    });
    dataset.reordered(&order)
}

pub fn arrange(dataset: &Dataset, order: PatternOrder) -> Dataset {
    match order {
        PatternOrder::Canonical => canonical_order(dataset),
        PatternOrder::Presented => dataset.clone(),
    }
}

/// Sorted, non-empty, duplicate-free set of input column indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynapseGroup(Vec<usize>);

impl SynapseGroup {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::InvalidPartition("empty group".into()));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition("duplicate index in group".into()));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check_arity(&self, arity: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= arity) {
            Some(&index) => Err(Error::InvalidIndex { index, arity }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    groups: Vec<SynapseGroup>,
    dropped: Vec<usize>,
}

impl Partition {
    /// Validates disjointness and full coverage of `0..arity`; groups come
    /// back sorted.
    pub fn new(mut groups: Vec<SynapseGroup>, mut dropped: Vec<usize>, arity: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPartition("at least one group required".into()));
        }
        groups.sort();
        dropped.sort_unstable();
        let mut seen = vec![false; arity];
        for index in groups.iter().flat_map(|g| g.indices()).chain(&dropped) {
            if *index >= arity {
                return Err(Error::InvalidIndex { index: *index, arity });
            }
            if std::mem::replace(&mut seen[*index], true) {
                return Err(Error::InvalidPartition(format!("index {index} used twice")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {missing} not covered")));
        }
        Ok(Self { groups, dropped })
    }

    pub fn groups(&self) -> &[SynapseGroup] {
        &self.groups
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    #[cfg(test)]
    fn structure(&self) -> Vec<Vec<usize>> {
        self.groups.iter().map(|g| g.0.clone()).collect()
    }
}

pub fn combined_signal(group: &SynapseGroup, dataset: &Dataset, mode: CombineMode) -> Result<Vec<f64>> {
    group.check_arity(dataset.arity())?;
    Ok(combine(group.indices(), dataset, mode))
}

fn combine(indices: &[usize], dataset: &Dataset, mode: CombineMode) -> Vec<f64> {
    dataset
        .patterns()
        .iter()
        .map(|p| {
            let sum: f64 = indices.iter().map(|&i| p.inputs[i]).sum();
            match mode {
                CombineMode::Sum => sum,
                CombineMode::Mean => sum / indices.len() as f64,
            }
        })
        .collect()
}

/// Differences across one pattern's inputs, in input order.
pub fn horizontal_shape(pattern_inputs: &[f64]) -> Result<ShapeVector> {
    shape_of(pattern_inputs)
}

fn normalized(shape: &ShapeVector) -> ShapeVector {
    let m = shape.magnitude();
    if m > 0.0 {
        shape.scaled(1.0 / m)
    } else {
        shape.clone()
    }
}

/// Per-group contributions: the distance term and the incoherence used for tie-breaks.
#[derive(Debug, Clone, Copy)]
struct GroupTerms {
    distance: f64,
    incoherence: f64,
}

struct Scorer<'a> {
    dataset: &'a Dataset,
    mode: CombineMode,
    sign_aware: bool,
    penalty: f64,
    target_shape: ShapeVector,
    member_shapes: Vec<ShapeVector>,
}

impl<'a> Scorer<'a> {
    fn new(dataset: &'a Dataset, config: &GroupingConfig) -> Result<Self> {
        config.validate()?;
        dataset.require_patterns(2)?;
        let target_shape = shape_of(&dataset.targets())?;
        let member_shapes = (0..dataset.arity())
            .map(|i| Ok(normalized(&shape_of(&dataset.column(i)?)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dataset,
            mode: config.combine_mode,
            sign_aware: config.sign_aware,
            penalty: config.resolved_penalty(dataset)?,
            target_shape,
            member_shapes,
        })
    }

    fn terms(&self, indices: &[usize]) -> GroupTerms {
        let shape = shape_of(&combine(indices, self.dataset, self.mode))
            .expect("at least two patterns checked at construction");
        let magnitude = shape.magnitude();
        let fitted = if magnitude > 0.0 {
            shape.scaled(self.target_shape.magnitude() / magnitude)
        } else {
            shape.clone()
        };
        let distance = shape_distance(&fitted, &self.target_shape, self.sign_aware)
            .expect("shapes share the pattern count");
        let unit = normalized(&shape);
        let incoherence = indices
            .iter()
            .map(|&i| shape_distance(&self.member_shapes[i], &unit, false).expect("same length"))
            .sum();
        GroupTerms { distance, incoherence }
    }

    /// Sums in the given group order; callers pass groups sorted.
    fn total(&self, terms: impl Iterator<Item = GroupTerms>) -> (f64, f64, usize) {
        let (mut distance, mut incoherence, mut count) = (0.0, 0.0, 0usize);
        for t in terms {
            distance += t.distance;
            incoherence += t.incoherence;
            count += 1;
        }
        (distance + self.penalty * count as f64, incoherence, count)
    }
}

/// Sum of per-group rescaled shape distances plus `penalty * group count`,
/// over the dataset in its presented order.
pub fn score_partition(partition: &Partition, dataset: &Dataset, config: &GroupingConfig) -> Result<f64> {
    let scorer = Scorer::new(dataset, config)?;
    check_partition_arity(partition, dataset.arity())?;
    let (score, _, _) = scorer.total(partition.groups().iter().map(|g| scorer.terms(g.indices())));
    Ok(score)
}

fn check_partition_arity(partition: &Partition, arity: usize) -> Result<()> {
    let covered: usize = partition.groups().iter().map(|g| g.len()).sum::<usize>() + partition.dropped().len();
    for g in partition.groups() {
        g.check_arity(arity)?;
    }
    if covered != arity {
        return Err(Error::InvalidPartition(format!(
            "partition covers {covered} inputs, dataset has {arity}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Candidate {
    groups: Vec<Vec<usize>>,
    score: f64,
    incoherence: f64,
}

fn within_tolerance(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Total preference order shared by both searches. `Less` means `a` is preferred.
fn compare(a: &Candidate, b: &Candidate) -> Ordering {
    if !within_tolerance(a.score, b.score) {
        return a.score.total_cmp(&b.score);
    }
    a.groups
        .len()
        .cmp(&b.groups.len())
        .then_with(|| {
            if within_tolerance(a.incoherence, b.incoherence) {
                Ordering::Equal
            } else {
                a.incoherence.total_cmp(&b.incoherence)
            }
        })
        .then_with(|| a.groups.cmp(&b.groups))
}

/// Staged selection: keep the band around the minimum score, then fewest
/// groups, then the band around the minimum incoherence, then lexicographic.
/// The result does not depend on candidate order.
fn select_best(candidates: Vec<Candidate>) -> Option<Candidate> {
    let best_score = candidates.iter().map(|c| c.score).min_by(|a, b| a.total_cmp(b))?;
    let band: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| within_tolerance(c.score, best_score) || c.score < best_score)
        .collect();
    let fewest = band.iter().map(|c| c.groups.len()).min()?;
    let band: Vec<Candidate> = band.into_iter().filter(|c| c.groups.len() == fewest).collect();
    let best_coh = band.iter().map(|c| c.incoherence).min_by(|a, b| a.total_cmp(b))?;
    band.into_iter()
        .filter(|c| within_tolerance(c.incoherence, best_coh) || c.incoherence < best_coh)
        .min_by(|a, b| a.groups.cmp(&b.groups))
}

fn into_partition(candidate: Candidate, arity: usize) -> Partition {
    let mut used = vec![false; arity];
    let groups: Vec<SynapseGroup> = candidate
        .groups
        .into_iter()
        .map(|g| {
            for &i in &g {
                used[i] = true;
            }
            SynapseGroup(g)
        })
        .collect();
    let dropped = (0..arity).filter(|&i| !used[i]).collect();
    Partition::new(groups, dropped, arity).expect("search produces valid partitions")
}

/// Every set partition of `elements`, each as a list of group bitmasks
/// ordered by smallest member (restricted growth strings).
fn set_partitions(elements: &[usize], out: &mut Vec<Vec<u32>>) {
    fn recurse(elements: &[usize], pos: usize, groups: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == elements.len() {
            out.push(groups.clone());
            return;
        }
        let bit = 1u32 << elements[pos];
        for g in 0..groups.len() {
            groups[g] |= bit;
            recurse(elements, pos + 1, groups, out);
            groups[g] &= !bit;
        }
        groups.push(bit);
        recurse(elements, pos + 1, groups, out);
        groups.pop();
    }
    if !elements.is_empty() {
        recurse(elements, 0, &mut Vec::new(), out);
    }
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Minimum-score partition over all set partitions of the inputs (and of
/// every non-empty input subset when dropping is allowed).
pub fn search_exhaustive(dataset: &Dataset, config: &GroupingConfig) -> Result<Partition> {
    config.validate()?;
    let arity = dataset.arity();
    let cap = config.max_exhaustive_inputs.min(EXHAUSTIVE_HARD_LIMIT);
    if arity > cap {
        return Err(Error::TooManyInputs { arity, cap });
    }
    if arity == 0 {
        return Err(Error::InvalidConfig("dataset has no inputs".into()));
    }
    let arranged = arrange(dataset, config.pattern_order);
    let scorer = Scorer::new(&arranged, config)?;

    let table: Vec<GroupTerms> = (0..1u32 << arity)
        .into_par_iter()
        .map(|mask| {
            if mask == 0 {
                GroupTerms { distance: 0.0, incoherence: 0.0 }
            } else {
                scorer.terms(&mask_indices(mask))
            }
        })
        .collect();

    let all: Vec<usize> = (0..arity).collect();
    let mut partitions = Vec::new();
    if config.allow_drop {
        for keep in 1..1u32 << arity {
            set_partitions(&mask_indices(keep), &mut partitions);
        }
    } else {
        set_partitions(&all, &mut partitions);
    }

    let scored: Vec<(f64, f64)> = partitions
        .par_iter()
        .map(|masks| {
            let (score, incoherence, _) = scorer.total(masks.iter().map(|&m| table[m as usize]));
            (score, incoherence)
        })
        .collect();

    // Only candidates inside the winning score band need their structure materialized.
    let best = scored.iter().map(|s| s.0).min_by(|a, b| a.total_cmp(b)).expect("non-empty");
    let candidates: Vec<Candidate> = partitions
        .iter()
        .zip(&scored)
        .filter(|(_, (score, _))| within_tolerance(*score, best) || *score < best)
        .map(|(masks, &(score, incoherence))| Candidate {
            groups: masks.iter().map(|&m| mask_indices(m)).collect(),
            score,
            incoherence,
        })
        .collect();
    let winner = select_best(candidates).expect("non-empty");
    Ok(into_partition(winner, arity))
}

/// Agglomerative search: merge the best pair while that improves the
/// partition, then (if allowed) drop groups while that improves it.
pub fn search_greedy(dataset: &Dataset, config: &GroupingConfig) -> Result<Partition> {
    config.validate()?;
    let arity = dataset.arity();
    if arity == 0 {
        return Err(Error::InvalidConfig("dataset has no inputs".into()));
    }
    let arranged = arrange(dataset, config.pattern_order);
    let scorer = Scorer::new(&arranged, config)?;
    let mut cache: HashMap<Vec<usize>, GroupTerms> = HashMap::new();

    let mut evaluate = |groups: Vec<Vec<usize>>| -> Candidate {
        let mut groups = groups;
        for g in groups.iter_mut() {
            g.sort_unstable();
        }
        groups.sort();
        let terms: Vec<GroupTerms> = groups
            .iter()
            .map(|g| *cache.entry(g.clone()).or_insert_with(|| scorer.terms(g)))
            .collect();
        let (score, incoherence, _) = scorer.total(terms.into_iter());
        Candidate { groups, score, incoherence }
    };

    let mut current = evaluate((0..arity).map(|i| vec![i]).collect());
    while current.groups.len() > 1 {
        let n = current.groups.len();
        let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let mut groups = current.groups.clone();
                let merged = groups.remove(j);
                groups[i].extend(merged);
                candidates.push(evaluate(groups));
            }
        }
        match select_best(candidates) {
            Some(best) if compare(&best, &current) == Ordering::Less => current = best,
            _ => break,
        }
    }

    if config.allow_drop {
        while current.groups.len() > 1 {
            let candidates: Vec<Candidate> = (0..current.groups.len())
                .map(|i| {
                    let mut groups = current.groups.clone();
                    groups.remove(i);
                    evaluate(groups)
                })
                .collect();
            match select_best(candidates) {
                Some(best) if compare(&best, &current) == Ordering::Less => current = best,
                _ => break,
            }
        }
    }
    Ok(into_partition(current, arity))
}

/// Exhaustive when the arity fits under the cap, greedy otherwise.
pub fn search(dataset: &Dataset, config: &GroupingConfig) -> Result<Partition> {
    if dataset.arity() <= config.max_exhaustive_inputs.min(EXHAUSTIVE_HARD_LIMIT) {
        search_exhaustive(dataset, config)
    } else {
        search_greedy(dataset, config)
    }
}
