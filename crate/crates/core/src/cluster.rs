//! Competitive clustering by conditional code length.
//!
//! Clusters compete for items: each cluster offers a conditional description
//! of the item (its model adapted on a deterministic context built from its
//! members), and the item goes to the cluster with the shortest code. Items
//! are scored leave-one-out so a cluster never explains an item with the
//! item itself. Variants: fixed shared model with contexts (`logprob_cluster`),
//! per-cluster trainable models (`em_cluster`), merge-and-restart after
//! collapse (`merge_winner`), and seed-pinned runs (`grounded_cluster`).
//!
//! All randomness flows from an explicit seed; batch reassignment, lowest-id
//! representative selection, and lowest-index tie-breaking make runs
//! reproducible and independent of corpus order.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{join, SymbolSequence};
use crate::coder::{code_len, cond_code_len, CodeLenBits};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::AdaptiveModel;

pub const STATE_FORMAT_VERSION: u32 = 1;

/// Deterministic context construction: `representatives` members at evenly
/// spaced ranks of the id-sorted member list (rank 0, so the lowest id, is
/// always included), joined by the reserved `separator` symbol. Rank spacing
/// rather than a lowest-id prefix keeps the context representative of the
/// whole membership even when ids correlate with content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextBuilder {
    pub representatives: usize,
    pub separator: u32,
}

impl ContextBuilder {
    pub fn new(representatives: usize, separator: u32) -> Self {
        ContextBuilder {
            representatives,
            separator,
        }
    }

    fn pick<'a>(&self, members: &'a [String], exclude: Option<&str>) -> Vec<&'a str> {
        let pool: Vec<&str> = members
            .iter()
            .map(String::as_str)
            .filter(|id| Some(*id) != exclude)
            .collect();
        let n = pool.len();
        let m = self.representatives;
        if n <= m {
            return pool;
        }
        (0..m)
            .map(|j| pool[if m == 1 { 0 } else { j * (n - 1) / (m - 1) }])
            .collect()
    }

    /// Context for a cluster given its member ids (sorted ascending),
    /// excluding `exclude` (leave-one-out).
    pub fn build(
        &self,
        corpus: &Corpus,
        members: &[String],
        exclude: Option<&str>,
    ) -> Result<SymbolSequence> {
        let chosen: Vec<&SymbolSequence> = self
            .pick(members, exclude)
            .into_iter()
            .map(|id| {
                corpus
                    .get(id)
                    .map(|it| &it.seq)
                    .ok_or_else(|| Error::UnknownItemId(id.to_string()))
            })
            .collect::<Result<_>>()?;
        join(corpus.alphabet(), &chosen, Some(self.separator))
    }

    /// Whether leave-one-out of `id` can change the cluster's context.
    fn exclusion_matters(&self, members: &[String], id: &str) -> bool {
        members.binary_search_by(|m| m.as_str().cmp(id)).is_ok()
    }
}

/// A record of one accepted reassignment, for auditing margin stability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveRecord {
    pub round: u32,
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Score improvement in bits; zero only for exact ties resolved toward
    /// the lower cluster index.
    pub improvement: f64,
}

/// Partition of a corpus plus the per-cluster model snapshots that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterState {
    pub version: u32,
    pub k: usize,
    pub margin: f64,
    pub round: u32,
    pub assignment: BTreeMap<String, usize>,
    /// Tracked total code length after each round, in bits.
    pub round_log: Vec<f64>,
    pub moves: Vec<MoveRecord>,
    pub models: Vec<AdaptiveModel>,
}

impl ClusterState {
    pub fn members(&self, cluster: usize) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn ownership_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &c in self.assignment.values() {
            counts[c] += 1;
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let state: ClusterState = serde_json::from_str(json)?;
        if state.version != STATE_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(state.version));
        }
        Ok(state)
    }
}

/// Per-cluster seed ids; pinned items that fix cluster identity.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SeedSet {
    pub clusters: Vec<Vec<String>>,
}

impl SeedSet {
    pub fn empty(k: usize) -> Self {
        SeedSet {
            clusters: vec![Vec::new(); k],
        }
    }

    pub fn is_all_empty(&self) -> bool {
        self.clusters.iter().all(|c| c.is_empty())
    }

    fn validate(&self, corpus: &Corpus, k: usize) -> Result<()> {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (c, ids) in self.clusters.iter().enumerate() {
            if c >= k {
                return Err(Error::ZeroClusters);
            }
            for id in ids {
                if corpus.get(id).is_none() {
                    return Err(Error::UnknownItemId(id.clone()));
                }
                if let Some(&first) = seen.get(id.as_str()) {
                    return Err(Error::ConflictingSeeds {
                        id: id.clone(),
                        first,
                        second: c,
                    });
                }
                seen.insert(id, c);
            }
        }
        if !self.is_all_empty() {
            let empty = self.clusters.iter().filter(|c| c.is_empty()).count()
                + k.saturating_sub(self.clusters.len());
            if empty > k.saturating_sub(2) {
                return Err(Error::TooManySeedlessClusters { empty, k });
            }
        }
        Ok(())
    }
}

fn check_basics(corpus: &Corpus, k: usize, rounds: u32) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if k == 0 {
        return Err(Error::ZeroClusters);
    }
    if rounds == 0 {
        return Err(Error::ZeroRounds);
    }
    Ok(())
}

fn random_assignment(
    ids: &[String],
    k: usize,
    rng: &mut ChaCha8Rng,
    pinned: &BTreeMap<String, usize>,
) -> BTreeMap<String, usize> {
    let mut assignment = BTreeMap::new();
    for id in ids {
        let c = match pinned.get(id) {
            Some(&c) => c,
            None => rng.random_range(0..k),
        };
        assignment.insert(id.clone(), c);
    }
    assignment
}

fn sorted_members(assignment: &BTreeMap<String, usize>, k: usize) -> Vec<Vec<String>> {
    let mut members = vec![Vec::new(); k];
    for (id, &c) in assignment {
        members[c].push(id.clone());
    }
    members
}

/// Leave-one-out score vector of one item against every cluster: the code
/// length of the item under the cluster's model adapted on the cluster's
/// context built without the item.
fn score_item(
    corpus: &Corpus,
    builder: &ContextBuilder,
    models: &[AdaptiveModel],
    members: &[Vec<String>],
    id: &str,
    cache: &mut BTreeMap<(usize, Option<String>), AdaptiveModel>,
) -> Result<Vec<f64>> {
    let item = corpus
        .get(id)
        .ok_or_else(|| Error::UnknownItemId(id.to_string()))?;
    let empty = SymbolSequence::empty(corpus.alphabet().clone());
    let mut scores = Vec::with_capacity(models.len());
    for (c, model) in models.iter().enumerate() {
        let exclude = builder
            .exclusion_matters(&members[c], id)
            .then(|| id.to_string());
        let key = (c, exclude.clone());
        if !cache.contains_key(&key) {
            let ctx = builder.build(corpus, &members[c], exclude.as_deref())?;
            cache.insert(key.clone(), model.trained(&ctx)?);
        }
        let adapted = &cache[&key];
        scores.push(code_len(adapted, &item.seq, &empty)?.bits());
    }
    Ok(scores)
}

/// Decides whether an item moves from `cur` given its score vector: the best
/// alternative must beat the current score by more than `margin`, except
/// that exact ties resolve toward the lower cluster index.
fn decide_move(scores: &[f64], cur: usize, margin: f64) -> Option<(usize, f64)> {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    if best == cur {
        return None;
    }
    let improvement = scores[cur] - scores[best];
    if improvement > margin || (improvement == 0.0 && best < cur) {
        Some((best, improvement))
    } else {
        None
    }
}

/// Batch reassignment rounds with fixed per-cluster models and evolving
/// contexts; the shared engine behind `logprob_cluster` and
/// `grounded_cluster`.
fn competition_rounds(
    corpus: &Corpus,
    builder: &ContextBuilder,
    models: Vec<AdaptiveModel>,
    mut assignment: BTreeMap<String, usize>,
    pinned: &BTreeSet<String>,
    k: usize,
    rounds: u32,
    margin: f64,
) -> Result<ClusterState> {
    let ids = corpus.sorted_ids();
    let mut round_log = Vec::new();
    let mut moves = Vec::new();
    let mut rounds_run = 0;

    for round in 1..=rounds {
        rounds_run = round;
        let members = sorted_members(&assignment, k);
        let mut cache = BTreeMap::new();
        let mut proposed: Vec<(String, usize, usize, f64)> = Vec::new();
        let mut tracked = 0.0;

        for id in &ids {
            let scores = score_item(corpus, builder, &models, &members, id, &mut cache)?;
            let cur = assignment[id];
            let decision = if pinned.contains(id) {
                None
            } else {
                decide_move(&scores, cur, margin)
            };
            match decision {
                Some((to, improvement)) => {
                    tracked += scores[to];
                    proposed.push((id.clone(), cur, to, improvement));
                }
                None => tracked += scores[cur],
            }
        }

        let stable = proposed.is_empty();
        for (id, from, to, improvement) in proposed {
            assignment.insert(id.clone(), to);
            moves.push(MoveRecord {
                round,
                id,
                from,
                to,
                improvement,
            });
        }
        round_log.push(tracked);
        if stable {
            break;
        }
    }

    Ok(ClusterState {
        version: STATE_FORMAT_VERSION,
        k,
        margin,
        round: rounds_run,
        assignment,
        round_log,
        moves,
        models,
    })
}

/// Leave-one-out competitive scoring of a single item against the clusters
/// of an existing state; returns the winning index (lowest wins ties) and
/// the full score vector for audit.
pub fn assign_item(
    id: &str,
    state: &ClusterState,
    corpus: &Corpus,
    builder: &ContextBuilder,
) -> Result<(usize, Vec<CodeLenBits>)> {
    if state.k == 0 {
        return Err(Error::ZeroClusters);
    }
    if corpus.get(id).is_none() {
        return Err(Error::UnknownItemId(id.to_string()));
    }
    let members = sorted_members(&state.assignment, state.k);
    let mut cache = BTreeMap::new();
    let scores = score_item(corpus, builder, &state.models, &members, id, &mut cache)?;
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    let scores = scores
        .into_iter()
        .map(CodeLenBits::new)
        .collect::<Result<Vec<_>>>()?;
    Ok((best, scores))
}

/// Competitive clustering with a fixed shared model: clusters differ only by
/// their contexts. Initialization is uniform pseudo-random from `seed`;
/// rounds run until stable or `rounds` is hit.
pub fn logprob_cluster(
    corpus: &Corpus,
    base: &AdaptiveModel,
    builder: &ContextBuilder,
    k: usize,
    rounds: u32,
    margin: f64,
    seed: u64,
) -> Result<ClusterState> {
    check_basics(corpus, k, rounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = random_assignment(&corpus.sorted_ids(), k, &mut rng, &BTreeMap::new());
    let models = vec![base.clone(); k];
    competition_rounds(
        corpus,
        builder,
        models,
        assignment,
        &BTreeSet::new(),
        k,
        rounds,
        margin,
    )
}

fn retrain_on_owned(
    corpus: &Corpus,
    base: &AdaptiveModel,
    members: &[Vec<String>],
) -> Result<Vec<AdaptiveModel>> {
    members
        .iter()
        .map(|ids| {
            let mut m = base.clone();
            for id in ids {
                m.train(&corpus.get(id).expect("validated id").seq)?;
            }
            Ok(m.frozen_snapshot())
        })
        .collect()
}

fn frozen_total(
    corpus: &Corpus,
    model: &AdaptiveModel,
    ids: &[String],
) -> Result<f64> {
    let empty = SymbolSequence::empty(corpus.alphabet().clone());
    let mut total = 0.0;
    for id in ids {
        total += code_len(model, &corpus.get(id).expect("validated id").seq, &empty)?.bits();
    }
    Ok(total)
}

/// EM-style clustering: the E-step assigns each item to the cluster whose
/// frozen model snapshot codes it shortest; the M-step retrains each model
/// from scratch on its owned items, keeping the old model whenever
/// retraining would not improve that cluster's total. The recorded per-round
/// total code length is therefore non-increasing by construction.
pub fn em_cluster(
    corpus: &Corpus,
    base: &AdaptiveModel,
    k: usize,
    rounds: u32,
    seed: u64,
) -> Result<ClusterState> {
    check_basics(corpus, k, rounds)?;
    let ids = corpus.sorted_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = random_assignment(&ids, k, &mut rng, &BTreeMap::new());
    let mut models = retrain_on_owned(corpus, base, &sorted_members(&assignment, k))?;
    let empty = SymbolSequence::empty(corpus.alphabet().clone());

    let mut round_log = Vec::new();
    let mut moves = Vec::new();
    let mut rounds_run = 0;

    for round in 1..=rounds {
        rounds_run = round;
        // E-step against frozen snapshots.
        let mut tracked = 0.0;
        let mut changed = false;
        for id in &ids {
            let seq = &corpus.get(id).expect("validated id").seq;
            let scores: Vec<f64> = models
                .iter()
                .map(|m| code_len(m, seq, &empty).map(|b| b.bits()))
                .collect::<Result<_>>()?;
            let mut best = 0usize;
            for (i, &s) in scores.iter().enumerate() {
                if s < scores[best] {
                    best = i;
                }
            }
            tracked += scores[best];
            let cur = assignment[id];
            if best != cur {
                changed = true;
                moves.push(MoveRecord {
                    round,
                    id: id.clone(),
                    from: cur,
                    to: best,
                    improvement: scores[cur] - scores[best],
                });
                assignment.insert(id.clone(), best);
            }
        }
        round_log.push(tracked);

        // M-step, gated per cluster so the tracked total cannot increase.
        let members = sorted_members(&assignment, k);
        let candidates = retrain_on_owned(corpus, base, &members)?;
        for (c, candidate) in candidates.into_iter().enumerate() {
            let old = frozen_total(corpus, &models[c], &members[c])?;
            let new = frozen_total(corpus, &candidate, &members[c])?;
            if new <= old {
                models[c] = candidate;
            }
        }

        if !changed && round > 1 {
            break;
        }
    }

    Ok(ClusterState {
        version: STATE_FORMAT_VERSION,
        k,
        margin: 0.0,
        round: rounds_run,
        assignment,
        round_log,
        moves,
        models,
    })
}

/// After a collapse (one cluster owning at least `threshold` of the corpus),
/// promotes the winner's model to the new shared base and restarts: all
/// cluster models become copies of it and assignments re-randomize from
/// `seed`. Returns the new base and the fresh state.
pub fn merge_winner(
    state: &ClusterState,
    corpus: &Corpus,
    threshold: f64,
    seed: u64,
) -> Result<(AdaptiveModel, ClusterState)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = state.ownership_counts();
    let mut winner = 0usize;
    for (i, &n) in counts.iter().enumerate() {
        if n > counts[winner] {
            winner = i;
        }
    }
    let max_share = counts[winner] as f64 / corpus.len() as f64;
    if max_share < threshold {
        return Err(Error::NotCollapsed {
            threshold,
            max_share,
        });
    }
    let base = state.models[winner].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = random_assignment(&corpus.sorted_ids(), state.k, &mut rng, &BTreeMap::new());
    let fresh = ClusterState {
        version: STATE_FORMAT_VERSION,
        k: state.k,
        margin: state.margin,
        round: 0,
        assignment,
        round_log: Vec::new(),
        moves: Vec::new(),
        models: vec![base.clone(); state.k],
    };
    Ok((base, fresh))
}

/// Seed-grounded clustering: seeded items are pinned to their clusters for
/// every round, each cluster's model is the base trained on its seeds, and
/// cluster identity is inherited from the seed labels. An entirely empty
/// seed set reduces to `logprob_cluster`.
pub fn grounded_cluster(
    corpus: &Corpus,
    base: &AdaptiveModel,
    builder: &ContextBuilder,
    seeds: &SeedSet,
    k: usize,
    rounds: u32,
    margin: f64,
    seed: u64,
) -> Result<ClusterState> {
    check_basics(corpus, k, rounds)?;
    seeds.validate(corpus, k)?;
    if seeds.is_all_empty() {
        return logprob_cluster(corpus, base, builder, k, rounds, margin, seed);
    }

    let mut pinned_map = BTreeMap::new();
    let mut models = Vec::with_capacity(k);
    for c in 0..k {
        let mut model = base.clone();
        if let Some(ids) = seeds.clusters.get(c) {
            let mut sorted = ids.clone();
            sorted.sort();
            for id in &sorted {
                pinned_map.insert(id.clone(), c);
                model.train(&corpus.get(id).expect("validated id").seq)?;
            }
        }
        models.push(model);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = random_assignment(&corpus.sorted_ids(), k, &mut rng, &pinned_map);
    let pinned: BTreeSet<String> = pinned_map.into_keys().collect();
    competition_rounds(
        corpus, builder, models, assignment, &pinned, k, rounds, margin,
    )
}

/// One row of a seed-transmission table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransmissionRow {
    pub budget: usize,
    /// Total code length of the transmitted seed sequences under the shared
    /// base model, in bits.
    pub seed_bits: f64,
    /// Fraction of items whose received assignment matches the target.
    pub agreement: f64,
}

/// For each budget, the sender picks that many lowest-conditional-code-length
/// representatives per target cluster, the receiver reruns grounded
/// clustering from those seeds alone, and the row records seed cost and
/// assignment agreement.
pub fn seed_transmission_experiment(
    corpus: &Corpus,
    base: &AdaptiveModel,
    builder: &ContextBuilder,
    target: &ClusterState,
    budgets: &[usize],
    rounds: u32,
    margin: f64,
    seed: u64,
) -> Result<Vec<TransmissionRow>> {
    let empty = SymbolSequence::empty(corpus.alphabet().clone());
    let members = sorted_members(&target.assignment, target.k);

    // Rank each cluster's members once: most typical (cheapest to describe
    // from the rest of the cluster) first, ties by id.
    let mut ranked: Vec<Vec<String>> = Vec::with_capacity(target.k);
    for c in 0..target.k {
        let mut scored: Vec<(f64, String)> = Vec::new();
        for id in &members[c] {
            let ctx = builder.build(corpus, &members[c], Some(id))?;
            let bits =
                cond_code_len(&corpus.get(id).expect("validated id").seq, &ctx, base)?.bits();
            scored.push((bits, id.clone()));
        }
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        ranked.push(scored.into_iter().map(|(_, id)| id).collect());
    }

    let mut rows = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut seeds = SeedSet::empty(target.k);
        let mut seed_bits = 0.0;
        for c in 0..target.k {
            if budget > ranked[c].len() {
                return Err(Error::BudgetExceedsCluster {
                    budget,
                    size: ranked[c].len(),
                    cluster: c,
                });
            }
            for id in ranked[c].iter().take(budget) {
                seed_bits +=
                    code_len(base, &corpus.get(id).expect("validated id").seq, &empty)?.bits();
                seeds.clusters[c].push(id.clone());
            }
        }
        let received =
            grounded_cluster(corpus, base, builder, &seeds, target.k, rounds, margin, seed)?;
        let agreement = agreement_direct(&received.assignment, &target.assignment);
        rows.push(TransmissionRow {
            budget,
            seed_bits,
            agreement,
        });
    }
    Ok(rows)
}

/// Fraction of ids assigned identically in both maps.
pub fn agreement_direct(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let matched = a
        .iter()
        .filter(|(id, &c)| b.get(*id) == Some(&c))
        .count();
    matched as f64 / a.len() as f64
}

/// Best agreement between an assignment and ground-truth labels over all
/// injective cluster-to-label identifications.
pub fn agreement_permuted(assignment: &BTreeMap<String, usize>, labels: &[(String, String)]) -> f64 {
    if assignment.is_empty() {
        return 1.0;
    }
    let mut label_names: Vec<&str> = labels.iter().map(|(_, l)| l.as_str()).collect();
    label_names.sort();
    label_names.dedup();
    let k = assignment.values().max().map(|&c| c + 1).unwrap_or(1);
    let mut matrix = vec![vec![0usize; label_names.len()]; k];
    let label_of: BTreeMap<&str, &str> = labels
        .iter()
        .map(|(id, l)| (id.as_str(), l.as_str()))
        .collect();
    let mut total = 0usize;
    for (id, &c) in assignment {
        if let Some(l) = label_of.get(id.as_str()) {
            let li = label_names.binary_search(l).expect("deduped above");
            matrix[c][li] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }

    fn best(matrix: &[Vec<usize>], cluster: usize, used: &mut Vec<bool>) -> usize {
        if cluster == matrix.len() {
            return 0;
        }
        let mut best_score = best(matrix, cluster + 1, used); // leave unmatched
        for li in 0..used.len() {
            if !used[li] {
                used[li] = true;
                let s = matrix[cluster][li] + best(matrix, cluster + 1, used);
                used[li] = false;
                best_score = best_score.max(s);
            }
        }
        best_score
    }

    let mut used = vec![false; label_names.len()];
    best(&matrix, 0, &mut used) as f64 / total as f64
}
