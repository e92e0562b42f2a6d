//! Order-k adaptive Markov models with KT-smoothed counts.
//!
//! The predictive probability of symbol `s` in context `c` is
//! `(count(c, s) + 1/2) / (total(c) + size/2)`, which is strictly positive for
//! every symbol in every context. A model is either adaptive (counts update
//! while scoring, then roll back) or frozen (counts fixed; contexts only move
//! the Markov window). Adaptive scoring is the default, which makes sequence
//! code lengths satisfy the concatenation chain rule exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, SymbolSequence};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveModel {
    alphabet: Arc<Alphabet>,
    order: usize,
    counts: BTreeMap<Vec<u32>, Vec<u64>>,
    frozen: bool,
}

impl AdaptiveModel {
    /// Fresh adaptive model with empty counts.
    pub fn new(alphabet: Arc<Alphabet>, order: usize) -> Self {
        AdaptiveModel {
            alphabet,
            order,
            counts: BTreeMap::new(),
            frozen: false,
        }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    /// Value copy with the frozen flag set; used for snapshot scoring.
    pub fn frozen_snapshot(&self) -> Self {
        let mut m = self.clone();
        m.frozen = true;
        m
    }

    pub fn check_alphabet(&self, seq: &SymbolSequence) -> Result<()> {
        if Arc::ptr_eq(&self.alphabet, seq.alphabet()) || &*self.alphabet == &**seq.alphabet() {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }

    /// Increments counts by the (context, symbol) occurrences of `seq`.
    /// The Markov window starts empty: sequences are separate records.
    /// Training is deterministic and independent of the frozen flag.
    pub fn train(&mut self, seq: &SymbolSequence) -> Result<()> {
        self.check_alphabet(seq)?;
        let mut window = ContextWindow::new(self.order);
        for &s in seq.symbols() {
            let entry = self
                .counts
                .entry(window.key())
                .or_insert_with(|| vec![0u64; self.alphabet.size()]);
            entry[s as usize] += 1;
            window.push(s);
        }
        Ok(())
    }

    /// `self` trained on `seq`, as a value.
    pub fn trained(&self, seq: &SymbolSequence) -> Result<Self> {
        let mut m = self.clone();
        m.train(seq)?;
        Ok(m)
    }

    pub(crate) fn predictor(&self) -> Predictor {
        Predictor {
            counts: self.counts.clone(),
            order: self.order,
            size: self.alphabet.size(),
            adaptive: !self.frozen,
            window: ContextWindow::new(self.order),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

impl Serialize for AdaptiveModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            alphabet: (*self.alphabet).clone(),
            order: self.order,
            frozen: self.frozen,
            counts: self
                .counts
                .iter()
                .map(|(ctx, counts)| ContextCounts {
                    context: ctx.clone(),
                    counts: counts.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AdaptiveModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = ModelFile::deserialize(deserializer)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported model format version {}",
                file.version
            )));
        }
        let alphabet = file.alphabet.shared();
        let mut counts = BTreeMap::new();
        for cc in file.counts {
            if cc.counts.len() != alphabet.size() {
                return Err(serde::de::Error::custom(format!(
                    "count row of length {} for alphabet of size {}",
                    cc.counts.len(),
                    alphabet.size()
                )));
            }
            counts.insert(cc.context, cc.counts);
        }
        Ok(AdaptiveModel {
            alphabet,
            order: file.order,
            counts,
            frozen: file.frozen,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    alphabet: Alphabet,
    order: usize,
    frozen: bool,
    counts: Vec<ContextCounts>,
}

#[derive(Serialize, Deserialize)]
struct ContextCounts {
    context: Vec<u32>,
    counts: Vec<u64>,
}

/// Rolling length-k suffix of the processed history.
#[derive(Debug, Clone)]
pub(crate) struct ContextWindow {
    order: usize,
    buf: Vec<u32>,
}

impl ContextWindow {
    pub(crate) fn new(order: usize) -> Self {
        ContextWindow {
            order,
            buf: Vec::with_capacity(order),
        }
    }

    pub(crate) fn push(&mut self, s: u32) {
        if self.order == 0 {
            return;
        }
        if self.buf.len() == self.order {
            self.buf.remove(0);
        }
        self.buf.push(s);
    }

    /// Histories shorter than the order key their own shorter context.
    pub(crate) fn key(&self) -> Vec<u32> {
        self.buf.clone()
    }
}

/// Sequential KT predictor over a private copy of a model's counts.
#[derive(Debug, Clone)]
pub(crate) struct Predictor {
    counts: BTreeMap<Vec<u32>, Vec<u64>>,
    order: usize,
    size: usize,
    adaptive: bool,
    window: ContextWindow,
}

impl Predictor {
    /// Numerator weight `2*count + 1` and total `2*total + size` for `symbol`
    /// in the current context. The KT probability is `weight / total`.
    pub(crate) fn weight(&self, symbol: u32) -> (u64, u64) {
        match self.counts.get(&self.window.key()) {
            Some(row) => {
                let total: u64 = row.iter().sum();
                (2 * row[symbol as usize] + 1, 2 * total + self.size as u64)
            }
            None => (1, self.size as u64),
        }
    }

    /// Cumulative weight of symbols `0..symbol` in the current context.
    pub(crate) fn cumulative_below(&self, symbol: u32) -> u64 {
        match self.counts.get(&self.window.key()) {
            Some(row) => row[..symbol as usize]
                .iter()
                .map(|&c| 2 * c + 1)
                .sum(),
            None => symbol as u64,
        }
    }

    /// Largest symbol whose cumulative interval contains `target`.
    pub(crate) fn symbol_for_target(&self, target: u64) -> u32 {
        match self.counts.get(&self.window.key()) {
            Some(row) => {
                let mut acc = 0u64;
                for (i, &c) in row.iter().enumerate() {
                    acc += 2 * c + 1;
                    if target < acc {
                        return i as u32;
                    }
                }
                (row.len() - 1) as u32
            }
            None => (target as u32).min(self.size as u32 - 1),
        }
    }

    pub(crate) fn log2_prob(&self, symbol: u32) -> f64 {
        let (w, t) = self.weight(symbol);
        (w as f64 / t as f64).log2()
    }

    /// Advances the window and, when adaptive, records the observation.
    pub(crate) fn observe(&mut self, symbol: u32) {
        if self.adaptive {
            let row = self
                .counts
                .entry(self.window.key())
                .or_insert_with(|| vec![0u64; self.size]);
            row[symbol as usize] += 1;
        }
        self.window.push(symbol);
    }

    /// Feeds conditioning symbols: free of charge, same state evolution.
    pub(crate) fn feed_context(&mut self, context: &SymbolSequence) {
        for &s in context.symbols() {
            self.observe(s);
        }
    }
}
