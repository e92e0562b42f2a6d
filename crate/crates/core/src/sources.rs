//! Seeded synthetic sources for corpus generation and test harnesses.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, SymbolSequence};
use crate::corpus::{Corpus, CorpusItem};
use crate::error::{Error, Result};

/// A labeled generator of fixed-length sequences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub length: usize,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceKind {
    /// Binary source emitting symbol 1 with probability `p`.
    Bernoulli { p: f64 },
    /// Order-k Markov chain over `symbols` states; `rows` has one row of
    /// next-symbol probabilities per context, contexts enumerated in
    /// lexicographic order. The chain starts from context all-zeros.
    Markov { symbols: usize, order: usize, rows: Vec<Vec<f64>> },
    /// Deterministic repetition of `pattern`.
    Periodic { pattern: Vec<u32> },
}

impl SourceSpec {
    pub fn validate(&self, data_symbols: usize) -> Result<()> {
        match &self.kind {
            SourceKind::Bernoulli { p } => {
                if !(p.is_finite() && *p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidSourceSpec(format!(
                        "bernoulli p must be in (0,1), got {p}"
                    )));
                }
                if data_symbols < 2 {
                    return Err(Error::InvalidSourceSpec(
                        "bernoulli needs at least 2 data symbols".into(),
                    ));
                }
            }
            SourceKind::Markov { symbols, order, rows } => {
                if *symbols < 2 || *symbols > data_symbols {
                    return Err(Error::InvalidSourceSpec(format!(
                        "markov symbol count {symbols} out of range"
                    )));
                }
                let expected = symbols.pow(*order as u32);
                if rows.len() != expected {
                    return Err(Error::InvalidSourceSpec(format!(
                        "markov needs {expected} rows, got {}",
                        rows.len()
                    )));
                }
                for row in rows {
                    if row.len() != *symbols {
                        return Err(Error::InvalidSourceSpec("row length mismatch".into()));
                    }
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|&p| !(p.is_finite() && p > 0.0 && p < 1.0))
                        || (sum - 1.0).abs() > 1e-12
                    {
                        return Err(Error::InvalidSourceSpec(format!(
                            "row probabilities must be in (0,1) and sum to 1, got {row:?}"
                        )));
                    }
                }
            }
            SourceKind::Periodic { pattern } => {
                if pattern.is_empty() {
                    return Err(Error::InvalidSourceSpec("empty pattern".into()));
                }
                if pattern.iter().any(|&s| s as usize >= data_symbols) {
                    return Err(Error::InvalidSourceSpec("pattern symbol out of range".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, alphabet: &Arc<Alphabet>, rng: &mut ChaCha8Rng) -> Result<SymbolSequence> {
        let symbols = match &self.kind {
            SourceKind::Bernoulli { p } => (0..self.length)
                .map(|_| u32::from(rng.random::<f64>() < *p))
                .collect(),
            SourceKind::Markov { symbols, order, rows } => {
                let mut out: Vec<u32> = Vec::with_capacity(self.length);
                for _ in 0..self.length {
                    let mut ctx_index = 0usize;
                    for pos in 0..*order {
                        let past = out
                            .len()
                            .checked_sub(*order - pos)
                            .map(|i| out[i] as usize)
                            .unwrap_or(0);
                        ctx_index = ctx_index * symbols + past;
                    }
                    let row = &rows[ctx_index];
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut sym = *symbols as u32 - 1;
                    for (s, &p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            sym = s as u32;
                            break;
                        }
                    }
                    out.push(sym);
                }
                out
            }
            SourceKind::Periodic { pattern } => (0..self.length)
                .map(|i| pattern[i % pattern.len()])
                .collect(),
        };
        SymbolSequence::new(alphabet.clone(), symbols)
    }
}

/// Deterministically generates `items_per_spec` items from each spec.
///
/// The alphabet has `data_symbols + 1` entries: the data symbols plus one
/// reserved separator at the last index for context building and joint
/// coding. Ids are `item-NNNN` in generation order; returns the corpus and
/// the id -> label ground-truth map.
pub fn generate_corpus(
    specs: &[SourceSpec],
    items_per_spec: usize,
    data_symbols: usize,
    seed: u64,
) -> Result<(Corpus, Vec<(String, String)>)> {
    for spec in specs {
        spec.validate(data_symbols)?;
    }
    let alphabet = Alphabet::indexed(data_symbols)?
        .with_reserved("sep")?
        .shared();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::new();
    let mut labels = Vec::new();
    let mut counter = 0usize;
    for spec in specs {
        for _ in 0..items_per_spec {
            let id = format!("item-{counter:04}");
            let seq = spec.sample(&alphabet, &mut rng)?;
            labels.push((id.clone(), spec.label.clone()));
            items.push(CorpusItem { id, seq });
            counter += 1;
        }
    }
    Ok((Corpus::new(alphabet, items)?, labels))
}

/// The standard two-source test corpus: `n_per_side` items of `length`
/// symbols from Bernoulli(0.9) labeled "dense" and from Bernoulli(0.1)
/// labeled "sparse".
pub fn two_source_corpus(
    n_per_side: usize,
    length: usize,
    seed: u64,
) -> Result<(Corpus, Vec<(String, String)>)> {
    generate_corpus(
        &[
            SourceSpec {
                kind: SourceKind::Bernoulli { p: 0.9 },
                length,
                label: "dense".into(),
            },
            SourceSpec {
                kind: SourceKind::Bernoulli { p: 0.1 },
                length,
                label: "sparse".into(),
            },
        ],
        n_per_side,
        2,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let (c1, l1) = two_source_corpus(5, 50, 7).unwrap();
        let (c2, l2) = two_source_corpus(5, 50, 7).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in c1.items().iter().zip(c2.items()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.seq.symbols(), b.seq.symbols());
        }
    }

    #[test]
    fn empirical_frequencies_track_the_spec() {
        let (corpus, labels) = two_source_corpus(50, 200, 7).unwrap();
        assert_eq!(corpus.len(), 100);
        let mut err_sum = 0.0;
        for (item, (_, label)) in corpus.items().iter().zip(&labels) {
            let ones = item.seq.symbols().iter().filter(|&&s| s == 1).count() as f64;
            let p_hat = ones / item.seq.len() as f64;
            let p = if label == "dense" { 0.9 } else { 0.1 };
            err_sum += (p_hat - p).abs();
        }
        assert!(err_sum / corpus.len() as f64 <= 0.08);
    }

    #[test]
    fn rejects_degenerate_probabilities() {
        let bad = SourceSpec {
            kind: SourceKind::Bernoulli { p: 1.0 },
            length: 10,
            label: "x".into(),
        };
        assert!(bad.validate(2).is_err());
        let bad_rows = SourceSpec {
            kind: SourceKind::Markov {
                symbols: 2,
                order: 1,
                rows: vec![vec![0.5, 0.6], vec![0.5, 0.5]],
            },
            length: 10,
            label: "x".into(),
        };
        assert!(bad_rows.validate(2).is_err());
    }

    #[test]
    fn markov_and_periodic_sample() {
        let alphabet = Alphabet::indexed(2).unwrap().with_reserved("sep").unwrap().shared();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let markov = SourceSpec {
            kind: SourceKind::Markov {
                symbols: 2,
                order: 1,
                rows: vec![vec![0.95, 0.05], vec![0.05, 0.95]],
            },
            length: 100,
            label: "m".into(),
        };
        let seq = markov.sample(&alphabet, &mut rng).unwrap();
        // Sticky chain: far fewer transitions than an unbiased coin.
        let flips = seq.symbols().windows(2).filter(|w| w[0] != w[1]).count();
        assert!(flips < 30);

        let periodic = SourceSpec {
            kind: SourceKind::Periodic { pattern: vec![0, 1, 1] },
            length: 7,
            label: "p".into(),
        };
        let seq = periodic.sample(&alphabet, &mut rng).unwrap();
        assert_eq!(seq.symbols(), &[0, 1, 1, 0, 1, 1, 0]);
    }
}
