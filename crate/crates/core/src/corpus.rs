//! Corpora: id-keyed collections of sequences over one alphabet, stored as
//! JSONL with one record per item.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, SymbolSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub id: String,
    pub seq: SymbolSequence,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    alphabet: Arc<Alphabet>,
    items: Vec<CorpusItem>,
}

/// One JSONL record: either raw symbol indices or UTF-8 text (tokenized to
/// bytes on load).
#[derive(Serialize, Deserialize)]
struct ItemRecord {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    symbols: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

impl Corpus {
    pub fn new(alphabet: Arc<Alphabet>, items: Vec<CorpusItem>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for item in &items {
            if !ids.insert(item.id.clone()) {
                return Err(Error::DuplicateItemId(item.id.clone()));
            }
            if !(Arc::ptr_eq(&alphabet, item.seq.alphabet()) || alphabet == *item.seq.alphabet()) {
                return Err(Error::AlphabetMismatch);
            }
        }
        Ok(Corpus { alphabet, items })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusItem> {
        self.items.iter().find(|it| it.id == id)
    }

    /// Item ids in lexicographic order; the canonical processing order.
    pub fn sorted_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.items.iter().map(|it| it.id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn read_jsonl<R: BufRead>(reader: R, alphabet: Arc<Alphabet>) -> Result<Self> {
        let mut items = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::Serialization(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ItemRecord = serde_json::from_str(&line)?;
            let seq = match (rec.symbols, rec.text) {
                (Some(symbols), None) => SymbolSequence::new(alphabet.clone(), symbols)?,
                (None, Some(text)) => SymbolSequence::new(
                    alphabet.clone(),
                    text.bytes().map(u32::from).collect(),
                )?,
                _ => {
                    return Err(Error::Serialization(format!(
                        "item {} must have exactly one of 'symbols' or 'text'",
                        rec.id
                    )))
                }
            };
            items.push(CorpusItem { id: rec.id, seq });
        }
        Corpus::new(alphabet, items)
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for item in &self.items {
            let rec = ItemRecord {
                id: item.id.clone(),
                symbols: Some(item.seq.symbols().to_vec()),
                text: None,
            };
            let line = serde_json::to_string(&rec)?;
            writeln!(writer, "{line}").map_err(|e| Error::Serialization(e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_ids() {
        let a = Alphabet::indexed(2).unwrap().shared();
        let item = |id: &str| CorpusItem {
            id: id.to_string(),
            seq: SymbolSequence::new(a.clone(), vec![0, 1]).unwrap(),
        };
        assert!(Corpus::new(a.clone(), vec![item("a"), item("a")]).is_err());
        assert!(Corpus::new(a.clone(), vec![item("a"), item("b")]).is_ok());
    }

    #[test]
    fn jsonl_roundtrip() {
        let a = Alphabet::indexed(3).unwrap().shared();
        let corpus = Corpus::new(
            a.clone(),
            vec![
                CorpusItem {
                    id: "x".into(),
                    seq: SymbolSequence::new(a.clone(), vec![0, 2, 1]).unwrap(),
                },
                CorpusItem {
                    id: "y".into(),
                    seq: SymbolSequence::new(a.clone(), vec![1]).unwrap(),
                },
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let back = Corpus::read_jsonl(&buf[..], a).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.get("x").unwrap().seq.symbols(), &[0, 2, 1]);
    }

    #[test]
    fn text_records_tokenize_to_bytes() {
        let a = Alphabet::bytes_with_separator().shared();
        let jsonl = "{\"id\":\"t\",\"text\":\"hi\"}\n";
        let corpus = Corpus::read_jsonl(jsonl.as_bytes(), a).unwrap();
        assert_eq!(corpus.get("t").unwrap().seq.symbols(), &[104, 105]);
    }
}
