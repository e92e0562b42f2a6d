//! Finite alphabets and symbol sequences.
//!
//! Every quantity in this crate is a function of sequences over a declared
//! finite alphabet. Sequences carry a shared handle to their alphabet so that
//! mixed-alphabet operations can be rejected early.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite alphabet with at least two named symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::AlphabetTooSmall(names.len()));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(Error::DuplicateSymbolName(n.clone()));
            }
        }
        Ok(Alphabet { names })
    }

    /// Alphabet `{"0", "1", ..., "size-1"}`.
    pub fn indexed(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| i.to_string()).collect())
    }

    /// 256 byte symbols plus one reserved separator symbol at index 256.
    pub fn bytes_with_separator() -> Self {
        let mut names: Vec<String> = (0..256u16).map(|b| format!("{b:02x}")).collect();
        names.push("sep".to_string());
        Alphabet { names }
    }

    /// The given data alphabet extended by one reserved symbol at the end.
    pub fn with_reserved(&self, name: &str) -> Result<Self> {
        let mut names = self.names.clone();
        names.push(name.to_string());
        Self::new(names)
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shared(self) -> Arc<Alphabet> {
        Arc::new(self)
    }
}

/// A finite sequence of symbol indices over a shared alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    alphabet: Arc<Alphabet>,
    symbols: Vec<u32>,
}

impl SymbolSequence {
    pub fn new(alphabet: Arc<Alphabet>, symbols: Vec<u32>) -> Result<Self> {
        for &s in &symbols {
            if s as usize >= alphabet.size() {
                return Err(Error::SymbolOutOfRange {
                    index: s as usize,
                    size: alphabet.size(),
                });
            }
        }
        Ok(SymbolSequence { alphabet, symbols })
    }

    pub fn empty(alphabet: Arc<Alphabet>) -> Self {
        SymbolSequence {
            alphabet,
            symbols: Vec::new(),
        }
    }

    /// Parses "0"/"1"-style strings over an indexed alphabet; convenient in tests.
    pub fn parse_digits(alphabet: Arc<Alphabet>, digits: &str) -> Result<Self> {
        let symbols = digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| Error::Serialization(format!("not a digit: {c}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Self::new(alphabet, symbols)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn same_alphabet(&self, other: &SymbolSequence) -> bool {
        Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet
    }

    pub fn check_alphabet(&self, other: &SymbolSequence) -> Result<()> {
        if self.same_alphabet(other) {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }

    /// Concatenation, keeping this sequence's alphabet handle.
    pub fn concat(&self, other: &SymbolSequence) -> Result<SymbolSequence> {
        self.check_alphabet(other)?;
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Ok(SymbolSequence {
            alphabet: self.alphabet.clone(),
            symbols,
        })
    }

    pub fn push(&mut self, symbol: u32) -> Result<()> {
        if symbol as usize >= self.alphabet.size() {
            return Err(Error::SymbolOutOfRange {
                index: symbol as usize,
                size: self.alphabet.size(),
            });
        }
        self.symbols.push(symbol);
        Ok(())
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> SymbolSequence {
        SymbolSequence {
            alphabet: self.alphabet.clone(),
            symbols: self.symbols[range].to_vec(),
        }
    }
}

/// Concatenates many sequences over one alphabet; `sep`, when given, is placed
/// between consecutive parts.
pub fn join(
    alphabet: &Arc<Alphabet>,
    parts: &[&SymbolSequence],
    sep: Option<u32>,
) -> Result<SymbolSequence> {
    let mut out = SymbolSequence::empty(alphabet.clone());
    for (i, part) in parts.iter().enumerate() {
        out.check_alphabet(part)?;
        if i > 0 {
            if let Some(s) = sep {
                out.push(s)?;
            }
        }
        out.symbols.extend_from_slice(&part.symbols);
    }
    Ok(out)
}
