//! Sequential code lengths and the arithmetic coder that achieves them.
//!
//! `code_len` is the exact sum of per-symbol KT surprisals,
//! `-sum_t log2 p(x_t | context, x_<t)`. `encode`/`decode` realize those
//! probabilities with a 62-bit integer arithmetic coder whose output is at
//! most `code_len + 2` bits, so every reported length is an achieved,
//! decodable description length rather than a score.

use crate::alphabet::SymbolSequence;
use crate::bitstream::{BitReader, BitWriter, Bitstream};
use crate::error::{Error, Result};
use crate::model::AdaptiveModel;

/// A non-negative, finite number of bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CodeLenBits(f64);

impl CodeLenBits {
    pub fn new(bits: f64) -> Result<Self> {
        if !bits.is_finite() || bits < 0.0 {
            return Err(Error::Serialization(format!(
                "code length must be finite and non-negative, got {bits}"
            )));
        }
        Ok(CodeLenBits(bits))
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for CodeLenBits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6} bits", self.0)
    }
}

const PRECISION: u32 = 62;
const WHOLE: u64 = 1 << PRECISION;
const HALF: u64 = WHOLE / 2;
const QUARTER: u64 = WHOLE / 4;

/// `-sum_t log2 p(x_t | context, x_<t)` under `model`.
///
/// Adaptive models update their counts on the context symbols (free of
/// charge) and on each scored symbol, then the call rolls everything back;
/// frozen models only move the Markov window. The model is never mutated.
pub fn code_len(
    model: &AdaptiveModel,
    seq: &SymbolSequence,
    context: &SymbolSequence,
) -> Result<CodeLenBits> {
    model.check_alphabet(seq)?;
    model.check_alphabet(context)?;
    let mut pred = model.predictor();
    pred.feed_context(context);
    let mut bits = 0.0;
    for &s in seq.symbols() {
        bits -= pred.log2_prob(s);
        pred.observe(s);
    }
    CodeLenBits::new(bits)
}

/// Code length of `x` after adapting a copy of `base` on `y`; the side
/// information `y` costs nothing. `base` is never mutated.
pub fn cond_code_len(
    x: &SymbolSequence,
    y: &SymbolSequence,
    base: &AdaptiveModel,
) -> Result<CodeLenBits> {
    let adapted = base.trained(y)?;
    code_len(&adapted, x, &SymbolSequence::empty(x.alphabet().clone()))
}

/// Encodes `seq` under `model` given `context`. The stream decodes back to
/// `seq` exactly when the decoder starts from the same model state, and its
/// length never exceeds `code_len(model, seq, context) + 2` bits.
pub fn encode(
    model: &AdaptiveModel,
    seq: &SymbolSequence,
    context: &SymbolSequence,
) -> Result<Bitstream> {
    model.check_alphabet(seq)?;
    model.check_alphabet(context)?;
    let mut pred = model.predictor();
    pred.feed_context(context);

    let mut writer = BitWriter::new();
    let mut low: u64 = 0;
    let mut high: u64 = WHOLE;
    let mut pending: u64 = 0;

    let mut emit = |writer: &mut BitWriter, pending: &mut u64, bit: bool| {
        writer.push(bit);
        for _ in 0..*pending {
            writer.push(!bit);
        }
        *pending = 0;
    };

    for &s in seq.symbols() {
        let (w, total) = pred.weight(s);
        assert!(
            total <= QUARTER,
            "cumulative model weight {total} exceeds coder precision"
        );
        let cl = pred.cumulative_below(s);
        let ch = cl + w;
        let span = (high - low) as u128;
        high = low + (span * ch as u128 / total as u128) as u64;
        low += (span * cl as u128 / total as u128) as u64;
        loop {
            if high <= HALF {
                emit(&mut writer, &mut pending, false);
                low <<= 1;
                high <<= 1;
            } else if low >= HALF {
                emit(&mut writer, &mut pending, true);
                low = (low - HALF) << 1;
                high = (high - HALF) << 1;
            } else if low >= QUARTER && high <= HALF + QUARTER {
                pending += 1;
                low = (low - QUARTER) << 1;
                high = (high - QUARTER) << 1;
            } else {
                break;
            }
        }
        pred.observe(s);
    }

    // After renormalization the interval straddles HALF, so the point HALF
    // always identifies it in one more bit; when the interval starts at zero
    // and no carries are pending, zero-extension alone suffices.
    if !(low == 0 && pending == 0) {
        emit(&mut writer, &mut pending, true);
    }
    Ok(writer.finish())
}

/// Decodes `length` symbols from `stream` under `model` given `context`.
pub fn decode(
    model: &AdaptiveModel,
    stream: &Bitstream,
    length: usize,
    context: &SymbolSequence,
) -> Result<SymbolSequence> {
    model.check_alphabet(context)?;
    let mut pred = model.predictor();
    pred.feed_context(context);

    let mut reader = BitReader::new(stream);
    let mut low: u64 = 0;
    let mut high: u64 = WHOLE;
    let mut value: u64 = 0;
    for _ in 0..PRECISION {
        value = value << 1 | reader.next() as u64;
    }

    let mut symbols = Vec::with_capacity(length);
    for _ in 0..length {
        let total = {
            let (_, total) = pred.weight(0);
            total
        };
        let span = (high - low) as u128;
        let target = (((value - low) as u128 + 1) * total as u128 - 1) / span;
        let s = pred.symbol_for_target(target as u64);
        let (w, _) = pred.weight(s);
        let cl = pred.cumulative_below(s);
        let ch = cl + w;
        high = low + (span * ch as u128 / total as u128) as u64;
        low += (span * cl as u128 / total as u128) as u64;
        loop {
            if high <= HALF {
                low <<= 1;
                high <<= 1;
                value = value << 1 | reader.next() as u64;
            } else if low >= HALF {
                low = (low - HALF) << 1;
                high = (high - HALF) << 1;
                value = (value - HALF) << 1 | reader.next() as u64;
            } else if low >= QUARTER && high <= HALF + QUARTER {
                low = (low - QUARTER) << 1;
                high = (high - QUARTER) << 1;
                value = (value - QUARTER) << 1 | reader.next() as u64;
            } else {
                break;
            }
        }
        symbols.push(s);
        pred.observe(s);
    }
    SymbolSequence::new(context.alphabet().clone(), symbols)
}

/// Normalized compression distance between nonempty `x` and `y`:
/// `(C(xy) - min(C(x), C(y))) / max(C(x), C(y))` with `C` the code length
/// under a fresh copy of `base`. The joint cost takes the cheaper of coding
/// the concatenation sequentially or the two parts independently, so the
/// result always lands in `[0, 1]`.
pub fn ncd(x: &SymbolSequence, y: &SymbolSequence, base: &AdaptiveModel) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySequence);
    }
    let empty = SymbolSequence::empty(x.alphabet().clone());
    let cx = code_len(base, x, &empty)?.bits();
    let cy = code_len(base, y, &empty)?.bits();
    let cxy = code_len(base, &x.concat(y)?, &empty)?.bits().min(cx + cy);
    Ok((cxy - cx.min(cy)) / cx.max(cy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn binary() -> Arc<Alphabet> {
        Alphabet::indexed(2).unwrap().shared()
    }

    fn seq(a: &Arc<Alphabet>, digits: &str) -> SymbolSequence {
        SymbolSequence::parse_digits(a.clone(), digits).unwrap()
    }

    fn empty(a: &Arc<Alphabet>) -> SymbolSequence {
        SymbolSequence::empty(a.clone())
    }

    #[test]
    fn empty_sequence_costs_zero_bits() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let bits = code_len(&m, &empty(&a), &empty(&a)).unwrap().bits();
        assert_eq!(bits, 0.0);
    }

    #[test]
    fn single_symbol_under_symmetric_prior_costs_one_bit() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let bits = code_len(&m, &seq(&a, "0"), &empty(&a)).unwrap().bits();
        assert!((bits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kt_product_for_0000() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let bits = code_len(&m, &seq(&a, "0000"), &empty(&a)).unwrap().bits();
        let expect = -(0.5f64 * 0.75 * (5.0 / 6.0) * (7.0 / 8.0)).log2();
        assert!((bits - expect).abs() < 1e-12);
        assert!((bits - 1.8707).abs() < 1e-4);
    }

    #[test]
    fn symmetric_counts_keep_one_bit() {
        let a = binary();
        let mut m = AdaptiveModel::new(a.clone(), 0);
        m.train(&seq(&a, "01")).unwrap();
        let bits = code_len(&m, &seq(&a, "0"), &empty(&a)).unwrap().bits();
        assert!((bits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trained_counts_lower_the_cost() {
        let a = binary();
        let mut m = AdaptiveModel::new(a.clone(), 0);
        m.train(&seq(&a, "00")).unwrap();
        let bits = code_len(&m, &seq(&a, "0"), &empty(&a)).unwrap().bits();
        let expect = -(2.5f64 / 3.0).log2();
        assert!((bits - expect).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_is_exact_for_adaptive_scoring() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 1);
        let x = seq(&a, "0110100");
        let y = seq(&a, "11010");
        let c = seq(&a, "001");
        let joint = code_len(&m, &x.concat(&y).unwrap(), &c).unwrap().bits();
        let split = code_len(&m, &x, &c).unwrap().bits()
            + code_len(&m, &y, &c.concat(&x).unwrap()).unwrap().bits();
        assert!((joint - split).abs() < 1e-9);
    }

    #[test]
    fn cond_on_empty_equals_plain() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let x = seq(&a, "010011");
        let lhs = cond_code_len(&x, &empty(&a), &m).unwrap().bits();
        let rhs = code_len(&m, &x, &empty(&a)).unwrap().bits();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn conditioning_on_identical_content_helps() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let x = SymbolSequence::new(a.clone(), vec![0; 64]).unwrap();
        let with = cond_code_len(&x, &x, &m).unwrap().bits();
        let without = code_len(&m, &x, &empty(&a)).unwrap().bits();
        assert!(with < without);
    }

    #[test]
    fn periodic_source_conditions_to_under_a_fifth_bit_per_symbol() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 1);
        let pattern: Vec<u32> = (0..256).map(|i| (i % 2) as u32).collect();
        let x = SymbolSequence::new(a.clone(), pattern).unwrap();
        let bits = cond_code_len(&x, &x, &m).unwrap().bits();
        assert!(bits / (x.len() as f64) < 0.2);
    }

    #[test]
    fn roundtrip_with_context_and_training() {
        let a = Alphabet::indexed(4).unwrap().shared();
        let mut m = AdaptiveModel::new(a.clone(), 1);
        m.train(&SymbolSequence::new(a.clone(), vec![0, 1, 2, 3, 0, 1]).unwrap())
            .unwrap();
        let ctx = SymbolSequence::new(a.clone(), vec![3, 2]).unwrap();
        let x = SymbolSequence::new(a.clone(), vec![0, 3, 3, 1, 2, 0, 0, 1]).unwrap();
        let stream = encode(&m, &x, &ctx).unwrap();
        let back = decode(&m, &stream, x.len(), &ctx).unwrap();
        assert_eq!(back, x);
        let bits = code_len(&m, &x, &ctx).unwrap().bits();
        assert!(stream.bit_len() as f64 <= bits + 2.0);
    }

    #[test]
    fn example_0000_fits_in_four_bits() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let x = seq(&a, "0000");
        let stream = encode(&m, &x, &empty(&a)).unwrap();
        assert!(stream.bit_len() <= 4);
        assert_eq!(decode(&m, &stream, 4, &empty(&a)).unwrap(), x);
    }

    #[test]
    fn thousand_random_binary_roundtrips_within_budget() {
        let a = binary();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let len = rng.random_range(0..200);
            let symbols: Vec<u32> = (0..len).map(|_| rng.random_range(0..2)).collect();
            let x = SymbolSequence::new(a.clone(), symbols).unwrap();
            let m = AdaptiveModel::new(a.clone(), rng.random_range(0..3));
            let stream = encode(&m, &x, &SymbolSequence::empty(a.clone())).unwrap();
            let back = decode(&m, &stream, x.len(), &SymbolSequence::empty(a.clone())).unwrap();
            assert_eq!(back, x);
            let bits = code_len(&m, &x, &SymbolSequence::empty(a.clone())).unwrap().bits();
            assert!(
                stream.bit_len() as f64 <= bits + 2.0,
                "stream {} bits vs code_len {}",
                stream.bit_len(),
                bits
            );
        }
    }

    #[test]
    fn determinism_bit_identical_streams() {
        let a = Alphabet::indexed(3).unwrap().shared();
        let mut m = AdaptiveModel::new(a.clone(), 2);
        m.train(&SymbolSequence::new(a.clone(), vec![0, 1, 2, 2, 1]).unwrap())
            .unwrap();
        let x = SymbolSequence::new(a.clone(), vec![2, 0, 1, 1, 0, 2]).unwrap();
        let e = SymbolSequence::empty(a.clone());
        let s1 = encode(&m, &x, &e).unwrap();
        let s2 = encode(&m, &x, &e).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(
            code_len(&m, &x, &e).unwrap().bits(),
            code_len(&m, &x, &e).unwrap().bits()
        );
    }

    #[test]
    fn frozen_model_does_not_adapt_while_scoring() {
        let a = binary();
        let mut m = AdaptiveModel::new(a.clone(), 0);
        m.train(&seq(&a, "0001")).unwrap();
        m.set_frozen(true);
        // Frozen: every symbol priced from the same counts.
        let per_symbol = code_len(&m, &seq(&a, "0"), &empty(&a)).unwrap().bits();
        let four = code_len(&m, &seq(&a, "0000"), &empty(&a)).unwrap().bits();
        assert!((four - 4.0 * per_symbol).abs() < 1e-12);
        // Roundtrip still holds.
        let x = seq(&a, "010001110");
        let stream = encode(&m, &x, &empty(&a)).unwrap();
        assert_eq!(decode(&m, &stream, x.len(), &empty(&a)).unwrap(), x);
    }

    #[test]
    fn ncd_basic_contracts() {
        let a = binary();
        let m = AdaptiveModel::new(a.clone(), 0);
        let one0 = seq(&a, "0");
        let one1 = seq(&a, "1");
        let d = ncd(&one0, &one1, &m).unwrap();
        assert!(d >= 0.0 && d <= 1.1);
        assert!(ncd(&one0, &empty(&a), &m).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Degenerate order-0 source: ncd(x, x) small but nonzero, because a
        // finite KT coder still pays a learning transient on the second copy.
        let x = SymbolSequence::new(a.clone(), vec![0; 256]).unwrap();
        let dxx = ncd(&x, &x, &m).unwrap();
        assert!(dxx > 0.0 && dxx <= 0.35, "ncd(x,x) = {dxx}");

        // Independent uniform pairs stay far apart.
        let us: Vec<u32> = (0..256).map(|_| rng.random_range(0..2)).collect();
        let vs: Vec<u32> = (0..256).map(|_| rng.random_range(0..2)).collect();
        let u = SymbolSequence::new(a.clone(), us).unwrap();
        let v = SymbolSequence::new(a.clone(), vs).unwrap();
        let duv = ncd(&u, &v, &m).unwrap();
        assert!(duv >= 0.8, "ncd(u,v) = {duv}");
    }
}
