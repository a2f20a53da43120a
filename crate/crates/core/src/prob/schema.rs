use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// A finite, nonempty list of distinct symbol names.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Arc<Vec<String>>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Alphabet> {
        if symbols.is_empty() {
            return Err(Error::validation("alphabet must be nonempty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s) {
                return Err(Error::validation(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Alphabet {
            symbols: Arc::new(symbols),
        })
    }

    pub fn named(symbols: &[&str]) -> Alphabet {
        Alphabet::new(symbols.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn binary() -> Alphabet {
        Alphabet::named(&["0", "1"])
    }

    /// The one-symbol alphabet used for empty coordinate groups.
    pub fn unit() -> Alphabet {
        Alphabet::named(&["()"])
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbol(&self, i: u32) -> &str {
        &self.symbols[i as usize]
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(|s| s.as_str())
    }

    pub fn index_of(&self, symbol: &str) -> Option<u32> {
        self.symbols.iter().position(|s| s == symbol).map(|i| i as u32)
    }

    /// Product alphabet over the given factors, in row-major order (the
    /// first factor varies slowest). Symbols are `(a,b,...)`.
    pub fn product(factors: &[&Alphabet]) -> Alphabet {
        if factors.is_empty() {
            return Alphabet::unit();
        }
        let sizes: Vec<usize> = factors.iter().map(|a| a.len()).collect();
        let total: usize = sizes.iter().product();
        let mut symbols = Vec::with_capacity(total);
        for idx in 0..total {
            let parts = mixed_radix_split(idx as u32, &sizes);
            let names: Vec<&str> = parts
                .iter()
                .zip(factors)
                .map(|(&p, a)| a.symbol(p))
                .collect();
            symbols.push(format!("({})", names.join(",")));
        }
        Alphabet {
            symbols: Arc::new(symbols),
        }
    }

    /// `n`-fold tuple alphabet. `power(1)` is the alphabet itself, so that
    /// one-fold repetition is the identity.
    pub fn power(&self, n: u32) -> Alphabet {
        assert!(n >= 1, "tuple power requires n >= 1");
        if n == 1 {
            return self.clone();
        }
        let factors: Vec<&Alphabet> = (0..n).map(|_| self).collect();
        Alphabet::product(&factors)
    }

    /// Tagged disjoint union: symbols of `x` become `x:sym`, of `y` `y:sym`.
    pub fn union_tagged(x: &Alphabet, y: &Alphabet) -> Alphabet {
        let mut symbols: Vec<String> = x.symbols().map(|s| format!("x:{s}")).collect();
        symbols.extend(y.symbols().map(|s| format!("y:{s}")));
        Alphabet {
            symbols: Arc::new(symbols),
        }
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet{:?}", self.symbols)
    }
}

/// Row-major index of `parts` under the given per-position sizes.
pub fn mixed_radix_index(parts: &[u32], sizes: &[usize]) -> u32 {
    debug_assert_eq!(parts.len(), sizes.len());
    let mut idx: u64 = 0;
    for (&p, &s) in parts.iter().zip(sizes) {
        debug_assert!((p as usize) < s);
        idx = idx * s as u64 + p as u64;
    }
    u32::try_from(idx).expect("tuple index overflow")
}

/// Inverse of [`mixed_radix_index`].
pub fn mixed_radix_split(mut idx: u32, sizes: &[usize]) -> Vec<u32> {
    let mut parts = vec![0u32; sizes.len()];
    for (slot, &s) in parts.iter_mut().zip(sizes).rev() {
        *slot = idx % s as u32;
        idx /= s as u32;
    }
    debug_assert_eq!(idx, 0);
    parts
}

/// One symbol index per schema coordinate, in schema order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome(Vec<u32>);

impl Outcome {
    pub fn new(indices: Vec<u32>) -> Outcome {
        Outcome(indices)
    }

    pub fn empty() -> Outcome {
        Outcome(Vec::new())
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, pos: usize) -> u32 {
        self.0[pos]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn project(&self, positions: &[usize]) -> Outcome {
        Outcome(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub fn concat(&self, other: &Outcome) -> Outcome {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Outcome(v)
    }
}

impl fmt::Debug for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Outcome{:?}", self.0)
    }
}

/// Ordered list of named coordinates with their alphabets. Names are
/// unique within a schema.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Schema {
    coords: Vec<(String, Alphabet)>,
}

impl Schema {
    pub fn new(coords: Vec<(String, Alphabet)>) -> Result<Schema> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, _) in &coords {
            if !seen.insert(name.clone()) {
                return Err(Error::schema(format!("duplicate coordinate `{name}`")));
            }
        }
        Ok(Schema { coords })
    }

    pub fn named(coords: &[(&str, &Alphabet)]) -> Result<Schema> {
        Schema::new(
            coords
                .iter()
                .map(|(n, a)| (n.to_string(), (*a).clone()))
                .collect(),
        )
    }

    pub fn empty() -> Schema {
        Schema { coords: Vec::new() }
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coords.iter().map(|(n, _)| n.as_str())
    }

    pub fn name(&self, pos: usize) -> &str {
        &self.coords[pos].0
    }

    pub fn alphabet(&self, pos: usize) -> &Alphabet {
        &self.coords[pos].1
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|(n, _)| n == name)
    }

    /// Positions of the given distinct coordinate names.
    pub fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for &name in names {
            let p = self
                .position(name)
                .ok_or_else(|| Error::schema(format!("unknown coordinate `{name}`")))?;
            if out.contains(&p) {
                return Err(Error::schema(format!("repeated coordinate `{name}`")));
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn project(&self, positions: &[usize]) -> Schema {
        Schema {
            coords: positions.iter().map(|&p| self.coords[p].clone()).collect(),
        }
    }

    pub fn concat(&self, other: &Schema) -> Result<Schema> {
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        Schema::new(coords)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.coords.iter().map(|(_, a)| a.len()).collect()
    }

    pub fn total_outcomes(&self) -> u128 {
        self.coords.iter().map(|(_, a)| a.len() as u128).product()
    }

    pub fn contains_outcome(&self, o: &Outcome) -> bool {
        o.len() == self.arity()
            && o.indices()
                .iter()
                .zip(&self.coords)
                .all(|(&i, (_, a))| (i as usize) < a.len())
    }

    /// Row-major enumeration of the full outcome space.
    pub fn iter_outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        let sizes = self.sizes();
        let total = self.total_outcomes();
        assert!(total <= u32::MAX as u128, "outcome space too large");
        (0..total as u32).map(move |i| Outcome::new(mixed_radix_split(i, &sizes)))
    }

    /// Human-readable symbols for an outcome, in schema order.
    pub fn describe(&self, o: &Outcome) -> Vec<String> {
        o.indices()
            .iter()
            .zip(&self.coords)
            .map(|(&i, (_, a))| a.symbol(i).to_string())
            .collect()
    }
}
