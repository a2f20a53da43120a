//! JSON file formats for games, boxes, covers, partitions,
//! distributions, strategies, and channels.
//!
//! Probabilities are stored as string rationals `"num/den"` — floats
//! never appear in files, so write-then-read preserves every value
//! exactly. Entries with zero mass (or zero cover weight, or losing
//! predicate cells) are omitted and default to zero on read. Symbols are
//! referenced by name, never by position, so files survive alphabet
//! reordering only as far as their own declarations; every lookup failure
//! names the offending symbol and field.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::covers::{FractionalCover, RectanglePartition};
use crate::games::{DeterministicStrategy, Game};
use crate::nosignaling::NsBox;
use crate::prob::{Alphabet, ConditionalDistribution, Distribution, Outcome, Schema};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::{Error, Result};

fn parse_field(value: &str, what: &str) -> Result<Rational> {
    let r = parse_rational(value)
        .map_err(|_| Error::Parse(format!("{what}: `{value}` is not a rational")))?;
    if r.is_negative() {
        return Err(Error::validation(format!("{what}: `{value}` is negative")));
    }
    Ok(r)
}

fn lookup(alphabet: &Alphabet, symbol: &str, what: &str) -> Result<u32> {
    alphabet
        .index_of(symbol)
        .ok_or_else(|| Error::validation(format!("{what}: unknown symbol `{symbol}`")))
}

fn alphabet_from(symbols: &[String], what: &str) -> Result<Alphabet> {
    Alphabet::new(symbols.to_vec())
        .map_err(|e| Error::validation(format!("{what}: {e}")))
}

// ---------------------------------------------------------------------
// Games

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct QueryEntry {
    pub x: String,
    pub y: String,
    pub p: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PredicateEntry {
    pub x: String,
    pub y: String,
    pub a: String,
    pub b: String,
    pub win: u8,
}

/// On-disk form of a game: alphabets as symbol arrays, the query as a
/// sparse list of masses, and the predicate as a sparse list of winning
/// cells (omitted cells lose).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GameFile {
    pub x_alphabet: Vec<String>,
    pub y_alphabet: Vec<String>,
    pub a_alphabet: Vec<String>,
    pub b_alphabet: Vec<String>,
    pub query: Vec<QueryEntry>,
    #[serde(default)]
    pub predicate: Vec<PredicateEntry>,
}

impl GameFile {
    pub fn from_game(g: &Game) -> GameFile {
        let query = g
            .query()
            .support()
            .map(|(o, m)| QueryEntry {
                x: g.x_alphabet().symbol(o.get(0)).to_string(),
                y: g.y_alphabet().symbol(o.get(1)).to_string(),
                p: format_rational(m),
            })
            .collect();
        let mut predicate = Vec::new();
        for x in 0..g.x_alphabet().len() as u32 {
            for y in 0..g.y_alphabet().len() as u32 {
                for a in 0..g.a_alphabet().len() as u32 {
                    for b in 0..g.b_alphabet().len() as u32 {
                        if g.wins(x, y, a, b) {
                            predicate.push(PredicateEntry {
                                x: g.x_alphabet().symbol(x).to_string(),
                                y: g.y_alphabet().symbol(y).to_string(),
                                a: g.a_alphabet().symbol(a).to_string(),
                                b: g.b_alphabet().symbol(b).to_string(),
                                win: 1,
                            });
                        }
                    }
                }
            }
        }
        GameFile {
            x_alphabet: g.x_alphabet().symbols().map(String::from).collect(),
            y_alphabet: g.y_alphabet().symbols().map(String::from).collect(),
            a_alphabet: g.a_alphabet().symbols().map(String::from).collect(),
            b_alphabet: g.b_alphabet().symbols().map(String::from).collect(),
            query,
            predicate,
        }
    }

    pub fn into_game(&self) -> Result<Game> {
        let x = alphabet_from(&self.x_alphabet, "x_alphabet")?;
        let y = alphabet_from(&self.y_alphabet, "y_alphabet")?;
        let a = alphabet_from(&self.a_alphabet, "a_alphabet")?;
        let b = alphabet_from(&self.b_alphabet, "b_alphabet")?;

        let schema = Schema::named(&[("x", &x), ("y", &y)])?;
        let mut masses = BTreeMap::new();
        let mut total = Rational::zero();
        for entry in &self.query {
            let xi = lookup(&x, &entry.x, "query.x")?;
            let yi = lookup(&y, &entry.y, "query.y")?;
            let p = parse_field(&entry.p, "query.p")?;
            total += &p;
            if masses.insert(Outcome::new(vec![xi, yi]), p).is_some() {
                return Err(Error::validation(format!(
                    "query lists ({},{}) twice",
                    entry.x, entry.y
                )));
            }
        }
        if !total.is_one() {
            return Err(Error::validation(format!(
                "query masses sum to {}, expected 1/1",
                format_rational(&total)
            )));
        }
        let query = Distribution::from_masses(schema, masses)?;

        let mut wins = vec![false; x.len() * y.len() * a.len() * b.len()];
        for entry in &self.predicate {
            if entry.win > 1 {
                return Err(Error::validation(format!(
                    "predicate win flag must be 0 or 1, got {}",
                    entry.win
                )));
            }
            let xi = lookup(&x, &entry.x, "predicate.x")? as usize;
            let yi = lookup(&y, &entry.y, "predicate.y")? as usize;
            let ai = lookup(&a, &entry.a, "predicate.a")? as usize;
            let bi = lookup(&b, &entry.b, "predicate.b")? as usize;
            let idx = ((xi * y.len() + yi) * a.len() + ai) * b.len() + bi;
            wins[idx] = entry.win == 1;
        }
        Game::new(x, y, a, b, query, wins)
    }
}

// ---------------------------------------------------------------------
// Boxes

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BoxCell {
    pub a: String,
    pub b: String,
    pub p: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BoxBlock {
    pub x: String,
    pub y: String,
    pub table: Vec<BoxCell>,
}

/// On-disk form of a conditional box p(a,b|x,y): one block per question
/// pair, nonzero cells only. Alphabets come from the game the box is
/// read against.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(transparent)]
pub struct BoxFile(pub Vec<BoxBlock>);

impl BoxFile {
    pub fn from_box(bx: &NsBox) -> BoxFile {
        let mut blocks = Vec::new();
        for x in 0..bx.x_alphabet().len() as u32 {
            for y in 0..bx.y_alphabet().len() as u32 {
                let mut table = Vec::new();
                for a in 0..bx.a_alphabet().len() as u32 {
                    for b in 0..bx.b_alphabet().len() as u32 {
                        let p = bx.entry(x, y, a, b);
                        if !p.is_zero() {
                            table.push(BoxCell {
                                a: bx.a_alphabet().symbol(a).to_string(),
                                b: bx.b_alphabet().symbol(b).to_string(),
                                p: format_rational(p),
                            });
                        }
                    }
                }
                blocks.push(BoxBlock {
                    x: bx.x_alphabet().symbol(x).to_string(),
                    y: bx.y_alphabet().symbol(y).to_string(),
                    table,
                });
            }
        }
        BoxFile(blocks)
    }

    /// Resolves the box against a game's alphabets. Missing blocks are an
    /// error (every question pair needs a normalized answer law).
    pub fn into_box(&self, g: &Game) -> Result<NsBox> {
        let (x, y, a, b) = (
            g.x_alphabet(),
            g.y_alphabet(),
            g.a_alphabet(),
            g.b_alphabet(),
        );
        let mut table = vec![Rational::zero(); x.len() * y.len() * a.len() * b.len()];
        let mut seen = vec![false; x.len() * y.len()];
        for block in &self.0 {
            let xi = lookup(x, &block.x, "box.x")? as usize;
            let yi = lookup(y, &block.y, "box.y")? as usize;
            if std::mem::replace(&mut seen[xi * y.len() + yi], true) {
                return Err(Error::validation(format!(
                    "box lists block ({},{}) twice",
                    block.x, block.y
                )));
            }
            for cell in &block.table {
                let ai = lookup(a, &cell.a, "box.a")? as usize;
                let bi = lookup(b, &cell.b, "box.b")? as usize;
                let idx = ((xi * y.len() + yi) * a.len() + ai) * b.len() + bi;
                if !table[idx].is_zero() {
                    return Err(Error::validation(format!(
                        "box block ({},{}) lists ({},{}) twice",
                        block.x, block.y, cell.a, cell.b
                    )));
                }
                table[idx] = parse_field(&cell.p, "box.p")?;
            }
        }
        if let Some(flat) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "box has no block for question pair ({},{})",
                x.symbol((flat / y.len()) as u32),
                y.symbol((flat % y.len()) as u32)
            )));
        }
        NsBox::new(x.clone(), y.clone(), a.clone(), b.clone(), table)
    }
}

// ---------------------------------------------------------------------
// Covers and partitions

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CoverFEntry {
    pub a: u32,
    pub i: u32,
    pub v: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CoverGEntry {
    pub b: u32,
    pub i: u32,
    pub v: String,
}

/// On-disk form of a fractional cover: nonzero table entries, indexed by
/// answer position and cover index (both 0-based). The answer alphabet
/// sizes come from the game the cover is read against.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CoverFile {
    pub alpha: u32,
    pub f: Vec<CoverFEntry>,
    pub g: Vec<CoverGEntry>,
}

impl CoverFile {
    pub fn from_cover(c: &FractionalCover) -> CoverFile {
        let mut f = Vec::new();
        for a in 0..c.a_len() {
            for i in 0..c.alpha() {
                if !c.f(a, i).is_zero() {
                    f.push(CoverFEntry {
                        a: a as u32,
                        i: i as u32,
                        v: format_rational(c.f(a, i)),
                    });
                }
            }
        }
        let mut g = Vec::new();
        for b in 0..c.b_len() {
            for i in 0..c.alpha() {
                if !c.g(b, i).is_zero() {
                    g.push(CoverGEntry {
                        b: b as u32,
                        i: i as u32,
                        v: format_rational(c.g(b, i)),
                    });
                }
            }
        }
        CoverFile {
            alpha: c.alpha() as u32,
            f,
            g,
        }
    }

    pub fn into_cover(&self, a_len: usize, b_len: usize) -> Result<FractionalCover> {
        if self.alpha == 0 {
            return Err(Error::validation("cover size must be positive"));
        }
        let alpha = self.alpha as usize;
        let mut f = vec![vec![Rational::zero(); alpha]; a_len];
        for e in &self.f {
            if e.a as usize >= a_len || e.i as usize >= alpha {
                return Err(Error::validation(format!(
                    "cover f entry ({},{}) out of range",
                    e.a, e.i
                )));
            }
            f[e.a as usize][e.i as usize] = parse_field(&e.v, "cover.f.v")?;
        }
        let mut g = vec![vec![Rational::zero(); alpha]; b_len];
        for e in &self.g {
            if e.b as usize >= b_len || e.i as usize >= alpha {
                return Err(Error::validation(format!(
                    "cover g entry ({},{}) out of range",
                    e.b, e.i
                )));
            }
            g[e.b as usize][e.i as usize] = parse_field(&e.v, "cover.g.v")?;
        }
        FractionalCover::new(alpha, f, g)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RectFile {
    #[serde(rename = "as")]
    pub a_side: Vec<u32>,
    #[serde(rename = "bs")]
    pub b_side: Vec<u32>,
}

/// On-disk form of a rectangle partition: answer indices (0-based) per
/// rectangle side.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PartitionFile {
    pub rects: Vec<RectFile>,
}

impl PartitionFile {
    pub fn from_partition(p: &RectanglePartition) -> PartitionFile {
        PartitionFile {
            rects: p
                .rectangles()
                .iter()
                .map(|(a_side, b_side)| RectFile {
                    a_side: a_side.clone(),
                    b_side: b_side.clone(),
                })
                .collect(),
        }
    }

    pub fn into_partition(&self, a_len: usize, b_len: usize) -> Result<RectanglePartition> {
        RectanglePartition::new(
            a_len,
            b_len,
            self.rects
                .iter()
                .map(|r| (r.a_side.clone(), r.b_side.clone()))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------
// Distributions

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MassEntry {
    pub s: String,
    pub p: String,
}

/// On-disk form of a single-coordinate distribution.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DistributionFile {
    pub alphabet: Vec<String>,
    pub masses: Vec<MassEntry>,
}

impl DistributionFile {
    pub fn from_distribution(d: &Distribution) -> Result<DistributionFile> {
        if d.schema().arity() != 1 {
            return Err(Error::schema(
                "only single-coordinate distributions have a file form",
            ));
        }
        let alphabet = d.schema().alphabet(0);
        Ok(DistributionFile {
            alphabet: alphabet.symbols().map(String::from).collect(),
            masses: d
                .support()
                .map(|(o, m)| MassEntry {
                    s: alphabet.symbol(o.get(0)).to_string(),
                    p: format_rational(m),
                })
                .collect(),
        })
    }

    pub fn into_distribution(&self, coordinate: &str) -> Result<Distribution> {
        let alphabet = alphabet_from(&self.alphabet, "alphabet")?;
        let schema = Schema::named(&[(coordinate, &alphabet)])?;
        let mut masses = BTreeMap::new();
        let mut total = Rational::zero();
        for entry in &self.masses {
            let i = lookup(&alphabet, &entry.s, "masses.s")?;
            let p = parse_field(&entry.p, "masses.p")?;
            total += &p;
            if masses.insert(Outcome::new(vec![i]), p).is_some() {
                return Err(Error::validation(format!(
                    "masses list `{}` twice",
                    entry.s
                )));
            }
        }
        if !total.is_one() {
            return Err(Error::validation(format!(
                "masses sum to {}, expected 1/1",
                format_rational(&total)
            )));
        }
        Distribution::from_masses(schema, masses)
    }
}

// ---------------------------------------------------------------------
// Strategies

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AliceAssignment {
    pub x: String,
    pub a: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BobAssignment {
    pub y: String,
    pub b: String,
}

/// On-disk form of a deterministic strategy: one answer per question
/// symbol, both tables total.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StrategyFile {
    pub a: Vec<AliceAssignment>,
    pub b: Vec<BobAssignment>,
}

impl StrategyFile {
    pub fn from_strategy(g: &Game, s: &DeterministicStrategy) -> StrategyFile {
        StrategyFile {
            a: (0..g.x_alphabet().len() as u32)
                .map(|x| AliceAssignment {
                    x: g.x_alphabet().symbol(x).to_string(),
                    a: g.a_alphabet().symbol(s.answer_a(x)).to_string(),
                })
                .collect(),
            b: (0..g.y_alphabet().len() as u32)
                .map(|y| BobAssignment {
                    y: g.y_alphabet().symbol(y).to_string(),
                    b: g.b_alphabet().symbol(s.answer_b(y)).to_string(),
                })
                .collect(),
        }
    }

    pub fn into_strategy(&self, g: &Game) -> Result<DeterministicStrategy> {
        let mut a_table: Vec<Option<u32>> = vec![None; g.x_alphabet().len()];
        for assign in &self.a {
            let xi = lookup(g.x_alphabet(), &assign.x, "strategy.a.x")? as usize;
            let ai = lookup(g.a_alphabet(), &assign.a, "strategy.a.a")?;
            if a_table[xi].replace(ai).is_some() {
                return Err(Error::validation(format!(
                    "strategy assigns `{}` twice",
                    assign.x
                )));
            }
        }
        let mut b_table: Vec<Option<u32>> = vec![None; g.y_alphabet().len()];
        for assign in &self.b {
            let yi = lookup(g.y_alphabet(), &assign.y, "strategy.b.y")? as usize;
            let bi = lookup(g.b_alphabet(), &assign.b, "strategy.b.b")?;
            if b_table[yi].replace(bi).is_some() {
                return Err(Error::validation(format!(
                    "strategy assigns `{}` twice",
                    assign.y
                )));
            }
        }
        let a = a_table
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::validation(format!(
                        "strategy has no answer for question `{}`",
                        g.x_alphabet().symbol(i as u32)
                    ))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        let b = b_table
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::validation(format!(
                        "strategy has no answer for question `{}`",
                        g.y_alphabet().symbol(i as u32)
                    ))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        DeterministicStrategy::new(g, a, b)
    }
}

// ---------------------------------------------------------------------
// Channels

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChannelRow {
    pub a: String,
    pub b: String,
    pub table: Vec<MassEntry>,
}

/// On-disk form of a channel from answer pairs to a summary symbol: one
/// normalized row per (a,b), nonzero cells only.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChannelFile {
    pub a_alphabet: Vec<String>,
    pub b_alphabet: Vec<String>,
    pub z_alphabet: Vec<String>,
    pub rows: Vec<ChannelRow>,
}

impl ChannelFile {
    pub fn from_channel(pz: &ConditionalDistribution) -> Result<ChannelFile> {
        let given = pz.given_schema();
        if given.arity() != 2 || pz.output_schema().arity() != 1 {
            return Err(Error::schema(
                "only channels from two coordinates to one have a file form",
            ));
        }
        let (a, b) = (given.alphabet(0), given.alphabet(1));
        let z = pz.output_schema().alphabet(0);
        let rows = pz
            .rows()
            .map(|(o, d)| ChannelRow {
                a: a.symbol(o.get(0)).to_string(),
                b: b.symbol(o.get(1)).to_string(),
                table: d
                    .support()
                    .map(|(zo, m)| MassEntry {
                        s: z.symbol(zo.get(0)).to_string(),
                        p: format_rational(m),
                    })
                    .collect(),
            })
            .collect();
        Ok(ChannelFile {
            a_alphabet: a.symbols().map(String::from).collect(),
            b_alphabet: b.symbols().map(String::from).collect(),
            z_alphabet: z.symbols().map(String::from).collect(),
            rows,
        })
    }

    pub fn into_channel(&self) -> Result<ConditionalDistribution> {
        let a = alphabet_from(&self.a_alphabet, "a_alphabet")?;
        let b = alphabet_from(&self.b_alphabet, "b_alphabet")?;
        let z = alphabet_from(&self.z_alphabet, "z_alphabet")?;
        let given = Schema::named(&[("a", &a), ("b", &b)])?;
        let output = Schema::named(&[("z", &z)])?;
        let mut rows = BTreeMap::new();
        for row in &self.rows {
            let ai = lookup(&a, &row.a, "rows.a")?;
            let bi = lookup(&b, &row.b, "rows.b")?;
            let mut masses = BTreeMap::new();
            let mut total = Rational::zero();
            for entry in &row.table {
                let zi = lookup(&z, &entry.s, "rows.table.s")?;
                let p = parse_field(&entry.p, "rows.table.p")?;
                total += &p;
                if masses.insert(Outcome::new(vec![zi]), p).is_some() {
                    return Err(Error::validation(format!(
                        "row ({},{}) lists `{}` twice",
                        row.a, row.b, entry.s
                    )));
                }
            }
            if !total.is_one() {
                return Err(Error::validation(format!(
                    "row ({},{}) masses sum to {}, expected 1/1",
                    row.a,
                    row.b,
                    format_rational(&total)
                )));
            }
            let d = Distribution::from_masses(output.clone(), masses)?;
            if rows.insert(Outcome::new(vec![ai, bi]), d).is_some() {
                return Err(Error::validation(format!(
                    "channel lists row ({},{}) twice",
                    row.a, row.b
                )));
            }
        }
        for ai in 0..a.len() as u32 {
            for bi in 0..b.len() as u32 {
                if !rows.contains_key(&Outcome::new(vec![ai, bi])) {
                    return Err(Error::validation(format!(
                        "channel has no row for ({},{})",
                        a.symbol(ai),
                        b.symbol(bi)
                    )));
                }
            }
        }
        ConditionalDistribution::from_rows(given, rows)
    }
}
