//! Exact maximum-likelihood learners.
//!
//! Sample-picking searches general games (any equilibria set), admitting
//! observed joint actions in order of frequency. The census route enumerates
//! every equilibria set realizable by an influence game for `n <= 4`, built
//! from per-player tie-aware linear threshold functions.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::JointActionDataset;
use crate::error::{Error, Result};
use crate::game::{check_cap, EquilibriaSet, InfluenceGame};
use crate::model::{fit, Fit};

/// Largest LTF input dimension we enumerate.
pub const LTF_DIM_CAP: usize = 4;
/// Largest player count for the influence-game census.
pub const CENSUS_CAP: usize = 4;

/// A learned equilibria set together with its likelihood fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactFit {
    pub ne: EquilibriaSet,
    pub fit: Fit,
}

impl ExactFit {
    pub fn q(&self) -> f64 {
        self.fit.q_hat
    }

    pub fn loglik(&self) -> f64 {
        self.fit.loglik
    }
}

/// Algorithm "sample-picking": candidates are the `k` most frequent observed
/// actions; returns the `k` with the highest likelihood (smallest `k` on ties).
pub fn sample_picking(dataset: &JointActionDataset) -> Result<ExactFit> {
    check_cap("sample picking", dataset.n(), crate::game::ENUMERATION_CAP)?;
    let mut members = Vec::new();
    let mut best: Option<ExactFit> = None;
    for &(idx, _) in dataset.unique() {
        members.push(idx);
        let ne = EquilibriaSet::new(dataset.n(), members.clone())?;
        let f = fit(&ne, dataset)?;
        if best.as_ref().is_none_or(|b| f.loglik > b.fit.loglik) {
            best = Some(ExactFit { ne, fit: f });
        }
    }
    Ok(best.expect("dataset has at least one sample"))
}

/// Integer bound on weights sufficient to realize every threshold function
/// of `k` inputs: `(k+1)^((k+1)/2) / 2^k`.
pub fn integer_weight_bound(k: usize) -> f64 {
    let k = k as f64;
    (k + 1.0).powf((k + 1.0) / 2.0) / k.exp2()
}

/// Bound used for `d`-input tie-aware labelings: the threshold counts as an
/// extra input, so the bound is taken at `d + 1`.
pub fn ltf_weight_bound(d: usize) -> i64 {
    integer_weight_bound(d + 1).ceil() as i64
}

/// One tie-aware labeling of `{-1,+1}^d` with an integer witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ltf {
    /// Label per vertex, indexed like joint actions (bit `j` set iff `y_j = +1`).
    pub labels: Vec<i8>,
    pub w: Vec<i64>,
    pub b: i64,
}

impl Ltf {
    /// Base-3 code of the labels, digit `label + 1`, vertex 0 least significant.
    pub fn signature(&self) -> u64 {
        signature_code(&self.labels)
    }

    pub fn is_strict(&self) -> bool {
        self.labels.iter().all(|&l| l != 0)
    }
}

fn signature_code(labels: &[i8]) -> u64 {
    labels
        .iter()
        .rev()
        .fold(0u64, |acc, &l| acc * 3 + (l + 1) as u64)
}

fn ltf_labels(w: &[i64], b: i64) -> Vec<i8> {
    let d = w.len();
    (0..1u64 << d)
        .map(|v| {
            let s: i64 = w
                .iter()
                .enumerate()
                .map(|(j, &wj)| if (v >> j) & 1 == 1 { wj } else { -wj })
                .sum::<i64>()
                - b;
            s.signum() as i8
        })
        .collect()
}

/// Distinct labelings `sign(w . y - b)` of the `d`-cube, ties labelled 0.
#[derive(Clone, Debug)]
pub struct LtfTable {
    pub d: usize,
    pub weight_bound: i64,
    /// Sorted by signature.
    pub labelings: Vec<Ltf>,
}

impl LtfTable {
    pub fn len(&self) -> usize {
        self.labelings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labelings.is_empty()
    }

    pub fn strict_count(&self) -> usize {
        self.labelings.iter().filter(|l| l.is_strict()).count()
    }
}

pub fn enumerate_ltfs(d: usize) -> Result<LtfTable> {
    enumerate_ltfs_with_bound(d, ltf_weight_bound(d))
}

/// Exhaustive scan of `(w, b) in [-bound, bound]^(d+1)`.
pub fn enumerate_ltfs_with_bound(d: usize, bound: i64) -> Result<LtfTable> {
    check_cap("LTF enumeration", d, LTF_DIM_CAP)?;
    if bound < 0 {
        return Err(Error::Argument(format!(
            "weight bound {bound} must be >= 0"
        )));
    }
    let side = (2 * bound + 1) as usize;
    let combos = side.pow(d as u32 + 1);
    let mut seen: HashMap<u64, Ltf> = HashMap::new();
    let mut params = vec![0i64; d + 1];
    for mut code in 0..combos {
        for p in params.iter_mut() {
            *p = (code % side) as i64 - bound;
            code /= side;
        }
        let (w, b) = (&params[..d], params[d]);
        let labels = ltf_labels(w, b);
        let sig = signature_code(&labels);
        seen.entry(sig).or_insert_with(|| Ltf {
            labels,
            w: w.to_vec(),
            b,
        });
    }
    let mut labelings: Vec<Ltf> = seen.into_values().collect();
    labelings.sort_by_key(|l| l.signature());
    Ok(LtfTable {
        d,
        weight_bound: bound,
        labelings,
    })
}

/// Every distinct equilibria set realizable by an `n`-player influence game.
#[derive(Clone, Debug)]
pub struct GameCensus {
    pub n: usize,
    pub weight_bound: i64,
    /// Sorted by `(|NE|, members)`.
    pub ne_sets: Vec<EquilibriaSet>,
    /// One integer witness per set, row-major `W` followed by `b`.
    witnesses: Vec<Vec<i64>>,
}

impl GameCensus {
    pub fn count(&self) -> usize {
        self.ne_sets.len()
    }

    pub fn witness(&self, k: usize) -> InfluenceGame {
        let n = self.n;
        let raw = &self.witnesses[k];
        InfluenceGame::new(
            n,
            raw[..n * n].iter().map(|&v| v as f64).collect(),
            raw[n * n..].iter().map(|&v| v as f64).collect(),
        )
        .expect("census witnesses are valid games")
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "lig-census 1");
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "count {}", self.count());
        let _ = writeln!(out, "weight_bound {}", self.weight_bound);
        for (ne, wit) in self.ne_sets.iter().zip(&self.witnesses) {
            let mask = ne.members().iter().fold(0u64, |acc, &m| acc | (1 << m));
            let wit: Vec<String> = wit.iter().map(i64::to_string).collect();
            let _ = writeln!(out, "{mask:x} {}", wit.join(" "));
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::Cache(e.to_string()))?;
        file.write_all(out.as_bytes())
            .map_err(|e| Error::Cache(e.to_string()))
    }

    /// Reads a cache file, checking the header and that every witness
    /// reproduces its equilibria set.
    pub fn read_cache(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Cache(e.to_string()))?;
        let mut lines = BufReader::new(file).lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Cache(format!("missing {what}")))?
                .map_err(|e| Error::Cache(e.to_string()))
        };
        if next("magic")?.trim() != "lig-census 1" {
            return Err(Error::Cache("bad magic line".into()));
        }
        let header = |line: String, key: &str| -> Result<i64> {
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::Cache(format!("expected `{key}` header")))?;
            rest.trim()
                .parse()
                .map_err(|_| Error::Cache(format!("bad `{key}` value")))
        };
        let n = header(next("n")?, "n ")? as usize;
        check_cap("census cache", n, CENSUS_CAP)?;
        let count = header(next("count")?, "count ")? as usize;
        let weight_bound = header(next("weight_bound")?, "weight_bound ")?;
        let mut ne_sets = Vec::with_capacity(count);
        let mut witnesses = Vec::with_capacity(count);
        for k in 0..count {
            let line = next("census entry")?;
            let mut fields = line.split_whitespace();
            let mask = u64::from_str_radix(fields.next().unwrap_or(""), 16)
                .map_err(|_| Error::Cache(format!("entry {k}: bad mask")))?;
            let wit = fields
                .map(|f| f.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Cache(format!("entry {k}: bad witness")))?;
            if wit.len() != n * n + n {
                return Err(Error::Cache(format!("entry {k}: witness has wrong length")));
            }
            let members = (0..1u64 << n).filter(|&x| (mask >> x) & 1 == 1).collect();
            ne_sets.push(EquilibriaSet::new(n, members)?);
            witnesses.push(wit);
        }
        let census = Self {
            n,
            weight_bound,
            ne_sets,
            witnesses,
        };
        for k in 0..census.count() {
            let ne = crate::game::enumerate_equilibria(&census.witness(k), 0.0)?;
            if ne != census.ne_sets[k] {
                return Err(Error::Cache(format!(
                    "entry {k}: witness does not reproduce set"
                )));
            }
        }
        Ok(census)
    }

    /// Loads the cache when it exists and matches `n`, otherwise builds and
    /// writes it.
    pub fn load_or_build(path: &Path, n: usize) -> Result<Self> {
        if path.exists() {
            let census = Self::read_cache(path)?;
            if census.n == n {
                return Ok(census);
            }
        }
        let census = enumerate_influence_games(n)?;
        census.write_cache(path)?;
        Ok(census)
    }
}

/// For player `i`, the joint actions accepted under each labeling of `x_-i`.
fn acceptance_masks(n: usize, player: usize, table: &LtfTable) -> Vec<u64> {
    table
        .labelings
        .iter()
        .map(|ltf| {
            (0..1u64 << n)
                .filter(|&x| {
                    // drop bit `player` to index the labeling over x_-i
                    let low = x & ((1 << player) - 1);
                    let high = (x >> (player + 1)) << player;
                    let label = ltf.labels[(low | high) as usize];
                    let own: i8 = if (x >> player) & 1 == 1 { 1 } else { -1 };
                    label == 0 || label == own
                })
                .fold(0u64, |acc, x| acc | (1 << x))
        })
        .collect()
}

fn census_masks(n: usize, table: &LtfTable) -> HashMap<u64, Vec<usize>> {
    let full = (1u64 << (1u64 << n)) - 1;
    let mut current: HashMap<u64, Vec<usize>> = HashMap::from([(full, Vec::new())]);
    for player in 0..n {
        let masks = acceptance_masks(n, player, table);
        let mut next: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut keys: Vec<u64> = current.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let choice = &current[&key];
            for (li, &m) in masks.iter().enumerate() {
                next.entry(key & m).or_insert_with(|| {
                    let mut c = choice.clone();
                    c.push(li);
                    c
                });
            }
        }
        current = next;
    }
    current
}

pub fn enumerate_influence_games(n: usize) -> Result<GameCensus> {
    check_cap("influence game census", n, CENSUS_CAP)?;
    if n == 0 {
        return Err(Error::Argument("census needs at least one player".into()));
    }
    let table = enumerate_ltfs(n - 1)?;
    let masks = census_masks(n, &table);
    let mut entries: Vec<(EquilibriaSet, Vec<i64>)> = masks
        .into_iter()
        .map(|(mask, choice)| {
            let members = (0..1u64 << n).filter(|&x| (mask >> x) & 1 == 1).collect();
            let mut w = vec![0i64; n * n];
            let mut b = vec![0i64; n];
            for (i, &li) in choice.iter().enumerate() {
                let ltf = &table.labelings[li];
                let others = (0..n).filter(|&j| j != i);
                for (k, j) in others.enumerate() {
                    w[i * n + j] = ltf.w[k];
                }
                b[i] = ltf.b;
            }
            w.extend(b);
            (
                EquilibriaSet::new(n, members).expect("mask within range"),
                w,
            )
        })
        .collect();
    entries.sort_by(|a, b| {
        a.0.len()
            .cmp(&b.0.len())
            .then_with(|| a.0.members().cmp(b.0.members()))
    });
    let (ne_sets, witnesses) = entries.into_iter().unzip();
    Ok(GameCensus {
        n,
        weight_bound: table.weight_bound,
        ne_sets,
        witnesses,
    })
}

/// Census size when players are restricted to labelings without ties.
pub fn strict_census_count(n: usize) -> Result<usize> {
    check_cap("influence game census", n, CENSUS_CAP)?;
    if n == 0 {
        return Err(Error::Argument("census needs at least one player".into()));
    }
    let mut table = enumerate_ltfs(n - 1)?;
    table.labelings.retain(Ltf::is_strict);
    Ok(census_masks(n, &table).len())
}

/// Maximum likelihood over the census; ties go to the smaller set, then to
/// the lexicographically smaller member list.
pub fn exhaustive_mle_influence(
    dataset: &JointActionDataset,
    census: &GameCensus,
) -> Result<ExactFit> {
    if dataset.n() != census.n {
        return Err(Error::Dimension {
            expected: census.n,
            got: dataset.n(),
        });
    }
    let mut best: Option<ExactFit> = None;
    // the census is already ordered by (|NE|, members), so strict `>` keeps
    // the first maximizer under that order
    for ne in &census.ne_sets {
        let f = fit(ne, dataset)?;
        if best.as_ref().is_none_or(|b| f.loglik > b.fit.loglik) {
            best = Some(ExactFit {
                ne: ne.clone(),
                fit: f,
            });
        }
    }
    best.ok_or_else(|| Error::Argument("empty census".into()))
}

/// Distinct observed actions, for callers checking that sample-picking only
/// admits observed actions.
pub fn observed_actions(dataset: &JointActionDataset) -> HashSet<u64> {
    dataset.unique().iter().map(|&(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::enumerate_equilibria;
    use std::f64::consts::LN_2;

    #[test]
    fn sample_picking_coordination_data() {
        let d = JointActionDataset::from_indices(2, vec![3, 3, 3, 0, 0, 1]).unwrap();
        let r = sample_picking(&d).unwrap();
        assert_eq!(r.ne.members(), &[0, 3]);
        assert!((r.q() - 5.0 / 6.0).abs() < 1e-15);
        assert!((r.loglik() + 1.143708).abs() < 1e-6);
    }

    #[test]
    fn sample_picking_single_repeated_sample() {
        let d = JointActionDataset::from_indices(3, vec![5; 10]).unwrap();
        let r = sample_picking(&d).unwrap();
        assert_eq!(r.ne.members(), &[5]);
        assert_eq!(r.q(), 1.0 - 1.0 / 20.0);
    }

    #[test]
    fn sample_picking_uniform_data_picks_smallest_k() {
        let d = JointActionDataset::from_indices(2, vec![0, 1, 2, 3, 3, 2, 1, 0]).unwrap();
        let r = sample_picking(&d).unwrap();
        assert_eq!(r.ne.len(), 1);
        assert_eq!(r.loglik(), -2.0 * LN_2);
    }

    #[test]
    fn ltf_counts() {
        assert_eq!(enumerate_ltfs(0).unwrap().len(), 3);
        let t1 = enumerate_ltfs(1).unwrap();
        assert_eq!(t1.len(), 9);
        assert_eq!(t1.strict_count(), 4);
        let t2 = enumerate_ltfs(2).unwrap();
        assert_eq!(t2.strict_count(), 14);
        assert!(matches!(enumerate_ltfs(5), Err(Error::Capacity { .. })));
    }

    #[test]
    fn ltf_witnesses_replay() {
        for d in 0..=3 {
            let t = enumerate_ltfs(d).unwrap();
            let mut sigs = HashSet::new();
            for l in &t.labelings {
                assert_eq!(ltf_labels(&l.w, l.b), l.labels);
                assert!(sigs.insert(l.signature()));
            }
        }
    }

    #[test]
    fn small_censuses() {
        assert_eq!(enumerate_influence_games(1).unwrap().count(), 3);
        assert_eq!(enumerate_influence_games(2).unwrap().count(), 16);
        assert_eq!(enumerate_influence_games(3).unwrap().count(), 226);
        assert!(enumerate_influence_games(5).is_err());
    }

    #[test]
    fn census_witnesses_reproduce_sets() {
        let c = enumerate_influence_games(3).unwrap();
        for k in 0..c.count() {
            assert_eq!(
                enumerate_equilibria(&c.witness(k), 0.0).unwrap(),
                c.ne_sets[k]
            );
        }
    }

    #[test]
    fn cache_round_trip() {
        let c = enumerate_influence_games(3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("census3.txt");
        c.write_cache(&path).unwrap();
        let back = GameCensus::read_cache(&path).unwrap();
        assert_eq!(back.ne_sets, c.ne_sets);
        assert_eq!(back.weight_bound, c.weight_bound);
        std::fs::write(
            &path,
            "lig-census 1\nn 3\ncount 2\nweight_bound 2\n1 0 0 0 0 0 0 0 0 0 0 0 0\n",
        )
        .unwrap();
        assert!(GameCensus::read_cache(&path).is_err());
    }

    #[test]
    fn exhaustive_handles_uniform_data() {
        let c = enumerate_influence_games(2).unwrap();
        let d = JointActionDataset::from_indices(2, vec![0, 1, 2, 3]).unwrap();
        let r = exhaustive_mle_influence(&d, &c).unwrap();
        assert_eq!(r.loglik(), -2.0 * LN_2);
        assert!(!r.fit.identifiable);
    }
}
