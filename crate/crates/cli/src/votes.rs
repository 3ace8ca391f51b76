//! Roll-call CSV ingestion.
//!
//! Layout: a header row of player names, an optional row of party labels
//! (`D`, `R`, `I`), then one row per vote. `yea` maps to `+1`; `nay`,
//! `abstain` and `absent` map to `-1`.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use lig_core::JointActionDataset;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Joint actions are stored as bit masks.
pub const MAX_PLAYERS: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    D,
    R,
    I,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::D, Party::R, Party::I];

    fn parse(s: &str) -> Option<Self> {
        match s {
            "D" | "d" => Some(Party::D),
            "R" | "r" => Some(Party::R),
            "I" | "i" => Some(Party::I),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subset {
    pub size: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoteData {
    pub dataset: JointActionDataset,
    pub names: Vec<String>,
    pub parties: Option<Vec<Party>>,
}

pub fn ingest_votes(path: &Path, subset: Option<Subset>) -> Result<VoteData> {
    let file = File::open(path)?;
    parse_votes(file, &path.display().to_string(), subset)
}

fn vote_value(token: &str) -> Option<i8> {
    match token.to_ascii_lowercase().as_str() {
        "yea" => Some(1),
        "nay" | "abstain" | "absent" => Some(-1),
        _ => None,
    }
}

pub fn parse_votes<R: Read>(reader: R, source: &str, subset: Option<Subset>) -> Result<VoteData> {
    let err = |line: u64, msg: String| HarnessError::Parse {
        file: source.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| err(1, "empty file".into()))??;
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().any(String::is_empty) {
        return Err(err(1, "empty player name in header".into()));
    }
    let width = names.len();

    let mut parties = None;
    let mut rows: Vec<Vec<i8>> = Vec::new();
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k as u64 + 2, |p| p.line());
        if rec.len() != width {
            return Err(err(
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        if k == 0 {
            let labels: Option<Vec<Party>> = rec.iter().map(Party::parse).collect();
            if labels.is_some() {
                parties = labels;
                continue;
            }
        }
        let row = rec
            .iter()
            .map(|t| {
                vote_value(t).ok_or_else(|| {
                    err(
                        line,
                        format!("unknown vote token `{t}` (expected yea, nay, abstain or absent)"),
                    )
                })
            })
            .collect::<Result<Vec<i8>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(1, "no vote rows".into()));
    }

    let keep: Vec<usize> = match subset {
        None => (0..width).collect(),
        Some(s) => choose_players(parties.as_deref(), width, s)?,
    };
    if keep.len() > MAX_PLAYERS {
        return Err(HarnessError::Config(format!(
            "{} players exceed the {MAX_PLAYERS}-player limit; request a subset",
            keep.len()
        )));
    }
    let samples = rows
        .iter()
        .map(|row| {
            keep.iter()
                .enumerate()
                .filter(|&(_, &p)| row[p] > 0)
                .fold(0u64, |acc, (bit, _)| acc | 1 << bit)
        })
        .collect();
    Ok(VoteData {
        dataset: JointActionDataset::from_indices(keep.len(), samples)?,
        names: keep.iter().map(|&p| names[p].clone()).collect(),
        parties: parties.map(|ps| keep.iter().map(|&p| ps[p]).collect()),
    })
}

/// Largest-remainder apportionment of `k` seats over `counts`; remainder ties
/// go to the earlier group.
pub fn largest_remainder(counts: &[usize], k: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let mut seats: Vec<usize> = counts.iter().map(|&c| c * k / total).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // remainder numerators share the denominator `total`
    order.sort_by_key(|&g| (std::cmp::Reverse(counts[g] * k % total), g));
    let short = k - seats.iter().sum::<usize>();
    for &g in order.iter().take(short) {
        seats[g] += 1;
    }
    seats
}

/// Player positions to keep, in file order.
fn choose_players(parties: Option<&[Party]>, width: usize, subset: Subset) -> Result<Vec<usize>> {
    if subset.size == 0 || subset.size > width {
        return Err(HarnessError::Config(format!(
            "subset size {} must be in 1..={width}",
            subset.size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(subset.seed);
    let mut keep = match parties {
        None => index::sample(&mut rng, width, subset.size).into_vec(),
        Some(ps) => {
            let groups: Vec<Vec<usize>> = Party::ALL
                .iter()
                .map(|&party| (0..width).filter(|&p| ps[p] == party).collect())
                .collect();
            let counts: Vec<usize> = groups.iter().map(Vec::len).collect();
            let quotas = largest_remainder(&counts, subset.size);
            groups
                .iter()
                .zip(quotas)
                .flat_map(|(g, q)| {
                    index::sample(&mut rng, g.len(), q)
                        .into_iter()
                        .map(|k| g[k])
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    };
    keep.sort_unstable();
    Ok(keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<VoteData> {
        parse_votes(s.as_bytes(), "mem", None)
    }

    #[test]
    fn abstentions_count_as_nay() {
        let v = parse("a,b,c\nyea,nay,abstain\nYEA,Absent,yea\n").unwrap();
        assert_eq!(v.dataset.action(0).as_slice(), &[1, -1, -1]);
        assert_eq!(v.dataset.action(1).as_slice(), &[1, -1, 1]);
        assert!(v.parties.is_none());
    }

    #[test]
    fn party_row_is_recognized() {
        let v = parse("a,b\nD,R\nyea,nay\n").unwrap();
        assert_eq!(v.parties, Some(vec![Party::D, Party::R]));
        assert_eq!(v.dataset.len(), 1);
    }

    #[test]
    fn errors_carry_location() {
        match parse("a,b\nyea,nay\nyea,maybe\n") {
            Err(HarnessError::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("maybe"));
            }
            other => panic!("{other:?}"),
        }
        match parse("a,b\nyea\n") {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("a,b\n").is_err());
    }

    #[test]
    fn apportionment() {
        assert_eq!(largest_remainder(&[55, 45], 20), vec![11, 9]);
        assert_eq!(largest_remainder(&[50, 49, 1], 20), vec![10, 10, 0]);
        assert_eq!(largest_remainder(&[1, 1, 1], 2), vec![1, 1, 0]);
    }

    #[test]
    fn stratified_subset_keeps_party_shares() {
        let mut csv = String::new();
        let names: Vec<String> = (0..100).map(|k| format!("s{k}")).collect();
        csv.push_str(&names.join(","));
        csv.push('\n');
        let parties: Vec<&str> = (0..100).map(|k| if k < 55 { "D" } else { "R" }).collect();
        csv.push_str(&parties.join(","));
        csv.push('\n');
        for r in 0..5 {
            let row: Vec<&str> = (0..100)
                .map(|k| if (k + r) % 3 == 0 { "yea" } else { "nay" })
                .collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        let sub = Subset { size: 20, seed: 3 };
        let v = parse_votes(csv.as_bytes(), "mem", Some(sub)).unwrap();
        let ps = v.parties.unwrap();
        assert_eq!(ps.iter().filter(|&&p| p == Party::D).count(), 11);
        assert_eq!(ps.iter().filter(|&&p| p == Party::R).count(), 9);
        assert_eq!(v.dataset.n(), 20);
        let again = parse_votes(csv.as_bytes(), "mem", Some(sub)).unwrap();
        assert_eq!(v.names, again.names);
        // too many players without a subset
        assert!(matches!(
            parse_votes(csv.as_bytes(), "mem", None),
            Err(HarnessError::Config(_))
        ));
    }
}
