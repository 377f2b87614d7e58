use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use risk_transfer::ingest::classify_competitive;
use risk_transfer::{rng, Error, MarketSample, Result};

/// Stream of the run seed reserved for the random state split.
const SPLIT_STREAM: u64 = 0xA_B;

/// Seeded split of the sample's states into halves; A gets the extra state.
pub fn random_split(states: &[String], seed: u64) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut shuffled = states.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut rng::stream(seed, SPLIT_STREAM));
    let half = shuffled.len().div_ceil(2);
    (
        shuffled[..half].iter().cloned().collect(),
        shuffled[half..].iter().cloned().collect(),
    )
}

/// States selected by a named group. `None` keeps every state.
pub fn resolve(name: &str, sample: &MarketSample, seed: u64) -> Result<Option<BTreeSet<String>>> {
    let states = sample.states();
    let set = match name {
        "all" => return Ok(None),
        "competitive" => classify_competitive(sample)?,
        "random-A" | "random-B" => {
            let (a, b) = random_split(&states, seed);
            if name == "random-A" {
                a
            } else {
                b
            }
        }
        list => {
            let wanted: BTreeSet<String> = list
                .split('+')
                .map(|s| s.trim().to_ascii_uppercase())
                .collect();
            if wanted
                .iter()
                .any(|s| s.len() != 2 || !s.bytes().all(|b| b.is_ascii_alphabetic()))
            {
                return Err(Error::InvalidParameter(format!("unknown group `{name}`")));
            }
            wanted
        }
    };
    let present: BTreeSet<String> = set.into_iter().filter(|s| states.contains(s)).collect();
    if present.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "group `{name}` has no states in the selected sample"
        )));
    }
    Ok(Some(present))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_seeded_and_complete() {
        let states: Vec<String> = ["CA", "NY", "WI", "TX", "FL"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (a, b) = random_split(&states, 7);
        assert_eq!((a.len(), b.len()), (3, 2));
        assert!(a.is_disjoint(&b));
        assert_eq!(random_split(&states, 7), (a, b));
    }
}
