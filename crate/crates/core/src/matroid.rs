//! Matroids given by an explicit base family over a ground set of at most 64
//! elements. Subsets are bitmasks; bit `i` is the 0-based element `i`.
//!
//! JSON uses 1-based element labels:
//! `{"type":"uniform","n":N,"r":r}`, `{"type":"partition","blocks":[[..]],"caps":[..]}`,
//! `{"type":"explicit","bases":[[..]]}` (optionally with `"n"`).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Point;

pub const DEFAULT_BASE_CAP: usize = 100_000;

#[derive(Clone, Debug)]
pub struct Matroid {
    n: usize,
    rank: usize,
    bases: Vec<u64>,
    lookup: HashSet<u64>,
}

impl Matroid {
    /// `U(r, n)`: every `r`-subset is a base.
    pub fn uniform(n: usize, r: usize) -> Result<Self> {
        check_ground(n)?;
        if r > n {
            return Err(Error::InvalidMatroid(format!("rank {r} exceeds ground set size {n}")));
        }
        let mut bases = Vec::new();
        for_each_subset_of_size(full_mask(n), r, &mut |m| bases.push(m), DEFAULT_BASE_CAP)?;
        Ok(Self::from_verified(n, bases))
    }

    /// Blocks must partition `{0, .., n-1}`; a base takes exactly `caps[b]`
    /// elements from block `b`.
    pub fn partition(blocks: &[Vec<usize>], caps: &[usize]) -> Result<Self> {
        if blocks.len() != caps.len() {
            return Err(Error::InvalidMatroid("one cap per block required".into()));
        }
        let n: usize = blocks.iter().map(Vec::len).sum();
        check_ground(n)?;
        let mut seen = 0u64;
        for b in blocks {
            for &e in b {
                if e >= n || seen & (1 << e) != 0 {
                    return Err(Error::InvalidMatroid("blocks must partition the ground set".into()));
                }
                seen |= 1 << e;
            }
        }
        let mut bases = vec![0u64];
        for (b, &cap) in blocks.iter().zip(caps) {
            if cap > b.len() {
                return Err(Error::InvalidMatroid(format!("cap {cap} exceeds block size {}", b.len())));
            }
            let block_mask = b.iter().fold(0u64, |m, &e| m | (1 << e));
            let mut choices = Vec::new();
            for_each_subset_of_size(block_mask, cap, &mut |m| choices.push(m), DEFAULT_BASE_CAP)?;
            if bases.len().saturating_mul(choices.len()) > DEFAULT_BASE_CAP {
                return Err(Error::BaseEnumerationCapExceeded { cap: DEFAULT_BASE_CAP });
            }
            bases = bases.iter().flat_map(|&a| choices.iter().map(move |&c| a | c)).collect();
        }
        Ok(Self::from_verified(n, bases))
    }

    /// A matroid from an explicit base list; the exchange axiom is checked
    /// exhaustively.
    pub fn explicit(n: usize, bases: &[u64]) -> Result<Self> {
        check_ground(n)?;
        if bases.is_empty() {
            return Err(Error::ExchangeAxiomViolation("base family is empty".into()));
        }
        if bases.len() > DEFAULT_BASE_CAP {
            return Err(Error::BaseEnumerationCapExceeded { cap: DEFAULT_BASE_CAP });
        }
        if bases.iter().any(|&b| b & !full_mask(n) != 0) {
            return Err(Error::InvalidMatroid("base uses an element outside the ground set".into()));
        }
        let mut list = bases.to_vec();
        list.sort_unstable();
        list.dedup();
        let lookup: HashSet<u64> = list.iter().copied().collect();
        if let Some((b1, b2, i)) = exchange_violation(&list, &lookup) {
            return Err(Error::ExchangeAxiomViolation(format!(
                "no exchange for element {} of {} against {}",
                i + 1,
                fmt_set(b1),
                fmt_set(b2)
            )));
        }
        Ok(Self::from_verified(n, list))
    }

    fn from_verified(n: usize, mut bases: Vec<u64>) -> Self {
        bases.sort_unstable();
        let rank = bases[0].count_ones() as usize;
        let lookup = bases.iter().copied().collect();
        Matroid { n, rank, bases, lookup }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn is_base(&self, mask: u64) -> bool {
        self.lookup.contains(&mask)
    }

    /// Base membership of a 0/1 point.
    pub fn is_base_point(&self, x: &Point) -> bool {
        x.dim() == self.n && x.to_mask().is_some_and(|m| self.is_base(m))
    }

    /// Checks the exchange axiom over all base pairs.
    pub fn satisfies_exchange_axiom(&self) -> bool {
        exchange_violation(&self.bases, &self.lookup).is_none()
    }
}

/// Bases shared by all given matroids, ascending by mask.
pub fn common_bases(matroids: &[&Matroid]) -> Vec<u64> {
    let Some((first, rest)) = matroids.split_first() else {
        return Vec::new();
    };
    first.bases().iter().copied().filter(|&b| rest.iter().all(|m| m.is_base(b))).collect()
}

fn check_ground(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidMatroid("ground set must be non-empty".into()));
    }
    if n > 64 {
        return Err(Error::GroundSetTooLarge { n, limit: 64 });
    }
    Ok(())
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn for_each_subset_of_size(universe: u64, k: usize, out: &mut dyn FnMut(u64), cap: usize) -> Result<()> {
    let elems: Vec<u32> = (0..64).filter(|i| universe >> i & 1 == 1).collect();
    if k > elems.len() {
        return Ok(());
    }
    if binomial(elems.len(), k) > cap as u128 {
        return Err(Error::BaseEnumerationCapExceeded { cap });
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out(idx.iter().fold(0u64, |m, &p| m | 1 << elems[p]));
        // advance the combination
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == elems.len() - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return Ok(());
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k.min(n - k)).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn exchange_violation(bases: &[u64], lookup: &HashSet<u64>) -> Option<(u64, u64, u32)> {
    for &b1 in bases {
        for &b2 in bases {
            let mut only1 = b1 & !b2;
            while only1 != 0 {
                let i = only1.trailing_zeros();
                only1 &= only1 - 1;
                let without = b1 & !(1 << i);
                let mut only2 = b2 & !b1;
                let mut ok = false;
                while only2 != 0 {
                    let j = only2.trailing_zeros();
                    only2 &= only2 - 1;
                    if lookup.contains(&(without | 1 << j)) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Some((b1, b2, i));
                }
            }
        }
    }
    None
}

fn fmt_set(mask: u64) -> String {
    let items: Vec<String> = (0..64).filter(|i| mask >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// JSON description of a matroid (1-based elements).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MatroidSpec {
    Uniform {
        n: usize,
        r: usize,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        caps: Vec<usize>,
    },
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        bases: Vec<Vec<usize>>,
    },
}

impl MatroidSpec {
    pub fn build(&self) -> Result<Matroid> {
        match self {
            MatroidSpec::Uniform { n, r } => Matroid::uniform(*n, *r),
            MatroidSpec::Partition { blocks, caps } => {
                let zero_based = blocks.iter().map(|b| to_zero_based(b)).collect::<Result<Vec<_>>>()?;
                Matroid::partition(&zero_based, caps)
            }
            MatroidSpec::Explicit { n, bases } => {
                let max_elem = bases.iter().flatten().copied().max().unwrap_or(0);
                let n = n.unwrap_or(max_elem);
                if max_elem > n {
                    return Err(Error::InvalidMatroid(format!("element {max_elem} exceeds n = {n}")));
                }
                check_ground(n)?;
                let masks = bases
                    .iter()
                    .map(|b| Ok(to_zero_based(b)?.into_iter().fold(0u64, |m, e| m | 1 << e)))
                    .collect::<Result<Vec<_>>>()?;
                Matroid::explicit(n, &masks)
            }
        }
    }
}

fn to_zero_based(elems: &[usize]) -> Result<Vec<usize>> {
    elems
        .iter()
        .map(|&e| {
            if e == 0 || e > 64 {
                Err(Error::InvalidMatroid(format!("element label {e} out of range 1..=64")))
            } else {
                Ok(e - 1)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(elems: &[usize]) -> u64 {
        elems.iter().fold(0, |m, &e| m | 1 << (e - 1))
    }

    #[test]
    fn uniform_2_3() {
        let m = Matroid::uniform(3, 2).unwrap();
        let mut got = m.bases().to_vec();
        got.sort();
        let mut want = vec![set(&[1, 2]), set(&[1, 3]), set(&[2, 3])];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(m.rank(), 2);
        assert!(m.satisfies_exchange_axiom());
    }

    #[test]
    fn partition_two_blocks() {
        let m = Matroid::partition(&[vec![0, 1], vec![2, 3]], &[1, 1]).unwrap();
        assert_eq!(m.bases().len(), 4);
        assert!(m.is_base(set(&[1, 3])));
        assert!(!m.is_base(set(&[1, 2])));
        assert!(m.satisfies_exchange_axiom());
    }

    #[test]
    fn explicit_unequal_sizes_rejected() {
        let err = Matroid::explicit(3, &[set(&[1]), set(&[2, 3])]).unwrap_err();
        assert!(matches!(err, Error::ExchangeAxiomViolation(_)));
    }

    #[test]
    fn explicit_valid_list() {
        let m = Matroid::explicit(3, &[set(&[1, 3]), set(&[2, 3])]).unwrap();
        assert_eq!(m.rank(), 2);
        assert!(Matroid::explicit(3, &[]).is_err());
    }

    #[test]
    fn bad_partitions() {
        assert!(Matroid::partition(&[vec![0, 1]], &[3]).is_err());
        assert!(Matroid::partition(&[vec![0, 1], vec![1]], &[1, 1]).is_err());
        assert!(Matroid::uniform(3, 4).is_err());
        assert!(matches!(Matroid::uniform(40, 20), Err(Error::BaseEnumerationCapExceeded { .. })));
    }

    #[test]
    fn spec_json() {
        let s: MatroidSpec = serde_json::from_str(r#"{"type":"partition","blocks":[[1,2],[3]],"caps":[1,1]}"#).unwrap();
        let m = s.build().unwrap();
        assert_eq!(m.bases(), &[set(&[1, 3]), set(&[2, 3])]);
        let s: MatroidSpec = serde_json::from_str(r#"{"type":"explicit","bases":[[1],[2,3]]}"#).unwrap();
        assert!(s.build().is_err());
        let s: MatroidSpec = serde_json::from_str(r#"{"type":"uniform","n":3,"r":2}"#).unwrap();
        assert_eq!(s.build().unwrap().bases().len(), 3);
    }

    #[test]
    fn common_base_search() {
        let a = Matroid::uniform(3, 2).unwrap();
        let b = Matroid::partition(&[vec![0, 1], vec![2]], &[1, 1]).unwrap();
        assert_eq!(common_bases(&[&a, &b]), vec![set(&[1, 3]), set(&[2, 3])]);
        let c = Matroid::uniform(3, 1).unwrap();
        assert!(common_bases(&[&a, &c]).is_empty());
    }
}
