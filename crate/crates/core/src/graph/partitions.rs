//! Set partitions as restricted-growth strings, Bell numbers and the Möbius
//! function of the partition lattice.

use crate::error::{Error, Result};

/// Largest ground set we enumerate: Bell(12) ≈ 4.2 million.
pub const MAX_ENUMERATION: usize = 12;

/// A partition of `0..len`, stored as a restricted-growth string:
/// `block_of[0] = 0` and `block_of[i] ≤ 1 + max(block_of[..i])`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    block_of: Vec<usize>,
    blocks: usize,
}

impl SetPartition {
    /// Accepts any labeling and renumbers it into restricted-growth form.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let block_of: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        SetPartition {
            blocks: map.len(),
            block_of,
        }
    }

    pub fn singletons(len: usize) -> Self {
        SetPartition {
            block_of: (0..len).collect(),
            blocks: len,
        }
    }

    pub fn one_block(len: usize) -> Self {
        SetPartition {
            block_of: vec![0; len],
            blocks: usize::from(len > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    #[inline]
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn rgs(&self) -> &[usize] {
        &self.block_of
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (i, &b) in self.block_of.iter().enumerate() {
            out[b].push(i);
        }
        out
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &SetPartition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.blocks];
        for (i, &b) in self.block_of.iter().enumerate() {
            let c = coarser.block_of[i];
            if image[b] == usize::MAX {
                image[b] = c;
            } else if image[b] != c {
                return false;
            }
        }
        true
    }

    /// The partition of `0..len` obtained by merging the blocks of `self`
    /// according to `outer`, a partition of `0..block_count`.
    pub fn merge(&self, outer: &SetPartition) -> SetPartition {
        debug_assert_eq!(outer.len(), self.blocks);
        let labels: Vec<usize> = self.block_of.iter().map(|&b| outer.block_of[b]).collect();
        SetPartition::from_labels(&labels)
    }
}

impl std::fmt::Display for SetPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, block) in self.blocks().iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            let parts: Vec<String> = block.iter().map(|i| i.to_string()).collect();
            write!(f, "{}", parts.join(","))?;
        }
        Ok(())
    }
}

pub fn bell(n: usize) -> u64 {
    // Bell triangle
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("nonempty row"));
        for &x in &row {
            let last = *next.last().expect("nonempty row");
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// Visits every partition of `0..len` in lexicographic order of the
/// restricted-growth string.
pub fn for_each_partition(len: usize, mut f: impl FnMut(&SetPartition)) -> Result<()> {
    if len > MAX_ENUMERATION {
        return Err(Error::CapExceeded {
            what: "partition ground set",
            value: len,
            limit: MAX_ENUMERATION,
        });
    }
    if len == 0 {
        f(&SetPartition::singletons(0));
        return Ok(());
    }
    let mut rgs = vec![0usize; len];
    // prefix maxima: maxes[i] = max(rgs[..=i])
    let mut maxes = vec![0usize; len];
    loop {
        f(&SetPartition {
            block_of: rgs.clone(),
            blocks: maxes[len - 1] + 1,
        });
        // rightmost position that can still grow
        let mut i = len - 1;
        while i > 0 && rgs[i] > maxes[i - 1] {
            i -= 1;
        }
        if i == 0 {
            return Ok(());
        }
        rgs[i] += 1;
        maxes[i] = maxes[i - 1].max(rgs[i]);
        for j in i + 1..len {
            rgs[j] = 0;
            maxes[j] = maxes[i];
        }
    }
}

pub fn all_partitions(len: usize) -> Result<Vec<SetPartition>> {
    let mut out = Vec::new();
    for_each_partition(len, |p| out.push(p.clone()))?;
    Ok(out)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// `Mob(0̂, π) = ∏_B (−1)^{|B|−1} (|B|−1)!`.
pub fn mobius_from_bottom(p: &SetPartition) -> f64 {
    let mut sizes = vec![0usize; p.block_count()];
    for &b in p.rgs() {
        sizes[b] += 1;
    }
    sizes
        .into_iter()
        .map(|s| if s % 2 == 1 { factorial(s - 1) } else { -factorial(s - 1) })
        .product()
}

/// `Mob(π, ρ)` for `π ≤ ρ`: the interval is a product of partition
/// lattices, one per block of `ρ`.
pub fn mobius(finer: &SetPartition, coarser: &SetPartition) -> Option<f64> {
    if !finer.refines(coarser) {
        return None;
    }
    let mut merged = vec![0usize; coarser.block_count()];
    let mut seen = vec![false; finer.block_count()];
    for i in 0..finer.len() {
        let b = finer.block_of(i);
        if !seen[b] {
            seen[b] = true;
            merged[coarser.block_of(i)] += 1;
        }
    }
    Some(
        merged
            .into_iter()
            .map(|s| if s % 2 == 1 { factorial(s - 1) } else { -factorial(s - 1) })
            .product(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let expected = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (n, &b) in expected.iter().enumerate() {
            assert_eq!(bell(n), b);
            let mut count = 0u64;
            for_each_partition(n, |_| count += 1).unwrap();
            assert_eq!(count, b, "n = {n}");
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_canonical() {
        let all = all_partitions(5).unwrap();
        for w in all.windows(2) {
            assert!(w[0].rgs() < w[1].rgs());
        }
        for p in &all {
            assert_eq!(&SetPartition::from_labels(p.rgs()), p);
        }
    }

    #[test]
    fn mobius_sums_to_zero_above_bottom() {
        // Σ_{ρ ≥ π} Mob(π, ρ) = 0 unless the lattice interval is a point
        let all = all_partitions(5).unwrap();
        for p in all.iter().take(20) {
            let s: f64 = all.iter().filter_map(|r| mobius(p, r)).sum();
            let expected = if p.block_count() == 1 { 1.0 } else { 0.0 };
            assert_eq!(s, expected, "{p}");
        }
        let bottom = SetPartition::singletons(4);
        for r in all_partitions(4).unwrap() {
            assert_eq!(mobius(&bottom, &r), Some(mobius_from_bottom(&r)));
        }
    }

    #[test]
    fn merge_composes() {
        let p = SetPartition::from_labels(&[0, 1, 0, 2]);
        let outer = SetPartition::from_labels(&[0, 1, 1]);
        assert_eq!(p.merge(&outer).rgs(), &[0, 1, 0, 1]);
        assert!(p.refines(&p.merge(&outer)));
        assert!(!p.merge(&outer).refines(&p));
    }
}
