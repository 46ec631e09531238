//! Non-crossing pairings on a disc and on an (m,n)-annulus, Kreweras
//! complements, through strings.
//!
//! Positions are 1-based: `1..=m` sit on the outer circle, `m+1..=m+n` on
//! the inner one. Composition is `(σγ)(i) = σ(γ(i))`.

use std::fmt;

use crate::error::{Error, Result};

pub const DEFAULT_PAIRING_CAP: usize = 16;

/// A permutation of `1..=size` kept both as a point map and as cycles.
///
/// Cycles are normalized to start at their smallest point and are listed by
/// increasing smallest point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclePermutation {
    map: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl CyclePermutation {
    /// `map[i-1]` is the image of `i`.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let size = map.len();
        let mut seen = vec![false; size];
        for &j in &map {
            if j == 0 || j > size || seen[j - 1] {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation of 1..={size}: {map:?}"
                )));
            }
            seen[j - 1] = true;
        }
        let cycles = cycles_of(&map);
        Ok(CyclePermutation { map, cycles })
    }

    pub fn from_cycles(size: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut map = vec![0; size];
        for cycle in cycles {
            for (k, &i) in cycle.iter().enumerate() {
                let next = cycle[(k + 1) % cycle.len()];
                if i == 0 || i > size || map[i - 1] != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "cycles do not partition 1..={size}"
                    )));
                }
                map[i - 1] = next;
            }
        }
        // points not mentioned are fixed
        for (i, v) in map.iter_mut().enumerate() {
            if *v == 0 {
                *v = i + 1;
            }
        }
        CyclePermutation::from_map(map)
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i - 1]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    /// `self ∘ rhs`, i.e. `i ↦ self(rhs(i))`.
    pub fn compose(&self, rhs: &CyclePermutation) -> CyclePermutation {
        assert_eq!(self.size(), rhs.size());
        let map: Vec<usize> = rhs.map.iter().map(|&j| self.map[j - 1]).collect();
        let cycles = cycles_of(&map);
        CyclePermutation { map, cycles }
    }
}

impl fmt::Display for CyclePermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_cycles(f, &self.cycles)
    }
}

fn write_cycles(f: &mut fmt::Formatter<'_>, cycles: &[Vec<usize>]) -> fmt::Result {
    for c in cycles {
        write!(f, "(")?;
        for (k, i) in c.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")?;
    }
    Ok(())
}

fn cycles_of(map: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; map.len()];
    let mut out = Vec::new();
    for start in 1..=map.len() {
        if seen[start - 1] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut i = start;
        while !seen[i - 1] {
            seen[i - 1] = true;
            cycle.push(i);
            i = map[i - 1];
        }
        out.push(cycle);
    }
    out
}

/// `γ_{m,n} = (1,…,m)(m+1,…,m+n)`.
pub fn gamma(m: usize, n: usize) -> Result<CyclePermutation> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "annulus sizes must be positive, got ({m},{n})"
        )));
    }
    Ok(CyclePermutation::from_map(gamma_map(m, n)).expect("gamma is a permutation"))
}

fn gamma_map(m: usize, n: usize) -> Vec<usize> {
    let mut map = Vec::with_capacity(m + n);
    map.extend((1..=m).map(|i| if i == m { 1 } else { i + 1 }));
    map.extend((m + 1..=m + n).map(|i| if i == m + n { m + 1 } else { i + 1 }));
    map
}

fn check_involution(matching: &[usize]) -> Result<()> {
    let size = matching.len();
    for (idx, &j) in matching.iter().enumerate() {
        let i = idx + 1;
        if j == 0 || j > size {
            return Err(Error::NotAnInvolution {
                size,
                reason: format!("{i} maps to {j}"),
            });
        }
        if j == i {
            return Err(Error::NotAnInvolution {
                size,
                reason: format!("{i} is a fixed point"),
            });
        }
        if matching[j - 1] != i {
            return Err(Error::NotAnInvolution {
                size,
                reason: format!("{i} -> {j} -> {}", matching[j - 1]),
            });
        }
    }
    Ok(())
}

/// Pairing of the `m+n` points of an annulus that is non-crossing and has
/// at least one through string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnnularPairing {
    m: usize,
    n: usize,
    matching: Vec<usize>,
}

impl AnnularPairing {
    /// Validates the candidate; `matching[i-1]` is the partner of `i`.
    pub fn new(m: usize, n: usize, matching: Vec<usize>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "annulus sizes must be positive, got ({m},{n})"
            )));
        }
        if matching.len() != m + n {
            return Err(Error::DimensionMismatch {
                expected: m + n,
                found: matching.len(),
            });
        }
        if !is_annular_noncrossing(&matching, m, n)? {
            return Err(Error::InvalidArgument(
                "pairing crosses on the annulus".into(),
            ));
        }
        Ok(AnnularPairing { m, n, matching })
    }

    /// Builds from a list of pairs such as `[(1,2),(3,10),…]`.
    pub fn from_pairs(m: usize, n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut matching = vec![0; m + n];
        for &(i, j) in pairs {
            for (a, b) in [(i, j), (j, i)] {
                if a == 0 || a > m + n || matching[a - 1] != 0 {
                    return Err(Error::NotAnInvolution {
                        size: m + n,
                        reason: format!("bad or repeated point {a}"),
                    });
                }
                matching[a - 1] = b;
            }
        }
        AnnularPairing::new(m, n, matching)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matching(&self) -> &[usize] {
        &self.matching
    }

    #[inline]
    pub fn partner(&self, i: usize) -> usize {
        self.matching[i - 1]
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs_of(&self.matching)
    }

    pub fn as_permutation(&self) -> CyclePermutation {
        CyclePermutation::from_map(self.matching.clone()).expect("valid involution")
    }

    pub fn through_count(&self) -> usize {
        (0..self.m).filter(|&i| self.matching[i] > self.m).count()
    }
}

impl fmt::Display for AnnularPairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<Vec<usize>> = self.pairs().into_iter().map(|(a, b)| vec![a, b]).collect();
        write_cycles(f, &cycles)
    }
}

fn pairs_of(matching: &[usize]) -> Vec<(usize, usize)> {
    matching
        .iter()
        .enumerate()
        .filter(|(idx, &j)| idx + 1 < j)
        .map(|(idx, &j)| (idx + 1, j))
        .collect()
}

/// Non-crossing test on the annulus.
///
/// Uses the recursive characterization (strip adjacent same-circle pairs,
/// then require a spoke diagram) and asserts in debug builds that it agrees
/// with the cycle-count criterion.
pub fn is_annular_noncrossing(matching: &[usize], m: usize, n: usize) -> Result<bool> {
    if matching.len() != m + n {
        return Err(Error::DimensionMismatch {
            expected: m + n,
            found: matching.len(),
        });
    }
    check_involution(matching)?;
    if !(0..m).any(|i| matching[i] > m) {
        return Err(Error::NoThroughString);
    }
    let a = noncrossing_by_reduction(matching, m, n);
    debug_assert_eq!(a, noncrossing_by_cycle_count(matching, m, n));
    Ok(a)
}

/// Recursive characterization: repeatedly delete a non-through pair whose
/// points are neighbours on their circle; what is left must be a spoke
/// diagram with opposite orientations.
pub fn noncrossing_by_reduction(matching: &[usize], m: usize, n: usize) -> bool {
    let mut outer: Vec<usize> = (1..=m).collect();
    let mut inner: Vec<usize> = (m + 1..=m + n).collect();
    loop {
        let removed = remove_adjacent_pair(&mut outer, matching)
            || remove_adjacent_pair(&mut inner, matching);
        if !removed {
            break;
        }
    }
    let on_outer = |i: usize| i <= m;
    if outer.iter().any(|&i| on_outer(matching[i - 1]))
        || inner.iter().any(|&i| !on_outer(matching[i - 1]))
    {
        return false;
    }
    let k = outer.len();
    if k == 0 || k != inner.len() {
        return false;
    }
    let start = matching[outer[0] - 1];
    let j0 = inner.iter().position(|&x| x == start).expect("partner on inner circle");
    (0..k).all(|j| matching[outer[j] - 1] == inner[(j0 + k - j) % k])
}

fn remove_adjacent_pair(circle: &mut Vec<usize>, matching: &[usize]) -> bool {
    let len = circle.len();
    if len < 2 {
        return false;
    }
    for idx in 0..len {
        let next = (idx + 1) % len;
        if matching[circle[idx] - 1] == circle[next] {
            let (hi, lo) = if idx > next { (idx, next) } else { (next, idx) };
            circle.remove(hi);
            circle.remove(lo);
            return true;
        }
    }
    false
}

/// `#cycles(σ) + #cycles(σγ) = m + n`, for pairings connecting both circles.
pub fn noncrossing_by_cycle_count(matching: &[usize], m: usize, n: usize) -> bool {
    let g = gamma_map(m, n);
    let k: Vec<usize> = g.iter().map(|&j| matching[j - 1]).collect();
    (m + n) / 2 + count_cycles(&k) == m + n
}

fn count_cycles(map: &[usize]) -> usize {
    let mut seen = vec![false; map.len()];
    let mut count = 0;
    for s in 0..map.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = map[i] - 1;
        }
    }
    count
}

/// Calls `f` on every fixed-point-free involution of `1..=size`, in
/// lexicographic order of the matching arrays.
pub fn for_each_pairing(size: usize, mut f: impl FnMut(&[usize])) {
    if size % 2 == 1 {
        return;
    }
    let mut matching = vec![0usize; size];
    fn rec(matching: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        let Some(first) = matching.iter().position(|&x| x == 0) else {
            f(matching);
            return;
        };
        for j in first + 1..matching.len() {
            if matching[j] != 0 {
                continue;
            }
            matching[first] = j + 1;
            matching[j] = first + 1;
            rec(matching, f);
            matching[first] = 0;
            matching[j] = 0;
        }
    }
    rec(&mut matching, &mut f);
}

/// All of NC₂(m,n), lexicographic in the matching arrays.
pub fn enumerate_nc2(m: usize, n: usize) -> Result<Vec<AnnularPairing>> {
    enumerate_nc2_capped(m, n, DEFAULT_PAIRING_CAP)
}

pub fn enumerate_nc2_capped(m: usize, n: usize, cap: usize) -> Result<Vec<AnnularPairing>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "annulus sizes must be positive, got ({m},{n})"
        )));
    }
    if m + n > cap {
        return Err(Error::CapExceeded {
            what: "m+n",
            value: m + n,
            limit: cap,
        });
    }
    let mut out = Vec::new();
    for_each_pairing(m + n, |matching| {
        if (0..m).any(|i| matching[i] > m) && noncrossing_by_cycle_count(matching, m, n) {
            out.push(AnnularPairing {
                m,
                n,
                matching: matching.to_vec(),
            });
        }
    });
    Ok(out)
}

/// Pairs `{i,j}` with `i ≤ m < j`.
pub fn through_strings(sigma: &AnnularPairing) -> Vec<(usize, usize)> {
    (1..=sigma.m)
        .filter(|&i| sigma.partner(i) > sigma.m)
        .map(|i| (i, sigma.partner(i)))
        .collect()
}

pub fn filter_by_through(list: &[AnnularPairing], l: usize) -> Vec<AnnularPairing> {
    list.iter().filter(|s| s.through_count() == l).cloned().collect()
}

/// `K(σ) = σγ_{m,n}`.
pub fn kreweras(sigma: &AnnularPairing) -> CyclePermutation {
    let g = gamma_map(sigma.m, sigma.n);
    let map = g.iter().map(|&j| sigma.partner(j)).collect();
    CyclePermutation::from_map(map).expect("product of permutations")
}

/// A cycle of `K(σ)` meeting both circles, rotated so that its outer run
/// comes first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThroughCycle {
    pub outer: Vec<usize>,
    pub inner: Vec<usize>,
}

impl ThroughCycle {
    pub fn positions(&self) -> Vec<usize> {
        self.outer.iter().chain(&self.inner).copied().collect()
    }
}

pub fn through_cycles(k: &CyclePermutation, m: usize, n: usize) -> Vec<ThroughCycle> {
    debug_assert_eq!(k.size(), m + n);
    let mut out = Vec::new();
    for cycle in k.cycles() {
        let len = cycle.len();
        let has_outer = cycle.iter().any(|&i| i <= m);
        let has_inner = cycle.iter().any(|&i| i > m);
        if !(has_outer && has_inner) {
            continue;
        }
        let start = (0..len)
            .find(|&t| cycle[t] <= m && cycle[(t + len - 1) % len] > m)
            .expect("cycle meets both circles");
        let rotated: Vec<usize> = (0..len).map(|t| cycle[(start + t) % len]).collect();
        let split = rotated.iter().position(|&i| i > m).unwrap();
        out.push(ThroughCycle {
            outer: rotated[..split].to_vec(),
            inner: rotated[split..].to_vec(),
        });
    }
    out
}

/// `labels[i-1] == labels[σ(i)-1]` for every `i`; with `strict_through_same`
/// all through-string endpoints must additionally carry a single label.
pub fn is_non_mixing<L: PartialEq>(
    sigma: &AnnularPairing,
    labels: &[L],
    strict_through_same: bool,
) -> bool {
    is_non_mixing_matching(&sigma.matching, labels)
        && (!strict_through_same || {
            let mut through = through_strings(sigma).into_iter().flat_map(|(a, b)| [a, b]);
            match through.next() {
                None => true,
                Some(first) => through.all(|i| labels[i - 1] == labels[first - 1]),
            }
        })
}

pub fn is_non_mixing_matching<L: PartialEq>(matching: &[usize], labels: &[L]) -> bool {
    assert_eq!(matching.len(), labels.len(), "one label per position");
    matching
        .iter()
        .enumerate()
        .all(|(idx, &j)| labels[idx] == labels[j - 1])
}

/// Non-crossing pairing of `1..=k` on a single circle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscPairing {
    matching: Vec<usize>,
}

impl DiscPairing {
    pub fn size(&self) -> usize {
        self.matching.len()
    }

    pub fn matching(&self) -> &[usize] {
        &self.matching
    }

    #[inline]
    pub fn partner(&self, i: usize) -> usize {
        self.matching[i - 1]
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs_of(&self.matching)
    }

    /// `σγ_k` with `γ_k = (1,…,k)`.
    pub fn kreweras(&self) -> CyclePermutation {
        let k = self.size();
        let map = (1..=k).map(|i| self.partner(if i == k { 1 } else { i + 1 })).collect();
        CyclePermutation::from_map(map).expect("product of permutations")
    }
}

impl fmt::Display for DiscPairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<Vec<usize>> = self.pairs().into_iter().map(|(a, b)| vec![a, b]).collect();
        write_cycles(f, &cycles)
    }
}

/// NC₂(k); Catalan(k/2) elements, empty for odd `k`.
pub fn enumerate_nc2_disc(k: usize) -> Result<Vec<DiscPairing>> {
    enumerate_nc2_disc_capped(k, DEFAULT_PAIRING_CAP * 2)
}

pub fn enumerate_nc2_disc_capped(k: usize, cap: usize) -> Result<Vec<DiscPairing>> {
    if k > cap {
        return Err(Error::CapExceeded {
            what: "k",
            value: k,
            limit: cap,
        });
    }
    if k % 2 == 1 {
        return Ok(Vec::new());
    }
    // pair the first point of an interval with an odd offset, recurse on
    // the inside and the outside
    fn rec(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo > hi {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        let mut j = lo + 1;
        while j <= hi {
            let inside = rec(lo + 1, j - 1);
            let outside = rec(j + 1, hi);
            for a in &inside {
                for b in &outside {
                    let mut v = Vec::with_capacity(a.len() + b.len() + 1);
                    v.push((lo, j));
                    v.extend_from_slice(a);
                    v.extend_from_slice(b);
                    out.push(v);
                }
            }
            j += 2;
        }
        out
    }
    let mut out: Vec<DiscPairing> = rec(1, k)
        .into_iter()
        .map(|pairs| {
            let mut matching = vec![0; k];
            for (a, b) in pairs {
                matching[a - 1] = b;
                matching[b - 1] = a;
            }
            DiscPairing { matching }
        })
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twelve_point() -> AnnularPairing {
        AnnularPairing::from_pairs(8, 4, &[(1, 2), (3, 10), (4, 5), (6, 9), (7, 8), (11, 12)]).unwrap()
    }

    #[test]
    fn gamma_cycles() {
        assert_eq!(gamma(2, 2).unwrap().to_string(), "(1,2)(3,4)");
        assert_eq!(gamma(1, 1).unwrap().to_string(), "(1)(2)");
        assert_eq!(gamma(8, 4).unwrap().to_string(), "(1,2,3,4,5,6,7,8)(9,10,11,12)");
        assert!(gamma(0, 3).is_err());
    }

    #[test]
    fn twelve_point_kreweras() {
        let s = twelve_point();
        let k = kreweras(&s);
        let expected = CyclePermutation::from_cycles(
            12,
            &[vec![1], vec![6, 8, 2, 10, 12], vec![3, 5, 9], vec![4], vec![7], vec![11]],
        )
        .unwrap();
        assert_eq!(k, expected);
        let tc = through_cycles(&k, 8, 4);
        assert_eq!(
            tc,
            vec![
                ThroughCycle { outer: vec![6, 8, 2], inner: vec![10, 12] },
                ThroughCycle { outer: vec![3, 5], inner: vec![9] },
            ]
        );
        assert_eq!(through_strings(&s), vec![(3, 10), (6, 9)]);
    }

    #[test]
    fn small_enumerations() {
        let e = enumerate_nc2(1, 1).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].matching(), &[2, 1]);
        let e = enumerate_nc2(2, 2).unwrap();
        let shown: Vec<String> = e.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, vec!["(1,3)(2,4)", "(1,4)(2,3)"]);
        assert!(enumerate_nc2(2, 1).unwrap().is_empty());
        assert!(filter_by_through(&enumerate_nc2(2, 2).unwrap(), 1).is_empty());
        assert!(matches!(enumerate_nc2(10, 8), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn kreweras_small() {
        let s = AnnularPairing::from_pairs(2, 2, &[(1, 3), (2, 4)]).unwrap();
        let k = kreweras(&s);
        assert_eq!(k.to_string(), "(1,4)(2,3)");
        assert_eq!(through_cycles(&k, 2, 2).len(), 2);
        let s = AnnularPairing::from_pairs(1, 1, &[(1, 2)]).unwrap();
        assert_eq!(kreweras(&s).to_string(), "(1,2)");
        assert_eq!(
            through_cycles(&kreweras(&s), 1, 1),
            vec![ThroughCycle { outer: vec![1], inner: vec![2] }]
        );
    }

    #[test]
    fn rejects_bad_candidates() {
        assert!(matches!(
            is_annular_noncrossing(&[2, 1, 4, 3], 2, 2),
            Err(Error::NoThroughString)
        ));
        assert!(matches!(
            is_annular_noncrossing(&[1, 2], 1, 1),
            Err(Error::NotAnInvolution { .. })
        ));
        // same-orientation spokes on (3,3) cross
        assert!(!is_annular_noncrossing(&[4, 5, 6, 1, 2, 3], 3, 3).unwrap());
        assert!(is_annular_noncrossing(&[6, 5, 4, 3, 2, 1], 3, 3).unwrap());
    }

    #[test]
    fn mixing() {
        let s = AnnularPairing::from_pairs(2, 2, &[(1, 3), (2, 4)]).unwrap();
        assert!(is_non_mixing(&s, &[1, 2, 1, 2], false));
        assert!(!is_non_mixing(&s, &[1, 2, 1, 2], true));
        assert!(is_non_mixing(&s, &[1, 1, 1, 1], true));
        assert!(!is_non_mixing(&s, &[1, 2, 2, 1], false));
    }

    #[test]
    fn disc_counts() {
        let c: Vec<usize> = (0..=12).map(|k| enumerate_nc2_disc(k).unwrap().len()).collect();
        assert_eq!(c, vec![1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42, 0, 132]);
        let two = enumerate_nc2_disc(4).unwrap();
        assert_eq!(two[0].to_string(), "(1,2)(3,4)");
        assert_eq!(two[1].to_string(), "(1,4)(2,3)");
    }
}
