//! Breadth-first immigration forests, their height profiles and cousin sums.
//!
//! Vertices are labelled `0, 1, 2, ...` in breadth-first order. Generation 0
//! holds the `k` roots; the children of generation `h` are listed parent by
//! parent, followed by the immigrants that arrive at generation `h + 1`.

use alloc::vec;
use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::law::CountLaw;
use crate::path::{Interp, SampledPath};

/// Driving data of a forest: roots, offspring counts in breadth-first order,
/// and immigration counts (`immigrants[h]` arrive at generation `h + 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringSequence {
    pub roots: u64,
    pub offspring: Vec<u64>,
    pub immigrants: Vec<u64>,
}

/// Generation sizes `z_0, z_1, ...` together with their running totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<u64>", into = "Vec<u64>")]
pub struct HeightProfile {
    z: Vec<u64>,
    c: Vec<u64>,
}

impl From<Vec<u64>> for HeightProfile {
    fn from(z: Vec<u64>) -> Self {
        let mut acc = 0;
        let c = z
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        Self { z, c }
    }
}

impl From<HeightProfile> for Vec<u64> {
    fn from(p: HeightProfile) -> Self {
        p.z
    }
}

impl HeightProfile {
    pub fn sizes(&self) -> &[u64] {
        &self.z
    }

    /// `c_h = z_0 + ... + z_h`.
    pub fn cumulative(&self) -> &[u64] {
        &self.c
    }

    pub fn total(&self) -> u64 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn height(&self) -> usize {
        self.z.len()
    }

    /// Generation of breadth-first vertex `p`.
    pub fn generation_of(&self, p: u64) -> Option<usize> {
        let h = self.c.partition_point(|&c| c <= p);
        (h < self.z.len()).then_some(h)
    }

    /// `sum_h z_h (z_h - 1)`: the cousin sum over the whole profile.
    pub fn cousin_total(&self) -> u64 {
        self.z.iter().map(|&z| z * z.saturating_sub(1)).sum()
    }

    /// `sum_h h z_h`: the height sum over the whole profile.
    pub fn height_total(&self) -> u64 {
        self.z.iter().enumerate().map(|(h, &z)| h as u64 * z).sum()
    }

    /// `K_p` and `J_p` for an arbitrary vertex count `p <= total`.
    pub fn cousin_height_at(&self, p: u64) -> Result<(u64, u64)> {
        if p > self.total() {
            return Err(Error::IndexOutOfRange {
                what: "height profile",
                index: p as usize,
                len: self.total() as usize,
            });
        }
        let mut k = 0;
        let mut j = 0;
        let mut before = 0;
        for (h, &z) in self.z.iter().enumerate() {
            let take = z.min(p - before);
            k += take * z.saturating_sub(1);
            j += take * h as u64;
            before += take;
            if before == p {
                break;
            }
        }
        Ok((k, j))
    }
}

/// Build the first `n` vertices of the forest driven by `seq`.
///
/// Generations are filled one at a time; the generation in which vertex `n`
/// falls is cut short, so the returned profile sums to exactly `n`. Offspring
/// and immigration entries are read only for generations that are needed.
pub fn build_forest(seq: &OffspringSequence, n: u64) -> Result<HeightProfile> {
    if n == 0 {
        return Ok(HeightProfile::from(Vec::new()));
    }
    if seq.roots >= n {
        if seq.roots > n {
            return Err(invalid("more roots than vertices"));
        }
        return Ok(HeightProfile::from(vec![n]));
    }
    let mut z = vec![seq.roots];
    let mut placed = seq.roots;
    let mut next_parent = 0usize;
    let mut h = 0usize;
    while placed < n {
        let gen = z[h] as usize;
        if next_parent + gen > seq.offspring.len() {
            return Err(Error::ExhaustedSequence {
                sequence: "offspring",
                consumed: seq.offspring.len(),
            });
        }
        let children: u64 = seq.offspring[next_parent..next_parent + gen].iter().sum();
        next_parent += gen;
        let imm = *seq.immigrants.get(h).ok_or(Error::ExhaustedSequence {
            sequence: "immigration",
            consumed: seq.immigrants.len(),
        })?;
        let size = (children + imm).min(n - placed);
        z.push(size);
        placed += size;
        h += 1;
    }
    Ok(HeightProfile::from(z))
}

/// Galton-Watson process with immigration, first `height_cap` generations.
pub fn sample_gwi<R: Rng + ?Sized>(
    roots: u64,
    offspring: &CountLaw,
    immigration: &CountLaw,
    height_cap: usize,
    rng: &mut R,
) -> Result<HeightProfile> {
    offspring.validate()?;
    immigration.validate()?;
    let mut z = Vec::with_capacity(height_cap);
    if height_cap == 0 {
        return Ok(HeightProfile::from(z));
    }
    z.push(roots);
    while z.len() < height_cap {
        let prev = *z.last().unwrap();
        z.push(offspring.sample_sum(prev, rng) + immigration.sample(rng));
    }
    Ok(HeightProfile::from(z))
}

/// Galton-Watson process with immigration, run generation by generation until
/// at least `min_vertices` vertices exist.
pub fn sample_gwi_vertices<R: Rng + ?Sized>(
    roots: u64,
    offspring: &CountLaw,
    immigration: &CountLaw,
    min_vertices: u64,
    max_generations: usize,
    rng: &mut R,
) -> Result<HeightProfile> {
    offspring.validate()?;
    immigration.validate()?;
    let mut z = vec![roots];
    let mut total = roots;
    while total < min_vertices {
        if z.len() >= max_generations {
            return Err(Error::HorizonCapExceeded {
                cap: max_generations as f64,
            });
        }
        let prev = *z.last().unwrap();
        let next = offspring.sample_sum(prev, rng) + immigration.sample(rng);
        total += next;
        z.push(next);
    }
    Ok(HeightProfile::from(z))
}

/// `K_p` (cousin counts) and `J_p` (heights) summed over the first `p`
/// vertices, tabulated for every `p = 0..=total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CousinHeightProcesses {
    pub k: Vec<u64>,
    pub j: Vec<u64>,
}

pub fn cousin_height_processes(profile: &HeightProfile) -> CousinHeightProcesses {
    let n = profile.total() as usize;
    let mut k = Vec::with_capacity(n + 1);
    let mut j = Vec::with_capacity(n + 1);
    let (mut ka, mut ja) = (0u64, 0u64);
    k.push(0);
    j.push(0);
    for (h, &z) in profile.sizes().iter().enumerate() {
        for _ in 0..z {
            ka += z - 1;
            ja += h as u64;
            k.push(ka);
            j.push(ja);
        }
    }
    CousinHeightProcesses { k, j }
}

/// `J / (2 n^{3/2}) - K / n^{3/2}` over the whole profile, `n` its size.
pub fn gs_statistic(profile: &HeightProfile) -> f64 {
    let n = profile.total() as f64;
    let scale = n.powf(1.5);
    profile.height_total() as f64 / (2.0 * scale) - profile.cousin_total() as f64 / scale
}

/// Uniformly random forest of `k` rooted trees on `n` labelled vertices.
///
/// Throws `n - k` balls into `n` boxes, then applies the cycle lemma: of the
/// `n` cyclic shifts of the box counts exactly `k` are Lukasiewicz paths of a
/// `k`-tree forest, and one of them is chosen uniformly.
pub fn sample_uniform_forest<R: Rng + ?Sized>(
    n: u64,
    k: u64,
    rng: &mut R,
) -> Result<HeightProfile> {
    if k > n || (k == 0 && n > 0) {
        return Err(invalid("uniform forest needs 1 <= k <= n"));
    }
    if n == 0 {
        return Ok(HeightProfile::from(Vec::new()));
    }
    let nu = n as usize;
    let mut counts = vec![0u64; nu];
    for _ in 0..n - k {
        counts[rng.random_range(0..nu)] += 1;
    }
    let start = lukasiewicz_rotation(&counts, k, rng.random_range(0..k));
    let mut offspring = Vec::with_capacity(nu);
    offspring.extend_from_slice(&counts[start..]);
    offspring.extend_from_slice(&counts[..start]);
    let seq = OffspringSequence {
        roots: k,
        offspring,
        immigrants: vec![0; nu],
    };
    build_forest(&seq, n)
}

/// Start index of the `which`-th valid cyclic shift (cycle lemma).
///
/// With steps `counts[j] - 1 >= -1` summing to `-k`, the valid shifts start at
/// the first visits of the levels `m, m + 1, ..., m + k - 1`, where `m` is the
/// minimum of the partial sums `S_0..S_{n-1}`.
fn lukasiewicz_rotation(counts: &[u64], k: u64, which: u64) -> usize {
    let mut s = 0i64;
    let mut partial = Vec::with_capacity(counts.len());
    for &c in counts {
        partial.push(s);
        s += c as i64 - 1;
    }
    debug_assert_eq!(s, -(k as i64));
    let m = *partial.iter().min().unwrap();
    let level = m + which as i64;
    partial.iter().position(|&x| x == level).unwrap()
}

/// `v -> (2 / sqrt n) z_{floor(2 sqrt(n) v)}` as a step path on the grid of
/// width `1 / (2 sqrt n)`, ending with a zero after the last generation.
pub fn scaled_profile(profile: &HeightProfile, n: u64) -> Result<SampledPath> {
    if n == 0 {
        return Err(invalid("scaling needs n >= 1"));
    }
    let rn = (n as f64).sqrt();
    let mut values: Vec<f64> = profile
        .sizes()
        .iter()
        .map(|&z| 2.0 * z as f64 / rn)
        .collect();
    values.push(0.0);
    SampledPath::new(1.0 / (2.0 * rn), values, Interp::PiecewiseConstantLeft)
}

/// Slow reference samplers and exact enumeration used to validate the fast
/// routines above.
pub mod oracle {
    use super::*;
    use alloc::collections::BTreeMap;

    /// Every forest on `n` labelled vertices with `k` roots, grouped by
    /// height profile. Feasible for `n <= 7`.
    pub fn enumerate_profiles(n: usize, k: usize) -> BTreeMap<Vec<u64>, u64> {
        let mut out = BTreeMap::new();
        if n == 0 || k == 0 || k > n {
            return out;
        }
        // parent[v] = n means v is a root.
        let mut parent = vec![0usize; n];
        let total = (n + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            for p in parent.iter_mut() {
                *p = c % (n + 1);
                c /= n + 1;
            }
            if parent.iter().filter(|&&p| p == n).count() != k {
                continue;
            }
            if let Some(depths) = depths(&parent) {
                let h = *depths.iter().max().unwrap();
                let mut z = vec![0u64; h + 1];
                for d in depths {
                    z[d] += 1;
                }
                *out.entry(z).or_insert(0) += 1;
            }
        }
        out
    }

    fn depths(parent: &[usize]) -> Option<Vec<usize>> {
        let n = parent.len();
        let mut depth = vec![usize::MAX; n];
        let mut chain = Vec::new();
        for v in 0..n {
            chain.clear();
            let mut u = v;
            let mut d = loop {
                if depth[u] != usize::MAX {
                    break depth[u] + 1;
                }
                if chain.len() > n {
                    return None;
                }
                chain.push(u);
                if parent[u] == n {
                    break 0;
                }
                u = parent[u];
            };
            while let Some(w) = chain.pop() {
                depth[w] = d;
                d += 1;
            }
        }
        Some(depth)
    }

    /// `k` Poisson(1) Galton-Watson trees conditioned on `n` vertices in
    /// total, by rejection. Only usable for small `n`.
    pub fn rejection_uniform_forest<R: Rng + ?Sized>(
        n: u64,
        k: u64,
        rng: &mut R,
    ) -> Result<HeightProfile> {
        if n > 50 || k == 0 || k > n {
            return Err(invalid("rejection sampler supports 1 <= k <= n <= 50"));
        }
        let law = CountLaw::Poisson { mean: 1.0 };
        'attempt: loop {
            let mut z = vec![k];
            let mut total = k;
            loop {
                let prev = *z.last().unwrap();
                if prev == 0 {
                    break;
                }
                let next = law.sample_sum(prev, rng);
                total += next;
                if total > n {
                    continue 'attempt;
                }
                if next == 0 {
                    break;
                }
                z.push(next);
            }
            if total == n {
                return Ok(HeightProfile::from(z));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    fn worked_example_sequence() -> OffspringSequence {
        OffspringSequence {
            roots: 4,
            offspring: vec![
                1, 1, 3, 2, 0, 2, 1, 0, 1, 1, 0, 0, 2, 0, 1, 0, 2, 0, 0, 0, 0, 0, 0, 0,
            ],
            immigrants: vec![2, 0, 1],
        }
    }

    #[test]
    fn worked_example_profile_and_statistic() {
        let p = build_forest(&worked_example_sequence(), 24).unwrap();
        assert_eq!(p.sizes(), &[4, 9, 7, 4]);
        assert_eq!(p.cousin_total(), 138);
        assert_eq!(p.height_total(), 35);
        let expected = 35.0 / (2.0 * 24f64.powf(1.5)) - 138.0 / 24f64.powf(1.5);
        assert!((gs_statistic(&p) - expected).abs() < 1e-15);
        assert!((gs_statistic(&p) + 1.024_87).abs() < 1e-5);
    }

    #[test]
    fn worked_example_needs_no_fourth_immigration_entry() {
        let mut seq = worked_example_sequence();
        seq.offspring.truncate(20);
        assert_eq!(build_forest(&seq, 24).unwrap().sizes(), &[4, 9, 7, 4]);
    }

    #[test]
    fn boundary_profiles() {
        let seq = OffspringSequence {
            roots: 1,
            offspring: vec![1; 10],
            immigrants: vec![0; 10],
        };
        assert_eq!(build_forest(&seq, 5).unwrap().sizes(), &[1, 1, 1, 1, 1]);
        let seq = OffspringSequence {
            roots: 2,
            offspring: vec![0; 4],
            immigrants: vec![0; 4],
        };
        assert_eq!(build_forest(&seq, 2).unwrap().sizes(), &[2]);
        let empty = OffspringSequence {
            roots: 0,
            offspring: vec![],
            immigrants: vec![],
        };
        assert!(build_forest(&empty, 0).unwrap().sizes().is_empty());
    }

    #[test]
    fn exhausted_sequences_are_reported() {
        let seq = OffspringSequence {
            roots: 1,
            offspring: vec![1, 1],
            immigrants: vec![0; 10],
        };
        assert!(matches!(
            build_forest(&seq, 5),
            Err(Error::ExhaustedSequence {
                sequence: "offspring",
                ..
            })
        ));
        let seq = OffspringSequence {
            roots: 1,
            offspring: vec![1; 10],
            immigrants: vec![0],
        };
        assert!(matches!(
            build_forest(&seq, 5),
            Err(Error::ExhaustedSequence {
                sequence: "immigration",
                ..
            })
        ));
    }

    #[test]
    fn gwi_small_examples() {
        let mut rng = replicate_rng(0, 0);
        let zero = CountLaw::PointMass { value: 0 };
        let five = CountLaw::PointMass { value: 5 };
        let p = sample_gwi(3, &zero, &zero, 1, &mut rng).unwrap();
        assert_eq!(p.sizes(), &[3]);
        let p = sample_gwi(0, &zero, &five, 2, &mut rng).unwrap();
        assert_eq!(p.sizes(), &[0, 5]);
    }

    #[test]
    fn cousin_processes_match_closed_forms() {
        let p = build_forest(&worked_example_sequence(), 24).unwrap();
        let ch = cousin_height_processes(&p);
        assert_eq!(ch.k.len(), 25);
        for (h, &c) in p.cumulative().iter().enumerate() {
            let k: u64 = p.sizes()[..=h].iter().map(|&z| z * (z - 1)).sum();
            let j: u64 = p.sizes()[..=h]
                .iter()
                .enumerate()
                .map(|(l, &z)| l as u64 * z)
                .sum();
            assert_eq!(ch.k[c as usize], k);
            assert_eq!(ch.j[c as usize], j);
        }
        for q in 0..=24 {
            assert_eq!(
                p.cousin_height_at(q).unwrap(),
                (ch.k[q as usize], ch.j[q as usize])
            );
        }
        assert_eq!(p.generation_of(4), Some(1));
        assert_eq!(p.generation_of(24), None);
    }

    #[test]
    fn uniform_sampler_small_case_frequencies() {
        let mut rng = replicate_rng(11, 0);
        let reps = 30_000;
        let chain = (0..reps)
            .filter(|_| sample_uniform_forest(3, 1, &mut rng).unwrap().sizes() == [1, 1, 1])
            .count() as f64
            / reps as f64;
        let se = (2.0f64 / 9.0 / reps as f64).sqrt();
        assert!((chain - 2.0 / 3.0).abs() < 5.0 * se, "{chain}");
    }

    #[test]
    fn uniform_sampler_single_tree_edge_cases() {
        let mut rng = replicate_rng(2, 0);
        assert_eq!(sample_uniform_forest(4, 4, &mut rng).unwrap().sizes(), &[4]);
        assert_eq!(sample_uniform_forest(1, 1, &mut rng).unwrap().sizes(), &[1]);
        assert!(sample_uniform_forest(3, 0, &mut rng).is_err());
        assert!(sample_uniform_forest(3, 4, &mut rng).is_err());
    }

    #[test]
    fn enumeration_counts_match_cayley() {
        // k n^(n-k-1) binom(n, k) forests of k trees on n labelled vertices.
        let binom = |n: u64, k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
        for n in 1..=6usize {
            for k in 1..=n {
                let total: u64 = oracle::enumerate_profiles(n, k).values().sum();
                let (nu, ku) = (n as u64, k as u64);
                let expected = if k == n {
                    1
                } else {
                    ku * nu.pow((n - k - 1) as u32) * binom(nu, ku)
                };
                assert_eq!(total, expected, "n={n} k={k}");
            }
        }
        let three = oracle::enumerate_profiles(3, 1);
        assert_eq!(three[&vec![1, 1, 1]], 6);
        assert_eq!(three[&vec![1, 2]], 3);
    }

    #[test]
    fn scaled_profile_grid() {
        let p = HeightProfile::from(vec![16]);
        let s = scaled_profile(&p, 16).unwrap();
        assert_eq!(s.dt, 0.125);
        assert_eq!(s.values, vec![8.0, 0.0]);
        assert_eq!(s.value_at(0.1), 8.0);
        assert_eq!(s.value_at(0.2), 0.0);
    }
}
