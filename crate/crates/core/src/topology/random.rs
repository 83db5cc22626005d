use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Partition, Topology, TopologyError, TopologyKind};

/// Random simple connected `(d0, d1)`-biregular bipartite graph by the
/// configuration model: shuffle side-1 stubs against side-0 stubs, switch
/// away parallel edges, and reject disconnected results.
pub fn random_biregular<R: Rng + ?Sized>(
    n0: usize,
    d0: usize,
    n1: usize,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Topology, TopologyError> {
    if n0 == 0 || n1 == 0 || d0 == 0 || !(n0 * d0).is_multiple_of(n1) {
        return Err(TopologyError::Unrealizable(format!(
            "n0*d0 = {} is not divisible by n1 = {n1}",
            n0 * d0
        )));
    }
    let d1 = n0 * d0 / n1;
    if d0 > n1 || d1 > n0 {
        return Err(TopologyError::Unrealizable(format!(
            "degrees ({d0}, {d1}) exceed opposite side sizes ({n1}, {n0})"
        )));
    }
    let partition = Partition { n_a: n0, n_b: n1 };
    let left: Vec<usize> = (0..n0).flat_map(|u| std::iter::repeat_n(u, d0)).collect();
    let mut right: Vec<usize> = (0..n1).flat_map(|v| std::iter::repeat_n(n0 + v, d1)).collect();
    for _ in 0..max_attempts {
        right.shuffle(rng);
        if !repair_parallel_edges(&left, &mut right, rng, 50 * left.len()) {
            continue;
        }
        let pairs: Vec<(usize, usize)> = left.iter().copied().zip(right.iter().copied()).collect();
        let g = Topology::from_edges(TopologyKind::Biregular, n0 + n1, Some(partition), pairs)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(TopologyError::Unrealizable(format!(
        "no simple connected pairing in {max_attempts} attempts"
    )))
}

/// Removes parallel edges by swapping the side-1 endpoints of a repeated
/// stub pair with a random other pair, as long as the swap creates no new
/// repeat. Returns false when the budget runs out.
fn repair_parallel_edges<R: Rng + ?Sized>(left: &[usize], right: &mut [usize], rng: &mut R, budget: usize) -> bool {
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (&u, &v) in left.iter().zip(right.iter()) {
        *seen.entry((u, v)).or_default() += 1;
    }
    for _ in 0..budget {
        let Some(i) = (0..left.len()).find(|&i| seen[&(left[i], right[i])] > 1) else {
            return true;
        };
        let j = rng.gen_range(0..left.len());
        let (a, b) = ((left[i], right[j]), (left[j], right[i]));
        if i == j || a == b || seen.get(&a).copied().unwrap_or(0) > 0 || seen.get(&b).copied().unwrap_or(0) > 0 {
            continue;
        }
        for key in [(left[i], right[i]), (left[j], right[j])] {
            *seen.get_mut(&key).unwrap() -= 1;
        }
        right.swap(i, j);
        *seen.entry(a).or_default() += 1;
        *seen.entry(b).or_default() += 1;
    }
    !seen.values().any(|&c| c > 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn produces_biregular_connected_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n0, d0, n1) in [(6, 2, 4), (8, 3, 6), (16, 4, 16), (12, 5, 10)] {
            let g = random_biregular(n0, d0, n1, &mut rng, 1000).unwrap();
            assert!(g.is_simple() && g.is_connected());
            assert_eq!(g.biregular_degrees().unwrap(), (d0, n0 * d0 / n1));
        }
    }

    #[test]
    fn rejects_impossible_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(random_biregular(3, 2, 4, &mut rng, 10).is_err());
        assert!(random_biregular(2, 3, 2, &mut rng, 10).is_err());
    }
}
