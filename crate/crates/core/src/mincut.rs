/// Global minimum cut of an undirected weighted graph given as a dense symmetric matrix.
///
/// Returns the cut weight and one side of the cut, sorted. Ties between equal phases keep the earliest; ties in the maximum-adjacency
/// order pick the smallest vertex index.
pub fn stoer_wagner(weights: &[Vec<u64>]) -> Option<(u64, Vec<usize>)> {
    let n = weights.len();
    if n < 2 {
        return None;
    }
    let mut w: Vec<Vec<u64>> = weights.to_vec();
    let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut best: Option<(u64, Vec<usize>)> = None;
    while alive.len() > 1 {
        let mut key = vec![0u64; n];
        let mut added = vec![false; n];
        let mut prev = alive[0];
        let mut last = alive[0];
        for step in 0..alive.len() {
            let next = if step == 0 {
                alive[0]
            } else {
                *alive
                    .iter()
                    .filter(|&&v| !added[v])
                    .max_by(|&&x, &&y| key[x].cmp(&key[y]).then(y.cmp(&x)))
                    .expect("unadded vertex")
            };
            added[next] = true;
            prev = last;
            last = next;
            for &v in &alive {
                if !added[v] {
                    key[v] += w[next][v];
                }
            }
        }
        let cut = key[last];
        if best.as_ref().is_none_or(|(b, _)| cut < *b) {
            let mut side = members[last].clone();
            side.sort_unstable();
            best = Some((cut, side));
        }
        let moved = std::mem::take(&mut members[last]);
        members[prev].extend(moved);
        for &v in &alive {
            if v != last && v != prev {
                w[prev][v] += w[last][v];
                w[v][prev] = w[prev][v];
            }
        }
        alive.retain(|&v| v != last);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, u64)]) -> Vec<Vec<u64>> {
        let mut w = vec![vec![0; n]; n];
        for &(a, b, x) in edges {
            w[a][b] += x;
            w[b][a] += x;
        }
        w
    }

    fn cut_value(w: &[Vec<u64>], side: &[usize]) -> u64 {
        let n = w.len();
        let inside: Vec<bool> = (0..n).map(|v| side.contains(&v)).collect();
        let mut total = 0;
        for a in 0..n {
            for b in 0..n {
                if inside[a] && !inside[b] {
                    total += w[a][b];
                }
            }
        }
        total
    }

    #[test]
    fn classic_example() {
        let w = graph(
            8,
            &[
                (0, 1, 2),
                (0, 4, 3),
                (1, 2, 3),
                (1, 4, 2),
                (1, 5, 2),
                (2, 3, 4),
                (2, 6, 2),
                (3, 6, 2),
                (3, 7, 2),
                (4, 5, 3),
                (5, 6, 1),
                (6, 7, 3),
            ],
        );
        let (value, side) = stoer_wagner(&w).unwrap();
        assert_eq!(value, 4);
        assert_eq!(cut_value(&w, &side), 4);
    }

    #[test]
    fn matches_brute_force() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            seed >> 33
        };
        for _ in 0..200 {
            let n = 2 + (next() % 6) as usize;
            let mut w = vec![vec![0u64; n]; n];
            #[allow(clippy::needless_range_loop)]
            for a in 0..n {
                for b in a + 1..n {
                    let x = next() % 4;
                    w[a][b] = x;
                    w[b][a] = x;
                }
            }
            let brute = (1..(1u32 << n) - 1)
                .map(|mask| {
                    let side: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
                    cut_value(&w, &side)
                })
                .min()
                .unwrap();
            let (value, side) = stoer_wagner(&w).unwrap();
            assert_eq!(value, brute);
            assert_eq!(cut_value(&w, &side), brute);
            assert!(!side.is_empty() && side.len() < n);
        }
    }

    #[test]
    fn tiny_graphs() {
        assert!(stoer_wagner(&[vec![0]]).is_none());
        assert_eq!(stoer_wagner(&graph(2, &[(0, 1, 5)])).unwrap().0, 5);
        assert_eq!(stoer_wagner(&graph(3, &[(0, 1, 5)])).unwrap().0, 0);
    }
}
