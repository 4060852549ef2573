//! Progressive edge growth over a lower-triangular parity part.
//!
//! Parity column `j` always holds the accumulator pair (rows `j`, `j+1`);
//! further edges of a parity column go to rows from `j+3` on, which keeps
//! the parity part lower triangular. The final parity column therefore has
//! degree one.

use super::{DegreeDistribution, SparseParityCheck};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Splits `total` items over `fractions` by largest remainder.
fn apportion(fractions: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>().min(total);
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = raw[a] - raw[a].floor();
        let rb = raw[b] - raw[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

struct Graph {
    var_adj: Vec<Vec<u32>>,
    chk_adj: Vec<Vec<u32>>,
    target: Vec<usize>,
}

impl Graph {
    fn connect(&mut self, v: usize, c: usize) {
        self.var_adj[v].push(c as u32);
        self.chk_adj[c].push(v as u32);
    }

    fn has_room(&self, c: usize) -> bool {
        self.chk_adj[c].len() < self.target[c]
    }
}

struct Bfs {
    chk_stamp: Vec<u32>,
    var_stamp: Vec<u32>,
    stamp: u32,
}

impl Bfs {
    /// Admissible checks at the largest distance from `v`, with that
    /// distance in check layers (`usize::MAX` when they are unreachable).
    fn farthest(&mut self, g: &Graph, v: usize, allowed: &dyn Fn(usize) -> bool) -> (Vec<usize>, usize) {
        self.stamp += 1;
        let s = self.stamp;
        let m = g.chk_adj.len();
        let mut pending: Vec<usize> = (0..m).filter(|&c| allowed(c)).collect();
        if pending.is_empty() {
            return (pending, 0);
        }
        let mut frontier_v = vec![v];
        self.var_stamp[v] = s;
        let mut depth = 0;
        loop {
            depth += 1;
            let mut layer = Vec::new();
            for &u in &frontier_v {
                for &c in &g.var_adj[u] {
                    let c = c as usize;
                    if self.chk_stamp[c] != s {
                        self.chk_stamp[c] = s;
                        layer.push(c);
                    }
                }
            }
            if layer.is_empty() {
                return (pending, usize::MAX);
            }
            let unreached: Vec<usize> = pending.iter().copied().filter(|&c| self.chk_stamp[c] != s).collect();
            if unreached.is_empty() {
                // Everything admissible is within reach: the ones first
                // reached in this layer are the farthest.
                return (pending, depth);
            }
            pending = unreached;
            let mut next_v = Vec::new();
            for &c in &layer {
                for &u in &g.chk_adj[c] {
                    let u = u as usize;
                    if self.var_stamp[u] != s {
                        self.var_stamp[u] = s;
                        next_v.push(u);
                    }
                }
            }
            if next_v.is_empty() {
                return (pending, usize::MAX);
            }
            frontier_v = next_v;
        }
    }
}

fn pick_lowest(g: &Graph, cands: &[usize], rng: &mut ChaCha8Rng) -> Option<usize> {
    let best = cands.iter().map(|&c| g.chk_adj[c].len()).min()?;
    let ties: Vec<usize> = cands
        .iter()
        .copied()
        .filter(|&c| g.chk_adj[c].len() == best)
        .collect();
    Some(ties[rng.random_range(0..ties.len())])
}

/// Builds a length-`n` code whose variable-degree histogram follows the
/// node fractions of `dist` (largest-remainder rounding) and whose check
/// degrees are concentrated around the value implied by the edge count.
pub fn construct_code(dist: &DegreeDistribution, n: usize, seed: u64) -> Result<SparseParityCheck> {
    dist.validate()?;
    let fractions: Vec<f64> = dist.var_degrees.iter().map(|(_, f)| *f).collect();
    let counts = apportion(&fractions, n);
    let mut degrees: Vec<usize> = Vec::with_capacity(n);
    for (&(d, _), &cnt) in dist.var_degrees.iter().zip(&counts) {
        degrees.extend(std::iter::repeat_n(d, cnt));
    }
    degrees.sort_unstable();
    let edges: usize = degrees.iter().sum();
    let m = (edges as f64 / dist.mean_chk_degree()).round() as usize;
    if m < 2 || m >= n {
        return Err(Error::Infeasible(format!(
            "{m} checks for n = {n} is not a usable code"
        )));
    }
    let k = n - m;

    // Check targets: node fractions of ρ, then spread the edge surplus or
    // deficit one edge per check.
    let chk_frac: Vec<f64> = dist.chk_degrees.iter().map(|(_, f)| *f).collect();
    let chk_counts = apportion(&chk_frac, m);
    let mut target: Vec<usize> = Vec::with_capacity(m);
    for (&(d, _), &cnt) in dist.chk_degrees.iter().zip(&chk_counts) {
        target.extend(std::iter::repeat_n(d, cnt));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Shuffle so adjustments and high degrees are spread across rows.
    for i in (1..m).rev() {
        target.swap(i, rng.random_range(0..=i));
    }
    // Column degrees: parity columns take the m smallest, larger ones to
    // lower indices. Column j only reaches rows j..m, so the last columns
    // are capped (the final one always has degree one).
    let mut col_degree = vec![0usize; n];
    let parity_degrees: Vec<usize> = degrees[..m].iter().rev().copied().collect();
    for (j, &d) in parity_degrees.iter().enumerate() {
        // Extras start at row j+3 so neighbouring parity columns never
        // share two rows.
        let room = (m - j).min(2 + m.saturating_sub(j + 3));
        if d > room && j + 4 < m {
            return Err(Error::Infeasible(format!(
                "parity column {j} cannot hold degree {d}"
            )));
        }
        col_degree[k + j] = d.min(room);
    }
    let mut info_degrees: Vec<usize> = degrees[m..].to_vec();
    for i in (1..info_degrees.len()).rev() {
        info_degrees.swap(i, rng.random_range(0..=i));
    }
    col_degree[..k].copy_from_slice(&info_degrees);
    let realized_edges: usize = col_degree.iter().sum();
    let mut have: usize = target.iter().sum();
    let mut i = 0usize;
    while have != realized_edges {
        if have < realized_edges {
            target[i % m] += 1;
            have += 1;
        } else if target[i % m] > 2 {
            target[i % m] -= 1;
            have -= 1;
        }
        i += 1;
        if i > 64 * m * (edges + 1) {
            return Err(Error::Infeasible("cannot balance check degrees".into()));
        }
    }
    if target.iter().any(|&t| t > n) {
        return Err(Error::Infeasible("check degree exceeds block length".into()));
    }

    let mut g = Graph {
        var_adj: vec![Vec::new(); n],
        chk_adj: vec![Vec::new(); m],
        target,
    };
    for j in 0..m {
        g.connect(k + j, j);
        if j + 1 < m {
            g.connect(k + j, j + 1);
        }
    }
    // PEG in ascending degree order over the remaining sockets.
    let mut order: Vec<usize> = (0..n).filter(|&v| g.var_adj[v].len() < col_degree[v]).collect();
    // Within a degree, parity columns go first from the tail, where the
    // admissible rows are fewest.
    order.sort_by_key(|&v| (col_degree[v], v < k, std::cmp::Reverse(v)));
    let mut bfs = Bfs {
        chk_stamp: vec![0; m],
        var_stamp: vec![0; n],
        stamp: 0,
    };
    for v in order {
        let min_row = if v >= k { v - k + 3 } else { 0 };
        while g.var_adj[v].len() < col_degree[v] {
            let adjacent = g.var_adj[v].clone();
            let admissible = |c: usize| c >= min_row && !adjacent.contains(&(c as u32));
            let gr = &g;
            let (with_room, d_room) = bfs.farthest(gr, v, &|c| admissible(c) && gr.has_room(c));
            let (any, d_any) = bfs.farthest(gr, v, &admissible);
            // Degree targets give way only when honoring them would close
            // a length-4 cycle that an overfull check avoids.
            let choice = match pick_lowest(&g, &with_room, &mut rng) {
                Some(c) if d_room > 2 || d_room >= d_any => c,
                _ => {
                    let c = pick_lowest(&g, &any, &mut rng).ok_or_else(|| {
                        Error::Infeasible(format!("no admissible check for column {v}"))
                    })?;
                    if !g.has_room(c) {
                        g.target[c] += 1;
                    }
                    c
                }
            };
            g.connect(v, choice);
        }
    }
    let mut code = SparseParityCheck::from_rows(n, k, g.chk_adj, seed)?;
    code.dist = Some(dist.clone());
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(&[0.1, 0.8, 0.1], 4800), vec![480, 3840, 480]);
        let c = apportion(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 100);
        assert_eq!(c.iter().sum::<usize>(), 100);
        assert!(c.iter().all(|&x| x == 33 || x == 34));
    }

    #[test]
    fn histogram_matches_request() {
        let dist = DegreeDistribution::new(vec![(2, 0.1), (3, 0.8), (4, 0.1)], vec![(30, 1.0)]).unwrap();
        let n = 1200;
        let code = construct_code(&dist, n, 5).unwrap();
        assert_eq!(code.m(), 120);
        let hist = code.var_degree_histogram();
        for (d, f) in &dist.var_degrees {
            let got = hist.iter().find(|(dd, _)| dd == d).map(|(_, c)| *c).unwrap_or(0);
            let want = f * n as f64;
            assert!((got as f64 - want).abs() <= 1.0, "degree {d}: {got} vs {want}");
        }
        let chk = code.chk_degree_histogram();
        assert!(chk.iter().all(|(d, _)| (29..=31).contains(d)), "{chk:?}");
        let at_30 = chk.iter().find(|(d, _)| *d == 30).map_or(0, |(_, c)| *c);
        assert!(at_30 as f64 >= 0.9 * code.m() as f64, "{chk:?}");
    }

    #[test]
    fn no_four_cycles_including_the_parity_tail() {
        for seed in 0..4 {
            let code = construct_code(&DegreeDistribution::regular(3, 6).unwrap(), 600, seed).unwrap();
            assert!(!code.has_four_cycles(), "seed {seed}");
        }
    }

    #[test]
    fn full_rank_and_encodable() {
        let dist = DegreeDistribution::regular(3, 6).unwrap();
        let code = construct_code(&dist, 600, 1).unwrap();
        assert!(code.is_triangular_encodable());
        assert_eq!(code.rank(), code.m());
    }

    #[test]
    fn same_seed_same_code() {
        let dist = DegreeDistribution::regular(3, 6).unwrap();
        let a = construct_code(&dist, 400, 9).unwrap();
        let b = construct_code(&dist, 400, 9).unwrap();
        let c = construct_code(&dist, 400, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.rows(), c.rows());
    }

    #[test]
    fn low_rate_family_member_builds() {
        // Few degree-2 nodes relative to the parity count: parity columns
        // pick up extra edges below the accumulator.
        let var = vec![(2, 2.0 / 12.0), (3, 9.0 / 12.0), (13, 1.0 / 12.0)];
        let dist = DegreeDistribution::check_concentrated(var, 8.0).unwrap();
        let code = construct_code(&dist, 1200, 3).unwrap();
        assert!(code.is_triangular_encodable());
        assert_eq!(code.rank(), code.m());
        assert!((code.rate() - (1.0 - 44.0 / 12.0 / 8.0)).abs() < 1e-3);
    }
}
