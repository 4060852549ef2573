use super::DegreeDistribution;
use crate::error::{shape_err, Error, Result};
use std::collections::HashSet;

/// Sparse parity-check matrix with a systematic column layout: columns
/// `0..k` carry information bits, columns `k..n` parity bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseParityCheck {
    n: usize,
    k: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    pub seed: u64,
    pub dist: Option<DegreeDistribution>,
}

impl SparseParityCheck {
    /// Builds from row adjacency. Rows are sorted; duplicate entries are an error.
    pub fn from_rows(n: usize, k: usize, mut rows: Vec<Vec<u32>>, seed: u64) -> Result<Self> {
        if k >= n || rows.len() != n - k {
            return Err(shape_err(format!(
                "{} rows do not match n = {n}, k = {k}",
                rows.len()
            )));
        }
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Format(format!("duplicate edge in row {r}")));
            }
            for &c in row.iter() {
                let c = c as usize;
                if c >= n {
                    return Err(Error::Format(format!("column {c} out of range in row {r}")));
                }
                cols[c].push(r as u32);
            }
        }
        Ok(Self {
            n,
            k,
            rows,
            cols,
            seed,
            dist: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.n - self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<u32>] {
        &self.cols
    }

    pub fn edges(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Node counts per variable degree, sorted by degree.
    pub fn var_degree_histogram(&self) -> Vec<(usize, usize)> {
        histogram(self.cols.iter().map(|c| c.len()))
    }

    pub fn chk_degree_histogram(&self) -> Vec<(usize, usize)> {
        histogram(self.rows.iter().map(|r| r.len()))
    }

    pub fn syndrome_ok(&self, word: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ word[c as usize]) == 0)
    }

    /// True when each row `r` holds parity column `k + r` and no parity
    /// column beyond it, i.e. the parity part is lower triangular with unit
    /// diagonal and back-substitution encodes in linear time.
    pub fn is_triangular_encodable(&self) -> bool {
        let k = self.k as u32;
        self.rows.iter().enumerate().all(|(r, row)| {
            let diag = k + r as u32;
            row.contains(&diag) && row.iter().all(|&c| c < k || c <= diag)
        })
    }

    /// Systematic encoding `[info | parity]` with `H·c = 0`.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(shape_err(format!(
                "{} information bits for k = {}",
                info.len(),
                self.k
            )));
        }
        if !self.is_triangular_encodable() {
            return Err(Error::State("parity part is not lower triangular".into()));
        }
        let mut word = vec![0u8; self.n];
        word[..self.k].copy_from_slice(info);
        let diag0 = self.k as u32;
        for (r, row) in self.rows.iter().enumerate() {
            let diag = diag0 + r as u32;
            let p = row
                .iter()
                .filter(|&&c| c != diag)
                .fold(0u8, |acc, &c| acc ^ word[c as usize]);
            word[diag as usize] = p;
        }
        Ok(word)
    }

    /// GF(2) rank by dense elimination on packed rows.
    pub fn rank(&self) -> usize {
        let words = self.n.div_ceil(64);
        let mut mat: Vec<Vec<u64>> = self
            .rows
            .iter()
            .map(|row| {
                let mut v = vec![0u64; words];
                for &c in row {
                    v[c as usize / 64] |= 1u64 << (c % 64);
                }
                v
            })
            .collect();
        let mut rank = 0;
        for col in 0..self.n {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..mat.len()).find(|&r| mat[r][w] & bit != 0) else {
                continue;
            };
            mat.swap(rank, pivot);
            let prow = mat[rank].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r != rank && row[w] & bit != 0 {
                    row.iter_mut().zip(&prow).for_each(|(a, b)| *a ^= b);
                }
            }
            rank += 1;
            if rank == mat.len() {
                break;
            }
        }
        rank
    }

    /// Whether any two columns share two or more rows (a length-4 cycle).
    pub fn has_four_cycles(&self) -> bool {
        let mut seen: HashSet<(u32, u32)> = HashSet::new();
        for row in &self.rows {
            for (i, &a) in row.iter().enumerate() {
                for &b in &row[i + 1..] {
                    if !seen.insert((a, b)) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Shortest cycle length in the Tanner graph (0 if acyclic), by BFS from
    /// every variable node.
    pub fn girth(&self) -> usize {
        let total = self.n + self.m();
        let mut best = usize::MAX;
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.n {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[start] = 0;
            queue.clear();
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                if 2 * dist[u] >= best {
                    break;
                }
                let nbrs: Vec<usize> = if u < self.n {
                    self.cols[u].iter().map(|&r| self.n + r as usize).collect()
                } else {
                    self.rows[u - self.n].iter().map(|&c| c as usize).collect()
                };
                for v in nbrs {
                    if v == parent[u] {
                        continue;
                    }
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        parent[v] = u;
                        queue.push_back(v);
                    } else {
                        best = best.min(dist[u] + dist[v] + 1);
                    }
                }
            }
        }
        if best == usize::MAX {
            0
        } else {
            best
        }
    }
}

fn histogram(degrees: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut map = std::collections::BTreeMap::new();
    for d in degrees {
        *map.entry(d).or_insert(0usize) += 1;
    }
    map.into_iter().collect()
}
