//! Sparse parity-check matrices and the Tanner graph they define.

mod alist;
mod protograph;
mod puncture;

pub use alist::{load_alist, read_alist, save_alist, write_alist};
pub use protograph::{lift_protograph, parse_base_matrix, MAX_SHIFT_REDRAWS};
pub use puncture::{apply_puncture, PunctureMask};

use crate::{Error, Result};

/// Binary parity-check matrix `H` stored as a Tanner graph.
///
/// Edges are numbered in check-major order: the edges of check `c` occupy
/// `check_ptr[c]..check_ptr[c + 1]`, with variables sorted ascending. Each
/// variable keeps the ids of its own edges, also in ascending check order.
/// The structure is immutable once built and can be shared between threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_vars: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    edge_check: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-check variable lists (0-based).
    ///
    /// Rejects out-of-range indices and duplicate edges. Lists need not be
    /// sorted.
    pub fn from_check_lists(n_vars: usize, checks: &[Vec<usize>]) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidCode("code has no variable nodes".into()));
        }
        let mut check_ptr = Vec::with_capacity(checks.len() + 1);
        let mut edge_var = Vec::new();
        let mut edge_check = Vec::new();
        check_ptr.push(0);
        for (c, vars) in checks.iter().enumerate() {
            let mut sorted = vars.clone();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidCode(format!(
                        "duplicate edge between check {c} and variable {}",
                        w[0]
                    )));
                }
            }
            if let Some(&v) = sorted.last() {
                if v >= n_vars {
                    return Err(Error::InvalidCode(format!(
                        "check {c} references variable {v}, but there are only {n_vars}"
                    )));
                }
            }
            edge_check.extend(std::iter::repeat_n(c, sorted.len()));
            edge_var.extend_from_slice(&sorted);
            check_ptr.push(edge_var.len());
        }

        let mut var_ptr = vec![0usize; n_vars + 1];
        for &v in &edge_var {
            var_ptr[v + 1] += 1;
        }
        for v in 0..n_vars {
            var_ptr[v + 1] += var_ptr[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0usize; edge_var.len()];
        // Edges are visited in check order, so each variable's list ends up
        // sorted by check index.
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }

        Ok(Self {
            n_vars,
            check_ptr,
            edge_var,
            edge_check,
            var_ptr,
            var_edges,
        })
    }

    /// Builds a matrix from dense 0/1 rows. Any nonzero entry is an edge.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n_vars = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_vars) {
            return Err(Error::InvalidCode("dense rows have unequal length".into()));
        }
        let checks: Vec<Vec<usize>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Self::from_check_lists(n_vars, &checks)
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n_checks())
            .map(|c| {
                let mut row = vec![0u8; self.n_vars];
                for &v in self.check_vars(c) {
                    row[v] = 1;
                }
                row
            })
            .collect()
    }

    /// Codeword length `N`.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Number of parity checks `M`.
    pub fn n_checks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Design rate `(N - M) / N`, assuming `H` has full rank.
    ///
    /// No rank check is performed. Square or tall matrices give a rate
    /// `<= 0`; use [`validate_rate`](Self::validate_rate) where a usable
    /// code is required.
    pub fn rate(&self) -> f64 {
        (self.n_vars as f64 - self.n_checks() as f64) / self.n_vars as f64
    }

    /// Errors unless `0 < rate < 1`.
    pub fn validate_rate(&self) -> Result<()> {
        let r = self.rate();
        if r > 0.0 && r < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidCode(format!(
                "design rate {r} outside (0, 1) for N={} M={}",
                self.n_vars,
                self.n_checks()
            )))
        }
    }

    /// Variables attached to check `c`, ascending.
    pub fn check_vars(&self, c: usize) -> &[usize] {
        &self.edge_var[self.check_ptr[c]..self.check_ptr[c + 1]]
    }

    pub fn check_degree(&self, c: usize) -> usize {
        self.check_ptr[c + 1] - self.check_ptr[c]
    }

    /// Edge-id range of check `c`.
    pub fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    /// Edge ids of variable `v`, in ascending check order.
    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
    }

    /// Checks attached to variable `v`, ascending.
    pub fn var_checks(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_edges(v).iter().map(|&e| self.edge_check[e])
    }

    pub fn var_degree(&self, v: usize) -> usize {
        self.var_ptr[v + 1] - self.var_ptr[v]
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        (0..self.n_vars).map(|v| self.var_degree(v)).collect()
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        (0..self.n_checks()).map(|c| self.check_degree(c)).collect()
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e]
    }

    pub fn edge_check(&self, e: usize) -> usize {
        self.edge_check[e]
    }

    /// True iff every check of `bits` has even parity. `bits` must hold one
    /// entry per variable, nonzero meaning 1.
    pub(crate) fn parity_ok(&self, bits: &[u8]) -> bool {
        (0..self.n_checks()).all(|c| {
            self.check_vars(c)
                .iter()
                .fold(0u8, |acc, &v| acc ^ (bits[v] & 1))
                == 0
        })
    }
}

/// Variable nodes of degree at least two.
///
/// Degree-one nodes dominate low-rate codes and carry no useful
/// reliability trend, so the reliability statistic only sums over these.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveVarSet {
    members: Vec<usize>,
}

impl ActiveVarSet {
    /// Arbitrary member list; duplicates are removed.
    pub fn from_indices(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The variables of `code` with degree ≥ 2.
pub fn active_var_set(code: &ParityCheckMatrix) -> ActiveVarSet {
    ActiveVarSet {
        members: (0..code.n_vars())
            .filter(|&v| code.var_degree(v) >= 2)
            .collect(),
    }
}
