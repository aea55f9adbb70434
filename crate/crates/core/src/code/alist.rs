//! MacKay's alist format.
//!
//! ```text
//! N M
//! max_col_degree max_row_degree
//! col_degree[0] ... col_degree[N-1]
//! row_degree[0] ... row_degree[M-1]
//! N lines: 1-based check indices of each variable
//! M lines: 1-based variable indices of each check
//! ```
//!
//! Zero entries are padding and are skipped on read. They are written only
//! as a lone `0` for an empty list, since blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ParityCheckMatrix;
use crate::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line as parsed integers, with its 1-based number.
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Alist {
                        line: i + 1,
                        msg: format!("`{tok}` is not a nonnegative integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((i + 1, nums));
        }
        Err(Error::Alist {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn expect_len(line: usize, nums: &[usize], len: usize, what: &str) -> Result<()> {
    if nums.len() != len {
        return Err(Error::Alist {
            line,
            msg: format!("{what}: expected {len} entries, found {}", nums.len()),
        });
    }
    Ok(())
}

/// Reads one adjacency line: drops zero padding, converts to 0-based and
/// checks range, duplicates and the declared degree.
fn adjacency(
    line: usize,
    nums: &[usize],
    degree: usize,
    bound: usize,
    what: &str,
) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::with_capacity(degree);
    for &x in nums.iter().filter(|&&x| x != 0) {
        if x > bound {
            return Err(Error::Alist {
                line,
                msg: format!("{what} index {x} out of range 1..={bound}"),
            });
        }
        if out.contains(&(x - 1)) {
            return Err(Error::Alist {
                line,
                msg: format!("duplicate {what} index {x}"),
            });
        }
        out.push(x - 1);
    }
    if out.len() != degree {
        return Err(Error::Alist {
            line,
            msg: format!(
                "degree list says {degree} entries, adjacency line has {}",
                out.len()
            ),
        });
    }
    Ok(out)
}

/// Parses alist text into a [`ParityCheckMatrix`].
pub fn read_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut lines = Lines::new(text);

    let (l, head) = lines.next_numbers("header `N M`")?;
    expect_len(l, &head, 2, "header")?;
    let (n, m) = (head[0], head[1]);
    if n == 0 {
        return Err(Error::Alist {
            line: l,
            msg: "N must be positive".into(),
        });
    }

    let (l, maxes) = lines.next_numbers("maximum degrees")?;
    expect_len(l, &maxes, 2, "maximum degrees")?;
    let (max_col, max_row) = (maxes[0], maxes[1]);

    let (l, col_deg) = lines.next_numbers("column degrees")?;
    expect_len(l, &col_deg, n, "column degrees")?;
    if let Some(&d) = col_deg.iter().find(|&&d| d > max_col) {
        return Err(Error::Alist {
            line: l,
            msg: format!("column degree {d} exceeds declared maximum {max_col}"),
        });
    }

    let (l, row_deg) = lines.next_numbers("row degrees")?;
    expect_len(l, &row_deg, m, "row degrees")?;
    if let Some(&d) = row_deg.iter().find(|&&d| d > max_row) {
        return Err(Error::Alist {
            line: l,
            msg: format!("row degree {d} exceeds declared maximum {max_row}"),
        });
    }

    let mut col_lists = Vec::with_capacity(n);
    for &degree in &col_deg {
        let (l, nums) = lines.next_numbers("column adjacency line")?;
        col_lists.push(adjacency(l, &nums, degree, m, "check")?);
    }

    let mut row_lists = Vec::with_capacity(m);
    for (c, &degree) in row_deg.iter().enumerate() {
        let (l, nums) = lines.next_numbers("row adjacency line")?;
        let vars = adjacency(l, &nums, degree, n, "variable")?;
        for &v in &vars {
            if !col_lists[v].contains(&c) {
                return Err(Error::Alist {
                    line: l,
                    msg: format!(
                        "row {} lists variable {} but that column does not list the row",
                        c + 1,
                        v + 1
                    ),
                });
            }
        }
        row_lists.push(vars);
    }

    // Each row edge was found in the columns and both sides have the same
    // total, so the two edge sets are equal.
    let col_edges: usize = col_deg.iter().sum();
    let row_edges: usize = row_deg.iter().sum();
    if col_edges != row_edges {
        return Err(Error::Alist {
            line: lines.last,
            msg: format!("column degrees sum to {col_edges}, row degrees to {row_edges}"),
        });
    }

    ParityCheckMatrix::from_check_lists(n, &row_lists)
}

/// Renders a matrix as alist text, without zero padding.
///
/// Degree lists are never empty in practice; a zero-degree node's
/// adjacency line is written as `0`.
pub fn write_alist(code: &ParityCheckMatrix) -> String {
    let col_deg = code.var_degrees();
    let row_deg = code.check_degrees();
    let join = |it: &mut dyn Iterator<Item = usize>| {
        let s = it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    };

    let mut s = String::new();
    let _ = writeln!(s, "{} {}", code.n_vars(), code.n_checks());
    let _ = writeln!(
        s,
        "{} {}",
        col_deg.iter().max().copied().unwrap_or(0),
        row_deg.iter().max().copied().unwrap_or(0)
    );
    let _ = writeln!(s, "{}", join(&mut col_deg.iter().copied()));
    let _ = writeln!(s, "{}", join(&mut row_deg.iter().copied()));
    for v in 0..code.n_vars() {
        let _ = writeln!(s, "{}", join(&mut code.var_checks(v).map(|c| c + 1)));
    }
    for c in 0..code.n_checks() {
        let _ = writeln!(s, "{}", join(&mut code.check_vars(c).iter().map(|v| v + 1)));
    }
    s
}

pub fn load_alist(path: impl AsRef<Path>) -> Result<ParityCheckMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_alist(&text)
}

pub fn save_alist(code: &ParityCheckMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_alist(code)).map_err(|e| Error::io(path, e))
}
