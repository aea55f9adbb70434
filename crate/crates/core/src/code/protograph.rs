//! Quasi-cyclic lifting of a protograph base matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ParityCheckMatrix;
use crate::{Error, Result};

/// Redraws allowed per base entry before a lifting attempt is abandoned.
pub const MAX_SHIFT_REDRAWS: usize = 64;

/// Lifts `base` by a factor `z` with circulant permutation blocks.
///
/// Row `r` of `base` becomes checks `r*z..(r+1)*z` and column `c` becomes
/// variables `c*z..(c+1)*z`. An entry of multiplicity `m` is replaced by the
/// sum of `m` circulants `I(s)` with pairwise distinct shifts `s` drawn from
/// a generator seeded with `seed`. Equal shifts would create parallel
/// edges, so a colliding shift is redrawn; after [`MAX_SHIFT_REDRAWS`]
/// collisions in one entry the lifting fails, which means `z` is too small
/// for that multiplicity.
pub fn lift_protograph(base: &[Vec<u32>], z: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if z == 0 {
        return Err(Error::Lifting("lifting factor must be at least 1".into()));
    }
    let n_cols = base.first().map_or(0, Vec::len);
    if base.is_empty() || n_cols == 0 {
        return Err(Error::Lifting("base matrix is empty".into()));
    }
    if base.iter().any(|row| row.len() != n_cols) {
        return Err(Error::Lifting("base matrix rows have unequal length".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); base.len() * z];

    for (r, row) in base.iter().enumerate() {
        for (c, &mult) in row.iter().enumerate() {
            let mut shifts: Vec<usize> = Vec::with_capacity(mult as usize);
            let mut redraws = 0;
            while shifts.len() < mult as usize {
                let s = rng.random_range(0..z);
                if shifts.contains(&s) {
                    redraws += 1;
                    if redraws > MAX_SHIFT_REDRAWS {
                        return Err(Error::Lifting(format!(
                            "base entry ({r}, {c}) with multiplicity {mult} cannot avoid \
                             parallel edges at lifting factor {z}"
                        )));
                    }
                    continue;
                }
                shifts.push(s);
            }
            for s in shifts {
                for i in 0..z {
                    checks[r * z + i].push(c * z + (i + s) % z);
                }
            }
        }
    }

    ParityCheckMatrix::from_check_lists(n_cols * z, &checks)
}

/// Parses a base matrix written as rows separated by `;` or newlines, with
/// entries separated by whitespace or commas, e.g. `"3 3"` or `"1,2;2,1"`.
pub fn parse_base_matrix(text: &str) -> Result<Vec<Vec<u32>>> {
    let rows: Vec<Vec<u32>> = text
        .split([';', '\n'])
        .filter(|r| !r.trim().is_empty())
        .map(|r| {
            r.split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<u32>().map_err(|_| {
                        Error::Config(format!("base matrix entry `{t}` is not a multiplicity"))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::Config("base matrix is empty".into()));
    }
    Ok(rows)
}
