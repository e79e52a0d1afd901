//! SDPA sparse format (`.dat-s`).
//!
//! SDPA solves `min c^T x` subject to `sum_i x_i F_i - F_0` PSD, so an affine
//! block `A_0 + sum_i y_i A_i` is written with `F_0 = -A_0` and `F_i = A_i`.
//! Linear equalities `a^T y = e` become a trailing diagonal block holding the
//! pair `a^T y - e >= 0`, `e - a^T y >= 0`; a comment line marks that block so
//! the importer can restore the equalities exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{ConicProgram, LinearEquality, PsdBlock, SparseSym};
use crate::error::{Error, Result};

const EQ_MARKER: &str = "equality pairs in block";

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Render a program in SDPA sparse format.
pub fn export_sdpa(p: &ConicProgram) -> String {
    let mut out = String::new();
    let neq = p.equalities.len();
    let nblocks = p.blocks.len() + usize::from(neq > 0);
    if neq > 0 {
        let _ = writeln!(out, "\"{EQ_MARKER} {nblocks}");
    }
    let _ = writeln!(out, "{}", p.num_vars);
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = p.blocks.iter().map(|b| b.size.to_string()).collect();
    if neq > 0 {
        sizes.push(format!("-{}", 2 * neq));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = p.objective.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    // (matno, blkno, i, j, value), 1-based
    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (b, blk) in p.blocks.iter().enumerate() {
        let mut c0 = blk.constant.clone();
        c0.compress();
        for e in &c0.entries {
            lines.push((0, b + 1, e.row + 1, e.col + 1, -e.value));
        }
        for (i, a) in &blk.coefficients {
            let mut a = a.clone();
            a.compress();
            for e in &a.entries {
                lines.push((i + 1, b + 1, e.row + 1, e.col + 1, e.value));
            }
        }
    }
    if neq > 0 {
        for (k, eq) in p.equalities.iter().enumerate() {
            let (r1, r2) = (2 * k + 1, 2 * k + 2);
            if eq.rhs != 0.0 {
                lines.push((0, nblocks, r1, r1, eq.rhs));
                lines.push((0, nblocks, r2, r2, -eq.rhs));
            }
            let mut merged: std::collections::BTreeMap<usize, f64> = Default::default();
            for &(i, a) in &eq.coefficients {
                *merged.entry(i).or_insert(0.0) += a;
            }
            for (i, a) in merged {
                if a != 0.0 {
                    lines.push((i + 1, nblocks, r1, r1, a));
                    lines.push((i + 1, nblocks, r2, r2, -a));
                }
            }
        }
    }
    lines.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (m, b, i, j, v) in lines {
        let _ = writeln!(out, "{m} {b} {i} {j} {}", num(v));
    }
    out
}

pub fn write_sdpa(p: &ConicProgram, path: &Path) -> Result<()> {
    std::fs::write(path, export_sdpa(p))?;
    Ok(())
}

pub fn read_sdpa(path: &Path) -> Result<ConicProgram> {
    import_sdpa(&std::fs::read_to_string(path)?)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column: 1, message: message.into() }
}

/// Parse SDPA sparse format. Diagonal blocks are split into 1x1 blocks,
/// except a block marked as equality pairs, which is turned back into
/// linear equalities.
pub fn import_sdpa(src: &str) -> Result<ConicProgram> {
    let mut eq_block: Option<usize> = None;
    let mut toks: Vec<(usize, Vec<String>)> = Vec::new();
    for (ln, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('"').or_else(|| line.strip_prefix('*')) {
            if let Some(rest) = c.trim().strip_prefix(EQ_MARKER) {
                eq_block = rest.trim().parse().ok();
            }
            continue;
        }
        let cleaned: String = line.chars().map(|ch| if "{}(),".contains(ch) { ' ' } else { ch }).collect();
        toks.push((ln + 1, cleaned.split_whitespace().map(str::to_string).collect()));
    }
    // header values may share lines, so walk a flat token stream for them
    let mut flat: Vec<(usize, String)> = Vec::new();
    let mut header_lines = 0;
    let mut needed: Option<usize> = None;
    for (ln, ts) in &toks {
        flat.extend(ts.iter().map(|t| (*ln, t.clone())));
        header_lines += 1;
        if needed.is_none() && flat.len() >= 2 {
            let m: usize = flat[0].1.parse().map_err(|_| perr(flat[0].0, "expected number of variables"))?;
            let nb: usize = flat[1].1.parse().map_err(|_| perr(flat[1].0, "expected number of blocks"))?;
            needed = Some(2 + nb + m);
        }
        if let Some(n) = needed {
            if flat.len() >= n {
                break;
            }
        }
    }
    let Some(needed) = needed else {
        return Err(perr(1, "missing header"));
    };
    if flat.len() < needed {
        return Err(perr(toks.last().map_or(1, |t| t.0), "truncated header"));
    }
    let m: usize = flat[0].1.parse().unwrap();
    let nb: usize = flat[1].1.parse().unwrap();
    let mut sizes = Vec::with_capacity(nb);
    for (ln, t) in &flat[2..2 + nb] {
        sizes.push(t.parse::<i64>().map_err(|_| perr(*ln, format!("bad block size `{t}`")))?);
    }
    let mut c = Vec::with_capacity(m);
    for (ln, t) in &flat[2 + nb..needed] {
        c.push(t.parse::<f64>().map_err(|_| perr(*ln, format!("bad objective entry `{t}`")))?);
    }
    if flat.len() > needed {
        return Err(perr(flat[needed].0, "unexpected tokens after the objective"));
    }

    // blocks of the program, and where SDPA block k lands
    enum Dest {
        Dense(usize),
        Diag(usize),
        Eq,
    }
    let mut prog = ConicProgram::new(m);
    prog.objective = c;
    let mut dest = Vec::with_capacity(nb);
    let mut eq_rows: Vec<(std::collections::BTreeMap<usize, f64>, f64)> = Vec::new();
    for (k, &s) in sizes.iter().enumerate() {
        if s == 0 {
            return Err(perr(1, format!("block {} has size 0", k + 1)));
        }
        if eq_block == Some(k + 1) {
            if s > 0 || (-s) % 2 != 0 {
                return Err(perr(1, "equality block must be diagonal with even size"));
            }
            eq_rows = vec![(Default::default(), 0.0); (-s) as usize / 2];
            dest.push(Dest::Eq);
        } else if s > 0 {
            dest.push(Dest::Dense(prog.blocks.len()));
            prog.blocks.push(PsdBlock::new(s as usize));
        } else {
            dest.push(Dest::Diag(prog.blocks.len()));
            for _ in 0..(-s) {
                prog.blocks.push(PsdBlock::new(1));
            }
        }
    }
    let mut coef: Vec<std::collections::BTreeMap<usize, SparseSym>> = vec![Default::default(); prog.blocks.len()];
    for (ln, ts) in toks.iter().skip(header_lines) {
        if ts.len() != 5 {
            return Err(perr(*ln, "expected `matno blkno i j value`"));
        }
        let mat: usize = ts[0].parse().map_err(|_| perr(*ln, "bad matrix number"))?;
        let blk: usize = ts[1].parse().map_err(|_| perr(*ln, "bad block number"))?;
        let i: usize = ts[2].parse().map_err(|_| perr(*ln, "bad row"))?;
        let j: usize = ts[3].parse().map_err(|_| perr(*ln, "bad column"))?;
        let v: f64 = ts[4].parse().map_err(|_| perr(*ln, "bad value"))?;
        if mat > m || blk == 0 || blk > nb || i == 0 || j == 0 {
            return Err(perr(*ln, "index out of range"));
        }
        let size = sizes[blk - 1].unsigned_abs() as usize;
        if i > size || j > size {
            return Err(perr(*ln, "entry outside its block"));
        }
        // F_0 enters with a minus sign in the affine form
        let val = if mat == 0 { -v } else { v };
        match dest[blk - 1] {
            Dest::Dense(b) => {
                let target = if mat == 0 { &mut prog.blocks[b].constant } else { coef[b].entry(mat - 1).or_default() };
                target.push(i - 1, j - 1, val);
            }
            Dest::Diag(b0) => {
                if i != j {
                    return Err(perr(*ln, "off-diagonal entry in a diagonal block"));
                }
                let b = b0 + i - 1;
                let target = if mat == 0 { &mut prog.blocks[b].constant } else { coef[b].entry(mat - 1).or_default() };
                target.push(0, 0, val);
            }
            Dest::Eq => {
                if i != j {
                    return Err(perr(*ln, "off-diagonal entry in the equality block"));
                }
                // only the first row of each pair carries the equality
                if i % 2 == 1 {
                    let row = &mut eq_rows[(i - 1) / 2];
                    if mat == 0 {
                        row.1 -= val;
                    } else {
                        *row.0.entry(mat - 1).or_insert(0.0) += val;
                    }
                }
            }
        }
    }
    for (b, map) in coef.into_iter().enumerate() {
        prog.blocks[b].constant.compress();
        prog.blocks[b].coefficients = map
            .into_iter()
            .map(|(i, mut a)| {
                a.compress();
                (i, a)
            })
            .filter(|(_, a)| !a.is_empty())
            .collect();
    }
    prog.equalities = eq_rows
        .into_iter()
        .map(|(a, rhs)| LinearEquality { coefficients: a.into_iter().collect(), rhs })
        .collect();
    prog.validate()?;
    Ok(prog)
}
