//! SDPA sparse format (`.dat-s`).
//!
//! SDPA's primal reads `min Σ cᵢyᵢ` s.t. `Σ Fᵢyᵢ − F₀ ⪰ 0`; its dual is
//! `max ⟨F₀, Y⟩` s.t. `⟨Fᵢ, Y⟩ = cᵢ`, `Y ⪰ 0`. Our problem is written as
//! that dual: `Y` stacks the blocks of `x`, `Fᵢ` is the symmetrized
//! constraint row `i`, the vector line holds `b` and `F₀ = −C`. Free
//! variables are split as `u − v` in a leading diagonal block of size
//! `−2·nfree`. Tie rows are implied by the symmetric `Y` and not written.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::sdp::SdpProblem;
use crate::sparse::SparseMat;

/// C's `%.17g`.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

type Entries = BTreeMap<(usize, usize, usize, usize), f64>;

fn scatter(p: &SdpProblem, entries: &mut Entries, matno: usize, pos: usize, alpha: f64, offsets: &[usize]) {
    let nf = p.nfree();
    let first_psd = if nf > 0 { 2 } else { 1 };
    if pos < nf {
        *entries.entry((matno, 1, pos + 1, pos + 1)).or_default() += alpha;
        *entries.entry((matno, 1, nf + pos + 1, nf + pos + 1)).or_default() -= alpha;
        return;
    }
    let b = offsets.partition_point(|&o| o <= pos) - 1;
    let n = p.blocks()[b];
    let local = pos - offsets[b];
    let (col, row) = (local / n, local % n);
    let (r, c) = (row.min(col), row.max(col));
    let v = if r == c { alpha } else { alpha / 2.0 };
    *entries.entry((matno, b + first_psd, r + 1, c + 1)).or_default() += v;
}

/// Writes the problem in SDPA sparse format.
pub fn write_sdpa<W: Write>(p: &SdpProblem, mut out: W) -> Result<()> {
    let offsets = p.block_offsets();
    let mut entries = Entries::new();
    for (pos, &c) in p.c().iter().enumerate() {
        if c != 0.0 {
            scatter(p, &mut entries, 0, pos, -c, &offsets);
        }
    }
    for (i, j, v) in p.a().triplets() {
        if i < p.n_eq() {
            scatter(p, &mut entries, i + 1, j, v, &offsets);
        }
    }

    let mut sizes: Vec<String> = Vec::new();
    if p.nfree() > 0 {
        sizes.push(format!("-{}", 2 * p.nfree()));
    }
    sizes.extend(p.blocks().iter().map(|s| s.to_string()));
    writeln!(out, "{}", p.n_eq())?;
    writeln!(out, "{}", sizes.len())?;
    writeln!(out, "{}", sizes.join(" "))?;
    let b: Vec<String> = p.b()[..p.n_eq()].iter().map(|&v| format_g17(v)).collect();
    writeln!(out, "{}", b.join(" "))?;
    for ((m, blk, i, j), v) in entries {
        if v != 0.0 {
            writeln!(out, "{m} {blk} {i} {j} {}", format_g17(v))?;
        }
    }
    Ok(())
}

impl SdpProblem {
    pub fn to_sdpa_string(&self) -> String {
        let mut buf = Vec::new();
        write_sdpa(self, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    next: usize,
    end: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut offset = 0;
        let mut header = true;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim_start();
            if header && (trimmed.starts_with('"') || trimmed.starts_with('*')) {
                offset += line.len();
                continue;
            }
            header = false;
            let mut start = None;
            for (k, ch) in line.char_indices() {
                let sep = ch.is_whitespace() || matches!(ch, ',' | '{' | '}' | '(' | ')');
                match (sep, start) {
                    (false, None) => start = Some(k),
                    (true, Some(s)) => {
                        items.push((offset + s, &line[s..k]));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                items.push((offset + s, &line[s..]));
            }
            offset += line.len();
        }
        Self { items, next: 0, end: text.len() }
    }

    fn done(&self) -> bool {
        self.next >= self.items.len()
    }

    fn raw(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self
            .items
            .get(self.next)
            .copied()
            .ok_or(Error::Parse { offset: self.end, message: format!("unexpected end of input, expected {what}") })?;
        self.next += 1;
        Ok(t)
    }

    fn int(&mut self, what: &str) -> Result<(usize, i64)> {
        let (off, t) = self.raw(what)?;
        let v = t
            .parse::<i64>()
            .or_else(|_| t.parse::<f64>().ok().filter(|f| f.fract() == 0.0).map(|f| f as i64).ok_or(()))
            .map_err(|_| Error::Parse { offset: off, message: format!("expected {what}, found `{t}`") })?;
        Ok((off, v))
    }

    fn float(&mut self, what: &str) -> Result<f64> {
        let (off, t) = self.raw(what)?;
        t.parse::<f64>().map_err(|_| Error::Parse { offset: off, message: format!("expected {what}, found `{t}`") })
    }
}

enum FileBlock {
    Lp(usize),
    Psd(usize),
}

/// Reads an SDPA sparse file back into a problem.
///
/// A leading diagonal block whose second half mirrors the first with the
/// opposite sign is read as split free variables; any other diagonal block
/// becomes a run of 1×1 PSD blocks.
pub fn read_sdpa(text: &str) -> Result<SdpProblem> {
    let mut tok = Tokens::new(text);
    let (off, m) = tok.int("constraint count")?;
    let m =
        usize::try_from(m).map_err(|_| Error::Parse { offset: off, message: "negative constraint count".into() })?;
    let (off, nb) = tok.int("block count")?;
    let nb = usize::try_from(nb).map_err(|_| Error::Parse { offset: off, message: "negative block count".into() })?;
    let mut file_blocks = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (off, s) = tok.int("block size")?;
        file_blocks.push(match s {
            0 => return Err(Error::Parse { offset: off, message: "zero block size".into() }),
            s if s < 0 => FileBlock::Lp(s.unsigned_abs() as usize),
            s => FileBlock::Psd(s as usize),
        });
    }
    let mut b = Vec::with_capacity(m);
    for _ in 0..m {
        b.push(tok.float("right-hand side value")?);
    }

    // (matno, file block, i, j) -> value, 0-based i <= j
    let mut entries: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    while !tok.done() {
        let (off, matno) = tok.int("matrix number")?;
        let (_, blk) = tok.int("block number")?;
        let (_, i) = tok.int("row index")?;
        let (_, j) = tok.int("column index")?;
        let v = tok.float("entry value")?;
        if matno < 0 || matno as usize > m || blk < 1 || blk as usize > nb {
            return Err(Error::Parse { offset: off, message: format!("entry {matno} {blk} out of range") });
        }
        let side = match file_blocks[blk as usize - 1] {
            FileBlock::Lp(s) | FileBlock::Psd(s) => s,
        };
        if i < 1 || j < 1 || i as usize > side || j as usize > side {
            return Err(Error::Parse { offset: off, message: format!("index ({i},{j}) outside block {blk}") });
        }
        let (i, j) = ((i.min(j) - 1) as usize, (i.max(j) - 1) as usize);
        if matches!(file_blocks[blk as usize - 1], FileBlock::Lp(_)) && i != j {
            return Err(Error::Parse { offset: off, message: "off-diagonal entry in a diagonal block".into() });
        }
        entries.push((matno as usize, blk as usize - 1, i, j, v));
    }

    // free split detection on a leading diagonal block
    let mut nfree = 0;
    if let Some(FileBlock::Lp(s)) = file_blocks.first() {
        if s % 2 == 0 {
            let half = s / 2;
            let mut vals: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for &(mn, blk, i, _, v) in &entries {
                if blk == 0 {
                    *vals.entry((mn, i)).or_default() += v;
                }
            }
            let mirrored = vals.iter().all(|(&(mn, i), &v)| {
                let partner = if i < half { i + half } else { i - half };
                vals.get(&(mn, partner)).is_some_and(|&w| w == -v)
            });
            if mirrored {
                nfree = half;
            }
        }
    }

    // map file positions to positions in x
    let mut sizes = Vec::new();
    // our block index for every diagonal entry of a file LP block, or the
    // single block of a file PSD block
    let mut locate: Vec<Vec<usize>> = Vec::with_capacity(nb);
    for (k, fb) in file_blocks.iter().enumerate() {
        match *fb {
            FileBlock::Lp(_) if k == 0 && nfree > 0 => locate.push(Vec::new()),
            FileBlock::Lp(s) => {
                locate.push((0..s).map(|d| sizes.len() + d).collect());
                sizes.extend(std::iter::repeat_n(1, s));
            }
            FileBlock::Psd(s) => {
                locate.push(vec![sizes.len()]);
                sizes.push(s);
            }
        }
    }
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut off = nfree;
    for &s in &sizes {
        offsets.push(off);
        off += s * s;
    }
    let nvec = off;

    let mut c = vec![0.0; nvec];
    let mut trip = Vec::with_capacity(entries.len());
    for (mn, blk, i, j, v) in entries {
        let (pos, coef) = match file_blocks[blk] {
            FileBlock::Lp(_) if blk == 0 && nfree > 0 => {
                if i >= nfree {
                    continue;
                }
                (i, v)
            }
            FileBlock::Lp(_) => (offsets[locate[blk][i]], v),
            FileBlock::Psd(n) => {
                let ob = locate[blk][0];
                if i == j {
                    (offsets[ob] + i * n + i, v)
                } else {
                    (offsets[ob] + j * n + i, 2.0 * v)
                }
            }
        };
        if mn == 0 {
            c[pos] -= coef;
        } else {
            trip.push(((mn - 1, pos), coef));
        }
    }
    let a = SparseMat::assemble(m, nvec, trip);
    SdpProblem::new(nfree, sizes, a, b, c)
}
