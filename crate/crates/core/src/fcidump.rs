//! FCIDUMP ingestion and frozen-core reduction.
//!
//! Files use 1-based orbital indices; everything in memory is 0-based.
//! Two-electron integrals are stored in chemists' notation `(pq|rs)` with
//! all eight permutational images populated.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{domain, Error, Result};

/// Tolerance within which duplicated integral lines are considered equal.
const DUPLICATE_TOL: f64 = 1e-10;

/// Spatial-orbital integrals of a molecular Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeIntegrals {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    /// Row-major `n_spatial x n_spatial`.
    h1: Vec<f64>,
    /// Row-major `n^4` tensor in chemists' notation.
    h2: Vec<f64>,
    pub e_core: f64,
    pub source_label: String,
}

impl MoleculeIntegrals {
    /// All-zero integrals over `n_spatial` orbitals.
    pub fn zeros(n_spatial: usize, n_electrons: usize) -> Self {
        Self {
            n_spatial,
            n_electrons,
            ms2: 0,
            h1: vec![0.0; n_spatial * n_spatial],
            h2: vec![0.0; n_spatial.pow(4)],
            e_core: 0.0,
            source_label: String::new(),
        }
    }

    #[inline]
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    /// Chemists' notation `(pq|rs)`.
    #[inline]
    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    /// Sets `h1[p][q]` and `h1[q][p]`.
    pub fn set_h1(&mut self, p: usize, q: usize, value: f64) {
        let n = self.n_spatial;
        self.h1[p * n + q] = value;
        self.h1[q * n + p] = value;
    }

    /// Sets `(pq|rs)` together with its seven symmetric images.
    pub fn set_h2(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let n = self.n_spatial;
        for (a, b, c, d) in eightfold(p, q, r, s) {
            self.h2[((a * n + b) * n + c) * n + d] = value;
        }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    /// Largest deviation from `h1` symmetry and from the eight `h2` symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n_spatial;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.h1(p, q) - self.h1(q, p)).abs());
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        for (a, b, c, d) in eightfold(p, q, r, s) {
                            worst = worst.max((self.h2(a, b, c, d) - v).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Checks the documented invariants, returning a list of human readable problems.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let residual = self.symmetry_residual();
        if residual > 1e-12 {
            out.push(format!("integral symmetry residual {residual:e} exceeds 1e-12"));
        }
        if self.n_electrons > 2 * self.n_spatial {
            out.push(format!(
                "{} electrons do not fit in {} spatial orbitals",
                self.n_electrons, self.n_spatial
            ));
        }
        if !self.e_core.is_finite()
            || self.h1.iter().chain(self.h2.iter()).any(|v| !v.is_finite())
        {
            out.push("non-finite integral value".to_string());
        }
        out
    }

    /// Writes the integrals back out in FCIDUMP form (unique entries only).
    pub fn to_fcidump(&self) -> String {
        let n = self.n_spatial;
        let mut out = String::new();
        for line in self.source_label.lines().filter(|l| !l.is_empty()) {
            let _ = writeln!(out, "! {line}");
        }
        let _ = writeln!(
            out,
            " &FCI NORB={},NELEC={},MS2={},",
            n, self.n_electrons, self.ms2
        );
        let _ = writeln!(out, "  ORBSYM={}", "1,".repeat(n));
        let _ = writeln!(out, "  ISYM=1,\n &END");
        for p in 0..n {
            for q in 0..=p {
                let pq = p * (p + 1) / 2 + q;
                for r in 0..n {
                    for s in 0..=r {
                        if r * (r + 1) / 2 + s > pq {
                            continue;
                        }
                        let v = self.h2(p, q, r, s);
                        if v != 0.0 {
                            let _ = writeln!(out, "{v:e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1);
                        }
                    }
                }
            }
        }
        for p in 0..n {
            for q in 0..=p {
                let v = self.h1(p, q);
                if v != 0.0 {
                    let _ = writeln!(out, "{v:e} {} {} 0 0", p + 1, q + 1);
                }
            }
        }
        let _ = writeln!(out, "{:e} 0 0 0 0", self.e_core);
        out
    }
}

/// The eight index permutations of `(pq|rs)` that leave a real
/// chemists'-notation integral invariant.
pub fn eightfold(p: usize, q: usize, r: usize, s: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
}

fn canonical_h2(p: usize, q: usize, r: usize, s: usize) -> (usize, usize, usize, usize) {
    eightfold(p, q, r, s).into_iter().max().unwrap()
}

#[derive(Debug, Default)]
struct Header {
    norb: Option<usize>,
    nelec: Option<usize>,
    ms2: Option<i32>,
}

fn parse_header_body(body: &str, first_line: usize, header: &mut Header) -> Result<()> {
    let mut current_key: Option<String> = None;
    for (offset, line) in body.lines().enumerate() {
        let line_no = first_line + offset;
        for token in line.split(|c: char| c == ',' || c.is_whitespace()) {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            if let Some((key, value)) = token.split_once('=') {
                let key = key.trim().to_ascii_uppercase();
                let value = value.trim();
                let bad = |what: &str| Error::Parse {
                    line: line_no,
                    msg: format!("invalid {what} value `{value}`"),
                };
                match key.as_str() {
                    "NORB" => header.norb = Some(value.parse().map_err(|_| bad("NORB"))?),
                    "NELEC" => header.nelec = Some(value.parse().map_err(|_| bad("NELEC"))?),
                    "MS2" => header.ms2 = Some(value.parse().map_err(|_| bad("MS2"))?),
                    // ORBSYM, ISYM, UHF, ... are accepted and ignored.
                    _ => {}
                }
                current_key = Some(key);
            } else if current_key.as_deref() != Some("ORBSYM") {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unexpected header token `{token}`"),
                });
            }
        }
    }
    Ok(())
}

/// Parses FCIDUMP text into spatial integrals.
///
/// Lines starting with `!` or `#` ahead of the namelist are kept as the
/// provenance label.
pub fn parse_fcidump(text: &str) -> Result<MoleculeIntegrals> {
    let lines: Vec<&str> = text.lines().collect();
    let mut comments = Vec::new();
    let mut idx = 0;
    while idx < lines.len() {
        let t = lines[idx].trim();
        if t.is_empty() {
            idx += 1;
        } else if let Some(c) = t.strip_prefix('!').or_else(|| t.strip_prefix('#')) {
            comments.push(c.trim().to_string());
            idx += 1;
        } else {
            break;
        }
    }
    let start = idx;
    let first = lines.get(start).map(|l| l.trim()).unwrap_or("");
    if !first.to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::Parse {
            line: start + 1,
            msg: "expected `&FCI` namelist header".into(),
        });
    }

    // Collect the namelist up to `&END` or `/`.
    let mut header_text = String::new();
    let mut end = None;
    for (i, raw) in lines.iter().enumerate().skip(start) {
        let mut l = raw.trim().to_string();
        if i == start {
            l = l[4..].to_string();
        }
        let upper = l.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END").or_else(|| upper.find('/')) {
            header_text.push_str(&l[..pos]);
            end = Some(i);
            break;
        }
        header_text.push_str(&l);
        header_text.push('\n');
    }
    let end = end.ok_or(Error::Parse {
        line: lines.len().max(1),
        msg: "unterminated namelist header (missing `&END` or `/`)".into(),
    })?;
    let mut header = Header::default();
    parse_header_body(&header_text, start + 1, &mut header)?;
    let missing = |k: &str| Error::Parse {
        line: start + 1,
        msg: format!("header is missing {k}"),
    };
    let norb = header.norb.ok_or_else(|| missing("NORB"))?;
    let nelec = header.nelec.ok_or_else(|| missing("NELEC"))?;
    let ms2 = header.ms2.ok_or_else(|| missing("MS2"))?;
    if nelec > 2 * norb {
        return Err(Error::Parse {
            line: start + 1,
            msg: format!("NELEC={nelec} exceeds 2*NORB={}", 2 * norb),
        });
    }

    let mut out = MoleculeIntegrals::zeros(norb, nelec);
    out.ms2 = ms2;
    out.source_label = comments.join("\n");

    let mut seen_h1: HashMap<(usize, usize), f64> = HashMap::new();
    let mut seen_h2: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let mut seen_core: Option<f64> = None;

    for (i, raw) in lines.iter().enumerate().skip(end + 1) {
        let line_no = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('!') || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected `value i j k l`, found {} fields", fields.len()),
            });
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid integral value `{}`", fields[0]),
            })?;
        let mut index = [0usize; 4];
        for (slot, f) in index.iter_mut().zip(&fields[1..]) {
            let v: i64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid orbital index `{f}`"),
            })?;
            if v < 0 || v as usize > norb {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("orbital index {v} outside [0, {norb}]"),
                });
            }
            *slot = v as usize;
        }
        let conflict = |old: f64| Error::Parse {
            line: line_no,
            msg: format!("conflicting duplicate entry: {old:e} vs {value:e}"),
        };
        match index {
            [0, 0, 0, 0] => {
                if let Some(old) = seen_core {
                    if (old - value).abs() > DUPLICATE_TOL {
                        return Err(conflict(old));
                    }
                }
                seen_core = Some(value);
                out.e_core = value;
            }
            [p, q, 0, 0] if p > 0 && q > 0 => {
                let (p, q) = (p - 1, q - 1);
                let key = (p.max(q), p.min(q));
                if let Some(&old) = seen_h1.get(&key) {
                    if (old - value).abs() > DUPLICATE_TOL {
                        return Err(conflict(old));
                    }
                }
                seen_h1.insert(key, value);
                out.set_h1(p, q, value);
            }
            // Orbital energies (`eps i 0 0 0`) are not needed.
            [p, 0, 0, 0] if p > 0 => {}
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                let (p, q, r, s) = (p - 1, q - 1, r - 1, s - 1);
                let key = canonical_h2(p, q, r, s);
                if let Some(&old) = seen_h2.get(&key) {
                    if (old - value).abs() > DUPLICATE_TOL {
                        return Err(conflict(old));
                    }
                }
                seen_h2.insert(key, value);
                out.set_h2(p, q, r, s, value);
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unrecognised index pattern {:?}", index),
                })
            }
        }
    }
    Ok(out)
}

/// Integrates out doubly occupied core orbitals.
///
/// Active orbitals keep their relative order. An empty `frozen` list
/// returns an exact copy.
pub fn apply_frozen_core(raw: &MoleculeIntegrals, frozen: &[usize]) -> Result<MoleculeIntegrals> {
    if frozen.is_empty() {
        return Ok(raw.clone());
    }
    let n = raw.n_spatial;
    let mut is_frozen = vec![false; n];
    for &f in frozen {
        if f >= n {
            return domain(format!("frozen orbital {f} outside [0, {n})"));
        }
        if is_frozen[f] {
            return domain(format!("frozen orbital {f} listed twice"));
        }
        is_frozen[f] = true;
    }
    let n_electrons = raw
        .n_electrons
        .checked_sub(2 * frozen.len())
        .ok_or_else(|| {
            Error::Domain(format!(
                "freezing {} orbitals removes more than {} electrons",
                frozen.len(),
                raw.n_electrons
            ))
        })?;
    let active: Vec<usize> = (0..n).filter(|&p| !is_frozen[p]).collect();

    let mut e_core = raw.e_core;
    for &f in frozen {
        e_core += 2.0 * raw.h1(f, f);
        for &g in frozen {
            e_core += 2.0 * raw.h2(f, f, g, g) - raw.h2(f, g, g, f);
        }
    }

    let m = active.len();
    let mut out = MoleculeIntegrals::zeros(m, n_electrons);
    out.ms2 = raw.ms2;
    out.e_core = e_core;
    for (a, &p) in active.iter().enumerate() {
        for (b, &q) in active.iter().enumerate() {
            let mut v = raw.h1(p, q);
            for &f in frozen {
                v += 2.0 * raw.h2(p, q, f, f) - raw.h2(p, f, f, q);
            }
            out.h1[a * m + b] = v;
            for (c, &r) in active.iter().enumerate() {
                for (d, &s) in active.iter().enumerate() {
                    out.h2[((a * m + b) * m + c) * m + d] = raw.h2(p, q, r, s);
                }
            }
        }
    }
    let mut sorted = frozen.to_vec();
    sorted.sort_unstable();
    out.source_label = if raw.source_label.is_empty() {
        format!("frozen core {sorted:?}")
    } else {
        format!("{}\nfrozen core {sorted:?}", raw.source_label)
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n";

    #[test]
    fn core_energy_and_orbital_count() {
        let m = parse_fcidump(&format!("{TINY}0.7137 0 0 0 0\n")).unwrap();
        assert_eq!(m.e_core, 0.7137);
        assert_eq!(m.n_spatial, 2);
        assert_eq!(m.n_electrons, 2);
    }

    #[test]
    fn one_body_symmetry_fill() {
        let m = parse_fcidump(&format!("{TINY}0.5 1 2 0 0\n")).unwrap();
        assert_eq!(m.h1(0, 1), 0.5);
        assert_eq!(m.h1(1, 0), 0.5);
        assert_eq!(m.h1(0, 0), 0.0);
    }

    #[test]
    fn two_body_images_by_brute_force() {
        let m = parse_fcidump(&format!("{TINY}0.25 1 2 1 2\n")).unwrap();
        // Brute force: every index tuple whose pairs are {0,1},{0,1} in either
        // bra/ket order is an image of (01|01).
        let mut images = 0;
        for p in 0..2 {
            for q in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        let is_image = p != q && r != s;
                        let v = m.h2(p, q, r, s);
                        if is_image {
                            images += 1;
                            assert_eq!(v, 0.25, "({p}{q}|{r}{s})");
                        } else {
                            assert_eq!(v, 0.0, "({p}{q}|{r}{s})");
                        }
                    }
                }
            }
        }
        // (01|01) (10|01) (01|10) (10|10): four distinct tuples carry the eight images.
        assert_eq!(images, 4);
    }

    #[test]
    fn header_may_end_with_slash_and_span_lines() {
        let text = "&FCI\n NORB=1,\n NELEC=2, MS2=0\n/\n1.0 1 1 1 1\n";
        let m = parse_fcidump(text).unwrap();
        assert_eq!(m.h2(0, 0, 0, 0), 1.0);
    }

    #[test]
    fn fortran_exponents() {
        let m = parse_fcidump(&format!("{TINY}-1.5D-01 1 1 0 0\n")).unwrap();
        assert_eq!(m.h1(0, 0), -0.15);
    }

    #[test]
    fn missing_header_reports_line() {
        let err = parse_fcidump("! comment\n0.1 0 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_norb_is_an_error() {
        let err = parse_fcidump("&FCI NELEC=2,MS2=0 &END\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn bad_header_value() {
        let err = parse_fcidump("&FCI NORB=x,NELEC=2,MS2=0\n&END\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn unterminated_header() {
        assert!(matches!(
            parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n1.0 1 1 1 1\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn index_out_of_range() {
        let err = parse_fcidump(&format!("{TINY}0.1 3 1 0 0\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let err = parse_fcidump(&format!("{TINY}0.1 -1 1 0 0\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn duplicates_equal_ok_conflicting_rejected() {
        let ok = format!("{TINY}0.25 1 2 1 2\n0.25 2 1 1 2\n");
        assert!(parse_fcidump(&ok).is_ok());
        let bad = format!("{TINY}0.25 1 2 1 2\n0.26 2 1 2 1\n");
        let err = parse_fcidump(&bad).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err}");
        let bad_h1 = format!("{TINY}0.5 1 2 0 0\n0.4 2 1 0 0\n");
        assert!(parse_fcidump(&bad_h1).is_err());
    }

    #[test]
    fn wrong_field_count() {
        let err = parse_fcidump(&format!("{TINY}0.5 1 2 0\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }));
    }

    #[test]
    fn empty_frozen_is_identity() {
        let m = parse_fcidump(&format!("{TINY}0.5 1 2 0 0\n0.3 1 1 2 2\n1.0 0 0 0 0\n")).unwrap();
        let f = apply_frozen_core(&m, &[]).unwrap();
        assert_eq!(f, m);
    }

    #[test]
    fn frozen_core_errors() {
        let m = MoleculeIntegrals::zeros(3, 2);
        assert!(matches!(apply_frozen_core(&m, &[3]), Err(Error::Domain(_))));
        assert!(matches!(apply_frozen_core(&m, &[0, 0]), Err(Error::Domain(_))));
        assert!(matches!(apply_frozen_core(&m, &[0, 1]), Err(Error::Domain(_))));
    }
}
