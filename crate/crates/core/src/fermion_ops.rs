//! Cluster operators (τ), scatterers (σ) and their anti-hermitian generators.
//!
//! Spin orbitals are interleaved on the register: qubit `2p` is the alpha
//! spin orbital of spatial orbital `p`, qubit `2p + 1` the beta one. In the
//! Hartree–Fock reference the `n_electrons` lowest qubits are occupied.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    #[serde(rename = "a")]
    Alpha,
    #[serde(rename = "b")]
    Beta,
}

impl Spin {
    pub fn flip(self) -> Self {
        match self {
            Spin::Alpha => Spin::Beta,
            Spin::Beta => Spin::Alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinOrbital {
    pub spatial: usize,
    pub spin: Spin,
}

impl SpinOrbital {
    pub fn new(spatial: usize, spin: Spin) -> Self {
        Self { spatial, spin }
    }

    pub fn alpha(spatial: usize) -> Self {
        Self::new(spatial, Spin::Alpha)
    }

    pub fn beta(spatial: usize) -> Self {
        Self::new(spatial, Spin::Beta)
    }

    #[inline]
    pub fn qubit(self) -> usize {
        2 * self.spatial + usize::from(self.spin == Spin::Beta)
    }

    pub fn from_qubit(q: usize) -> Self {
        let spin = if q % 2 == 0 { Spin::Alpha } else { Spin::Beta };
        Self::new(q / 2, spin)
    }
}

// Spin orbitals order by qubit index.
impl Ord for SpinOrbital {
    fn cmp(&self, other: &Self) -> Ordering {
        self.qubit().cmp(&other.qubit())
    }
}

impl PartialOrd for SpinOrbital {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SpinOrbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.spin {
            Spin::Alpha => 'a',
            Spin::Beta => 'b',
        };
        write!(f, "{}{}", self.spatial, s)
    }
}

fn mask(orbitals: &[SpinOrbital]) -> u64 {
    orbitals.iter().fold(0, |m, o| m | (1u64 << o.qubit()))
}

fn qubits(orbitals: &[SpinOrbital]) -> Vec<usize> {
    orbitals.iter().map(|o| o.qubit()).collect()
}

/// Bitmask of the Hartree–Fock determinant.
pub fn hf_occupation(n_electrons: usize) -> u64 {
    if n_electrons == 0 {
        0
    } else {
        u64::MAX >> (64 - n_electrons)
    }
}

/// Number of HF-occupied spin orbitals that are empty in `det`, i.e. the
/// hole–particle excitation rank of `det` relative to the reference.
pub fn excitation_rank(det: u64, n_electrons: usize) -> u32 {
    (hf_occupation(n_electrons) & !det).count_ones()
}

/// A cluster operator label: holes → particles, both sorted by qubit index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Excitation {
    pub holes: Vec<SpinOrbital>,
    pub particles: Vec<SpinOrbital>,
}

impl Excitation {
    pub fn new(mut holes: Vec<SpinOrbital>, mut particles: Vec<SpinOrbital>) -> Self {
        holes.sort();
        particles.sort();
        Self { holes, particles }
    }

    pub fn rank(&self) -> usize {
        self.holes.len()
    }

    /// Lexical key on `(holes, particles)` qubit tuples.
    pub fn key(&self) -> (Vec<usize>, Vec<usize>) {
        (qubits(&self.holes), qubits(&self.particles))
    }

    /// Checks the reference-relative invariants of a cluster operator.
    pub fn validate(&self, n_spatial: usize, n_electrons: usize) -> Result<()> {
        let n_qubits = 2 * n_spatial;
        if self.holes.len() != self.particles.len() || self.holes.is_empty() {
            return domain(format!("{self}: hole and particle counts must match"));
        }
        let spins = |v: &[SpinOrbital]| {
            let mut s: Vec<Spin> = v.iter().map(|o| o.spin).collect();
            s.sort();
            s
        };
        if spins(&self.holes) != spins(&self.particles) {
            return domain(format!("{self}: does not conserve Sz"));
        }
        for w in self.holes.windows(2).chain(self.particles.windows(2)) {
            if w[0] == w[1] {
                return domain(format!("{self}: repeated spin orbital"));
            }
        }
        if self.holes.iter().any(|h| h.qubit() >= n_electrons) {
            return domain(format!("{self}: hole not occupied in the reference"));
        }
        if self
            .particles
            .iter()
            .any(|p| p.qubit() < n_electrons || p.qubit() >= n_qubits)
        {
            return domain(format!("{self}: particle not virtual in the reference"));
        }
        Ok(())
    }
}

impl Ord for Excitation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Excitation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[SpinOrbital]| {
            v.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")
        };
        write!(f, "tau[{}->{}]", join(&self.holes), join(&self.particles))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScattererKind {
    /// `a† m† j i`: refills the quasi-hole `m`.
    #[serde(rename = "hole")]
    Hole,
    /// `a† b† e i`: removes the quasi-particle `e`.
    #[serde(rename = "particle")]
    Particle,
}

/// Restriction applied to the scatterer bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    /// Opposite spins on the excitation and scattering vertices.
    #[serde(rename = "OP")]
    OppositeSpin,
    /// Paired holes (hole type) or paired particles (particle type).
    #[serde(rename = "PP")]
    PartiallyPaired,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::OppositeSpin => "OP",
            Sector::PartiallyPaired => "PP",
        })
    }
}

impl std::str::FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OP" => Ok(Sector::OppositeSpin),
            "PP" => Ok(Sector::PartiallyPaired),
            other => domain(format!("unknown scatterer sector `{other}`")),
        }
    }
}

/// A two-body operator of effective excitation rank one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scatterer {
    pub kind: ScattererKind,
    /// The contractible orbital (`m` for hole type, `e` for particle type).
    pub cso_orbital: SpinOrbital,
    /// Sorted by qubit index.
    pub create: Vec<SpinOrbital>,
    /// Sorted by qubit index.
    pub destroy: Vec<SpinOrbital>,
    pub sector: Sector,
}

impl Scatterer {
    pub fn key(&self) -> (ScattererKind, usize, Vec<usize>, Vec<usize>, Sector) {
        (
            self.kind,
            self.cso_orbital.qubit(),
            qubits(&self.destroy),
            qubits(&self.create),
            self.sector,
        )
    }
}

impl Ord for Scatterer {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Scatterer {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Scatterer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[SpinOrbital]| {
            v.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")
        };
        let kind = match self.kind {
            ScattererKind::Hole => "h",
            ScattererKind::Particle => "p",
        };
        write!(
            f,
            "sigma_{kind}^{}[{}->{}]{}",
            self.cso_orbital,
            join(&self.destroy),
            join(&self.create),
            self.sector
        )
    }
}

/// Contractible set of orbitals, as spatial indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CsoSpec {
    /// Hole-space orbitals (`u`).
    pub holes: Vec<usize>,
    /// Particle-space orbitals (`v`).
    pub particles: Vec<usize>,
}

impl CsoSpec {
    /// The frontier choice: highest occupied and lowest virtual spatial orbital.
    pub fn frontier(n_spatial: usize, n_electrons: usize) -> Self {
        let n_occ = n_electrons / 2;
        Self {
            holes: if n_occ > 0 { vec![n_occ - 1] } else { vec![] },
            particles: if n_occ < n_spatial { vec![n_occ] } else { vec![] },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty() && self.particles.is_empty()
    }
}

fn closed_shell(n_spatial: usize, n_electrons: usize) -> Result<usize> {
    if n_electrons % 2 != 0 {
        return domain(format!("{n_electrons} electrons: open-shell references are unsupported"));
    }
    if n_electrons > 2 * n_spatial {
        return domain(format!(
            "{n_electrons} electrons do not fit in {n_spatial} spatial orbitals"
        ));
    }
    if 2 * n_spatial > 64 {
        return domain("more than 64 spin orbitals");
    }
    Ok(n_electrons / 2)
}

/// All Sz-conserving single excitations, lexically ordered.
pub fn enumerate_singles(n_spatial: usize, n_electrons: usize) -> Result<Vec<Excitation>> {
    closed_shell(n_spatial, n_electrons)?;
    let n_qubits = 2 * n_spatial;
    let mut out = Vec::new();
    for h in 0..n_electrons {
        for p in n_electrons..n_qubits {
            if h % 2 == p % 2 {
                out.push(Excitation::new(
                    vec![SpinOrbital::from_qubit(h)],
                    vec![SpinOrbital::from_qubit(p)],
                ));
            }
        }
    }
    Ok(out)
}

/// All Sz-conserving double excitations, lexically ordered. Spin
/// complements are kept as distinct operators.
pub fn enumerate_doubles(n_spatial: usize, n_electrons: usize) -> Result<Vec<Excitation>> {
    closed_shell(n_spatial, n_electrons)?;
    let n_qubits = 2 * n_spatial;
    let mut out = Vec::new();
    for h1 in 0..n_electrons {
        for h2 in h1 + 1..n_electrons {
            let hole_beta = h1 % 2 + h2 % 2;
            for p1 in n_electrons..n_qubits {
                for p2 in p1 + 1..n_qubits {
                    if p1 % 2 + p2 % 2 == hole_beta {
                        out.push(Excitation::new(
                            vec![SpinOrbital::from_qubit(h1), SpinOrbital::from_qubit(h2)],
                            vec![SpinOrbital::from_qubit(p1), SpinOrbital::from_qubit(p2)],
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The scatterer bath restricted to `sector`, with contractible orbitals
/// drawn from `cso`. Sorted by [`Scatterer::key`].
pub fn enumerate_scatterers(
    n_spatial: usize,
    n_electrons: usize,
    cso: &CsoSpec,
    sector: Sector,
) -> Result<Vec<Scatterer>> {
    let n_occ = closed_shell(n_spatial, n_electrons)?;
    for &u in &cso.holes {
        if u >= n_occ {
            return domain(format!("CSO hole orbital {u} is not occupied (n_occ = {n_occ})"));
        }
    }
    for &v in &cso.particles {
        if v < n_occ || v >= n_spatial {
            return domain(format!(
                "CSO particle orbital {v} is not virtual (virtuals {n_occ}..{n_spatial})"
            ));
        }
    }
    let occ = 0..n_occ;
    let virt = n_occ..n_spatial;
    let mut out = Vec::new();
    let mut push = |kind, cso_orbital, destroy: Vec<SpinOrbital>, create: Vec<SpinOrbital>| {
        let mut destroy = destroy;
        let mut create = create;
        destroy.sort();
        create.sort();
        out.push(Scatterer {
            kind,
            cso_orbital,
            create,
            destroy,
            sector,
        });
    };

    for &(x, y) in &[(Spin::Alpha, Spin::Beta), (Spin::Beta, Spin::Alpha)] {
        // Hole type: destroy i_x j_y, create a_x u_y.
        for &u in &cso.holes {
            let m = SpinOrbital::new(u, y);
            for i in occ.clone() {
                let js: Vec<usize> = match sector {
                    Sector::OppositeSpin => occ.clone().filter(|&j| j != u).collect(),
                    Sector::PartiallyPaired if i != u => vec![i],
                    Sector::PartiallyPaired => vec![],
                };
                for j in js {
                    for a in virt.clone() {
                        push(
                            ScattererKind::Hole,
                            m,
                            vec![SpinOrbital::new(i, x), SpinOrbital::new(j, y)],
                            vec![SpinOrbital::new(a, x), m],
                        );
                    }
                }
            }
        }
        // Particle type: destroy i_x v_y, create a_x b_y.
        for &v in &cso.particles {
            let e = SpinOrbital::new(v, y);
            for i in occ.clone() {
                for a in virt.clone() {
                    let bs: Vec<usize> = match sector {
                        Sector::OppositeSpin => virt.clone().filter(|&b| b != v).collect(),
                        Sector::PartiallyPaired if a != v => vec![a],
                        Sector::PartiallyPaired => vec![],
                    };
                    for b in bs {
                        push(
                            ScattererKind::Particle,
                            e,
                            vec![SpinOrbital::new(i, x), e],
                            vec![SpinOrbital::new(a, x), SpinOrbital::new(b, y)],
                        );
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ladder {
    Create,
    Destroy,
}

/// A signed product of ladder operators, leftmost factor acting last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionTerm {
    pub coeff: f64,
    pub ops: Vec<(SpinOrbital, Ladder)>,
}

impl FermionTerm {
    /// Normal-ordered string: creations on `create` then annihilations on
    /// `destroy`, each half in descending qubit order.
    fn normal_ordered(coeff: f64, create: &[SpinOrbital], destroy: &[SpinOrbital]) -> Self {
        let mut c = create.to_vec();
        let mut d = destroy.to_vec();
        c.sort_by(|a, b| b.cmp(a));
        d.sort_by(|a, b| b.cmp(a));
        let ops = c
            .into_iter()
            .map(|o| (o, Ladder::Create))
            .chain(d.into_iter().map(|o| (o, Ladder::Destroy)))
            .collect();
        Self { coeff, ops }
    }

    /// Action on an occupation-number basis state (bit `q` = occupancy of
    /// qubit `q`), with the sign of moving each ladder operator past the
    /// lower-indexed occupied orbitals.
    pub fn act(&self, det: u64) -> Option<(u64, f64)> {
        let mut state = det;
        let mut sign = self.coeff;
        for &(orb, kind) in self.ops.iter().rev() {
            let q = orb.qubit();
            let bit = 1u64 << q;
            let occupied = state & bit != 0;
            match kind {
                Ladder::Create if occupied => return None,
                Ladder::Destroy if !occupied => return None,
                _ => {}
            }
            if (state & (bit - 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            state ^= bit;
        }
        Some((state, sign))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSource {
    Excitation(Excitation),
    Scatterer(Scatterer),
}

/// `X − X†` for a cluster operator or scatterer, with unit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionGenerator {
    pub terms: Vec<FermionTerm>,
    pub source: GeneratorSource,
}

impl FermionGenerator {
    pub fn max_qubit(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.ops.iter().map(|(o, _)| o.qubit()))
            .max()
            .unwrap_or(0)
    }

    /// Action on a basis state as a list of `(target, amplitude)`.
    pub fn act(&self, det: u64) -> Vec<(u64, f64)> {
        self.terms.iter().filter_map(|t| t.act(det)).collect()
    }
}

/// Anything a generator can be built from.
pub trait GeneratorLabel {
    fn create_destroy(&self) -> (&[SpinOrbital], &[SpinOrbital]);
    fn source(&self) -> GeneratorSource;
}

impl GeneratorLabel for Excitation {
    fn create_destroy(&self) -> (&[SpinOrbital], &[SpinOrbital]) {
        (&self.particles, &self.holes)
    }

    fn source(&self) -> GeneratorSource {
        GeneratorSource::Excitation(self.clone())
    }
}

impl GeneratorLabel for Scatterer {
    fn create_destroy(&self) -> (&[SpinOrbital], &[SpinOrbital]) {
        (&self.create, &self.destroy)
    }

    fn source(&self) -> GeneratorSource {
        GeneratorSource::Scatterer(self.clone())
    }
}

/// Builds `X − X†` in normal-ordered canonical form.
///
/// For equal numbers of creations and annihilations the adjoint string,
/// once each half is re-sorted descending, keeps coefficient `+1`, so the
/// generator is `+X − X†` term by term.
pub fn build_generator<L: GeneratorLabel>(label: &L) -> FermionGenerator {
    let (create, destroy) = label.create_destroy();
    FermionGenerator {
        terms: vec![
            FermionTerm::normal_ordered(1.0, create, destroy),
            FermionTerm::normal_ordered(-1.0, destroy, create),
        ],
        source: label.source(),
    }
}

/// Whether `s` contracts with `t` through a CSO orbital.
pub fn shares_cso(t: &Excitation, s: &Scatterer) -> bool {
    match s.kind {
        ScattererKind::Hole => t.holes.contains(&s.cso_orbital),
        ScattererKind::Particle => t.particles.contains(&s.cso_orbital),
    }
}

fn apply_sets(det: u64, destroy: u64, create: u64) -> Option<u64> {
    if det & destroy != destroy {
        return None;
    }
    let d = det & !destroy;
    if d & create != 0 {
        return None;
    }
    Some(d | create)
}

/// Excitation rank of the determinant reached by applying `s` after `t` to
/// the reference, or 0 when that product annihilates it.
pub fn connected_rank(t: &Excitation, s: &Scatterer, n_electrons: usize) -> Result<u32> {
    if !shares_cso(t, s) {
        return domain(format!("{s} does not share a CSO orbital with {t}"));
    }
    let hf = hf_occupation(n_electrons);
    let Some(primary) = apply_sets(hf, mask(&t.holes), mask(&t.particles)) else {
        return domain(format!("{t} does not act on the reference"));
    };
    let (c, d) = (mask(&s.create), mask(&s.destroy));
    let rank = [apply_sets(primary, d, c), apply_sets(primary, c, d)]
        .into_iter()
        .flatten()
        .map(|det| excitation_rank(det, n_electrons))
        .max()
        .unwrap_or(0);
    Ok(rank)
}

/// Whether a scatterer may join the block of `t`.
pub fn admissible(t: &Excitation, s: &Scatterer, n_electrons: usize) -> bool {
    shares_cso(t, s) && connected_rank(t, s, n_electrons).map_or(false, |r| r >= 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_doubles(n_spatial: usize, n_electrons: usize) -> usize {
        let nq = 2 * n_spatial;
        let mut count = 0;
        for i in 0..nq {
            for j in 0..nq {
                for a in 0..nq {
                    for b in 0..nq {
                        let ordered = i < j && a < b;
                        let occ = j < n_electrons;
                        let virt = a >= n_electrons && b < nq;
                        let sz = (i % 2 + j % 2) == (a % 2 + b % 2);
                        if ordered && occ && virt && sz {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    fn closed_form(n_spatial: usize, n_electrons: usize) -> (usize, usize) {
        let occ = n_electrons / 2;
        let vir = n_spatial - occ;
        let c2 = |n: usize| n * n.saturating_sub(1) / 2;
        let singles = 2 * occ * vir;
        let doubles = 2 * c2(occ) * c2(vir) + occ * occ * vir * vir;
        (singles, doubles)
    }

    #[test]
    fn h2_minimal_basis() {
        let d = enumerate_doubles(2, 2).unwrap();
        assert_eq!(d.len(), brute_doubles(2, 2));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].key(), (vec![0, 1], vec![2, 3]));
        let s = enumerate_singles(2, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].key(), (vec![0], vec![2]));
        assert_eq!(s[1].key(), (vec![1], vec![3]));
    }

    #[test]
    fn paper_system_counts() {
        // BH: 6 electrons in 12 spin orbitals.
        assert_eq!(enumerate_doubles(6, 6).unwrap().len(), 99);
        assert_eq!(enumerate_singles(6, 6).unwrap().len(), 18);
        assert_eq!(brute_doubles(6, 6), 99);
        // H2O (8e) and BeH2 (4e) after freezing one core orbital.
        for ne in [8, 4] {
            assert_eq!(enumerate_doubles(6, ne).unwrap().len(), 76);
            assert_eq!(enumerate_singles(6, ne).unwrap().len(), 16);
        }
    }

    #[test]
    fn counts_match_closed_form() {
        for n in 1..=7 {
            for ne in (0..=2 * n).step_by(2) {
                let (s, d) = closed_form(n, ne);
                assert_eq!(enumerate_singles(n, ne).unwrap().len(), s, "{n} {ne}");
                assert_eq!(enumerate_doubles(n, ne).unwrap().len(), d, "{n} {ne}");
                assert_eq!(brute_doubles(n, ne), d);
            }
        }
    }

    #[test]
    fn enumeration_is_lexical_and_valid() {
        let d = enumerate_doubles(5, 4).unwrap();
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        for x in &d {
            x.validate(5, 4).unwrap();
        }
        let s = enumerate_singles(5, 4).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn full_shell_and_odd_electrons() {
        assert!(enumerate_singles(3, 6).unwrap().is_empty());
        assert!(enumerate_doubles(3, 6).unwrap().is_empty());
        assert!(matches!(enumerate_doubles(3, 3), Err(Error::Domain(_))));
        assert!(matches!(enumerate_singles(3, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn single_generator_terms() {
        let s = Excitation::new(vec![SpinOrbital::alpha(0)], vec![SpinOrbital::alpha(1)]);
        let g = build_generator(&s);
        assert_eq!(g.terms.len(), 2);
        assert_eq!(g.terms[0].coeff, 1.0);
        assert_eq!(
            g.terms[0].ops,
            vec![
                (SpinOrbital::from_qubit(2), Ladder::Create),
                (SpinOrbital::from_qubit(0), Ladder::Destroy)
            ]
        );
        assert_eq!(g.terms[1].coeff, -1.0);
        assert_eq!(
            g.terms[1].ops,
            vec![
                (SpinOrbital::from_qubit(0), Ladder::Create),
                (SpinOrbital::from_qubit(2), Ladder::Destroy)
            ]
        );
        assert_eq!(build_generator(&s), g);
    }

    #[test]
    fn generator_action_is_antisymmetric() {
        // <y|G|x> = -<x|G|y> over every basis pair on 6 qubits.
        let d = enumerate_doubles(3, 2).unwrap();
        for x in &d {
            let g = build_generator(x);
            for det in 0u64..64 {
                for (target, amp) in g.act(det) {
                    let back: f64 = g
                        .act(target)
                        .into_iter()
                        .filter(|(t, _)| *t == det)
                        .map(|(_, a)| a)
                        .sum();
                    assert_eq!(back, -amp);
                }
            }
        }
    }

    #[test]
    fn scatterer_bath_empty_cso() {
        let cso = CsoSpec::default();
        for sector in [Sector::OppositeSpin, Sector::PartiallyPaired] {
            assert!(enumerate_scatterers(3, 2, &cso, sector).unwrap().is_empty());
        }
    }

    #[test]
    fn pp_scatterers_pair_their_holes() {
        let cso = CsoSpec { holes: vec![0], particles: vec![1] };
        let pool = enumerate_scatterers(3, 2, &cso, Sector::PartiallyPaired).unwrap();
        for s in pool.iter().filter(|s| s.kind == ScattererKind::Hole) {
            assert_eq!(s.destroy[0].spatial, s.destroy[1].spatial);
            assert_ne!(s.destroy[0].spin, s.destroy[1].spin);
        }
        for s in pool.iter().filter(|s| s.kind == ScattererKind::Particle) {
            assert_eq!(s.create[0].spatial, s.create[1].spatial);
        }
    }

    /// Exhaustive scan over (destroy pair, create pair) qubit tuples,
    /// keeping those that fit one of the four opposite-spin families.
    fn brute_op_count(n_spatial: usize, n_electrons: usize, cso: &CsoSpec) -> usize {
        let nq = 2 * n_spatial;
        let occ = |q: usize| q < n_electrons;
        let spin = |q: usize| q % 2;
        let sp = |q: usize| q / 2;
        let mut count = 0;
        for d1 in 0..nq {
            for d2 in d1 + 1..nq {
                for c1 in 0..nq {
                    for c2 in c1 + 1..nq {
                        if spin(d1) == spin(d2) || spin(c1) == spin(c2) {
                            continue;
                        }
                        let (d, c) = ([d1, d2], [c1, c2]);
                        // Hole type: both destroyed occupied; one created
                        // virtual (excitation vertex, same spin as one hole),
                        // the other created is a CSO hole of the other spin.
                        if occ(d1) && occ(d2) {
                            for &m in &c {
                                let a = c[0] + c[1] - m;
                                let cso_ok = occ(m) && cso.holes.contains(&sp(m));
                                let a_ok = !occ(a);
                                let j = d.iter().copied().find(|&x| spin(x) == spin(m)).unwrap();
                                if cso_ok && a_ok && j != m {
                                    count += 1;
                                }
                            }
                        }
                        // Particle type: one destroyed occupied, the other a
                        // CSO particle; both created virtual.
                        if !occ(c1) && !occ(c2) {
                            for &e in &d {
                                let i = d[0] + d[1] - e;
                                let cso_ok = !occ(e) && cso.particles.contains(&sp(e));
                                let b = c.iter().copied().find(|&x| spin(x) == spin(e)).unwrap();
                                if cso_ok && occ(i) && b != e {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn op_bath_matches_brute_force() {
        let cso = CsoSpec { holes: vec![0], particles: vec![1] };
        let pool = enumerate_scatterers(3, 2, &cso, Sector::OppositeSpin).unwrap();
        assert_eq!(pool.len(), brute_op_count(3, 2, &cso));
        assert!(!pool.is_empty());
        for (ne, n) in [(4, 6), (6, 6), (8, 6)] {
            let cso = CsoSpec::frontier(n, ne);
            let pool = enumerate_scatterers(n, ne, &cso, Sector::OppositeSpin).unwrap();
            assert_eq!(pool.len(), brute_op_count(n, ne, &cso), "{ne}e");
            let cso = CsoSpec { holes: (0..ne / 2).collect(), particles: (ne / 2..n).collect() };
            let pool = enumerate_scatterers(n, ne, &cso, Sector::OppositeSpin).unwrap();
            assert_eq!(pool.len(), brute_op_count(n, ne, &cso), "{ne}e full CSO");
        }
    }

    #[test]
    fn scatterers_conserve_sz_and_are_sorted() {
        let cso = CsoSpec { holes: vec![0, 1], particles: vec![2, 3] };
        for sector in [Sector::OppositeSpin, Sector::PartiallyPaired] {
            let pool = enumerate_scatterers(5, 4, &cso, sector).unwrap();
            assert!(pool.windows(2).all(|w| w[0] < w[1]));
            for s in &pool {
                let sz = |v: &[SpinOrbital]| v.iter().filter(|o| o.spin == Spin::Alpha).count();
                assert_eq!(sz(&s.create), sz(&s.destroy), "{s}");
                match s.kind {
                    ScattererKind::Hole => assert!(s.create.contains(&s.cso_orbital)),
                    ScattererKind::Particle => assert!(s.destroy.contains(&s.cso_orbital)),
                }
            }
        }
    }

    #[test]
    fn cso_outside_space_is_rejected() {
        let bad_hole = CsoSpec { holes: vec![1], particles: vec![] };
        assert!(enumerate_scatterers(3, 2, &bad_hole, Sector::OppositeSpin).is_err());
        let bad_particle = CsoSpec { holes: vec![], particles: vec![0] };
        assert!(enumerate_scatterers(3, 2, &bad_particle, Sector::OppositeSpin).is_err());
        let beyond = CsoSpec { holes: vec![], particles: vec![3] };
        assert!(enumerate_scatterers(3, 2, &beyond, Sector::OppositeSpin).is_err());
    }

    fn so(q: usize) -> SpinOrbital {
        SpinOrbital::from_qubit(q)
    }

    #[test]
    fn cso_sharing_and_rank() {
        // 4 occupied spin orbitals (0..4), virtuals 4..12.
        // tau: 0a,1b -> 2a(4),2b(5); hole m = 1b (qubit 3).
        let t = Excitation::new(vec![so(0), so(3)], vec![so(4), so(5)]);
        let s = Scatterer {
            kind: ScattererKind::Hole,
            cso_orbital: so(3),
            destroy: vec![so(1), so(2)],
            create: vec![so(3), so(6)],
            sector: Sector::OppositeSpin,
        };
        assert!(shares_cso(&t, &s));
        assert_eq!(connected_rank(&t, &s, 4).unwrap(), 3);
        assert!(admissible(&t, &s, 4));

        // tau whose holes exclude m.
        let t2 = Excitation::new(vec![so(0), so(1)], vec![so(4), so(5)]);
        assert!(!shares_cso(&t2, &s));
        assert!(matches!(connected_rank(&t2, &s, 4), Err(Error::Domain(_))));

        // sigma reusing tau's particle: the product annihilates the reference.
        let s3 = Scatterer {
            kind: ScattererKind::Hole,
            cso_orbital: so(3),
            destroy: vec![so(1), so(2)],
            create: vec![so(3), so(4)],
            sector: Sector::OppositeSpin,
        };
        assert!(connected_rank(&t, &s3, 4).unwrap() <= 2);
        assert!(!admissible(&t, &s3, 4));
    }

    #[test]
    fn spin_orbital_qubit_bijection() {
        for q in 0..24 {
            assert_eq!(SpinOrbital::from_qubit(q).qubit(), q);
        }
    }
}
