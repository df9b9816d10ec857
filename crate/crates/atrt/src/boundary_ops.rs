//! Operators on ∂₊SM data: A± extensions and restrictions, P, C, P*, the pseudo-inverses
//! P†, and the closed-form spectral action on the φ/u/v bases.

use crate::error::{AtrtError, Result};
use crate::fields::{BoundaryField, BoundaryGrid, Parity, C64};
use std::f64::consts::{PI, SQRT_2};
use std::fmt;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Which part of H an operator uses: H₊ (even degrees), H₋ (odd degrees) or all of H.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Plus,
    Minus,
    All,
}

impl Part {
    fn parity(self) -> Parity {
        match self {
            Part::Plus => Parity::Even,
            Part::Minus => Parity::Odd,
            Part::All => Parity::All,
        }
    }
}

/// A± u: u on ∂₊ and ±u∘𝒮 on ∂₋.
pub fn a_extend(u: &BoundaryField, sign: Sign) -> BoundaryField {
    u.scatter_extend(sign.value())
}

/// A±* w = (w ± w∘𝒮)|∂₊.
pub fn a_restrict(w: &BoundaryField, sign: Sign) -> BoundaryField {
    w.scatter_restrict(sign.value())
}

/// P = A₋* H A₊ (P± with H±).
pub fn op_p(u: &BoundaryField, part: Part) -> BoundaryField {
    a_restrict(&a_extend(u, Sign::Plus).hilbert(part.parity()), Sign::Minus)
}

/// C = ½ A₋* H A₋ (C± with H±).
pub fn op_c(u: &BoundaryField, part: Part) -> BoundaryField {
    a_restrict(&a_extend(u, Sign::Minus).hilbert(part.parity()), Sign::Minus).scale(C64::new(0.5, 0.0))
}

/// P* = −A₊* H A₋ (P±* with H±).
pub fn op_p_star(u: &BoundaryField, part: Part) -> BoundaryField {
    a_restrict(&a_extend(u, Sign::Minus).hilbert(part.parity()), Sign::Plus).scale(C64::new(-1.0, 0.0))
}

/// A₊* H A₊.
pub fn op_a_plus_star_h_a_plus(u: &BoundaryField) -> BoundaryField {
    a_restrict(&a_extend(u, Sign::Plus).hilbert(Parity::All), Sign::Plus)
}

/// P₋† = ¼P₋*, P₊† = ¼P₊*(Id − 12C₊²), P† = P₊† + P₋†.
pub fn op_p_dagger(u: &BoundaryField, part: Part) -> BoundaryField {
    let quarter = C64::new(0.25, 0.0);
    let minus = || op_p_star(u, Part::Minus).scale(quarter);
    let plus = || {
        let c2 = op_c(&op_c(u, Part::Plus), Part::Plus);
        op_p_star(&u.sub(&c2.scale(C64::new(12.0, 0.0))), Part::Plus).scale(quarter)
    };
    match part {
        Part::Minus => minus(),
        Part::Plus => plus(),
        Part::All => minus().add(&plus()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Phi,
    PhiPrime,
    U,
    V,
    UPrime,
    VPrime,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Phi => "phi",
            Family::PhiPrime => "phi'",
            Family::U => "u",
            Family::V => "v",
            Family::UPrime => "u'",
            Family::VPrime => "v'",
        }
    }
    fn primed(self) -> bool {
        matches!(self, Family::PhiPrime | Family::UPrime | Family::VPrime)
    }
}

/// Element of the boundary bases: φ_{p,q} = e^{i(pβ+2qα)}/(π√2), φ' = e^{iα}φ,
/// u = (Id+𝒮_A*)φ, v = (Id−𝒮_A*)φ and the primed analogues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryBasisIndex {
    pub family: Family,
    pub p: i64,
    pub q: i64,
}

impl fmt::Display for BoundaryBasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{}]", self.family.name(), self.p, self.q)
    }
}

impl BoundaryBasisIndex {
    pub fn new(family: Family, p: i64, q: i64) -> Self {
        Self { family, p, q }
    }

    /// α-degree of the leading φ term.
    fn degree(&self) -> i64 {
        if self.family.primed() {
            2 * self.q + 1
        } else {
            2 * self.q
        }
    }

    /// Partner index in the redundancy identity and the sign relating the two.
    fn partner(&self) -> Option<(i64, f64)> {
        let s = if self.p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        match self.family {
            Family::U => Some((self.p - self.q, s)),
            Family::V => Some((self.p - self.q, -s)),
            Family::UPrime => Some((self.p - self.q - 1, s)),
            Family::VPrime => Some((self.p - self.q - 1, -s)),
            _ => None,
        }
    }

    pub fn is_canonical(&self) -> bool {
        match self.family {
            Family::Phi | Family::PhiPrime => true,
            _ => self.degree() >= self.p,
        }
    }

    /// Canonical representative and the factor c with self = c · canonical.
    pub fn canonicalize(&self) -> (BoundaryBasisIndex, f64) {
        if self.is_canonical() {
            return (*self, 1.0);
        }
        let (q2, s) = self.partner().expect("phi families are always canonical");
        (BoundaryBasisIndex { q: q2, ..*self }, s)
    }

    /// True when the element vanishes identically (e.g. v_{2q,q}).
    pub fn is_zero(&self) -> bool {
        match self.partner() {
            Some((q2, s)) => q2 == self.q && s < 0.0,
            None => false,
        }
    }

    /// Fourier content as (p, n, coefficient) on e^{i(pβ+nα)}.
    pub fn modes(&self) -> Vec<(i64, i64, C64)> {
        let c = 1.0 / (PI * SQRT_2);
        let off = if self.family.primed() { 1 } else { 0 };
        let mut out = vec![(self.p, 2 * self.q + off, C64::new(c, 0.0))];
        if let Some((q2, s)) = self.partner() {
            out.push((self.p, 2 * q2 + off, C64::new(c * s, 0.0)));
        }
        out
    }

    /// Closed-form values at (β, α).
    pub fn eval(&self, beta: f64, alpha: f64) -> C64 {
        self.modes()
            .iter()
            .map(|&(p, n, c)| c * C64::from_polar(1.0, p as f64 * beta + n as f64 * alpha))
            .sum()
    }

    /// Restriction to ∂₊ on the torus grid (zero on ∂₋).
    pub fn sample(&self, grid: BoundaryGrid) -> BoundaryField {
        BoundaryField::from_fn_plus(grid, |b, a| self.eval(b, a))
    }

    /// Values on all of ∂SM of the same closed-form expression.
    pub fn sample_full(&self, grid: BoundaryGrid) -> BoundaryField {
        BoundaryField::from_fn(grid, |b, a| self.eval(b, a))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralOp {
    PPlus,
    PMinus,
    CPlus,
    PPlusStar,
    PMinusStar,
    APlusStarHAPlus,
}

impl SpectralOp {
    pub const ALL: [SpectralOp; 6] = [
        SpectralOp::PPlus,
        SpectralOp::PMinus,
        SpectralOp::CPlus,
        SpectralOp::PPlusStar,
        SpectralOp::PMinusStar,
        SpectralOp::APlusStarHAPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectralOp::PPlus => "P+",
            SpectralOp::PMinus => "P-",
            SpectralOp::CPlus => "C+",
            SpectralOp::PPlusStar => "P+*",
            SpectralOp::PMinusStar => "P-*",
            SpectralOp::APlusStarHAPlus => "A+*HA+",
        }
    }

    /// Input family the closed form is stated for, and the output family.
    pub fn families(self) -> (Family, Family) {
        match self {
            SpectralOp::PPlus => (Family::U, Family::V),
            SpectralOp::PMinus => (Family::VPrime, Family::UPrime),
            SpectralOp::CPlus => (Family::V, Family::V),
            SpectralOp::PPlusStar => (Family::V, Family::U),
            SpectralOp::PMinusStar => (Family::UPrime, Family::VPrime),
            SpectralOp::APlusStarHAPlus => (Family::VPrime, Family::VPrime),
        }
    }

    /// Compositional evaluation on ∂₊ data.
    pub fn apply(self, u: &BoundaryField) -> BoundaryField {
        match self {
            SpectralOp::PPlus => op_p(u, Part::Plus),
            SpectralOp::PMinus => op_p(u, Part::Minus),
            SpectralOp::CPlus => op_c(u, Part::Plus),
            SpectralOp::PPlusStar => op_p_star(u, Part::Plus),
            SpectralOp::PMinusStar => op_p_star(u, Part::Minus),
            SpectralOp::APlusStarHAPlus => op_a_plus_star_h_a_plus(u),
        }
    }
}

fn sgn(x: i64) -> f64 {
    x.signum() as f64
}

/// The sgn-formula action on an index of the matching family, without canonicalization.
pub fn spectral_action(idx: BoundaryBasisIndex, op: SpectralOp) -> Result<(C64, BoundaryBasisIndex)> {
    let (fin, fout) = op.families();
    if idx.family != fin {
        return Err(AtrtError::InvalidArgument(format!("{} acts on {} elements, got {idx}", op.name(), fin.name())));
    }
    let (p, q) = (idx.p, idx.q);
    let even = sgn(2 * q) - sgn(2 * (p - q));
    let odd = sgn(2 * q + 1) - sgn(2 * p - 2 * q - 1);
    let c = match op {
        SpectralOp::PPlus => -I * even,
        SpectralOp::PMinus => -I * odd,
        SpectralOp::CPlus => -I * 0.5 * (sgn(2 * q) + sgn(2 * (p - q))),
        SpectralOp::PPlusStar => I * even,
        SpectralOp::PMinusStar => I * odd,
        SpectralOp::APlusStarHAPlus => -I * (sgn(2 * q + 1) + sgn(2 * p - 2 * q - 1)),
    };
    Ok((c, BoundaryBasisIndex::new(fout, p, q)))
}

/// Closed-form action on a canonical index; output is canonicalized too.
pub fn spectral_oracle(idx: BoundaryBasisIndex, op: SpectralOp) -> Result<(C64, BoundaryBasisIndex)> {
    if !idx.is_canonical() {
        return Err(AtrtError::NonCanonicalIndex(idx.to_string()));
    }
    let (c, out) = spectral_action(idx, op)?;
    let (canon, s) = out.canonicalize();
    Ok((c * s, canon))
}

/// All canonical, nonzero indices of a family with |p|, |q| ≤ n.
pub fn canonical_indices(family: Family, n: i64) -> Vec<BoundaryBasisIndex> {
    let mut out = Vec::new();
    for p in -n..=n {
        for q in -n..=n {
            let idx = BoundaryBasisIndex::new(family, p, q);
            if idx.is_canonical() && !idx.is_zero() {
                out.push(idx);
            }
        }
    }
    out
}

/// One row of the operator table: input, output and both evaluations.
#[derive(Clone, Debug)]
pub struct SpectralRow {
    pub op: SpectralOp,
    pub input: BoundaryBasisIndex,
    pub output: BoundaryBasisIndex,
    pub oracle: C64,
    /// max |compositional − oracle·output| over the ∂₊ grid.
    pub error: f64,
}

/// Compares compositional operators with the closed forms on all canonical |p|,|q| ≤ n.
pub fn spectral_table(grid: BoundaryGrid, n: i64) -> Vec<SpectralRow> {
    use rayon::prelude::*;
    let mut jobs = Vec::new();
    for op in SpectralOp::ALL {
        for idx in canonical_indices(op.families().0, n) {
            jobs.push((op, idx));
        }
    }
    jobs.par_iter()
        .map(|&(op, idx)| {
            let (c, out) = spectral_oracle(idx, op).expect("canonical input");
            let lhs = op.apply(&idx.sample(grid));
            let rhs = out.sample(grid).scale(c);
            SpectralRow { op, input: idx, output: out, oracle: c, error: lhs.sub(&rhs).max_abs_plus() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BoundaryGrid {
        BoundaryGrid::new(64, 64).unwrap()
    }

    fn idx(f: Family, p: i64, q: i64) -> BoundaryBasisIndex {
        BoundaryBasisIndex::new(f, p, q)
    }

    fn close(a: &BoundaryField, b: &BoundaryField) -> f64 {
        a.sub(b).max_abs_plus()
    }

    #[test]
    fn extension_examples() {
        let g = grid();
        let one = BoundaryField::from_fn_plus(g, |_, _| C64::new(1.0, 0.0));
        assert!(a_extend(&one, Sign::Plus).sub(&BoundaryField::from_fn(g, |_, _| C64::new(1.0, 0.0))).max_abs() < 1e-15);
        let m = a_extend(&one, Sign::Minus);
        for j in 0..g.n_alpha {
            let expect = if g.is_plus(j) { 1.0 } else { -1.0 };
            assert_eq!(m.at(3, j), C64::new(expect, 0.0));
        }
        let u = BoundaryField::from_fn_plus(g, |b, a| C64::new(b.sin() * a, a.cos()));
        assert!(a_restrict(&a_extend(&u, Sign::Plus), Sign::Minus).max_abs() < 1e-15);
        assert!(close(&a_restrict(&a_extend(&u, Sign::Plus), Sign::Plus), &u.scale(C64::new(2.0, 0.0))) < 1e-15);
    }

    #[test]
    fn operator_examples() {
        let g = grid();
        let e = |i: BoundaryBasisIndex| i.sample(g);
        let r = op_p(&e(idx(Family::VPrime, 0, 0)), Part::Minus);
        assert!(close(&r, &e(idx(Family::UPrime, 0, 0)).scale(-2.0 * I)) < 1e-12);
        let r = op_p(&e(idx(Family::U, 1, 1)), Part::Plus);
        assert!(close(&r, &e(idx(Family::V, 1, 1)).scale(-I)) < 1e-12);
        let one = BoundaryField::from_fn_plus(g, |_, _| C64::new(1.0, 0.0));
        assert!(op_p(&one, Part::All).max_abs() < 1e-12);
        let r = op_c(&e(idx(Family::V, 1, 1)), Part::Plus);
        assert!(close(&r, &e(idx(Family::V, 1, 1)).scale(-0.5 * I)) < 1e-12);
        assert!(op_c(&e(idx(Family::V, 2, -1)), Part::Plus).max_abs() < 1e-12);
        let r = op_p_star(&e(idx(Family::UPrime, 0, 0)), Part::Minus);
        assert!(close(&r, &e(idx(Family::VPrime, 0, 0)).scale(2.0 * I)) < 1e-12);
        for k in 1..5 {
            let r = op_p_star(&e(idx(Family::V, k, k)), Part::Plus);
            assert!(close(&r, &e(idx(Family::U, k, k)).scale(I)) < 1e-12);
        }
        assert!(op_p_star(&e(idx(Family::V, 1, 1)), Part::Minus).max_abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let g = grid();
        let e = |i: BoundaryBasisIndex| i.sample(g);
        let u = e(idx(Family::UPrime, 0, 0));
        assert!(close(&op_p(&op_p_dagger(&u, Part::Minus), Part::Minus), &u) < 1e-12);
        let v = e(idx(Family::V, 1, 1));
        assert!(close(&op_p(&op_p_dagger(&v, Part::Plus), Part::Plus), &v) < 1e-12);
        let u = e(idx(Family::UPrime, 3, 0));
        assert!(op_p(&op_p_dagger(&u, Part::Minus), Part::Minus).max_abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let (c, _) = spectral_oracle(idx(Family::VPrime, 0, 0), SpectralOp::APlusStarHAPlus).unwrap();
        assert_eq!(c, C64::new(0.0, 0.0));
        let (c, out) = spectral_action(idx(Family::UPrime, 0, -1), SpectralOp::PMinusStar).unwrap();
        assert_eq!((c, out), (-2.0 * I, idx(Family::VPrime, 0, -1)));
        let (canon, s) = out.canonicalize();
        assert_eq!(canon, idx(Family::VPrime, 0, 0));
        assert_eq!(c * s, 2.0 * I);
        assert!(spectral_oracle(idx(Family::UPrime, 0, -1), SpectralOp::PMinusStar).is_err());
        let (c, out) = spectral_oracle(idx(Family::U, 1, 1), SpectralOp::PPlus).unwrap();
        assert_eq!((c, out), (-I, idx(Family::V, 1, 1)));
    }

    #[test]
    fn c_plus_sgn_formula_matches_case_table() {
        for idx in canonical_indices(Family::V, 6) {
            let (p, q) = (idx.p, idx.q);
            let table = if q < 0 && p < q {
                I
            } else if q > 0 && p > q {
                -I
            } else if q == 0 && p < 0 {
                0.5 * I
            } else if q > 0 && p == q {
                -0.5 * I
            } else {
                C64::new(0.0, 0.0)
            };
            assert_eq!(spectral_action(idx, SpectralOp::CPlus).unwrap().0, table, "{idx}");
        }
    }

    #[test]
    fn redundancy_identities_hold_pointwise() {
        for (f, p, q) in [(Family::U, 3, 0), (Family::V, -2, -5), (Family::UPrime, 4, 1), (Family::VPrime, 1, -2)] {
            let i = idx(f, p, q);
            let (c, s) = i.canonicalize();
            for (b, a) in [(0.3, 0.1), (2.0, -1.0)] {
                assert!((i.eval(b, a) - c.eval(b, a) * s).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn bases_are_orthonormal_on_plus() {
        let g = grid();
        let a = idx(Family::Phi, 2, -1).sample(g);
        let b = idx(Family::PhiPrime, 2, -1).sample(g);
        assert!((a.inner_plus(&a) - 1.0).norm() < 1e-12);
        assert!((b.inner_plus(&b) - 1.0).norm() < 1e-12);
        assert!(a.inner_plus(&idx(Family::Phi, 2, 0).sample(g)).norm() < 1e-12);
    }

    #[test]
    fn antipodal_parity_of_u_and_v() {
        let g = grid();
        for i in [idx(Family::U, 2, 3), idx(Family::UPrime, -1, 2)] {
            let s = i.sample_full(g);
            assert!(s.scatter(true).sub(&s).max_abs() < 1e-12);
        }
        for i in [idx(Family::V, 2, 3), idx(Family::VPrime, -1, 2)] {
            let s = i.sample_full(g);
            assert!(s.scatter(true).add(&s).max_abs() < 1e-12);
        }
    }

    #[test]
    fn compositional_matches_oracle_on_small_indices() {
        let rows = spectral_table(grid(), 4);
        let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.error));
        assert!(worst < 1e-10, "{worst}");
        assert!(rows.len() > 200);
    }
}
