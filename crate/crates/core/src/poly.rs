//! Sparse polynomials in the 2m generators `z = (u_1..u_m, v_1..v_m)` and
//! the K-ordered star product on them.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};

/// Number of canonical pairs and the (positive, non-formal) deformation
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub m: usize,
    pub hbar: f64,
}

impl Params {
    pub fn new(m: usize, hbar: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("m must be positive".into()));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Invalid(format!("hbar must be a positive real, got {hbar}")));
        }
        Ok(Self { m, hbar })
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }
}

/// An ordering: symmetric K and the contraction matrix `Gamma = K + J`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingK {
    k: CMatrix,
    gamma: CMatrix,
}

impl OrderingK {
    pub fn new(k: CMatrix) -> Result<Self> {
        if !k.is_square() || !k.nrows().is_multiple_of(2) || k.nrows() == 0 {
            return Err(Error::Invalid("K must be a nonempty square matrix of even size".into()));
        }
        if !linalg::is_finite(&k) {
            return Err(Error::NonFinite);
        }
        if !linalg::is_symmetric(&k, 1e-14) {
            return Err(Error::NotSymmetric);
        }
        let k = linalg::symmetrize(&k);
        let gamma = &k + linalg::symplectic_j(k.nrows() / 2);
        Ok(Self { k, gamma })
    }

    /// K = 0.
    pub fn weyl(m: usize) -> Self {
        Self::new(CMatrix::zeros(2 * m, 2 * m)).expect("zero matrix is symmetric")
    }

    /// K = [[0, I], [I, 0]]: `u * v = uv`.
    pub fn standard(m: usize) -> Self {
        Self::new(off_diagonal_identity(m, ONE)).expect("preset is symmetric")
    }

    /// K = [[0, -I], [-I, 0]]: `v * u = uv`.
    pub fn antistandard(m: usize) -> Self {
        Self::new(off_diagonal_identity(m, -ONE)).expect("preset is symmetric")
    }

    pub fn preset(name: &str, m: usize) -> Option<Self> {
        match name {
            "weyl" => Some(Self::weyl(m)),
            "standard" => Some(Self::standard(m)),
            "antistandard" => Some(Self::antistandard(m)),
            _ => None,
        }
    }

    pub fn k(&self) -> &CMatrix {
        &self.k
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn m(&self) -> usize {
        self.k.nrows() / 2
    }

    pub fn check(&self, p: &Params) -> Result<()> {
        if self.k.nrows() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: self.k.nrows(),
            });
        }
        Ok(())
    }
}

fn off_diagonal_identity(m: usize, c: C64) -> CMatrix {
    let mut k = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        k[(i, m + i)] = c;
        k[(m + i, i)] = c;
    }
    k
}

pub type Exponent = Vec<u32>;

/// Sparse polynomial over C. Coefficients are never stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyC {
    nvars: usize,
    terms: BTreeMap<Exponent, C64>,
}

/// One entry of the polynomial JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub c: C64,
}

impl PolyC {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, ONE)
    }

    /// The generator `z_index` (0-based, u's first).
    pub fn generator(nvars: usize, index: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, ONE);
        p
    }

    /// Linear form `sum c_i z_i`.
    pub fn linear(coeffs: &[C64]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, c);
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, C64)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> C64 {
        self.terms.get(e).copied().unwrap_or(ZERO)
    }

    pub fn add_term(&mut self, e: Exponent, c: C64) {
        debug_assert_eq!(e.len(), self.nvars);
        if c == ZERO {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == ZERO {
                    o.remove();
                }
            }
        }
    }

    /// Total degree; -1 for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as i64).sum())
            .max()
            .unwrap_or(-1)
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of coefficient moduli.
    pub fn norm_l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Drops coefficients with `|c| <= rel * max|c|`.
    pub fn pruned(mut self, rel: f64) -> Self {
        let cut = rel * self.max_coeff();
        self.terms.retain(|_, c| c.norm() > cut);
        self
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Commutative (pointwise) product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out.add_term(d, c * e[var] as f64);
            }
        }
        out
    }

    /// The homogeneous part of the given degree.
    pub fn homogeneous(&self, degree: i64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().map(|&x| x as i64).sum::<i64>() == degree {
                out.add_term(e.clone(), *c);
            }
        }
        out
    }

    /// `p(Lz)`: substitutes `z_i -> sum_j L_ij z_j`.
    pub fn substitute_linear(&self, l: &CMatrix) -> Self {
        let n = self.nvars;
        let images: Vec<PolyC> = (0..n)
            .map(|i| PolyC::linear(&l.row(i).iter().copied().collect::<Vec<_>>()))
            .collect();
        let mut out = Self::zero(n);
        for (e, c) in &self.terms {
            let mut term = Self::constant(n, *c);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&images[i]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    pub fn evaluate(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(z)
                    .fold(*c, |acc, (&k, &x)| acc * x.powu(k))
            })
            .sum()
    }

    /// Largest coefficient difference, relative to `max(1, max|c|)` of `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = self.sub(other).max_coeff();
        d / other.max_coeff().max(1.0)
    }

    pub fn to_json_terms(&self) -> Vec<TermJson> {
        self.terms
            .iter()
            .map(|(e, c)| TermJson {
                exp: e.clone(),
                c: *c,
            })
            .collect()
    }

    pub fn from_json_terms(terms: &[TermJson], nvars: Option<usize>) -> Result<Self> {
        let n = match (nvars, terms.first()) {
            (Some(n), _) => n,
            (None, Some(t)) => t.exp.len(),
            (None, None) => return Err(Error::Invalid("cannot infer dimension of empty polynomial".into())),
        };
        if n % 2 != 0 {
            return Err(Error::Invalid("exponent length must be even (2m)".into()));
        }
        Self::from_terms(n, terms.iter().map(|t| (t.exp.clone(), t.c)))
    }
}

impl fmt::Display for PolyC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let m = self.nvars / 2;
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let (name, idx) = if i < m { ('u', i + 1) } else { ('v', i - m + 1) };
                if k == 1 {
                    write!(f, "*{name}{idx}")?;
                } else {
                    write!(f, "*{name}{idx}^{k}")?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) const PRUNE_REL: f64 = 1e-15;

/// A factor `p(z) * exp(z^T Q z)` as seen by the bidifferential series.
#[derive(Clone, Copy)]
pub(crate) struct SeriesFactor<'a> {
    pub poly: &'a PolyC,
    pub gauss: Option<&'a CMatrix>,
}

type BiKey = (Exponent, Exponent);

/// Derivative of `z^e` (times `exp(z^T Q z)` when `q` is present), as
/// exponent/coefficient pairs of the polynomial prefactor.
fn factor_derivative(e: &[u32], var: usize, q: Option<&CMatrix>) -> Vec<(Exponent, C64)> {
    let mut out = Vec::new();
    if e[var] > 0 {
        let mut d = e.to_vec();
        d[var] -= 1;
        out.push((d, C64::from(e[var] as f64)));
    }
    if let Some(q) = q {
        for l in 0..e.len() {
            let c = q[(var, l)] * 2.0;
            if c != ZERO {
                let mut d = e.to_vec();
                d[l] += 1;
                out.push((d, c));
            }
        }
    }
    out
}

/// Evaluates `f exp((i hbar / 2) <- d Gamma d ->) g` for two factors of which
/// at most one carries a Gaussian. Returns the polynomial prefactor of the
/// result (the Gaussian, if any, is unchanged).
pub(crate) fn star_series(
    left: SeriesFactor<'_>,
    right: SeriesFactor<'_>,
    gamma: &CMatrix,
    hbar: f64,
) -> PolyC {
    assert!(
        left.gauss.is_none() || right.gauss.is_none(),
        "series does not terminate for two Gaussian factors"
    );
    let n = left.poly.nvars();
    let c = I * (hbar / 2.0);
    let mut current: BTreeMap<BiKey, C64> = BTreeMap::new();
    for (ea, ca) in left.poly.terms() {
        for (eb, cb) in right.poly.terms() {
            *current.entry((ea.clone(), eb.clone())).or_insert(ZERO) += ca * cb;
        }
    }
    let gamma_nz: Vec<(usize, usize, C64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let g = gamma[(i, j)];
            (g != ZERO).then_some((i, j, g))
        })
        .collect();

    let mut out = PolyC::zero(n);
    let mut weight = ONE;
    let mut order = 0u32;
    loop {
        for ((ea, eb), v) in &current {
            let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
            out.add_term(e, v * weight);
        }
        let mut next: BTreeMap<BiKey, C64> = BTreeMap::new();
        for ((ea, eb), v) in &current {
            for &(i, j, g) in &gamma_nz {
                let dl = factor_derivative(ea, i, left.gauss);
                if dl.is_empty() {
                    continue;
                }
                let dr = factor_derivative(eb, j, right.gauss);
                for (xa, ca) in &dl {
                    for (xb, cb) in &dr {
                        *next.entry((xa.clone(), xb.clone())).or_insert(ZERO) += v * g * ca * cb;
                    }
                }
            }
        }
        next.retain(|_, v| *v != ZERO);
        if next.is_empty() {
            break;
        }
        order += 1;
        weight *= c / order as f64;
        current = next;
    }
    out.pruned(PRUNE_REL)
}

fn check_poly(f: &PolyC, p: &Params) -> Result<()> {
    if f.nvars() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: f.nvars(),
        });
    }
    Ok(())
}

/// K-ordered star product of two polynomials.
pub fn star_poly(f: &PolyC, g: &PolyC, ord: &OrderingK, p: &Params) -> Result<PolyC> {
    check_poly(f, p)?;
    check_poly(g, p)?;
    ord.check(p)?;
    Ok(star_series(
        SeriesFactor { poly: f, gauss: None },
        SeriesFactor { poly: g, gauss: None },
        ord.gamma(),
        p.hbar,
    ))
}

/// `[f, g]_* = f * g - g * f`.
pub fn commutator(f: &PolyC, g: &PolyC, ord: &OrderingK, p: &Params) -> Result<PolyC> {
    Ok(star_poly(f, g, ord, p)?
        .sub(&star_poly(g, f, ord, p)?)
        .pruned(PRUNE_REL))
}

fn check_sym(a: &CMatrix, p: &Params) -> Result<()> {
    if a.nrows() != p.dim() || a.ncols() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: a.nrows(),
        });
    }
    if !linalg::is_symmetric(a, 1e-12) {
        return Err(Error::NotSymmetric);
    }
    Ok(())
}

/// `A[z] = sum_ij A_ij z_i z_j` as a polynomial.
pub fn quad_form(a: &CMatrix, p: &Params) -> Result<PolyC> {
    check_sym(a, p)?;
    Ok(quad_form_unchecked(a))
}

pub(crate) fn quad_form_unchecked(a: &CMatrix) -> PolyC {
    let n = a.nrows();
    let mut out = PolyC::zero(n);
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            out.add_term(e, a[(i, j)]);
        }
    }
    out.pruned(PRUNE_REL)
}

/// The symmetrised star quadratic `sum A_ij (z_i*z_j + z_j*z_i)/2` in the
/// given ordering, which as a polynomial is `A[z] + (i hbar / 2) Tr(KA)`.
pub fn quad_star_k(a: &CMatrix, ord: &OrderingK, p: &Params) -> Result<PolyC> {
    check_sym(a, p)?;
    ord.check(p)?;
    let shift = I * (p.hbar / 2.0) * linalg::trace(&(ord.k() * a));
    let n = p.dim();
    Ok(quad_form_unchecked(a)
        .add(&PolyC::constant(n, shift))
        .pruned(PRUNE_REL))
}

/// Bilinear pairing `<x, y> = sum x_i y_i` (no conjugation).
pub fn pairing(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn check_on_sphere(a: &[C64]) -> Result<()> {
    let s = pairing(a, a);
    if (s - ONE).norm() > 1e-12 {
        return Err(Error::NotOnSphere { re: s.re, im: s.im });
    }
    Ok(())
}

/// `<a, u> = sum a_i u_i`.
pub fn u_form(a: &[C64], p: &Params) -> Result<PolyC> {
    if a.len() != p.m {
        return Err(Error::DimensionMismatch {
            expected: p.m,
            got: a.len(),
        });
    }
    let mut c = vec![ZERO; p.dim()];
    c[..p.m].copy_from_slice(a);
    Ok(PolyC::linear(&c))
}

/// `<b, v> = sum b_i v_i`.
pub fn v_form(b: &[C64], p: &Params) -> Result<PolyC> {
    if b.len() != p.m {
        return Err(Error::DimensionMismatch {
            expected: p.m,
            got: b.len(),
        });
    }
    let mut c = vec![ZERO; p.dim()];
    c[p.m..].copy_from_slice(b);
    Ok(PolyC::linear(&c))
}

/// A rank-one quadratic form `alpha <a,u>^2 + beta <a,v>^2 + 2 gamma <a,u><a,v>`.
#[derive(Debug, Clone)]
pub struct RankOne {
    pub matrix: CMatrix,
    pub poly: PolyC,
    pub discriminant: C64,
}

pub fn rank_one_b(a: &[C64], alpha: C64, beta: C64, gamma: C64, p: &Params) -> Result<RankOne> {
    if a.len() != p.m {
        return Err(Error::DimensionMismatch {
            expected: p.m,
            got: a.len(),
        });
    }
    check_on_sphere(a)?;
    let m = p.m;
    let mut mat = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let aa = a[i] * a[j];
            mat[(i, j)] = alpha * aa;
            mat[(m + i, m + j)] = beta * aa;
            mat[(i, m + j)] = gamma * aa;
            mat[(m + i, j)] = gamma * aa;
        }
    }
    let poly = quad_form_unchecked(&mat);
    Ok(RankOne {
        matrix: mat,
        poly,
        discriminant: gamma * gamma - alpha * beta,
    })
}

/// `[<a,u>, <b,v>]_*`, which equals `-i hbar <a,b>` in every ordering.
pub fn bracket_uv(a: &[C64], b: &[C64], ord: &OrderingK, p: &Params) -> Result<C64> {
    let c = commutator(&u_form(a, p)?, &v_form(b, p)?, ord, p)?;
    if c.degree() > 0 {
        return Err(Error::Invalid("bracket of linear forms is not a constant".into()));
    }
    Ok(c.coeff(&vec![0; p.dim()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> Params {
        Params::new(1, 1.0).unwrap()
    }

    fn u(n: usize, i: usize) -> PolyC {
        PolyC::generator(n, i)
    }

    #[test]
    fn params_reject_nonpositive_hbar() {
        assert!(Params::new(1, 0.0).is_err());
        assert!(Params::new(1, -1.0).is_err());
        assert!(Params::new(0, 1.0).is_err());
    }

    #[test]
    fn weyl_commutator_of_u_and_v() {
        let p = p1();
        let c = commutator(&u(2, 0), &u(2, 1), &OrderingK::weyl(1), &p).unwrap();
        assert_eq!(c, PolyC::constant(2, -I));
    }

    #[test]
    fn weyl_product_of_u_and_v() {
        let p = p1();
        let r = star_poly(&u(2, 0), &u(2, 1), &OrderingK::weyl(1), &p).unwrap();
        let want = PolyC::from_terms(2, [(vec![1, 1], ONE), (vec![0, 0], -I * 0.5)]).unwrap();
        assert_eq!(r, want);
    }

    #[test]
    fn standard_and_antistandard_products() {
        let p = p1();
        let uv = PolyC::from_terms(2, [(vec![1, 1], ONE)]).unwrap();
        let s = OrderingK::standard(1);
        assert_eq!(star_poly(&u(2, 0), &u(2, 1), &s, &p).unwrap(), uv);
        let a = OrderingK::antistandard(1);
        assert_eq!(star_poly(&u(2, 1), &u(2, 0), &a, &p).unwrap(), uv);
    }

    #[test]
    fn unit_is_two_sided() {
        let p = Params::new(2, 0.7).unwrap();
        let f = PolyC::from_terms(4, [(vec![2, 0, 1, 0], C64::new(1.0, 2.0)), (vec![0, 1, 0, 3], C64::new(-0.5, 0.0))]).unwrap();
        let one = PolyC::one(4);
        let ord = OrderingK::standard(2);
        assert_eq!(star_poly(&one, &f, &ord, &p).unwrap(), f);
        assert_eq!(star_poly(&f, &one, &ord, &p).unwrap(), f);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = p1();
        let f = PolyC::one(4);
        assert!(matches!(
            star_poly(&f, &f, &OrderingK::weyl(1), &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quad_form_examples() {
        let p = p1();
        let z = CMatrix::zeros(2, 2);
        assert!(quad_form(&z, &p).unwrap().is_zero());
        let x = linalg::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        assert_eq!(
            quad_form(&x, &p).unwrap(),
            PolyC::from_terms(2, [(vec![1, 1], C64::from(2.0))]).unwrap()
        );
        assert_eq!(
            quad_form(&linalg::identity(2), &p).unwrap(),
            PolyC::from_terms(2, [(vec![2, 0], ONE), (vec![0, 2], ONE)]).unwrap()
        );
        let mut bad = linalg::identity(2);
        bad[(0, 1)] = ONE;
        assert_eq!(quad_form(&bad, &p), Err(Error::NotSymmetric));
    }

    #[test]
    fn quad_star_in_standard_ordering() {
        // sym(u*v) = uv + i/2 in the standard ordering, so 2 sym(u*v) = 2uv + i.
        let p = p1();
        let x = linalg::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let q = quad_star_k(&x, &OrderingK::standard(1), &p).unwrap();
        let want = PolyC::from_terms(2, [(vec![1, 1], C64::from(2.0)), (vec![0, 0], I)]).unwrap();
        assert!(q.distance(&want) < 1e-15);
        assert_eq!(quad_star_k(&x, &OrderingK::weyl(1), &p).unwrap(), quad_form(&x, &p).unwrap());
    }

    #[test]
    fn rank_one_examples() {
        let p = p1();
        let r = rank_one_b(&[ONE], ZERO, ZERO, ONE, &p).unwrap();
        assert_eq!(r.matrix, linalg::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap());
        assert_eq!(r.poly, PolyC::from_terms(2, [(vec![1, 1], C64::from(2.0))]).unwrap());
        assert_eq!(r.discriminant, ONE);

        let r0 = rank_one_b(&[ONE], ZERO, ZERO, ZERO, &p).unwrap();
        assert!(r0.poly.is_zero());

        let p2 = Params::new(2, 1.0).unwrap();
        let (al, be, ga) = (C64::new(0.5, 0.1), C64::new(-0.3, 0.0), C64::new(1.2, 0.4));
        let r2 = rank_one_b(&[ONE, ZERO], al, be, ga, &p2).unwrap();
        let want = PolyC::from_terms(
            4,
            [(vec![2, 0, 0, 0], al), (vec![0, 0, 2, 0], be), (vec![1, 0, 1, 0], ga * 2.0)],
        )
        .unwrap();
        assert!(r2.poly.distance(&want) < 1e-15);

        assert!(matches!(
            rank_one_b(&[C64::from(2.0)], ZERO, ZERO, ONE, &p),
            Err(Error::NotOnSphere { .. })
        ));
    }

    #[test]
    fn bracket_of_linear_forms() {
        let p = Params::new(3, 0.5).unwrap();
        let a = [C64::new(0.3, 0.2), C64::new(-1.0, 0.5), C64::new(0.1, 0.0)];
        let b = [C64::new(1.1, -0.2), C64::new(0.4, 0.0), C64::new(-0.7, 0.3)];
        for ord in [OrderingK::weyl(3), OrderingK::standard(3), OrderingK::antistandard(3)] {
            let c = bracket_uv(&a, &b, &ord, &p).unwrap();
            assert!((c - (-I * p.hbar * pairing(&a, &b))).norm() < 1e-14);
        }
    }

    #[test]
    fn substitute_linear_matches_evaluation() {
        let f = PolyC::from_terms(2, [(vec![2, 1], C64::new(1.0, -1.0)), (vec![0, 1], ONE)]).unwrap();
        let l = linalg::from_rows(&[vec![ONE, C64::from(2.0)], vec![I, ZERO]]).unwrap();
        let g = f.substitute_linear(&l);
        let z = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5)];
        let lz = [z[0] + z[1] * 2.0, z[0] * I];
        assert!((g.evaluate(&z) - f.evaluate(&lz)).norm() < 1e-14);
    }
}
