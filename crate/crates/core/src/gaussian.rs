//! The Gaussian class `g exp(Q[z])` and its star-algebra operations.
//!
//! Products of two Gaussians are closed-form: the bidifferential operator of
//! the star product acts on `exp(x^T P x + y^T Q y)` as a heat flow, giving
//!
//! ```text
//! F1 * F2 = g1 g2 det(I - ab)^{-1/2} exp(z^T R z),
//! a = i hbar Gamma Q,  b = i hbar Gamma^T P,
//! R = P (I - ab)^{-1} (I + a) + Q (I - ba)^{-1} (I + b).
//! ```
//!
//! The square root is continued from 1 along `det(I - lambda ab)`,
//! `lambda` in `[0, 1]` (switching the deformation on), so products have a
//! definite representative. Different bracketings of a triple product can
//! land on opposite sheets; only the pair `{F, -F}` is meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ContinuationFailure, C64, I, ONE, ZERO};
use crate::poly::{star_series, OrderingK, Params, PolyC, SeriesFactor, PRUNE_REL};
use crate::star_exponential;

/// Records that an element was produced as `exp_*(t A_*)` in an ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub a: CMatrix,
    pub t: C64,
    pub ordering: OrderingK,
}

/// `g exp(z^T Q z)` with `g != 0` and `Q` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianElement {
    g: C64,
    q: CMatrix,
    provenance: Option<Provenance>,
}

impl GaussianElement {
    pub fn new(g: C64, q: CMatrix) -> Result<Self> {
        if g == ZERO || !(g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::Invalid("amplitude must be finite and nonzero".into()));
        }
        if !linalg::is_finite(&q) {
            return Err(Error::NonFinite);
        }
        if !linalg::is_symmetric(&q, 1e-9) {
            return Err(Error::NotSymmetric);
        }
        Ok(Self {
            g,
            q: linalg::symmetrize(&q),
            provenance: None,
        })
    }

    pub fn constant(dim: usize, g: C64) -> Result<Self> {
        Self::new(g, CMatrix::zeros(dim, dim))
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, ONE).expect("1 is a valid amplitude")
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn without_provenance(mut self) -> Self {
        self.provenance = None;
        self
    }

    pub fn g(&self) -> C64 {
        self.g
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.g = -out.g;
        out
    }

    pub(crate) fn with_amplitude(mut self, g: C64) -> Self {
        self.g = g;
        self
    }

    /// Exponent as a polynomial, `Q[z]`.
    pub fn exponent_poly(&self) -> PolyC {
        crate::poly::quad_form_unchecked(&self.q)
    }

    /// Pointwise value at a point `z`.
    pub fn evaluate(&self, z: &[C64]) -> C64 {
        let zv = nalgebra::DVector::from_column_slice(z);
        let e = (zv.transpose() * &self.q * &zv)[(0, 0)];
        self.g * e.exp()
    }

    /// Relative distance, `max(|dg|/|g|, |dQ|/max(1,|Q|))`.
    pub fn distance(&self, other: &Self) -> f64 {
        let dg = (self.g - other.g).norm() / other.g.norm();
        let dq = linalg::max_abs(&(&self.q - &other.q)) / linalg::max_abs(&other.q).max(1.0);
        dg.max(dq)
    }

    /// Distance ignoring the overall sign of the amplitude.
    pub fn distance_up_to_sign(&self, other: &Self) -> f64 {
        self.distance(other).min(self.negated().distance(other))
    }
}

/// `p(z) g exp(Q[z])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussPoly {
    pub prefactor: PolyC,
    pub core: GaussianElement,
}

impl GaussPoly {
    pub fn new(prefactor: PolyC, core: GaussianElement) -> Result<Self> {
        if prefactor.is_zero() {
            return Err(Error::Invalid("prefactor must be a nonzero polynomial".into()));
        }
        if prefactor.nvars() != core.dim() {
            return Err(Error::DimensionMismatch {
                expected: core.dim(),
                got: prefactor.nvars(),
            });
        }
        Ok(Self { prefactor, core })
    }

    pub fn from_gaussian(core: GaussianElement) -> Self {
        let n = core.dim();
        Self {
            prefactor: PolyC::one(n),
            core,
        }
    }

    /// The prefactor with the amplitude multiplied in.
    pub fn scaled_prefactor(&self) -> PolyC {
        self.prefactor.scale(self.core.g())
    }
}

/// An element known only up to global sign: the pair `{rep, -rep}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoValued {
    rep: GaussianElement,
}

impl TwoValued {
    pub fn new(rep: GaussianElement) -> Self {
        Self { rep }
    }

    pub fn representative(&self) -> &GaussianElement {
        &self.rep
    }

    pub fn into_representative(self) -> GaussianElement {
        self.rep
    }

    /// Equality of the pairs: same Q, amplitudes equal up to sign.
    pub fn equals(&self, other: &TwoValued, tol: f64) -> bool {
        self.rep.distance_up_to_sign(&other.rep) <= tol
    }

    /// `Some(+1)` / `Some(-1)` when this representative equals plus / minus the
    /// other one; `None` when the pairs differ.
    pub fn relative_sign(&self, other: &TwoValued, tol: f64) -> Option<i8> {
        if self.rep.distance(&other.rep) <= tol {
            Some(1)
        } else if self.rep.negated().distance(&other.rep) <= tol {
            Some(-1)
        } else {
            None
        }
    }

    /// The representative whose amplitude argument lies in `(-pi/2, pi/2]`.
    pub fn canonical(&self) -> GaussianElement {
        let half = std::f64::consts::FRAC_PI_2;
        let arg = self.rep.g.arg();
        if arg > -half && arg <= half {
            self.rep.clone()
        } else {
            self.rep.negated()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `f * F`
    Left,
    /// `F * f`
    Right,
}

fn check_dim(n: usize, p: &Params) -> Result<()> {
    if n != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: n,
        });
    }
    Ok(())
}

/// Star product of a Gaussian with a polynomial, evaluated exactly (the
/// series stops once every derivative of the polynomial is used up).
pub fn star_gauss_poly(
    f: &GaussianElement,
    poly: &PolyC,
    ord: &OrderingK,
    p: &Params,
    side: Side,
) -> Result<GaussPoly> {
    star_gausspoly_poly(&GaussPoly::from_gaussian(f.clone()), poly, ord, p, side)
}

/// Same as [`star_gauss_poly`] with a polynomial prefactor on the Gaussian.
pub fn star_gausspoly_poly(
    f: &GaussPoly,
    poly: &PolyC,
    ord: &OrderingK,
    p: &Params,
    side: Side,
) -> Result<GaussPoly> {
    check_dim(f.core.dim(), p)?;
    check_dim(poly.nvars(), p)?;
    ord.check(p)?;
    let gf = SeriesFactor {
        poly: &f.prefactor,
        gauss: Some(f.core.q()),
    };
    let pf = SeriesFactor { poly, gauss: None };
    let (l, r) = match side {
        Side::Left => (pf, gf),
        Side::Right => (gf, pf),
    };
    let prefactor = star_series(l, r, ord.gamma(), p.hbar);
    Ok(GaussPoly {
        prefactor,
        core: f.core.clone().without_provenance(),
    })
}

/// Closed-form exponent and `(I - ab)` for the product of two Gaussians.
struct ProductParts {
    r: CMatrix,
    ab: CMatrix,
}

fn product_parts(pl: &CMatrix, qr: &CMatrix, ord: &OrderingK, hbar: f64) -> Result<ProductParts> {
    let n = pl.nrows();
    let id = linalg::identity(n);
    let ih = I * hbar;
    let gamma = ord.gamma();
    let a = (gamma * qr).map(|z| z * ih);
    let b = (gamma.transpose() * pl).map(|z| z * ih);
    let ab = &a * &b;
    let ba = &b * &a;
    let s1 = linalg::inverse(&(&id - &ab)).map_err(|_| Error::ProductSingular)?;
    let s2 = linalg::inverse(&(&id - &ba)).map_err(|_| Error::ProductSingular)?;
    let r = pl * s1 * (&id + &a) + qr * s2 * (&id + &b);
    Ok(ProductParts { r, ab })
}

/// Amplitude factor `det(I - ab)^{-1/2}` continued from `lambda = 0`.
fn product_amplitude(ab: &CMatrix) -> Result<C64> {
    let n = ab.nrows();
    let id = linalg::identity(n);
    let root = linalg::continue_sqrt(
        |lambda| {
            let m = &id - ab.scale(lambda);
            let d = linalg::det(&m);
            (!linalg::det_is_negligible(&m, d)).then_some(d)
        },
        ONE,
    )
    .map_err(|ContinuationFailure::Singular(_)| Error::ProductSingular)?;
    Ok(ONE / root)
}

/// Star product of two Gaussians in the given ordering.
pub fn star_gauss_gauss(
    f1: &GaussianElement,
    f2: &GaussianElement,
    ord: &OrderingK,
    p: &Params,
) -> Result<TwoValued> {
    check_dim(f1.dim(), p)?;
    check_dim(f2.dim(), p)?;
    ord.check(p)?;
    let parts = product_parts(f1.q(), f2.q(), ord, p.hbar)?;
    let h = product_amplitude(&parts.ab)?;
    let q = linalg::symmetrize(&parts.r);
    let mut out = GaussianElement::new(f1.g() * f2.g() * h, q)?;

    // On a common one-parameter subgroup, pick the sheet reached by
    // continuing in t.
    if let (Some(a), Some(b)) = (f1.provenance(), f2.provenance()) {
        if a.a == b.a && a.ordering == b.ordering && a.ordering == *ord {
            let t = a.t + b.t;
            if let Ok(cont) = star_exponential::star_exp_quadratic(&a.a, ord, p, t) {
                let cont = cont.element.into_representative();
                if out.negated().distance(&cont) < out.distance(&cont) {
                    out = out.negated();
                }
                out = out.with_provenance(Provenance {
                    a: a.a.clone(),
                    t,
                    ordering: ord.clone(),
                });
            }
        }
    }
    Ok(TwoValued::new(out))
}

/// Star product of `p F` with a Gaussian `G`: `(p F) * G`.
pub fn star_gausspoly_gauss(
    f: &GaussPoly,
    g: &GaussianElement,
    ord: &OrderingK,
    p: &Params,
) -> Result<GaussPoly> {
    let lifted = left_divide(&f.prefactor, &f.core, ord, p)?;
    let fg = star_gauss_gauss(&f.core, g, ord, p)?.into_representative();
    star_gauss_poly(&fg, &lifted, ord, p, Side::Left)
}

/// Finds the polynomial `r` with `r * F = q F`.
pub fn left_divide(q: &PolyC, f: &GaussianElement, ord: &OrderingK, p: &Params) -> Result<PolyC> {
    check_dim(q.nvars(), p)?;
    let n = p.dim();
    // z_a * F = (L z)_a F with L = I + i hbar Gamma Q.
    let l = linalg::identity(n) + (ord.gamma() * f.q()).map(|z| z * I * p.hbar);
    let l_inv = linalg::inverse(&l).map_err(|_| Error::NoInverseInClass)?;
    let mut out = PolyC::zero(n);
    let mut rest = q.clone();
    let scale = q.max_coeff().max(1.0);
    let mut guard = 0;
    while !rest.is_zero() && rest.max_coeff() > 1e-14 * scale {
        let top = rest.homogeneous(rest.degree());
        let piece = top.substitute_linear(&l_inv);
        let produced = star_series(
            SeriesFactor {
                poly: &piece,
                gauss: None,
            },
            SeriesFactor {
                poly: &PolyC::one(n),
                gauss: Some(f.q()),
            },
            ord.gamma(),
            p.hbar,
        );
        out = out.add(&piece);
        let next = rest.sub(&produced);
        // The top-degree part cancels exactly up to rounding; drop it.
        let d = rest.degree();
        let mut trimmed = PolyC::zero(n);
        for (e, c) in next.terms() {
            if e.iter().map(|&x| x as i64).sum::<i64>() < d {
                trimmed.add_term(e.clone(), *c);
            }
        }
        rest = trimmed;
        guard += 1;
        if guard > 64 {
            return Err(Error::Invalid("left division did not terminate".into()));
        }
    }
    Ok(out.pruned(PRUNE_REL))
}

/// Star inverse within the Gaussian class. The representative is chosen so
/// that `F * inverse(F)` is `+1` on the product branch.
pub fn inverse(f: &GaussianElement, ord: &OrderingK, p: &Params) -> Result<TwoValued> {
    check_dim(f.dim(), p)?;
    ord.check(p)?;
    let n = p.dim();
    // In the Weyl ordering the inverse has exponent -Q; conjugating by the
    // intertwiner collapses to -Q (I + 2 i hbar K Q)^{-1}, which stays
    // defined even when Q itself has no Weyl image.
    let w = linalg::identity(n) + (ord.k() * f.q()).map(|z| z * I * (2.0 * p.hbar));
    let w_inv = linalg::inverse(&w).map_err(|_| Error::NoInverseInClass)?;
    let q_inv = linalg::symmetrize(&(f.q() * w_inv).map(|z| -z));
    let trial = GaussianElement::new(ONE, q_inv)?;
    let parts = product_parts(f.q(), trial.q(), ord, p.hbar).map_err(|_| Error::NoInverseInClass)?;
    let scale = linalg::max_abs(f.q()).max(1.0);
    if linalg::max_abs(&linalg::symmetrize(&parts.r)) > 1e-8 * scale * scale {
        return Err(Error::NoInverseInClass);
    }
    let h = product_amplitude(&parts.ab).map_err(|_| Error::NoInverseInClass)?;
    let mut out = trial.with_amplitude(ONE / (f.g() * h));
    debug_assert_eq!(out.dim(), n);
    if let Some(prov) = f.provenance() {
        out = out.with_provenance(Provenance {
            a: prov.a.clone(),
            t: -prov.t,
            ordering: prov.ordering.clone(),
        });
    }
    Ok(TwoValued::new(out))
}

/// `Ad(F) x = F * x * F^{-1}` on a polynomial. The sign ambiguity of `F`
/// cancels, so the result is an honest polynomial.
pub fn adjoint_poly(f: &GaussianElement, x: &PolyC, ord: &OrderingK, p: &Params) -> Result<PolyC> {
    let f_inv = inverse(f, ord, p)?.into_representative();
    let fx = star_gauss_poly(f, x, ord, p, Side::Right)?;
    // F * x = r * F, hence F * x * F^{-1} = r * (F * F^{-1}) = r.
    let r = left_divide(&fx.prefactor, &f.clone().without_provenance(), ord, p)?;
    let unit = star_gauss_gauss(f, &f_inv, ord, p)?.into_representative();
    debug_assert!(linalg::max_abs(unit.q()) < 1e-6);
    Ok(r.scale(unit.g()).pruned(PRUNE_REL))
}

/// `Ad(F) G = F * G * F^{-1}` on a Gaussian.
pub fn adjoint_gauss(
    f: &GaussianElement,
    g: &GaussianElement,
    ord: &OrderingK,
    p: &Params,
) -> Result<TwoValued> {
    let f_inv = inverse(f, ord, p)?.into_representative();
    let fg = star_gauss_gauss(f, g, ord, p)?.into_representative();
    star_gauss_gauss(&fg, &f_inv, ord, p)
}

/// Argument of an adjoint action.
#[derive(Debug, Clone)]
pub enum AdjointArg {
    Poly(PolyC),
    Gauss(GaussianElement),
}

#[derive(Debug, Clone)]
pub enum AdjointValue {
    Poly(PolyC),
    Gauss(TwoValued),
}

pub fn adjoint(f: &GaussianElement, x: &AdjointArg, ord: &OrderingK, p: &Params) -> Result<AdjointValue> {
    match x {
        AdjointArg::Poly(x) => adjoint_poly(f, x, ord, p).map(AdjointValue::Poly),
        AdjointArg::Gauss(g) => adjoint_gauss(f, g, ord, p).map(AdjointValue::Gauss),
    }
}

/// JSON form of a provenance record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<C64>>,
    pub t: C64,
    #[serde(rename = "K")]
    pub k: Vec<Vec<C64>>,
}

/// JSON form of a Gaussian element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianJson {
    pub g: C64,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<C64>>,
    pub two_valued: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceJson>,
}

impl GaussianElement {
    pub fn to_json(&self, two_valued: bool) -> GaussianJson {
        GaussianJson {
            g: self.g,
            q: linalg::to_rows(&self.q),
            two_valued,
            provenance: self.provenance.as_ref().map(|pr| ProvenanceJson {
                a: linalg::to_rows(&pr.a),
                t: pr.t,
                k: linalg::to_rows(pr.ordering.k()),
            }),
        }
    }

    pub fn from_json(j: &GaussianJson) -> Result<Self> {
        let mut out = Self::new(j.g, linalg::from_rows(&j.q)?)?;
        if let Some(pr) = &j.provenance {
            out = out.with_provenance(Provenance {
                a: linalg::from_rows(&pr.a)?,
                t: pr.t,
                ordering: OrderingK::new(linalg::from_rows(&pr.k)?)?,
            });
        }
        Ok(out)
    }
}
