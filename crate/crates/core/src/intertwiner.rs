//! Intertwiners between K-orderings.
//!
//! `T = exp(-(i hbar / 4) sum (K - K')_ij d_i d_j)` carries `*_K` to `*_K'`.
//! On polynomials it is a finite sum. On a Gaussian it acts by
//!
//! ```text
//! T(g exp(Q[z])) = g det(I + i hbar D Q)^{-1/2} exp(z^T Q (I + i hbar D Q)^{-1} z),  D = K - K',
//! ```
//!
//! which is only defined up to the sign of the square root.

use crate::error::{Error, Result};
use crate::gaussian::{GaussianElement, Provenance, TwoValued};
use crate::linalg::{self, CMatrix, ContinuationFailure, C64, I, ONE, ZERO};
use crate::poly::{OrderingK, Params, PolyC, PRUNE_REL};

fn check(f_dim: usize, from: &OrderingK, to: &OrderingK, p: &Params) -> Result<()> {
    if f_dim != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: f_dim,
        });
    }
    from.check(p)?;
    to.check(p)
}

/// `sum D_ij d_i d_j f`.
fn second_order(f: &PolyC, d: &CMatrix) -> PolyC {
    let n = f.nvars();
    let mut out = PolyC::zero(n);
    for i in 0..n {
        let fi = f.derivative(i);
        if fi.is_zero() {
            continue;
        }
        for j in 0..n {
            let c = d[(i, j)];
            if c != ZERO {
                out = out.add(&fi.derivative(j).scale(c));
            }
        }
    }
    out
}

/// Intertwines a polynomial from the `from` ordering to the `to` ordering.
pub fn intertwine_poly(f: &PolyC, from: &OrderingK, to: &OrderingK, p: &Params) -> Result<PolyC> {
    check(f.nvars(), from, to, p)?;
    let d = from.k() - to.k();
    let lambda = -I * (p.hbar / 4.0);
    let mut out = f.clone();
    let mut term = f.clone();
    let mut k = 0u32;
    while !term.is_zero() {
        k += 1;
        term = second_order(&term, &d).scale(lambda / k as f64);
        out = out.add(&term);
    }
    Ok(out.pruned(PRUNE_REL))
}

fn transform_matrix(q: &CMatrix, from: &OrderingK, to: &OrderingK, hbar: f64) -> CMatrix {
    let d = from.k() - to.k();
    (d * q).map(|z| z * I * hbar)
}

/// The exponent part of the Gaussian intertwiner, `Q (I + i hbar D Q)^{-1}`.
pub fn transform_exponent(q: &CMatrix, from: &OrderingK, to: &OrderingK, p: &Params) -> Result<CMatrix> {
    check(q.nrows(), from, to, p)?;
    let n = q.nrows();
    let w = linalg::identity(n) + transform_matrix(q, from, to, p.hbar);
    let inv = linalg::inverse(&w).map_err(|_| Error::NonInvertibleTransform)?;
    Ok(linalg::symmetrize(&(q * inv)))
}

/// Intertwines a Gaussian. The amplitude branch is continued along the
/// straight homotopy `K + s (K' - K)`, `s` in `[0, 1]`.
pub fn intertwine_gauss(
    f: &GaussianElement,
    from: &OrderingK,
    to: &OrderingK,
    p: &Params,
) -> Result<TwoValued> {
    check(f.dim(), from, to, p)?;
    let n = f.dim();
    let id = linalg::identity(n);
    let step = transform_matrix(f.q(), from, to, p.hbar);
    let root = linalg::continue_sqrt(
        |s| {
            let m = &id + step.scale(s);
            let d = linalg::det(&m);
            (!linalg::det_is_negligible(&m, d)).then_some(d)
        },
        ONE,
    )
    .map_err(|ContinuationFailure::Singular(_)| Error::NonInvertibleTransform)?;
    let q = transform_exponent(f.q(), from, to, p)?;
    let mut out = GaussianElement::new(f.g() / root, q)?;
    if let Some(pr) = f.provenance() {
        if pr.ordering == *from {
            out = out.with_provenance(Provenance {
                a: pr.a.clone(),
                t: pr.t,
                ordering: to.clone(),
            });
        }
    }
    Ok(TwoValued::new(out))
}

/// Scalar used by the polynomial intertwiner, exposed for diagnostics.
pub fn intertwiner_constant(p: &Params) -> C64 {
    -I * (p.hbar / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::star_poly;
    use crate::star_exponential::star_exp_quadratic;

    fn uv() -> PolyC {
        PolyC::from_terms(2, [(vec![1, 1], ONE)]).unwrap()
    }

    #[test]
    fn identity_when_orderings_agree() {
        let p = Params::new(1, 1.0).unwrap();
        let s = OrderingK::standard(1);
        assert_eq!(intertwine_poly(&uv(), &s, &s, &p).unwrap(), uv());
    }

    #[test]
    fn linear_forms_are_fixed() {
        let p = Params::new(2, 1.3).unwrap();
        let f = PolyC::linear(&[ONE, C64::new(0.2, 1.0), ZERO, C64::new(-3.0, 0.0)]);
        let r = intertwine_poly(&f, &OrderingK::standard(2), &OrderingK::antistandard(2), &p).unwrap();
        assert_eq!(r, f);
    }

    #[test]
    fn standard_to_weyl_on_uv() {
        // u *_std v = uv must map to u *_W v = uv - i/2.
        let p = Params::new(1, 1.0).unwrap();
        let r = intertwine_poly(&uv(), &OrderingK::standard(1), &OrderingK::weyl(1), &p).unwrap();
        let want = PolyC::from_terms(2, [(vec![1, 1], ONE), (vec![0, 0], -I * 0.5)]).unwrap();
        assert!(r.distance(&want) < 1e-15);
        let u = PolyC::generator(2, 0);
        let v = PolyC::generator(2, 1);
        let w = star_poly(&u, &v, &OrderingK::weyl(1), &p).unwrap();
        assert!(r.distance(&w) < 1e-15);
    }

    #[test]
    fn constants_keep_their_amplitude() {
        let p = Params::new(1, 1.0).unwrap();
        let c = GaussianElement::constant(2, C64::new(2.0, -1.0)).unwrap();
        let r = intertwine_gauss(&c, &OrderingK::weyl(1), &OrderingK::standard(1), &p).unwrap();
        assert!(r.representative().distance(&c) < 1e-15);
    }

    #[test]
    fn weyl_star_exponential_maps_to_standard_one() {
        let p = Params::new(1, 1.0).unwrap();
        let a = linalg::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let (w, s) = (OrderingK::weyl(1), OrderingK::standard(1));
        for &t in &[0.1, 0.4, 0.9] {
            let fw = star_exp_quadratic(&a, &w, &p, C64::from(t)).unwrap().element;
            let fs = star_exp_quadratic(&a, &s, &p, C64::from(t)).unwrap().element;
            let img = intertwine_gauss(fw.representative(), &w, &s, &p).unwrap();
            assert!(img.equals(&fs, 1e-12));
        }
    }
}
