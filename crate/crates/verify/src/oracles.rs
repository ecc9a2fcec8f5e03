//! Independent reference computations.

use weylstar::gaussian::{star_gauss_poly, GaussianElement, Side};
use weylstar::linalg::{self, CMatrix, C64, I};
use weylstar::poly::quad_star_k;
use weylstar::star_exponential::star_exp_quadratic;
use weylstar::{OrderingK, Params, PolyC, Result};

/// Weyl-ordered product of two Gaussians from the Gaussian integral
/// `(pi hbar)^{-n} int int f(z + x) g(z + y) exp((2i/hbar) x^T J y) dx dy`,
/// continued analytically in the exponents. The amplitude uses the
/// principal square root, so only its modulus and the exponent are
/// meaningful for comparisons.
pub fn weyl_gaussian_integral(f: &GaussianElement, g: &GaussianElement, p: &Params) -> Option<GaussianElement> {
    let n = p.dim();
    let j = linalg::symplectic_j(p.m);
    let ih = I / p.hbar;
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] = f.q()[(r, c)] * -2.0;
            m[(n + r, n + c)] = g.q()[(r, c)] * -2.0;
            m[(r, n + c)] = j[(r, c)] * ih * -2.0;
            m[(n + r, c)] = j[(c, r)] * ih * -2.0;
        }
    }
    let m_inv = linalg::inverse(&m).ok()?;
    let det = linalg::det(&m);
    // b(z) = (2 P z, 2 Q z) is linear in z, so b^T M^{-1} b / 2 = z^T E z.
    let mut bmap = CMatrix::zeros(2 * n, n);
    for r in 0..n {
        for c in 0..n {
            bmap[(r, c)] = f.q()[(r, c)] * 2.0;
            bmap[(n + r, c)] = g.q()[(r, c)] * 2.0;
        }
    }
    let e = (bmap.transpose() * m_inv * &bmap).scale(0.5);
    let q = linalg::symmetrize(&(f.q() + g.q() + e));
    let amp = C64::from((2.0 / p.hbar).powi(n as i32)) / det.sqrt();
    GaussianElement::new(f.g() * g.g() * amp, q).ok()
}

/// `max |d/dt F - A_* * F|` over the coefficients of the polynomial
/// prefactor, relative to the size of `A_* * F`, with a five-point central
/// difference.
pub fn evolution_residual(a: &CMatrix, ord: &OrderingK, p: &Params, t: f64) -> Result<f64> {
    let h = 1e-5;
    let at = |s: f64| -> Result<GaussianElement> {
        Ok(star_exp_quadratic(a, ord, p, C64::from(s))?.element.into_representative())
    };
    let f = at(t)?;
    let (f2p, f1p, f1m, f2m) = (at(t + 2.0 * h)?, at(t + h)?, at(t - h)?, at(t - 2.0 * h)?);
    let stencil = |x2p: C64, x1p: C64, x1m: C64, x2m: C64| (-x2p + x1p * 8.0 - x1m * 8.0 + x2m) / (12.0 * h);
    let dg = stencil(f2p.g(), f1p.g(), f1m.g(), f2m.g());
    let dq = CMatrix::from_fn(f.dim(), f.dim(), |i, j| {
        stencil(f2p.q()[(i, j)], f1p.q()[(i, j)], f1m.q()[(i, j)], f2m.q()[(i, j)])
    });
    // d/dt (g e^{Q}) = (g' + g Q'[z]) e^{Q}
    let n = p.dim();
    let mut fd = PolyC::constant(n, dg);
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0u32; n];
            e[i] += 1;
            e[j] += 1;
            fd.add_term(e, dq[(i, j)] * f.g());
        }
    }
    let gen = quad_star_k(a, ord, p)?;
    let exact = star_gauss_poly(&f, &gen, ord, p, Side::Left)?.scaled_prefactor();
    Ok(fd.sub(&exact).max_coeff() / exact.max_coeff().max(1e-300))
}
