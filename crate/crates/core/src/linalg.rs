//! Dense complex linear algebra used by the star-exponential formulas.
//!
//! Matrices here are small (2m x 2m with m at desk scale), so everything is
//! plain `DMatrix<Complex64>` with LU-based determinants and inverses.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative threshold below which a determinant counts as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// The symplectic unit `[[0, -I], [I, 0]]` of size 2m.
pub fn symplectic_j(m: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        j[(k, m + k)] = -ONE;
        j[(m + k, k)] = ONE;
    }
    j
}

/// Maximum absolute row sum.
pub fn norm_inf(a: &CMatrix) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm_one(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_symmetric(a: &CMatrix, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = max_abs(a).max(1.0);
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).norm() <= tol * scale))
}

pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.transpose()).scale(0.5)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Builds a matrix from row-major nested rows.
pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Invalid("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

pub fn to_rows(a: &CMatrix) -> Vec<Vec<C64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring around a degree-13 Padé core.
pub fn mat_exp(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let n = m.nrows();
    let norm = norm_one(m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m.scale(2f64.powi(-squarings));
    let b = &PADE13;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);
    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom.lu().solve(&numer).ok_or(Error::NonFinite)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !is_finite(&r) {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

/// `(cos M, sin M)` from `exp(±iM)`.
pub fn mat_cos_sin(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let ep = mat_exp(&m.map(|z| z * I))?;
    let em = mat_exp(&m.map(|z| -z * I))?;
    let cos = (&ep + &em).scale(0.5);
    let sin = (&ep - &em).map(|z| z / (2.0 * I));
    Ok((cos, sin))
}

#[derive(Debug, Clone)]
pub struct Trig {
    pub cos: CMatrix,
    pub sin: CMatrix,
    pub tan: CMatrix,
}

/// cos, sin and tan of a square matrix. Fails with `SingularCos` when cos M
/// is not invertible.
pub fn mat_trig(m: &CMatrix) -> Result<Trig> {
    let (cos, sin) = mat_cos_sin(m)?;
    let (_, cos_inv) = det_inv(&cos).map_err(|e| match e {
        Error::Singular { det } => Error::SingularCos { det },
        other => other,
    })?;
    let tan = &sin * cos_inv;
    Ok(Trig { cos, sin, tan })
}

pub fn det(m: &CMatrix) -> C64 {
    m.clone().lu().determinant()
}

/// True when `|det| <= SINGULAR_TOL * max(||M||, 1)^dim`.
pub fn det_is_negligible(m: &CMatrix, d: C64) -> bool {
    let scale = norm_inf(m).max(1.0).powi(m.nrows() as i32);
    d.norm() <= SINGULAR_TOL * scale
}

/// Determinant and inverse.
pub fn det_inv(m: &CMatrix) -> Result<(C64, CMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let lu = m.clone().lu();
    let d = lu.determinant();
    if det_is_negligible(m, d) {
        return Err(Error::Singular { det: d.norm() });
    }
    let inv = lu.try_inverse().ok_or(Error::Singular { det: d.norm() })?;
    Ok((d, inv))
}

/// Inverse only, same singularity rule as [`det_inv`].
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    det_inv(m).map(|(_, inv)| inv)
}

/// A nonzero scalar together with the reference value that selects which
/// of its two square roots is meant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedScalar {
    pub value: C64,
    pub reference: C64,
}

impl BranchedScalar {
    pub fn new(value: C64, reference: C64) -> Result<Self> {
        if value == ZERO || reference == ZERO {
            return Err(Error::Invalid("branched scalar must be nonzero".into()));
        }
        Ok(Self { value, reference })
    }

    pub fn sqrt(&self) -> Result<C64> {
        sqrt_branch(self.value, self.reference)
    }
}

/// Square root of `w` on the branch closest in argument to `reference`.
pub fn sqrt_branch(w: C64, reference: C64) -> Result<C64> {
    if w == ZERO || reference == ZERO {
        return Err(Error::Invalid("sqrt_branch needs nonzero arguments".into()));
    }
    let s = w.sqrt();
    let d = (s / reference).arg().abs();
    let half_pi = std::f64::consts::FRAC_PI_2;
    if (d - half_pi).abs() < 1e-12 {
        return Err(Error::AmbiguousBranch);
    }
    Ok(if d < half_pi { s } else { -s })
}

/// A square-root continuation stopped because the function vanished (or the
/// step size underflowed) at this parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuationFailure {
    Singular(f64),
}

/// Continues `sqrt(d(tau))` along `tau` in `[0, 1]` from the value
/// `sqrt(d(0)) = start`, halving the step until consecutive samples differ
/// in argument by less than a quarter turn. `d` returns `None` where it is
/// singular.
pub fn continue_sqrt<F>(mut d: F, start: C64) -> std::result::Result<C64, ContinuationFailure>
where
    F: FnMut(f64) -> Option<C64>,
{
    const MIN_STEP: f64 = 1e-11;
    let quarter = std::f64::consts::FRAC_PI_4;
    let mut tau = 0.0;
    let mut prev = d(0.0).ok_or(ContinuationFailure::Singular(0.0))?;
    let mut root = start;
    let mut h: f64 = 1.0 / 16.0;
    while tau < 1.0 {
        let step = h.min(1.0 - tau);
        let next_tau = if step == 1.0 - tau { 1.0 } else { tau + step };
        let Some(w) = d(next_tau) else {
            if step < MIN_STEP {
                return Err(ContinuationFailure::Singular(next_tau));
            }
            h = step / 2.0;
            continue;
        };
        let close = |x: C64, y: C64| {
            let r = y / x;
            r.arg().abs() < quarter && r.norm() < 4.0 && r.norm() > 0.25
        };
        // The midpoint sample catches even-order zeros, which leave the
        // endpoint ratio unchanged.
        let ok = close(prev, w) && d(tau + step / 2.0).is_some_and(|mid| close(prev, mid) && close(mid, w));
        if !ok {
            if step < MIN_STEP {
                return Err(ContinuationFailure::Singular(next_tau));
            }
            h = step / 2.0;
            continue;
        }
        root = sqrt_branch(w, root).map_err(|_| ContinuationFailure::Singular(next_tau))?;
        prev = w;
        tau = next_tau;
        h = (step * 2.0).min(0.25);
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol * max_abs(b).max(1.0)
    }

    fn diag(v: &[C64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&CMatrix::zeros(4, 4)).unwrap();
        assert!(close(&e, &identity(4), 1e-15));
    }

    #[test]
    fn exp_of_rotation_generator() {
        for &t in &[0.3, 1.0, 2.5, 7.0] {
            let e = mat_exp(&symplectic_j(1).scale(t)).unwrap();
            let want = from_rows(&[
                vec![C64::from(t.cos()), C64::from(-t.sin())],
                vec![C64::from(t.sin()), C64::from(t.cos())],
            ])
            .unwrap();
            assert!(close(&e, &want, 1e-13), "t = {t}");
        }
    }

    #[test]
    fn exp_of_diagonal() {
        let e = mat_exp(&diag(&[I * PI, ZERO])).unwrap();
        assert!(close(&e, &diag(&[-ONE, ONE]), 1e-14));
    }

    #[test]
    fn exp_matches_taylor_series_on_dense_matrix() {
        // Taylor series with many terms is exact enough at moderate norm.
        let m = CMatrix::from_fn(3, 3, |i, j| {
            C64::new(0.3 * (i as f64) - 0.2 * (j as f64), 0.1 * ((i * j) as f64) - 0.25)
        });
        let mut term = identity(3);
        let mut sum = identity(3);
        for k in 1..60 {
            term = &term * &m / C64::from(k as f64);
            sum += &term;
        }
        assert!(close(&mat_exp(&m).unwrap(), &sum, 1e-13));
    }

    #[test]
    fn exp_rejects_non_finite() {
        let mut m = identity(2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert_eq!(mat_exp(&m), Err(Error::NonFinite));
    }

    #[test]
    fn trig_of_zero() {
        let t = mat_trig(&CMatrix::zeros(2, 2)).unwrap();
        assert!(close(&t.cos, &identity(2), 1e-15));
        assert!(max_abs(&t.sin) < 1e-15);
        assert!(max_abs(&t.tan) < 1e-15);
    }

    #[test]
    fn trig_of_diagonal_generator() {
        // JA = diag(-1, 1) for A = [[0,1],[1,0]]; cos is even so cos M = cos(s) I.
        let a = from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let ja = symplectic_j(1) * a;
        for &s in &[0.1, 0.7, 1.3] {
            let t = mat_trig(&ja.scale(s)).unwrap();
            assert!(close(&t.cos, &identity(2).scale(s.cos()), 1e-14));
            let want_sin = diag(&[C64::from(-s.sin()), C64::from(s.sin())]);
            assert!(close(&t.sin, &want_sin, 1e-14));
        }
    }

    #[test]
    fn trig_of_symplectic_unit_is_hyperbolic() {
        let j = symplectic_j(1);
        for &s in &[0.2, 1.0, 2.0] {
            let t = mat_trig(&j.scale(s)).unwrap();
            assert!(close(&t.cos, &identity(2).scale(s.cosh()), 1e-13));
            assert!(close(&t.sin, &j.scale(s.sinh()), 1e-13));
        }
    }

    #[test]
    fn tan_fails_on_singular_cos() {
        let m = identity(2).scale(PI / 2.0);
        assert!(matches!(mat_trig(&m), Err(Error::SingularCos { .. })));
    }

    #[test]
    fn det_inv_examples() {
        let (d, inv) = det_inv(&identity(3)).unwrap();
        assert_eq!(d, ONE);
        assert!(close(&inv, &identity(3), 0.0));

        let (d, inv) = det_inv(&diag(&[C64::from(2.0), C64::from(3.0)])).unwrap();
        assert!((d - C64::from(6.0)).norm() < 1e-15);
        assert!(close(&inv, &diag(&[C64::from(0.5), C64::from(1.0 / 3.0)]), 1e-15));

        let (c, _) = mat_cos_sin(&identity(2).scale(PI / 2.0)).unwrap();
        assert!(matches!(det_inv(&c), Err(Error::Singular { .. })));
    }

    #[test]
    fn sqrt_branch_examples() {
        assert_eq!(sqrt_branch(ONE, ONE).unwrap(), ONE);
        assert_eq!(sqrt_branch(ONE, -ONE).unwrap(), -ONE);
        assert_eq!(sqrt_branch(-ONE, ONE), Err(Error::AmbiguousBranch));
    }

    #[test]
    fn sqrt_branch_loop_flips_sign() {
        let mut prev = ONE;
        for k in 1..=8 {
            let w = C64::from_polar(1.0, k as f64 * PI / 4.0);
            prev = sqrt_branch(w, prev).unwrap();
        }
        assert!((prev + ONE).norm() < 1e-14);
    }

    #[test]
    fn continued_root_follows_the_winding() {
        // d(tau) = exp(2 pi i tau) winds once: sqrt comes back negated.
        let r = continue_sqrt(|t| Some(C64::from_polar(1.0, 2.0 * PI * t)), ONE).unwrap();
        assert!((r + ONE).norm() < 1e-12);
        // Winding twice returns to the start.
        let r = continue_sqrt(|t| Some(C64::from_polar(1.0, 4.0 * PI * t)), ONE).unwrap();
        assert!((r - ONE).norm() < 1e-12);
    }

    #[test]
    fn continuation_reports_zero_on_path() {
        let r = continue_sqrt(|t| Some(C64::from(1.0 - 2.0 * t)), ONE);
        assert!(matches!(r, Err(ContinuationFailure::Singular(_))));
    }

    #[test]
    fn branched_scalar_uses_its_reference() {
        let b = BranchedScalar::new(C64::from(4.0), C64::new(-1.0, 0.1)).unwrap();
        assert!((b.sqrt().unwrap() + C64::from(2.0)).norm() < 1e-15);
        assert!(BranchedScalar::new(ZERO, ONE).is_err());
    }
}
