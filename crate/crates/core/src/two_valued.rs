//! Polar elements, sign-sheet continuation and the blurred double cover.
//!
//! The polar element `eps00(a) = exp_*((pi / 2 hbar) B_*(0, 0, 1))` is
//! computed in the standard ordering, where it is finite. Its square is
//! `-1`, its adjoint action on linear forms is the reflection in `a`, and
//! products of two polar elements act by rotations. The elements
//! themselves are only defined up to sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{star_gauss_gauss, TwoValued};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::poly::{check_on_sphere, pairing, rank_one_b, OrderingK, Params};
use crate::star_exponential::{amplitude_determinant, star_exp_quadratic};

/// `eps00(a)` together with the vector it was built from.
#[derive(Debug, Clone)]
pub struct PolarElement {
    pub a: Vec<C64>,
    pub value: TwoValued,
}

/// The polar element for `a` on the complex sphere `<a, a> = 1`.
pub fn polar_element(a: &[C64], p: &Params) -> Result<PolarElement> {
    polar_from_rank_one(a, ZERO, ZERO, ONE, p)
}

/// `exp_*((pi / 2 hbar) B_*(alpha, beta, gamma))` in the standard ordering.
pub fn polar_from_rank_one(a: &[C64], alpha: C64, beta: C64, gamma: C64, p: &Params) -> Result<PolarElement> {
    check_on_sphere(a)?;
    let form = rank_one_b(a, alpha, beta, gamma, p)?;
    let t = C64::from(std::f64::consts::FRAC_PI_2 / p.hbar);
    let r = star_exp_quadratic(&form.matrix, &OrderingK::standard(p.m), p, t)?;
    Ok(PolarElement {
        a: a.to_vec(),
        value: r.element,
    })
}

/// Scalar profile of one family term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarFn {
    Const,
    Sin,
    Cos,
    Linear,
}

/// `f(freq * s) A` for one term of a family.
#[derive(Debug, Clone)]
pub struct FamilyTerm {
    pub func: ScalarFn,
    pub freq: f64,
    pub a: CMatrix,
}

/// A one-parameter family of symmetric generators `A(s) = sum_k f_k(s) A_k`.
#[derive(Debug, Clone)]
pub struct QuadraticFamily {
    pub terms: Vec<FamilyTerm>,
}

impl QuadraticFamily {
    pub fn new(terms: Vec<FamilyTerm>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::Invalid("family needs at least one term".into()));
        };
        let n = first.a.nrows();
        for term in &terms {
            if term.a.nrows() != n || term.a.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: term.a.nrows(),
                });
            }
            if !linalg::is_symmetric(&term.a, 1e-12) {
                return Err(Error::NotSymmetric);
            }
            if !term.freq.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { terms })
    }

    pub fn constant(a: CMatrix) -> Result<Self> {
        Self::new(vec![FamilyTerm {
            func: ScalarFn::Const,
            freq: 0.0,
            a,
        }])
    }

    /// The generators of `Ad(exp_*(i theta (u_k^2 + v_k^2) / 2 hbar)) 2 u_k v_k`
    /// with `s = 2 theta`: `sin s (u_k^2 - v_k^2) + cos s (2 u_k v_k)`.
    pub fn rotated_uv(k: usize, p: &Params) -> Result<Self> {
        if k >= p.m {
            return Err(Error::IndexOutOfRange { index: k + 1, m: p.m });
        }
        let n = p.dim();
        let mut diff = CMatrix::zeros(n, n);
        diff[(k, k)] = ONE;
        diff[(p.m + k, p.m + k)] = -ONE;
        let mut cross = CMatrix::zeros(n, n);
        cross[(k, p.m + k)] = ONE;
        cross[(p.m + k, k)] = ONE;
        Self::new(vec![
            FamilyTerm {
                func: ScalarFn::Sin,
                freq: 1.0,
                a: diff,
            },
            FamilyTerm {
                func: ScalarFn::Cos,
                freq: 1.0,
                a: cross,
            },
        ])
    }

    pub fn dim(&self) -> usize {
        self.terms[0].a.nrows()
    }

    pub fn at(&self, s: f64) -> CMatrix {
        let n = self.dim();
        self.terms.iter().fold(CMatrix::zeros(n, n), |acc, term| {
            let x = term.freq * s;
            let f = match term.func {
                ScalarFn::Const => 1.0,
                ScalarFn::Sin => x.sin(),
                ScalarFn::Cos => x.cos(),
                ScalarFn::Linear => x,
            };
            acc + term.a.scale(f)
        })
    }
}

/// Continuation record of the amplitude of `exp_*(t_end A(s))` along `s`.
#[derive(Debug, Clone)]
pub struct SheetPath {
    pub samples: Vec<f64>,
    pub branch_values: Vec<C64>,
    pub net_sign: i8,
}

const QUARTER: f64 = std::f64::consts::FRAC_PI_4;
const MIN_REL_STEP: f64 = 1e-11;

fn same_sheet(x: C64, y: C64) -> bool {
    let r = y / x;
    r.arg().abs() < QUARTER && r.norm() < 4.0 && r.norm() > 0.25
}

/// Continues the amplitude of `exp_*(t_end A(s))` through the samples of
/// `path`, inserting intermediate samples wherever the determinant turns
/// too fast. The start value is the one continued from `t = 0`; `net_sign`
/// compares the value reached at the end with the one continued from
/// `t = 0` there.
pub fn continue_sheet(
    family: &QuadraticFamily,
    ord: &OrderingK,
    p: &Params,
    t_end: C64,
    path: &[f64],
) -> Result<SheetPath> {
    if path.is_empty() {
        return Err(Error::Invalid("path needs at least one sample".into()));
    }
    if path.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    if family.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: family.dim(),
        });
    }
    ord.check(p)?;
    let det_at = |s: f64| -> Result<Option<C64>> {
        let a = family.at(s);
        let d = amplitude_determinant(&a, ord, p, t_end)?;
        let scale = linalg::max_abs(&a).max(1.0) * t_end.norm().max(1.0);
        Ok((d.norm() > 1e-12 * scale.powi(p.dim() as i32).max(1.0)).then_some(d))
    };

    let s0 = path[0];
    let start = star_exp_quadratic(&family.at(s0), ord, p, t_end)?;
    let g0 = start.element.representative().g();
    let mut det = det_at(s0)?.ok_or(Error::PathThroughSingularity(s0))?;
    let mut root = ONE / g0;
    let mut samples = vec![s0];
    let mut branch_values = vec![g0];

    for w in path.windows(2) {
        let (mut s, target) = (w[0], w[1]);
        let span = (target - s).abs();
        let mut h = target - s;
        while s != target {
            let step = if (target - s).abs() <= h.abs() { target - s } else { h };
            let next = if step == target - s { target } else { s + step };
            let accepted = match (det_at(next)?, det_at(s + step / 2.0)?) {
                (Some(d1), Some(mid)) => {
                    (same_sheet(det, d1) && same_sheet(det, mid) && same_sheet(mid, d1)).then_some(d1)
                }
                _ => None,
            };
            match accepted {
                Some(d1) => {
                    root = linalg::sqrt_branch(d1, root).map_err(|_| Error::PathThroughSingularity(next))?;
                    det = d1;
                    s = next;
                    samples.push(s);
                    branch_values.push(ONE / root);
                    h = step * 2.0;
                }
                None => {
                    if step.abs() < MIN_REL_STEP * span.max(1.0) {
                        return Err(Error::PathThroughSingularity(next));
                    }
                    h = step / 2.0;
                }
            }
        }
    }

    let end = *path.last().expect("non-empty path");
    let direct = star_exp_quadratic(&family.at(end), ord, p, t_end)?;
    let reached = *branch_values.last().expect("non-empty samples");
    let ratio = reached / direct.element.representative().g();
    if (ratio.norm() - 1.0).abs() > 1e-6 || ratio.im.abs() > 1e-6 {
        return Err(Error::Invalid(format!("continued amplitude ratio {ratio} is not a sign")));
    }
    Ok(SheetPath {
        samples,
        branch_values,
        net_sign: if ratio.re > 0.0 { 1 } else { -1 },
    })
}

/// `b - 2 <a, b> a`, the reflection of `b` in the hyperplane orthogonal to `a`.
pub fn reflect(a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    check_on_sphere(a)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let c = pairing(a, b) * 2.0;
    Ok(a.iter().zip(b).map(|(x, y)| y - c * x).collect())
}

fn reflection_matrix(a: &[C64]) -> CMatrix {
    let n = a.len();
    CMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { ONE } else { ZERO };
        delta - a[i] * a[j] * 2.0
    })
}

/// Matrix of `Ad(eps00(a) * eps00(b))` on the coefficient vectors of the
/// u-linear forms: the reflection in `a` composed with the reflection in `b`.
pub fn double_cover_rotation(a: &[C64], b: &[C64]) -> Result<CMatrix> {
    check_on_sphere(a)?;
    check_on_sphere(b)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(reflection_matrix(a) * reflection_matrix(b))
}

/// Product `eps00(a) * eps00(b)` as a two-valued element.
pub fn polar_product(a: &[C64], b: &[C64], p: &Params) -> Result<TwoValued> {
    let ea = polar_element(a, p)?.value.into_representative();
    let eb = polar_element(b, p)?.value.into_representative();
    star_gauss_gauss(&ea, &eb, &OrderingK::standard(p.m), p)
}

/// Two evaluations of the same polar element that disagree in sign once a
/// sign is fixed by the exponential law.
#[derive(Debug, Clone)]
pub struct SignParadox {
    /// `exp_*((pi / 2 hbar) B_*(0, 0, 1))` continued from `t = 0`.
    pub via_plus: TwoValued,
    /// `exp_*((pi / 2 hbar) B_*(0, 0, -1))` continued from `t = 0`.
    pub via_minus: TwoValued,
    /// Sign of `via_minus` relative to `via_plus`.
    pub relative_sign: i8,
    /// `via_plus * via_plus`, which the exponential law predicts to be `-1`.
    pub square: TwoValued,
}

/// Evaluates the polar element through `gamma = 1` and `gamma = -1`. Both are
/// `eps00(a)` by the independence of the rank-one parameters, yet the
/// continued amplitudes are `i` and `-i`: fixing a sign forces `-1 = 1`,
/// while equality up to sign is consistent.
pub fn sign_paradox(a: &[C64], p: &Params) -> Result<SignParadox> {
    let plus = polar_from_rank_one(a, ZERO, ZERO, ONE, p)?.value;
    let minus = polar_from_rank_one(a, ZERO, ZERO, -ONE, p)?.value;
    let relative_sign = plus
        .relative_sign(&minus, 1e-9)
        .ok_or_else(|| Error::Invalid("evaluations differ beyond sign".into()))?;
    let rep = plus.representative();
    let square = star_gauss_gauss(rep, rep, &OrderingK::standard(p.m), p)?;
    Ok(SignParadox {
        via_plus: plus,
        via_minus: minus,
        relative_sign,
        square,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{adjoint_poly, inverse, GaussianElement};
    use crate::linalg::I;
    use crate::poly::{u_form, v_form};
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    #[test]
    fn polar_element_in_one_variable() {
        let p = Params::new(1, 1.0).unwrap();
        let e = polar_element(&[ONE], &p).unwrap().value.into_representative();
        assert!((e.g() - I).norm() < 1e-12);
        assert!((e.q()[(0, 1)] - I).norm() < 1e-12);
        assert!(e.q()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn polar_square_and_inverse() {
        let p = Params::new(2, 0.8).unwrap();
        let a = [c(0.6), c(0.8)];
        let ord = OrderingK::standard(2);
        let e = polar_element(&a, &p).unwrap().value.into_representative();
        let sq = star_gauss_gauss(&e, &e, &ord, &p).unwrap().into_representative();
        assert!(sq.distance(&GaussianElement::constant(4, -ONE).unwrap()) < 1e-9);
        let inv = inverse(&e, &ord, &p).unwrap().into_representative();
        let one = star_gauss_gauss(&e, &inv, &ord, &p).unwrap().into_representative();
        assert!(one.distance(&GaussianElement::one(4)) < 1e-9);
    }

    #[test]
    fn polar_rejects_off_sphere() {
        let p = Params::new(2, 1.0).unwrap();
        assert!(matches!(polar_element(&[ONE, ONE], &p), Err(Error::NotOnSphere { .. })));
    }

    #[test]
    fn reflect_examples() {
        let b = [c(2.0), C64::new(0.5, 1.0), c(-3.0)];
        let r = reflect(&[ONE, ZERO, ZERO], &b).unwrap();
        assert_eq!(r, vec![c(-2.0), C64::new(0.5, 1.0), c(-3.0)]);
        let a = [c(0.6), c(0.8), ZERO];
        assert_eq!(reflect(&a, &[c(-0.8), c(0.6), ONE]).unwrap(), vec![c(-0.8), c(0.6), ONE]);
        let r = reflect(&a, &a).unwrap();
        assert!(r.iter().zip(&a).all(|(x, y)| (x + y).norm() < 1e-15));
    }

    #[test]
    fn reflect_matches_adjoint() {
        let p = Params::new(2, 1.0).unwrap();
        let a = [C64::new(1.2, 0.3), C64::new(0.0, 0.0)];
        let s = pairing(&a, &a).sqrt();
        let a = [a[0] / s, a[1] / s];
        let b = [C64::new(0.4, -0.2), C64::new(1.5, 0.7)];
        let e = polar_element(&a, &p).unwrap().value.into_representative();
        let ord = OrderingK::standard(2);
        let want = reflect(&a, &b).unwrap();
        let ad_u = adjoint_poly(&e, &u_form(&b, &p).unwrap(), &ord, &p).unwrap();
        assert!(ad_u.distance(&u_form(&want, &p).unwrap()) < 1e-9, "{ad_u}");
        let ad_v = adjoint_poly(&e, &v_form(&b, &p).unwrap(), &ord, &p).unwrap();
        assert!(ad_v.distance(&v_form(&want, &p).unwrap()) < 1e-9, "{ad_v}");
    }

    #[test]
    fn double_cover_rotation_by_twice_the_angle() {
        let th: f64 = 0.4;
        let a = [ONE, ZERO, ZERO];
        let b = [c(th.cos()), c(th.sin()), ZERO];
        let r = double_cover_rotation(&a, &b).unwrap();
        let (c2, s2) = ((2.0 * th).cos(), (2.0 * th).sin());
        let want = linalg::from_rows(&[
            vec![c(c2), c(s2), ZERO],
            vec![c(-s2), c(c2), ZERO],
            vec![ZERO, ZERO, ONE],
        ])
        .unwrap();
        // Rotation by -2 theta from a towards b: reflect in b first, then in a.
        assert!(linalg::max_abs(&(r.clone() - want)) < 1e-14, "{r}");
        let same = double_cover_rotation(&b, &b).unwrap();
        assert!(linalg::max_abs(&(same - linalg::identity(3))) < 1e-15);
    }

    #[test]
    fn polar_anticommute_but_square_to_minus_one() {
        let p = Params::new(2, 1.0).unwrap();
        let e1 = [ONE, ZERO];
        let e2 = [ZERO, ONE];
        let kl = polar_product(&e1, &e2, &p).unwrap();
        let lk = polar_product(&e2, &e1, &p).unwrap();
        let neg = TwoValued::new(lk.representative().negated());
        // Both relations hold at once for two-valued elements; the computed
        // representatives in disjoint variables commute on the nose.
        assert!(kl.equals(&neg, 1e-9));
        assert!(kl.equals(&lk, 1e-9));
        assert_eq!(kl.relative_sign(&lk, 1e-9), Some(1));
    }

    #[test]
    fn constant_path_keeps_sign() {
        let p = Params::new(1, 1.0).unwrap();
        let x = linalg::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let fam = QuadraticFamily::constant(x).unwrap();
        let path: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let sp = continue_sheet(&fam, &OrderingK::standard(1), &p, c(PI / 2.0), &path).unwrap();
        assert_eq!(sp.net_sign, 1);
    }

    #[test]
    fn rotating_uv_through_half_turn_flips_sign() {
        for hbar in [1.0, 0.5] {
            let p = Params::new(1, hbar).unwrap();
            let fam = QuadraticFamily::rotated_uv(0, &p).unwrap();
            let t = c(PI / (2.0 * hbar));
            let ord = OrderingK::standard(1);
            for n in [8, 16, 64] {
                let path: Vec<f64> = (0..=n).map(|i| PI * i as f64 / n as f64).collect();
                let sp = continue_sheet(&fam, &ord, &p, t, &path).unwrap();
                assert_eq!(sp.net_sign, -1);
                for w in sp.branch_values.windows(2) {
                    assert!((w[1] / w[0]).arg().abs() < PI / 2.0);
                }
            }
        }
    }

    #[test]
    fn theta_path_at_quarter_time_hits_singularity() {
        let p = Params::new(1, 1.0).unwrap();
        let fam = QuadraticFamily::rotated_uv(0, &p).unwrap();
        let path = [0.0, PI / 2.0, PI];
        let r = continue_sheet(&fam, &OrderingK::standard(1), &p, c(PI / 4.0), &path);
        assert!(matches!(r, Err(Error::PathThroughSingularity(_)) | Err(Error::SingularPoint { .. })), "{r:?}");
    }

    #[test]
    fn paradox_has_opposite_signs() {
        let p = Params::new(1, 1.0).unwrap();
        let px = sign_paradox(&[ONE], &p).unwrap();
        assert_eq!(px.relative_sign, -1);
        assert!(px.via_plus.equals(&px.via_minus, 1e-9));
        assert!((px.via_plus.representative().g() - I).norm() < 1e-9);
        assert!((px.via_minus.representative().g() + I).norm() < 1e-9);
        assert!((px.square.representative().g() + ONE).norm() < 1e-9);
    }
}
