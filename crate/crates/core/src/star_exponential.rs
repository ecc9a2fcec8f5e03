//! Star exponentials `exp_*(t A_*)` of quadratic forms.
//!
//! The star exponential is the solution of `dF/dt = A_{*K} *_K F`, `F(0) = 1`.
//! Inserting `F = g exp(Q[z])` reduces it to
//!
//! ```text
//! dQ/dt        = (I + i hbar Q Gamma^T) A (I + i hbar Gamma Q)
//! d(log g)/dt  = (i hbar / 2) Tr(A K) - (hbar^2 / 2) Tr(A Gamma Q Gamma^T)
//! ```
//!
//! whose solution, with `M = hbar t J A` and `C = cos M + i K J sin M`, is
//!
//! ```text
//! Q(t) = (-J / hbar) sin M C^{-1},    g(t) = det(C)^{-1/2}.
//! ```
//!
//! The amplitude is continued from `g(0) = 1` along the segment `[0, t]`.
//! [`ode_oracle_integrate`] integrates the reduced system directly and is
//! kept independent of the closed form.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianElement, Provenance, TwoValued};
use crate::linalg::{self, CMatrix, ContinuationFailure, C64, I, ONE, ZERO};
use crate::poly::{check_on_sphere, rank_one_b, OrderingK, Params};

/// `F_K(t)` together with its sheet: `+1` when the continued amplitude has
/// argument in `(-pi/2, pi/2]`, `-1` otherwise.
#[derive(Debug, Clone)]
pub struct StarExpResult {
    pub element: TwoValued,
    pub sheet: i8,
}

fn check_generator(a: &CMatrix, ord: &OrderingK, p: &Params) -> Result<()> {
    if a.nrows() != p.dim() || a.ncols() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: a.nrows(),
        });
    }
    if !linalg::is_symmetric(a, 1e-12) {
        return Err(Error::NotSymmetric);
    }
    ord.check(p)
}

struct ClosedForm {
    c: CMatrix,
    sin: CMatrix,
}

fn closed_form_parts(a: &CMatrix, ord: &OrderingK, p: &Params, t: C64) -> Result<ClosedForm> {
    let j = linalg::symplectic_j(p.m);
    let m = (&j * a).map(|z| z * t * p.hbar);
    let (cos, sin) = linalg::mat_cos_sin(&m)?;
    let kj = ord.k() * &j;
    let c = cos + (kj * &sin).map(|z| z * I);
    Ok(ClosedForm { c, sin })
}

/// `det(cos M + i K J sin M)` at time `t`; zeros are the singular set.
pub fn amplitude_determinant(a: &CMatrix, ord: &OrderingK, p: &Params, t: C64) -> Result<C64> {
    check_generator(a, ord, p)?;
    Ok(linalg::det(&closed_form_parts(a, ord, p, t)?.c))
}

fn singular_at(t: C64) -> Error {
    Error::SingularPoint { re: t.re, im: t.im }
}

/// Closed-form star exponential of `t A_*` in the ordering `ord`.
pub fn star_exp_quadratic(a: &CMatrix, ord: &OrderingK, p: &Params, t: C64) -> Result<StarExpResult> {
    check_generator(a, ord, p)?;
    let a = linalg::symmetrize(a);
    let root = linalg::continue_sqrt(
        |tau| {
            let c = closed_form_parts(&a, ord, p, t * tau).ok()?.c;
            let d = linalg::det(&c);
            (!linalg::det_is_negligible(&c, d)).then_some(d)
        },
        ONE,
    )
    .map_err(|ContinuationFailure::Singular(tau)| singular_at(t * tau))?;
    let parts = closed_form_parts(&a, ord, p, t)?;
    let c_inv = linalg::inverse(&parts.c).map_err(|_| singular_at(t))?;
    let j = linalg::symplectic_j(p.m);
    let q = (j * parts.sin * c_inv).map(|z| -z / p.hbar);
    let g = ONE / root;
    let element = GaussianElement::new(g, linalg::symmetrize(&q))?.with_provenance(Provenance {
        a,
        t,
        ordering: ord.clone(),
    });
    let half = std::f64::consts::FRAC_PI_2;
    let sheet = if g.arg() > -half && g.arg() <= half { 1 } else { -1 };
    Ok(StarExpResult {
        element: TwoValued::new(element),
        sheet,
    })
}

/// Star exponential in the Weyl ordering (`K = 0`), where the formula
/// reads `det(cos M)^{-1/2} exp((-J/hbar) tan M [z])`.
pub fn star_exp_weyl(a: &CMatrix, p: &Params, t: C64) -> Result<StarExpResult> {
    star_exp_quadratic(a, &OrderingK::weyl(p.m), p, t)
}

fn check_rank_one(a: &[C64], alpha: C64, beta: C64, gamma: C64, p: &Params) -> Result<CMatrix> {
    check_on_sphere(a)?;
    let form = rank_one_b(a, alpha, beta, gamma, p)?;
    if (form.discriminant - ONE).norm() > 1e-12 {
        return Err(Error::Invalid(format!(
            "rank-one form needs gamma^2 - alpha beta = 1, got {}",
            form.discriminant
        )));
    }
    Ok(form.matrix)
}

/// `<a,u>^2`, `<a,v>^2`, `<a,u><a,v>` blocks scaled by x, y, z.
fn rank_one_exponent(a: &[C64], x: C64, y: C64, z: C64, p: &Params) -> CMatrix {
    let m = p.m;
    let mut q = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let aa = a[i] * a[j];
            q[(i, j)] = x * aa;
            q[(m + i, m + j)] = y * aa;
            q[(i, m + j)] = z * aa;
            q[(m + i, j)] = z * aa;
        }
    }
    q
}

/// Rank-one star exponential in the Weyl ordering:
/// `g_M = (cos hbar t)^{-1}`, `Q_M = (tan hbar t / hbar) B`.
pub fn rank_one_fm(
    t: C64,
    alpha: C64,
    beta: C64,
    gamma: C64,
    a: &[C64],
    p: &Params,
) -> Result<GaussianElement> {
    let b = check_rank_one(a, alpha, beta, gamma, p)?;
    let s = t * p.hbar;
    let cos = s.cos();
    if cos.norm() <= linalg::SINGULAR_TOL {
        return Err(singular_at(t));
    }
    let tan = s.sin() / cos;
    let q = b.map(|z| z * tan / p.hbar);
    Ok(GaussianElement::new(ONE / cos, q)?.with_provenance(Provenance {
        a: b,
        t,
        ordering: OrderingK::weyl(p.m),
    }))
}

/// `cos 2 hbar t - i gamma sin 2 hbar t`.
fn fn_denominator(t: C64, gamma: C64, hbar: f64) -> C64 {
    let s2 = t * (2.0 * hbar);
    s2.cos() - I * gamma * s2.sin()
}

/// Coefficients `(X_N, Y_N, Z_N)` of the standard-ordered rank-one exponent.
pub fn rank_one_xyz(t: C64, alpha: C64, beta: C64, gamma: C64, hbar: f64) -> (C64, C64, C64) {
    let den = fn_denominator(t, gamma, hbar);
    let ratio = (t * (2.0 * hbar)).sin() / den;
    (
        alpha / 2.0 * ratio,
        beta / 2.0 * ratio,
        I / 2.0 * (ONE - ONE / den),
    )
}

/// Rank-one star exponential in the standard ordering, evaluated with the
/// amplitude `g_N = e^{-i hbar t gamma} (cos 2 hbar t - i gamma sin 2 hbar t)^{-1/2}`
/// in its classical closed form; the square root is continued from `t = 0`.
///
/// The exponent agrees with [`star_exp_quadratic`]; the prefactor
/// `e^{-i hbar t gamma}` does not (the evolution equation gives no such
/// factor), so use [`rank_one_fn_amplitude_ratio`] to measure the gap.
pub fn rank_one_fn(
    t: C64,
    alpha: C64,
    beta: C64,
    gamma: C64,
    a: &[C64],
    p: &Params,
) -> Result<GaussianElement> {
    let b = check_rank_one(a, alpha, beta, gamma, p)?;
    let hbar = p.hbar;
    let root = linalg::continue_sqrt(
        |tau| {
            let d = fn_denominator(t * tau, gamma, hbar);
            (d.norm() > linalg::SINGULAR_TOL).then_some(d)
        },
        ONE,
    )
    .map_err(|ContinuationFailure::Singular(tau)| singular_at(t * tau))?;
    let (x, y, z) = rank_one_xyz(t, alpha, beta, gamma, hbar);
    let q = rank_one_exponent(a, x, y, z, p).map(|w| w / hbar);
    let g = (-I * hbar * t * gamma).exp() / root;
    Ok(GaussianElement::new(g, q)?.with_provenance(Provenance {
        a: b,
        t,
        ordering: OrderingK::standard(p.m),
    }))
}

/// Ratio of the closed-form `g_N` to the amplitude obtained from the evolution
/// equation at the same `t` (both continued from `t = 0`).
pub fn rank_one_fn_amplitude_ratio(
    t: C64,
    alpha: C64,
    beta: C64,
    gamma: C64,
    a: &[C64],
    p: &Params,
) -> Result<C64> {
    let closed = rank_one_fn(t, alpha, beta, gamma, a, p)?;
    let b = closed.provenance().expect("rank_one_fn sets provenance").a.clone();
    let oracle = ode_oracle_integrate(&b, &OrderingK::standard(p.m), p, t, 400)?;
    Ok(closed.g() / oracle.g())
}

struct OdeState {
    log_g: C64,
    q: CMatrix,
}

struct OdeSystem<'a> {
    a: &'a CMatrix,
    k: &'a CMatrix,
    gamma: &'a CMatrix,
    gamma_t: CMatrix,
    hbar: f64,
    trace_ak: C64,
}

impl<'a> OdeSystem<'a> {
    fn new(a: &'a CMatrix, ord: &'a OrderingK, hbar: f64) -> Self {
        Self {
            a,
            k: ord.k(),
            gamma: ord.gamma(),
            gamma_t: ord.gamma().transpose(),
            hbar,
            trace_ak: linalg::trace(&(a * ord.k())),
        }
    }

    /// Derivative with respect to `t`.
    fn rhs(&self, q: &CMatrix) -> (C64, CMatrix) {
        let n = q.nrows();
        let ih = I * self.hbar;
        let left = linalg::identity(n) + (q * &self.gamma_t).map(|z| z * ih);
        let right = linalg::identity(n) + (self.gamma * q).map(|z| z * ih);
        let dq = left * self.a * right;
        let tr = linalg::trace(&(self.a * self.gamma * q * &self.gamma_t));
        let dlog = ih / 2.0 * self.trace_ak - tr * (self.hbar * self.hbar / 2.0);
        let _ = self.k;
        (dlog, dq)
    }

    /// `steps` RK4 steps of size `h`. A step whose two half steps disagree
    /// wildly has a pole of `Q` inside it.
    fn fixed_steps(&self, mut state: OdeState, h: C64, steps: usize, offset: usize) -> Result<OdeState> {
        for k in 0..steps {
            let next = self.rk4(&state, h);
            let half = self.rk4(&self.rk4(&state, h / 2.0), h / 2.0);
            let scale = linalg::max_abs(&half.q).max(1.0);
            let gap = linalg::max_abs(&(&next.q - &half.q)) / scale;
            if !linalg::is_finite(&next.q) || !next.log_g.re.is_finite() || gap > JUMP || linalg::max_abs(&next.q) > BLOWUP {
                return Err(Error::SingularEncountered { step: offset + k });
            }
            state = next;
        }
        Ok(state)
    }

    /// One classical RK4 step of size `h` (complex) along the segment.
    fn rk4(&self, s: &OdeState, h: C64) -> OdeState {
        let (l1, q1) = self.rhs(&s.q);
        let (l2, q2) = self.rhs(&(&s.q + q1.map(|z| z * h / 2.0)));
        let (l3, q3) = self.rhs(&(&s.q + q2.map(|z| z * h / 2.0)));
        let (l4, q4) = self.rhs(&(&s.q + q3.map(|z| z * h)));
        let dq = (q1 + q2.scale(2.0) + q3.scale(2.0) + q4).map(|z| z * h / 6.0);
        OdeState {
            log_g: s.log_g + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4),
            q: &s.q + dq,
        }
    }
}

const BLOWUP: f64 = 1e10;
const JUMP: f64 = 0.1;

fn finished(state: OdeState) -> Result<GaussianElement> {
    GaussianElement::new(state.log_g.exp(), linalg::symmetrize(&state.q))
}

/// Integrates the reduced `(g, Q)` system with `steps` fixed RK4 steps along
/// the straight segment from 0 to `t`. The amplitude is carried as `log g`,
/// so its branch is the one reached continuously from `g(0) = 1`.
pub fn ode_oracle_integrate(
    a: &CMatrix,
    ord: &OrderingK,
    p: &Params,
    t: C64,
    steps: usize,
) -> Result<GaussianElement> {
    check_generator(a, ord, p)?;
    if steps == 0 {
        return Err(Error::StepUnderflow);
    }
    let a = linalg::symmetrize(a);
    let sys = OdeSystem::new(&a, ord, p.hbar);
    let start = OdeState {
        log_g: ZERO,
        q: CMatrix::zeros(p.dim(), p.dim()),
    };
    finished(sys.fixed_steps(start, t / steps as f64, steps, 0)?)
}

/// Runs [`ode_oracle_integrate`] once through the real times `ts`
/// (non-decreasing, starting at or after 0), using
/// `ceil(steps_per_unit * length)` steps on each interval, and returns the
/// solution at every sample.
pub fn ode_oracle_samples(
    a: &CMatrix,
    ord: &OrderingK,
    p: &Params,
    ts: &[f64],
    steps_per_unit: usize,
) -> Result<Vec<GaussianElement>> {
    check_generator(a, ord, p)?;
    if steps_per_unit == 0 {
        return Err(Error::StepUnderflow);
    }
    if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[1] < w[0]) || ts.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Invalid("sample times must be finite, non-negative and sorted".into()));
    }
    let a = linalg::symmetrize(a);
    let sys = OdeSystem::new(&a, ord, p.hbar);
    let mut state = OdeState {
        log_g: ZERO,
        q: CMatrix::zeros(p.dim(), p.dim()),
    };
    let (mut now, mut taken) = (0.0, 0);
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let len = t - now;
        if len > 0.0 {
            let steps = ((len * steps_per_unit as f64).ceil() as usize).max(1);
            state = sys.fixed_steps(state, C64::from(len / steps as f64), steps, taken)?;
            taken += steps;
        }
        now = t;
        out.push(GaussianElement::new(state.log_g.exp(), linalg::symmetrize(&state.q))?);
    }
    Ok(out)
}

/// Adaptive variant of [`ode_oracle_integrate`] with step doubling: each
/// step is accepted when one full step and two half steps agree to `tol`.
pub fn ode_oracle_adaptive(
    a: &CMatrix,
    ord: &OrderingK,
    p: &Params,
    t: C64,
    tol: f64,
) -> Result<GaussianElement> {
    check_generator(a, ord, p)?;
    let a = linalg::symmetrize(a);
    let sys = OdeSystem::new(&a, ord, p.hbar);
    let mut state = OdeState {
        log_g: ZERO,
        q: CMatrix::zeros(p.dim(), p.dim()),
    };
    if t == ZERO {
        return finished(state);
    }
    let mut tau: f64 = 0.0;
    let mut h: f64 = 1.0 / 32.0;
    let mut step = 0;
    while tau < 1.0 {
        let dt = h.min(1.0 - tau);
        let full = sys.rk4(&state, t * dt);
        let half = sys.rk4(&state, t * (dt / 2.0));
        let two = sys.rk4(&half, t * (dt / 2.0));
        let scale = linalg::max_abs(&two.q).max(1.0);
        let err = (linalg::max_abs(&(&full.q - &two.q)) / scale).max((full.log_g - two.log_g).norm());
        if !err.is_finite() || err > tol {
            h = dt / 2.0;
            if h < 1e-12 {
                return Err(Error::StepUnderflow);
            }
            continue;
        }
        state = two;
        tau += dt;
        step += 1;
        if linalg::max_abs(&state.q) > BLOWUP {
            return Err(Error::SingularEncountered { step });
        }
        if err < tol / 32.0 {
            h = (dt * 2.0).min(0.25);
        }
    }
    finished(state)
}

/// Rectangle `[re.0, re.1] x [im.0, im.1]` in the complex t-plane with an
/// `nx x ny` sampling grid. A zero-height rectangle scans a real segment.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScanRegion {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub grid: (usize, usize),
}

/// Locates zeros of `det(cos M + i K J sin M)` inside the region. Grid
/// minima of the modulus seed a Newton iteration on `D / D'`, whose zeros
/// are simple even where `D` has a multiple zero; roots are accepted when
/// the step falls below `1e-12` and `|D|` is negligible there.
pub fn singular_scan(a: &CMatrix, ord: &OrderingK, p: &Params, region: &ScanRegion) -> Result<Vec<C64>> {
    check_generator(a, ord, p)?;
    let (nx, ny) = (region.grid.0.max(2), region.grid.1.max(1));
    let flat = region.im.0 == region.im.1 || region.grid.1 <= 1;
    let ny = if flat { 1 } else { ny.max(2) };
    let point = |i: usize, j: usize| {
        let x = region.re.0 + (region.re.1 - region.re.0) * i as f64 / (nx - 1) as f64;
        let y = if ny == 1 {
            region.im.0
        } else {
            region.im.0 + (region.im.1 - region.im.0) * j as f64 / (ny - 1) as f64
        };
        C64::new(x, y)
    };
    let det_at = |t: C64| amplitude_determinant(a, ord, p, t);
    let values: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| det_at(point(idx % nx, idx / nx)).map(|d| d.norm()))
        .collect::<Result<Vec<_>>>()?;
    let at = |i: usize, j: usize| values[j * nx + i];

    let mut candidates = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j);
            let mut strictly_lower = false;
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                    continue;
                }
                let w = at(ii as usize, jj as usize);
                if w < v {
                    is_min = false;
                }
                if w > v * (1.0 + 1e-6) + 1e-300 {
                    strictly_lower = true;
                }
            }
            if is_min && strictly_lower {
                candidates.push(point(i, j));
            }
        }
    }

    let cell = C64::new(
        (region.re.1 - region.re.0).abs() / (nx - 1) as f64,
        if ny == 1 { 0.0 } else { (region.im.1 - region.im.0).abs() / (ny - 1) as f64 },
    );
    let margin = cell.re.max(cell.im) * 1e-9 + 1e-12;
    let inside = |t: C64| {
        t.re >= region.re.0.min(region.re.1) - margin
            && t.re <= region.re.0.max(region.re.1) + margin
            && t.im >= region.im.0.min(region.im.1) - margin
            && t.im <= region.im.0.max(region.im.1) + margin
    };

    let mut roots: Vec<C64> = candidates
        .par_iter()
        .filter_map(|&t0| refine_root(&det_at, t0).filter(|&t| inside(t)))
        .collect();
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut out: Vec<C64> = Vec::new();
    for r in roots {
        if out.last().is_none_or(|l: &C64| (l - r).norm() > 1e-7) {
            out.push(r);
        }
    }
    Ok(out)
}

fn refine_root<F>(det_at: &F, t0: C64) -> Option<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut t = t0;
    for _ in 0..100 {
        let h = 1e-4 * t.norm().max(1.0);
        let d0 = det_at(t).ok()?;
        if d0 == ZERO {
            return Some(t);
        }
        let dp = det_at(t + h).ok()?;
        let dm = det_at(t - h).ok()?;
        let d1 = (dp - dm) / (2.0 * h);
        let d2 = (dp - 2.0 * d0 + dm) / (h * h);
        // Newton on f = D / D': f' = 1 - D D'' / D'^2.
        let denom = d1 * d1 - d0 * d2;
        if denom == ZERO {
            return None;
        }
        let step = d0 * d1 / denom;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        t -= step;
        if step.norm() < 1e-12 * t.norm().max(1.0) {
            let d = det_at(t).ok()?;
            return (d.norm() < 1e-8).then_some(t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn x_matrix() -> CMatrix {
        linalg::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap()
    }

    fn p1() -> Params {
        Params::new(1, 1.0).unwrap()
    }

    #[test]
    fn zero_time_gives_one() {
        for ord in [OrderingK::weyl(2), OrderingK::standard(2)] {
            let a = CMatrix::from_fn(4, 4, |i, j| C64::from(((i + j) % 3) as f64 * 0.2));
            let p = Params::new(2, 1.0).unwrap();
            let r = star_exp_quadratic(&a, &ord, &p, ZERO).unwrap();
            let e = r.element.representative();
            assert_eq!(e.g(), ONE);
            assert!(linalg::max_abs(e.q()) == 0.0);
            assert_eq!(r.sheet, 1);
        }
    }

    #[test]
    fn weyl_uv_matches_cos_and_tan() {
        let p = Params::new(1, 0.7).unwrap();
        for &t in &[0.2, 1.0, 1.9] {
            let r = star_exp_weyl(&x_matrix(), &p, C64::from(t)).unwrap();
            let e = r.element.representative();
            let s = p.hbar * t;
            assert!((e.g() - C64::from(1.0 / s.cos())).norm() < 1e-12);
            assert!((e.q()[(0, 1)] - C64::from(s.tan() / p.hbar)).norm() < 1e-12);
            assert!(e.q()[(0, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn weyl_uv_is_singular_at_quarter_period() {
        let r = star_exp_weyl(&x_matrix(), &p1(), C64::from(PI / 2.0));
        assert!(matches!(r, Err(Error::SingularPoint { .. })));
        // and past it, since the segment crosses the singular point
        let r = star_exp_weyl(&x_matrix(), &p1(), C64::from(2.0));
        assert!(matches!(r, Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn standard_uv_at_quarter_period_is_polar() {
        let r = star_exp_quadratic(&x_matrix(), &OrderingK::standard(1), &p1(), C64::from(PI / 2.0)).unwrap();
        let e = r.element.representative();
        assert!((e.g() - I).norm() < 1e-12, "{}", e.g());
        assert!((e.q()[(0, 1)] - I).norm() < 1e-12);
        assert!(e.q()[(0, 0)].norm() < 1e-12 && e.q()[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn weyl_circle_generator_is_hyperbolic() {
        let p = Params::new(1, 1.3).unwrap();
        let t = 0.6;
        let e = star_exp_weyl(&linalg::identity(2), &p, C64::from(t)).unwrap().element.into_representative();
        let s = p.hbar * t;
        assert!((e.g() - C64::from(1.0 / s.cosh())).norm() < 1e-12);
        assert!(linalg::max_abs(&(e.q() - linalg::identity(2).scale(s.tanh() / p.hbar))) < 1e-12);
    }

    #[test]
    fn block_diagonal_generator_factorizes() {
        let p2 = Params::new(2, 1.0).unwrap();
        // A acts on (u1, v1) as X and on (u2, v2) as identity.
        let mut a = CMatrix::zeros(4, 4);
        a[(0, 2)] = ONE;
        a[(2, 0)] = ONE;
        a[(1, 1)] = ONE;
        a[(3, 3)] = ONE;
        let t = C64::from(0.4);
        let e = star_exp_weyl(&a, &p2, t).unwrap().element.into_representative();
        let e1 = star_exp_weyl(&x_matrix(), &p1(), t).unwrap().element.into_representative();
        let e2 = star_exp_weyl(&linalg::identity(2), &p1(), t).unwrap().element.into_representative();
        assert!((e.g() - e1.g() * e2.g()).norm() < 1e-12);
        assert!((e.q()[(0, 2)] - e1.q()[(0, 1)]).norm() < 1e-12);
        assert!((e.q()[(1, 1)] - e2.q()[(0, 0)]).norm() < 1e-12);
        assert!(e.q()[(0, 1)].norm() < 1e-13);
    }

    #[test]
    fn rank_one_fm_values() {
        let p = p1();
        let e = rank_one_fm(C64::from(0.3), ZERO, ZERO, ONE, &[ONE], &p).unwrap();
        assert!((e.g() - C64::from(1.0 / 0.3f64.cos())).norm() < 1e-15);
        let e0 = rank_one_fm(ZERO, ZERO, ZERO, ONE, &[ONE], &p).unwrap();
        assert_eq!(e0.g(), ONE);
        assert!(matches!(
            rank_one_fm(C64::from(PI / 2.0), ZERO, ZERO, ONE, &[ONE], &p),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn rank_one_xyz_simplifies_for_unit_gamma() {
        for &t in &[0.1, 0.8, 2.0] {
            let (_, _, z) = rank_one_xyz(C64::from(t), ZERO, ZERO, ONE, 1.0);
            let want = I / 2.0 * (ONE - C64::from_polar(1.0, 2.0 * t));
            assert!((z - want).norm() < 1e-14);
        }
        let e0 = rank_one_fn(ZERO, ZERO, ZERO, ONE, &[ONE], &p1()).unwrap();
        assert_eq!(e0.g(), ONE);
    }

    #[test]
    fn closed_form_fn_prefactor_differs_from_evolution() {
        let t = C64::from(0.5);
        let ratio = rank_one_fn_amplitude_ratio(t, ZERO, ZERO, ONE, &[ONE], &p1()).unwrap();
        assert!((ratio - (-I * 0.5).exp()).norm() < 1e-8, "{ratio}");
    }

    #[test]
    fn ode_oracle_matches_closed_form() {
        let p = p1();
        let a = linalg::from_rows(&[
            vec![C64::new(0.3, 0.2), C64::new(-0.5, 0.1)],
            vec![C64::new(-0.5, 0.1), C64::new(0.7, -0.3)],
        ])
        .unwrap();
        for ord in [OrderingK::weyl(1), OrderingK::standard(1), OrderingK::antistandard(1)] {
            let t = C64::from(0.9);
            let cf = star_exp_quadratic(&a, &ord, &p, t).unwrap().element.into_representative();
            let ode = ode_oracle_integrate(&a, &ord, &p, t, 200).unwrap();
            assert!(ode.distance(&cf) < 1e-8, "{}", ode.distance(&cf));
            let ad = ode_oracle_adaptive(&a, &ord, &p, t, 1e-12).unwrap();
            assert!(ad.distance(&cf) < 1e-9);
        }
        assert_eq!(
            ode_oracle_integrate(&a, &OrderingK::weyl(1), &p, ZERO, 10).unwrap().g(),
            ONE
        );
        assert_eq!(
            ode_oracle_integrate(&a, &OrderingK::weyl(1), &p, ONE, 0),
            Err(Error::StepUnderflow)
        );
    }

    #[test]
    fn ode_samples_match_single_runs() {
        let p = p1();
        let a = x_matrix().map(|z| z * C64::new(0.7, 0.2));
        let ord = OrderingK::standard(1);
        let ts = [0.0, 0.25, 0.5, 1.0];
        let run = ode_oracle_samples(&a, &ord, &p, &ts, 40).unwrap();
        assert_eq!(run[0], GaussianElement::one(2));
        for (t, e) in ts.iter().zip(&run).skip(1) {
            let single = ode_oracle_integrate(&a, &ord, &p, C64::from(*t), (t * 40.0) as usize).unwrap();
            assert!(e.distance(&single) < 1e-12);
        }
        assert!(ode_oracle_samples(&a, &ord, &p, &[0.5, 0.2], 10).is_err());
    }

    #[test]
    fn ode_oracle_converges_at_fourth_order() {
        let p = p1();
        let a = linalg::from_rows(&[
            vec![C64::new(0.6, 0.2), C64::new(0.4, 0.0)],
            vec![C64::new(0.4, 0.0), C64::new(-0.8, 0.5)],
        ])
        .unwrap();
        let ord = OrderingK::standard(1);
        let t = C64::from(1.0);
        let exact = star_exp_quadratic(&a, &ord, &p, t).unwrap().element.into_representative();
        let e1 = ode_oracle_integrate(&a, &ord, &p, t, 20).unwrap().distance(&exact);
        let e2 = ode_oracle_integrate(&a, &ord, &p, t, 40).unwrap().distance(&exact);
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn ode_detects_blowup() {
        for t in [PI / 2.0, 2.0] {
            let r = ode_oracle_integrate(&x_matrix(), &OrderingK::weyl(1), &p1(), C64::from(t), 64);
            assert!(matches!(r, Err(Error::SingularEncountered { .. })), "{r:?}");
        }
    }

    #[test]
    fn scan_finds_weyl_singularities() {
        let region = ScanRegion {
            re: (0.0, 5.0),
            im: (0.0, 0.0),
            grid: (101, 1),
        };
        let roots = singular_scan(&x_matrix(), &OrderingK::weyl(1), &p1(), &region).unwrap();
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!((roots[0] - C64::from(PI / 2.0)).norm() < 1e-10);
        assert!((roots[1] - C64::from(3.0 * PI / 2.0)).norm() < 1e-10);
    }

    #[test]
    fn scan_in_complex_rectangle() {
        let region = ScanRegion {
            re: (0.0, 5.0),
            im: (-0.5, 0.5),
            grid: (41, 9),
        };
        let roots = singular_scan(&x_matrix(), &OrderingK::weyl(1), &p1(), &region).unwrap();
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!((roots[0] - C64::from(PI / 2.0)).norm() < 1e-10);
        let none = singular_scan(&x_matrix(), &OrderingK::standard(1), &p1(), &region).unwrap();
        assert!(none.is_empty(), "{none:?}");
        let zero = CMatrix::zeros(2, 2);
        assert!(singular_scan(&zero, &OrderingK::weyl(1), &p1(), &region).unwrap().is_empty());
    }
}
