//! Univariate polynomials over ℂ with an Aberth-Ehrlich all-roots solver.
//!
//! Coefficients are stored in ascending degree order. Degrees stay small
//! (fiber polynomials, Wronskians) except for iterated fixed-point
//! polynomials, which are solved through the functional variant
//! [`aberth_functional`] to avoid expanding ill-conditioned coefficients.

use num_complex::Complex;

pub type Cx = Complex<f64>;

pub const ZERO: Cx = Cx::new(0.0, 0.0);
pub const ONE: Cx = Cx::new(1.0, 0.0);

/// Dense univariate polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Cx>,
}

impl Poly {
    pub fn new(coeffs: Vec<Cx>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    /// Degree after trimming numerically-zero leading coefficients
    /// (relative to the largest coefficient). Zero polynomial -> None.
    pub fn trimmed_degree(&self, rel_tol: f64) -> Option<usize> {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return None;
        }
        self.coeffs.iter().rposition(|c| c.norm() > rel_tol * max)
    }

    pub fn eval(&self, z: Cx) -> Cx {
        let mut acc = ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation of the polynomial and its derivative.
    pub fn eval_with_derivative(&self, z: Cx) -> (Cx, Cx) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * (i as f64))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![ZERO; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: Cx) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// All roots of the trimmed polynomial. Returns `(finite_roots,
    /// infinity_multiplicity)` where the infinity multiplicity is the
    /// degree deficit against `nominal_degree` (pass the projective degree
    /// when the polynomial came from dehomogenization, otherwise the
    /// coefficient length minus one).
    pub fn roots_projective(&self, nominal_degree: usize, rel_tol: f64) -> (Vec<Cx>, usize) {
        match self.trimmed_degree(rel_tol) {
            None => (vec![], nominal_degree),
            Some(deg) => {
                let finite = roots_of(&self.coeffs[..=deg]);
                (finite, nominal_degree.saturating_sub(deg))
            }
        }
    }

    /// All finite roots (leading zeros trimmed at relative 1e-12).
    pub fn roots(&self) -> Vec<Cx> {
        match self.trimmed_degree(1e-12) {
            None => vec![],
            Some(deg) => roots_of(&self.coeffs[..=deg]),
        }
    }
}

/// Roots of a polynomial given by its coefficient slice (ascending, exact
/// degree = len-1, nonzero leading coefficient). Degrees 1 and 2 use the
/// closed form; higher degrees go through Aberth iteration with Newton
/// polishing.
fn roots_of(coeffs: &[Cx]) -> Vec<Cx> {
    match coeffs.len() {
        0 | 1 => vec![],
        2 => vec![-coeffs[0] / coeffs[1]],
        3 => {
            // quadratic formula with the numerically stable sibling root
            let (c, b, a) = (coeffs[0], coeffs[1], coeffs[2]);
            let disc = (b * b - 4.0 * a * c).sqrt();
            // pick sign to avoid cancellation in -b ± disc
            let q = if (b + disc).norm() >= (b - disc).norm() {
                -(b + disc) * 0.5
            } else {
                -(b - disc) * 0.5
            };
            if q.norm() == 0.0 {
                vec![ZERO, ZERO]
            } else {
                vec![q / a, c / q]
            }
        }
        _ => aberth_coeffs(coeffs),
    }
}

fn aberth_coeffs(coeffs: &[Cx]) -> Vec<Cx> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let scaled: Vec<Cx> = coeffs.iter().map(|c| c / lead).collect();
    let poly = Poly::new(scaled.clone());
    // Cauchy-style enclosing radius for the initial circle
    let radius = 1.0
        + scaled[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
    let r0 = if scaled[0].norm() > 0.0 {
        scaled[0].norm().powf(1.0 / deg as f64).min(radius).max(1e-3)
    } else {
        0.5 * radius
    };
    let mut zs: Vec<Cx> = (0..deg)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.37) / deg as f64 + 0.5;
            Cx::from_polar(r0, theta)
        })
        .collect();
    aberth_iterate(&mut zs, |z| poly.eval_with_derivative(z), 200, 1e-13);
    zs
}

/// Aberth-Ehrlich iteration driven by a black-box `(p, p')` evaluator.
/// `zs` holds the current root estimates (one per root, pre-seeded).
/// The evaluator only needs to be correct up to a common (value-dependent)
/// positive rescaling of `p` and `p'`, as the Newton correction `p/p'`
/// is scale-free; this lets callers evaluate iterated maps with
/// per-step renormalization instead of expanded coefficients.
pub fn aberth_iterate<F: Fn(Cx) -> (Cx, Cx)>(
    zs: &mut [Cx],
    eval: F,
    max_iter: usize,
    tol: f64,
) -> usize {
    let n = zs.len();
    if n == 0 {
        return 0;
    }
    for iter in 0..max_iter {
        let mut max_step = 0.0f64;
        let snapshot = zs.to_vec();
        for i in 0..n {
            let z = snapshot[i];
            let (p, dp) = eval(z);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = if dp.norm() > 0.0 { p / dp } else { Cx::new(1e-8, 0.0) };
            let mut repulse = ZERO;
            for (j, &w) in snapshot.iter().enumerate() {
                if j != i {
                    let d = z - w;
                    if d.norm() > 1e-300 {
                        repulse += 1.0 / d;
                    }
                }
            }
            let denom = ONE - newton * repulse;
            let step = if denom.norm() > 1e-300 { newton / denom } else { newton };
            zs[i] = z - step;
            max_step = max_step.max(step.norm() / (1.0 + zs[i].norm()));
        }
        if max_step < tol {
            return iter + 1;
        }
    }
    max_iter
}

/// Winding number of `f` around 0 along the circle |t − center| = radius,
/// by adaptive phase tracking. Returns None when the phase step cannot be
/// resolved (value too close to 0 on the circle) or the total is not an
/// integer within tolerance — both signal a zero on or near the contour.
pub fn winding_number<F: Fn(Cx) -> Cx>(
    f: &F,
    center: Cx,
    radius: f64,
    initial_samples: usize,
    max_depth: usize,
) -> Option<i64> {
    let n = initial_samples.max(8);
    let vals: Vec<(f64, Cx)> = (0..=n)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            (theta, f(center + Cx::from_polar(radius, theta)))
        })
        .collect();
    let scale = vals.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut total = 0.0f64;
    for w in vals.windows(2) {
        total += phase_delta(f, center, radius, w[0], w[1], scale, max_depth)?;
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.2 {
        return None;
    }
    Some(rounded as i64)
}

fn phase_delta<F: Fn(Cx) -> Cx>(
    f: &F,
    center: Cx,
    radius: f64,
    a: (f64, Cx),
    b: (f64, Cx),
    scale: f64,
    depth: usize,
) -> Option<f64> {
    if a.1.norm() < 1e-13 * scale || b.1.norm() < 1e-13 * scale {
        return None;
    }
    let delta = (b.1 / a.1).arg();
    if delta.abs() < std::f64::consts::FRAC_PI_2 {
        return Some(delta);
    }
    if depth == 0 {
        return None;
    }
    let tm = 0.5 * (a.0 + b.0);
    let m = (tm, f(center + Cx::from_polar(radius, tm)));
    Some(
        phase_delta(f, center, radius, a, m, scale, depth - 1)?
            + phase_delta(f, center, radius, m, b, scale, depth - 1)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_by_re(mut v: Vec<Cx>) -> Vec<Cx> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn quadratic_roots() {
        // (z-1)(z-2) = z^2 - 3z + 2
        let p = Poly::new(vec![Cx::new(2.0, 0.0), Cx::new(-3.0, 0.0), ONE]);
        let r = sorted_by_re(p.roots());
        assert!((r[0] - ONE).norm() < 1e-12);
        assert!((r[1] - Cx::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn high_degree_roots_of_unity() {
        // z^16 - 1
        let mut coeffs = vec![ZERO; 17];
        coeffs[0] = -ONE;
        coeffs[16] = ONE;
        let roots = Poly::new(coeffs).roots();
        assert_eq!(roots.len(), 16);
        for r in roots {
            assert!((r.norm() - 1.0).abs() < 1e-9);
            assert!((r.powu(16) - ONE).norm() < 1e-8);
        }
    }

    #[test]
    fn projective_deficit_counts_infinity() {
        // z (degree 1 content) with nominal projective degree 3: two roots at infinity
        let p = Poly::new(vec![ZERO, ONE, ZERO, ZERO]);
        let (finite, inf) = p.roots_projective(3, 1e-12);
        assert_eq!(finite.len(), 1);
        assert_eq!(inf, 2);
        assert!(finite[0].norm() < 1e-14);
    }

    #[test]
    fn functional_aberth_matches_coefficients() {
        // roots of z^3 - 1 via the functional interface
        let eval = |z: Cx| (z * z * z - ONE, 3.0 * z * z);
        let mut zs = vec![
            Cx::from_polar(1.3, 0.5),
            Cx::from_polar(0.9, 2.8),
            Cx::from_polar(1.1, 4.4),
        ];
        aberth_iterate(&mut zs, eval, 100, 1e-14);
        for z in zs {
            assert!((z.powu(3) - ONE).norm() < 1e-10);
        }
    }
}
