//! Families of endomorphisms of ℙᵏ: lift evaluation, projective points,
//! chart-based derivatives and critical markings.

mod marking;
mod spec;

pub use marking::{
    critical_marking, critical_points_at, ClusteredRoots, Markings, MarkingValue, MotionTrack,
    ParamGrid, TrackKind, COLLISION_TOL, POINT_EQ_TOL,
};
pub use spec::{graded_lex_monomials, Cx, Exps, FamilySpec, HomPoly, LamPoly, NumHom, ParamRect};

use num_complex::Complex;

use crate::error::{Error, Result};

const C_ZERO: Cx = Complex::new(0.0, 0.0);
const C_ONE: Cx = Complex::new(1.0, 0.0);

/// Threshold below which a lift value (relative to its input scale) is
/// treated as the origin, i.e. the parameter is degenerate.
const LIFT_DEGENERATE_TOL: f64 = 1e-140;

/// Point of ℙᵏ stored as homogeneous coordinates normalized so that the
/// coordinate of largest modulus is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjPoint {
    coords: Vec<Cx>,
}

impl ProjPoint {
    pub fn new(coords: Vec<Cx>) -> Result<Self> {
        let (idx, max) = coords
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .ok_or_else(|| Error::Precondition("empty coordinate vector".into()))?;
        if max == 0.0 || !max.is_finite() {
            return Err(Error::Precondition(
                "projective point needs a finite nonzero coordinate".into(),
            ));
        }
        let pivot = coords[idx];
        Ok(ProjPoint {
            coords: coords.iter().map(|c| c / pivot).collect(),
        })
    }

    pub fn from_affine(z: Cx) -> Self {
        ProjPoint::new(vec![z, C_ONE]).unwrap()
    }

    pub fn from_affine2(z: Cx, w: Cx) -> Self {
        ProjPoint::new(vec![z, w, C_ONE]).unwrap()
    }

    pub fn infinity() -> Self {
        ProjPoint {
            coords: vec![C_ONE, C_ZERO],
        }
    }

    pub fn coords(&self) -> &[Cx] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Affine coordinate x₀/x₁ (k = 1). Infinite points map to None.
    pub fn affine(&self) -> Option<Cx> {
        let den = self.coords[self.coords.len() - 1];
        if den.norm() < 1e-14 {
            None
        } else {
            Some(self.coords[0] / den)
        }
    }

    /// Affine coordinate allowing large values; chart-infinite points give
    /// a value with norm ≥ 1e14.
    pub fn affine_lossy(&self) -> Cx {
        match self.affine() {
            Some(z) => z,
            None => Cx::new(1e15, 0.0),
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.coords[self.coords.len() - 1].norm() < 1e-14
    }

    /// Chordal (spherical) distance, scale-free in both arguments;
    /// ranges over [0, 1].
    pub fn chordal(&self, other: &ProjPoint) -> f64 {
        chordal(&self.coords, &other.coords)
    }

    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        self.chordal(other) <= tol
    }
}

/// Chordal distance between homogeneous coordinate vectors.
pub fn chordal(a: &[Cx], b: &[Cx]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut wedge = 0.0f64;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    let na: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|c| c.norm_sqr()).sum();
    (wedge / (na * nb)).sqrt()
}

/// Numeric lift of a family at a fixed parameter: the k+1 homogeneous
/// components together with their phase partials and λ-partials.
#[derive(Debug, Clone)]
pub struct Lift {
    pub k: usize,
    pub d: usize,
    pub lambda: Cx,
    comps: Vec<NumHom>,
    partials: Vec<Vec<NumHom>>,
    lambda_partials: Vec<NumHom>,
}

impl Lift {
    pub fn new(family: &FamilySpec, lambda: Cx) -> Self {
        let comps: Vec<NumHom> = family.components.iter().map(|c| c.at(lambda)).collect();
        let partials = family
            .components
            .iter()
            .map(|c| (0..=family.k).map(|v| c.partial(v).at(lambda)).collect())
            .collect();
        let lambda_partials = family
            .components
            .iter()
            .map(|c| c.lambda_partial_at(lambda))
            .collect();
        Lift {
            k: family.k,
            d: family.d,
            lambda,
            comps,
            partials,
            lambda_partials,
        }
    }

    #[inline]
    pub fn apply(&self, x: &[Cx]) -> Vec<Cx> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    /// F(x) normalized to sup-norm 1, together with ln of the norm that
    /// was divided out. Degenerate values error out.
    pub fn apply_normalized(&self, x: &[Cx]) -> Result<(Vec<Cx>, f64)> {
        let mut y = self.apply(x);
        let sup = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let xsup = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if sup < LIFT_DEGENERATE_TOL * xsup.powi(self.d as i32).max(1e-300) || sup == 0.0 {
            return Err(Error::DegenerateParameter {
                lambda: format!("{}", self.lambda),
            });
        }
        for c in y.iter_mut() {
            *c /= sup;
        }
        Ok((y, sup.ln()))
    }

    /// Full (k+1)×(k+1) Jacobian of the lift.
    pub fn jacobian(&self, x: &[Cx]) -> Vec<Vec<Cx>> {
        (0..=self.k)
            .map(|i| (0..=self.k).map(|v| self.partials[i][v].eval(x)).collect())
            .collect()
    }

    pub fn lambda_partial(&self, x: &[Cx]) -> Vec<Cx> {
        self.lambda_partials.iter().map(|c| c.eval(x)).collect()
    }

    /// One forward step of the pair (point, tangent): returns
    /// (F(x), DF(x)·t [+ ∂F/∂λ]) normalized by a common positive constant.
    /// The common rescaling keeps the Fubini-Study Gram form of the pair
    /// invariant, so tangent observables can be read off at any depth
    /// without overflow.
    pub fn step_with_tangent(
        &self,
        x: &[Cx],
        t: &[Cx],
        add_lambda_partial: bool,
    ) -> Result<(Vec<Cx>, Vec<Cx>)> {
        let y = self.apply(x);
        let j = self.jacobian(x);
        let mut ty: Vec<Cx> = (0..=self.k)
            .map(|i| (0..=self.k).map(|v| j[i][v] * t[v]).sum())
            .collect();
        if add_lambda_partial {
            let fl = self.lambda_partial(x);
            for (a, b) in ty.iter_mut().zip(fl) {
                *a += b;
            }
        }
        let sup = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if sup < LIFT_DEGENERATE_TOL {
            return Err(Error::DegenerateParameter {
                lambda: format!("{}", self.lambda),
            });
        }
        Ok((
            y.iter().map(|c| c / sup).collect(),
            ty.iter().map(|c| c / sup).collect(),
        ))
    }
}

/// Squared Fubini-Study length of the tangent vector `t` attached to the
/// lift representative `x` of a curve in ℙᵏ: the Gram form
/// (|x|²|t|² − |⟨t,x⟩|²)/|x|⁴, which is invariant under common rescaling
/// of (x, t). Uses the unnormalized FS form (a line has area π).
pub fn fs_tangent_sq(x: &[Cx], t: &[Cx]) -> f64 {
    let nx: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    let nt: f64 = t.iter().map(|c| c.norm_sqr()).sum();
    let inner: Cx = t.iter().zip(x).map(|(a, b)| a * b.conj()).sum();
    let num = nx * nt - inner.norm_sqr();
    (num / (nx * nx)).max(0.0)
}

/// Evaluate f_λ(z). Renormalizes, so iteration never overflows.
pub fn evaluate(family: &FamilySpec, lambda: Cx, z: &ProjPoint) -> Result<ProjPoint> {
    let lift = Lift::new(family, lambda);
    evaluate_lift(&lift, z)
}

pub fn evaluate_lift(lift: &Lift, z: &ProjPoint) -> Result<ProjPoint> {
    let (y, _) = lift.apply_normalized(z.coords())?;
    ProjPoint::new(y)
}

/// Iterate f_λ n times.
pub fn iterate(family: &FamilySpec, lambda: Cx, z: &ProjPoint, n: usize) -> Result<ProjPoint> {
    let lift = Lift::new(family, lambda);
    let mut p = z.clone();
    for _ in 0..n {
        p = evaluate_lift(&lift, &p)?;
    }
    Ok(p)
}

/// Differential data of f_λ at a point.
#[derive(Debug, Clone)]
pub struct Derivative {
    /// Differential in adapted affine charts rescaled by the FS conformal
    /// factors; for k = 1 its modulus is the FS operator norm.
    pub jac_z: JacZ,
    /// ∂f_λ(z)/∂λ measured in the FS metric at the target (chart
    /// components divided by 1 + |target|²).
    pub jac_lambda: Vec<Cx>,
    /// Image point.
    pub image: ProjPoint,
}

#[derive(Debug, Clone)]
pub enum JacZ {
    Scalar(Cx),
    Matrix([[Cx; 2]; 2]),
}

impl JacZ {
    pub fn scalar(&self) -> Cx {
        match self {
            JacZ::Scalar(c) => *c,
            JacZ::Matrix(_) => panic!("matrix Jacobian where scalar expected"),
        }
    }

    /// |det| of the FS-rescaled differential. For k = 1 this is the FS
    /// operator norm; for k = 2 the FS volume distortion.
    pub fn fs_determinant_magnitude(&self) -> f64 {
        match self {
            JacZ::Scalar(c) => c.norm(),
            JacZ::Matrix(m) => (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm(),
        }
    }
}

/// Chart data: index of the denominator coordinate; affine coordinates are
/// the remaining coordinates divided by it, in index order.
fn best_chart(coords: &[Cx]) -> usize {
    coords
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .unwrap()
        .0
}

fn chart_coords(coords: &[Cx], denom: usize) -> Vec<Cx> {
    let d = coords[denom];
    coords
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != denom)
        .map(|(_, c)| c / d)
        .collect()
}

/// exact representative with denominator coordinate = 1
fn chart_embed(coords: &[Cx], denom: usize) -> Vec<Cx> {
    let d = coords[denom];
    coords.iter().map(|c| c / d).collect()
}

/// Derivative of f_λ at z in automatically chosen affine charts, with FS
/// conformal factors applied (see [`Derivative`]).
pub fn derivative(family: &FamilySpec, lambda: Cx, z: &ProjPoint) -> Result<Derivative> {
    let lift = Lift::new(family, lambda);
    derivative_lift(&lift, z)
}

pub fn derivative_lift(lift: &Lift, z: &ProjPoint) -> Result<Derivative> {
    let k = lift.k;
    let src = best_chart(z.coords());
    let x = chart_embed(z.coords(), src);
    let y = lift.apply(&x);
    let ysup = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if ysup < LIFT_DEGENERATE_TOL {
        return Err(Error::DegenerateParameter {
            lambda: format!("{}", lift.lambda),
        });
    }
    let dst = best_chart(&y);
    if y[dst].norm() < 1e-14 * ysup {
        return Err(Error::ChartFailure);
    }
    let jac = lift.jacobian(&x);
    let flam = lift.lambda_partial(&x);

    let src_vars: Vec<usize> = (0..=k).filter(|v| *v != src).collect();
    let dst_comps: Vec<usize> = (0..=k).filter(|v| *v != dst).collect();
    let den = y[dst];
    let den_sq = den * den;

    // affine Jacobian entries d(F_i / F_dst)/d t_v at the embedded point
    let mut aff = vec![vec![C_ZERO; k]; k];
    for (r, &i) in dst_comps.iter().enumerate() {
        for (c, &v) in src_vars.iter().enumerate() {
            aff[r][c] = (jac[i][v] * den - y[i] * jac[dst][v]) / den_sq;
        }
    }
    let src_t = chart_coords(z.coords(), src);
    let dst_t: Vec<Cx> = dst_comps.iter().map(|&i| y[i] / den).collect();
    let fs_src = 1.0 + src_t.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let fs_dst = 1.0 + dst_t.iter().map(|c| c.norm_sqr()).sum::<f64>();

    let jac_z = if k == 1 {
        JacZ::Scalar(aff[0][0] * (fs_src / fs_dst))
    } else {
        // scale so |det| carries the full FS volume factor ((k+1)/2 power per entry pair)
        let s = (fs_src / fs_dst).powf((k as f64 + 1.0) / (2.0 * k as f64));
        JacZ::Matrix([
            [aff[0][0] * s, aff[0][1] * s],
            [aff[1][0] * s, aff[1][1] * s],
        ])
    };

    let jac_lambda: Vec<Cx> = dst_comps
        .iter()
        .map(|&i| ((flam[i] * den - y[i] * flam[dst]) / den_sq) / fs_dst)
        .collect();

    Ok(Derivative {
        jac_z,
        jac_lambda,
        image: ProjPoint::new(y)?,
    })
}

/// Derivative in explicitly chosen charts (k = 1): the complex derivative
/// of chart_dst ∘ f ∘ chart_src⁻¹, without FS factors. Products of these
/// along a cycle with consistent chart choices give the cycle multiplier.
pub fn chart_derivative_k1(
    lift: &Lift,
    z: &ProjPoint,
    src: usize,
    dst: usize,
) -> Result<(Cx, Cx)> {
    if lift.k != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            actual: lift.k,
        });
    }
    if z.coords()[src].norm() < 1e-14 {
        return Err(Error::ChartFailure);
    }
    let x = chart_embed(z.coords(), src);
    let y = lift.apply(&x);
    let den = y[dst];
    let num = y[1 - dst];
    let sup = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if den.norm() < 1e-12 * sup {
        return Err(Error::ChartFailure);
    }
    let jac = lift.jacobian(&x);
    let v = 1 - src; // differentiation variable in the source chart
    let deriv = (jac[1 - dst][v] * den - num * jac[dst][v]) / (den * den);
    Ok((num / den, deriv))
}

/// FS operator norm of df_λ at z together with the image point
/// (k = 1 hot path used by Lyapunov estimators).
pub fn fs_jacobian_k1(lift: &Lift, z: &ProjPoint) -> Result<(f64, ProjPoint)> {
    let d = derivative_lift(lift, z)?;
    Ok((d.jac_z.fs_determinant_magnitude(), d.image))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn evaluate_quadratic_at_zero() {
        // z² + 0 at [2:1] -> [4:1]
        let fam = FamilySpec::quadratic();
        let z = ProjPoint::from_affine(cx(2.0, 0.0));
        let img = evaluate(&fam, C_ZERO, &z).unwrap();
        assert!(img.approx_eq(&ProjPoint::from_affine(cx(4.0, 0.0)), 1e-12));
    }

    #[test]
    fn infinity_is_fixed() {
        let fam = FamilySpec::quadratic();
        let img = evaluate(&fam, C_ZERO, &ProjPoint::infinity()).unwrap();
        assert!(img.is_infinity());
    }

    #[test]
    fn critical_value_is_lambda() {
        // z² + i at 0 -> i
        let fam = FamilySpec::quadratic();
        let img = evaluate(&fam, cx(0.0, 1.0), &ProjPoint::from_affine(C_ZERO)).unwrap();
        assert!(img.approx_eq(&ProjPoint::from_affine(cx(0.0, 1.0)), 1e-12));
    }

    #[test]
    fn fs_jacobian_on_unit_circle() {
        // z² at z = 1: affine derivative 2, FS factors cancel -> 2
        let fam = FamilySpec::power(2);
        let lift = Lift::new(&fam, C_ZERO);
        let (jac, img) = fs_jacobian_k1(&lift, &ProjPoint::from_affine(C_ONE)).unwrap();
        assert!((jac - 2.0).abs() < 1e-12);
        assert!(img.approx_eq(&ProjPoint::from_affine(C_ONE), 1e-12));
    }

    #[test]
    fn jacobian_vanishes_at_critical_point() {
        let fam = FamilySpec::quadratic();
        let lift = Lift::new(&fam, cx(0.3, 0.1));
        let (jac, _) = fs_jacobian_k1(&lift, &ProjPoint::from_affine(C_ZERO)).unwrap();
        assert!(jac < 1e-14);
    }

    #[test]
    fn jac_lambda_modulus_matches_finite_differences() {
        // z²+λ at z = 0: ∂f/∂λ = 1, FS factor 1/(1+|λ|²)
        let fam = FamilySpec::quadratic();
        for &lambda in &[cx(0.4, -0.3), cx(-1.1, 0.2), cx(0.0, 0.9)] {
            let d = derivative(&fam, lambda, &ProjPoint::from_affine(C_ZERO)).unwrap();
            let expected = 1.0 / (1.0 + lambda.norm_sqr());
            assert!((d.jac_lambda[0].norm() - expected).abs() < 1e-12);

            // independent finite-difference oracle in λ, FS-measured at the target
            let h = 1e-6;
            let w0 = evaluate(&fam, lambda, &ProjPoint::from_affine(C_ZERO))
                .unwrap()
                .affine()
                .unwrap();
            let w1 = evaluate(&fam, lambda + cx(h, 0.0), &ProjPoint::from_affine(C_ZERO))
                .unwrap()
                .affine()
                .unwrap();
            let fd = ((w1 - w0) / h).norm() / (1.0 + w0.norm_sqr());
            assert!(
                (d.jac_lambda[0].norm() - fd).abs() < 1e-5,
                "fd oracle mismatch: {} vs {}",
                d.jac_lambda[0].norm(),
                fd
            );
        }
    }

    #[test]
    fn chart_independence_of_fs_jacobian() {
        // compare FS norm computed through both chart embeddings
        let fam = FamilySpec::quadratic();
        let lambda = cx(-0.2, 0.5);
        let lift = Lift::new(&fam, lambda);
        for &z in &[cx(0.8, 0.3), cx(1.4, -0.9), cx(-0.5, 0.1)] {
            let p = ProjPoint::from_affine(z);
            let (v0, d0) = chart_derivative_k1(&lift, &p, 1, 1).unwrap();
            let fs0 = d0.norm() * (1.0 + z.norm_sqr()) / (1.0 + v0.norm_sqr());
            let (v1, d1) = chart_derivative_k1(&lift, &p, 0, 0).unwrap();
            let t1 = 1.0 / z; // source coordinate in the other chart
            let fs1 = d1.norm() * (1.0 + t1.norm_sqr()) / (1.0 + v1.norm_sqr());
            assert!(
                (fs0 - fs1).abs() < 1e-8 * (1.0 + fs0),
                "chart mismatch {fs0} vs {fs1}"
            );
        }
    }

    #[test]
    fn tangent_step_tracks_orbit_derivative() {
        // d/dλ f_λ²(0) at λ: for z²+λ, orbit 0 -> λ -> λ²+λ, derivative 2λ+1
        let fam = FamilySpec::quadratic();
        let lambda = cx(0.2, 0.1);
        let lift = Lift::new(&fam, lambda);
        let mut x = vec![C_ZERO, C_ONE];
        let mut t = vec![C_ZERO, C_ZERO];
        for _ in 0..2 {
            let (nx, nt) = lift.step_with_tangent(&x, &t, true).unwrap();
            x = nx;
            t = nt;
        }
        // affine derivative = d(x0/x1)/dλ = (t0 x1 - x0 t1)/x1²
        let aff = (t[0] * x[1] - x[0] * t[1]) / (x[1] * x[1]);
        let expected = 2.0 * lambda + C_ONE;
        assert!((aff - expected).norm() < 1e-12);
    }

    #[test]
    fn chordal_symmetry_and_range() {
        let a = ProjPoint::from_affine(cx(1.0, 2.0));
        let b = ProjPoint::infinity();
        let d = a.chordal(&b);
        assert!(d > 0.0 && d <= 1.0);
        assert!((a.chordal(&b) - b.chordal(&a)).abs() < 1e-15);
        assert!(a.chordal(&a) < 1e-15);
    }
}
