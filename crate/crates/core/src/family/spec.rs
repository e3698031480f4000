//! Symbolic description of a holomorphic family: homogeneous lift
//! components whose coefficients are polynomials in the parameter λ.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

pub type Cx = Complex<f64>;

const C_ZERO: Cx = Cx::new(0.0, 0.0);

/// Rectangle in the λ-plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ParamRect {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl ParamRect {
    pub fn new(re: [f64; 2], im: [f64; 2]) -> Self {
        ParamRect { re, im }
    }

    pub fn centered(center: Cx, half_width: f64, half_height: f64) -> Self {
        ParamRect {
            re: [center.re - half_width, center.re + half_width],
            im: [center.im - half_height, center.im + half_height],
        }
    }

    pub fn center(&self) -> Cx {
        Cx::new(
            0.5 * (self.re[0] + self.re[1]),
            0.5 * (self.im[0] + self.im[1]),
        )
    }

    pub fn width(&self) -> f64 {
        self.re[1] - self.re[0]
    }

    pub fn height(&self) -> f64 {
        self.im[1] - self.im[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, z: Cx) -> bool {
        z.re >= self.re[0] && z.re <= self.re[1] && z.im >= self.im[0] && z.im <= self.im[1]
    }
}

/// Polynomial in λ, coefficients ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LamPoly {
    pub coeffs: Vec<Cx>,
}

impl LamPoly {
    pub fn new(coeffs: Vec<Cx>) -> Self {
        LamPoly { coeffs }
    }

    pub fn constant(c: Cx) -> Self {
        LamPoly { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        LamPoly { coeffs: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, lambda: Cx) -> Cx {
        let mut acc = C_ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * lambda + c;
        }
        acc
    }

    /// Value and d/dλ.
    pub fn eval_d(&self, lambda: Cx) -> (Cx, Cx) {
        let mut p = C_ZERO;
        let mut dp = C_ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * lambda + p;
            p = p * lambda + c;
        }
        (p, dp)
    }

    pub fn add(&self, other: &LamPoly) -> LamPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![C_ZERO; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        LamPoly::new(out)
    }

    pub fn sub(&self, other: &LamPoly) -> LamPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![C_ZERO; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        LamPoly::new(out)
    }

    pub fn mul(&self, other: &LamPoly) -> LamPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return LamPoly::zero();
        }
        let mut out = vec![C_ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        LamPoly::new(out)
    }

    pub fn scale(&self, s: f64) -> LamPoly {
        LamPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// Exponent tuple for up to three phase variables.
pub type Exps = [u8; 3];

/// Monomials of total degree `degree` in `nvars` variables, graded-lex
/// (lexicographic, first variable strongest, descending). This is the
/// order used by the JSON serialization of coefficients.
pub fn graded_lex_monomials(nvars: usize, degree: usize) -> Vec<Exps> {
    fn rec(nvars: usize, degree: usize, pos: usize, current: &mut Exps, out: &mut Vec<Exps>) {
        if pos == nvars - 1 {
            current[pos] = degree as u8;
            out.push(*current);
            current[pos] = 0;
            return;
        }
        for e in (0..=degree).rev() {
            current[pos] = e as u8;
            rec(nvars, degree - e, pos + 1, current, out);
        }
        current[pos] = 0;
    }
    let mut out = Vec::new();
    let mut cur = [0u8; 3];
    rec(nvars, degree, 0, &mut cur, &mut out);
    out
}

/// Homogeneous polynomial in `nvars` phase variables, coefficients in λ.
#[derive(Debug, Clone, PartialEq)]
pub struct HomPoly {
    pub nvars: usize,
    pub degree: usize,
    /// Sparse terms; exponents sum to `degree`.
    pub terms: Vec<(Exps, LamPoly)>,
}

impl HomPoly {
    pub fn new(nvars: usize, degree: usize, terms: Vec<(Exps, LamPoly)>) -> Self {
        debug_assert!(terms
            .iter()
            .all(|(e, _)| e[..nvars].iter().map(|&x| x as usize).sum::<usize>() == degree));
        HomPoly {
            nvars,
            degree,
            terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn zero(nvars: usize, degree: usize) -> Self {
        HomPoly {
            nvars,
            degree,
            terms: vec![],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_zero())
    }

    /// Partial derivative in phase variable `var` (degree drops by one).
    pub fn partial(&self, var: usize) -> HomPoly {
        let mut terms = Vec::new();
        for (exps, coeff) in &self.terms {
            if exps[var] > 0 {
                let mut e = *exps;
                e[var] -= 1;
                terms.push((e, coeff.scale(exps[var] as f64)));
            }
        }
        HomPoly::new(self.nvars, self.degree.saturating_sub(1), terms)
    }

    /// Coefficient-wise d/dλ (same phase degree).
    pub fn lambda_derivative(&self) -> HomPoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let d: Vec<Cx> = c
                    .coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, v)| v * (i as f64))
                    .collect();
                (*e, LamPoly::new(d))
            })
            .collect();
        HomPoly::new(self.nvars, self.degree, terms)
    }

    pub fn mul(&self, other: &HomPoly) -> HomPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut acc: Vec<(Exps, LamPoly)> = Vec::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = [0u8; 3];
                for i in 0..self.nvars {
                    e[i] = ea[i] + eb[i];
                }
                let c = ca.mul(cb);
                match acc.iter_mut().find(|(ee, _)| *ee == e) {
                    Some((_, cc)) => *cc = cc.add(&c),
                    None => acc.push((e, c)),
                }
            }
        }
        HomPoly::new(self.nvars, self.degree + other.degree, acc)
    }

    pub fn sub(&self, other: &HomPoly) -> HomPoly {
        assert_eq!(self.degree, other.degree);
        let mut acc = self.terms.clone();
        for (e, c) in &other.terms {
            match acc.iter_mut().find(|(ee, _)| ee == e) {
                Some((_, cc)) => *cc = cc.sub(c),
                None => acc.push((*e, LamPoly::zero().sub(c))),
            }
        }
        HomPoly::new(self.nvars, self.degree, acc)
    }

    /// Numeric snapshot at a fixed λ.
    pub fn at(&self, lambda: Cx) -> NumHom {
        NumHom {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c.eval(lambda)))
                .filter(|(_, v)| v.norm() != 0.0)
                .collect(),
        }
    }

    /// Snapshot of the λ-derivative at a fixed λ.
    pub fn lambda_partial_at(&self, lambda: Cx) -> NumHom {
        NumHom {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c.eval_d(lambda).1))
                .filter(|(_, v)| v.norm() != 0.0)
                .collect(),
        }
    }

    /// Dehomogenize: substitute 1 for variable `denom` and read the result
    /// as a univariate polynomial in the remaining variable (k = 1 only).
    pub fn dehomogenize_k1(&self, lambda: Cx, denom: usize) -> Poly {
        assert_eq!(self.nvars, 2);
        let var = 1 - denom;
        let mut coeffs = vec![C_ZERO; self.degree + 1];
        for (e, c) in &self.terms {
            coeffs[e[var] as usize] += c.eval(lambda);
        }
        Poly::new(coeffs)
    }

    /// Same, for the λ-derivative of the coefficients.
    pub fn dehomogenize_k1_dlambda(&self, lambda: Cx, denom: usize) -> Poly {
        assert_eq!(self.nvars, 2);
        let var = 1 - denom;
        let mut coeffs = vec![C_ZERO; self.degree + 1];
        for (e, c) in &self.terms {
            coeffs[e[var] as usize] += c.eval_d(lambda).1;
        }
        Poly::new(coeffs)
    }
}

/// Numeric homogeneous polynomial (λ already substituted).
#[derive(Debug, Clone)]
pub struct NumHom {
    pub nvars: usize,
    pub terms: Vec<(Exps, Cx)>,
}

impl NumHom {
    #[inline]
    pub fn eval(&self, x: &[Cx]) -> Cx {
        let mut acc = C_ZERO;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (v, &xv) in x.iter().enumerate() {
                for _ in 0..e[v] {
                    m *= xv;
                }
            }
            acc += m;
        }
        acc
    }
}

/// Holomorphic family f: M × ℙᵏ → M × ℙᵏ given by a homogeneous lift.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub k: usize,
    pub d: usize,
    pub components: Vec<HomPoly>,
    pub domain: ParamRect,
}

impl FamilySpec {
    pub fn new(k: usize, d: usize, components: Vec<HomPoly>, domain: ParamRect) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::InvalidConfig(format!("k must be 1 or 2, got {k}")));
        }
        if d < 2 {
            return Err(Error::InvalidConfig(format!("degree must be ≥ 2, got {d}")));
        }
        if components.len() != k + 1 {
            return Err(Error::InvalidConfig(format!(
                "expected {} lift components, got {}",
                k + 1,
                components.len()
            )));
        }
        for comp in &components {
            if comp.nvars != k + 1 || comp.degree != d {
                return Err(Error::InvalidConfig(
                    "lift components must be homogeneous of degree d in k+1 variables".into(),
                ));
            }
        }
        Ok(FamilySpec {
            k,
            d,
            components,
            domain,
        })
    }

    /// Topological degree `d^k`.
    pub fn dk(&self) -> usize {
        self.d.pow(self.k as u32)
    }

    /// The family z ↦ z² + λ.
    pub fn quadratic() -> Self {
        let x2 = HomPoly::new(
            2,
            2,
            vec![
                ([2, 0, 0], LamPoly::constant(Cx::new(1.0, 0.0))),
                ([0, 2, 0], LamPoly::new(vec![C_ZERO, Cx::new(1.0, 0.0)])),
            ],
        );
        let y2 = HomPoly::new(2, 2, vec![([0, 2, 0], LamPoly::constant(Cx::new(1.0, 0.0)))]);
        FamilySpec::new(1, 2, vec![x2, y2], ParamRect::new([-2.5, 1.5], [-2.0, 2.0])).unwrap()
    }

    /// The power family z ↦ z^d (constant in λ).
    pub fn power(d: usize) -> Self {
        let one = LamPoly::constant(Cx::new(1.0, 0.0));
        let mut ex = [0u8; 3];
        ex[0] = d as u8;
        let xd = HomPoly::new(2, d, vec![(ex, one.clone())]);
        let mut ey = [0u8; 3];
        ey[1] = d as u8;
        let yd = HomPoly::new(2, d, vec![(ey, one)]);
        FamilySpec::new(1, d, vec![xd, yd], ParamRect::new([-1.0, 1.0], [-1.0, 1.0])).unwrap()
    }

    /// The odd cubic family z ↦ z³ + λz.
    pub fn cubic_odd() -> Self {
        let one = LamPoly::constant(Cx::new(1.0, 0.0));
        let lam = LamPoly::new(vec![C_ZERO, Cx::new(1.0, 0.0)]);
        let p = HomPoly::new(2, 3, vec![([3, 0, 0], one.clone()), ([1, 2, 0], lam)]);
        let q = HomPoly::new(2, 3, vec![([0, 3, 0], one)]);
        FamilySpec::new(1, 3, vec![p, q], ParamRect::new([-4.0, 1.0], [-2.0, 2.0])).unwrap()
    }

    /// Polynomial skew product (z, w) ↦ (z², w² + λz) on ℙ².
    pub fn skew_product_k2() -> Self {
        let one = LamPoly::constant(Cx::new(1.0, 0.0));
        let lam = LamPoly::new(vec![C_ZERO, Cx::new(1.0, 0.0)]);
        let a = HomPoly::new(3, 2, vec![([2, 0, 0], one.clone())]);
        let b = HomPoly::new(3, 2, vec![([0, 2, 0], one.clone()), ([1, 0, 1], lam)]);
        let c = HomPoly::new(3, 2, vec![([0, 0, 2], one)]);
        FamilySpec::new(2, 2, vec![a, b, c], ParamRect::new([-0.15, 0.15], [-0.15, 0.15]))
            .unwrap()
    }

    /// Product family (z, w) ↦ (z², w²) on ℙ².
    pub fn product_k2() -> Self {
        let one = LamPoly::constant(Cx::new(1.0, 0.0));
        let a = HomPoly::new(3, 2, vec![([2, 0, 0], one.clone())]);
        let b = HomPoly::new(3, 2, vec![([0, 2, 0], one.clone())]);
        let c = HomPoly::new(3, 2, vec![([0, 0, 2], one)]);
        FamilySpec::new(2, 2, vec![a, b, c], ParamRect::new([-1.0, 1.0], [-1.0, 1.0])).unwrap()
    }

    /// True iff the last lift component is a (nonzero) multiple of the
    /// homogenizing variable to the d-th power, i.e. the hyperplane at
    /// infinity is totally invariant and f_λ is a polynomial map.
    pub fn is_polynomial(&self) -> bool {
        let last = &self.components[self.k];
        let mut pure = [0u8; 3];
        pure[self.k] = self.d as u8;
        let mut has_pure = false;
        for (e, c) in &last.terms {
            if *e == pure {
                has_pure = !c.is_zero();
            } else if !c.is_zero() {
                return false;
            }
        }
        has_pure
    }

    /// Resultant-based non-degeneracy check at one parameter (k = 1):
    /// the Sylvester resultant of the two lift forms must be bounded away
    /// from zero. For k = 2 a sampled surrogate is used: the minimum lift
    /// norm over a deterministic sphere sample.
    pub fn nondegeneracy_at(&self, lambda: Cx) -> f64 {
        if self.k == 1 {
            let p = self.components[0].dehomogenize_k1(lambda, 1);
            let q = self.components[1].dehomogenize_k1(lambda, 1);
            sylvester_resultant_magnitude(&p.coeffs, &q.coeffs, self.d)
        } else {
            let lift = crate::family::Lift::new(self, lambda);
            let mut min = f64::INFINITY;
            for i in 0..200usize {
                // low-discrepancy directions on the unit sphere of ℂ³
                let a = (i as f64 * 0.754877666).fract() * 2.0 - 1.0;
                let b = (i as f64 * 0.569840291).fract() * 2.0 - 1.0;
                let c = (i as f64 * 0.362471842).fract() * 2.0 - 1.0;
                let d = (i as f64 * 0.914343772).fract() * 2.0 - 1.0;
                let e = (i as f64 * 0.218347615).fract() * 2.0 - 1.0;
                let f = (i as f64 * 0.678324517).fract() * 2.0 - 1.0;
                let mut x = [Cx::new(a, b), Cx::new(c, d), Cx::new(e, f)];
                let n = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if n < 1e-9 {
                    continue;
                }
                for v in x.iter_mut() {
                    *v /= n;
                }
                let y = lift.apply(&x);
                min = min.min(y.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
            min
        }
    }

    /// Check non-degeneracy on a grid of the domain.
    pub fn validate_nondegenerate(&self, samples_per_axis: usize, tol: f64) -> Result<()> {
        for j in 0..samples_per_axis {
            for i in 0..samples_per_axis {
                let l = Cx::new(
                    self.domain.re[0]
                        + (i as f64 + 0.5) / samples_per_axis as f64 * self.domain.width(),
                    self.domain.im[0]
                        + (j as f64 + 0.5) / samples_per_axis as f64 * self.domain.height(),
                );
                if self.nondegeneracy_at(l) < tol {
                    return Err(Error::DegenerateParameter {
                        lambda: format!("{l}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// |det Sylvester(p, q)| for two polynomials padded to degree `d`
/// (leading zeros kept so the binary-form resultant is computed).
fn sylvester_resultant_magnitude(p: &[Cx], q: &[Cx], d: usize) -> f64 {
    let n = 2 * d;
    let mut m = vec![vec![C_ZERO; n]; n];
    let get = |c: &[Cx], i: usize| if i < c.len() { c[i] } else { C_ZERO };
    for row in 0..d {
        for i in 0..=d {
            // descending-degree convention for the Sylvester layout
            m[row][row + i] = get(p, d - i);
            m[d + row][row + i] = get(q, d - i);
        }
    }
    // LU determinant magnitude with partial pivoting
    let mut det = 1.0f64;
    for col in 0..n {
        let (pivot, pv) = (col..n)
            .map(|r| (r, m[r][col].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pv == 0.0 {
            return 0.0;
        }
        m.swap(col, pivot);
        det *= m[col][col].norm();
        let inv = Cx::new(1.0, 0.0) / m[col][col];
        for r in col + 1..n {
            let factor = m[r][col] * inv;
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let sub = factor * m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

// === JSON serialization ===================================================
//
// {"k":1,"d":2,"coeffs":[[[..],..],..],"domain":{"re":[a,b],"im":[c,d]}}
// coeffs[component][monomial][lambda_power] = [re, im], monomials in
// graded-lex order, λ-powers ascending. Missing trailing entries are zero.

#[derive(Serialize, Deserialize)]
struct FamilySpecJson {
    k: usize,
    d: usize,
    coeffs: Vec<Vec<Vec<[f64; 2]>>>,
    domain: ParamRect,
}

impl Serialize for FamilySpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let monos = graded_lex_monomials(self.k + 1, self.d);
        let coeffs = self
            .components
            .iter()
            .map(|comp| {
                monos
                    .iter()
                    .map(|m| {
                        comp.terms
                            .iter()
                            .find(|(e, _)| e == m)
                            .map(|(_, c)| c.coeffs.iter().map(|v| [v.re, v.im]).collect())
                            .unwrap_or_default()
                    })
                    .collect()
            })
            .collect();
        FamilySpecJson {
            k: self.k,
            d: self.d,
            coeffs,
            domain: self.domain,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FamilySpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = FamilySpecJson::deserialize(deserializer)?;
        let monos = graded_lex_monomials(raw.k + 1, raw.d);
        if raw.coeffs.len() != raw.k + 1 {
            return Err(D::Error::custom(format!(
                "expected {} lift components, got {}",
                raw.k + 1,
                raw.coeffs.len()
            )));
        }
        let mut components = Vec::new();
        for comp in &raw.coeffs {
            if comp.len() > monos.len() {
                return Err(D::Error::custom(format!(
                    "component has {} monomial entries, expected at most {}",
                    comp.len(),
                    monos.len()
                )));
            }
            let mut terms = Vec::new();
            for (mi, lam) in comp.iter().enumerate() {
                let coeffs: Vec<Cx> = lam.iter().map(|[re, im]| Cx::new(*re, *im)).collect();
                let lp = LamPoly::new(coeffs);
                if !lp.is_zero() {
                    terms.push((monos[mi], lp));
                }
            }
            components.push(HomPoly::new(raw.k + 1, raw.d, terms));
        }
        FamilySpec::new(raw.k, raw.d, components, raw.domain).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_two_vars() {
        let m = graded_lex_monomials(2, 2);
        assert_eq!(m, vec![[2, 0, 0], [1, 1, 0], [0, 2, 0]]);
    }

    #[test]
    fn graded_lex_order_three_vars() {
        let m = graded_lex_monomials(3, 2);
        assert_eq!(
            m,
            vec![[2, 0, 0], [1, 1, 0], [1, 0, 1], [0, 2, 0], [0, 1, 1], [0, 0, 2]]
        );
    }

    #[test]
    fn json_round_trip_quadratic() {
        let fam = FamilySpec::quadratic();
        let s = serde_json::to_string(&fam).unwrap();
        let back: FamilySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(fam, back);
        // spot-check the documented layout
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["d"], 2);
        // X² coefficient of the first component is the constant 1
        assert_eq!(v["coeffs"][0][0][0][0], 1.0);
        // Y² coefficient of the first component is λ: [0, 1]
        assert_eq!(v["coeffs"][0][2][1][0], 1.0);
    }

    #[test]
    fn polynomial_detection() {
        assert!(FamilySpec::quadratic().is_polynomial());
        assert!(FamilySpec::power(3).is_polynomial());
        assert!(FamilySpec::cubic_odd().is_polynomial());
        assert!(FamilySpec::skew_product_k2().is_polynomial());
    }

    #[test]
    fn quadratic_nondegenerate() {
        let fam = FamilySpec::quadratic();
        // Res(z²+λ, 1 hom) — nonzero for all λ in the rect
        fam.validate_nondegenerate(4, 1e-9).unwrap();
        assert!(fam.nondegeneracy_at(Cx::new(0.3, -0.7)) > 1e-6);
    }

    #[test]
    fn degenerate_family_rejected() {
        // lift (X², XY) has common zero X = 0: resultant 0
        let one = LamPoly::constant(Cx::new(1.0, 0.0));
        let a = HomPoly::new(2, 2, vec![([2, 0, 0], one.clone())]);
        let b = HomPoly::new(2, 2, vec![([1, 1, 0], one)]);
        let fam =
            FamilySpec::new(1, 2, vec![a, b], ParamRect::new([-1.0, 1.0], [-1.0, 1.0])).unwrap();
        assert!(fam.validate_nondegenerate(2, 1e-9).is_err());
    }
}
