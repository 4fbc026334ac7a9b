//! Triangle quadrature: symmetric rules, collapsed Gauss products and the
//! Sauter–Schwab relative-coordinate rules for touching triangle pairs.
//!
//! All rules are stored in barycentric form with weights summing to one, so
//! `int_T f ~ area * sum w_i f(x_i)` and, for pairs,
//! `int_T int_S f ~ area_T * area_S * sum w_i f(x_i, y_i)`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Quadrature point on a triangle in barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriPoint<T> {
    pub bary: [T; 3],
    pub weight: T,
}

impl<T: Real> TriPoint<T> {
    #[inline]
    pub fn map(&self, p: &[Vec3<T>; 3]) -> Vec3<T> {
        p[0] * self.bary[0] + p[1] * self.bary[1] + p[2] * self.bary[2]
    }
}

/// Quadrature point on a product of two triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint<T> {
    pub x: [T; 3],
    pub y: [T; 3],
    pub weight: T,
}

#[inline]
pub fn map_bary<T: Real>(b: &[T; 3], p: &[Vec3<T>; 3]) -> Vec3<T> {
    p[0] * b[0] + p[1] * b[1] + p[2] * b[2]
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { t } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pm) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = 0.5 * (1.0 + t);
        w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn sym_points(out: &mut Vec<([f64; 3], f64)>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    out.push(([a, a, b], w));
    out.push(([a, b, a], w));
    out.push(([b, a, a], w));
}

fn sym6_points(out: &mut Vec<([f64; 3], f64)>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [b, c, a], [c, a, b], [b, a, c], [a, c, b], [c, b, a]] {
        out.push((p, w));
    }
}

/// Symmetric (Dunavant) rule with the given number of points
/// (1, 3, 6, 7 or 12; exact to degree 1, 2, 4, 5 and 6).
pub fn symmetric_rule<T: Real>(points: usize) -> Result<Vec<TriPoint<T>>> {
    let mut r = Vec::new();
    match points {
        1 => r.push(([1.0 / 3.0; 3], 1.0)),
        3 => sym_points(&mut r, 1.0 / 6.0, 1.0 / 3.0),
        6 => {
            sym_points(&mut r, 0.445948490915965, 0.223381589678011);
            sym_points(&mut r, 0.091576213509771, 0.109951743655322);
        }
        7 => {
            r.push(([1.0 / 3.0; 3], 0.225));
            sym_points(&mut r, 0.470142064105115, 0.132394152788506);
            sym_points(&mut r, 0.101286507323456, 0.125939180544827);
        }
        12 => {
            sym_points(&mut r, 0.249286745170910, 0.116786275726379);
            sym_points(&mut r, 0.063089014491502, 0.050844906370207);
            sym6_points(&mut r, 0.310352451033785, 0.053145049844816, 0.082851075618374);
        }
        n => {
            return Err(Error::Parameter(format!(
                "no symmetric triangle rule with {n} points (use 1, 3, 6, 7 or 12)"
            )))
        }
    }
    Ok(r.into_iter()
        .map(|(b, w)| TriPoint {
            bary: b.map(T::lit),
            weight: T::lit(w),
        })
        .collect())
}

/// Collapsed (Duffy) Gauss product rule with `n * n` points, exact to
/// degree `2n - 2` at least.
pub fn collapsed_rule<T: Real>(n: usize) -> Vec<TriPoint<T>> {
    let (x, w) = gauss_legendre01(n);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            let v = x[j] * (1.0 - u);
            out.push(TriPoint {
                bary: [1.0 - u - v, u, v].map(T::lit),
                weight: T::lit(2.0 * w[i] * w[j] * (1.0 - u)),
            });
        }
    }
    out
}

/// How two triangles touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    Identical,
    /// Shared edge; the arrays give vertex permutations that put the
    /// shared vertices first, in the same order, in both triangles.
    Edge([usize; 3], [usize; 3]),
    /// Shared vertex; permutations put it first in both triangles.
    Vertex([usize; 3], [usize; 3]),
    Disjoint,
}

/// Classifies a triangle pair by shared vertex indices.
pub fn classify(a: &[usize; 3], b: &[usize; 3]) -> Adjacency {
    let mut shared = Vec::with_capacity(3);
    for i in 0..3 {
        for j in 0..3 {
            if a[i] == b[j] {
                shared.push((i, j));
            }
        }
    }
    match shared.len() {
        0 => Adjacency::Disjoint,
        1 => {
            let (i, j) = shared[0];
            Adjacency::Vertex([i, (i + 1) % 3, (i + 2) % 3], [j, (j + 1) % 3, (j + 2) % 3])
        }
        2 => {
            let (i0, j0) = shared[0];
            let (i1, j1) = shared[1];
            Adjacency::Edge([i0, i1, 3 - i0 - i1], [j0, j1, 3 - j0 - j1])
        }
        _ => Adjacency::Identical,
    }
}

/// Map from the reference triangle `{0 <= x2 <= x1 <= 1}` to barycentric
/// coordinates of `(P0, P1, P2)`.
#[inline]
fn ref_to_bary(x1: f64, x2: f64) -> [f64; 3] {
    [1.0 - x1, x1 - x2, x2]
}

type RefPair = ([f64; 2], [f64; 2]);

fn identical_maps(xi: f64, e1: f64, e2: f64, e3: f64) -> [RefPair; 6] {
    [
        ([xi, xi * (1.0 - e1 + e1 * e2)], [xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)]),
        ([xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)], [xi, xi * (1.0 - e1 + e1 * e2)]),
        ([xi, xi * e1 * (1.0 - e2 + e2 * e3)], [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)]),
        ([xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], [xi, xi * e1 * (1.0 - e2 + e2 * e3)]),
        ([xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)], [xi, xi * e1 * (1.0 - e2)]),
        ([xi, xi * e1 * (1.0 - e2)], [xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)]),
    ]
}

fn edge_maps(xi: f64, e1: f64, e2: f64, e3: f64) -> [RefPair; 5] {
    [
        ([xi, xi * e1 * e3], [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)]),
        ([xi, xi * e1], [xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)]),
        ([xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], [xi, xi * e1 * e2 * e3]),
        ([xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)], [xi, xi * e1]),
        ([xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)], [xi, xi * e1 * e2]),
    ]
}

fn vertex_maps(xi: f64, e1: f64, e2: f64, e3: f64) -> [RefPair; 2] {
    [
        ([xi, xi * e1], [xi * e2, xi * e2 * e3]),
        ([xi * e2, xi * e2 * e1], [xi, xi * e3]),
    ]
}

/// Sauter–Schwab rule for a touching pair with `n` Gauss points per
/// dimension of the unit hypercube.
pub fn singular_rule<T: Real>(kind: SingularKind, n: usize) -> Vec<PairPoint<T>> {
    let (x, w) = gauss_legendre01(n);
    let mut out = Vec::new();
    // reference pair area is 1/4; rescale so that weights sum to one
    let norm = 4.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let (xi, e1, e2, e3) = (x[a], x[b], x[c], x[d]);
                    let gw = w[a] * w[b] * w[c] * w[d] * norm;
                    let mut push = |pairs: &[RefPair], jac: &dyn Fn(usize) -> f64| {
                        for (k, (px, py)) in pairs.iter().enumerate() {
                            out.push(PairPoint {
                                x: ref_to_bary(px[0], px[1]).map(T::lit),
                                y: ref_to_bary(py[0], py[1]).map(T::lit),
                                weight: T::lit(gw * jac(k)),
                            });
                        }
                    };
                    match kind {
                        SingularKind::Identical => {
                            let j = xi * xi * xi * e1 * e1 * e2;
                            push(&identical_maps(xi, e1, e2, e3), &|_| j);
                        }
                        SingularKind::Edge => {
                            let j = xi * xi * xi * e1 * e1;
                            push(&edge_maps(xi, e1, e2, e3), &|k| if k == 0 { j } else { j * e2 });
                        }
                        SingularKind::Vertex => {
                            let j = xi * xi * xi * e2;
                            push(&vertex_maps(xi, e1, e2, e3), &|_| j);
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularKind {
    Identical,
    Edge,
    Vertex,
}

/// Quadrature configuration for Galerkin pair integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    /// Points of the symmetric rule used for well-separated pairs.
    pub regular_points: usize,
    /// Gauss points per dimension in the singular transforms.
    pub singular_order: usize,
    /// Pairs whose centroid distance is below this multiple of the larger
    /// triangle diameter use the near rule.
    pub near_threshold: f64,
    /// Gauss points per direction of the collapsed near rule.
    pub near_order: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            regular_points: 6,
            singular_order: 4,
            near_threshold: 1.5,
            near_order: 5,
        }
    }
}

impl QuadratureRule {
    pub fn validate(&self) -> Result<()> {
        symmetric_rule::<f64>(self.regular_points)?;
        if self.singular_order == 0 || self.near_order == 0 {
            return Err(Error::Parameter("quadrature orders must be positive".into()));
        }
        if !(self.near_threshold >= 0.0) {
            return Err(Error::Parameter("near threshold must be non-negative".into()));
        }
        Ok(())
    }
}

/// Precomputed point sets for one [`QuadratureRule`].
#[derive(Debug, Clone)]
pub struct QuadratureSet<T> {
    pub rule: QuadratureRule,
    pub regular: Vec<TriPoint<T>>,
    pub near: Vec<TriPoint<T>>,
    pub identical: Vec<PairPoint<T>>,
    pub edge: Vec<PairPoint<T>>,
    pub vertex: Vec<PairPoint<T>>,
}

impl<T: Real> QuadratureSet<T> {
    pub fn new(rule: QuadratureRule) -> Result<Self> {
        rule.validate()?;
        Ok(Self {
            rule,
            regular: symmetric_rule(rule.regular_points)?,
            near: collapsed_rule(rule.near_order),
            identical: singular_rule(SingularKind::Identical, rule.singular_order),
            edge: singular_rule(SingularKind::Edge, rule.singular_order),
            vertex: singular_rule(SingularKind::Vertex, rule.singular_order),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial(b: &[f64; 3], p: usize, q: usize) -> f64 {
        // x = b1, y = b2 on the unit right triangle
        b[1].powi(p as i32) * b[2].powi(q as i32)
    }

    fn exact_monomial(p: usize, q: usize) -> f64 {
        // int_T x^p y^q over the unit right triangle, normalised by its area
        let f = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        2.0 * f(p) * f(q) / f(p + q + 2)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre01(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for d in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((s - 1.0 / (d as f64 + 1.0)).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn symmetric_rules_reach_their_degree() {
        for (pts, deg) in [(1, 1), (3, 2), (6, 4), (7, 5), (12, 6)] {
            let r = symmetric_rule::<f64>(pts).unwrap();
            let total: f64 = r.iter().map(|p| p.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(r.iter().all(|p| p.weight > 0.0));
            for p in 0..=deg {
                for q in 0..=deg - p {
                    let s: f64 = r.iter().map(|t| t.weight * monomial(&t.bary, p, q)).sum();
                    assert!((s - exact_monomial(p, q)).abs() < 1e-11, "{pts} pts x^{p} y^{q}");
                }
            }
        }
        assert!(symmetric_rule::<f64>(5).is_err());
    }

    #[test]
    fn collapsed_rule_is_exact() {
        let r = collapsed_rule::<f64>(5);
        for p in 0..=8 {
            for q in 0..=8 - p {
                let s: f64 = r.iter().map(|t| t.weight * monomial(&t.bary, p, q)).sum();
                assert!((s - exact_monomial(p, q)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn classification() {
        assert_eq!(classify(&[0, 1, 2], &[2, 0, 1]), Adjacency::Identical);
        assert_eq!(classify(&[0, 1, 2], &[3, 4, 5]), Adjacency::Disjoint);
        match classify(&[0, 1, 2], &[2, 1, 7]) {
            Adjacency::Edge(a, b) => {
                let ta = [0, 1, 2];
                let tb = [2, 1, 7];
                assert_eq!(ta[a[0]], tb[b[0]]);
                assert_eq!(ta[a[1]], tb[b[1]]);
                assert_eq!(tb[b[2]], 7);
            }
            other => panic!("{other:?}"),
        }
        match classify(&[0, 1, 2], &[5, 6, 1]) {
            Adjacency::Vertex(a, b) => {
                assert_eq!(a[0], 1);
                assert_eq!(b[0], 2);
            }
            other => panic!("{other:?}"),
        }
    }

    /// Product polynomials `x1^p x2^q y1^r y2^s` have known integrals over
    /// the reference pair, so every transform must reproduce them.
    #[test]
    fn singular_rules_integrate_product_polynomials() {
        for kind in [SingularKind::Identical, SingularKind::Edge, SingularKind::Vertex] {
            let rule = singular_rule::<f64>(kind, 6);
            let total: f64 = rule.iter().map(|p| p.weight).sum();
            assert!((total - 1.0).abs() < 1e-13, "{kind:?}: {total}");
            for (p, q, r, s) in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 1), (2, 0, 0, 2), (1, 1, 1, 0)] {
                let got: f64 = rule
                    .iter()
                    .map(|pt| pt.weight * monomial(&pt.x, p, q) * monomial(&pt.y, r, s))
                    .sum();
                let want = exact_monomial(p, q) * exact_monomial(r, s);
                assert!((got - want).abs() < 1e-12, "{kind:?} ({p},{q},{r},{s}): {got} vs {want}");
            }
        }
    }

    /// The shared parts of the two parameterisations must coincide, which
    /// is where the transforms concentrate their points.
    #[test]
    fn singular_rules_sample_the_coincidence_set() {
        let rule = singular_rule::<f64>(SingularKind::Edge, 3);
        // shared edge is x2 = 0 in both triangles
        let min_sep = rule
            .iter()
            .map(|p| (p.x[1] - p.y[1]).abs() + p.x[2] + p.y[2])
            .fold(f64::INFINITY, f64::min);
        assert!(min_sep < 0.05);
    }
}
