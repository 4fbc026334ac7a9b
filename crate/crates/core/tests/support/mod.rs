//! Brute-force reference integrators shared by the integration tests.
//!
//! Everything here is written directly from the definitions of the RWG
//! functions and the Helmholtz kernel, without the library's quadrature
//! tables or singular transforms.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use wgf_mom::assembly::{assemble_kernel, KernelKind};
use wgf_mom::geometry::{build_rwg_basis, RwgBasis, TriangleMesh};
use wgf_mom::quadrature::QuadratureRule;
use wgf_mom::window::WindowParams;
use wgf_mom::Vec3;

type P = [f64; 3];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: P, b: P) -> P {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn mul(a: P, s: f64) -> P {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: P, b: P) -> P {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: P) -> f64 {
    dot(a, a).sqrt()
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Piece<const N: usize> {
    a: f64,
    b: f64,
    val: [C; N],
    err: f64,
}

/// Kronrod value on `[a, b]` with the usual scaled Kronrod-minus-Gauss
/// error estimate.
fn piece<const N: usize>(f: &dyn Fn(f64) -> [C; N], a: f64, b: f64) -> Piece<N> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc.map(|v| v * WGK[7]);
    let mut g = fc.map(|v| v * WG[3]);
    for j in 0..7 {
        let f1 = f(c - h * XGK[j]);
        let f2 = f(c + h * XGK[j]);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += s * WGK[j];
            if j % 2 == 1 {
                g[i] += s * WG[j / 2];
            }
        }
    }
    let val = k.map(|v| v * h);
    let size = val.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let raw = (0..N).map(|i| (k[i] - g[i]).norm() * h.abs()).fold(0.0, f64::max);
    let err = if size > 0.0 { raw * (200.0 * raw / size).powf(1.5).min(1.0) } else { raw };
    Piece { a, b, val, err }
}

/// Globally adaptive 15-point Gauss–Kronrod integral of a vector-valued
/// function on `[a, b]`: the interval with the largest error estimate is
/// bisected until the total estimate drops below `rel` times the result
/// (max norm) or below `abs`, or `max_pieces` intervals are in use.
pub fn adaptive<const N: usize>(f: &dyn Fn(f64) -> [C; N], a: f64, b: f64, rel: f64, abs: f64, max_pieces: usize) -> [C; N] {
    let mut pieces = vec![piece(f, a, b)];
    loop {
        let mut total = [C::new(0.0, 0.0); N];
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            for k in 0..N {
                total[k] += p.val[k];
            }
            err += p.err;
            if p.err > pieces[worst].err {
                worst = i;
            }
        }
        let size = total.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if err <= (rel * size).max(abs) || pieces.len() >= max_pieces {
            return total;
        }
        let p = pieces.swap_remove(worst);
        let c = 0.5 * (p.a + p.b);
        pieces.push(piece(f, p.a, c));
        pieces.push(piece(f, c, p.b));
    }
}

/// Integral over the triangle `apex, b, c` through the collapsed map
/// `y = apex + u ((1 - v)(b - apex) + v (c - apex))`, which removes a point
/// singularity at the apex and maps the three edges onto coordinate lines.
pub fn triangle<const N: usize>(f: &dyn Fn(P) -> [C; N], apex: P, b: P, c: P, tol: f64) -> [C; N] {
    triangle_near(f, apex, b, c, 0.0, tol, 0.0)
}

/// As [`triangle`], for a singularity at distance `delta` from the apex:
/// the radial variable is stretched with `rho = delta sinh(s)`, which makes
/// `1/R` and `1/R^2` behaviour smooth in `s`.
pub fn triangle_near<const N: usize>(f: &dyn Fn(P) -> [C; N], apex: P, b: P, c: P, delta: f64, tol: f64, abs: f64) -> [C; N] {
    let (eb, ec) = (sub(b, apex), sub(c, apex));
    let jac = norm(cross(eb, ec));
    let inner = |v: f64| -> [C; N] {
        let dir = add(mul(eb, 1.0 - v), mul(ec, v));
        let len = norm(dir);
        if delta > 1e-6 * len && delta < len {
            let r = delta / len;
            let g = |s: f64| -> [C; N] {
                let u = r * s.sinh();
                f(add(apex, mul(dir, u))).map(|z| z * (u * jac * r * s.cosh()))
            };
            adaptive(&g, 0.0, (1.0 / r).asinh(), tol, abs, 200)
        } else {
            let g = |u: f64| -> [C; N] { f(add(apex, mul(dir, u))).map(|z| z * (u * jac)) };
            adaptive(&g, 0.0, 1.0, tol, abs, 200)
        }
    };
    adaptive(&inner, 0.0, 1.0, tol, abs, 200)
}

/// Collapsed-map integral with `v = t^3`, which smooths a logarithmic
/// singularity along the edge from `tri[0]` to `tri[1]`.
pub fn triangle_graded<const N: usize>(f: &dyn Fn(P) -> [C; N], tri: [P; 3], tol: f64) -> [C; N] {
    let abs = 0.0;
    let [apex, b, c] = tri;
    let (eb, ec) = (sub(b, apex), sub(c, apex));
    let jac = norm(cross(eb, ec));
    let inner = |t: f64| -> [C; N] {
        let v = t * t * t;
        let dir = add(mul(eb, 1.0 - v), mul(ec, v));
        let g = |u: f64| -> [C; N] { f(add(apex, mul(dir, u))).map(|z| z * (u * jac * 3.0 * t * t)) };
        adaptive(&g, 0.0, 1.0, tol, abs, 200)
    };
    adaptive(&inner, 0.0, 1.0, tol, abs, 200)
}

/// Collapsed-map integral with `u = 1 - (1 - s)^3`, which smooths a
/// logarithmic singularity along the edge from `tri[1]` to `tri[2]`.
pub fn triangle_graded_edge<const N: usize>(f: &dyn Fn(P) -> [C; N], tri: [P; 3], tol: f64) -> [C; N] {
    let abs = 0.0;
    let [apex, b, c] = tri;
    let (eb, ec) = (sub(b, apex), sub(c, apex));
    let jac = norm(cross(eb, ec));
    let inner = |v: f64| -> [C; N] {
        let dir = add(mul(eb, 1.0 - v), mul(ec, v));
        let g = |s: f64| -> [C; N] {
            let m = 1.0 - s;
            let u = 1.0 - m * m * m;
            f(add(apex, mul(dir, u))).map(|z| z * (u * jac * 3.0 * m * m))
        };
        adaptive(&g, 0.0, 1.0, tol, abs, 200)
    };
    adaptive(&inner, 0.0, 1.0, tol, abs, 200)
}

/// Point of the triangle closest to `x`.
pub fn closest_point(tri: [P; 3], x: P) -> P {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let nh = mul(n, 1.0 / norm(n));
    let xp = sub(x, mul(nh, dot(sub(x, tri[0]), nh)));
    let inside = (0..3).all(|i| dot(cross(sub(tri[(i + 1) % 3], tri[i]), sub(xp, tri[i])), nh) >= 0.0);
    if inside {
        return xp;
    }
    let mut best = tri[0];
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        let e = sub(b, a);
        let t = (dot(sub(x, a), e) / dot(e, e)).clamp(0.0, 1.0);
        let c = add(a, mul(e, t));
        if norm(sub(x, c)) < norm(sub(x, best)) {
            best = c;
        }
    }
    best
}

/// Integral over a triangle split about the point closest to `x`, so that
/// a singularity at (or close to) `x` sits at the apex of each piece.
pub fn triangle_about<const N: usize>(f: &dyn Fn(P) -> [C; N], tri: [P; 3], x: P, tol: f64) -> [C; N] {
    let twice = norm(cross(sub(tri[1], tri[0]), sub(tri[2], tri[0])));
    let apex = closest_point(tri, x);
    // absolute floor from a coarse whole-triangle estimate, so thin pieces
    // are not resolved to their own relative accuracy
    let centroid = mul(add(add(tri[0], tri[1]), tri[2]), 1.0 / 3.0);
    let coarse = [centroid, tri[0], tri[1], tri[2]]
        .iter()
        .flat_map(|&y| f(y))
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        * 0.5
        * twice;
    let abs = tol * coarse;
    let mut out = [C::new(0.0, 0.0); N];
    for i in 0..3 {
        let (b, c) = (tri[i], tri[(i + 1) % 3]);
        if norm(cross(sub(b, apex), sub(c, apex))) < 1e-13 * twice {
            continue;
        }
        let part = triangle_near(f, apex, b, c, norm(sub(x, apex)), tol, abs);
        for k in 0..N {
            out[k] += part[k];
        }
    }
    out
}

/// `exp(ikR)/(4 pi R)` and its gradient in the first argument.
fn green(k: C, x: P, y: P) -> (C, [C; 3]) {
    let d = sub(x, y);
    let r = norm(d);
    if r == 0.0 {
        return (C::new(0.0, 0.0), [C::new(0.0, 0.0); 3]);
    }
    let g = (C::i() * k * r).exp() / (4.0 * std::f64::consts::PI * r);
    let s = g * (C::i() * k - 1.0 / r) / r;
    (g, [s * d[0], s * d[1], s * d[2]])
}

fn cdot(a: [C; 3], b: P) -> C {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Wavenumbers and window used by [`pair_reference`].
#[derive(Clone, Copy)]
pub struct KernelSet {
    pub k: C,
    pub k1: C,
    pub k2: C,
    pub window: Option<WindowParams<f64>>,
}

impl KernelSet {
    fn w(&self, y: P) -> f64 {
        match &self.window {
            None => 1.0,
            Some(w) => w.value(wgf_mom::Vec3::new(y[0], y[1], y[2])),
        }
    }
}

/// Local RWG data of one triangle: corners, unit normal, area.
#[derive(Clone, Copy)]
pub struct Tri {
    pub p: [P; 3],
    pub n: P,
    pub area: f64,
}

impl Tri {
    pub fn new(p: [P; 3]) -> Self {
        let c = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let t = norm(c);
        Self {
            p,
            n: mul(c, 1.0 / t),
            area: 0.5 * t,
        }
    }
}

/// Entries `[kind][a][b]` for free vertices `a` of the test triangle and
/// `b` of the source triangle, with the unnormalised shapes `x - p_a` and
/// unit divergence in place of `div f`:
/// kind 0 is `int (x - p_a) . (n x curl int G_k w (y - p_b))`,
/// kind 1 is `int (x - p_a) . (n x int G_k w (y - p_b))`,
/// kind 2 is `int (x - p_a) . (n x int grad(G_k2 - G_k1) w)` (independent of `b`).
pub fn pair_reference(test: &Tri, src: &Tri, ks: &KernelSet, tol: f64) -> [[[C; 3]; 3]; 3] {
    // In a common plane grad G x f_b is normal to the plane, so the
    // double-layer integrand vanishes identically and is not sampled
    // (round-off would otherwise feed the near-field jump).
    let shared: Vec<usize> = (0..3).filter(|&i| src.p.iter().any(|&q| norm(sub(q, test.p[i])) == 0.0)).collect();
    // disjoint pairs are cheap; resolve them further
    let tol = if shared.is_empty() { 1e-2 * tol } else { tol };
    let coplanar = norm(cross(test.n, src.n)) < 1e-12 && dot(sub(test.p[0], src.p[0]), src.n).abs() < 1e-12;
    let outer = |x: P| -> [C; 27] {
        let inner = |y: P| -> [C; 27] {
            let w = ks.w(y);
            let (g, dg) = green(ks.k, x, y);
            let (_, d1) = green(ks.k1, x, y);
            let (_, d2) = green(ks.k2, x, y);
            let dd = [d2[0] - d1[0], d2[1] - d1[1], d2[2] - d1[2]];
            let mut v = [C::new(0.0, 0.0); 27];
            for a in 0..3 {
                let fa = sub(x, test.p[a]);
                let q = cross(fa, test.n);
                for b in 0..3 {
                    let fb = sub(y, src.p[b]);
                    // f_a . (n x (grad G x f_b)) = (grad G x f_b) . (f_a x n)
                    let c = [
                        dg[1] * fb[2] - dg[2] * fb[1],
                        dg[2] * fb[0] - dg[0] * fb[2],
                        dg[0] * fb[1] - dg[1] * fb[0],
                    ];
                    if !coplanar {
                        v[a * 3 + b] = (c[0] * q[0] + c[1] * q[1] + c[2] * q[2]) * w;
                    }
                    v[9 + a * 3 + b] = g * dot(q, fb) * w;
                }
                v[18 + a * 3] = cdot(dd, q) * w;
            }
            v
        };
        triangle_about(&inner, src.p, x, 1e-2 * tol)
    };
    // put a shared corner at the apex and a shared edge on v = 0
    let order = match shared.as_slice() {
        [a] => [*a, (a + 1) % 3, (a + 2) % 3],
        [a, b] => [*a, *b, 3 - a - b],
        _ => [0, 1, 2],
    };
    let r = if shared.len() == 3 {
        // three pieces from the centroid, graded toward the outer edges
        let g = mul(add(add(test.p[0], test.p[1]), test.p[2]), 1.0 / 3.0);
        let mut sum = [C::new(0.0, 0.0); 27];
        for i in 0..3 {
            let part = triangle_graded_edge(&outer, [g, test.p[i], test.p[(i + 1) % 3]], tol);
            for k in 0..27 {
                sum[k] += part[k];
            }
        }
        sum
    } else if shared.len() == 2 {
        // split at the middle of the shared edge so that both of its
        // corners sit at an apex
        let [a, b, c] = order.map(|i| test.p[i]);
        let m = mul(add(a, b), 0.5);
        let mut sum = triangle_graded(&outer, [a, m, c], tol);
        let part = triangle_graded(&outer, [b, m, c], tol);
        for k in 0..27 {
            sum[k] += part[k];
        }
        sum
    } else {
        triangle_graded(&outer, order.map(|i| test.p[i]), tol)
    };
    let mut out = [[[C::new(0.0, 0.0); 3]; 3]; 3];
    for kind in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                out[kind][a][b] = if kind == 2 { r[18 + a * 3] } else { r[kind * 9 + a * 3 + b] };
            }
        }
    }
    out
}

/// Exact `int (x - p) . (x - q)` over a flat triangle: products of affine
/// functions integrate to `A/12 (sum f_i g_i + sum f_i sum g_i)`.
pub fn affine_product(t: &Tri, p: P, q: P) -> f64 {
    let fs: Vec<P> = t.p.iter().map(|&v| sub(v, p)).collect();
    let gs: Vec<P> = t.p.iter().map(|&v| sub(v, q)).collect();
    let mut s = 0.0;
    let (mut sf, mut sg) = ([0.0; 3], [0.0; 3]);
    for i in 0..3 {
        s += dot(fs[i], gs[i]);
        sf = add(sf, fs[i]);
        sg = add(sg, gs[i]);
    }
    t.area / 12.0 * (s + dot(sf, sg))
}

/// Dense reference matrices `[I1(k), I2(k), I3(k1, k2), Gram]` for the
/// RWG basis of a small mesh.
pub fn reference_matrices(mesh: &TriangleMesh<f64>, basis: &RwgBasis<f64>, ks: &KernelSet, tol: f64) -> [Vec<Vec<C>>; 4] {
    let tris: Vec<Tri> = mesh
        .triangles()
        .iter()
        .map(|t| Tri::new(t.map(|i| {
            let v = mesh.vertices()[i];
            [v.x, v.y, v.z]
        })))
        .collect();
    // (triangle, local free-vertex index, coefficient l/(2A) with sign, divergence)
    let support = |n: usize| -> Vec<(usize, usize, f64, f64)> {
        let e = basis.edge(n);
        let va = mesh.vertices()[e.vertices[0]];
        let vb = mesh.vertices()[e.vertices[1]];
        let l = norm(sub([va.x, va.y, va.z], [vb.x, vb.y, vb.z]));
        [(e.plus, 1.0), (e.minus, -1.0)]
            .into_iter()
            .map(|(t, s)| {
                let free = mesh.triangles()[t].iter().position(|v| !e.vertices.contains(v)).unwrap();
                let a = tris[t].area;
                (t, free, s * l / (2.0 * a), s * l / a)
            })
            .collect()
    };
    let nb = basis.len();
    let nt = tris.len();
    let mut pairs = vec![None; nt * nt];
    let mut get = |t: usize, s: usize| -> [[[C; 3]; 3]; 3] {
        *pairs[t * nt + s].get_or_insert_with(|| pair_reference(&tris[t], &tris[s], ks, tol))
    };
    let zero = C::new(0.0, 0.0);
    let mut out = [(); 4].map(|_| vec![vec![zero; nb]; nb]);
    for m in 0..nb {
        for n in 0..nb {
            for &(t, a, cm, _) in &support(m) {
                for &(s, b, cn, dn) in &support(n) {
                    let r = get(t, s);
                    out[0][m][n] += r[0][a][b] * (cm * cn);
                    out[1][m][n] += r[1][a][b] * (cm * cn);
                    out[2][m][n] += r[2][a][0] * (cm * dn);
                    if t == s {
                        out[3][m][n] += affine_product(&tris[t], tris[t].p[a], tris[s].p[b]) * (cm * cn);
                    }
                }
            }
        }
    }
    out
}

/// Two triangles folded along a shared edge.
pub fn folded_pair() -> TriangleMesh<f64> {
    let v = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.3, 0.8, 0.25),
        Vec3::new(0.6, -0.7, 0.4),
    ];
    TriangleMesh::new(v, vec![[0, 1, 2], [1, 0, 3]]).unwrap()
}

/// Regular octahedron: eight triangles, twelve RWG functions.
pub fn octahedron() -> TriangleMesh<f64> {
    let r = 0.7;
    let v = vec![
        Vec3::new(r, 0.0, 0.0),
        Vec3::new(0.0, r, 0.0),
        Vec3::new(-r, 0.0, 0.0),
        Vec3::new(0.0, -r, 0.0),
        Vec3::new(0.0, 0.0, r),
        Vec3::new(0.0, 0.0, -r),
    ];
    let mut t = Vec::new();
    for i in 0..4 {
        let j = (i + 1) % 4;
        t.push([i, j, 4]);
        t.push([j, i, 5]);
    }
    TriangleMesh::new(v, t).unwrap()
}

pub fn micro_kernels() -> KernelSet {
    KernelSet {
        k: C::new(1.3, 0.0),
        k1: C::new(1.3, 0.0),
        k2: C::new(2.1, 0.15),
        window: Some(WindowParams::radial(2.0, 0.1).unwrap()),
    }
}

pub fn raised_rule() -> QuadratureRule {
    QuadratureRule {
        regular_points: 12,
        singular_order: 16,
        near_threshold: 1e3,
        near_order: 16,
    }
}

/// `max |a - r| / max |r|`.
pub fn max_rel(a: &nalgebra::DMatrix<C>, r: &[Vec<C>]) -> f64 {
    let scale = r.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let mut diff = 0.0f64;
    for (i, row) in r.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            diff = diff.max((a[(i, j)] - v).norm());
        }
    }
    diff / scale
}

/// Relative entry errors of the library matrices against the brute-force
/// reference, as `(kind, raised rule, default rule)`.
pub fn micro_errors(mesh: &TriangleMesh<f64>) -> Vec<(&'static str, f64, f64)> {
    let basis = build_rwg_basis(mesh).unwrap();
    let ks = micro_kernels();
    let refs = reference_matrices(mesh, &basis, &ks, 1e-8);
    let kinds = [
        ("I1", KernelKind::DoubleLayer { k: ks.k }),
        ("I2", KernelKind::SingleLayer { k: ks.k }),
        ("I3", KernelKind::GradientDifference { k1: ks.k1, k2: ks.k2 }),
        ("gram", KernelKind::Gram),
    ];
    kinds
        .into_iter()
        .zip(&refs)
        .map(|((label, kind), r)| {
            let hi = assemble_kernel(mesh, &basis, &ks.window, &raised_rule(), kind).unwrap();
            let lo = assemble_kernel(mesh, &basis, &ks.window, &QuadratureRule::default(), kind).unwrap();
            (label, max_rel(&hi, r), max_rel(&lo, r))
        })
        .collect()
}
