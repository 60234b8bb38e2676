#![allow(dead_code)]

use qfsurf_core::circle::SphereCircle;
use qfsurf_core::vec3::Vec3;
use qfsurf_core::{Circle, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(r: &mut impl Rng) -> Point {
    loop {
        let v = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Two circles with disjoint closed disks, radii in (0.05, 1.2), gap >= 0.02.
pub fn random_disjoint_pair(r: &mut impl Rng) -> (Circle, Circle) {
    loop {
        let c1 = random_unit(r);
        let c2 = random_unit(r);
        let a1 = r.gen_range(0.05..1.2);
        let a2 = r.gen_range(0.05..1.2);
        let gap = c1.angle_to(c2) - a1 - a2;
        if gap > 0.02 {
            return (SphereCircle::cap(c1, a1).unwrap(), SphereCircle::cap(c2, a2).unwrap());
        }
    }
}

/// Independent d_L oracle: restrict to the totally geodesic plane through both
/// centers, move to the upper half-plane, and minimise the hyperbolic distance
/// between points on the two geodesics by alternating golden-section search
/// over hyperbolic arclength parameters.
pub fn brute_force_dl(c1: &Circle, c2: &Circle) -> f64 {
    let ea = c1.normal;
    let perp = c2.normal - ea * ea.dot(c2.normal);
    let eb = if perp.norm() < 1e-12 { ea.any_orthogonal() } else { perp.normalized() };
    let theta = c2.normal.dot(eb).atan2(c2.normal.dot(ea));
    let (a1, a2) = (c1.angular_radius(), c2.angular_radius());
    let mut ends = [-a1, a1, theta - a2, theta + a2];
    for e in ends.iter_mut() {
        *e = e.rem_euclid(std::f64::consts::TAU);
    }
    let mut sorted = ends;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (0.0, 0.0);
    for k in 0..4 {
        let lo = sorted[k];
        let hi = if k == 3 { sorted[0] + std::f64::consts::TAU } else { sorted[k + 1] };
        if hi - lo > best.0 {
            best = (hi - lo, 0.5 * (lo + hi));
        }
    }
    let phi0 = best.1;
    // Cayley map of the boundary: angle phi -> real x = -cot((phi - phi0)/2).
    let to_x = |phi: f64| -1.0 / ((phi - phi0) / 2.0).tan();
    let g1 = (to_x(ends[0]), to_x(ends[1]));
    let g2 = (to_x(ends[2]), to_x(ends[3]));
    let point = |g: (f64, f64), s: f64| -> (f64, f64) {
        let m = 0.5 * (g.0 + g.1);
        let r = 0.5 * (g.0 - g.1).abs();
        (m + r * s.tanh(), r / s.cosh())
    };
    let dist = |s: f64, t: f64| -> f64 {
        let (x1, y1) = point(g1, s);
        let (x2, y2) = point(g2, t);
        let q = ((x1 - x2).powi(2) + (y1 - y2).powi(2)) / (2.0 * y1 * y2);
        (1.0 + q).acosh()
    };
    let golden = |fun: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (fun(x1), fun(x2));
        for _ in 0..200 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = fun(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = fun(x2);
            }
        }
        0.5 * (lo + hi)
    };
    // Nested search: the distance is jointly convex in the arclength parameters.
    let inner = |s: f64| {
        let t = golden(&|y| dist(s, y), -40.0, 40.0);
        dist(s, t)
    };
    let s = golden(&inner, -40.0, 40.0);
    let t = golden(&|y| dist(s, y), -40.0, 40.0);
    dist(s, t)
}

/// Composite 5-point Gauss-Legendre quadrature on `panels` equal panels.
pub fn gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.5384693101056831, 0.5384693101056831, -0.906179845938664, 0.906179845938664];
    const W: [f64; 5] = [0.5688888888888889, 0.47862867049936647, 0.47862867049936647, 0.23692688505618908, 0.23692688505618908];
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let m = a + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W.iter()) {
            sum += w * f(m + 0.5 * h * x);
        }
    }
    sum * 0.5 * h
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `sqrt(S(r)^2 - k^2) / v` at `r = a + v^2`, where `S = sinh r cosh r`.
fn root_over_v(a: f64, v: f64) -> f64 {
    let r = a + v * v;
    let s = r.sinh() * r.cosh();
    let k = a.sinh() * a.cosh();
    ((r + a).cosh() * sinhc(v * v) * (s + k)).sqrt()
}

/// d(a) by quadrature of `dt/dr = k / (cosh r sqrt(S^2 - k^2))` from the
/// first integral, with `r = a + v^2` removing the endpoint singularity.
pub fn oracle_plane_separation(a: f64) -> f64 {
    let k = a.sinh() * a.cosh();
    let f = |v: f64| {
        let r = a + v * v;
        2.0 * k / (r.cosh() * root_over_v(a, v))
    };
    2.0 * gauss(&f, 0.0, 25f64.sqrt(), 4000)
}

/// Limit of the truncated area deficit, from
/// `4 pi (1 - cosh a + int_a^inf sinh r (S / sqrt(S^2 - k^2) - 1) dr)`.
pub fn oracle_area_deficit(a: f64) -> f64 {
    let f = |v: f64| {
        let r = a + v * v;
        let s = r.sinh() * r.cosh();
        let k = a.sinh() * a.cosh();
        let root = root_over_v(a, v);
        // 2 v sinh r (S / sqrt(S^2 - k^2) - 1), rewritten without cancellation.
        2.0 * r.sinh() * k * k / (root * (s + v * root))
    };
    let int = gauss(&f, 0.0, 30f64.sqrt(), 4000);
    4.0 * std::f64::consts::PI * (1.0 - a.cosh() + int)
}

/// Directed Hausdorff distance sup_{p in a} min_{q in b} |p - q| (chordal), brute force.
pub fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    use rayon::prelude::*;
    a.par_iter()
        .map(|p| b.iter().map(|q| (*p - *q).norm_sqr()).fold(f64::INFINITY, f64::min).sqrt())
        .reduce(|| 0.0, f64::max)
}

pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Closed curve `z = amp * sin(k * phi)` lifted to the sphere, `n` vertices.
pub fn wobbly_curve(n: usize, amp: f64, k: f64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / n as f64;
            let z = amp * (k * phi).sin();
            let r = (1.0 - z * z).sqrt();
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}
