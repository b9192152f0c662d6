//! SL(2, R) matrices acting on the upper half-plane: products, axes of
//! hyperbolic elements, boundary disks and their Mobius images, and arc-length
//! quadrature along closed geodesics.

use crate::error::{Error, Result};
use crate::orbits::{HPoint, HTangent};

/// A real 2x2 matrix, normally with determinant 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    /// Inverse of a determinant-1 matrix in closed form.
    pub fn inverse_sl2(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }
}

/// Product of a word of matrices, multiplied as a balanced tree: pairwise
/// rounding errors then grow with the tree depth (log n) rather than the word
/// length, which matters for words of 60+ letters.
pub fn balanced_product(mats: &[Mat2]) -> Mat2 {
    match mats.len() {
        0 => Mat2::IDENTITY,
        1 => mats[0],
        n => balanced_product(&mats[..n / 2]).mul(&balanced_product(&mats[n / 2..])),
    }
}

/// A closed Euclidean disk centered on the boundary line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: f64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: f64, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn disjoint_from(&self, other: &Disk) -> bool {
        (self.center - other.center).abs() > self.radius + other.radius
    }

    pub fn contains_point(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.radius
    }

    /// Whether `inner` sits inside `self`, with `slack` of tolerance.
    pub fn contains_disk(&self, inner: &Disk, slack: f64) -> bool {
        (inner.center - self.center).abs() + inner.radius <= self.radius + slack
    }

    /// Distance from a boundary point to the nearest point of the disk
    /// (zero inside).
    pub fn distance_to(&self, x: f64) -> f64 {
        ((x - self.center).abs() - self.radius).max(0.0)
    }
}

/// Isometric circle of a Mobius transformation with `c != 0`: the locus where
/// |m'(z)| = 1, centered at the pole -d/c with radius 1/|c|.
pub fn isometric_circle(m: &Mat2) -> Option<Disk> {
    if m.c.abs() < 1e-12 {
        return None;
    }
    Some(Disk::new(-m.d / m.c, 1.0 / m.c.abs()))
}

/// Image of a boundary disk under a Mobius map, valid when the pole lies
/// strictly outside the disk (then the disk maps to a disk, not a half-plane
/// complement). Uses m(z) = a/c - 1/(c^2 (z - pole)).
pub fn map_disk(m: &Mat2, disk: &Disk) -> Option<Disk> {
    if m.c.abs() < 1e-12 {
        return None;
    }
    let pole = -m.d / m.c;
    let q = disk.center - pole;
    let s = q * q - disk.radius * disk.radius;
    if s <= 0.0 {
        return None; // pole inside or on the disk
    }
    let c2 = m.c * m.c;
    Some(Disk::new(m.a / m.c - q / (c2 * s), disk.radius / (c2 * s)))
}

/// Axis of a hyperbolic isometry: its boundary fixed points (the repelling
/// one may be at infinity, encoded as `f64::INFINITY`) and the translation
/// length 2 arccosh(|tr|/2).
#[derive(Clone, Copy, Debug)]
pub struct GeodesicAxis {
    pub attracting: f64,
    pub repelling: f64,
    pub translation_length: f64,
}

impl GeodesicAxis {
    pub fn from_matrix(m: &Mat2) -> Result<GeodesicAxis> {
        let tr = m.trace();
        if tr.abs() <= 2.0 {
            return Err(Error::NonHyperbolic { trace_abs: tr.abs() });
        }
        let translation_length = 2.0 * (tr.abs() / 2.0).acosh();
        if m.c.abs() >= 1e-12 {
            let root = (tr * tr - 4.0).sqrt();
            let sign = tr.signum();
            let attracting = (m.a - m.d + sign * root) / (2.0 * m.c);
            let repelling = (m.a - m.d - sign * root) / (2.0 * m.c);
            Ok(GeodesicAxis { attracting, repelling, translation_length })
        } else {
            // fixes infinity; the finite fixed point is b/(d - a)
            let finite = m.b / (m.d - m.a);
            if m.a.abs() > m.d.abs() {
                Ok(GeodesicAxis {
                    attracting: f64::INFINITY,
                    repelling: finite,
                    translation_length,
                })
            } else {
                Ok(GeodesicAxis {
                    attracting: finite,
                    repelling: f64::INFINITY,
                    translation_length,
                })
            }
        }
    }

    /// Unit-speed point at parameter `s`; `s = 0` sits at the apex of the
    /// half-circle axis (height 1 for vertical axes), flowing toward the
    /// attracting endpoint.
    pub fn point(&self, s: f64) -> HPoint {
        if self.attracting.is_infinite() {
            HPoint { x: self.repelling, y: s.exp() }
        } else if self.repelling.is_infinite() {
            HPoint { x: self.attracting, y: (-s).exp() }
        } else {
            let u = self.repelling;
            let w = self.attracting;
            let e2 = (2.0 * s).exp();
            HPoint {
                x: (u + w * e2) / (1.0 + e2),
                y: (w - u).abs() * s.exp() / (1.0 + e2),
            }
        }
    }

    /// Euclidean components of the unit tangent at parameter `s` (hyperbolic
    /// norm 1: Euclidean norm equals the height).
    pub fn tangent(&self, s: f64) -> HTangent {
        if self.attracting.is_infinite() {
            HTangent { dx: 0.0, dy: s.exp() }
        } else if self.repelling.is_infinite() {
            HTangent { dx: 0.0, dy: -(-s).exp() }
        } else {
            let u = self.repelling;
            let w = self.attracting;
            let e = s.exp();
            let e2 = e * e;
            let denom = (1.0 + e2) * (1.0 + e2);
            HTangent {
                dx: 2.0 * (w - u) * e2 / denom,
                dy: (w - u).abs() * e * (1.0 - e2) / denom,
            }
        }
    }

    /// Composite midpoint rule for `integral of f over one period [0, L)`,
    /// with the step shrunk so it divides the period evenly.
    pub fn integrate_sampled(
        &self,
        length: f64,
        step: f64,
        f: &dyn Fn(HPoint, HTangent) -> f64,
    ) -> f64 {
        let n = (length / step).ceil().max(1.0) as usize;
        let h = length / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let s = (k as f64 + 0.5) * h;
            acc += f(self.point(s), self.tangent(s));
        }
        acc * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_product_example() {
        let a = Mat2::new(2.0, 0.0, 0.0, 0.5);
        let b = Mat2::new(5.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0);
        let ab = a.mul(&b);
        let expected = Mat2::new(10.0 / 3.0, 8.0 / 3.0, 2.0 / 3.0, 5.0 / 6.0);
        assert!((ab.a - expected.a).abs() < 1e-15);
        assert!((ab.b - expected.b).abs() < 1e-15);
        assert!((ab.c - expected.c).abs() < 1e-15);
        assert!((ab.d - expected.d).abs() < 1e-15);
    }

    #[test]
    fn closed_form_inverse() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let id = m.mul(&m.inverse_sl2());
        assert!((id.a - 1.0).abs() < 1e-15);
        assert!(id.b.abs() < 1e-15);
        assert!(id.c.abs() < 1e-15);
        assert!((id.d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn balanced_product_matches_left_fold() {
        let mats: Vec<Mat2> = (0..9)
            .map(|i| {
                let t = 0.3 * i as f64;
                // hyperbolic-ish det-1 matrices
                Mat2::new(t.cosh() + 0.1 * i as f64, t.sinh(), t.sinh(), t.cosh() + 0.1 * i as f64)
            })
            .map(|m| {
                let det = m.det();
                let s = det.abs().sqrt();
                Mat2::new(m.a / s, m.b / s, m.c / s, m.d / s)
            })
            .collect();
        let tree = balanced_product(&mats);
        let fold = mats.iter().fold(Mat2::IDENTITY, |acc, m| acc.mul(m));
        let scale = fold.a.abs().max(fold.b.abs()).max(fold.c.abs()).max(fold.d.abs());
        assert!((tree.a - fold.a).abs() / scale < 1e-12);
        assert!((tree.b - fold.b).abs() / scale < 1e-12);
        assert!((tree.c - fold.c).abs() / scale < 1e-12);
        assert!((tree.d - fold.d).abs() / scale < 1e-12);
        assert_eq!(balanced_product(&[]), Mat2::IDENTITY);
    }

    #[test]
    fn diagonal_axis_is_the_imaginary_halfline() {
        let axis = GeodesicAxis::from_matrix(&Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert!((axis.translation_length - 1.3862943611198906).abs() < 1e-15); // 2 log 2
        assert!(axis.attracting.is_infinite());
        assert_eq!(axis.repelling, 0.0);
        let p = axis.point(0.0);
        assert_eq!((p.x, p.y), (0.0, 1.0));
        let v = axis.tangent(0.0);
        assert_eq!((v.dx, v.dy), (0.0, 1.0));
    }

    #[test]
    fn finite_axis_fixed_points() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let axis = GeodesicAxis::from_matrix(&m).unwrap();
        assert!((axis.translation_length - 1.9248473002384139).abs() < 1e-15);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((axis.attracting - phi).abs() < 1e-15);
        assert!((axis.repelling - (1.0 - 5.0f64.sqrt()) / 2.0).abs() < 1e-15);
        // endpoints are reached in the limits
        assert!((axis.point(20.0).x - phi).abs() < 1e-8);
        assert!((axis.point(-20.0).x - axis.repelling).abs() < 1e-8);
    }

    #[test]
    fn non_hyperbolic_matrices_are_rejected() {
        for m in [
            Mat2::new(0.0, 1.0, -1.0, 0.0), // rotation, tr 0
            Mat2::new(1.0, 1.0, 0.0, 1.0),  // parabolic, tr 2
        ] {
            match GeodesicAxis::from_matrix(&m) {
                Err(Error::NonHyperbolic { trace_abs }) => assert!(trace_abs <= 2.0),
                other => panic!("expected non-hyperbolic error, got {other:?}"),
            }
        }
    }

    #[test]
    fn axis_parametrization_has_unit_speed() {
        let axis = GeodesicAxis::from_matrix(&Mat2::new(2.0, 1.0, 1.0, 1.0)).unwrap();
        let h = 1e-6;
        for s in [-1.3, -0.2, 0.0, 0.7, 2.1] {
            let p0 = axis.point(s - h);
            let p1 = axis.point(s + h);
            let speed =
                ((p1.x - p0.x).powi(2) + (p1.y - p0.y).powi(2)).sqrt() / (2.0 * h * axis.point(s).y);
            assert!((speed - 1.0).abs() < 1e-5, "s = {s}: speed {speed}");
            // analytic tangent agrees with the finite difference
            let v = axis.tangent(s);
            assert!((v.dx - (p1.x - p0.x) / (2.0 * h)).abs() < 1e-5);
            assert!((v.dy - (p1.y - p0.y) / (2.0 * h)).abs() < 1e-5);
        }
    }

    #[test]
    fn isometric_circles_and_disk_images() {
        let m = Mat2::new(1.25, 0.75, 0.75, 1.25);
        let iso = isometric_circle(&m).unwrap();
        assert!((iso.center - (-5.0 / 3.0)).abs() < 1e-15);
        assert!((iso.radius - 4.0 / 3.0).abs() < 1e-15);
        assert!(isometric_circle(&Mat2::new(2.0, 0.0, 0.0, 0.5)).is_none());

        // a disk not containing the pole maps to a disk; its two real
        // boundary points must map onto the image's real boundary points
        let disk = Disk::new(19.0 / 3.0, 2.0 / 3.0);
        let image = map_disk(&m, &disk).unwrap();
        let mobius = |z: f64| (m.a * z + m.b) / (m.c * z + m.d);
        let mut got = [mobius(disk.center - disk.radius), mobius(disk.center + disk.radius)];
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let want = [image.center - image.radius, image.center + image.radius];
        assert!((got[0] - want[0]).abs() < 1e-12);
        assert!((got[1] - want[1]).abs() < 1e-12);

        // pole inside the disk: no disk image
        assert!(map_disk(&m, &Disk::new(-5.0 / 3.0, 0.5)).is_none());
    }

    #[test]
    fn midpoint_quadrature_matches_dense_simpson() {
        // vertical axis of diag(2, 1/2): z(s) = i e^s, period 2 log 2
        let axis = GeodesicAxis::from_matrix(&Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap();
        let len = axis.translation_length;
        let bump = |p: HPoint, _: HTangent| (-4.0 * (p.y - 1.5) * (p.y - 1.5)).exp();

        // dense Simpson reference on g(s) = bump(i e^s)
        let n = 1 << 16;
        let h = len / n as f64;
        let g = |s: f64| (-4.0 * (s.exp() - 1.5) * (s.exp() - 1.5)).exp();
        let mut simpson = g(0.0) + g(len);
        for k in 1..n {
            simpson += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        simpson *= h / 3.0;

        let quad = axis.integrate_sampled(len, 1e-4, &bump);
        assert!((quad - simpson).abs() < 1e-6, "quad {quad} vs simpson {simpson}");
    }
}
