/// Yaw-aware rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub center: (f64, f64),
    /// Half sizes along the rectangle's local x and y.
    pub half: (f64, f64),
    pub yaw: f64,
}

impl Footprint {
    pub fn new(center: (f64, f64), half: (f64, f64), yaw: f64) -> Self {
        Footprint { center, half, yaw }
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half.0 * self.half.1
    }

    /// Counterclockwise corners.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hx, hy) = self.half;
        [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)].map(|(x, y)| {
            (self.center.0 + c * x - s * y, self.center.1 + s * x + c * y)
        })
    }

    pub fn inflated(&self, margin: f64) -> Footprint {
        Footprint { half: (self.half.0 + margin, self.half.1 + margin), ..*self }
    }

    pub fn intersection_area(&self, other: &Footprint) -> f64 {
        convex_intersection_area(&self.corners(), &other.corners())
    }

    /// True when all corners lie inside the axis-aligned rectangle
    /// `[-ex/2, ex/2] × [-ey/2, ey/2]` (tolerance 1e-9 m).
    pub fn inside_floor(&self, extent: (f64, f64)) -> bool {
        let (hx, hy) = (extent.0 / 2.0 + 1e-9, extent.1 / 2.0 + 1e-9);
        self.corners().iter().all(|&(x, y)| x.abs() <= hx && y.abs() <= hy)
    }
}

/// Shoelace area of a simple polygon (always non-negative).
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let s: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    (s / 2.0).abs()
}

/// Area of the intersection of two convex counterclockwise polygons via
/// Sutherland–Hodgman clipping.
pub fn convex_intersection_area(subject: &[(f64, f64)], clip: &[(f64, f64)]) -> f64 {
    let mut out: Vec<(f64, f64)> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let side = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for j in 0..n {
            let (p, q) = (input[j], input[(j + 1) % n]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push((p.0 + (q.0 - p.0) * t, p.1 + (q.1 - p.1) * t));
            }
        }
    }
    polygon_area(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_squares_overlap_fully() {
        let a = Footprint::new((0.0, 0.0), (0.5, 0.5), 0.0);
        assert!((a.intersection_area(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_squares() {
        let a = Footprint::new((0.0, 0.0), (0.5, 0.5), 0.0);
        let b = Footprint::new((0.5, 0.0), (0.5, 0.5), 0.0);
        assert!((a.intersection_area(&b) - 0.5).abs() < 1e-12);
        let far = Footprint::new((3.0, 0.0), (0.5, 0.5), 0.0);
        assert_eq!(a.intersection_area(&far), 0.0);
    }

    #[test]
    fn rotated_square_inside_larger() {
        let big = Footprint::new((0.0, 0.0), (2.0, 2.0), 0.0);
        let small = Footprint::new((0.0, 0.0), (0.5, 0.5), 0.7);
        assert!((small.intersection_area(&big) - 1.0).abs() < 1e-12);
        // 45° diamond against axis square of equal size: area 4(√2-1)·... check vs grid counting
        let a = Footprint::new((0.0, 0.0), (1.0, 1.0), 0.0);
        let d = Footprint::new((0.0, 0.0), (1.0, 1.0), std::f64::consts::FRAC_PI_4);
        let exact = a.intersection_area(&d);
        let n = 800;
        let mut hits = 0;
        for i in 0..n {
            for j in 0..n {
                let x = -1.5 + 3.0 * (i as f64 + 0.5) / n as f64;
                let y = -1.5 + 3.0 * (j as f64 + 0.5) / n as f64;
                let in_a = x.abs() <= 1.0 && y.abs() <= 1.0;
                let in_d = (x + y).abs() <= 2f64.sqrt() && (x - y).abs() <= 2f64.sqrt();
                if in_a && in_d {
                    hits += 1;
                }
            }
        }
        let grid = hits as f64 * 9.0 / (n * n) as f64;
        assert!((exact - grid).abs() < 0.01, "{exact} vs {grid}");
    }

    #[test]
    fn floor_containment() {
        let f = Footprint::new((4.5, 0.0), (0.5, 0.5), 0.0);
        assert!(f.inside_floor((10.0, 10.0)));
        assert!(!Footprint::new((4.6, 0.0), (0.5, 0.5), 0.0).inside_floor((10.0, 10.0)));
    }
}
