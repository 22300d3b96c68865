//! Planar helpers shared by routing, coordination and the baseline.

use nalgebra::{Point2, Vector2};

/// A planar point in metres.
pub type Point = Point2<f64>;

pub fn distance(a: &Point, b: &Point) -> f64 {
    nalgebra::distance(a, b)
}

/// Centroid of a non-empty point set; `None` when empty.
pub fn centroid<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Point> {
    let mut sum = Vector2::zeros();
    let mut n = 0usize;
    for p in points {
        sum += p.coords;
        n += 1;
    }
    (n > 0).then(|| Point::from(sum / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    fn contains(&self, p: &Point) -> bool {
        distance(&self.center, p) <= self.radius * (1.0 + 1e-12) + 1e-12
    }

    fn from_two(a: &Point, b: &Point) -> Circle {
        let center = nalgebra::center(a, b);
        Circle {
            center,
            radius: distance(a, b) / 2.0,
        }
    }

    /// Circumcircle of three points, or `None` if they are collinear.
    fn from_three(a: &Point, b: &Point, c: &Point) -> Option<Circle> {
        let (bx, by) = (b.x - a.x, b.y - a.y);
        let (cx, cy) = (c.x - a.x, c.y - a.y);
        let d = 2.0 * (bx * cy - by * cx);
        if d.abs() < 1e-12 {
            return None;
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = Point::new(a.x + ux, a.y + uy);
        Some(Circle {
            center,
            radius: (ux * ux + uy * uy).sqrt(),
        })
    }
}

/// Smallest circle enclosing every point (incremental Welzl construction).
///
/// Points are processed in the given order, so the result is deterministic.
/// Returns `None` for an empty slice.
pub fn smallest_enclosing_circle(points: &[Point]) -> Option<Circle> {
    let first = points.first()?;
    let mut circle = Circle {
        center: *first,
        radius: 0.0,
    };
    for i in 1..points.len() {
        if circle.contains(&points[i]) {
            continue;
        }
        circle = Circle {
            center: points[i],
            radius: 0.0,
        };
        for j in 0..i {
            if circle.contains(&points[j]) {
                continue;
            }
            circle = Circle::from_two(&points[i], &points[j]);
            for k in 0..j {
                if circle.contains(&points[k]) {
                    continue;
                }
                circle = Circle::from_three(&points[i], &points[j], &points[k])
                    .unwrap_or_else(|| widest_pair(&[points[i], points[j], points[k]]));
            }
        }
    }
    Some(circle)
}

fn widest_pair(pts: &[Point; 3]) -> Circle {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let (a, b) = pairs
        .into_iter()
        .max_by(|x, y| distance(&pts[x.0], &pts[x.1]).total_cmp(&distance(&pts[y.0], &pts[y.1])))
        .unwrap();
    Circle::from_two(&pts[a], &pts[b])
}
