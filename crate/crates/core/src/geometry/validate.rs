use serde::{Deserialize, Serialize};

use super::{Point2D, Region, Ring};
use crate::scalar::Scalar;

/// Ring indices: 0 is the exterior, `k >= 1` is hole `k - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NonFinite {
        ring: usize,
    },
    UnclosedRing {
        ring: usize,
    },
    TooFewPoints {
        ring: usize,
        points: usize,
    },
    RepeatedPoint {
        ring: usize,
        index: usize,
    },
    SelfIntersection {
        ring: usize,
        segments: (usize, usize),
    },
    HoleExteriorIntersection {
        ring: usize,
        segments: (usize, usize),
    },
    HoleHoleIntersection {
        rings: (usize, usize),
        segments: (usize, usize),
    },
    HoleOutsideExterior {
        ring: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks ring invariants and the non-intersection rules for exterior and holes.
pub fn validate_region<T: Scalar>(region: &Region<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let rings: Vec<&Ring<T>> = region.rings().collect();

    for (idx, ring) in rings.iter().enumerate() {
        let pts = ring.points();
        if pts.iter().any(|p| !p.is_finite()) {
            violations.push(Violation::NonFinite { ring: idx });
            continue;
        }
        if pts.first() != pts.last() {
            violations.push(Violation::UnclosedRing { ring: idx });
        }
        if pts.len() < 4 {
            violations.push(Violation::TooFewPoints {
                ring: idx,
                points: pts.len(),
            });
        }
        for i in 1..pts.len() {
            if pts[i] == pts[i - 1] {
                violations.push(Violation::RepeatedPoint { ring: idx, index: i });
            }
        }
        if pts.len() >= 4 {
            self_intersections(ring, idx, &mut violations);
        }
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }

    let exterior = rings[0];
    for (h, hole) in rings.iter().enumerate().skip(1) {
        let before = violations.len();
        for (i, a) in hole.segments().enumerate() {
            for (j, b) in exterior.segments().enumerate() {
                if segments_intersect(a, b) {
                    violations.push(Violation::HoleExteriorIntersection {
                        ring: h,
                        segments: (i, j),
                    });
                }
            }
        }
        if violations.len() == before && !point_in_ring(hole.points()[0], exterior) {
            violations.push(Violation::HoleOutsideExterior { ring: h });
        }
        for (g, other) in rings.iter().enumerate().skip(h + 1) {
            for (i, a) in hole.segments().enumerate() {
                for (j, b) in other.segments().enumerate() {
                    if segments_intersect(a, b) {
                        violations.push(Violation::HoleHoleIntersection {
                            rings: (h, g),
                            segments: (i, j),
                        });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

fn self_intersections<T: Scalar>(ring: &Ring<T>, idx: usize, out: &mut Vec<Violation>) {
    let segs: Vec<_> = ring.segments().collect();
    let n = segs.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let hit = if adjacent {
                let (first, second) = if j == i + 1 {
                    (segs[i], segs[j])
                } else {
                    (segs[j], segs[i])
                };
                backtracks(first, second)
            } else {
                segments_intersect(segs[i], segs[j])
            };
            if hit {
                out.push(Violation::SelfIntersection {
                    ring: idx,
                    segments: (i, j),
                });
            }
        }
    }
}

/// Consecutive segments `a->b`, `b->c` that fold back over each other.
fn backtracks<T: Scalar>(s: (Point2D<T>, Point2D<T>), t: (Point2D<T>, Point2D<T>)) -> bool {
    let (a, b) = s;
    let c = t.1;
    let cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    let dot = (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y);
    cross == T::zero() && dot < T::zero()
}

fn orient<T: Scalar>(a: Point2D<T>, b: Point2D<T>, c: Point2D<T>) -> i8 {
    let v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

fn on_segment<T: Scalar>(a: Point2D<T>, b: Point2D<T>, p: Point2D<T>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect<T: Scalar>(s: (Point2D<T>, Point2D<T>), t: (Point2D<T>, Point2D<T>)) -> bool {
    let (p1, p2) = s;
    let (q1, q2) = t;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(q1, q2, p1))
        || (d2 == 0 && on_segment(q1, q2, p2))
        || (d3 == 0 && on_segment(p1, p2, q1))
        || (d4 == 0 && on_segment(p1, p2, q2))
}

fn point_in_ring<T: Scalar>(p: Point2D<T>, ring: &Ring<T>) -> bool {
    let mut inside = false;
    for (a, b) in ring.segments() {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_wkt;

    fn report(wkt: &str) -> ValidationReport {
        validate_region(&parse_wkt::<f64>(wkt).unwrap())
    }

    #[test]
    fn square_is_valid() {
        assert!(report("POLYGON((0 0,4 0,4 4,0 4,0 0))").is_valid());
        assert!(report("POLYGON((0 0,8 0,8 8,0 8,0 0),(2 2,3 2,3 3,2 3,2 2))").is_valid());
    }

    #[test]
    fn bow_tie_self_intersects() {
        let r = report("POLYGON((0 0,2 2,2 0,0 2,0 0))");
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SelfIntersection { ring: 0, .. })));
    }

    #[test]
    fn unclosed_and_repeated() {
        let open = Region::new(
            Ring::from_points_unchecked(vec![
                Point2D::new(0.0, 0.0),
                Point2D::new(1.0, 0.0),
                Point2D::new(1.0, 1.0),
                Point2D::new(1.0, 1.0),
            ]),
            vec![],
        );
        let r = validate_region(&open);
        assert!(r.violations.contains(&Violation::UnclosedRing { ring: 0 }));
        assert!(r.violations.contains(&Violation::RepeatedPoint { ring: 0, index: 3 }));
    }

    #[test]
    fn hole_outside_exterior() {
        let r = report("POLYGON((0 0,4 0,4 4,0 4,0 0),(10 10,11 10,11 11,10 10))");
        assert_eq!(r.violations, vec![Violation::HoleOutsideExterior { ring: 1 }]);
    }

    /// Independent brute force: every hole segment against every exterior
    /// segment using a parametric solve.
    fn brute_crossings(region: &Region<f64>) -> usize {
        let mut hits = 0;
        let ext: Vec<_> = region.exterior.segments().collect();
        for hole in &region.holes {
            for (p, q) in hole.segments() {
                for &(a, b) in &ext {
                    let r = (q.x - p.x, q.y - p.y);
                    let s = (b.x - a.x, b.y - a.y);
                    let den = r.0 * s.1 - r.1 * s.0;
                    if den == 0.0 {
                        continue;
                    }
                    let t = ((a.x - p.x) * s.1 - (a.y - p.y) * s.0) / den;
                    let u = ((a.x - p.x) * r.1 - (a.y - p.y) * r.0) / den;
                    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                        hits += 1;
                    }
                }
            }
        }
        hits
    }

    #[test]
    fn hole_crossing_exterior_edge() {
        let wkt = "POLYGON((0 0,8 0,8 8,0 8,0 0),(6 3,10 3,10 5,6 5,6 3))";
        let region = parse_wkt::<f64>(wkt).unwrap();
        let expected = brute_crossings(&region);
        assert_eq!(expected, 2);
        let r = validate_region(&region);
        let found = r
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::HoleExteriorIntersection { ring: 1, .. }))
            .count();
        assert_eq!(found, expected);
    }
}
