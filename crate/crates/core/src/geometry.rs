//! Domain shapes: Lipschitz graph domains, boundary cylinders, sectors and the
//! bumpy counterexample curve.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result};

/// Which piece of a domain boundary a point belongs to.
///
/// Boundary data closures use this to impose different values on different
/// parts of the boundary (e.g. zero on the graph, a profile elsewhere).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryPart {
    /// The graph `x_n = g(x')`.
    Graph,
    Top,
    Left,
    Right,
    /// A curved boundary without further structure (disks).
    Curve,
    /// The excised vertex ring `r = r_min` of a polar mesh.
    Vertex,
    /// The outer arc `r = radius` of a polar mesh.
    Outer,
    /// The side `ω = 0` of a sector.
    SideStart,
    /// The side `ω = θ` of a sector.
    SideEnd,
    /// End points of a one-dimensional mesh.
    Left1d,
    Right1d,
}

/// A planar region described by a level function, positive inside.
///
/// Meshes locate the boundary by bisection on the level function along grid
/// lines, so the level function only needs the correct sign, not distance
/// accuracy.
pub trait Region: Send + Sync {
    fn level(&self, p: Point) -> f64;

    /// Lower-left and upper-right corners of a box containing the region.
    fn bounding_box(&self) -> (Point, Point);

    /// Classify a boundary (or near-boundary) point.
    fn boundary_part(&self, p: Point) -> BoundaryPart;

    fn contains(&self, p: Point) -> bool {
        self.level(p) > 0.0
    }
}

type HeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Epigraph `{x_2 > g(x_1)}` of a Lipschitz function, cut to the box
/// `x_range × (.., top)`.
#[derive(Clone)]
pub struct GraphDomain {
    g: HeightFn,
    lipschitz: f64,
    x_range: (f64, f64),
    top: f64,
    bottom: f64,
}

impl fmt::Debug for GraphDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphDomain")
            .field("lipschitz", &self.lipschitz)
            .field("x_range", &self.x_range)
            .field("top", &self.top)
            .field("bottom", &self.bottom)
            .finish()
    }
}

const LIPSCHITZ_SAMPLES: usize = 4096;

impl GraphDomain {
    /// Builds a graph domain and verifies the declared Lipschitz bound on a
    /// dense sample grid.
    pub fn new(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        x_range: (f64, f64),
        top: f64,
    ) -> Result<Self> {
        let (a, b) = x_range;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("bad x_range ({a}, {b})")));
        }
        if !(lipschitz >= 0.0) {
            return Err(Error::invalid("Lipschitz bound must be nonnegative"));
        }
        let g: HeightFn = Arc::new(g);
        let n = LIPSCHITZ_SAMPLES;
        let dx = (b - a) / n as f64;
        let mut prev = g(a);
        let mut bottom = prev;
        let mut highest = prev;
        for i in 1..=n {
            let x = a + i as f64 * dx;
            let y = g(x);
            if !y.is_finite() {
                return Err(Error::invalid(format!("g is not finite at x = {x}")));
            }
            if (y - prev).abs() > lipschitz * dx * (1.0 + 1e-9) + 1e-14 {
                return Err(Error::invalid(format!(
                    "g violates Lipschitz bound {lipschitz} near x = {x}"
                )));
            }
            bottom = bottom.min(y);
            highest = highest.max(y);
            prev = y;
        }
        if !(top > highest) {
            return Err(Error::invalid("top must lie above the graph"));
        }
        Ok(Self {
            g,
            lipschitz,
            x_range,
            top,
            bottom,
        })
    }

    /// Flat boundary `g ≡ 0`.
    pub fn flat(x_range: (f64, f64), top: f64) -> Result<Self> {
        Self::new(|_| 0.0, 0.0, x_range, top)
    }

    /// The bumpy counterexample curve on `[-1, 1]` with top at `x_2 = 1`.
    pub fn bumpy(curve: BumpCurve) -> Result<Self> {
        Self::new(move |x| curve.height(x), 1.0, (-1.0, 1.0), 1.0)
    }

    pub fn height(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    /// Lowest sampled value of `g`.
    pub fn bottom(&self) -> f64 {
        self.bottom
    }
}

impl Region for GraphDomain {
    fn level(&self, p: Point) -> f64 {
        let (a, b) = self.x_range;
        let graph = p[1] - (self.g)(p[0]);
        graph.min(self.top - p[1]).min(p[0] - a).min(b - p[0])
    }

    fn bounding_box(&self) -> (Point, Point) {
        ([self.x_range.0, self.bottom], [self.x_range.1, self.top])
    }

    fn boundary_part(&self, p: Point) -> BoundaryPart {
        let (a, b) = self.x_range;
        let pieces = [
            (p[1] - (self.g)(p[0]), BoundaryPart::Graph),
            (self.top - p[1], BoundaryPart::Top),
            (p[0] - a, BoundaryPart::Left),
            (b - p[0], BoundaryPart::Right),
        ];
        pieces
            .iter()
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|&(_, part)| part)
            .unwrap_or(BoundaryPart::Graph)
    }
}

/// Open disk.
#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("disk radius must be positive"));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }
}

impl Region for Disk {
    fn level(&self, p: Point) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        self.radius - (dx * dx + dy * dy).sqrt()
    }

    fn bounding_box(&self) -> (Point, Point) {
        let [cx, cy] = self.center;
        let r = self.radius;
        ([cx - r, cy - r], [cx + r, cy + r])
    }

    fn boundary_part(&self, _p: Point) -> BoundaryPart {
        BoundaryPart::Curve
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy)]
pub struct Rectangle {
    pub lo: Point,
    pub hi: Point,
}

impl Region for Rectangle {
    fn level(&self, p: Point) -> f64 {
        (p[0] - self.lo[0])
            .min(self.hi[0] - p[0])
            .min(p[1] - self.lo[1])
            .min(self.hi[1] - p[1])
    }

    fn bounding_box(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }

    fn boundary_part(&self, p: Point) -> BoundaryPart {
        let pieces = [
            (p[1] - self.lo[1], BoundaryPart::Graph),
            (self.hi[1] - p[1], BoundaryPart::Top),
            (p[0] - self.lo[0], BoundaryPart::Left),
            (self.hi[0] - p[0], BoundaryPart::Right),
        ];
        pieces
            .iter()
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|&(_, part)| part)
            .unwrap_or(BoundaryPart::Graph)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderKind {
    Grounded,
    Doubled,
    Suspended,
}

/// Boundary-fitted box neighbourhood over a foot point of the graph.
#[derive(Debug, Clone, Copy)]
pub struct CylinderSpec {
    pub center_xprime: f64,
    pub r: f64,
    pub delta: f64,
    pub kind: CylinderKind,
}

impl CylinderSpec {
    pub fn new(center_xprime: f64, r: f64, delta: f64, kind: CylinderKind) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::invalid("cylinder radius must be positive"));
        }
        if !(delta > 0.0 && delta <= 0.1) {
            return Err(Error::invalid("suspension fraction must lie in (0, 1/10]"));
        }
        Ok(Self {
            center_xprime,
            r,
            delta,
            kind,
        })
    }

    pub fn contains(&self, dom: &GraphDomain, p: Point) -> bool {
        if (p[0] - self.center_xprime).abs() > self.r {
            return false;
        }
        let height = p[1] - dom.height(p[0]);
        match self.kind {
            CylinderKind::Grounded => (0.0..=self.r).contains(&height),
            CylinderKind::Doubled => height.abs() <= self.r,
            CylinderKind::Suspended => (self.delta * self.r..=self.r).contains(&height),
        }
    }
}

/// Planar sector `{0 < ω < θ, |X| < radius}`.
#[derive(Debug, Clone, Copy)]
pub struct SectorDomain {
    pub theta: f64,
    pub radius: f64,
}

impl SectorDomain {
    pub fn new(theta: f64, radius: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 2.0 * PI) {
            return Err(Error::invalid(format!("sector angle {theta} outside (0, 2π)")));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("sector radius must be positive"));
        }
        Ok(Self { theta, radius })
    }

    /// Polar coordinates `(r, ω)` with `ω ∈ [0, 2π)`.
    pub fn polar(p: Point) -> (f64, f64) {
        let r = p[0].hypot(p[1]);
        let mut w = p[1].atan2(p[0]);
        if w < 0.0 {
            w += 2.0 * PI;
        }
        (r, w)
    }
}

/// The piecewise-linear curve with a V-shaped dip of slope ±1 at every
/// `x_1 = 1/i`, `1 ≤ |i| ≤ i_max`, whose apex lies on the circle
/// `x_1² + (x_2 + R)² = R²`.
#[derive(Debug, Clone, Copy)]
pub struct BumpCurve {
    pub radius: f64,
    pub i_max: u32,
}

impl BumpCurve {
    pub fn new(radius: f64, i_max: u32) -> Result<Self> {
        if !(radius > 1.0) {
            return Err(Error::invalid("bump radius must exceed 1"));
        }
        if i_max == 0 {
            return Err(Error::invalid("i_max must be at least 1"));
        }
        if !bump_overlap_free(radius, i_max) {
            return Err(Error::invalid(format!(
                "bump intervals overlap for R = {radius}, i_max = {i_max}"
            )));
        }
        Ok(Self { radius, i_max })
    }

    /// Half-width (and depth) of bump `i`.
    pub fn half_width(&self, i: u32) -> f64 {
        half_width(self.radius, i)
    }

    /// Apex of bump `i` (negative `i` mirrors).
    pub fn apex(&self, i: i32) -> Point {
        let x = 1.0 / i as f64;
        [x, -self.half_width(i.unsigned_abs())]
    }

    pub fn height(&self, x1: f64) -> f64 {
        bump_height(self, x1)
    }
}

fn half_width(radius: f64, i: u32) -> f64 {
    let s = 1.0 / i as f64;
    // R - sqrt(R² - s²) without cancellation
    s * s / (radius + (radius * radius - s * s).sqrt())
}

/// Height of the bumpy curve at `x1`.
pub fn bump_height(curve: &BumpCurve, x1: f64) -> f64 {
    let ax = x1.abs();
    if ax == 0.0 {
        return 0.0;
    }
    // Bump i sits at 1/i; only the two indices bracketing 1/|x1| can contain it.
    let guess = (1.0 / ax).floor().max(1.0) as u32;
    for i in [guess, guess + 1, guess.saturating_sub(1)] {
        if i == 0 || i > curve.i_max {
            continue;
        }
        let hw = curve.half_width(i);
        let d = (ax - 1.0 / i as f64).abs();
        if d <= hw {
            return d - hw;
        }
    }
    0.0
}

/// True iff the bump intervals for `1 ≤ |i| ≤ i_max` are pairwise disjoint.
pub fn bump_overlap_free(radius: f64, i_max: u32) -> bool {
    if !(radius > 1.0) || i_max == 0 {
        return false;
    }
    for i in 1..i_max {
        let right_of_next = 1.0 / (i + 1) as f64 + half_width(radius, i + 1);
        let left_of_this = 1.0 / i as f64 - half_width(radius, i);
        if right_of_next >= left_of_this {
            return false;
        }
    }
    // the innermost bumps must not reach across the origin into the mirrored family
    1.0 / i_max as f64 - half_width(radius, i_max) > 0.0
}

/// Signed distance to the circle `x_1² + (x_2 + R)² = R²`, positive above it.
pub fn circle_signed_distance(p: Point, radius: f64) -> f64 {
    p[0].hypot(p[1] + radius) - radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bump_height_values() {
        let c = BumpCurve::new(2.0, 1).unwrap();
        assert_eq!(c.height(0.5), 0.0);
        assert_abs_diff_eq!(c.height(1.0), -(2.0 - 3f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(c.height(1.0 + (2.0 - 3f64.sqrt())), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.height(-1.0), -(2.0 - 3f64.sqrt()), epsilon = 1e-15);
    }

    /// Brute-force pairwise interval intersection over both families.
    fn overlap_free_brute(radius: f64, i_max: u32) -> bool {
        let mut iv = Vec::new();
        for i in 1..=i_max {
            let hw = half_width(radius, i);
            let c = 1.0 / i as f64;
            iv.push((c - hw, c + hw));
            iv.push((-c - hw, -c + hw));
        }
        for a in 0..iv.len() {
            for b in a + 1..iv.len() {
                if iv[a].0 <= iv[b].1 && iv[b].0 <= iv[a].1 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn overlap_matches_brute_force() {
        assert!(bump_overlap_free(2.0, 1));
        assert!(bump_overlap_free(2.0, 8));
        for &(r, n) in &[(2.0, 1), (2.0, 8), (1.001, 8), (1.001, 1), (1.5, 30), (3.0, 64)] {
            assert_eq!(bump_overlap_free(r, n), overlap_free_brute(r, n), "R={r} i_max={n}");
        }
        // R = 1.001: bump 1 half-width ~0.955 swallows bump 2 at x = 1/2.
        assert!(!bump_overlap_free(1.001, 8));
    }

    #[test]
    fn apexes_lie_on_circle() {
        let c = BumpCurve::new(2.0, 8).unwrap();
        for i in 1..=8 {
            for s in [1, -1] {
                let apex = c.apex(s * i);
                assert_abs_diff_eq!(apex[1], c.height(apex[0]), epsilon = 1e-15);
                assert!(circle_signed_distance(apex, 2.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn circle_distance_examples() {
        assert_eq!(circle_signed_distance([0.0, 0.0], 2.0), 0.0);
        assert_abs_diff_eq!(circle_signed_distance([0.0, 0.37], 5.0), 0.37, epsilon = 1e-15);
        let d = circle_signed_distance([1.0, -(2.0 - 3f64.sqrt())], 2.0);
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn cylinder_membership() {
        let dom = GraphDomain::flat((-2.0, 2.0), 2.0).unwrap();
        let g = CylinderSpec::new(0.0, 1.0, 0.1, CylinderKind::Grounded).unwrap();
        let s = CylinderSpec::new(0.0, 1.0, 0.1, CylinderKind::Suspended).unwrap();
        let d = CylinderSpec::new(0.0, 1.0, 0.1, CylinderKind::Doubled).unwrap();
        assert!(g.contains(&dom, [0.0, 0.5]));
        assert!(!s.contains(&dom, [0.0, 0.05]));
        assert!(d.contains(&dom, [0.0, -0.5]));
        assert!(CylinderSpec::new(0.0, 1.0, 0.2, CylinderKind::Suspended).is_err());
    }

    #[test]
    fn graph_domain_rejects_bad_lipschitz() {
        assert!(GraphDomain::new(|x| 2.0 * x, 1.0, (-1.0, 1.0), 5.0).is_err());
        assert!(GraphDomain::new(|x| 0.5 * x, 0.5, (-1.0, 1.0), 5.0).is_ok());
    }

    #[test]
    fn graph_domain_level_and_parts() {
        let dom = GraphDomain::bumpy(BumpCurve::new(2.0, 8).unwrap()).unwrap();
        assert!(dom.contains([0.0, 0.5]));
        assert!(!dom.contains([0.0, -0.01]));
        assert!(dom.contains([0.5, -0.01]));
        assert_eq!(dom.boundary_part([0.0, 1e-9]), BoundaryPart::Graph);
        assert_eq!(dom.boundary_part([0.0, 1.0]), BoundaryPart::Top);
        assert_eq!(dom.boundary_part([-1.0, 0.4]), BoundaryPart::Left);
        assert!(dom.bottom() <= -(2.0 - 3f64.sqrt()) + 1e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bump_curve_is_one_lipschitz_and_nonpositive(a in -1.2f64..1.2, b in -1.2f64..1.2) {
                let c = BumpCurve::new(2.0, 8).unwrap();
                prop_assert!(c.height(a) <= 0.0);
                prop_assert!((c.height(a) - c.height(b)).abs() <= (a - b).abs() * (1.0 + 1e-12) + 1e-15);
            }

            #[test]
            fn cylinder_nesting(x in -1.5f64..1.5, y in -1.5f64..1.5, c in -0.5f64..0.5, r in 0.1f64..1.0) {
                let dom = GraphDomain::new(|t: f64| 0.3 * t.abs(), 0.3, (-3.0, 3.0), 3.0).unwrap();
                let g = CylinderSpec::new(c, r, 0.1, CylinderKind::Grounded).unwrap();
                let d = CylinderSpec { kind: CylinderKind::Doubled, ..g };
                let s = CylinderSpec { kind: CylinderKind::Suspended, ..g };
                let p = [x, y];
                if g.contains(&dom, p) { prop_assert!(d.contains(&dom, p)); }
                if s.contains(&dom, p) { prop_assert!(g.contains(&dom, p)); }
            }
        }
    }
}
