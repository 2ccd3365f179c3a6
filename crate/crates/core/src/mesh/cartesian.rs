use super::sparse::CsrBuilder;
use super::{CartesianLayout, Layout, Mesh, MeshParts};
use crate::geometry::{GraphDomain, Region};
use crate::{Error, Point, Result};

/// Nodes closer than this fraction of `h` to the boundary (along a grid
/// line) become Dirichlet nodes.
pub const DEFAULT_FOLD: f64 = 0.05;

const OUTSIDE: u8 = 0;
const INTERIOR: u8 = 1;
const FOLDED: u8 = 2;

/// Cartesian mesh of a graph domain with grid nodes at integer multiples of
/// `h`; the side walls and the top must fall on grid lines.
pub fn build_cartesian_mesh(dom: &GraphDomain, h: f64) -> Result<Mesh> {
    let (a, b) = dom.x_range();
    for (name, v) in [("x_min", a), ("x_max", b), ("top", dom.top())] {
        let q = v / h;
        if (q - q.round()).abs() > 1e-9 * q.abs().max(1.0) {
            return Err(Error::invalid(format!("h = {h} does not divide {name} = {v}")));
        }
    }
    build_region_mesh(dom, h, DEFAULT_FOLD)
}

/// Shortley-Weller mesh of any level-set region.
///
/// Grid nodes with positive level are candidate unknowns. Along each of the
/// four grid directions the boundary crossing is located by bisection to
/// `1e-13·h`; candidates with a crossing closer than `fold·h` become Dirichlet
/// nodes, the remaining crossings become Dirichlet nodes at the crossing
/// point.
pub fn build_region_mesh(region: &dyn Region, h: f64, fold: f64) -> Result<Mesh> {
    if !(h > 0.0) {
        return Err(Error::invalid("mesh spacing must be positive"));
    }
    if !(0.0..0.5).contains(&fold) {
        return Err(Error::invalid("fold threshold must lie in [0, 0.5)"));
    }
    let (lo, hi) = region.bounding_box();
    let i0 = (lo[0] / h - 1e-9).ceil() as i64;
    let i1 = (hi[0] / h + 1e-9).floor() as i64;
    let j0 = (lo[1] / h - 1e-9).ceil() as i64;
    let j1 = (hi[1] / h + 1e-9).floor() as i64;
    if i1 < i0 || j1 < j0 {
        return Err(Error::DegenerateMesh("bounding box smaller than one cell".into()));
    }
    let ni = i1 - i0 + 1;
    let nj = j1 - j0 + 1;
    let total = (ni * nj) as usize;
    if total > u32::MAX as usize / 2 {
        return Err(Error::invalid("mesh too large"));
    }
    let at = |i: i64, j: i64| ((j - j0) * ni + (i - i0)) as usize;
    let pos = |i: i64, j: i64| [i as f64 * h, j as f64 * h];

    let mut status = vec![OUTSIDE; total];
    for j in j0..=j1 {
        for i in i0..=i1 {
            if region.level(pos(i, j)) > 0.0 {
                status[at(i, j)] = INTERIOR;
            }
        }
    }
    let inside = |status: &[u8], i: i64, j: i64| {
        i >= i0 && i <= i1 && j >= j0 && j <= j1 && status[at(i, j)] != OUTSIDE
    };

    const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    // arm fractions of every candidate, in grid order
    let mut arms: Vec<[f64; 4]> = Vec::new();
    let mut arm_slot = vec![u32::MAX; total];
    for j in j0..=j1 {
        for i in i0..=i1 {
            if status[at(i, j)] != INTERIOR {
                continue;
            }
            let p = pos(i, j);
            let mut f = [1.0; 4];
            for (d, &(di, dj)) in DIRS.iter().enumerate() {
                if !inside(&status, i + di, j + dj) {
                    f[d] = crossing(region, p, [di as f64 * h, dj as f64 * h]);
                }
            }
            arm_slot[at(i, j)] = arms.len() as u32;
            arms.push(f);
        }
    }
    for j in j0..=j1 {
        for i in i0..=i1 {
            let k = at(i, j);
            if status[k] == INTERIOR && arms[arm_slot[k] as usize].iter().any(|&s| s < fold) {
                status[k] = FOLDED;
            }
        }
    }

    let mut node_at = vec![u32::MAX; total];
    let mut coords: Vec<Point> = Vec::new();
    let mut grid = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let k = at(i, j);
            if status[k] == INTERIOR {
                node_at[k] = coords.len() as u32;
                coords.push(pos(i, j));
                grid.push((i, j));
            }
        }
    }
    let n_int = coords.len();
    if n_int == 0 {
        return Err(Error::DegenerateMesh("no interior nodes".into()));
    }
    let mut parts = vec![None; n_int];
    let mut fractions = Vec::with_capacity(n_int);
    let mut sb = CsrBuilder::new(usize::MAX);
    let boundary_node = |point: Point,
                         grid_key: Option<usize>,
                         node_at: &mut Vec<u32>,
                         coords: &mut Vec<Point>,
                         parts: &mut Vec<_>| {
        if let Some(key) = grid_key {
            if node_at[key] != u32::MAX {
                return node_at[key] as usize;
            }
        }
        let id = coords.len();
        coords.push(point);
        parts.push(Some(region.boundary_part(point)));
        if let Some(key) = grid_key {
            node_at[key] = id as u32;
        }
        id
    };
    for (idx, &(i, j)) in grid.iter().enumerate().take(n_int) {
        let p = pos(i, j);
        let f = arms[arm_slot[at(i, j)] as usize];
        let mut nbr = [0usize; 4];
        for (d, &(di, dj)) in DIRS.iter().enumerate() {
            let (qi, qj) = (i + di, j + dj);
            let in_range = qi >= i0 && qi <= i1 && qj >= j0 && qj <= j1;
            nbr[d] = if f[d] == 1.0 {
                let key = in_range.then(|| at(qi, qj));
                match key.map(|k| node_at[k]) {
                    Some(n) if n != u32::MAX => n as usize,
                    _ => boundary_node(pos(qi, qj), key, &mut node_at, &mut coords, &mut parts),
                }
            } else {
                let q = [p[0] + f[d] * di as f64 * h, p[1] + f[d] * dj as f64 * h];
                boundary_node(q, None, &mut node_at, &mut coords, &mut parts)
            };
        }
        let [he, hw, hn, hs] = f.map(|s| s * h);
        let ce = 2.0 / (he * (he + hw));
        let cw = 2.0 / (hw * (he + hw));
        let cn = 2.0 / (hn * (hn + hs));
        let cs = 2.0 / (hs * (hn + hs));
        sb.push_row([
            (idx, ce + cw + cn + cs),
            (nbr[0], -ce),
            (nbr[1], -cw),
            (nbr[2], -cn),
            (nbr[3], -cs),
        ]);
        fractions.push(f);
    }
    let mut stencil = sb.finish();
    stencil.ncols = coords.len();
    let layout = CartesianLayout {
        h,
        i0,
        j0,
        ni,
        nj,
        node_at,
    };
    Mesh::from_parts(MeshParts {
        layout: Layout::Cartesian(layout),
        coords,
        n_interior: n_int,
        parts,
        stencil,
        weight: vec![1.0; n_int],
        grid,
        fractions,
        local_h: vec![h; n_int],
    })
}

/// Fraction `s ∈ (0, 1]` of the segment `p → p + step` at which the level
/// function changes sign (`level(p) > 0 ≥ level(p + step)`).
fn crossing(region: &dyn Region, p: Point, step: Point) -> f64 {
    let at = |s: f64| region.level([p[0] + s * step[0], p[1] + s * step[1]]);
    if at(1.0) == 0.0 {
        return 1.0;
    }
    let (mut a, mut b) = (0.0, 1.0);
    while b - a > 1e-13 {
        let m = 0.5 * (a + b);
        if at(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub(crate) fn sample(c: &CartesianLayout, v: &[f64], p: Point) -> Result<f64> {
    let snap = |x: f64| {
        let r = x.round();
        if (x - r).abs() < 1e-9 {
            r
        } else {
            x
        }
    };
    let x = snap(p[0] / c.h);
    let y = snap(p[1] / c.h);
    let (i, j) = (x.floor() as i64, y.floor() as i64);
    let (s, t) = (x - i as f64, y - j as f64);
    let mut acc = 0.0;
    for (di, dj, w) in [
        (0, 0, (1.0 - s) * (1.0 - t)),
        (1, 0, s * (1.0 - t)),
        (0, 1, (1.0 - s) * t),
        (1, 1, s * t),
    ] {
        if w == 0.0 {
            continue;
        }
        match c.node(i + di, j + dj) {
            Some(k) => acc += w * v[k],
            None => {
                return Err(Error::DomainViolation(format!(
                    "point ({}, {}) is not inside a mesh cell",
                    p[0], p[1]
                )))
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BumpCurve, Disk};
    use crate::mesh::{assemble_laplacian, harmonic_solve, Field};

    #[test]
    fn flat_box_counts() {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let m = build_cartesian_mesh(&dom, 0.5).unwrap();
        assert_eq!(m.n_interior(), 3);
        let mut xs: Vec<f64> = (0..3).map(|k| m.point(k)[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![-0.5, 0.0, 0.5]);
        assert!((0..3).all(|k| m.point(k)[1] == 0.5));
    }

    #[test]
    fn regular_stencil_row() {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let h = 0.125;
        let m = build_cartesian_mesh(&dom, h).unwrap();
        let node = m.grid_node(0, 4).unwrap();
        let row: Vec<(usize, f64)> = m.stencil().row(node).collect();
        assert_eq!(row.len(), 5);
        for (c, v) in row {
            if c == node {
                assert!((v - 4.0 / (h * h)).abs() < 1e-9);
            } else {
                assert!((v + 1.0 / (h * h)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bumpy_fractions_in_range() {
        let dom = GraphDomain::bumpy(BumpCurve::new(2.0, 1).unwrap()).unwrap();
        let m = build_cartesian_mesh(&dom, 1.0 / 64.0).unwrap();
        for k in 0..m.n_interior() {
            for s in m.boundary_fractions(k) {
                assert!(s > 0.0 && s <= 1.0);
                assert!(s >= DEFAULT_FOLD);
            }
        }
        assert!(assemble_laplacian(&m).is_ok());
    }

    #[test]
    fn tilted_line_fractions() {
        let dom = GraphDomain::new(|x| x / 2.0, 0.5, (-1.0, 1.0), 1.0).unwrap();
        let h = 1.0 / 32.0;
        let m = build_cartesian_mesh(&dom, h).unwrap();
        let mut checked = 0;
        for k in 0..m.n_interior() {
            let p = m.point(k);
            let s = m.boundary_fractions(k)[3];
            if s < 1.0 {
                assert!((s - (p[1] - p[0] / 2.0) / h).abs() < 1e-11);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn quadratic_and_harmonic_exactness() {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let m = build_cartesian_mesh(&dom, 1.0 / 16.0).unwrap();
        let q = Field::from_fn(&m, |p| p[0] * p[0] + p[1] * p[1]);
        for r in m.apply_stencil(&q).unwrap() {
            assert!((r + 4.0).abs() < 1e-9);
        }
        let hfun = Field::from_fn(&m, |p| p[0] * p[0] - p[1] * p[1]);
        for r in m.apply_stencil(&hfun).unwrap() {
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn disk_shortley_weller_is_exact_for_quadratics() {
        let m = build_region_mesh(&Disk::unit(), 0.1, DEFAULT_FOLD).unwrap();
        let q = Field::from_fn(&m, |p| 3.0 * p[0] * p[0] + p[1] * p[1] - p[0] * p[1]);
        for r in m.apply_stencil(&q).unwrap() {
            assert!((r + 8.0).abs() < 1e-8, "{r}");
        }
        let data = Field::from_boundary(&m, |p, _| p[0] * p[1]);
        let u = harmonic_solve(&m, &data).unwrap();
        for k in 0..m.n_interior() {
            let p = m.point(k);
            assert!((u.values()[k] - p[0] * p[1]).abs() < 1e-8);
        }
    }
}
