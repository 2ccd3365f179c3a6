use super::sparse::CsrBuilder;
use super::{Layout, LineLayout, Mesh, MeshParts};
use crate::geometry::BoundaryPart;
use crate::{Error, Result};

/// Uniform mesh of `[a, b]` with `intervals` cells; nodes lie on the
/// `x` axis and both end points are Dirichlet nodes.
pub fn build_line_mesh(a: f64, b: f64, intervals: usize) -> Result<Mesh> {
    build_graded_line_mesh(a, b, intervals, 1.0)
}

/// Mesh of `[a, b]` with nodes `a + (b − a)(i/n)^q`, clustered at `a` for
/// `q > 1`. The three-point stencil
/// `2/(h₋+h₊)·[(u_i − u_{i−1})/h₋ + (u_i − u_{i+1})/h₊]` is symmetrized by
/// the row weights `(h₋+h₊)/2`.
pub fn build_graded_line_mesh(a: f64, b: f64, intervals: usize, q: f64) -> Result<Mesh> {
    if !(a < b) {
        return Err(Error::invalid("line mesh needs a < b"));
    }
    if !(1.0..=8.0).contains(&q) {
        return Err(Error::invalid(format!("grading exponent {q} outside [1, 8]")));
    }
    if intervals < 2 {
        return Err(Error::DegenerateMesh("a line mesh needs at least two intervals".into()));
    }
    let n = intervals;
    let x: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                b
            } else if q == 1.0 {
                a + (b - a) * i as f64 / n as f64
            } else {
                a + (b - a) * (i as f64 / n as f64).powf(q)
            }
        })
        .collect();
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DegenerateMesh("graded nodes collapse in floating point".into()));
    }
    let mut coords = Vec::with_capacity(n + 1);
    let mut parts = Vec::with_capacity(n + 1);
    for xi in &x[1..n] {
        coords.push([*xi, 0.0]);
        parts.push(None);
    }
    coords.push([a, 0.0]);
    parts.push(Some(BoundaryPart::Left1d));
    coords.push([b, 0.0]);
    parts.push(Some(BoundaryPart::Right1d));
    let layout = LineLayout {
        x,
        h: (b - a) / n as f64,
        n,
    };
    let mut sb = CsrBuilder::new(n + 1);
    let mut weight = Vec::with_capacity(n - 1);
    let mut local_h = Vec::with_capacity(n - 1);
    for i in 1..n {
        let hm = layout.x[i] - layout.x[i - 1];
        let hp = layout.x[i + 1] - layout.x[i];
        let s = hm + hp;
        let cm = 2.0 / (s * hm);
        let cp = 2.0 / (s * hp);
        sb.push_row([
            (node_of(&layout, i), cm + cp),
            (node_of(&layout, i - 1), -cm),
            (node_of(&layout, i + 1), -cp),
        ]);
        weight.push(s / 2.0);
        local_h.push(hm.max(hp));
    }
    Mesh::from_parts(MeshParts {
        layout: Layout::Line(layout),
        coords,
        n_interior: n - 1,
        parts,
        stencil: sb.finish(),
        weight,
        grid: (1..n).map(|i| (i as i64, 0)).collect(),
        fractions: vec![[1.0; 4]; n - 1],
        local_h,
    })
}

/// Node index of grid point `i` (`0 ≤ i ≤ n`).
pub(crate) fn node_of(l: &LineLayout, i: usize) -> usize {
    if i == 0 {
        l.n - 1
    } else if i == l.n {
        l.n
    } else {
        i - 1
    }
}

pub(crate) fn sample(l: &LineLayout, v: &[f64], x: f64) -> Result<f64> {
    let (a, b) = (l.x[0], l.x[l.n]);
    let slack = 1e-12 * (b - a);
    if !(x >= a - slack && x <= b + slack) {
        return Err(Error::DomainViolation(format!("x = {x} outside the line mesh")));
    }
    let i = l.x.partition_point(|&p| p <= x).clamp(1, l.n) - 1;
    let t = ((x - l.x[i]) / (l.x[i + 1] - l.x[i])).clamp(0.0, 1.0);
    Ok((1.0 - t) * v[node_of(l, i)] + t * v[node_of(l, i + 1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{assemble_laplacian, harmonic_solve, poisson_solve, Field, LinearSolveOptions};

    #[test]
    fn constant_load_is_exact() {
        for q in [1.0, 2.5] {
            let m = build_graded_line_mesh(0.0, 1.0, 40, q).unwrap();
            let a = assemble_laplacian(&m).unwrap();
            assert!(a.is_symmetric());
            let u = poisson_solve(&m, &a, &Field::zeros(&m), vec![1.0; m.n_interior()], &LinearSolveOptions::default())
                .unwrap();
            for k in 0..m.n_nodes() {
                let x = m.point(k)[0];
                assert!((u.values()[k] - x * (1.0 - x) / 2.0).abs() < 1e-10);
            }
            assert!((m.sample(&u, [0.5, 0.0]).unwrap() - 0.125).abs() < 1e-3);
        }
    }

    #[test]
    fn linear_data_is_reproduced() {
        let m = build_line_mesh(-1.0, 2.0, 30).unwrap();
        let data = Field::from_boundary(&m, |p, _| 3.0 * p[0] + 1.0);
        let u = harmonic_solve(&m, &data).unwrap();
        for (k, p) in m.coords().iter().enumerate() {
            assert!((u.values()[k] - (3.0 * p[0] + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn graded_nodes_cluster_at_left_end() {
        let m = build_graded_line_mesh(0.0, 1.0, 10, 2.0).unwrap();
        assert!((m.point(0)[0] - 0.01).abs() < 1e-15);
        assert!((m.point(8)[0] - 0.81).abs() < 1e-15);
        assert!(build_graded_line_mesh(0.0, 1.0, 10, 0.5).is_err());
    }
}
