//! Geometric-coarsening, Galerkin-operator multigrid used as a Krylov
//! preconditioner on large meshes.
//!
//! Every unknown carries a logical grid index `(i, j)`. Coarse unknowns are
//! the fine unknowns with both indices even; prolongation is bilinear in the
//! index space and simply drops parents that are not unknowns. Coarse
//! operators are Galerkin products `Pᵀ A P`, so the hierarchy works for any
//! matrix living on the grid (Shortley-Weller rows, graded polar rows, Newton
//! Jacobians).

use nalgebra::{DMatrix, DVector};

use super::sparse::Csr;

const COARSEST: usize = 400;
const MAX_LEVELS: usize = 24;

/// Transfer operators of a grid hierarchy; built once per mesh.
#[derive(Debug, Clone)]
pub struct MultigridPlan {
    /// Prolongations from level `l + 1` to level `l`.
    prolong: Vec<Csr>,
    restrict: Vec<Csr>,
}

impl MultigridPlan {
    pub fn new(grid: &[(i64, i64)]) -> Self {
        let mut prolong = Vec::new();
        let mut restrict = Vec::new();
        let mut current: Vec<(i64, i64)> = grid.to_vec();
        while current.len() > COARSEST && prolong.len() < MAX_LEVELS {
            let (p, coarse) = coarsen(&current);
            if coarse.is_empty() || coarse.len() * 10 > current.len() * 9 {
                break;
            }
            restrict.push(p.transpose());
            prolong.push(p);
            current = coarse;
        }
        Self { prolong, restrict }
    }

    pub fn levels(&self) -> usize {
        self.prolong.len() + 1
    }
}

/// Dense index over the bounding box of a set of grid indices.
struct GridLookup {
    i0: i64,
    j0: i64,
    ni: i64,
    nj: i64,
    slot: Vec<u32>,
}

impl GridLookup {
    fn new(points: &[(i64, i64)]) -> Self {
        let (mut i0, mut i1, mut j0, mut j1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for &(i, j) in points {
            i0 = i0.min(i);
            i1 = i1.max(i);
            j0 = j0.min(j);
            j1 = j1.max(j);
        }
        if points.is_empty() {
            return Self {
                i0: 0,
                j0: 0,
                ni: 0,
                nj: 0,
                slot: Vec::new(),
            };
        }
        let ni = i1 - i0 + 1;
        let nj = j1 - j0 + 1;
        let mut slot = vec![u32::MAX; (ni * nj) as usize];
        for (k, &(i, j)) in points.iter().enumerate() {
            slot[((i - i0) * nj + (j - j0)) as usize] = k as u32;
        }
        Self { i0, j0, ni, nj, slot }
    }

    fn get(&self, i: i64, j: i64) -> Option<usize> {
        let (a, b) = (i - self.i0, j - self.j0);
        if a < 0 || b < 0 || a >= self.ni || b >= self.nj {
            return None;
        }
        match self.slot[(a * self.nj + b) as usize] {
            u32::MAX => None,
            k => Some(k as usize),
        }
    }
}

fn parents(i: i64) -> [(i64, f64); 2] {
    if i.rem_euclid(2) == 0 {
        [(i.div_euclid(2), 1.0), (i64::MIN, 0.0)]
    } else {
        [((i - 1).div_euclid(2), 0.5), ((i + 1).div_euclid(2), 0.5)]
    }
}

fn coarsen(fine: &[(i64, i64)]) -> (Csr, Vec<(i64, i64)>) {
    let coarse: Vec<(i64, i64)> = fine
        .iter()
        .filter(|(i, j)| i.rem_euclid(2) == 0 && j.rem_euclid(2) == 0)
        .map(|&(i, j)| (i.div_euclid(2), j.div_euclid(2)))
        .collect();
    let lookup = GridLookup::new(&coarse);
    let mut rows = Vec::with_capacity(fine.len());
    for &(i, j) in fine {
        let mut row = Vec::with_capacity(4);
        for (pi, wi) in parents(i) {
            if wi == 0.0 {
                continue;
            }
            for (pj, wj) in parents(j) {
                if wj == 0.0 {
                    continue;
                }
                if let Some(c) = lookup.get(pi, pj) {
                    row.push((c, wi * wj));
                }
            }
        }
        rows.push(row);
    }
    (Csr::from_rows(coarse.len(), &rows), coarse)
}

struct Level {
    a: Csr,
    diag: Vec<f64>,
}

/// A multigrid V-cycle for one particular matrix.
pub struct Multigrid<'p> {
    plan: &'p MultigridPlan,
    levels: Vec<Level>,
    coarse: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    sweeps: usize,
}

impl<'p> Multigrid<'p> {
    pub fn new(plan: &'p MultigridPlan, a: &Csr) -> Self {
        let mut levels = vec![make_level(a.clone())];
        for (p, r) in plan.prolong.iter().zip(&plan.restrict) {
            let fine = &levels.last().expect("fine level").a;
            let coarse = r.matmul(&fine.matmul(p));
            levels.push(make_level(coarse));
        }
        let last = &levels.last().expect("coarsest level").a;
        let dense = DMatrix::from_fn(last.nrows, last.ncols, |i, j| last.get(i, j));
        let coarse = if last.nrows > 0 { Some(dense.lu()) } else { None };
        Self {
            plan,
            levels,
            coarse,
            sweeps: 2,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    /// `z ≈ A⁻¹ r` by one V-cycle from a zero initial guess.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.cycle(0, r, z);
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l + 1 == self.levels.len() {
            if let Some(lu) = &self.coarse {
                let rhs = DVector::from_column_slice(b);
                match lu.solve(&rhs) {
                    Some(sol) => x.copy_from_slice(sol.as_slice()),
                    None => {
                        for _ in 0..20 {
                            gauss_seidel(&self.levels[l], b, x, true);
                        }
                    }
                }
            }
            return;
        }
        let lev = &self.levels[l];
        for _ in 0..self.sweeps {
            gauss_seidel(lev, b, x, true);
        }
        let n = b.len();
        let mut res = vec![0.0; n];
        lev.a.matvec(x, &mut res);
        for i in 0..n {
            res[i] = b[i] - res[i];
        }
        let r = &self.plan.restrict[l];
        let mut bc = vec![0.0; r.nrows];
        r.matvec(&res, &mut bc);
        let mut xc = vec![0.0; r.nrows];
        self.cycle(l + 1, &bc, &mut xc);
        let p = &self.plan.prolong[l];
        let mut corr = vec![0.0; n];
        p.matvec(&xc, &mut corr);
        for i in 0..n {
            x[i] += corr[i];
        }
        for _ in 0..self.sweeps {
            gauss_seidel(lev, b, x, false);
        }
    }
}

fn make_level(a: Csr) -> Level {
    let diag = (0..a.nrows).map(|i| a.get(i, i)).collect();
    Level { a, diag }
}

fn gauss_seidel(lev: &Level, b: &[f64], x: &mut [f64], forward: bool) {
    let a = &lev.a;
    let mut sweep = |i: usize| {
        let d = lev.diag[i];
        if d == 0.0 {
            return;
        }
        let mut s = b[i];
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let c = a.col[k] as usize;
            if c != i {
                s -= a.val[k] * x[c];
            }
        }
        x[i] = s / d;
    };
    if forward {
        (0..a.nrows).for_each(&mut sweep);
    } else {
        (0..a.nrows).rev().for_each(&mut sweep);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::krylov::pcg;

    fn poisson(n: i64) -> (Csr, Vec<(i64, i64)>) {
        let mut grid = Vec::new();
        for i in 1..n {
            for j in 1..n {
                grid.push((i, j));
            }
        }
        let idx = |i: i64, j: i64| ((i - 1) * (n - 1) + (j - 1)) as usize;
        let mut rows = Vec::new();
        for &(i, j) in &grid {
            let mut row = vec![(idx(i, j), 4.0)];
            for (a, b) in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
                if a > 0 && a < n && b > 0 && b < n {
                    row.push((idx(a, b), -1.0));
                }
            }
            rows.push(row);
        }
        (Csr::from_rows(grid.len(), &rows), grid)
    }

    #[test]
    fn vcycle_preconditioned_cg_converges_quickly() {
        let (a, grid) = poisson(128);
        let plan = MultigridPlan::new(&grid);
        assert!(plan.levels() >= 3);
        let mg = Multigrid::new(&plan, &a);
        let b = vec![1.0; a.nrows];
        let mut x = vec![0.0; a.nrows];
        let stats = pcg(|v, y| a.matvec(v, y), |r, z| mg.apply(r, z), &b, &mut x, 1e-10, 200).unwrap();
        assert!(stats.iterations < 25, "iterations {}", stats.iterations);
    }

    #[test]
    fn prolongation_weights_sum_to_one_in_the_interior() {
        let grid: Vec<(i64, i64)> = (0..9).flat_map(|i| (0..9).map(move |j| (i, j))).collect();
        let (p, coarse) = coarsen(&grid);
        assert_eq!(coarse.len(), 25);
        for r in 0..p.nrows {
            let s: f64 = p.row(r).map(|(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }
}
