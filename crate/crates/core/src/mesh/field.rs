use std::io::{self, Write};

use super::{Mesh, MeshKind};
use crate::geometry::{BoundaryPart, SectorDomain};
use crate::{Error, Point, Result};

/// Real values on every node of one mesh (unknowns first, then Dirichlet
/// nodes, in mesh order).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh_id: u64,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: vec![c; mesh.n_nodes()],
        }
    }

    /// Samples a function at every node.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: mesh.coords().iter().map(|&p| f(p)).collect(),
        }
    }

    /// Dirichlet data: `f` at boundary nodes, zero at the unknowns.
    pub fn from_boundary(mesh: &Mesh, f: impl Fn(Point, BoundaryPart) -> f64) -> Self {
        let values = (0..mesh.n_nodes())
            .map(|k| match mesh.boundary_part(k) {
                Some(part) => f(mesh.point(k), part),
                None => 0.0,
            })
            .collect();
        Self {
            mesh_id: mesh.id(),
            values,
        }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        Ok(Self {
            mesh_id: mesh.id(),
            values,
        })
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Nodewise `self · c`.
    pub fn scaled(&self, c: f64) -> Field {
        Field {
            mesh_id: self.mesh_id,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Writes `x,y,value` (or `r,omega,value` on polar meshes), one node per
    /// row, with 17 significant digits.
    pub fn write_csv(&self, mesh: &Mesh, mut w: impl Write) -> io::Result<()> {
        mesh.check(self).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        let polar = mesh.kind() == MeshKind::Polar;
        writeln!(w, "{}", if polar { "r,omega,value" } else { "x,y,value" })?;
        for (p, v) in mesh.coords().iter().zip(&self.values) {
            let (a, b) = if polar { SectorDomain::polar(*p) } else { (p[0], p[1]) };
            writeln!(w, "{a:.16e},{b:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}
