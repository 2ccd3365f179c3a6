use crate::geometry::{CylinderSpec, GraphDomain};
use crate::mesh::{Field, Mesh};
use crate::{Error, Point, Result};

/// Region over which a ratio probe takes its sup and inf.
#[derive(Debug, Clone, Copy)]
pub enum ProbeRegion<'a> {
    Cylinder { domain: &'a GraphDomain, spec: CylinderSpec },
    /// Interior nodes within `radius` of `center`.
    Ball { center: Point, radius: f64 },
}

impl ProbeRegion<'_> {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            ProbeRegion::Cylinder { domain, spec } => spec.contains(domain, p),
            ProbeRegion::Ball { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) <= *radius,
        }
    }

    /// Length scale `R` of the region.
    pub fn scale(&self) -> f64 {
        match self {
            ProbeRegion::Cylinder { spec, .. } => spec.r,
            ProbeRegion::Ball { radius, .. } => *radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub param: f64,
    pub u: f64,
    pub v: f64,
    pub ratio: f64,
}

/// `C⁻¹ R^β/‖v‖ ≤ u/v ≤ C ‖u‖/R^β` with the smallest `C` consistent with the
/// observed sup and inf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateBounds {
    pub scale: f64,
    pub beta: f64,
    pub u_norm: f64,
    pub v_norm: f64,
    pub c_empirical: f64,
}

#[derive(Debug, Clone)]
pub struct RatioProbe {
    pub path: Vec<RatioSample>,
    /// `|u/v − 1|` along the path.
    pub deviation: Vec<f64>,
    /// `(i, (d_{i+1} − d_i)/d_i)` wherever the deviation grows along the path.
    pub inversions: Vec<(usize, f64)>,
    /// Slope of `log |u/v − 1|` against `log param`, if defined.
    pub decay_rate: Option<f64>,
    pub sup: f64,
    pub inf: f64,
    pub region_nodes: usize,
    pub template: TemplateBounds,
}

impl RatioProbe {
    /// At most `max_count` inversions, each of relative size `≤ rel`.
    pub fn monotone_within(&self, max_count: usize, rel: f64) -> bool {
        self.inversions.len() <= max_count && self.inversions.iter().all(|&(_, r)| r <= rel)
    }
}

/// Samples `u/v` along a parametrised path and over the interior nodes of a
/// region.
pub fn ratio_probe(
    u: &Field,
    v: &Field,
    mesh: &Mesh,
    region: ProbeRegion<'_>,
    path: &[(f64, Point)],
    gamma: f64,
) -> Result<RatioProbe> {
    for f in [u, v] {
        if f.mesh_id() != mesh.id() || f.len() != mesh.n_nodes() {
            return Err(Error::MeshMismatch("probe fields must live on the given mesh".into()));
        }
    }
    let (uv, vv) = (u.values(), v.values());
    let (mut sup, mut inf, mut count) = (f64::NEG_INFINITY, f64::INFINITY, 0usize);
    for k in 0..mesh.n_interior() {
        if !region.contains(mesh.point(k)) {
            continue;
        }
        if !(vv[k] > 0.0) || !(uv[k] > 0.0) {
            return Err(Error::invalid(format!("nonpositive field value at node {k}")));
        }
        let r = uv[k] / vv[k];
        sup = sup.max(r);
        inf = inf.min(r);
        count += 1;
    }
    let mut samples = Vec::with_capacity(path.len());
    for &(param, p) in path {
        let (a, b) = (mesh.sample(u, p)?, mesh.sample(v, p)?);
        if !(b > 0.0) {
            return Err(Error::invalid(format!("v = {b} at path parameter {param}")));
        }
        let ratio = a / b;
        if region.contains(p) {
            sup = sup.max(ratio);
            inf = inf.min(ratio);
        }
        samples.push(RatioSample { param, u: a, v: b, ratio });
    }
    if count == 0 && samples.is_empty() {
        return Err(Error::invalid("probe region contains no interior node"));
    }
    let deviation: Vec<f64> = samples.iter().map(|s| (s.ratio - 1.0).abs()).collect();
    let inversions = deviation
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0])
        .map(|(i, w)| (i, (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE)))
        .collect();
    let beta = 2.0 / (1.0 + gamma);
    let scale = region.scale();
    let (u_norm, v_norm) = (u.max(), v.max());
    let rb = scale.powf(beta);
    let c_empirical = if sup.is_finite() && inf > 0.0 {
        (sup * rb / u_norm).max(v_norm / (rb * inf))
    } else {
        f64::INFINITY
    };
    Ok(RatioProbe {
        decay_rate: decay_rate(&samples, &deviation),
        path: samples,
        deviation,
        inversions,
        sup,
        inf,
        region_nodes: count,
        template: TemplateBounds {
            scale,
            beta,
            u_norm,
            v_norm,
            c_empirical,
        },
    })
}

fn decay_rate(samples: &[RatioSample], dev: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .zip(dev)
        .filter(|(s, d)| s.param > 0.0 && **d > 0.0)
        .map(|(s, d)| (s.param.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CylinderKind;
    use crate::mesh::build_cartesian_mesh;
    use proptest::prelude::*;

    fn setup() -> (GraphDomain, Mesh) {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let mesh = build_cartesian_mesh(&dom, 0.125).unwrap();
        (dom, mesh)
    }

    fn path() -> Vec<(f64, Point)> {
        [0.5, 0.25, 0.125].iter().map(|&t| (t, [0.0, t])).collect()
    }

    #[test]
    fn identical_fields_have_unit_ratio() {
        let (dom, mesh) = setup();
        let v = Field::from_fn(&mesh, |p| p[1] * (2.0 - p[1]) + 0.1);
        let spec = CylinderSpec::new(0.0, 0.5, 0.1, CylinderKind::Grounded).unwrap();
        let region = ProbeRegion::Cylinder { domain: &dom, spec };
        let r = ratio_probe(&v, &v, &mesh, region, &path(), 0.5).unwrap();
        assert_eq!((r.sup, r.inf), (1.0, 1.0));
        assert!(r.deviation.iter().all(|d| *d == 0.0));
        let r2 = ratio_probe(&v.scaled(2.0), &v, &mesh, region, &path(), 0.5).unwrap();
        assert!((r2.sup - 2.0).abs() < 1e-15 && (r2.inf - 2.0).abs() < 1e-15);
        assert!(r2.path.iter().all(|s| (s.ratio - 2.0).abs() < 1e-15));
    }

    #[test]
    fn nonpositive_v_is_rejected() {
        let (_, mesh) = setup();
        let u = Field::constant(&mesh, 1.0);
        let v = Field::from_fn(&mesh, |p| p[1] - 0.3);
        let region = ProbeRegion::Ball { center: [0.0, 0.5], radius: 0.4 };
        assert!(ratio_probe(&u, &v, &mesh, region, &path(), 0.5).is_err());
    }

    #[test]
    fn inversions_and_decay() {
        let (_, mesh) = setup();
        let v = Field::from_fn(&mesh, |p| 1.0 + p[1]);
        let u = Field::from_fn(&mesh, |p| (1.0 + p[1]) * (1.0 + p[1] * p[1]));
        let region = ProbeRegion::Ball { center: [0.0, 0.5], radius: 0.5 };
        let r = ratio_probe(&u, &v, &mesh, region, &path(), 0.5).unwrap();
        assert!(r.inversions.is_empty());
        assert!(r.monotone_within(0, 0.0));
        // bilinear interpolation of p² between nodes is exact at grid points
        assert!((r.decay_rate.unwrap() - 2.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn sup_and_inf_bracket_the_samples(a in 0.1f64..3.0, b in 0.1f64..3.0, c in 0.0f64..0.5) {
            let (dom, mesh) = setup();
            let u = Field::from_fn(&mesh, |p| a + p[1] + c * p[0] * p[0]);
            let v = Field::from_fn(&mesh, |p| b + p[1] * p[1]);
            let spec = CylinderSpec::new(0.0, 1.0, 0.1, CylinderKind::Grounded).unwrap();
            let r = ratio_probe(&u, &v, &mesh, ProbeRegion::Cylinder { domain: &dom, spec }, &path(), 1.0).unwrap();
            prop_assert!(r.sup >= r.inf);
            for s in &r.path {
                prop_assert!(s.ratio <= r.sup + 1e-15 && s.ratio >= r.inf - 1e-15);
            }
            prop_assert!(r.template.c_empirical.is_finite() && r.template.c_empirical > 0.0);
        }
    }
}
