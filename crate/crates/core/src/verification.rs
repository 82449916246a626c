//! Numerical checks of the flux identity, the radiation condition,
//! cross-discretization consistency, the weak equation and the cut-off
//! reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{Assembler, OuterCondition, SesquilinearSystem};
use crate::coefficients::IncidentWave;
use crate::error::{Error, Result};
use crate::field::{rdot, CVec3, ComplexField, FieldSampler, C64};
use crate::geometry::{sphere_quadrature, CutoffFunction, ExteriorMesh, Vec3};
use crate::lap::{solve_absorbed, WeightedNormSpec};
use crate::quadrature::TET4_BARYCENTRIC;

/// Flux of a field through a sphere.
#[derive(Debug, Clone, Serialize)]
pub struct FluxReport {
    pub radius: f64,
    pub value: C64,
    pub order: usize,
    pub label: String,
}

impl FluxReport {
    /// |Re Phi| <= 1e-8 (1 + |Phi|).
    pub fn is_imaginary(&self) -> bool {
        self.value.re.abs() <= 1e-8 * (1.0 + self.value.norm())
    }
}

/// Phi(r) = int_{|x|=r} (conj(W) W_r - W conj(W_r)) ds.
pub fn flux(field: &dyn FieldSampler, radius: f64, order: usize, label: &str) -> Result<FluxReport> {
    let quad = sphere_quadrature(radius, order)?;
    let mut value = C64::new(0.0, 0.0);
    for (i, x) in quad.nodes().iter().enumerate() {
        let (w, g) = field.sample(x)?;
        let wr = rdot(&quad.normal(i), &g);
        value += (w.conj() * wr - w * wr.conj()) * quad.weights()[i];
    }
    Ok(FluxReport {
        radius,
        value,
        order,
        label: label.to_string(),
    })
}

/// Residuals int |v_r - i k v|^2 ds on a list of spheres.
#[derive(Debug, Clone, Serialize)]
pub struct RadiationReport {
    pub k: f64,
    pub entries: Vec<(f64, f64)>,
}

impl RadiationReport {
    /// Each residual at most (1 + slack) times the previous one.
    pub fn non_increasing(&self, slack: f64) -> bool {
        self.entries.windows(2).all(|p| p[1].1 <= (1.0 + slack) * p[0].1)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.entries.windows(2).all(|p| p[1].1 < p[0].1)
    }
}

pub fn radiation_residual(field: &dyn FieldSampler, radii: &[f64], k: f64, order: usize) -> Result<RadiationReport> {
    if field.absorption() != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radiation residual needs an eps = 0 field, got eps = {}",
            field.absorption()
        )));
    }
    let ik = C64::new(0.0, k);
    let entries = radii
        .iter()
        .map(|&r| {
            let quad = sphere_quadrature(r, order)?;
            let mut acc = 0.0;
            for (i, x) in quad.nodes().iter().enumerate() {
                let (v, g) = field.sample(x)?;
                acc += (rdot(&quad.normal(i), &g) - ik * v).norm_sqr() * quad.weights()[i];
            }
            Ok((r, acc))
        })
        .collect::<Result<_>>()?;
    Ok(RadiationReport { k, entries })
}

/// Pointwise difference of two fields.
pub struct Difference<'a>(pub &'a dyn FieldSampler, pub &'a dyn FieldSampler);

impl FieldSampler for Difference<'_> {
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        let (a, ga) = self.0.sample(x)?;
        let (b, gb) = self.1.sample(x)?;
        Ok((a - b, ga - gb))
    }

    fn absorption(&self) -> f64 {
        self.0.absorption().max(self.1.absorption())
    }
}

/// Physical data a uniqueness probe must hold fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalKey {
    pub k: f64,
    pub direction: [f64; 3],
    pub boundary: String,
    pub sigma: f64,
    pub coefficients: String,
}

/// One discretization of a fixed scattering problem.
#[derive(Debug, Clone)]
pub struct ProbeVariant {
    pub label: String,
    pub key: PhysicalKey,
    pub field: ComplexField,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDiscrepancy {
    pub first: String,
    pub second: String,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Consecutive pairs in the given order.
    pub consecutive: Vec<PairDiscrepancy>,
    pub max_pairwise: f64,
    pub common_cells: usize,
    pub strictly_decreasing: bool,
}

/// Weighted-norm discrepancies of fields interpolated to the coarsest mesh
/// over the cells covered by every mesh.
pub fn uniqueness_probe(variants: &[ProbeVariant], spec: &WeightedNormSpec) -> Result<UniquenessReport> {
    if variants.len() < 2 {
        return Err(Error::InvalidArgument("uniqueness probe needs at least two variants".into()));
    }
    if let Some(v) = variants.iter().find(|v| v.key != variants[0].key) {
        return Err(Error::Config(format!(
            "variant `{}` changes the physical problem ({:?} vs {:?})",
            v.label, v.key, variants[0].key
        )));
    }
    let coarse_idx = (0..variants.len())
        .min_by_key(|&i| variants[i].field.mesh().num_vertices())
        .expect("non-empty");
    let mesh = variants[coarse_idx].field.mesh().clone();
    let sampled: Vec<Vec<Option<C64>>> = variants
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i == coarse_idx {
                v.field.values().iter().map(|&x| Some(x)).collect()
            } else {
                mesh.vertices().iter().map(|x| v.field.try_eval(x)).collect()
            }
        })
        .collect();
    let mask: Vec<bool> = mesh
        .cells()
        .iter()
        .map(|cell| cell.iter().all(|&v| sampled.iter().all(|s| s[v].is_some())))
        .collect();
    let common_cells = mask.iter().filter(|m| **m).count();
    if common_cells == 0 {
        return Err(Error::InvalidArgument("variants share no common region".into()));
    }
    let diff = |i: usize, j: usize| -> f64 {
        let values: Vec<C64> = sampled[i]
            .iter()
            .zip(&sampled[j])
            .map(|(a, b)| a.unwrap_or_default() - b.unwrap_or_default())
            .collect();
        masked_weighted_norm(&mesh, &values, spec, &mask)
    };
    let consecutive: Vec<PairDiscrepancy> = (1..variants.len())
        .map(|i| PairDiscrepancy {
            first: variants[i - 1].label.clone(),
            second: variants[i].label.clone(),
            discrepancy: diff(i - 1, i),
        })
        .collect();
    let mut max_pairwise: f64 = 0.0;
    for i in 0..variants.len() {
        for j in i + 1..variants.len() {
            max_pairwise = max_pairwise.max(diff(i, j));
        }
    }
    let strictly_decreasing = consecutive.windows(2).all(|p| p[1].discrepancy < p[0].discrepancy);
    Ok(UniquenessReport {
        consecutive,
        max_pairwise,
        common_cells,
        strictly_decreasing,
    })
}

fn masked_weighted_norm(mesh: &ExteriorMesh, values: &[C64], spec: &WeightedNormSpec, mask: &[bool]) -> f64 {
    let mut total = 0.0;
    for (c, cell) in mesh.cells().iter().enumerate() {
        if !mask[c] {
            continue;
        }
        let pts = mesh.cell_points(c);
        let vol = mesh.signed_volume(c);
        for b in TET4_BARYCENTRIC {
            let x = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2] + pts[3] * b[3];
            let v: C64 = (0..4).map(|i| values[cell[i]] * b[i]).sum();
            total += vol / 4.0 * spec.weight(x.norm_squared()) * v.norm_sqr();
        }
    }
    total.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakResidualReport {
    pub trials: usize,
    pub seed: u64,
    pub max_defect: f64,
}

/// max over test vectors phi of |phi^H (A w - b)| / (|phi| |b| + tiny).
/// The first trial is the residual itself, the rest are random.
pub fn weak_residual(field: &ComplexField, system: &SesquilinearSystem, trials: usize, seed: u64) -> Result<WeakResidualReport> {
    let x = system.restrict(field)?;
    let r = system.residual(&x);
    let b_norm = crate::sparse::norm2(system.load());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_defect: f64 = 0.0;
    for t in 0..trials {
        let phi: Vec<C64> = if t == 0 {
            r.clone()
        } else {
            (0..r.len())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let dot: C64 = phi.iter().zip(&r).map(|(p, ri)| p.conj() * ri).sum();
        let defect = dot.norm() / (crate::sparse::norm2(&phi) * b_norm + f64::MIN_POSITIVE);
        max_defect = max_defect.max(defect);
    }
    Ok(WeakResidualReport {
        trials,
        seed,
        max_defect,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub eps: f64,
    pub max_nodal_difference: f64,
    pub max_abs_total: f64,
}

/// Solve for w and for u at one eps and compare u with w + zeta u0.
pub fn reduction_identity(
    asm: &Assembler,
    wave: &IncidentWave,
    cutoff: &CutoffFunction,
    eps: f64,
    outer: OuterCondition,
) -> Result<ReductionReport> {
    let w = solve_absorbed(&asm.absorbed(wave, eps, cutoff, outer, crate::assembly::LoadMode::Galerkin)?)?;
    let u = solve_absorbed(&asm.total_field(wave, eps, cutoff, outer)?)?;
    let z = asm.cutoff_incident(wave, cutoff);
    let max_nodal_difference = u
        .values()
        .iter()
        .zip(w.values())
        .zip(&z)
        .map(|((u, w), z)| (u - w - z).norm())
        .fold(0.0, f64::max);
    Ok(ReductionReport {
        eps,
        max_nodal_difference,
        max_abs_total: u.max_abs(),
    })
}

/// One named entry of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub inputs: serde_json::Value,
    pub values: serde_json::Value,
    pub thresholds: serde_json::Value,
}

impl CheckEntry {
    pub fn new(
        name: &str,
        inputs: serde_json::Value,
        values: serde_json::Value,
        thresholds: serde_json::Value,
    ) -> Self {
        Self {
            name: name.to_string(),
            inputs,
            values,
            thresholds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;
    use crate::oracle::special::spherical_jn;
    use crate::representation::GreenKernel;
    use std::f64::consts::PI;

    fn point_source(k: f64) -> AnalyticField<impl Fn(&Vec3) -> (C64, CVec3) + Sync> {
        let g = GreenKernel::new(k, 0.0).unwrap();
        AnalyticField(move |x: &Vec3| g.eval(x, &Vec3::zeros()).unwrap())
    }

    #[test]
    fn real_standing_wave_has_no_flux() {
        let f = AnalyticField(|x: &Vec3| {
            let r = x.norm();
            let j = spherical_jn(1, r);
            let dj = (r.cos() - j[0]) / r;
            (C64::new(j[0], 0.0), crate::field::complexify(&(x / r * dj)))
        });
        let rep = flux(&f, 2.0, 20, "j0").unwrap();
        assert!(rep.value.norm() <= 1e-10);
    }

    #[test]
    fn point_source_flux_and_residual() {
        let f = point_source(1.0);
        let rep = flux(&f, 3.0, 20, "g").unwrap();
        let exact = C64::new(0.0, 1.0 / (2.0 * PI));
        assert!((rep.value - exact).norm() <= 5e-3 * exact.norm());
        assert!(rep.is_imaginary());
        let rad = radiation_residual(&f, &[5.0, 10.0, 20.0], 1.0, 20).unwrap();
        for (r, v) in &rad.entries {
            let exact = 1.0 / (4.0 * PI * r * r);
            assert!((v - exact).abs() <= 1e-2 * exact);
        }
        assert!(rad.strictly_decreasing());
    }

    #[test]
    fn plane_wave_is_not_radiating() {
        let wave = IncidentWave::new(1.0, Vec3::z()).unwrap();
        let f = AnalyticField(move |x: &Vec3| wave.eval(x));
        let rad = radiation_residual(&f, &[5.0, 10.0, 20.0], 1.0, 40).unwrap();
        assert!(!rad.non_increasing(0.1));
        assert!(rad.entries[2].1 > 10.0 * rad.entries[0].1);
    }

    #[test]
    fn zero_field() {
        let f = AnalyticField(|_: &Vec3| (C64::new(0.0, 0.0), CVec3::zeros()));
        let rad = radiation_residual(&f, &[5.0, 10.0], 1.0, 10).unwrap();
        assert!(rad.entries.iter().all(|e| e.1 == 0.0));
        assert_eq!(flux(&f, 3.0, 10, "0").unwrap().value, C64::new(0.0, 0.0));
    }

    #[test]
    fn absorbed_fields_are_rejected() {
        struct Lossy;
        impl FieldSampler for Lossy {
            fn sample(&self, _: &Vec3) -> Result<(C64, CVec3)> {
                Ok((C64::new(0.0, 0.0), CVec3::zeros()))
            }
            fn absorption(&self) -> f64 {
                0.1
            }
        }
        assert!(radiation_residual(&Lossy, &[5.0], 1.0, 10).is_err());
    }
}
