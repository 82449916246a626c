//! Limiting absorption driver: solve for a decreasing absorption schedule,
//! monitor weighted norms and extrapolate to zero absorption.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, LoadMode, OuterCondition, SesquilinearSystem};
use crate::coefficients::IncidentWave;
use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::geometry::{CutoffFunction, ExteriorMesh, FacetTag};
use crate::quadrature::{gauss_legendre_interval, TET4_BARYCENTRIC};
use crate::sparse::{norm2, solve_preconditioned, SolveStats, SparseLu};

/// Target relative residual of every linear solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// eps_n = eps0 * ratio^n, n = 0..count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl EpsilonSchedule {
    pub fn new(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        let s = Self { eps0, ratio, count };
        s.validate()?;
        Ok(s)
    }

    /// eps0 = 0.4 k^2, ratio 0.5, six steps.
    pub fn default_for(k: f64) -> Self {
        Self {
            eps0: 0.4 * k * k,
            ratio: 0.5,
            count: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps0 must be positive, got {}", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if self.count < 2 {
            return Err(Error::InvalidArgument(format!(
                "schedule needs at least 2 steps, got {}",
                self.count
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|n| self.eps0 * self.ratio.powi(n as i32)).collect()
    }
}

/// Norm of H^order_{-s}: weight (1 + |x|^2)^(-s/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub order: u8,
    pub s: f64,
}

impl WeightedNormSpec {
    pub fn new(order: u8, s: f64) -> Result<Self> {
        if order > 1 {
            return Err(Error::InvalidArgument(format!("norm order must be 0 or 1, got {order}")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidArgument("weight exponent must be finite".into()));
        }
        Ok(Self { order, s })
    }

    pub fn weight(&self, r2: f64) -> f64 {
        (1.0 + r2).powf(-self.s / 2.0)
    }
}

impl Default for WeightedNormSpec {
    fn default() -> Self {
        Self { order: 0, s: 2.0 }
    }
}

/// Weighted norm of a nodal vector on `mesh`.
pub fn weighted_norm_values(mesh: &ExteriorMesh, values: &[C64], spec: &WeightedNormSpec) -> f64 {
    let mut total = 0.0;
    for (c, cell) in mesh.cells().iter().enumerate() {
        let pts = mesh.cell_points(c);
        let (grads, vol) = mesh.barycentric_gradients(c);
        let u = cell.map(|v| values[v]);
        let grad_sq = if spec.order == 1 {
            let mut g = [C64::new(0.0, 0.0); 3];
            for (ui, gi) in u.iter().zip(&grads) {
                for d in 0..3 {
                    g[d] += ui * gi[d];
                }
            }
            g.iter().map(|x| x.norm_sqr()).sum::<f64>()
        } else {
            0.0
        };
        for b in TET4_BARYCENTRIC {
            let x = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2] + pts[3] * b[3];
            let val: C64 = (0..4).map(|i| u[i] * b[i]).sum();
            total += vol / 4.0 * spec.weight(x.norm_squared()) * (val.norm_sqr() + grad_sq);
        }
    }
    total.sqrt()
}

pub fn weighted_norm(field: &ComplexField, spec: &WeightedNormSpec) -> f64 {
    weighted_norm_values(field.mesh(), field.values(), spec)
}

/// Squared-norm contribution beyond rho of a field decaying like c/r:
/// c^2 4 pi int_rho^inf (1 + r^2)^(-s/2) dr.
pub fn tail_estimate(decay_constant: f64, rho: f64, s: f64) -> f64 {
    // r = rho / t maps (rho, inf) onto (0, 1).
    let integral: f64 = gauss_legendre_interval(64, 0.0, 1.0)
        .into_iter()
        .map(|(t, w)| w * rho * t.powf(s - 2.0) * (t * t + rho * rho).powf(-s / 2.0))
        .sum();
    decay_constant * decay_constant * 4.0 * std::f64::consts::PI * integral
}

/// Direct solve with the residual contract.
pub fn solve_absorbed(system: &SesquilinearSystem) -> Result<ComplexField> {
    let meta = system.meta();
    let lu = SparseLu::factor(system.matrix()).map_err(|e| Error::SingularSystem {
        k: meta.k,
        eps: meta.eps,
        detail: e.to_string(),
    })?;
    let (x, stats) = solve_preconditioned(system.matrix(), &lu, system.load(), SOLVE_TOLERANCE)?;
    if !(stats.relative_residual <= SOLVE_TOLERANCE) {
        return Err(Error::SingularSystem {
            k: meta.k,
            eps: meta.eps,
            detail: format!("relative residual {:e}", stats.relative_residual),
        });
    }
    system.expand(&x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LapStep {
    pub eps: f64,
    pub norm: f64,
    /// Weighted norm of w_n - w_{n-1}.
    pub increment: Option<f64>,
    /// log(delta_{n-1} / delta_n) / log(1 / ratio).
    pub order_estimate: Option<f64>,
    pub solve: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriCheck {
    pub max: f64,
    pub median: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct LapResult {
    pub schedule: EpsilonSchedule,
    pub norm_spec: WeightedNormSpec,
    pub tolerance: f64,
    pub steps: Vec<LapStep>,
    pub fields: Vec<ComplexField>,
    pub extrapolated: ComplexField,
    pub extrapolated_norm: f64,
    pub order: Option<f64>,
    pub verdict: Verdict,
    pub apriori: AprioriCheck,
    /// Squared weighted-norm mass beyond the truncation sphere.
    pub tail_estimate: f64,
    pub factorizations: usize,
    pub step_seconds: Vec<f64>,
}

impl LapResult {
    /// CSV table: epsilon, norm, increment, order_estimate.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("epsilon,norm,increment,order_estimate\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
        for s in &self.steps {
            out.push_str(&format!(
                "{:.12e},{:.12e},{},{}\n",
                s.eps,
                s.norm,
                opt(s.increment),
                opt(s.order_estimate)
            ));
        }
        out
    }

    pub fn increments(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.increment).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapOptions {
    /// Converged requires delta_last <= tol * ||w_last||.
    pub tol: f64,
    pub outer: OuterCondition,
    pub load: LoadMode,
    /// Factor once and precondition the remaining steps with that factor.
    pub share_factorization: bool,
}

impl Default for LapOptions {
    fn default() -> Self {
        Self {
            tol: 0.05,
            outer: OuterCondition::Sommerfeld,
            load: LoadMode::Galerkin,
            share_factorization: true,
        }
    }
}

/// Run the absorption schedule for the scattering problem.
pub fn run_lap(
    asm: &Assembler,
    wave: &IncidentWave,
    cutoff: &CutoffFunction,
    schedule: &EpsilonSchedule,
    spec: &WeightedNormSpec,
    options: &LapOptions,
) -> Result<LapResult> {
    run_lap_systems(schedule, spec, options, |eps| {
        asm.absorbed(wave, eps, cutoff, options.outer, options.load)
    })
}

/// Schedule driver over an arbitrary family of systems indexed by eps.
pub fn run_lap_systems(
    schedule: &EpsilonSchedule,
    spec: &WeightedNormSpec,
    options: &LapOptions,
    build: impl Fn(f64) -> Result<SesquilinearSystem>,
) -> Result<LapResult> {
    schedule.validate()?;
    if !(spec.s > 1.0) {
        return Err(Error::Hypothesis(format!(
            "weighted norm exponent must exceed 1 for solution monitoring, got {}",
            spec.s
        )));
    }
    let mut steps: Vec<LapStep> = Vec::new();
    let mut fields: Vec<ComplexField> = Vec::new();
    let mut seconds = Vec::new();
    let mut lu: Option<SparseLu> = None;
    let mut factorizations = 0;
    let mut mesh: Option<Arc<ExteriorMesh>> = None;
    for eps in schedule.values() {
        let start = Instant::now();
        let sys = build(eps)?;
        let meta = *sys.meta();
        let singular = |e: Error| Error::SingularSystem {
            k: meta.k,
            eps,
            detail: e.to_string(),
        };
        let mut attempt = None;
        if options.share_factorization {
            if let Some(f) = &lu {
                attempt = solve_preconditioned(sys.matrix(), f, sys.load(), SOLVE_TOLERANCE).ok();
            }
        }
        let (x, stats) = match attempt {
            Some(r) if r.1.relative_residual <= SOLVE_TOLERANCE => r,
            _ => {
                let f = SparseLu::factor(sys.matrix()).map_err(singular)?;
                factorizations += 1;
                let r = solve_preconditioned(sys.matrix(), &f, sys.load(), SOLVE_TOLERANCE).map_err(singular)?;
                if options.share_factorization && lu.is_none() {
                    lu = Some(f);
                }
                r
            }
        };
        if !(stats.relative_residual <= SOLVE_TOLERANCE) && norm2(sys.load()) > 0.0 {
            return Err(Error::SingularSystem {
                k: meta.k,
                eps,
                detail: format!("relative residual {:e}", stats.relative_residual),
            });
        }
        let field = sys.expand(&x)?;
        let m = mesh.get_or_insert_with(|| sys.mesh().clone());
        let norm = weighted_norm(&field, spec);
        let increment = fields.last().map(|prev: &ComplexField| {
            let diff: Vec<C64> = field.values().iter().zip(prev.values()).map(|(a, b)| a - b).collect();
            weighted_norm_values(m, &diff, spec)
        });
        let order_estimate = match (steps.last().and_then(|s| s.increment), increment) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).ln() / (1.0 / schedule.ratio).ln()),
            _ => None,
        };
        steps.push(LapStep {
            eps,
            norm,
            increment,
            order_estimate,
            solve: stats,
        });
        fields.push(field);
        seconds.push(start.elapsed().as_secs_f64());
    }

    let norms: Vec<f64> = steps.iter().map(|s| s.norm).collect();
    let apriori = apriori_check(&norms);
    if !apriori.holds {
        return Err(Error::AprioriBound {
            max: apriori.max,
            median: apriori.median,
        });
    }

    let n = fields.len();
    let last = &fields[n - 1];
    let (extrapolated, order) = match steps[n - 1].order_estimate {
        Some(p) if p.is_finite() && p > 0.0 => {
            let rp = schedule.ratio.powf(p);
            let scale = C64::new(1.0 / (1.0 - rp), 0.0);
            let w = last.axpy(C64::new(-rp, 0.0), &fields[n - 2])?.scale(scale);
            (w, Some(p))
        }
        _ => (last.clone(), None),
    };
    let increments: Vec<f64> = steps.iter().filter_map(|s| s.increment).collect();
    let tail: Vec<f64> = increments.iter().rev().take(3).rev().copied().collect();
    let monotone = tail.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    let small = tail.last().is_some_and(|&d| d <= options.tol * steps[n - 1].norm);
    let verdict = if monotone && small && tail.len() >= 2 {
        Verdict::Converged
    } else {
        Verdict::Inconclusive
    };
    let mesh = mesh.expect("schedule has at least two steps");
    let rho = mesh.truncation_radius();
    let outer_max = mesh
        .boundary_vertex_mask(FacetTag::Outer)
        .iter()
        .zip(extrapolated.values())
        .filter(|(m, _)| **m)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    let extrapolated_norm = weighted_norm(&extrapolated, spec);
    Ok(LapResult {
        schedule: *schedule,
        norm_spec: *spec,
        tolerance: options.tol,
        steps,
        fields,
        extrapolated,
        extrapolated_norm,
        order,
        verdict,
        apriori,
        tail_estimate: tail_estimate(outer_max * rho, rho, spec.s),
        factorizations,
        step_seconds: seconds,
    })
}

/// max <= 10 median over the schedule.
pub fn apriori_check(norms: &[f64]) -> AprioriCheck {
    let mut sorted = norms.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let median = if m == 0 {
        0.0
    } else if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let max = sorted.last().copied().unwrap_or(0.0);
    AprioriCheck {
        max,
        median,
        holds: max <= 10.0 * median,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values_and_errors() {
        let s = EpsilonSchedule::default_for(1.0);
        let v = s.values();
        assert_eq!(v.len(), 6);
        assert!((v[0] - 0.4).abs() < 1e-15 && (v[5] - 0.0125).abs() < 1e-15);
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(EpsilonSchedule::new(0.4, 0.5, 1).is_err());
        assert!(EpsilonSchedule::new(0.4, 1.0, 3).is_err());
        assert!(EpsilonSchedule::new(-0.4, 0.5, 3).is_err());
    }

    #[test]
    fn tail_matches_closed_form_for_s2() {
        let rho: f64 = 6.0;
        let exact = 4.0 * std::f64::consts::PI * (std::f64::consts::FRAC_PI_2 - rho.atan());
        assert!((tail_estimate(1.0, rho, 2.0) - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn apriori_proxy() {
        assert!(apriori_check(&[1.0, 1.1, 0.9, 1.2]).holds);
        assert!(!apriori_check(&[1.0, 1.0, 1.0, 50.0, 1.0]).holds);
    }
}
