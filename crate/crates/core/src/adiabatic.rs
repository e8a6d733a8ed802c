//! Second-order adiabatic invariants, their normal Hessians and drift statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields3d::eval_field;
use crate::integrate::TrajectoryRecord;
use crate::numcore::sym_eig;
use crate::slow::Embedding;
use crate::spacetime::mink;
use crate::systems::{metric_grad_h, Dynamics, PhaseState2N, PhaseState3D, PhaseState4D};

/// `μ₂` of the state `y`:
/// classical `(m/2)|v×b|²/ω_c`, relativistic `ζ⟨V⊥, V⊥⟩/(2ω₀)`,
/// symplectic `½ g(V + J∇H, V + J∇H)`.
pub fn mu2(dynamics: &Dynamics, y: &[f64]) -> Result<f64> {
    dynamics.check_domain(y)?;
    match dynamics {
        Dynamics::ClassicalPauli { model, params } => {
            let s = PhaseState3D::from_flat(y);
            let fp = eval_field(model, &s.x, params.q_over_m())?;
            Ok(params.m / 2.0 * s.v.cross(&fp.b).norm_squared() / fp.omega_c)
        }
        Dynamics::RelativisticPauli { model, params } => {
            let s = PhaseState4D::from_flat(y);
            let t = model.tensors(&s.r)?;
            let vperp = -(t.f0 * t.f0) * s.v / (t.omega0 * t.omega0);
            Ok(params.zeta() * mink(&vperp, &vperp) / (2.0 * t.omega0))
        }
        Dynamics::SymplecticLorentz { setup, .. } => {
            let s = PhaseState2N::from_flat(y);
            let z = s.z.as_slice();
            let st = setup.structure(z)?;
            let w = &s.v + &st.j * metric_grad_h(setup, z, &st.g)?;
            Ok(0.5 * w.dot(&(&st.g * &w)))
        }
        Dynamics::GuidingCenter { .. } => Err(Error::InvalidArgument("guiding-center state has no gyration".into())),
    }
}

/// Central-difference Hessian of `μ₂` in fast coordinates at `fast = y₀*(slow)`,
/// symmetrized. The default step is `1e-4·(1 + |y₀*|)`.
pub fn normal_hessian(dynamics: &Dynamics, slow: &[f64], h: Option<f64>) -> Result<DMatrix<f64>> {
    let emb = Embedding::new(dynamics.clone())?;
    let base = emb.y_star(slow, 0)?;
    let scale = base.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = h.unwrap_or(1e-4 * (1.0 + scale));
    let n = base.len();
    let value = |fast: &[f64]| -> Result<f64> { mu2(dynamics, &emb.assemble(slow, fast)?) };
    let shifted = |i: usize, si: f64, j: usize, sj: f64| -> Result<f64> {
        let mut p = base.clone();
        p[i] += si * h;
        p[j] += sj * h;
        value(&p)
    };
    let center = value(&base)?;
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (shifted(i, 1.0, i, 0.0)? - 2.0 * center + shifted(i, -1.0, i, 0.0)?) / (h * h);
        for j in 0..i {
            let d = (shifted(i, 1.0, j, 1.0)? - shifted(i, 1.0, j, -1.0)? - shifted(i, -1.0, j, 1.0)?
                + shifted(i, -1.0, j, -1.0)?)
                / (4.0 * h * h);
            hess[(i, j)] = d;
            hess[(j, i)] = d;
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// `(λ_min, λ_min > 1e-10·‖H‖)`.
pub fn min_eigen_check(h: &DMatrix<f64>) -> Result<(f64, bool)> {
    let lmin = sym_eig(h)?.min_eigenvalue();
    Ok((lmin, lmin > 1e-10 * h.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftStat {
    pub mu2_initial: f64,
    pub max_abs_drift: f64,
    pub time_horizon: f64,
    pub samples: usize,
}

impl DriftStat {
    pub fn from_samples(times: &[f64], mu: &[f64]) -> Result<Self> {
        if mu.len() < 2 || times.len() != mu.len() {
            return Err(Error::InsufficientData(format!("drift needs at least 2 samples, got {}", mu.len())));
        }
        let mu0 = mu[0];
        Ok(DriftStat {
            mu2_initial: mu0,
            max_abs_drift: mu.iter().map(|m| (m - mu0).abs()).fold(0.0, f64::max),
            time_horizon: times[times.len() - 1] - times[0],
            samples: mu.len(),
        })
    }
}

/// Drift of the `mu2` column of a trajectory.
pub fn drift_stat(record: &TrajectoryRecord) -> Result<DriftStat> {
    let mu = record
        .column("mu2")
        .ok_or_else(|| Error::InsufficientData("trajectory has no mu2 column".into()))?;
    DriftStat::from_samples(&record.times, mu)
}
