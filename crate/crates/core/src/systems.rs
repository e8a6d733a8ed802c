//! Equations of motion, energies and U(1) actions for the classical Pauli
//! particle, its guiding-center limit, the relativistic Pauli particle and the
//! symplectic Lorentz system.

use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields3d::{eval_field, frame_jacobians, reference_axis, FieldModel3D, FieldPoint};
use crate::numcore::solve;
use crate::spacetime::{eval_faraday, mink, FaradayModel, FaradayPoint};
use crate::sympl::SymplecticSetup;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliParams {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub q: f64,
    /// Pauli parameter `M = μ_P/m`.
    #[serde(rename = "M", default)]
    pub big_m: f64,
    pub epsilon: f64,
}

fn one() -> f64 {
    1.0
}

impl PauliParams {
    pub fn new(epsilon: f64) -> Self {
        PauliParams {
            m: 1.0,
            q: 1.0,
            big_m: 1.0,
            epsilon,
        }
    }

    pub fn with_m(mut self, big_m: f64) -> Self {
        self.big_m = big_m;
        self
    }

    pub fn zeta(&self) -> f64 {
        self.q.signum()
    }

    pub fn q_over_m(&self) -> f64 {
        self.q / self.m
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {}", self.m)));
        }
        if self.q == 0.0 || !self.q.is_finite() {
            return Err(Error::InvalidArgument("charge must be nonzero".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !self.big_m.is_finite() {
            return Err(Error::InvalidArgument("M must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState3D {
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState4D {
    pub r: Vector4<f64>,
    pub v: Vector4<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState2N {
    pub z: DVector<f64>,
    pub v: DVector<f64>,
}

impl PhaseState3D {
    pub fn flat(&self) -> Vec<f64> {
        self.x.iter().chain(self.v.iter()).copied().collect()
    }

    pub fn from_flat(y: &[f64]) -> Self {
        PhaseState3D {
            x: Vector3::from_column_slice(&y[0..3]),
            v: Vector3::from_column_slice(&y[3..6]),
        }
    }
}

impl PhaseState4D {
    pub fn flat(&self) -> Vec<f64> {
        self.r.iter().chain(self.v.iter()).copied().collect()
    }

    pub fn from_flat(y: &[f64]) -> Self {
        PhaseState4D {
            r: Vector4::from_column_slice(&y[0..4]),
            v: Vector4::from_column_slice(&y[4..8]),
        }
    }
}

impl PhaseState2N {
    pub fn flat(&self) -> Vec<f64> {
        self.z.iter().chain(self.v.iter()).copied().collect()
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 2;
        PhaseState2N {
            z: DVector::from_column_slice(&y[..n]),
            v: DVector::from_column_slice(&y[n..]),
        }
    }
}

fn field(model: &FieldModel3D, x: &Vector3<f64>, p: &PauliParams) -> Result<FieldPoint> {
    eval_field(model, x, p.q_over_m())
}

// ---- classical Pauli -------------------------------------------------------

pub fn rhs_classical_pauli(
    s: &PhaseState3D,
    p: &PauliParams,
    model: &FieldModel3D,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let fp = field(model, &s.x, p)?;
    Ok(classical_rhs_at(&fp, &s.v, p))
}

fn classical_rhs_at(fp: &FieldPoint, v: &Vector3<f64>, p: &PauliParams) -> (Vector3<f64>, Vector3<f64>) {
    let dx = v * p.epsilon;
    let dv = v.cross(&fp.b) * fp.omega_c - fp.grad_bmag * (p.epsilon * p.big_m);
    (dx, dv)
}

pub fn hamiltonian_classical(s: &PhaseState3D, p: &PauliParams, model: &FieldModel3D) -> Result<f64> {
    let fp = field(model, &s.x, p)?;
    Ok(p.epsilon * p.epsilon * p.m * (s.v.norm_squared() / 2.0 + p.big_m * fp.bmag))
}

/// `(∂H/∂x, ∂H/∂v)`.
pub fn hamiltonian_classical_gradient(
    s: &PhaseState3D,
    p: &PauliParams,
    model: &FieldModel3D,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let fp = field(model, &s.x, p)?;
    let c = p.epsilon * p.epsilon * p.m;
    Ok((fp.grad_bmag * (c * p.big_m), s.v * c))
}

/// `Φ_θ(x, v) = (x, (v·b)b + sin θ v×b + cos θ b×(v×b))`.
pub fn u1_classical(theta: f64, s: &PhaseState3D, model: &FieldModel3D) -> Result<PhaseState3D> {
    let b = model.unit_b(&s.x)?;
    let vxb = s.v.cross(&b);
    let v = b * s.v.dot(&b) + vxb * theta.sin() + b.cross(&vxb) * theta.cos();
    Ok(PhaseState3D { x: s.x, v })
}

/// Frame coordinates `(x, u, v¹, v²)` with `v = u b + v¹e₁ + v²e₂`, the frame
/// seeded by the fixed axis `axis`.
pub fn classical_split(s: &PhaseState3D, fp: &FieldPoint, axis: &Vector3<f64>) -> (f64, [f64; 2]) {
    let (e1, e2) = crate::fields3d::frame_with_axis(&fp.b, axis);
    (s.v.dot(&fp.b), [s.v.dot(&e1), s.v.dot(&e2)])
}

/// Rates of the frame coordinates, obtained by transforming the vector
/// right-hand side: `(ẋ, u̇, v̇¹, v̇²)`.
pub fn classical_frame_rates(
    s: &PhaseState3D,
    p: &PauliParams,
    model: &FieldModel3D,
    axis: Option<Vector3<f64>>,
) -> Result<(Vector3<f64>, f64, [f64; 2])> {
    let fp = field(model, &s.x, p)?;
    let a = axis.unwrap_or_else(|| reference_axis(&fp.b));
    let (dx, dv) = classical_rhs_at(&fp, &s.v, p);
    let (e1, e2) = crate::fields3d::frame_with_axis(&fp.b, &a);
    let (de1, de2) = frame_jacobians(&fp.b, &fp.gradb, &a);
    let du = dv.dot(&fp.b) + s.v.dot(&(fp.gradb * dx));
    let dv1 = dv.dot(&e1) + s.v.dot(&(de1 * dx));
    let dv2 = dv.dot(&e2) + s.v.dot(&(de2 * dx));
    Ok((dx, du, [dv1, dv2]))
}

// ---- guiding center --------------------------------------------------------

pub fn rhs_guiding_center(
    x: &Vector3<f64>,
    u: f64,
    p: &PauliParams,
    model: &FieldModel3D,
) -> Result<(Vector3<f64>, f64)> {
    let fp = field(model, x, p)?;
    let eps = p.epsilon;
    let mgrad = fp.grad_bmag * p.big_m;
    let dx = fp.b * (eps * u) + fp.b.cross(&(mgrad + fp.kappa * (u * u))) * (eps * eps / fp.omega_c);
    let du = -eps * (fp.b + fp.b.cross(&fp.kappa) * (eps * u / fp.omega_c)).dot(&mgrad);
    Ok((dx, du))
}

/// `ε²m(u²/2 + M|B|)`, conserved by the guiding-center equations.
pub fn hamiltonian_guiding_center(x: &Vector3<f64>, u: f64, p: &PauliParams, model: &FieldModel3D) -> Result<f64> {
    let fp = field(model, x, p)?;
    Ok(p.epsilon * p.epsilon * p.m * (u * u / 2.0 + p.big_m * fp.bmag))
}

// ---- relativistic Pauli ----------------------------------------------------

pub fn rhs_relativistic_pauli(
    s: &PhaseState4D,
    p: &PauliParams,
    model: &FaradayModel,
) -> Result<(Vector4<f64>, Vector4<f64>)> {
    let t = model.tensors(&s.r)?;
    let eps = p.epsilon;
    let dr = s.v * eps;
    let dv = (t.f0 + t.f1 * eps) * s.v * p.zeta() - t.grad_omega0 * (eps * p.big_m);
    Ok((dr, dv))
}

pub fn hamiltonian_relativistic(s: &PhaseState4D, p: &PauliParams, model: &FaradayModel) -> Result<f64> {
    let omega0 = model.omega0(&s.r)?;
    Ok(p.epsilon * p.epsilon * (mink(&s.v, &s.v) / 2.0 + p.big_m * omega0))
}

/// `(∂𝓗/∂R, ∂𝓗/∂V)` as coordinate differentials.
pub fn hamiltonian_relativistic_gradient(
    s: &PhaseState4D,
    p: &PauliParams,
    model: &FaradayModel,
) -> Result<(Vector4<f64>, Vector4<f64>)> {
    let t = model.tensors(&s.r)?;
    let e2 = p.epsilon * p.epsilon;
    let mut d_omega = t.grad_omega0;
    d_omega[0] = -d_omega[0];
    let mut d_v = s.v;
    d_v[0] = -d_v[0];
    Ok((d_omega * (e2 * p.big_m), d_v * e2))
}

/// `Φ_θ(R, V) = (R, P∥V + [cos θ I + sin θ ζF₀/ω₀] P⊥V)`.
pub fn u1_relativistic(theta: f64, s: &PhaseState4D, p: &PauliParams, model: &FaradayModel) -> Result<PhaseState4D> {
    let t = model.tensors(&s.r)?;
    let pperp = -(t.f0 * t.f0) / (t.omega0 * t.omega0);
    let vperp = pperp * s.v;
    let v = (s.v - vperp) + vperp * theta.cos() + t.f0 * vperp * (theta.sin() * p.zeta() / t.omega0);
    Ok(PhaseState4D { r: s.r, v })
}

/// Tetrad components `(V⁰, V¹, V², V³)` with `V = V⁰e₀ + Σ Vⁱeᵢ`.
pub fn tetrad_components(fp: &FaradayPoint, v: &Vector4<f64>) -> [f64; 4] {
    let [e0, e1, e2, e3] = &fp.tetrad;
    [-mink(e0, v), mink(e1, v), mink(e2, v), mink(e3, v)]
}

/// Rates of the tetrad components along the flow, by transforming the vector
/// right-hand side; the tetrad derivative along `dR/dτ` is a central difference.
pub fn relativistic_frame_rates(s: &PhaseState4D, p: &PauliParams, model: &FaradayModel) -> Result<(Vector4<f64>, [f64; 4])> {
    let (dr, dv) = rhs_relativistic_pauli(s, p, model)?;
    let fp = eval_faraday(model, &s.r)?;
    let h = 1e-5 * (1.0 + s.r.amax()) / dr.amax().max(1e-300);
    let plus = eval_faraday(model, &(s.r + dr * h))?;
    let minus = eval_faraday(model, &(s.r - dr * h))?;
    let from_v = tetrad_components(&fp, &dv);
    let cp = tetrad_components(&plus, &s.v);
    let cm = tetrad_components(&minus, &s.v);
    let mut rates = [0.0; 4];
    for a in 0..4 {
        let moving = if dr.amax() > 0.0 { (cp[a] - cm[a]) / (2.0 * h) } else { 0.0 };
        rates[a] = from_v[a] + moving;
    }
    Ok((dr, rates))
}

// ---- symplectic Lorentz ----------------------------------------------------

/// Solves `g V̇ = −βV − ∂H − εΓ(V, V)` and returns `(ż, V̇)` with `ż = εV`.
pub fn rhs_symplectic_lorentz(
    s: &PhaseState2N,
    p: &PauliParams,
    setup: &SymplecticSetup,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let z = s.z.as_slice();
    let st = setup.structure(z)?;
    let gamma = setup.christoffel(z)?;
    let rhs = -(setup.beta() * &s.v) - setup.grad_h(z) - gamma.contract(&s.v, &s.v) * p.epsilon;
    let dv = solve(&st.g, &rhs).ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    Ok((&s.v * p.epsilon, dv))
}

/// `εH(z) + ε²g(V, V)/2`.
pub fn hamiltonian_symplectic(s: &PhaseState2N, p: &PauliParams, setup: &SymplecticSetup) -> Result<f64> {
    let z = s.z.as_slice();
    let g = setup.structure(z)?.g;
    Ok(p.epsilon * setup.h(z) + p.epsilon * p.epsilon * s.v.dot(&(&g * &s.v)) / 2.0)
}

/// Metric gradient `∇H = g⁻¹∂H`.
pub fn metric_grad_h(setup: &SymplecticSetup, z: &[f64], g: &DMatrix<f64>) -> Result<DVector<f64>> {
    solve(g, &setup.grad_h(z)).ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })
}

/// `Φ_θ(z, V) = (z, −J∇H + exp(θJ)[V + J∇H])`.
pub fn u1_symplectic(theta: f64, s: &PhaseState2N, setup: &SymplecticSetup) -> Result<PhaseState2N> {
    let z = s.z.as_slice();
    let st = setup.structure(z)?;
    let jgrad = &st.j * metric_grad_h(setup, z, &st.g)?;
    let w = &s.v + &jgrad;
    let rotated = &w * theta.cos() + &st.j * &w * theta.sin();
    Ok(PhaseState2N {
        z: s.z.clone(),
        v: rotated - jgrad,
    })
}

// ---- flat interface for the integrator -----------------------------------------------

/// A dynamical system on a flat state vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// State `[x, v]`.
    ClassicalPauli { model: FieldModel3D, params: PauliParams },
    /// State `[x, u]`.
    GuidingCenter { model: FieldModel3D, params: PauliParams },
    /// State `[R, V]`.
    RelativisticPauli { model: FaradayModel, params: PauliParams },
    /// State `[z, V]`.
    SymplecticLorentz { setup: SymplecticSetup, params: PauliParams },
}

impl Dynamics {
    pub fn params(&self) -> &PauliParams {
        match self {
            Dynamics::ClassicalPauli { params, .. }
            | Dynamics::GuidingCenter { params, .. }
            | Dynamics::RelativisticPauli { params, .. }
            | Dynamics::SymplecticLorentz { params, .. } => params,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Dynamics::ClassicalPauli { .. } => 6,
            Dynamics::GuidingCenter { .. } => 4,
            Dynamics::RelativisticPauli { .. } => 8,
            Dynamics::SymplecticLorentz { setup, .. } => 2 * setup.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dynamics::ClassicalPauli { .. } => "classical-pauli",
            Dynamics::GuidingCenter { .. } => "guiding-center",
            Dynamics::RelativisticPauli { .. } => "relativistic-pauli",
            Dynamics::SymplecticLorentz { .. } => "symplectic-lorentz",
        }
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "{} state has {} components, got {}",
                self.name(),
                self.dimension(),
                y.len()
            )));
        }
        Ok(())
    }

    pub fn rhs(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        match self {
            Dynamics::ClassicalPauli { model, params } => {
                let (dx, dv) = rhs_classical_pauli(&PhaseState3D::from_flat(y), params, model)?;
                Ok(PhaseState3D { x: dx, v: dv }.flat())
            }
            Dynamics::GuidingCenter { model, params } => {
                let (dx, du) = rhs_guiding_center(&Vector3::from_column_slice(&y[..3]), y[3], params, model)?;
                Ok(vec![dx[0], dx[1], dx[2], du])
            }
            Dynamics::RelativisticPauli { model, params } => {
                let (dr, dv) = rhs_relativistic_pauli(&PhaseState4D::from_flat(y), params, model)?;
                Ok(PhaseState4D { r: dr, v: dv }.flat())
            }
            Dynamics::SymplecticLorentz { setup, params } => {
                let (dz, dv) = rhs_symplectic_lorentz(&PhaseState2N::from_flat(y), params, setup)?;
                Ok(PhaseState2N { z: dz, v: dv }.flat())
            }
        }
    }

    pub fn energy(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        match self {
            Dynamics::ClassicalPauli { model, params } => hamiltonian_classical(&PhaseState3D::from_flat(y), params, model),
            Dynamics::GuidingCenter { model, params } => {
                hamiltonian_guiding_center(&Vector3::from_column_slice(&y[..3]), y[3], params, model)
            }
            Dynamics::RelativisticPauli { model, params } => {
                hamiltonian_relativistic(&PhaseState4D::from_flat(y), params, model)
            }
            Dynamics::SymplecticLorentz { setup, params } => {
                hamiltonian_symplectic(&PhaseState2N::from_flat(y), params, setup)
            }
        }
    }

    /// Angular frequency of the fast rotation at `y`.
    pub fn fast_frequency(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        match self {
            Dynamics::ClassicalPauli { model, params } | Dynamics::GuidingCenter { model, params } => {
                Ok(field(model, &Vector3::from_column_slice(&y[..3]), params)?.omega_c.abs())
            }
            Dynamics::RelativisticPauli { model, .. } => model.omega0(&Vector4::from_column_slice(&y[..4])),
            Dynamics::SymplecticLorentz { .. } => Ok(1.0),
        }
    }

    /// Domain check on the position part of `y`.
    pub fn check_domain(&self, y: &[f64]) -> Result<()> {
        self.check_len(y)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainExit { point: y.to_vec() });
        }
        match self {
            Dynamics::ClassicalPauli { model, .. } | Dynamics::GuidingCenter { model, .. } => {
                model.check_domain(&Vector3::from_column_slice(&y[..3]))
            }
            Dynamics::RelativisticPauli { model, .. } => model.check_domain(&Vector4::from_column_slice(&y[..4])),
            Dynamics::SymplecticLorentz { .. } => Ok(()),
        }
    }
}
