//! Faraday tensors on flat Minkowski space (signature −+++), split as
//! `F = F₀ + εF₁` with a strongly magnetized leading part.
//!
//! Tensors are stored in mixed form, `F = η⁻¹·[F_ab]`, so that the particle
//! equation reads `dV/dτ = ζ F V`. For fields `(E, B)` this gives
//! `F⁰ᵢ = Fⁱ₀ = Eᵢ` and `Fⁱⱼ = ε_ijk B_k`.

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields3d::{Box3, FieldKind, FieldModel3D};

pub fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

/// Minkowski inner product.
pub fn mink(a: &Vector4<f64>, b: &Vector4<f64>) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Mixed Faraday tensor of the fields `(E, B)`.
pub fn faraday_from_eb(e: &Vector3<f64>, b: &Vector3<f64>) -> Matrix4<f64> {
    Matrix4::new(
        0.0, e[0], e[1], e[2], //
        e[0], 0.0, b[2], -b[1], //
        e[1], -b[2], 0.0, b[0], //
        e[2], b[1], -b[0], 0.0,
    )
}

/// Uniform `(E, B)` pair used for the first-order field `F₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformEb {
    #[serde(default)]
    pub e: [f64; 3],
    #[serde(default)]
    pub b: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FaradayKind {
    /// `B = B₀ ẑ`, `E = 0`.
    UniformMagnetic { b0: f64 },
    /// Uniform `E`, `B`; the magnetization assumption needs `E·B = 0`, `|B| > |E|`.
    CrossedFields { e: [f64; 3], b: [f64; 3] },
    /// `B = B₀(1 + x/L) ẑ`, `E = 0`.
    GradientMagnetic { b0: f64, length: f64 },
    /// Any static 3D field model as the leading magnetic field.
    StaticMagnetic { field: FieldKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaradayModel {
    #[serde(flatten)]
    pub kind: FaradayKind,
    /// First-order part `F₁`, absent means zero.
    #[serde(default)]
    pub f1: Option<UniformEb>,
    /// Spatial domain; time is unbounded.
    pub domain: Box3,
}

/// Leading and first-order tensors with `ω₀` and its Minkowski gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaradayTensors {
    pub f0: Matrix4<f64>,
    pub f1: Matrix4<f64>,
    pub omega0: f64,
    /// `η⁻¹ ∂ω₀`.
    pub grad_omega0: Vector4<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaradayPoint {
    pub r: Vector4<f64>,
    pub f0: Matrix4<f64>,
    pub f1: Matrix4<f64>,
    pub omega0: f64,
    pub grad_omega0: Vector4<f64>,
    pub pperp: Matrix4<f64>,
    pub ppar: Matrix4<f64>,
    /// `(e₀, e₁, e₂, e₃)`; `(e₀, e₃)` spans `ker F₀`.
    pub tetrad: [Vector4<f64>; 4],
}

impl FaradayModel {
    pub fn new(kind: FaradayKind, domain: Box3) -> Self {
        FaradayModel { kind, f1: None, domain }
    }

    pub fn uniform_magnetic(b0: f64) -> Self {
        Self::new(FaradayKind::UniformMagnetic { b0 }, Box3::cube(1e6))
    }

    pub fn crossed_fields(e: [f64; 3], b: [f64; 3]) -> Self {
        Self::new(FaradayKind::CrossedFields { e, b }, Box3::cube(1e6))
    }

    pub fn gradient_magnetic(b0: f64, length: f64) -> Self {
        let domain = FieldModel3D::linear_gradient(b0, length).domain;
        Self::new(FaradayKind::GradientMagnetic { b0, length }, domain)
    }

    pub fn static_magnetic(model: FieldModel3D) -> Self {
        Self::new(FaradayKind::StaticMagnetic { field: model.kind }, model.domain)
    }

    pub fn with_f1(mut self, e: [f64; 3], b: [f64; 3]) -> Self {
        self.f1 = Some(UniformEb { e, b });
        self
    }

    fn leading_fields(&self, x: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        // (E₀, B₀, ∇|B₀|) for the static models.
        let magnetic = |kind: FieldKind| {
            let model = FieldModel3D::new(kind, self.domain);
            let (b, jac) = model.field_and_jacobian(x);
            let bmag = b.norm();
            let grad = if bmag > 0.0 { jac.transpose() * (b / bmag) } else { Vector3::zeros() };
            (Vector3::zeros(), b, grad)
        };
        match self.kind {
            FaradayKind::UniformMagnetic { b0 } => (Vector3::zeros(), Vector3::new(0.0, 0.0, b0), Vector3::zeros()),
            FaradayKind::CrossedFields { e, b } => (Vector3::from(e), Vector3::from(b), Vector3::zeros()),
            FaradayKind::GradientMagnetic { b0, length } => magnetic(FieldKind::LinearGradient { b0, length }),
            FaradayKind::StaticMagnetic { field } => magnetic(field),
        }
    }

    pub fn check_domain(&self, r: &Vector4<f64>) -> Result<()> {
        let x = Vector3::new(r[1], r[2], r[3]);
        if self.domain.contains(&x) && r.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::DomainExit {
                point: r.as_slice().to_vec(),
            })
        }
    }

    /// `F₀`, `F₁`, `ω₀` and `∇ω₀` at the event `r`, enforcing the
    /// magnetization assumption.
    pub fn tensors(&self, r: &Vector4<f64>) -> Result<FaradayTensors> {
        self.check_domain(r)?;
        let x = Vector3::new(r[1], r[2], r[3]);
        let (e0, b0, grad_b) = self.leading_fields(&x);
        let f0 = faraday_from_eb(&e0, &b0);
        let (s_eb, s_bb_ee) = lorentz_scalars(&f0)?;
        if s_eb.abs() > 1e-10 || s_bb_ee <= 0.0 {
            return Err(Error::MagnetizationViolation {
                e_dot_b: s_eb,
                b2_minus_e2: s_bb_ee,
            });
        }
        let omega0 = s_bb_ee.sqrt();
        // Static models with E₀ = 0 have ω₀ = |B₀|; uniform ones have ∇ω₀ = 0.
        let grad_omega0 = Vector4::new(0.0, grad_b[0], grad_b[1], grad_b[2]);
        let f1 = self
            .f1
            .map(|eb| faraday_from_eb(&Vector3::from(eb.e), &Vector3::from(eb.b)))
            .unwrap_or_else(Matrix4::zeros);
        Ok(FaradayTensors {
            f0,
            f1,
            omega0,
            grad_omega0,
        })
    }

    pub fn omega0(&self, r: &Vector4<f64>) -> Result<f64> {
        Ok(self.tensors(r)?.omega0)
    }

    /// Central-difference `η⁻¹ ∂ω₀`, the fallback when no closed form is known.
    pub fn grad_omega0_fd(&self, r: &Vector4<f64>, h: f64) -> Result<Vector4<f64>> {
        let mut g = Vector4::zeros();
        for mu in 0..4 {
            let mut p = *r;
            let mut m = *r;
            p[mu] += h;
            m[mu] -= h;
            g[mu] = (self.omega0(&p)? - self.omega0(&m)?) / (2.0 * h);
        }
        g[0] = -g[0];
        Ok(g)
    }
}

/// `(E·B, |B|² − |E|²)` of a mixed Faraday tensor.
pub fn lorentz_scalars(f: &Matrix4<f64>) -> Result<(f64, f64)> {
    let lowered = eta() * f;
    let asym = (lowered + lowered.transpose()).norm();
    if asym > 1e-10 * f.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "eta*F is not antisymmetric (|sym part| = {asym:e})"
        )));
    }
    let s_bb_ee = -(f * f).trace() / 2.0;
    let e = Vector3::new(f[(1, 0)], f[(2, 0)], f[(3, 0)]);
    let b = Vector3::new(f[(2, 3)], f[(3, 1)], f[(1, 2)]);
    Ok((e.dot(&b), s_bb_ee))
}

/// Minkowski-orthonormal tetrad adapted to `ker F₀`: `e₀` is the normalized
/// projection of the lab time axis into the kernel, `e₁` the projection of a
/// reference spatial axis into `K⊥`, `e₂ = −F₀e₁/ω₀`, and `e₃` completes a
/// positively oriented frame.
pub fn build_tetrad(f0: &Matrix4<f64>, omega0: f64) -> Result<[Vector4<f64>; 4]> {
    let svd = f0.svd(false, false);
    let smax = svd.singular_values.max().max(1.0);
    let kernel_dim = svd.singular_values.iter().filter(|s| **s <= 1e-8 * smax).count();
    if kernel_dim != 2 {
        return Err(Error::DegenerateKernel { dimension: kernel_dim });
    }
    if !(omega0 > 0.0) {
        return Err(Error::InvalidArgument(format!("omega0 must be positive, got {omega0}")));
    }
    let pperp = -(f0 * f0) / (omega0 * omega0);
    let ppar = Matrix4::identity() - pperp;

    let t_hat = Vector4::new(1.0, 0.0, 0.0, 0.0);
    let w = ppar * t_hat;
    let e0 = w / (-mink(&w, &w)).sqrt();

    let mut e3 = Vector4::zeros();
    let mut best = -1.0;
    for k in 1..4 {
        let c = ppar * Vector4::ith(k, 1.0);
        let c = c + e0 * mink(&e0, &c);
        let n2 = mink(&c, &c);
        if n2 > best {
            best = n2;
            e3 = c;
        }
    }
    if best <= 1e-24 {
        return Err(Error::DegenerateKernel { dimension: 1 });
    }
    e3 /= best.sqrt();

    let mut a = pperp * Vector4::new(0.0, 1.0, 0.0, 0.0);
    if mink(&a, &a) < 1e-2 {
        a = pperp * Vector4::new(0.0, 0.0, 1.0, 0.0);
    }
    let e1 = a / mink(&a, &a).sqrt();
    let e2 = -(f0 * e1) / omega0;

    let frame = Matrix4::from_columns(&[e0, e1, e2, e3]);
    if frame.determinant() < 0.0 {
        e3 = -e3;
    }
    Ok([e0, e1, e2, e3])
}

/// Full field sample with projectors and tetrad.
pub fn eval_faraday(model: &FaradayModel, r: &Vector4<f64>) -> Result<FaradayPoint> {
    let t = model.tensors(r)?;
    let pperp = -(t.f0 * t.f0) / (t.omega0 * t.omega0);
    let ppar = Matrix4::identity() - pperp;
    let tetrad = build_tetrad(&t.f0, t.omega0)?;
    Ok(FaradayPoint {
        r: *r,
        f0: t.f0,
        f1: t.f1,
        omega0: t.omega0,
        grad_omega0: t.grad_omega0,
        pperp,
        ppar,
        tetrad,
    })
}
