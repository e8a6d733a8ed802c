//! Analytic magnetic field models in three dimensions and the derived
//! geometry entering the Pauli equations of motion.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::central_jacobian;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Box3 {
    pub fn cube(half_width: f64) -> Self {
        Box3 {
            lo: [-half_width; 3],
            hi: [half_width; 3],
        }
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        (0..3).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }
}

/// Closed-form field families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    /// `B = B₀ d̂`.
    Uniform {
        b0: f64,
        #[serde(default = "z_hat")]
        direction: [f64; 3],
    },
    /// `B = B₀ (1 + x₁/L) ẑ`.
    LinearGradient { b0: f64, length: f64 },
    /// `B = B₀ (−x₁x₃/L², −x₂x₃/L², 1 + x₃²/L²)`, divergence free.
    #[serde(rename = "magnetic-mirror", alias = "mirror")]
    Mirror { b0: f64, length: f64 },
    /// `B = B₀ (−s x₂/L, s x₁/L, 1)`: helical field lines with pitch set by `twist`.
    ScrewPinch { b0: f64, length: f64, twist: f64 },
}

fn z_hat() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldModel3D {
    #[serde(flatten)]
    pub kind: FieldKind,
    pub domain: Box3,
}

/// A field sample with every derived quantity the equations of motion need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub x: Vector3<f64>,
    pub b_field: Vector3<f64>,
    pub bmag: f64,
    pub b: Vector3<f64>,
    pub grad_bmag: Vector3<f64>,
    /// Entry `(i, j)` is `∂_j b_i`.
    pub gradb: Matrix3<f64>,
    /// Field-line curvature `(b·∇) b`.
    pub kappa: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    /// `R_j = (∂_j e₂)·e₁`.
    pub gyrogauge: Vector3<f64>,
    pub omega_c: f64,
}

impl FieldModel3D {
    pub fn new(kind: FieldKind, domain: Box3) -> Self {
        FieldModel3D { kind, domain }
    }

    pub fn uniform(b0: f64) -> Self {
        Self::new(
            FieldKind::Uniform {
                b0,
                direction: z_hat(),
            },
            Box3::cube(1e6),
        )
    }

    pub fn linear_gradient(b0: f64, length: f64) -> Self {
        // |B| vanishes at x₁ = −L.
        let mut domain = Box3::cube(0.9 * length);
        domain.hi[0] = 10.0 * length;
        domain.lo[1] = -1e6;
        domain.hi[1] = 1e6;
        domain.lo[2] = -1e6;
        domain.hi[2] = 1e6;
        Self::new(FieldKind::LinearGradient { b0, length }, domain)
    }

    pub fn mirror(b0: f64, length: f64) -> Self {
        Self::new(FieldKind::Mirror { b0, length }, Box3::cube(2.0 * length))
    }

    pub fn screw_pinch(b0: f64, length: f64, twist: f64) -> Self {
        Self::new(FieldKind::ScrewPinch { b0, length, twist }, Box3::cube(2.0 * length))
    }

    /// `B(x)` and its Jacobian `∂_j B_i`, without domain checks.
    pub fn field_and_jacobian(&self, x: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        match self.kind {
            FieldKind::Uniform { b0, direction } => {
                let d = Vector3::from(direction);
                let d = d / d.norm();
                (d * b0, Matrix3::zeros())
            }
            FieldKind::LinearGradient { b0, length } => {
                let b = Vector3::new(0.0, 0.0, b0 * (1.0 + x[0] / length));
                let mut jac = Matrix3::zeros();
                jac[(2, 0)] = b0 / length;
                (b, jac)
            }
            FieldKind::Mirror { b0, length } => {
                let l2 = length * length;
                let (x1, x2, x3) = (x[0], x[1], x[2]);
                let b = Vector3::new(-x1 * x3 / l2, -x2 * x3 / l2, 1.0 + x3 * x3 / l2) * b0;
                let jac = Matrix3::new(
                    -x3 / l2,
                    0.0,
                    -x1 / l2,
                    0.0,
                    -x3 / l2,
                    -x2 / l2,
                    0.0,
                    0.0,
                    2.0 * x3 / l2,
                ) * b0;
                (b, jac)
            }
            FieldKind::ScrewPinch { b0, length, twist } => {
                let s = twist / length;
                let b = Vector3::new(-s * x[1], s * x[0], 1.0) * b0;
                let jac = Matrix3::new(0.0, -s, 0.0, s, 0.0, 0.0, 0.0, 0.0, 0.0) * b0;
                (b, jac)
            }
        }
    }

    pub fn check_domain(&self, x: &Vector3<f64>) -> Result<()> {
        if self.domain.contains(x) && x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::DomainExit {
                point: x.as_slice().to_vec(),
            })
        }
    }

    /// Unit vector `b(x)` with domain and degeneracy checks.
    pub fn unit_b(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.check_domain(x)?;
        let (bf, _) = self.field_and_jacobian(x);
        let bmag = bf.norm();
        if bmag < 1e-12 {
            return Err(Error::DegenerateField {
                point: x.as_slice().to_vec(),
                magnitude: bmag,
            });
        }
        Ok(bf / bmag)
    }

    /// Finite-difference divergence `∇·B`.
    pub fn divergence_fd(&self, x: &Vector3<f64>, h: f64) -> f64 {
        (0..3)
            .map(|j| {
                let mut p = *x;
                let mut m = *x;
                p[j] += h;
                m[j] -= h;
                (self.field_and_jacobian(&p).0[j] - self.field_and_jacobian(&m).0[j]) / (2.0 * h)
            })
            .sum()
    }
}

/// Axis projected out of `b` to seed the frame: `ẑ`, or `x̂` near the poles.
pub fn reference_axis(b: &Vector3<f64>) -> Vector3<f64> {
    let z = Vector3::z();
    if b.cross(&z).norm() < 0.1 {
        Vector3::x()
    } else {
        z
    }
}

/// Right-handed orthonormal `(e₁, e₂)` with `e₁ × e₂ = b`, built by projecting a
/// fixed reference axis out of `b`.
pub fn make_frame(b: &Vector3<f64>) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if (b.norm() - 1.0).abs() > 1e-9 || !b.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(format!("frame needs a unit vector, |b| = {}", b.norm())));
    }
    Ok(frame_with_axis(b, &reference_axis(b)))
}

/// Frame seeded by an explicit axis `a` (not parallel to `b`).
pub fn frame_with_axis(b: &Vector3<f64>, a: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let w = a - b * a.dot(b);
    let e1 = w / w.norm();
    (e1, b.cross(&e1))
}

/// Jacobians `(∂_j e₁_i, ∂_j e₂_i)` of the frame seeded by the fixed axis `a`,
/// given `b` and `∇b`.
pub fn frame_jacobians(b: &Vector3<f64>, gradb: &Matrix3<f64>, a: &Vector3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let w = a - b * a.dot(b);
    let wn = w.norm();
    let e1 = w / wn;
    let dw = -(b * (gradb.transpose() * a).transpose()) - gradb * a.dot(b);
    let de1 = (Matrix3::identity() - e1 * e1.transpose()) * dw / wn;
    let mut de2 = Matrix3::zeros();
    for j in 0..3 {
        let col = gradb.column(j).into_owned().cross(&e1) + b.cross(&de1.column(j).into_owned());
        de2.set_column(j, &col);
    }
    (de1, de2)
}

/// Evaluate the model and all derived geometry at `x`. `q_over_m` sets the
/// gyrofrequency `ω_c = (q/m)|B|`.
pub fn eval_field(model: &FieldModel3D, x: &Vector3<f64>, q_over_m: f64) -> Result<FieldPoint> {
    model.check_domain(x)?;
    let (bf, jac) = model.field_and_jacobian(x);
    let bmag = bf.norm();
    if bmag < 1e-12 {
        return Err(Error::DegenerateField {
            point: x.as_slice().to_vec(),
            magnitude: bmag,
        });
    }
    let b = bf / bmag;
    let grad_bmag = jac.transpose() * b;
    let gradb = (jac - b * grad_bmag.transpose()) / bmag;
    let kappa = gradb * b;
    let (e1, e2) = make_frame(&b)?;
    let a = reference_axis(&b);
    let w = a - b * a.dot(&b);
    let gyrogauge = gradb.transpose() * e2 * (a.dot(&b) / w.norm());
    Ok(FieldPoint {
        x: *x,
        b_field: bf,
        bmag,
        b,
        grad_bmag,
        gradb,
        kappa,
        e1,
        e2,
        gyrogauge,
        omega_c: q_over_m * bmag,
    })
}

fn relative_deviation(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Largest relative deviation between the closed-form derivatives
/// (`∇|B|`, `∇b`, gyrogauge) and central differences over `points`.
pub fn check_gradients(model: &FieldModel3D, points: &[Vector3<f64>], h: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for x in points {
        let fp = eval_field(model, x, 1.0)?;
        let bmag_fd = central_jacobian(
            |p| Ok(vec![model.field_and_jacobian(&Vector3::from_column_slice(p)).0.norm()]),
            x.as_slice(),
            h,
        )?;
        let b_fd = central_jacobian(
            |p| Ok(model.unit_b(&Vector3::from_column_slice(p))?.as_slice().to_vec()),
            x.as_slice(),
            h,
        )?;
        // The frame is only differentiable away from the reference-axis switch,
        // so difference it with the reference axis frozen at x.
        let a = reference_axis(&fp.b);
        let e2_fd = central_jacobian(
            |p| {
                let b = model.unit_b(&Vector3::from_column_slice(p))?;
                let w = a - b * a.dot(&b);
                let e1 = w / w.norm();
                Ok(b.cross(&e1).as_slice().to_vec())
            },
            x.as_slice(),
            h,
        )?;
        let gyro_fd: Vec<f64> = (0..3)
            .map(|j| (0..3).map(|i| e2_fd[(i, j)] * fp.e1[i]).sum())
            .collect();

        worst = worst
            .max(relative_deviation(fp.grad_bmag.as_slice(), bmag_fd.as_slice()))
            .max(relative_deviation(fp.gradb.as_slice(), b_fd.as_slice()))
            .max(relative_deviation(fp.gyrogauge.as_slice(), &gyro_fd));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(model: &FieldModel3D, n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = model.domain;
        (0..n)
            .map(|_| {
                Vector3::from_fn(|i, _| {
                    let lo = d.lo[i].max(-1.5);
                    let hi = d.hi[i].min(1.5);
                    rng.gen_range(lo..hi)
                })
            })
            .collect()
    }

    fn assert_point_invariants(fp: &FieldPoint) {
        assert!((fp.b.norm() - 1.0).abs() < 1e-12);
        assert!((fp.gradb.transpose() * fp.b).norm() < 1e-10);
        assert!(fp.b.dot(&fp.kappa).abs() < 1e-10);
        assert!((fp.e1.cross(&fp.e2) - fp.b).norm() < 1e-12);
        assert!(fp.e1.dot(&fp.b).abs() < 1e-12 && fp.e2.dot(&fp.b).abs() < 1e-12);
        assert!((fp.e1.norm() - 1.0).abs() < 1e-12 && (fp.e2.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_jacobians_match_gyrogauge_and_differences() {
        let model = FieldModel3D::screw_pinch(1.0, 1.0, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let x = Vector3::from_fn(|_, _| rng.gen_range(-0.8..0.8));
            let fp = eval_field(&model, &x, 1.0).unwrap();
            let a = reference_axis(&fp.b);
            let (de1, de2) = frame_jacobians(&fp.b, &fp.gradb, &a);
            assert!((de2.transpose() * fp.e1 - fp.gyrogauge).norm() < 1e-12);
            let fd = |k: usize| {
                central_jacobian(
                    |p| {
                        let b = model.unit_b(&Vector3::from_column_slice(p))?;
                        let (e1, e2) = frame_with_axis(&b, &a);
                        Ok(if k == 1 { e1 } else { e2 }.as_slice().to_vec())
                    },
                    x.as_slice(),
                    1e-5,
                )
                .unwrap()
            };
            let (f1, f2) = (fd(1), fd(2));
            for i in 0..3 {
                for j in 0..3 {
                    assert!((de1[(i, j)] - f1[(i, j)]).abs() < 1e-8);
                    assert!((de2[(i, j)] - f2[(i, j)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn uniform_field_has_no_geometry() {
        let fp = eval_field(&FieldModel3D::uniform(1.0), &Vector3::new(3.0, -1.0, 2.0), 1.0).unwrap();
        assert_eq!(fp.b, Vector3::z());
        assert_eq!(fp.grad_bmag, Vector3::zeros());
        assert_eq!(fp.gradb, Matrix3::zeros());
        assert_eq!(fp.kappa, Vector3::zeros());
        assert_eq!(fp.omega_c, 1.0);
    }

    #[test]
    fn linear_gradient_at_origin() {
        let fp = eval_field(&FieldModel3D::linear_gradient(1.0, 2.0), &Vector3::zeros(), 1.0).unwrap();
        assert!((fp.grad_bmag - Vector3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(fp.kappa, Vector3::zeros());
    }

    #[test]
    fn invariants_hold_for_every_model() {
        for model in [
            FieldModel3D::uniform(2.0),
            FieldModel3D::linear_gradient(1.0, 2.0),
            FieldModel3D::mirror(1.0, 1.0),
            FieldModel3D::screw_pinch(1.0, 1.0, 0.7),
        ] {
            for x in random_points(&model, 40, 5) {
                let fp = eval_field(&model, &x, 1.0).unwrap();
                assert_point_invariants(&fp);
                assert_eq!(fp.omega_c, fp.bmag);
            }
        }
    }

    #[test]
    fn mirror_and_pinch_are_divergence_free() {
        for model in [FieldModel3D::mirror(1.3, 0.8), FieldModel3D::screw_pinch(1.0, 1.0, 0.5)] {
            for x in random_points(&model, 50, 9) {
                assert!(model.divergence_fd(&x, 1e-5).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn frame_reference_cases() {
        let (e1, e2) = make_frame(&Vector3::z()).unwrap();
        assert_eq!(e1, Vector3::x());
        assert_eq!(e2, Vector3::y());
        let b = Vector3::x();
        let (e1, e2) = make_frame(&b).unwrap();
        assert!(e1.dot(&b).abs() < 1e-12 && e2.dot(&b).abs() < 1e-12);
        assert!((e1.cross(&e2) - b).norm() < 1e-12);
        assert!(matches!(make_frame(&Vector3::new(1.0, 1.0, 0.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn random_frames_are_orthonormal_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let b = v / v.norm();
            let (e1, e2) = make_frame(&b).unwrap();
            assert!((e1.cross(&e2) - b).norm() < 1e-12);
            assert!((e1.norm() - 1.0).abs() < 1e-12 && e1.dot(&e2).abs() < 1e-12);
            let (f1, f2) = make_frame(&b).unwrap();
            assert_eq!((e1, e2), (f1, f2));
        }
    }

    #[test]
    fn gradient_checks() {
        let uniform = FieldModel3D::uniform(1.0);
        assert_eq!(check_gradients(&uniform, &random_points(&uniform, 5, 1), 1e-5).unwrap(), 0.0);
        let lin = FieldModel3D::linear_gradient(1.0, 2.0);
        assert!(check_gradients(&lin, &random_points(&lin, 10, 2), 1e-5).unwrap() < 1e-8);
        let mirror = FieldModel3D::mirror(1.0, 1.0);
        assert!(check_gradients(&mirror, &random_points(&mirror, 50, 3), 1e-5).unwrap() < 1e-6);
        let pinch = FieldModel3D::screw_pinch(1.0, 1.0, 0.7);
        assert!(check_gradients(&pinch, &random_points(&pinch, 50, 4), 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn gauge_rotation_only_rotates_perpendicular_coordinates() {
        let model = FieldModel3D::mirror(1.0, 1.0);
        let fp = eval_field(&model, &Vector3::new(0.3, -0.2, 0.5), 1.0).unwrap();
        let phi = 0.9_f64;
        let f1 = fp.e1 * phi.cos() + fp.e2 * phi.sin();
        let f2 = -fp.e1 * phi.sin() + fp.e2 * phi.cos();
        assert!((f1.cross(&f2) - fp.b).norm() < 1e-12);
        let v = Vector3::new(0.4, -1.1, 0.25);
        let (v1, v2) = (v.dot(&fp.e1), v.dot(&fp.e2));
        let (w1, w2) = (v.dot(&f1), v.dot(&f2));
        assert!((w1 - (v1 * phi.cos() + v2 * phi.sin())).abs() < 1e-12);
        assert!((w2 - (-v1 * phi.sin() + v2 * phi.cos())).abs() < 1e-12);
        assert!(((v1 * v1 + v2 * v2) - (w1 * w1 + w2 * w2)).abs() < 1e-12);
    }

    #[test]
    fn domain_and_degeneracy_errors() {
        let mirror = FieldModel3D::mirror(1.0, 1.0);
        assert!(matches!(
            eval_field(&mirror, &Vector3::new(5.0, 0.0, 0.0), 1.0),
            Err(Error::DomainExit { .. })
        ));
        let mut lin = FieldModel3D::linear_gradient(1.0, 1.0);
        lin.domain = Box3::cube(5.0);
        assert!(matches!(
            eval_field(&lin, &Vector3::new(-1.0, 0.0, 0.0), 1.0),
            Err(Error::DegenerateField { .. })
        ));
    }
}
