//! Structure identities sampled at seeded points.

use nalgebra::{DMatrix, DVector, Matrix4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SystemKind};
use crate::adiabatic::{min_eigen_check, normal_hessian};
use crate::error::Result;
use crate::fields3d::{check_gradients, eval_field, Box3};
use crate::numcore::sym_eig;
use crate::spacetime::{eta, eval_faraday, lorentz_scalars, mink};
use crate::systems::{u1_classical, u1_relativistic, u1_symplectic, Dynamics, PhaseState2N, PhaseState3D, PhaseState4D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst deviation over the sample, or the smallest eigenvalue for sign checks.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub command: String,
    pub system: SystemKind,
    pub model: String,
    pub seed: u64,
    pub points: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

struct Checks(Vec<CheckResult>);

impl Checks {
    /// Deviation check: passes when `value < tol`.
    fn below(&mut self, name: &str, tol: f64, value: Result<f64>) {
        self.push(name, tol, value, |v| v < tol);
    }

    /// Sign check: passes when every sampled minimum eigenvalue exceeds `tol`.
    fn above(&mut self, name: &str, tol: f64, value: Result<f64>) {
        self.push(name, tol, value, |v| v > tol);
    }

    fn push(&mut self, name: &str, tol: f64, value: Result<f64>, ok: impl Fn(f64) -> bool) {
        let r = match value {
            Ok(v) => CheckResult {
                name: name.into(),
                value: Some(v),
                tolerance: tol,
                passed: v.is_finite() && ok(v),
                detail: None,
            },
            Err(e) => CheckResult {
                name: name.into(),
                value: None,
                tolerance: tol,
                passed: false,
                detail: Some(e.to_string()),
            },
        };
        self.0.push(r);
    }
}

fn worst<T>(items: &[T], f: impl Fn(&T) -> Result<f64>) -> Result<f64> {
    items.iter().try_fold(0.0_f64, |acc, x| Ok(acc.max(f(x)?)))
}

fn least<T>(items: &[T], f: impl Fn(&T) -> Result<f64>) -> Result<f64> {
    items.iter().try_fold(f64::INFINITY, |acc, x| Ok(acc.min(f(x)?)))
}

/// Sample box: the model domain clipped to `[-1, 1]³` and shrunk by 10%.
fn sample_box(domain: &Box3) -> Box3 {
    let mut b = *domain;
    for i in 0..3 {
        let lo = b.lo[i].max(-1.0);
        let hi = b.hi[i].min(1.0);
        let pad = 0.05 * (hi - lo);
        b.lo[i] = lo + pad;
        b.hi[i] = hi - pad;
    }
    b
}

fn points_in(rng: &mut ChaCha8Rng, b: &Box3, n: usize) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| Vector3::from_fn(|i, _| rng.gen_range(b.lo[i]..b.hi[i])))
        .collect()
}

fn angles(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0))
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

const TAU: f64 = 2.0 * std::f64::consts::PI;

pub fn cmd_check(cfg: &RunConfig) -> CheckReport {
    let eps = cfg.single_epsilon();
    let dynamics = cfg.dynamics(eps);
    let n = cfg.check_points.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut c = Checks(Vec::new());
    match &dynamics {
        Dynamics::ClassicalPauli { model, params } => {
            let pts = points_in(&mut rng, &sample_box(&model.domain), n);
            let qm = params.q_over_m();
            c.below("field_gradients", 1e-6, check_gradients(model, &pts, 1e-5));
            c.below("divergence_free", 1e-6, Ok(pts.iter().map(|x| model.divergence_fd(x, 1e-5).abs()).fold(0.0, f64::max)));
            c.below("unit_b", 1e-10, worst(&pts, |x| Ok((eval_field(model, x, qm)?.b.norm() - 1.0).abs())));
            c.below("gradb_transverse", 1e-10, worst(&pts, |x| {
                let fp = eval_field(model, x, qm)?;
                Ok((fp.gradb.transpose() * fp.b).amax())
            }));
            c.below("frame_orthonormal", 1e-10, worst(&pts, |x| {
                let fp = eval_field(model, x, qm)?;
                let devs = [
                    fp.e1.norm() - 1.0,
                    fp.e2.norm() - 1.0,
                    fp.e1.dot(&fp.e2),
                    fp.e1.dot(&fp.b),
                    fp.e2.dot(&fp.b),
                    (fp.e1.cross(&fp.e2) - fp.b).amax(),
                ];
                Ok(devs.iter().fold(0.0_f64, |a, d| a.max(d.abs())))
            }));
            let states: Vec<(PhaseState3D, f64, f64)> = pts
                .iter()
                .map(|x| {
                    let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                    let (a, b) = angles(&mut rng);
                    (PhaseState3D { x: *x, v }, a, b)
                })
                .collect();
            c.below("u1_periodicity", 1e-10, worst(&states, |(s, _, _)| {
                Ok((u1_classical(TAU, s, model)?.v - s.v).amax().max((u1_classical(0.0, s, model)?.v - s.v).amax()))
            }));
            c.below("u1_group_law", 1e-10, worst(&states, |(s, a, b)| {
                let lhs = u1_classical(*a, &u1_classical(*b, s, model)?, model)?;
                Ok((lhs.v - u1_classical(a + b, s, model)?.v).amax())
            }));
            let slows: Vec<Vec<f64>> = states.iter().map(|(s, _, _)| vec![s.x[0], s.x[1], s.x[2], s.v[2]]).collect();
            c.below("hessian_equals_m_over_omega", 1e-6, worst(&slows, |slow| {
                let h = normal_hessian(&dynamics, slow, None)?;
                let fp = eval_field(model, &Vector3::from_column_slice(&slow[..3]), qm)?;
                let expected = DMatrix::<f64>::identity(2, 2) * (params.m / fp.omega_c);
                Ok(max_abs(&(h - expected)))
            }));
            c.above("hessian_positive_definite", 0.0, least(&slows, |slow| hessian_sign(&dynamics, slow)));
        }
        Dynamics::RelativisticPauli { model, params } => {
            let b = sample_box(&model.domain);
            let events: Vec<Vector4<f64>> = points_in(&mut rng, &b, n)
                .into_iter()
                .map(|x| Vector4::new(rng.gen_range(-1.0..1.0), x[0], x[1], x[2]))
                .collect();
            c.below("magnetization", 1e-10, worst(&events, |r| {
                let t = model.tensors(r)?;
                let (edotb, _) = lorentz_scalars(&t.f0)?;
                Ok(edotb.abs())
            }));
            c.below("grad_omega0", 1e-6, worst(&events, |r| {
                let t = model.tensors(r)?;
                let fd = model.grad_omega0_fd(r, 1e-5)?;
                Ok((t.grad_omega0 - fd).amax() / t.grad_omega0.amax().max(1.0))
            }));
            c.below("projectors", 1e-10, worst(&events, |r| {
                let fp = eval_faraday(model, r)?;
                let a = (fp.pperp * fp.pperp - fp.pperp).amax();
                let b = (fp.pperp + fp.ppar - Matrix4::identity()).amax();
                let c = (fp.f0 * fp.ppar).amax();
                Ok(a.max(b).max(c))
            }));
            c.below("tetrad_orthonormal", 1e-10, worst(&events, |r| {
                let fp = eval_faraday(model, r)?;
                let g = eta();
                let mut dev = 0.0_f64;
                for i in 0..4 {
                    for j in 0..4 {
                        dev = dev.max((mink(&fp.tetrad[i], &fp.tetrad[j]) - g[(i, j)]).abs());
                    }
                }
                Ok(dev)
            }));
            let states: Vec<(PhaseState4D, f64, f64)> = events
                .iter()
                .map(|r| {
                    let v = Vector4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                    let (a, b) = angles(&mut rng);
                    (PhaseState4D { r: *r, v }, a, b)
                })
                .collect();
            c.below("u1_periodicity", 1e-10, worst(&states, |(s, _, _)| {
                let full = u1_relativistic(TAU, s, params, model)?.v - s.v;
                let zero = u1_relativistic(0.0, s, params, model)?.v - s.v;
                Ok(full.amax().max(zero.amax()))
            }));
            c.below("u1_group_law", 1e-10, worst(&states, |(s, a, b)| {
                let lhs = u1_relativistic(*a, &u1_relativistic(*b, s, params, model)?, params, model)?;
                Ok((lhs.v - u1_relativistic(a + b, s, params, model)?.v).amax())
            }));
            let slows: Vec<Vec<f64>> = states
                .iter()
                .map(|(s, _, _)| {
                    let v3 = s.v[3];
                    vec![s.r[0], s.r[1], s.r[2], s.r[3], (1.0 + v3 * v3).sqrt(), v3]
                })
                .collect();
            c.above("hessian_positive_definite", 0.0, least(&slows, |slow| hessian_sign(&dynamics, slow)));
        }
        Dynamics::SymplecticLorentz { setup, .. } => {
            let dim = setup.dim();
            let zs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            c.below("setup_valid", 1e-10, setup.validate().map(|_| 0.0));
            let id = DMatrix::<f64>::identity(dim, dim);
            c.below("j_squared_minus_identity", 1e-10, worst(&zs, |z| {
                let j = setup.structure(z)?.j;
                Ok(max_abs(&(&j * &j + &id)))
            }));
            c.above("g_positive_definite", 0.0, least(&zs, |z| {
                let g = setup.structure(z)?.g;
                Ok(sym_eig(&((&g + g.transpose()) * 0.5))?.min_eigenvalue())
            }));
            c.below("g_compatible", 1e-10, worst(&zs, |z| {
                let st = setup.structure(z)?;
                let asym = max_abs(&(&st.g - st.g.transpose()));
                Ok(max_abs(&(&st.g - setup.beta() * &st.j)).max(asym))
            }));
            let states: Vec<(PhaseState2N, f64, f64)> = zs
                .iter()
                .map(|z| {
                    let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
                    let (a, b) = angles(&mut rng);
                    (PhaseState2N { z: DVector::from_column_slice(z), v }, a, b)
                })
                .collect();
            c.below("u1_periodicity", 1e-10, worst(&states, |(s, _, _)| {
                let full = u1_symplectic(TAU, s, setup)?.v - &s.v;
                let zero = u1_symplectic(0.0, s, setup)?.v - &s.v;
                Ok(full.amax().max(zero.amax()))
            }));
            c.below("u1_group_law", 1e-10, worst(&states, |(s, a, b)| {
                let lhs = u1_symplectic(*a, &u1_symplectic(*b, s, setup)?, setup)?;
                Ok((lhs.v - u1_symplectic(a + b, s, setup)?.v).amax())
            }));
            c.below("hessian_equals_g", 1e-6, worst(&zs, |z| {
                let h = normal_hessian(&dynamics, z, None)?;
                Ok(max_abs(&(h - setup.structure(z)?.g)))
            }));
            c.above("hessian_positive_definite", 0.0, least(&zs, |z| hessian_sign(&dynamics, z)));
        }
        Dynamics::GuidingCenter { .. } => unreachable!("configs never select the guiding-center system"),
    }
    let passed = c.0.iter().all(|r| r.passed);
    CheckReport {
        command: "check".into(),
        system: cfg.system,
        model: cfg.model_label(),
        seed: cfg.seed,
        points: n,
        checks: c.0,
        passed,
    }
}

/// Smallest Hessian eigenvalue, or zero if it fails the relative positivity test.
fn hessian_sign(dynamics: &Dynamics, slow: &[f64]) -> Result<f64> {
    let h = normal_hessian(dynamics, slow, None)?;
    let (lmin, positive) = min_eigen_check(&h)?;
    Ok(if positive { lmin } else { lmin.min(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    #[test]
    fn mirror_checks_pass() {
        let r = cmd_check(&cfg(r#"{
            "system": "classical-pauli",
            "field": {"kind": "magnetic-mirror", "b0": 1.0, "length": 1.0,
                      "domain": {"lo": [-2, -2, -2], "hi": [2, 2, 2]}},
            "slow": [0.4, 0.2, 0.1, 0.5], "check_points": 20
        }"#));
        assert!(r.passed, "{:#?}", r.checks);
    }

    #[test]
    fn relativistic_and_symplectic_checks_pass() {
        let r = cmd_check(&cfg(r#"{
            "system": "relativistic-pauli",
            "faraday": {"kind": "crossed-fields", "e": [0.0, 0.3, 0.0], "b": [0.0, 0.0, 1.0],
                        "domain": {"lo": [-5, -5, -5], "hi": [5, 5, 5]}},
            "slow": [0, 0, 0, 0, 0.3], "check_points": 10
        }"#));
        assert!(r.passed, "{:#?}", r.checks);
        let r = cmd_check(&cfg(r#"{
            "system": "symplectic-lorentz",
            "setup": {"dof": 2, "hamiltonian": {"kind": "oscillator"}, "metric": {"kind": "sine-diagonal", "amplitude": 0.3}},
            "slow": [0.1, 0.2, 0.3, 0.4], "check_points": 10
        }"#));
        assert!(r.passed, "{:#?}", r.checks);
    }

    #[test]
    fn violations_are_reported() {
        let r = cmd_check(&cfg(r#"{
            "system": "relativistic-pauli",
            "faraday": {"kind": "crossed-fields", "e": [0.0, 2.0, 0.0], "b": [0.0, 0.0, 1.0],
                        "domain": {"lo": [-5, -5, -5], "hi": [5, 5, 5]}},
            "slow": [0, 0, 0, 0, 0.3], "check_points": 5
        }"#));
        assert!(!r.passed);
        let bad = r.checks.iter().find(|c| c.name == "magnetization").unwrap();
        assert!(bad.detail.as_deref().unwrap().contains("magnetization"), "{bad:?}");

        let r = cmd_check(&cfg(r#"{
            "system": "symplectic-lorentz",
            "setup": {"dof": 1, "hamiltonian": {"kind": "oscillator"},
                      "metric": {"kind": "constant", "rows": [[1.0, 2.0], [2.0, 1.0]]}},
            "slow": [1.0, 0.0], "check_points": 5
        }"#));
        assert!(!r.passed);
        let bad = r.checks.iter().find(|c| c.name == "setup_valid").unwrap();
        assert!(bad.detail.as_deref().unwrap().contains("positive definite"), "{bad:?}");
    }
}
