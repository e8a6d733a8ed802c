//! Fast-slow splits of the three embeddings, closed-form slow-manifold
//! coefficients of orders 0 and 1, a Newton oracle for the invariance
//! equation, and the normal-distance diagnostic.

use nalgebra::{DMatrix, DVector, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::fields3d::{eval_field, frame_with_axis, reference_axis};
use crate::numcore::{central_jacobian, solve};
use crate::spacetime::{eval_faraday, mink};
use crate::systems::{
    classical_frame_rates, relativistic_frame_rates, rhs_symplectic_lorentz, tetrad_components, Dynamics, PhaseState2N,
    PhaseState3D, PhaseState4D,
};

/// Slow and fast coordinates of one state.
///
/// Classical: slow `(x, u)`, fast `(v¹, v²)`. Relativistic: slow `(R, V⁰, V³)`,
/// fast `(V¹, V²)`. Symplectic: slow `z`, fast `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct FastSlowSplit {
    pub slow: Vec<f64>,
    pub fast: Vec<f64>,
}

/// A system viewed as a fast-slow system. Classical frames are seeded by a
/// fixed axis so that the split is smooth on a neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub dynamics: Dynamics,
    axis: Option<Vector3<f64>>,
}

fn check_order(order: usize) -> Result<()> {
    if order > 1 {
        return Err(Error::InvalidArgument(format!("slow-manifold order must be 0 or 1, got {order}")));
    }
    Ok(())
}

impl Embedding {
    /// Embedding whose classical frame uses the default reference axis at each point.
    pub fn new(dynamics: Dynamics) -> Result<Self> {
        if let Dynamics::GuidingCenter { .. } = dynamics {
            return Err(Error::InvalidArgument("guiding-center dynamics has no fast variables".into()));
        }
        Ok(Embedding { dynamics, axis: None })
    }

    /// Embedding with the classical frame axis frozen at the slow point `slow`.
    pub fn frozen_at(dynamics: Dynamics, slow: &[f64]) -> Result<Self> {
        let mut e = Self::new(dynamics)?;
        if let Dynamics::ClassicalPauli { model, .. } = &e.dynamics {
            let b = model.unit_b(&Vector3::from_column_slice(&slow[..3]))?;
            e.axis = Some(reference_axis(&b));
        }
        Ok(e)
    }

    pub fn slow_dim(&self) -> usize {
        match &self.dynamics {
            Dynamics::ClassicalPauli { .. } => 4,
            Dynamics::RelativisticPauli { .. } => 6,
            Dynamics::SymplecticLorentz { setup, .. } => setup.dim(),
            Dynamics::GuidingCenter { .. } => unreachable!(),
        }
    }

    pub fn fast_dim(&self) -> usize {
        match &self.dynamics {
            Dynamics::SymplecticLorentz { setup, .. } => setup.dim(),
            _ => 2,
        }
    }

    fn axis_for(&self, b: &Vector3<f64>) -> Vector3<f64> {
        self.axis.unwrap_or_else(|| reference_axis(b))
    }

    pub fn split(&self, y: &[f64]) -> Result<FastSlowSplit> {
        self.dynamics.check_domain(y)?;
        match &self.dynamics {
            Dynamics::ClassicalPauli { model, .. } => {
                let s = PhaseState3D::from_flat(y);
                let b = model.unit_b(&s.x)?;
                let (e1, e2) = frame_with_axis(&b, &self.axis_for(&b));
                Ok(FastSlowSplit {
                    slow: vec![s.x[0], s.x[1], s.x[2], s.v.dot(&b)],
                    fast: vec![s.v.dot(&e1), s.v.dot(&e2)],
                })
            }
            Dynamics::RelativisticPauli { model, .. } => {
                let s = PhaseState4D::from_flat(y);
                let c = tetrad_components(&eval_faraday(model, &s.r)?, &s.v);
                Ok(FastSlowSplit {
                    slow: vec![s.r[0], s.r[1], s.r[2], s.r[3], c[0], c[3]],
                    fast: vec![c[1], c[2]],
                })
            }
            Dynamics::SymplecticLorentz { setup, .. } => {
                let n = setup.dim();
                Ok(FastSlowSplit {
                    slow: y[..n].to_vec(),
                    fast: y[n..].to_vec(),
                })
            }
            Dynamics::GuidingCenter { .. } => unreachable!(),
        }
    }

    pub fn assemble(&self, slow: &[f64], fast: &[f64]) -> Result<Vec<f64>> {
        if slow.len() != self.slow_dim() || fast.len() != self.fast_dim() {
            return Err(Error::InvalidArgument("slow/fast coordinate lengths do not match the system".into()));
        }
        match &self.dynamics {
            Dynamics::ClassicalPauli { model, .. } => {
                let x = Vector3::from_column_slice(&slow[..3]);
                let b = model.unit_b(&x)?;
                let (e1, e2) = frame_with_axis(&b, &self.axis_for(&b));
                let v = b * slow[3] + e1 * fast[0] + e2 * fast[1];
                Ok(PhaseState3D { x, v }.flat())
            }
            Dynamics::RelativisticPauli { model, .. } => {
                let r = Vector4::from_column_slice(&slow[..4]);
                let [e0, e1, e2, e3] = eval_faraday(model, &r)?.tetrad;
                let v = e0 * slow[4] + e1 * fast[0] + e2 * fast[1] + e3 * slow[5];
                Ok(PhaseState4D { r, v }.flat())
            }
            Dynamics::SymplecticLorentz { .. } => Ok(slow.iter().chain(fast).copied().collect()),
            Dynamics::GuidingCenter { .. } => unreachable!(),
        }
    }

    /// `(slow rate, fast rate)` at the state assembled from `slow`, `fast`.
    pub fn rates(&self, slow: &[f64], fast: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let y = self.assemble(slow, fast)?;
        match &self.dynamics {
            Dynamics::ClassicalPauli { model, params } => {
                let s = PhaseState3D::from_flat(&y);
                let b = model.unit_b(&s.x)?;
                let (dx, du, dv) = classical_frame_rates(&s, params, model, Some(self.axis_for(&b)))?;
                Ok((vec![dx[0], dx[1], dx[2], du], dv.to_vec()))
            }
            Dynamics::RelativisticPauli { model, params } => {
                let (dr, c) = relativistic_frame_rates(&PhaseState4D::from_flat(&y), params, model)?;
                Ok((vec![dr[0], dr[1], dr[2], dr[3], c[0], c[3]], vec![c[1], c[2]]))
            }
            Dynamics::SymplecticLorentz { setup, params } => {
                let (dz, dv) = rhs_symplectic_lorentz(&PhaseState2N::from_flat(&y), params, setup)?;
                Ok((dz.as_slice().to_vec(), dv.as_slice().to_vec()))
            }
            Dynamics::GuidingCenter { .. } => unreachable!(),
        }
    }

    /// Truncated slow manifold `y₀* + εy₁*` (order 1) or `y₀*` (order 0) in fast coordinates.
    pub fn y_star(&self, slow: &[f64], order: usize) -> Result<Vec<f64>> {
        check_order(order)?;
        if slow.len() != self.slow_dim() {
            return Err(Error::InvalidArgument("slow coordinate length does not match the system".into()));
        }
        match &self.dynamics {
            Dynamics::ClassicalPauli { model, params } => {
                let x = Vector3::from_column_slice(&slow[..3]);
                let fp = eval_field(model, &x, params.q_over_m())?;
                if order == 0 {
                    return Ok(vec![0.0, 0.0]);
                }
                let u = slow[3];
                let drive = fp.grad_bmag * params.big_m + fp.kappa * (u * u);
                let vperp = fp.b.cross(&drive) * (params.epsilon / fp.omega_c);
                let (e1, e2) = frame_with_axis(&fp.b, &self.axis_for(&fp.b));
                Ok(vec![vperp.dot(&e1), vperp.dot(&e2)])
            }
            Dynamics::RelativisticPauli { .. } => {
                if order == 0 {
                    eval_faraday_at(&self.dynamics, slow)?;
                    return Ok(vec![0.0, 0.0]);
                }
                self.relativistic_first_order(slow, -1.0)
            }
            Dynamics::SymplecticLorentz { setup, params } => {
                let v0 = |z: &[f64]| -> Result<Vec<f64>> {
                    let beta = setup.beta();
                    let v = solve(&beta, &(-setup.grad_h(z)))
                        .ok_or_else(|| Error::InvalidSetup("beta is singular".into()))?;
                    Ok(v.as_slice().to_vec())
                };
                let base = v0(slow)?;
                if order == 0 {
                    return Ok(base);
                }
                let n = slow.len();
                let h = 1e-5 * slow.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                let dv0 = central_jacobian(v0, slow, h)?;
                let v = DVector::from_column_slice(&base);
                let st = setup.structure(slow)?;
                let gamma = setup.christoffel(slow)?;
                let rhs = -(&st.g * (&dv0 * &v) + gamma.contract(&v, &v));
                let v1 = solve(&setup.beta(), &rhs).ok_or_else(|| Error::InvalidSetup("beta is singular".into()))?;
                Ok((0..n).map(|i| base[i] + params.epsilon * v1[i]).collect())
            }
            Dynamics::GuidingCenter { .. } => unreachable!(),
        }
    }

    /// Order-1 relativistic coefficient with the directional derivative of
    /// `F₀²/ω₀²` entering with sign `curvature_sign`; the invariance equation
    /// selects `−1`.
    fn relativistic_first_order(&self, slow: &[f64], curvature_sign: f64) -> Result<Vec<f64>> {
        let Dynamics::RelativisticPauli { model, params } = &self.dynamics else {
            return Err(Error::InvalidArgument("not a relativistic embedding".into()));
        };
        let r = Vector4::from_column_slice(&slow[..4]);
        let fp = eval_faraday(model, &r)?;
        let vpar = fp.tetrad[0] * slow[4] + fp.tetrad[3] * slow[5];
        let h = 1e-5 * (1.0 + r.amax()) / vpar.amax().max(1e-300);
        let plus = model.tensors(&(r + vpar * h))?;
        let minus = model.tensors(&(r - vpar * h))?;
        let sq = |t: &crate::spacetime::FaradayTensors| t.f0 * t.f0 / (t.omega0 * t.omega0);
        let d_sq = (sq(&plus) - sq(&minus)) / (2.0 * h);
        let zeta = params.zeta();
        let w = fp.f1 * vpar * zeta + d_sq * vpar * curvature_sign - fp.grad_omega0 * params.big_m;
        let vperp = fp.f0 * w * (params.epsilon * zeta / (fp.omega0 * fp.omega0));
        Ok(vec![mink(&fp.tetrad[1], &vperp), mink(&fp.tetrad[2], &vperp)])
    }

    /// Full state on the order-`order` truncated slow manifold.
    pub fn init_on_slow_manifold(&self, slow: &[f64], order: usize) -> Result<Vec<f64>> {
        let fast = self.y_star(slow, order)?;
        self.assemble(slow, &fast)
    }

    /// Relativistic state at event `r` with parallel velocity `v3` along `e₃`,
    /// on the truncated slow manifold, with `V⁰` fixed by `⟨V, V⟩ = −1`.
    pub fn init_relativistic_on_shell(&self, r: &Vector4<f64>, v3: f64, order: usize) -> Result<Vec<f64>> {
        if !matches!(self.dynamics, Dynamics::RelativisticPauli { .. }) {
            return Err(Error::InvalidArgument("mass-shell initialization needs the relativistic system".into()));
        }
        let mut slow = vec![r[0], r[1], r[2], r[3], (1.0 + v3 * v3).sqrt(), v3];
        for _ in 0..2 {
            let fast = self.y_star(&slow, order)?;
            slow[4] = (1.0 + v3 * v3 + fast[0] * fast[0] + fast[1] * fast[1]).sqrt();
        }
        self.init_on_slow_manifold(&slow, order)
    }

    /// Euclidean norm of `fast − y*(slow)` in fast coordinates.
    pub fn normal_distance(&self, y: &[f64], order: usize) -> Result<f64> {
        let sp = self.split(y)?;
        let star = self.y_star(&sp.slow, order)?;
        Ok(sp.fast.iter().zip(&star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
}

fn eval_faraday_at(dynamics: &Dynamics, slow: &[f64]) -> Result<()> {
    if let Dynamics::RelativisticPauli { model, .. } = dynamics {
        eval_faraday(model, &Vector4::from_column_slice(&slow[..4]))?;
    }
    Ok(())
}

/// Settings of the invariance-equation oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Step of the slow-coordinate stencil that differentiates the previous map.
    pub slow_step: f64,
    /// Number of map iterations starting from the order-1 closed form.
    pub outer: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            tol: 1e-12,
            max_iter: 50,
            slow_step: 1e-4,
            outer: 2,
        }
    }
}

impl OracleSettings {
    /// Defaults, with the tolerance loosened where the rates carry
    /// finite-difference noise of a moving tetrad.
    pub fn for_dynamics(dynamics: &Dynamics) -> Self {
        let mut s = Self::default();
        if matches!(dynamics, Dynamics::RelativisticPauli { .. }) {
            s.tol = 1e-10;
        }
        s
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn invariance_residual(emb: &Embedding, slow: &[f64], fast: &[f64], dy: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (sr, fr) = emb.rates(slow, fast)?;
    let push = dy * DVector::from_column_slice(&sr);
    Ok(fr.iter().zip(push.iter()).map(|(f, p)| f - p).collect())
}

/// Damped Newton solve of `f(x, y) − DY·g(x, y) = 0` for `y` at fixed `x`.
fn pointwise_newton(
    emb: &Embedding,
    slow: &[f64],
    dy: &DMatrix<f64>,
    y_init: &[f64],
    settings: &OracleSettings,
) -> Result<Vec<f64>> {
    let mut y = y_init.to_vec();
    let mut res = invariance_residual(emb, slow, &y, dy)?;
    let mut rnorm = norm(&res);
    let h = 1e-6 * (1.0 + norm(&y));
    for _ in 0..settings.max_iter {
        if rnorm < settings.tol {
            return Ok(y);
        }
        let jac = central_jacobian(|q| invariance_residual(emb, slow, q, dy), &y, h)?;
        let step = solve(&jac, &DVector::from_column_slice(&res)).ok_or(Error::SingularJacobian)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            let tres = invariance_residual(emb, slow, &trial, dy)?;
            let tnorm = norm(&tres);
            if tnorm < rnorm || lambda < 1e-3 {
                y = trial;
                res = tres;
                rnorm = tnorm;
                break;
            }
            lambda *= 0.5;
        }
    }
    if rnorm < settings.tol {
        Ok(y)
    } else {
        Err(Error::OracleDivergence {
            iterations: settings.max_iter,
            residual: rnorm,
        })
    }
}

/// Map at iteration `level`: level 0 is the order-1 closed form, level k+1
/// solves the invariance equation with the derivative of level k.
fn map_level(emb: &Embedding, slow: &[f64], level: usize, settings: &OracleSettings, y_init: Option<&[f64]>) -> Result<Vec<f64>> {
    if level == 0 {
        return emb.y_star(slow, 1);
    }
    let dy = central_jacobian(|s| map_level(emb, s, level - 1, settings, None), slow, settings.slow_step)?;
    let start = match y_init {
        Some(y) => y.to_vec(),
        None => emb.y_star(slow, 1)?,
    };
    pointwise_newton(emb, slow, &dy, &start, settings)
}

/// Brute-force slow-manifold point over `slow`, starting the pointwise solves from `y_init`.
pub fn newton_refine(dynamics: &Dynamics, slow: &[f64], y_init: &[f64], settings: &OracleSettings) -> Result<Vec<f64>> {
    let emb = Embedding::frozen_at(dynamics.clone(), slow)?;
    if y_init.len() != emb.fast_dim() {
        return Err(Error::InvalidArgument("initial fast coordinates have the wrong length".into()));
    }
    map_level(&emb, slow, settings.outer.max(1), settings, Some(y_init))
}

/// `newton_refine` started from the order-1 closed form; returns `(y†, y*)`.
pub fn oracle_point(dynamics: &Dynamics, slow: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let emb = Embedding::frozen_at(dynamics.clone(), slow)?;
    let star = emb.y_star(slow, 1)?;
    let refined = newton_refine(dynamics, slow, &star, &OracleSettings::for_dynamics(dynamics))?;
    Ok((refined, star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields3d::FieldModel3D;
    use crate::numcore::loglog_fit;
    use crate::spacetime::FaradayModel;
    use crate::sympl::SymplecticSetup;
    use crate::systems::PauliParams;

    fn classical(model: FieldModel3D, eps: f64) -> Dynamics {
        Dynamics::ClassicalPauli {
            model,
            params: PauliParams::new(eps),
        }
    }

    fn gap(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn split_assemble_round_trip() {
        let systems = [
            classical(FieldModel3D::screw_pinch(1.0, 1.0, 0.8), 0.1),
            Dynamics::RelativisticPauli {
                model: FaradayModel::static_magnetic(FieldModel3D::mirror(1.0, 1.0)),
                params: PauliParams::new(0.1),
            },
            Dynamics::SymplecticLorentz {
                setup: SymplecticSetup::seeded_metric(2),
                params: PauliParams::new(0.1),
            },
        ];
        let states = [
            vec![0.3, -0.2, 0.5, 0.4, -0.7, 0.9],
            vec![0.1, 0.3, -0.2, 0.5, 1.6, 0.4, -0.7, 0.9],
            vec![0.1, 0.3, -0.2, 0.5, 1.6, 0.4, -0.7, 0.9],
        ];
        for (d, y) in systems.iter().zip(&states) {
            let emb = Embedding::new(d.clone()).unwrap();
            let sp = emb.split(y).unwrap();
            let back = emb.assemble(&sp.slow, &sp.fast).unwrap();
            assert!(gap(&back, y) < 1e-12);
            let again = emb.split(&back).unwrap();
            assert!(gap(&again.slow, &sp.slow) < 1e-12 && gap(&again.fast, &sp.fast) < 1e-12);
        }
    }

    #[test]
    fn relativistic_slow_sign_conventions() {
        let d = Dynamics::RelativisticPauli {
            model: FaradayModel::uniform_magnetic(1.0),
            params: PauliParams::new(0.1),
        };
        let emb = Embedding::new(d).unwrap();
        let sp = emb.split(&[0.0, 0.0, 0.0, 0.0, 2.0, 0.3, -0.4, 1.5]).unwrap();
        assert_eq!(sp.slow[4..].to_vec(), vec![2.0, 1.5]);
        assert_eq!(sp.fast, vec![0.3, -0.4]);
    }

    #[test]
    fn order_zero_coefficients() {
        let emb = Embedding::new(classical(FieldModel3D::mirror(1.0, 1.0), 0.1)).unwrap();
        assert_eq!(emb.y_star(&[0.2, 0.1, 0.3, 0.5], 0).unwrap(), vec![0.0, 0.0]);
        assert!(emb.y_star(&[0.2, 0.1, 0.3, 0.5], 2).is_err());
        let emb = Embedding::new(Dynamics::SymplecticLorentz {
            setup: SymplecticSetup::oscillator(),
            params: PauliParams::new(0.1),
        })
        .unwrap();
        let v0 = emb.y_star(&[1.0, 0.0], 0).unwrap();
        assert!(gap(&v0, &[0.0, -1.0]) < 1e-15);
    }

    #[test]
    fn classical_uniform_and_gradient_examples() {
        let emb = Embedding::new(classical(FieldModel3D::uniform(1.0), 0.1)).unwrap();
        assert_eq!(emb.y_star(&[0.3, 0.2, -0.1, 0.8], 1).unwrap(), vec![0.0, 0.0]);
        let y = emb.init_on_slow_manifold(&[0.3, 0.2, -0.1, 0.8], 1).unwrap();
        assert_eq!(y[3..].to_vec(), vec![0.0, 0.0, 0.8]);

        let emb = Embedding::new(classical(FieldModel3D::linear_gradient(1.0, 2.0), 0.1)).unwrap();
        let y = emb.init_on_slow_manifold(&[0.0, 0.0, 0.0, 0.0], 1).unwrap();
        assert!(gap(&y[3..], &[0.0, 0.05, 0.0]) < 1e-15);
        assert!(emb.normal_distance(&y, 1).unwrap() < 1e-14);
    }

    #[test]
    fn normal_distance_of_gyration() {
        let emb = Embedding::new(classical(FieldModel3D::uniform(1.0), 0.1)).unwrap();
        let d = emb.normal_distance(&[0.0, 0.0, 0.0, 0.3, 0.4, 2.0], 1).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oracle_is_exact_in_uniform_field() {
        let d = classical(FieldModel3D::uniform(1.0), 0.1);
        let (refined, star) = oracle_point(&d, &[0.1, 0.2, 0.3, 0.7]).unwrap();
        assert!(norm(&refined) < 1e-14 && norm(&star) == 0.0);
    }

    fn order_gaps(d_of: impl Fn(f64) -> Dynamics, slow: &[f64]) -> (f64, f64) {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let mut g1 = Vec::new();
        let mut g0 = Vec::new();
        for e in eps {
            let d = d_of(e);
            let (refined, star) = oracle_point(&d, slow).unwrap();
            let emb = Embedding::frozen_at(d, slow).unwrap();
            let zero = emb.y_star(slow, 0).unwrap();
            g1.push((e, gap(&refined, &star)));
            g0.push((e, gap(&refined, &zero)));
        }
        (loglog_fit(&g1).unwrap().exponent, loglog_fit(&g0).unwrap().exponent)
    }

    #[test]
    fn classical_order_consistency() {
        let (p1, p0) = order_gaps(|e| classical(FieldModel3D::screw_pinch(1.0, 1.0, 0.8), e), &[0.3, -0.2, 0.1, 0.8]);
        assert!((p1 - 2.0).abs() < 0.3, "order-1 slope {p1}");
        assert!((p0 - 1.0).abs() < 0.3, "order-0 slope {p0}");
    }

    #[test]
    fn relativistic_order_consistency() {
        let (p1, p0) = order_gaps(
            |e| Dynamics::RelativisticPauli {
                model: FaradayModel::static_magnetic(FieldModel3D::screw_pinch(1.0, 1.0, 0.8)),
                params: PauliParams::new(e),
            },
            &[0.0, 0.3, -0.2, 0.1, 1.28, 0.8],
        );
        assert!((p1 - 2.0).abs() < 0.3, "order-1 slope {p1}");
        assert!((p0 - 1.0).abs() < 0.3, "order-0 slope {p0}");
    }

    #[test]
    fn relativistic_curvature_sign_is_fixed_by_the_oracle() {
        let slow = [0.0, 0.3, -0.2, 0.1, 1.28, 0.8];
        let mut flipped = Vec::new();
        for e in [0.2, 0.1, 0.05, 0.025] {
            let d = Dynamics::RelativisticPauli {
                model: FaradayModel::static_magnetic(FieldModel3D::screw_pinch(1.0, 1.0, 0.8)),
                params: PauliParams::new(e),
            };
            let (refined, _) = oracle_point(&d, &slow).unwrap();
            let other = Embedding::new(d).unwrap().relativistic_first_order(&slow, 1.0).unwrap();
            flipped.push((e, gap(&refined, &other)));
        }
        let p = loglog_fit(&flipped).unwrap().exponent;
        assert!((p - 1.0).abs() < 0.3, "flipped-sign slope {p}");
    }

    #[test]
    fn relativistic_matches_classical_drift_in_static_field() {
        // With E = 0 and V∥ = γ t̂ + u b, the perpendicular velocity is the
        // classical drift with u²κ weighted by the parallel four-velocity.
        let model = FieldModel3D::screw_pinch(1.0, 1.0, 0.8);
        let x = Vector3::new(0.3, -0.2, 0.1);
        let u: f64 = 0.8;
        let p = PauliParams::new(0.1).with_m(0.4);
        let emb = Embedding::new(Dynamics::RelativisticPauli {
            model: FaradayModel::static_magnetic(model),
            params: p,
        })
        .unwrap();
        let slow = [0.0, x[0], x[1], x[2], (1.0 + u * u).sqrt(), u];
        let y = emb.init_on_slow_manifold(&slow, 1).unwrap();
        let fp = eval_field(&model, &x, 1.0).unwrap();
        let drift = fp.b.cross(&(fp.grad_bmag * 0.4 + fp.kappa * (u * u))) * (0.1 / fp.omega_c);
        let v = Vector3::new(y[5], y[6], y[7]);
        let vperp = v - fp.b * v.dot(&fp.b);
        assert!((vperp - drift).norm() < 1e-9);
    }

    #[test]
    fn symplectic_order_consistency() {
        let (p1, p0) = order_gaps(
            |e| Dynamics::SymplecticLorentz {
                setup: SymplecticSetup::varying_metric(0.1),
                params: PauliParams::new(e),
            },
            &[0.4, -0.3, 0.8, 0.2],
        );
        assert!((p1 - 2.0).abs() < 0.3, "order-1 slope {p1}");
        assert!((p0 - 1.0).abs() < 0.3, "order-0 slope {p0}");
    }

    #[test]
    fn relativistic_uniform_init_is_parallel() {
        let d = Dynamics::RelativisticPauli {
            model: FaradayModel::uniform_magnetic(1.0),
            params: PauliParams::new(0.1),
        };
        let emb = Embedding::new(d).unwrap();
        let y = emb.init_relativistic_on_shell(&Vector4::zeros(), 0.5, 1).unwrap();
        let v = Vector4::from_column_slice(&y[4..]);
        assert!((v - Vector4::new(1.25f64.sqrt(), 0.0, 0.0, 0.5)).norm() < 1e-15);
        assert!((mink(&v, &v) + 1.0).abs() < 1e-14);
    }
}
