//! Exact symplectic data `(β, H)` on ℝ²ⁿ together with a compatible metric
//! `g` and almost complex structure `J` built from a reference metric `G`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{spd_sqrt, sym_eig};

/// Christoffel symbols of the first kind, `Γ_ijk` stored as `data[i][(j, k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub data: Vec<DMatrix<f64>>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel {
            data: vec![DMatrix::zeros(dim, dim); dim],
        }
    }

    /// `Γ(V, W)_i = Γ_ijk V^j W^k`.
    pub fn contract(&self, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.data.len(), self.data.iter().map(|m| v.dot(&(m * w))))
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[i][(j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HamiltonianKind {
    /// `H = |z|²/2`.
    Oscillator,
    /// `H = Σ (pᵢ²/2 − cos qᵢ)` over canonical pairs `(qᵢ, pᵢ)`.
    Pendulum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RefMetric {
    Identity,
    /// Constant `G = AᵀA + I` with `A` drawn uniformly from `[-0.5, 0.5]`.
    SeededConstant { seed: u64 },
    /// User-supplied constant SPD matrix (rows).
    Constant { rows: Vec<Vec<f64>> },
    /// `G = I + a·diag(sin z₁, …, sin z₂ₙ)`.
    SineDiagonal { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSetup {
    /// Degrees of freedom `n`; the phase space is ℝ²ⁿ.
    pub dof: usize,
    pub hamiltonian: HamiltonianKind,
    pub metric: RefMetric,
}

/// `(J, g)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub j: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

pub fn canonical_beta(dof: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(2 * dof, 2 * dof);
    for k in 0..dof {
        b[(2 * k, 2 * k + 1)] = 1.0;
        b[(2 * k + 1, 2 * k)] = -1.0;
    }
    b
}

/// Compatible `(J, g)` from a reference metric `G` and 2-form `β`:
/// `β_G = G⁻¹β`, `S = −β_G²`, `J = β_G⁻¹√S`, `g(V, W) = β(V, JW)`.
pub fn compatible_structure(g_ref: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<Structure> {
    let n = beta.nrows();
    if !beta.is_square() || g_ref.shape() != beta.shape() || n % 2 != 0 {
        return Err(Error::InvalidArgument("beta and G must be square, even and of equal size".into()));
    }
    let scale = beta.norm().max(1e-300);
    if (beta + beta.transpose()).norm() > 1e-12 * scale {
        return Err(Error::InvalidArgument("beta is not antisymmetric".into()));
    }
    if beta.determinant().abs() <= 1e-12 {
        return Err(Error::InvalidArgument("beta is singular".into()));
    }
    // S is G-self-adjoint; take the root in the G^{1/2}-conjugated frame where it is symmetric.
    let g_half = spd_sqrt(g_ref)?;
    let eig = sym_eig(&g_half)?;
    let inv_diag = DMatrix::from_diagonal(&DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| 1.0 / l)));
    let g_half_inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    let b_sym = &g_half_inv * beta * &g_half_inv;
    let s_sym = b_sym.transpose() * &b_sym;
    let s_sym = (&s_sym + s_sym.transpose()) * 0.5;
    let root_sym = spd_sqrt(&s_sym)?;
    let root = &g_half_inv * &root_sym * &g_half;

    let beta_g_inv = beta
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("beta is singular".into()))?
        * g_ref;
    let j = beta_g_inv * &root;
    let g = g_ref * &root;
    let g = (&g + g.transpose()) * 0.5;
    Ok(Structure { j, g })
}

/// Central-difference Christoffel symbols of an arbitrary metric field.
pub fn christoffel_of<F>(metric: F, z: &[f64], h: f64) -> Result<Christoffel>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let dim = z.len();
    let mut dg = Vec::with_capacity(dim);
    let mut probe = z.to_vec();
    for l in 0..dim {
        probe[l] = z[l] + h;
        let plus = metric(&probe)?;
        probe[l] = z[l] - h;
        let minus = metric(&probe)?;
        probe[l] = z[l];
        let d = (plus - minus) / (2.0 * h);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation { point: z.to_vec() });
        }
        dg.push(d);
    }
    let data = (0..dim)
        .map(|i| {
            DMatrix::from_fn(dim, dim, |j, k| {
                0.5 * (dg[k][(i, j)] + dg[j][(k, i)] - dg[i][(j, k)])
            })
        })
        .collect();
    Ok(Christoffel { data })
}

pub fn christoffel_fd(setup: &SymplecticSetup, z: &[f64], h: f64) -> Result<Christoffel> {
    christoffel_of(|p| Ok(setup.structure(p)?.g), z, h)
}

impl SymplecticSetup {
    pub fn oscillator() -> Self {
        SymplecticSetup {
            dof: 1,
            hamiltonian: HamiltonianKind::Oscillator,
            metric: RefMetric::Identity,
        }
    }

    pub fn pendulum() -> Self {
        SymplecticSetup {
            dof: 1,
            hamiltonian: HamiltonianKind::Pendulum,
            metric: RefMetric::Identity,
        }
    }

    pub fn seeded_metric(seed: u64) -> Self {
        SymplecticSetup {
            dof: 2,
            hamiltonian: HamiltonianKind::Oscillator,
            metric: RefMetric::SeededConstant { seed },
        }
    }

    pub fn varying_metric(amplitude: f64) -> Self {
        SymplecticSetup {
            dof: 2,
            hamiltonian: HamiltonianKind::Oscillator,
            metric: RefMetric::SineDiagonal { amplitude },
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.dof
    }

    pub fn validate(&self) -> Result<()> {
        if self.dof == 0 {
            return Err(Error::InvalidSetup("dof must be at least 1".into()));
        }
        if let RefMetric::Constant { rows } = &self.metric {
            if rows.len() != self.dim() || rows.iter().any(|r| r.len() != self.dim()) {
                return Err(Error::InvalidSetup(format!("metric must be {0}x{0}", self.dim())));
            }
        }
        self.structure(&vec![0.0; self.dim()]).map(|_| ())
    }

    pub fn beta(&self) -> DMatrix<f64> {
        canonical_beta(self.dof)
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self.metric, RefMetric::SineDiagonal { .. })
    }

    pub fn h(&self, z: &[f64]) -> f64 {
        match self.hamiltonian {
            HamiltonianKind::Oscillator => z.iter().map(|v| v * v).sum::<f64>() / 2.0,
            HamiltonianKind::Pendulum => z
                .chunks(2)
                .map(|qp| qp[1] * qp[1] / 2.0 - qp[0].cos())
                .sum(),
        }
    }

    /// Coordinate differential `∂H`.
    pub fn grad_h(&self, z: &[f64]) -> DVector<f64> {
        match self.hamiltonian {
            HamiltonianKind::Oscillator => DVector::from_column_slice(z),
            HamiltonianKind::Pendulum => DVector::from_iterator(
                z.len(),
                z.chunks(2).flat_map(|qp| [qp[0].sin(), qp[1]]),
            ),
        }
    }

    pub fn ref_metric(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if z.len() != n {
            return Err(Error::InvalidArgument(format!("expected {n} coordinates, got {}", z.len())));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainExit { point: z.to_vec() });
        }
        Ok(match &self.metric {
            RefMetric::Identity => DMatrix::identity(n, n),
            RefMetric::SeededConstant { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
                a.transpose() * &a + DMatrix::identity(n, n)
            }
            RefMetric::Constant { rows } => DMatrix::from_fn(n, n, |i, j| rows[i][j]),
            RefMetric::SineDiagonal { amplitude } => {
                DMatrix::from_diagonal(&DVector::from_iterator(n, z.iter().map(|v| 1.0 + amplitude * v.sin())))
            }
        })
    }

    pub fn structure(&self, z: &[f64]) -> Result<Structure> {
        compatible_structure(&self.ref_metric(z)?, &self.beta())
    }

    /// Zero for constant reference metrics, central differences (step `1e-4`) otherwise.
    pub fn christoffel(&self, z: &[f64]) -> Result<Christoffel> {
        if self.is_flat() {
            Ok(Christoffel::zeros(self.dim()))
        } else {
            christoffel_fd(self, z, 1e-4)
        }
    }
}
