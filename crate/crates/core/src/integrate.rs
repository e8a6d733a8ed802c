//! Fixed-step time integration with observers, domain-exit events and a
//! step-doubling error estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::Dynamics;

/// What the integrator needs from a system.
pub trait OdeSystem: Sync {
    fn rhs(&self, y: &[f64]) -> Result<Vec<f64>>;
    fn energy(&self, y: &[f64]) -> Result<f64>;
    /// `Err(DomainExit)` once `y` has left the model domain.
    fn check_domain(&self, y: &[f64]) -> Result<()>;
}

impl OdeSystem for Dynamics {
    fn rhs(&self, y: &[f64]) -> Result<Vec<f64>> {
        Dynamics::rhs(self, y)
    }

    fn energy(&self, y: &[f64]) -> Result<f64> {
        Dynamics::energy(self, y)
    }

    fn check_domain(&self, y: &[f64]) -> Result<()> {
        Dynamics::check_domain(self, y)
    }
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

fn staged<F>(f: &F, stage: usize, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    f(y).map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step<F>(f: &F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let k1 = staged(f, 1, y)?;
    let k2 = staged(f, 2, &axpy(y, dt / 2.0, &k1))?;
    let k3 = staged(f, 3, &axpy(y, dt / 2.0, &k2))?;
    let k4 = staged(f, 4, &axpy(y, dt, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

const GBS_SEQUENCE: [usize; 5] = [2, 4, 6, 8, 10];

/// Fixed-step Gragg-Bulirsch-Stoer step: modified midpoint rule with
/// `n = 2, 4, …, 10` substeps and polynomial extrapolation in `h²`
/// (order 10 for smooth right-hand sides).
pub fn gbs_step<F>(f: &F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let f0 = staged(f, 1, y)?;
    let mut stage = 1;
    let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(GBS_SEQUENCE.len());
    for (j, &n) in GBS_SEQUENCE.iter().enumerate() {
        let h = dt / n as f64;
        let mut prev = y.to_vec();
        let mut cur = axpy(y, h, &f0);
        for _ in 1..n {
            stage += 1;
            let fc = staged(f, stage, &cur)?;
            let next = axpy(&prev, 2.0 * h, &fc);
            prev = cur;
            cur = next;
        }
        stage += 1;
        let fe = staged(f, stage, &cur)?;
        let smoothed: Vec<f64> = (0..y.len()).map(|i| 0.5 * (cur[i] + prev[i] + h * fe[i])).collect();

        let mut row = vec![smoothed];
        for k in 1..=j {
            let ratio = (n as f64 / GBS_SEQUENCE[j - k] as f64).powi(2);
            let a = &row[k - 1];
            let b = &table[j - 1][k - 1];
            row.push((0..y.len()).map(|i| a[i] + (a[i] - b[i]) / (ratio - 1.0)).collect());
        }
        table.push(row);
    }
    Ok(table.pop().and_then(|mut r| r.pop()).unwrap_or_default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    Rk4,
    #[default]
    Gbs,
}

impl Stepper {
    pub fn step<F>(&self, f: &F, y: &[f64], dt: f64) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        match self {
            Stepper::Rk4 => rk4_step(f, y, dt),
            Stepper::Gbs => gbs_step(f, y, dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    pub stepper: Stepper,
    /// Steps per fast period when `dt` is not given.
    pub steps_per_period: usize,
    /// Explicit step; overrides `steps_per_period`.
    pub dt: Option<f64>,
    /// Store a sample every `stride` steps (the first and last step are always stored).
    pub stride: usize,
    /// The run is flagged if a step-doubling estimate ever exceeds this.
    pub tolerance: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            stepper: Stepper::Gbs,
            steps_per_period: 64,
            dt: None,
            stride: 64,
            tolerance: 1e-9,
        }
    }
}

impl IntegratorSettings {
    /// `dt` from the settings, or `(2π/ω_fast)/steps_per_period`.
    pub fn step_for(&self, fast_frequency: f64) -> Result<f64> {
        let dt = match self.dt {
            Some(dt) => dt,
            None => {
                if !(fast_frequency > 0.0) || self.steps_per_period == 0 {
                    return Err(Error::InvalidArgument("cannot derive a step from the fast frequency".into()));
                }
                2.0 * std::f64::consts::PI / fast_frequency / self.steps_per_period as f64
            }
        };
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        Ok(dt)
    }
}

/// A named scalar sampled along the trajectory.
pub struct Observer<'a> {
    pub name: String,
    pub f: Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>,
}

impl<'a> Observer<'a> {
    pub fn new(name: &str, f: impl Fn(&[f64]) -> Result<f64> + Sync + 'a) -> Self {
        Observer {
            name: name.to_string(),
            f: Box::new(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitEvent {
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `energy` first, then the observers in order.
    pub columns: Vec<(String, Vec<f64>)>,
    pub exit_event: Option<ExitEvent>,
    /// Set when a non-domain failure truncated the run.
    pub error: Option<String>,
    pub dt: f64,
    pub steps: usize,
    /// Largest step-doubling difference (max norm) over all steps.
    pub max_step_error: f64,
    /// Sum of the step-doubling differences, a bound-like estimate of the global error.
    pub accumulated_error: f64,
    /// Some step-doubling estimate exceeded the tolerance.
    pub flagged: bool,
}

impl TrajectoryRecord {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn completed(&self) -> bool {
        self.exit_event.is_none() && self.error.is_none()
    }

    fn sample(&mut self, t: f64, y: &[f64], values: Vec<f64>) {
        self.times.push(t);
        self.states.push(y.to_vec());
        for (col, v) in self.columns.iter_mut().zip(values) {
            col.1.push(v);
        }
    }
}

fn observe(sys: &dyn OdeSystem, observers: &[Observer], y: &[f64]) -> Result<Vec<f64>> {
    let mut values = vec![sys.energy(y)?];
    for o in observers {
        values.push((o.f)(y)?);
    }
    Ok(values)
}

fn is_domain_exit(e: &Error) -> bool {
    match e {
        Error::DomainExit { .. } | Error::DegenerateField { .. } | Error::MagnetizationViolation { .. } => true,
        Error::Stage { source, .. } => is_domain_exit(source),
        _ => false,
    }
}

/// Integrate from `y0` to `t_end` with step `dt`. Integration stops at the
/// first state that leaves the domain (or whose step needs a stage outside
/// it); other failures truncate the record with an error annotation.
pub fn integrate(
    sys: &dyn OdeSystem,
    y0: &[f64],
    dt: f64,
    t_end: f64,
    observers: &[Observer],
    settings: &IntegratorSettings,
) -> Result<TrajectoryRecord> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_end > 0, got {dt}, {t_end}")));
    }
    let stride = settings.stride.max(1);
    let mut columns = vec![("energy".to_string(), Vec::new())];
    columns.extend(observers.iter().map(|o| (o.name.clone(), Vec::new())));
    let mut rec = TrajectoryRecord {
        columns,
        dt,
        ..Default::default()
    };

    if let Err(e) = sys.check_domain(y0) {
        rec.exit_event = Some(ExitEvent {
            time: 0.0,
            reason: e.to_string(),
        });
        return Ok(rec);
    }
    match observe(sys, observers, y0) {
        Ok(v) => rec.sample(0.0, y0, v),
        Err(e) => {
            rec.error = Some(e.to_string());
            return Ok(rec);
        }
    }

    let f = |y: &[f64]| sys.rhs(y);
    // The last step is shortened to land on t_end.
    let n_steps = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut y = y0.to_vec();
    for k in 1..=n_steps {
        let t = if k == n_steps { t_end } else { k as f64 * dt };
        let h = t - (k - 1) as f64 * dt;
        let attempt = settings.stepper.step(&f, &y, h).and_then(|full| {
            let half = settings.stepper.step(&f, &y, h / 2.0)?;
            let two = settings.stepper.step(&f, &half, h / 2.0)?;
            let err = full.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok((full, err))
        });
        let (next, err) = match attempt {
            Ok(v) => v,
            Err(e) if is_domain_exit(&e) => {
                rec.exit_event = Some(ExitEvent {
                    time: t - h,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                break;
            }
        };
        rec.steps = k;
        rec.max_step_error = rec.max_step_error.max(err);
        rec.accumulated_error += err;
        if err > settings.tolerance {
            rec.flagged = true;
        }
        y = next;
        if let Err(e) = sys.check_domain(&y) {
            rec.exit_event = Some(ExitEvent {
                time: t,
                reason: e.to_string(),
            });
            break;
        }
        if k % stride == 0 || k == n_steps {
            match observe(sys, observers, &y) {
                Ok(v) => rec.sample(t, &y, v),
                Err(e) if is_domain_exit(&e) => {
                    rec.exit_event = Some(ExitEvent {
                        time: t,
                        reason: e.to_string(),
                    });
                    break;
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    break;
                }
            }
        }
    }
    Ok(rec)
}
