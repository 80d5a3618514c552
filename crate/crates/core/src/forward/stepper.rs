//! Chorin projection on a staggered 2D grid, used as an independent check of the
//! manufactured solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::expr::{Expr, Smooth};
use crate::forward::solution::{CoefficientFields, ManufacturedSolution};
use crate::linalg::{pcg, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diffusion {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub cells: usize,
    pub length: f64,
    pub dt: f64,
    pub diffusion: Diffusion,
    pub projection_tol: f64,
    pub max_iter: usize,
}

impl StepperConfig {
    pub fn new(cells: usize, dt: f64, diffusion: Diffusion) -> Self {
        Self { cells, length: 1.0, dt, diffusion, projection_tol: 1e-12, max_iter: 20_000 }
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }
}

/// Face velocities: `u` on vertical faces `(i h, (j+½) h)`, `v` on horizontal faces
/// `((i+½) h, j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacState {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    /// Index `i * n + j`, `i ∈ 0..=n`, `j ∈ 0..n`.
    pub u: Vec<f64>,
    /// Index `i * (n+1) + j`, `i ∈ 0..n`, `j ∈ 0..=n`.
    pub v: Vec<f64>,
}

/// Forcing split into a sampled part and a scalar potential whose gradient is discretized
/// like the pressure gradient.
pub struct StepForcing<'a> {
    pub field: Option<&'a dyn Fn(&[f64; 3], f64) -> [f64; 2]>,
    pub potential: Option<&'a dyn Fn(&[f64; 3], f64) -> f64>,
}

impl StepForcing<'_> {
    pub fn none() -> Self {
        Self { field: None, potential: None }
    }
}

type Bc<'a> = &'a dyn Fn(&[f64; 3], f64) -> [f64; 2];

impl MacState {
    pub fn from_fn(n: usize, h: f64, t: f64, f: impl Fn(&[f64; 3], f64) -> [f64; 2]) -> Self {
        let mut u = vec![0.0; (n + 1) * n];
        let mut v = vec![0.0; n * (n + 1)];
        for i in 0..=n {
            for j in 0..n {
                u[i * n + j] = f(&u_pos(i, j, h), t)[0];
            }
        }
        for i in 0..n {
            for j in 0..=n {
                v[i * (n + 1) + j] = f(&v_pos(i, j, h), t)[1];
            }
        }
        Self { n, h, t, u, v }
    }

    /// Cell divergences.
    pub fn divergence(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (self.u[(i + 1) * n + j] - self.u[i * n + j] + self.v[i * (n + 1) + j + 1]
                    - self.v[i * (n + 1) + j])
                    / self.h;
            }
        }
        d
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergence().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Discrete L² distance to a velocity field over the face sets.
    pub fn l2_error(&self, exact: impl Fn(&[f64; 3], f64) -> [f64; 2]) -> f64 {
        let n = self.n;
        let h = self.h;
        let mut s = 0.0;
        for i in 0..=n {
            for j in 0..n {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                s += w * (self.u[i * n + j] - exact(&u_pos(i, j, h), self.t)[0]).powi(2);
            }
        }
        for i in 0..n {
            for j in 0..=n {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += w * (self.v[i * (n + 1) + j] - exact(&v_pos(i, j, h), self.t)[1]).powi(2);
            }
        }
        (s * h * h).sqrt()
    }
}

fn u_pos(i: usize, j: usize, h: f64) -> [f64; 3] {
    [i as f64 * h, (j as f64 + 0.5) * h, 0.0]
}

fn v_pos(i: usize, j: usize, h: f64) -> [f64; 3] {
    [(i as f64 + 0.5) * h, j as f64 * h, 0.0]
}

/// Reusable operators for one grid and time step.
pub struct ProjectionStepper {
    pub cfg: StepperConfig,
    neumann: CsrMatrix,
    helmholtz_u: Option<CsrMatrix>,
    helmholtz_v: Option<CsrMatrix>,
    phi: Vec<f64>,
}

/// `(I − dt Δ_h)` on interior faces of one component, with ghost values for the walls
/// parallel to the component.
fn helmholtz(n: usize, h: f64, dt: f64) -> CsrMatrix {
    // unknowns: faces i ∈ 1..n (interior along the normal axis), j ∈ 0..n
    let m = n - 1;
    let idx = |i: usize, j: usize| (i - 1) * n + j;
    let c = dt / (h * h);
    let mut t = Vec::new();
    for i in 1..n {
        for j in 0..n {
            let r = idx(i, j);
            let mut diag = 1.0 + 4.0 * c;
            if i > 1 {
                t.push((r, idx(i - 1, j), -c));
            }
            if i + 1 < n {
                t.push((r, idx(i + 1, j), -c));
            }
            if j > 0 {
                t.push((r, idx(i, j - 1), -c));
            } else {
                diag += c;
            }
            if j + 1 < n {
                t.push((r, idx(i, j + 1), -c));
            } else {
                diag += c;
            }
            t.push((r, r, diag));
        }
    }
    CsrMatrix::from_triplets(m * n, m * n, t)
}

fn neumann_laplacian(n: usize, h: f64) -> CsrMatrix {
    let c = 1.0 / (h * h);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let r = i * n + j;
            let mut diag = 0.0;
            let mut nb = |ii: isize, jj: isize| {
                if ii >= 0 && jj >= 0 && (ii as usize) < n && (jj as usize) < n {
                    t.push((r, ii as usize * n + jj as usize, -c));
                    diag += c;
                }
            };
            nb(i as isize - 1, j as isize);
            nb(i as isize + 1, j as isize);
            nb(i as isize, j as isize - 1);
            nb(i as isize, j as isize + 1);
            t.push((r, r, diag));
        }
    }
    CsrMatrix::from_triplets(n * n, n * n, t)
}

impl ProjectionStepper {
    pub fn new(cfg: StepperConfig) -> Result<Self> {
        if cfg.cells < 4 {
            return Err(Error::GridTooSmall { axis: 0, nodes: cfg.cells + 1 });
        }
        let h = cfg.h();
        if cfg.diffusion == Diffusion::Explicit && cfg.dt > h * h / 4.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "explicit diffusion needs dt <= h^2/4 = {}, got {}",
                h * h / 4.0,
                cfg.dt
            )));
        }
        let (hu, hv) = match cfg.diffusion {
            Diffusion::Implicit => (Some(helmholtz(cfg.cells, h, cfg.dt)), Some(helmholtz(cfg.cells, h, cfg.dt))),
            Diffusion::Explicit => (None, None),
        };
        Ok(Self {
            cfg,
            neumann: neumann_laplacian(cfg.cells, h),
            helmholtz_u: hu,
            helmholtz_v: hv,
            phi: vec![0.0; cfg.cells * cfg.cells],
        })
    }

    /// Advances one step of size `dt`.
    pub fn step(&mut self, state: &MacState, coeffs: &CoefficientFields, forcing: &StepForcing, bc: Bc) -> Result<MacState> {
        let n = state.n;
        let h = state.h;
        let dt = self.cfg.dt;
        let t0 = state.t;
        let t1 = t0 + dt;
        let implicit = self.cfg.diffusion == Diffusion::Implicit;
        let tf = if implicit { t1 } else { t0 };

        // transport and forcing on interior faces
        let (gu, gv) = transport(state, coeffs, bc);
        let pot = forcing.potential.map(|p| {
            let mut c = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    c[i * n + j] = p(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.0], tf);
                }
            }
            c
        });
        let force_u = |i: usize, j: usize| {
            let mut f = forcing.field.map(|f| f(&u_pos(i, j, h), tf)[0]).unwrap_or(0.0);
            if let Some(c) = &pot {
                f += (c[i * n + j] - c[(i - 1) * n + j]) / h;
            }
            f
        };
        let force_v = |i: usize, j: usize| {
            let mut f = forcing.field.map(|f| f(&v_pos(i, j, h), tf)[1]).unwrap_or(0.0);
            if let Some(c) = &pot {
                f += (c[i * n + j] - c[i * n + j - 1]) / h;
            }
            f
        };

        let mut next = MacState::from_fn(n, h, t1, |x, t| bc(x, t));
        // keep only the boundary-normal faces from the boundary data
        balance_flux(&mut next);

        if implicit {
            let c = dt / (h * h);
            let mut rhs_u = vec![0.0; (n - 1) * n];
            for i in 1..n {
                for j in 0..n {
                    let mut r = state.u[i * n + j] + dt * (force_u(i, j) - gu[i * n + j]);
                    if i == 1 {
                        r += c * next.u[j];
                    }
                    if i + 1 == n {
                        r += c * next.u[n * n + j];
                    }
                    let x = u_pos(i, j, h);
                    if j == 0 {
                        r += 2.0 * c * bc(&[x[0], 0.0, 0.0], t1)[0];
                    }
                    if j + 1 == n {
                        r += 2.0 * c * bc(&[x[0], self.cfg.length, 0.0], t1)[0];
                    }
                    rhs_u[(i - 1) * n + j] = r;
                }
            }
            let mut rhs_v = vec![0.0; (n - 1) * n];
            for j in 1..n {
                for i in 0..n {
                    let mut r = state.v[i * (n + 1) + j] + dt * (force_v(i, j) - gv[i * (n + 1) + j]);
                    if j == 1 {
                        r += c * next.v[i * (n + 1)];
                    }
                    if j + 1 == n {
                        r += c * next.v[i * (n + 1) + n];
                    }
                    let x = v_pos(i, j, h);
                    if i == 0 {
                        r += 2.0 * c * bc(&[0.0, x[1], 0.0], t1)[1];
                    }
                    if i + 1 == n {
                        r += 2.0 * c * bc(&[self.cfg.length, x[1], 0.0], t1)[1];
                    }
                    // v unknowns transposed: normal axis is j
                    rhs_v[(j - 1) * n + i] = r;
                }
            }
            let hu = self.helmholtz_u.as_ref().unwrap();
            let hv = self.helmholtz_v.as_ref().unwrap();
            let (xu, su) = pcg(|x| hu.matvec(x), &rhs_u, None, None, self.cfg.projection_tol, self.cfg.max_iter);
            let (xv, sv) = pcg(|x| hv.matvec(x), &rhs_v, None, None, self.cfg.projection_tol, self.cfg.max_iter);
            for st in [&su, &sv] {
                if !st.converged {
                    return Err(Error::NoConvergence { iterations: st.iterations, residual: st.relative_residual });
                }
            }
            for i in 1..n {
                for j in 0..n {
                    next.u[i * n + j] = xu[(i - 1) * n + j];
                }
            }
            for j in 1..n {
                for i in 0..n {
                    next.v[i * (n + 1) + j] = xv[(j - 1) * n + i];
                }
            }
        } else {
            let lu = lap_u(state, bc);
            let lv = lap_v(state, bc);
            for i in 1..n {
                for j in 0..n {
                    let k = i * n + j;
                    next.u[k] = state.u[k] + dt * (lu[k] - gu[k] + force_u(i, j));
                }
            }
            for i in 0..n {
                for j in 1..n {
                    let k = i * (n + 1) + j;
                    next.v[k] = state.v[k] + dt * (lv[k] - gv[k] + force_v(i, j));
                }
            }
        }
        self.project(&mut next)?;
        Ok(next)
    }

    fn project(&mut self, s: &mut MacState) -> Result<()> {
        let n = s.n;
        let h = s.h;
        let dt = self.cfg.dt;
        let mut rhs: Vec<f64> = s.divergence().iter().map(|d| -d / dt).collect();
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        rhs.iter_mut().for_each(|r| *r -= mean);
        let (phi, st) = pcg(|x| self.neumann.matvec(x), &rhs, Some(&self.phi), None, self.cfg.projection_tol, self.cfg.max_iter);
        if !st.converged && st.relative_residual > 1e3 * self.cfg.projection_tol {
            return Err(Error::NoConvergence { iterations: st.iterations, residual: st.relative_residual });
        }
        // −L φ = −div/dt with L the positive Neumann operator means Δφ = div/dt
        for i in 1..n {
            for j in 0..n {
                s.u[i * n + j] -= dt * (phi[i * n + j] - phi[(i - 1) * n + j]) / h;
            }
        }
        for i in 0..n {
            for j in 1..n {
                s.v[i * (n + 1) + j] -= dt * (phi[i * n + j] - phi[i * n + j - 1]) / h;
            }
        }
        self.phi = phi;
        Ok(())
    }
}

/// Shifts boundary-normal velocities by a constant so the net boundary flux vanishes.
fn balance_flux(s: &mut MacState) {
    let n = s.n;
    let mut flux = 0.0;
    for j in 0..n {
        flux += s.u[n * n + j] - s.u[j];
    }
    for i in 0..n {
        flux += s.v[i * (n + 1) + n] - s.v[i * (n + 1)];
    }
    let c = flux / (4 * n) as f64;
    for j in 0..n {
        s.u[n * n + j] -= c;
        s.u[j] += c;
    }
    for i in 0..n {
        s.v[i * (n + 1) + n] -= c;
        s.v[i * (n + 1)] += c;
    }
}

fn u_at(s: &MacState, i: usize, j: isize, bc: Bc) -> f64 {
    let n = s.n;
    if j < 0 {
        let x = u_pos(i, 0, s.h);
        2.0 * bc(&[x[0], 0.0, 0.0], s.t)[0] - s.u[i * n]
    } else if j as usize >= n {
        let x = u_pos(i, 0, s.h);
        2.0 * bc(&[x[0], n as f64 * s.h, 0.0], s.t)[0] - s.u[i * n + n - 1]
    } else {
        s.u[i * n + j as usize]
    }
}

fn v_at(s: &MacState, i: isize, j: usize, bc: Bc) -> f64 {
    let n = s.n;
    if i < 0 {
        let x = v_pos(0, j, s.h);
        2.0 * bc(&[0.0, x[1], 0.0], s.t)[1] - s.v[j]
    } else if i as usize >= n {
        let x = v_pos(0, j, s.h);
        2.0 * bc(&[n as f64 * s.h, x[1], 0.0], s.t)[1] - s.v[(n - 1) * (n + 1) + j]
    } else {
        s.v[i as usize * (n + 1) + j]
    }
}

fn lap_u(s: &MacState, bc: Bc) -> Vec<f64> {
    let n = s.n;
    let c = 1.0 / (s.h * s.h);
    let mut out = vec![0.0; s.u.len()];
    for i in 1..n {
        for j in 0..n {
            let jj = j as isize;
            out[i * n + j] = c
                * (s.u[(i + 1) * n + j] + s.u[(i - 1) * n + j] + u_at(s, i, jj + 1, bc) + u_at(s, i, jj - 1, bc)
                    - 4.0 * s.u[i * n + j]);
        }
    }
    out
}

fn lap_v(s: &MacState, bc: Bc) -> Vec<f64> {
    let n = s.n;
    let c = 1.0 / (s.h * s.h);
    let mut out = vec![0.0; s.v.len()];
    for i in 0..n {
        for j in 1..n {
            let ii = i as isize;
            let k = i * (n + 1) + j;
            out[k] = c * (s.v[k + 1] + s.v[k - 1] + v_at(s, ii + 1, j, bc) + v_at(s, ii - 1, j, bc) - 4.0 * s.v[k]);
        }
    }
    out
}

/// `(A·∇)v + (v·∇)B` on interior faces, explicit in time.
fn transport(s: &MacState, coeffs: &CoefficientFields, bc: Bc) -> (Vec<f64>, Vec<f64>) {
    let n = s.n;
    let h = s.h;
    let mut gu = vec![0.0; s.u.len()];
    let mut gv = vec![0.0; s.v.len()];
    if coeffs.is_zero() {
        return (gu, gv);
    }
    let eval = |f: &crate::forward::funcs::StField, x: &[f64; 3]| f.eval(x, s.t);
    let db: Vec<Vec<Expr>> = coeffs.b.iter().map(|b| (0..2).map(|j| Expr::from(b.dx(j))).collect()).collect();
    for i in 1..n {
        for j in 0..n {
            let x = u_pos(i, j, h);
            let jj = j as isize;
            let dux = (s.u[(i + 1) * n + j] - s.u[(i - 1) * n + j]) / (2.0 * h);
            let duy = (u_at(s, i, jj + 1, bc) - u_at(s, i, jj - 1, bc)) / (2.0 * h);
            let vbar = 0.25
                * (s.v[(i - 1) * (n + 1) + j] + s.v[i * (n + 1) + j] + s.v[(i - 1) * (n + 1) + j + 1] + s.v[i * (n + 1) + j + 1]);
            let ubar = s.u[i * n + j];
            gu[i * n + j] = eval(&coeffs.a[0], &x) * dux
                + eval(&coeffs.a[1], &x) * duy
                + ubar * db[0][0].eval(&x, s.t)
                + vbar * db[0][1].eval(&x, s.t);
        }
    }
    for i in 0..n {
        for j in 1..n {
            let x = v_pos(i, j, h);
            let ii = i as isize;
            let k = i * (n + 1) + j;
            let dvx = (v_at(s, ii + 1, j, bc) - v_at(s, ii - 1, j, bc)) / (2.0 * h);
            let dvy = (s.v[k + 1] - s.v[k - 1]) / (2.0 * h);
            let ubar = 0.25 * (s.u[i * n + j - 1] + s.u[(i + 1) * n + j - 1] + s.u[i * n + j] + s.u[(i + 1) * n + j]);
            let vbar = s.v[k];
            gv[k] = eval(&coeffs.a[0], &x) * dvx
                + eval(&coeffs.a[1], &x) * dvy
                + ubar * db[1][0].eval(&x, s.t)
                + vbar * db[1][1].eval(&x, s.t);
        }
    }
    (gu, gv)
}

/// Outcome of integrating a manufactured solution over `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepperRun {
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub l2_error: f64,
    pub max_divergence: f64,
}

/// Integrates from the manufactured data at `t_start` with its exact forcing and boundary
/// values, and compares with the solution at `t_end`.
pub fn run_manufactured(sol: &ManufacturedSolution, cfg: StepperConfig, t_start: f64, t_end: f64) -> Result<StepperRun> {
    if sol.dim != 2 {
        return Err(Error::InvalidArgument("the projection stepper is two-dimensional".into()));
    }
    let steps = ((t_end - t_start) / cfg.dt).round() as usize;
    if steps == 0 || ((steps as f64 * cfg.dt) - (t_end - t_start)).abs() > 1e-9 * (t_end - t_start) {
        return Err(Error::InvalidArgument(format!("dt = {} does not divide the interval", cfg.dt)));
    }
    let forcing: Vec<Expr> = sol.forcing();
    let field = |x: &[f64; 3], t: f64| [forcing[0].eval(x, t), forcing[1].eval(x, t)];
    let exact = |x: &[f64; 3], t: f64| {
        let v = sol.velocity_at(x, t);
        [v[0], v[1]]
    };
    let sf = StepForcing { field: Some(&field), potential: None };
    let mut stepper = ProjectionStepper::new(cfg)?;
    let mut state = MacState::from_fn(cfg.cells, cfg.h(), t_start, exact);
    for _ in 0..steps {
        state = stepper.step(&state, &sol.coeffs, &sf, &exact)?;
    }
    Ok(StepperRun {
        cells: cfg.cells,
        dt: cfg.dt,
        steps,
        l2_error: state.l2_error(exact),
        max_divergence: state.max_divergence(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::funcs::{radial_bump, StField, Time};

    #[test]
    fn zero_stays_zero() {
        let cfg = StepperConfig::new(8, 0.001, Diffusion::Explicit);
        let mut st = ProjectionStepper::new(cfg).unwrap();
        let zero = |_: &[f64; 3], _: f64| [0.0, 0.0];
        let mut s = MacState::from_fn(8, cfg.h(), 0.0, zero);
        for _ in 0..5 {
            s = st.step(&s, &CoefficientFields::zero(2), &StepForcing::none(), &zero).unwrap();
        }
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn gradient_forcing_is_absorbed() {
        let psi = StField::term(1.0, radial_bump([0.5, 0.5, 0.0], 0.3, 4, 2), Time::constant());
        let pot = |x: &[f64; 3], t: f64| psi.eval(x, t);
        let zero = |_: &[f64; 3], _: f64| [0.0, 0.0];
        for diffusion in [Diffusion::Explicit, Diffusion::Implicit] {
            let cfg = StepperConfig::new(16, 0.0005, diffusion);
            let mut st = ProjectionStepper::new(cfg).unwrap();
            let mut s = MacState::from_fn(16, cfg.h(), 0.0, zero);
            let f = StepForcing { field: None, potential: Some(&pot) };
            // explicit: exact absorption; implicit: wall commutator of (I − dtΔ_h)⁻¹ and ∇_h
            let bound = match diffusion {
                Diffusion::Explicit => 1e-10,
                Diffusion::Implicit => 1e-5 * cfg.dt * 20.0,
            };
            for _ in 0..10 {
                s = st.step(&s, &CoefficientFields::zero(2), &f, &zero).unwrap();
                assert!(s.max_abs() < bound, "{diffusion:?} {}", s.max_abs());
            }
        }
    }

    #[test]
    fn explicit_step_bound_enforced() {
        assert!(ProjectionStepper::new(StepperConfig::new(16, 0.01, Diffusion::Explicit)).is_err());
    }

    #[test]
    fn taylor_green_error_is_small_and_divergence_free() {
        let sol = ManufacturedSolution::taylor_green(1.0);
        let run = run_manufactured(&sol, StepperConfig::new(16, 0.01, Diffusion::Implicit), 0.4, 0.6).unwrap();
        assert!(run.l2_error < 1e-2, "{run:?}");
        assert!(run.max_divergence < 1e-8, "{run:?}");
    }
}
