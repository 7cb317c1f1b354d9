//! Finite-difference verification lab: grids, complex field states,
//! symbolic-to-grid sampling, a split-step integrator for the
//! dimensionless equation, and conservation/decoherence monitors.
//!
//! The lab works in dimensionless units (alpha, D); SI magnitudes would
//! destroy double precision. [`reference_parameter_binding`] maps the
//! symbolic parameters onto alpha = D = 1 for evaluating symbolic
//! expressions on lab grids.

mod integrate;
mod monitors;

pub use integrate::{integrate, Boundary, Trajectory};
pub use monitors::{
    compare_to_closed_form, conservation_monitor, decoherence_metric, divergence_residual_fd,
    self_convergence_order, DecayFit, MonitorReport,
};

use crate::expr::eval::{CompiledExpr, FnTable};
use crate::expr::{Expr, ExprError, Var};
use num::complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("instability abort at step {step}: norm grew {ratio:.2}x over the initial state")]
    Instability { step: usize, ratio: f64 },
    #[error("non-finite field value at step {step}")]
    NanAbort { step: usize },
    #[error("monitor cap exceeded: tau*D*Lx^2 = {value:.3} > 8 (adjoint growth would overflow)")]
    CapExceeded { value: f64 },
    #[error("decay fit degenerate at offset {s}: field magnitude underflowed")]
    FitDegeneracy { s: f64 },
    #[error("offset {s} does not lie on the grid diagonal cross-section")]
    OffGridOffset { s: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Grid and run configuration for the dimensionless equation
/// `rho_tau = i alpha (rho_xx - rho_yy) - D (y-x)^2 rho`
/// on `[-lx, lx]^2` with `n` points per axis.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub n: usize,
    pub lx: f64,
    pub dtau: f64,
    pub steps: usize,
    pub alpha: f64,
    pub dcoef: f64,
}

impl GridSpec {
    pub fn new(
        n: usize,
        lx: f64,
        dtau: f64,
        steps: usize,
        alpha: f64,
        dcoef: f64,
    ) -> Result<GridSpec, LabError> {
        if n < 16 {
            return Err(LabError::InvalidGrid(format!("n = {n} < 16")));
        }
        if dtau <= 0.0 || dtau.is_nan() {
            return Err(LabError::InvalidGrid(format!(
                "dtau = {dtau} must be positive"
            )));
        }
        if lx <= 0.0 || lx.is_nan() {
            return Err(LabError::InvalidGrid(format!("lx = {lx} must be positive")));
        }
        Ok(GridSpec {
            n,
            lx,
            dtau,
            steps,
            alpha,
            dcoef,
        })
    }

    /// The reference configuration all acceptance checks run on.
    pub fn reference() -> GridSpec {
        GridSpec::new(129, 8.0, 1e-3, 1000, 1.0, 1.0).expect("reference grid is valid")
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.lx / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.spacing()
    }
}

/// Complex field on the grid at one time. Values are row-major with the
/// x-index outer: `values[ix * n + iy]`.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub n: usize,
    pub lx: f64,
    pub time: f64,
    values: Vec<Complex64>,
}

impl FieldState {
    pub fn zeros(grid: &GridSpec, time: f64) -> FieldState {
        FieldState {
            n: grid.n,
            lx: grid.lx,
            time,
            values: vec![Complex64::new(0.0, 0.0); grid.n * grid.n],
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[ix * self.n + iy]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: Complex64) {
        self.values[ix * self.n + iy] = v;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Forces the boundary ring to zero (truncated-domain Dirichlet).
    pub fn pin_ring_zero(&mut self) {
        let n = self.n;
        for k in 0..n {
            self.set(0, k, Complex64::new(0.0, 0.0));
            self.set(n - 1, k, Complex64::new(0.0, 0.0));
            self.set(k, 0, Complex64::new(0.0, 0.0));
            self.set(k, n - 1, Complex64::new(0.0, 0.0));
        }
    }
}

/// Parameter values that realize alpha = D = 1 for the symbolic SI
/// parameters: m = 1, g = 2, kB = 1, T = 1, h = 4 pi gives
/// `alpha = h/(4 pi m) = 1` and `D = 8 pi^2 m g kB T / h^2 = 1`.
pub fn reference_parameter_binding() -> Vec<(&'static str, f64)> {
    vec![
        ("m", 1.0),
        ("g", 2.0),
        ("kB", 1.0),
        ("T", 1.0),
        ("h", 4.0 * std::f64::consts::PI),
    ]
}

/// Pointwise evaluation of an expression in (x, y, t) and parameters on the
/// grid at time `t`.
pub fn sample(
    e: &Expr,
    grid: &GridSpec,
    t: f64,
    params: &[(&str, f64)],
    fns: &FnTable,
) -> Result<FieldState, LabError> {
    let compiled = CompiledExpr::compile(e);
    let bound = compiled.bind_fns(fns)?;
    let mut slots = vec![Complex64::new(0.0, 0.0); compiled.atoms().len()];
    let mut x_slot = None;
    let mut y_slot = None;
    for (k, atom) in compiled.atoms().iter().enumerate() {
        match atom.node() {
            crate::expr::ExprNode::Var(Var::X) => x_slot = Some(k),
            crate::expr::ExprNode::Var(Var::Y) => y_slot = Some(k),
            crate::expr::ExprNode::Var(Var::T) => slots[k] = Complex64::new(t, 0.0),
            crate::expr::ExprNode::Param(name) => {
                let v = params
                    .iter()
                    .find(|(p, _)| p == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| ExprError::UnboundSymbols(vec![name.clone()]))?;
                slots[k] = Complex64::new(v, 0.0);
            }
            _ => {
                return Err(LabError::Expr(ExprError::UnboundSymbols(vec![
                    atom.to_string()
                ])))
            }
        }
    }
    let mut out = FieldState::zeros(grid, t);
    for ix in 0..grid.n {
        if let Some(k) = x_slot {
            slots[k] = Complex64::new(grid.coord(ix), 0.0);
        }
        for iy in 0..grid.n {
            if let Some(k) = y_slot {
                slots[k] = Complex64::new(grid.coord(iy), 0.0);
            }
            out.set(ix, iy, compiled.eval(&slots, &bound));
        }
    }
    Ok(out)
}

/// The dimensionless closed-form family `f(s) exp(-D s^2 tau)` with
/// `f(s) = exp(-s^2/4)` evaluated directly (the oracle the integrator is
/// checked against).
pub fn closed_form_value(dcoef: f64, x: f64, y: f64, tau: f64) -> Complex64 {
    let s = y - x;
    Complex64::new((-s * s / 4.0 - dcoef * s * s * tau).exp(), 0.0)
}

pub fn sample_closed_form(grid: &GridSpec, tau: f64) -> FieldState {
    let mut out = FieldState::zeros(grid, tau);
    for ix in 0..grid.n {
        for iy in 0..grid.n {
            out.set(
                ix,
                iy,
                closed_form_value(grid.dcoef, grid.coord(ix), grid.coord(iy), tau),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Dep;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(8, 8.0, 1e-3, 10, 1.0, 1.0).is_err());
        assert!(GridSpec::new(17, 8.0, 0.0, 10, 1.0, 1.0).is_err());
        assert!(GridSpec::new(17, -1.0, 1e-3, 10, 1.0, 1.0).is_err());
    }

    #[test]
    fn sampling_a_constant_fills_the_grid() {
        let grid = GridSpec::new(17, 2.0, 1e-3, 1, 1.0, 1.0).unwrap();
        let f = sample(&Expr::one(), &grid, 0.0, &[], &FnTable::new()).unwrap();
        for ix in 0..17 {
            for iy in 0..17 {
                assert_eq!(f.get(ix, iy).re, 1.0);
            }
        }
    }

    #[test]
    fn sampling_rejects_jets() {
        let grid = GridSpec::new(17, 2.0, 1e-3, 1, 1.0, 1.0).unwrap();
        let e = Expr::jet(Dep::Rho, &[Var::X]);
        assert!(sample(&e, &grid, 0.0, &[], &FnTable::new()).is_err());
    }

    #[test]
    fn closed_form_at_time_zero_is_the_profile() {
        // sampling the solution at t = 0 equals sampling the arbitrary
        // profile alone
        let grid = GridSpec::new(33, 4.0, 1e-3, 1, 1.0, 1.0).unwrap();
        let f = sample_closed_form(&grid, 0.0);
        for ix in 0..grid.n {
            for iy in 0..grid.n {
                let s = grid.coord(iy) - grid.coord(ix);
                assert!((f.get(ix, iy).re - (-s * s / 4.0).exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_reference_point() {
        // at s = 1, tau = 1 with D = 1 the value is exp(-1.25)
        let v = closed_form_value(1.0, 0.0, 1.0, 1.0);
        assert!((v.re - (-1.25f64).exp()).abs() < 1e-15);
        assert!((v.re - 0.2865047968601901).abs() < 1e-12);
    }

    #[test]
    fn symbolic_residual_on_solution_transfers_to_numerics() {
        // evaluate the model residual with jets bound from analytic
        // derivatives of the closed form at random-ish interior points
        use crate::expr::eval::{Bindings, FnTable};
        use crate::model::canonical_model;
        use crate::symmetry::{catalog, invariant_solution};
        let p = canonical_model();
        let sol = invariant_solution(&p, &catalog()[2].field)
            .unwrap()
            .solution;
        let mut fns = FnTable::new();
        fns.insert_gauss_quarter("varrho");
        let params = reference_parameter_binding();
        let mut worst: f64 = 0.0;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::expr::eval::lsl_seed());
        for k in 0..20 {
            let (x, y, t) = (
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(0.0..1.0),
            );
            let mut b = Bindings::new();
            b.set_var(Var::X, x).set_var(Var::Y, y).set_var(Var::T, t);
            for (name, v) in &params {
                b.set_param(name, *v);
            }
            for j in p.residual().jet_vars() {
                let d = sol.total_derivative_multi(&j.index.vars()).unwrap();
                let v = d.eval_numeric(&b, &fns).unwrap();
                b.set_jet(j, v);
            }
            let r = p.residual().eval_numeric(&b, &fns).unwrap();
            worst = worst.max(r.norm());
            assert!(r.norm() < 1e-10, "point {k}: residual {r}");
        }
        assert!(worst < 1e-10);
    }
}
