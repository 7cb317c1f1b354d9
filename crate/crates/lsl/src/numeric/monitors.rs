//! Grid monitors: quadrature of conserved densities, discrete divergence
//! residuals of current triplets, off-diagonal decay fits, and convergence
//! helpers. All monitors are pure functions of their trajectory input.

use super::{FieldState, GridSpec, LabError};
use crate::conservation::ConservedVector;
use crate::expr::eval::{CompiledExpr, FnTable};
use crate::expr::{Dep, Expr, ExprError, ExprNode, JetVar, Var};
use num::complex::Complex64;

/// Margin of interior nodes skipped by stencil-based monitors.
const STENCIL_MARGIN: usize = 2;

enum SlotKind {
    X,
    Y,
    T,
    Fixed(Complex64),
    Jet(JetVar),
}

/// Evaluates one symbolic current component on a grid, with the jets of the
/// density filled from centered finite differences of neighboring states.
struct ComponentEvaluator {
    compiled: CompiledExpr,
    funcs: Vec<std::sync::Arc<dyn Fn(u32, Complex64) -> Complex64 + Send + Sync>>,
    kinds: Vec<SlotKind>,
}

impl ComponentEvaluator {
    fn new(e: &Expr, params: &[(&str, f64)], fns: &FnTable) -> Result<Self, LabError> {
        let compiled = CompiledExpr::compile(e);
        let funcs = compiled.bind_fns(fns)?;
        let mut kinds = Vec::with_capacity(compiled.atoms().len());
        for atom in compiled.atoms() {
            let kind = match atom.node() {
                ExprNode::Var(Var::X) => SlotKind::X,
                ExprNode::Var(Var::Y) => SlotKind::Y,
                ExprNode::Var(Var::T) => SlotKind::T,
                ExprNode::Param(name) => {
                    let v = params
                        .iter()
                        .find(|(p, _)| p == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| ExprError::UnboundSymbols(vec![name.clone()]))?;
                    SlotKind::Fixed(Complex64::new(v, 0.0))
                }
                ExprNode::Jet(j) if j.dep == Dep::Rho => SlotKind::Jet(*j),
                other => {
                    return Err(LabError::Expr(ExprError::UnboundSymbols(vec![format!(
                        "{other:?}"
                    )])))
                }
            };
            kinds.push(kind);
        }
        Ok(ComponentEvaluator {
            compiled,
            funcs,
            kinds,
        })
    }

    /// Evaluates on the centered state of a (prev, center, next) window.
    /// Nodes within the stencil margin are left at zero.
    fn eval(
        &self,
        prev: &FieldState,
        center: &FieldState,
        next: &FieldState,
        grid: &GridSpec,
        dt: f64,
    ) -> Result<Vec<Complex64>, LabError> {
        let n = grid.n;
        let h = grid.spacing();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        let mut slots = vec![Complex64::new(0.0, 0.0); self.kinds.len()];
        for (k, kind) in self.kinds.iter().enumerate() {
            if let SlotKind::Fixed(v) = kind {
                slots[k] = *v;
            }
        }
        let margin = STENCIL_MARGIN;
        for ix in margin..n - margin {
            for iy in margin..n - margin {
                for (k, kind) in self.kinds.iter().enumerate() {
                    match kind {
                        SlotKind::X => slots[k] = Complex64::new(grid.coord(ix), 0.0),
                        SlotKind::Y => slots[k] = Complex64::new(grid.coord(iy), 0.0),
                        SlotKind::T => slots[k] = Complex64::new(center.time, 0.0),
                        SlotKind::Fixed(_) => {}
                        SlotKind::Jet(j) => {
                            slots[k] = fd_jet(j, prev, center, next, ix, iy, h, dt)?;
                        }
                    }
                }
                out[ix * n + iy] = self.compiled.eval(&slots, &self.funcs);
            }
        }
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn fd_jet(
    j: &JetVar,
    prev: &FieldState,
    c: &FieldState,
    next: &FieldState,
    ix: usize,
    iy: usize,
    h: f64,
    dt: f64,
) -> Result<Complex64, LabError> {
    let xc = |st: &FieldState| (st.get(ix + 1, iy) - st.get(ix - 1, iy)) / (2.0 * h);
    let yc = |st: &FieldState| (st.get(ix, iy + 1) - st.get(ix, iy - 1)) / (2.0 * h);
    let (nx, ny, nt) = (
        j.index.count(Var::X),
        j.index.count(Var::Y),
        j.index.count(Var::T),
    );
    let v = match (nx, ny, nt) {
        (0, 0, 0) => c.get(ix, iy),
        (1, 0, 0) => xc(c),
        (0, 1, 0) => yc(c),
        (0, 0, 1) => (next.get(ix, iy) - prev.get(ix, iy)) / (2.0 * dt),
        (2, 0, 0) => (c.get(ix + 1, iy) - 2.0 * c.get(ix, iy) + c.get(ix - 1, iy)) / (h * h),
        (0, 2, 0) => (c.get(ix, iy + 1) - 2.0 * c.get(ix, iy) + c.get(ix, iy - 1)) / (h * h),
        (1, 1, 0) => {
            (c.get(ix + 1, iy + 1) - c.get(ix + 1, iy - 1) - c.get(ix - 1, iy + 1)
                + c.get(ix - 1, iy - 1))
                / (4.0 * h * h)
        }
        (1, 0, 1) => (xc(next) - xc(prev)) / (2.0 * dt),
        (0, 1, 1) => (yc(next) - yc(prev)) / (2.0 * dt),
        (0, 0, 2) => (next.get(ix, iy) - 2.0 * c.get(ix, iy) + prev.get(ix, iy)) / (dt * dt),
        _ => {
            return Err(LabError::Expr(ExprError::UnboundSymbols(vec![format!(
                "finite-difference stencil for {j}"
            )])))
        }
    };
    Ok(v)
}

/// Discrete divergence residual of a current triplet on five consecutive
/// states (spacing `dt`): the t-current is evaluated on the three inner
/// levels, the spatial currents on the center, and the total divergence is
/// formed with centered differences. Returns the interior max norm.
pub fn divergence_residual_fd(
    c: &ConservedVector,
    states: &[FieldState; 5],
    dt: f64,
    grid: &GridSpec,
    params: &[(&str, f64)],
    fns: &FnTable,
) -> Result<f64, LabError> {
    let n = grid.n;
    let h = grid.spacing();
    let ev_t = ComponentEvaluator::new(&c.phi_t, params, fns)?;
    let ev_x = ComponentEvaluator::new(&c.phi_x, params, fns)?;
    let ev_y = ComponentEvaluator::new(&c.phi_y, params, fns)?;

    let phi_t_m = ev_t.eval(&states[0], &states[1], &states[2], grid, dt)?;
    let phi_t_p = ev_t.eval(&states[2], &states[3], &states[4], grid, dt)?;
    let phi_x = ev_x.eval(&states[1], &states[2], &states[3], grid, dt)?;
    let phi_y = ev_y.eval(&states[1], &states[2], &states[3], grid, dt)?;

    let margin = STENCIL_MARGIN + 1;
    let mut worst = 0.0f64;
    for ix in margin..n - margin {
        for iy in margin..n - margin {
            let dt_phi = (phi_t_p[ix * n + iy] - phi_t_m[ix * n + iy]) / (2.0 * dt);
            let dx_phi = (phi_x[(ix + 1) * n + iy] - phi_x[(ix - 1) * n + iy]) / (2.0 * h);
            let dy_phi = (phi_y[ix * n + iy + 1] - phi_y[ix * n + iy - 1]) / (2.0 * h);
            worst = worst.max((dt_phi + dx_phi + dy_phi).norm());
        }
    }
    Ok(worst)
}

/// Report of a conservation monitor run: the conserved-density quadrature
/// over time and the discrete divergence residual norms.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MonitorReport {
    pub label: String,
    /// (tau, Re Q, Im Q)
    pub q_series: Vec<(f64, f64, f64)>,
    pub q0_abs: f64,
    pub max_q_drift_abs: f64,
    /// relative drift, when |Q(0)| is meaningfully nonzero
    pub max_q_drift_rel: Option<f64>,
    /// (tau, interior max divergence residual)
    pub residual_series: Vec<(f64, f64)>,
}

/// Evaluates `Q(tau) = sum phi_t h^2` and the discrete divergence residual
/// at up to `max_points` stored times of a trajectory. The adjoint solution
/// grows like exp(+D s^2 tau), so runs with `tau_end * D * lx^2 > 8` are
/// rejected outright.
pub fn conservation_monitor(
    c: &ConservedVector,
    traj: &super::Trajectory,
    params: &[(&str, f64)],
    fns: &FnTable,
    max_points: usize,
) -> Result<MonitorReport, LabError> {
    let grid = &traj.grid;
    let tau_end = traj.final_state().time;
    let cap = tau_end * grid.dcoef * grid.lx * grid.lx;
    if cap > 8.0 + 1e-12 {
        return Err(LabError::CapExceeded { value: cap });
    }
    let len = traj.states.len();
    if len < 5 {
        return Err(LabError::InvalidGrid(
            "monitor needs at least five stored states".to_string(),
        ));
    }
    let dt = traj.stored_dt();
    let h = grid.spacing();
    let ev_t = ComponentEvaluator::new(&c.phi_t, params, fns)?;

    let centers: Vec<usize> = {
        let lo = 2;
        let hi = len - 3;
        let count = (hi - lo + 1).min(max_points.max(1));
        (0..count)
            .map(|k| lo + k * (hi - lo).max(1) / count.max(1))
            .collect()
    };

    let mut q_series = Vec::new();
    let mut residual_series = Vec::new();
    for &k in &centers {
        let phi_t = ev_t.eval(
            &traj.states[k - 1],
            &traj.states[k],
            &traj.states[k + 1],
            grid,
            dt,
        )?;
        let q: Complex64 = phi_t.iter().sum::<Complex64>() * (h * h);
        q_series.push((traj.states[k].time, q.re, q.im));
        let window: [FieldState; 5] = [
            traj.states[k - 2].clone(),
            traj.states[k - 1].clone(),
            traj.states[k].clone(),
            traj.states[k + 1].clone(),
            traj.states[k + 2].clone(),
        ];
        let r = divergence_residual_fd(c, &window, dt, grid, params, fns)?;
        residual_series.push((traj.states[k].time, r));
    }

    let q0 = Complex64::new(q_series[0].1, q_series[0].2);
    let q0_abs = q0.norm();
    let mut max_abs = 0.0f64;
    for (_, re, im) in &q_series {
        let drift = (Complex64::new(*re, *im) - q0).norm();
        max_abs = max_abs.max(drift);
    }
    let max_rel = if q0_abs > 1e-12 {
        Some(max_abs / q0_abs)
    } else {
        None
    };
    Ok(MonitorReport {
        label: c.label.clone(),
        q_series,
        q0_abs,
        max_q_drift_abs: max_abs,
        max_q_drift_rel: max_rel,
        residual_series,
    })
}

/// One fitted off-diagonal decay rate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayFit {
    pub s: f64,
    pub rate: f64,
    pub expected: f64,
    pub points: usize,
}

/// Fits `log |rho|` against tau at the diagonal cross-section points
/// (x, y) = (-s/2, s/2) for each requested offset and compares against the
/// closed-form rate `-D s^2`.
pub fn decoherence_metric(
    traj: &super::Trajectory,
    offsets: &[f64],
) -> Result<Vec<DecayFit>, LabError> {
    let grid = &traj.grid;
    let h = grid.spacing();
    let mut out = Vec::new();
    for &s in offsets {
        let fx = (-s / 2.0 + grid.lx) / h;
        let fy = (s / 2.0 + grid.lx) / h;
        let ix = fx.round() as usize;
        let iy = fy.round() as usize;
        if (fx - ix as f64).abs() > 1e-9 || (fy - iy as f64).abs() > 1e-9 {
            return Err(LabError::OffGridOffset { s });
        }
        let mut points: Vec<(f64, f64)> = Vec::new();
        for st in &traj.states {
            let mag = st.get(ix, iy).norm();
            if mag > 1e-250 {
                points.push((st.time, mag.ln()));
            }
        }
        if points.len() < 3 {
            return Err(LabError::FitDegeneracy { s });
        }
        let rate = least_squares_slope(&points);
        out.push(DecayFit {
            s,
            rate,
            expected: -grid.dcoef * s * s,
            points: points.len(),
        });
    }
    Ok(out)
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Mixed relative error of a state against a reference field: the error at
/// each node is divided by max(|exact|, floor * max|exact|), so near-zero
/// reference values do not inflate the metric.
pub fn compare_to_closed_form(state: &FieldState, exact: &FieldState, floor: f64) -> f64 {
    let scale = exact.max_abs().max(f64::MIN_POSITIVE);
    let n = state.n;
    let mut worst = 0.0f64;
    for ix in 1..n - 1 {
        for iy in 1..n - 1 {
            let e = (state.get(ix, iy) - exact.get(ix, iy)).norm();
            let denom = exact.get(ix, iy).norm().max(floor * scale);
            worst = worst.max(e / denom);
        }
    }
    worst
}

/// Richardson-style order estimate from three nested-grid solutions of the
/// same run (n, 2n-1, 4n-3 points): `log2(e_coarse / e_fine)` of the
/// successive max differences on shared nodes.
pub fn self_convergence_order(
    coarse: &FieldState,
    mid: &FieldState,
    fine: &FieldState,
) -> Result<f64, LabError> {
    if mid.n != 2 * coarse.n - 1 || fine.n != 2 * mid.n - 1 {
        return Err(LabError::InvalidGrid(
            "self-convergence needs nested grids n, 2n-1, 4n-3".to_string(),
        ));
    }
    let diff = |a: &FieldState, b: &FieldState| -> f64 {
        // b has twice the resolution; compare on a's nodes
        let mut worst = 0.0f64;
        for ix in 1..a.n - 1 {
            for iy in 1..a.n - 1 {
                let e = (a.get(ix, iy) - b.get(2 * ix, 2 * iy)).norm();
                worst = worst.max(e);
            }
        }
        worst
    };
    let e1 = diff(coarse, mid);
    let e2 = diff(mid, fine);
    if e2 <= 0.0 {
        return Err(LabError::InvalidGrid(
            "zero fine-grid difference; order is undefined".to_string(),
        ));
    }
    Ok((e1 / e2).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conservation::ConservedVector;
    use crate::expr::eval::ZeroCertificate;
    use crate::numeric::{integrate, sample_closed_form, Boundary, GridSpec};

    fn zero_vector() -> ConservedVector {
        ConservedVector {
            label: "zero".into(),
            phi_t: Expr::zero(),
            phi_x: Expr::zero(),
            phi_y: Expr::zero(),
            provenance: "zero field".into(),
            certificate: ZeroCertificate::Exact,
        }
    }

    #[test]
    fn zero_vector_monitor_is_identically_zero() {
        let grid = GridSpec::new(33, 4.0, 1e-2, 40, 1.0, 0.25).unwrap();
        let init = sample_closed_form(&grid, 0.0);
        let traj = integrate(&grid, &init, Boundary::Natural, 5).unwrap();
        let fns = FnTable::new();
        let rep = conservation_monitor(&zero_vector(), &traj, &[], &fns, 4).unwrap();
        assert_eq!(rep.q0_abs, 0.0);
        assert_eq!(rep.max_q_drift_abs, 0.0);
        assert!(rep.residual_series.iter().all(|(_, r)| *r == 0.0));
    }

    #[test]
    fn monitor_cap_is_enforced() {
        let grid = GridSpec::new(33, 8.0, 1e-2, 40, 1.0, 1.0).unwrap();
        let init = sample_closed_form(&grid, 0.0);
        // tau_end = 0.4, D = 1, lx^2 = 64 -> 25.6 > 8
        let traj = integrate(&grid, &init, Boundary::Natural, 5).unwrap();
        let fns = FnTable::new();
        assert!(matches!(
            conservation_monitor(&zero_vector(), &traj, &[], &fns, 4),
            Err(LabError::CapExceeded { .. })
        ));
    }

    #[test]
    fn decoherence_rates_match_closed_form() {
        let grid = GridSpec::new(65, 8.0, 1e-3, 500, 1.0, 1.0).unwrap();
        let init = sample_closed_form(&grid, 0.0);
        let traj = integrate(&grid, &init, Boundary::Natural, 50).unwrap();
        let fits = decoherence_metric(&traj, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert!(fits[0].rate.abs() < 1e-9, "s=0 rate {}", fits[0].rate);
        for f in &fits[1..] {
            let rel = (f.rate - f.expected).abs() / f.expected.abs();
            assert!(
                rel < 0.02,
                "s={} rate {} expected {}",
                f.s,
                f.rate,
                f.expected
            );
        }
        // quadratic separation dependence
        let r1 = fits[2].rate;
        let r2 = fits[3].rate;
        assert!((r2 / r1 - 4.0).abs() < 0.1, "ratio {}", r2 / r1);
    }

    #[test]
    fn monitors_are_pure_functions_of_the_trajectory() {
        let grid = GridSpec::new(33, 4.0, 1e-2, 40, 1.0, 0.25).unwrap();
        let init = sample_closed_form(&grid, 0.0);
        let traj = integrate(&grid, &init, Boundary::Natural, 5).unwrap();
        let fns = FnTable::new();
        let a = conservation_monitor(&zero_vector(), &traj, &[], &fns, 4).unwrap();
        let b = conservation_monitor(&zero_vector(), &traj, &[], &fns, 4).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let f1 = decoherence_metric(&traj, &[1.0]).unwrap();
        let f2 = decoherence_metric(&traj, &[1.0]).unwrap();
        assert_eq!(f1[0].rate.to_bits(), f2[0].rate.to_bits());
    }

    #[test]
    fn underflowed_field_degenerates_the_fit() {
        let grid = GridSpec::new(33, 4.0, 1e-2, 10, 1.0, 1.0).unwrap();
        let init = crate::numeric::FieldState::zeros(&grid, 0.0);
        let traj = integrate(&grid, &init, Boundary::Zero, 2).unwrap();
        assert!(matches!(
            decoherence_metric(&traj, &[1.0]),
            Err(LabError::FitDegeneracy { .. })
        ));
    }

    #[test]
    fn off_grid_offset_is_rejected() {
        let grid = GridSpec::new(33, 4.0, 1e-2, 10, 1.0, 1.0).unwrap();
        let init = sample_closed_form(&grid, 0.0);
        let traj = integrate(&grid, &init, Boundary::Natural, 2).unwrap();
        assert!(matches!(
            decoherence_metric(&traj, &[0.31]),
            Err(LabError::OffGridOffset { .. })
        ));
    }
}
