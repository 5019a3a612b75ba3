use std::time::{Duration, Instant};

use super::{Integrator, SolverConfig, State};
use crate::elliptic::VelocityField;
use crate::error::Result;
use crate::monitors::{check_enstrophy, Margins, Monitor, MonitorRow};
use crate::tracker::{
    integral_inequality_check, predict_blowup, riccati_residual, AxisRow, AxisTrajectory, BlowupPrediction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TEnd,
    GradientStop,
    Diverged,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::TEnd => "t_end",
            StopReason::GradientStop => "gradient_stop",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Additional on-axis seeds tracked next to `z = 0`.
    pub extra_seeds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: SolverConfig,
    /// One row per time level, starting with the initial state.
    pub rows: Vec<MonitorRow>,
    pub margins: Vec<Margins>,
    /// The `z = 0` characteristic; sample `k` belongs to row `k` until exit.
    pub trajectory: AxisTrajectory,
    pub extra_trajectories: Vec<AxisTrajectory>,
    pub prediction: BlowupPrediction,
    pub stop: StopReason,
    pub steps: usize,
    pub wall_clock: Duration,
    pub final_state: State,
}

impl RunRecord {
    pub fn init_row(&self) -> &MonitorRow {
        &self.rows[0]
    }

    /// Riccati residual aligned with `rows` (NaN where undefined).
    pub fn riccati_residual(&self) -> Vec<f64> {
        self.align(riccati_residual(&self.trajectory))
    }

    /// Integral-inequality margin aligned with `rows`.
    pub fn integral_margin(&self) -> Vec<f64> {
        let swirl: Vec<f64> = self.rows.iter().map(|r| r.swirl_sup).collect();
        self.align(integral_inequality_check(&self.trajectory, &swirl))
    }

    /// Worst enstrophy-inequality violation over the run.
    pub fn enstrophy_violation(&self) -> f64 {
        check_enstrophy(&self.rows, self.init_row(), self.config.effective_nu())
    }

    fn align(&self, mut v: Vec<f64>) -> Vec<f64> {
        v.resize(self.rows.len(), f64::NAN);
        v
    }
}

/// Steps `init` until `t_end`, until the largest on-axis `d_z Pi` reaches
/// `gradient_stop`, or until the fields stop being finite. `observer` sees
/// every time level (including the initial one) in order.
pub fn run<F>(init: State, cfg: &SolverConfig, options: &RunOptions, mut observer: F) -> Result<RunRecord>
where
    F: FnMut(usize, &State, &VelocityField) -> Result<()>,
{
    let started = Instant::now();
    let integ = Integrator::new(init.grid(), cfg.clone());
    let mut monitor = Monitor::new(cfg);
    let mut state = init;
    let mut vel = integ.velocity(&state.omega)?;
    let mut axis = AxisRow::new(&state, &vel);
    let mut trajectory = AxisTrajectory::seed_from_row(&axis, state.t, 0.0);
    let mut extra: Vec<AxisTrajectory> =
        options.extra_seeds.iter().map(|&z| AxisTrajectory::seed_from_row(&axis, state.t, z)).collect();

    let first = monitor.observe(&state, &vel);
    let mut margins = vec![monitor.margins(&first)];
    let mut rows = vec![first];
    observer(0, &state, &vel)?;

    let mut steps = 0;
    let stop = loop {
        if axis.max_gradient() >= cfg.gradient_stop {
            break StopReason::GradientStop;
        }
        if state.t >= cfg.t_end {
            break StopReason::TEnd;
        }
        let dt = integ.stable_dt(&state, &vel).min(cfg.t_end - state.t);
        let mut next = integ.advance(&state, &vel, dt)?;
        if cfg.t_end - next.t <= 1e-14 * cfg.t_end.abs().max(1.0) {
            next.t = cfg.t_end;
        }
        if !next.is_finite() {
            break StopReason::Diverged;
        }
        let next_vel = integ.velocity(&next.omega)?;
        let next_axis = AxisRow::new(&next, &next_vel);
        let step_dt = next.t - state.t;
        trajectory.advance(&axis, &next_axis, next.t, step_dt);
        for tr in &mut extra {
            tr.advance(&axis, &next_axis, next.t, step_dt);
        }
        state = next;
        vel = next_vel;
        axis = next_axis;
        steps += 1;

        let row = monitor.observe(&state, &vel);
        margins.push(monitor.margins(&row));
        let healthy = row.is_finite();
        rows.push(row);
        observer(steps, &state, &vel)?;
        if !healthy {
            break StopReason::Diverged;
        }
    };

    let prediction = predict_blowup(&trajectory);
    Ok(RunRecord {
        config: cfg.clone(),
        rows,
        margins,
        trajectory,
        extra_trajectories: extra,
        prediction,
        stop,
        steps,
        wall_clock: started.elapsed(),
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::zero_state;
    use crate::grid::Grid;

    fn noop(_: usize, _: &State, _: &VelocityField) -> Result<()> {
        Ok(())
    }

    #[test]
    fn t_end_zero_gives_single_row() {
        let g = Grid::new(9, 17, 1.0, 1.0).unwrap();
        let cfg = SolverConfig { t_end: 0.0, ..Default::default() };
        let rec = run(zero_state(&g), &cfg, &RunOptions::default(), noop).unwrap();
        assert_eq!(rec.rows.len(), 1);
        assert_eq!(rec.stop, StopReason::TEnd);
        assert_eq!(rec.steps, 0);
    }

    #[test]
    fn zero_data_runs_to_t_end() {
        let g = Grid::new(9, 17, 1.0, 1.0).unwrap();
        let cfg = SolverConfig { t_end: 1.0, dt_max: 0.01, ..Default::default() };
        let mut seen = 0;
        let rec = run(zero_state(&g), &cfg, &RunOptions { extra_seeds: vec![0.5] }, |k, s, _| {
            assert_eq!(k, seen);
            assert_eq!(s.pi.max_abs(), 0.0);
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(rec.stop, StopReason::TEnd);
        assert_eq!(rec.final_state.t, 1.0);
        assert_eq!(rec.rows.len(), rec.steps + 1);
        assert_eq!(seen, rec.rows.len());
        assert!(rec.rows.iter().all(|r| r.linf_pi == 0.0 && r.l2_omega == 0.0));
        assert_eq!(rec.trajectory.samples.len(), rec.rows.len());
        assert_eq!(rec.extra_trajectories[0].last().phi, 0.5);
        assert!(!rec.prediction.detected());
    }
}
