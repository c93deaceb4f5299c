use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// One recorded iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub k: u64,
    pub residual: f64,
    pub social_cost: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// Recorded iterates of a coupled run plus its terminal state.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub points: Vec<TrajectoryPoint>,
    /// Number of updates applied before stopping.
    pub iterations_used: u64,
    pub converged: bool,
    /// Set when `‖x‖∞ + ‖p‖∞` exceeded the configured divergence bound.
    pub diverged: bool,
    /// Largest `‖x_k‖∞ + ‖p_k‖∞` seen.
    pub max_state_norm: f64,
}

/// Compact digest written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_x: Vec<f64>,
    pub final_p: Vec<f64>,
    pub iterations: u64,
    pub converged: bool,
    pub diverged: bool,
    pub final_residual: f64,
    pub final_social_cost: f64,
    pub max_state_norm: f64,
}

// Records can hold millions of points; show the outcome instead.
impl std::fmt::Debug for TrajectoryRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrajectoryRecord")
            .field("points", &self.points.len())
            .field("iterations_used", &self.iterations_used)
            .field("converged", &self.converged)
            .field("diverged", &self.diverged)
            .field("max_state_norm", &self.max_state_norm)
            .field("final_point", &self.points.last())
            .finish()
    }
}

impl TrajectoryRecord {
    pub fn final_point(&self) -> &TrajectoryPoint {
        self.points.last().expect("a trajectory always records its final iterate")
    }

    pub fn final_x(&self) -> &[f64] {
        &self.final_point().x
    }

    pub fn final_p(&self) -> &[f64] {
        &self.final_point().p
    }

    pub fn final_residual(&self) -> f64 {
        self.final_point().residual
    }

    pub fn final_social_cost(&self) -> f64 {
        self.final_point().social_cost
    }

    pub fn summary(&self) -> RunSummary {
        let last = self.final_point();
        RunSummary {
            final_x: last.x.clone(),
            final_p: last.p.clone(),
            iterations: self.iterations_used,
            converged: self.converged,
            diverged: self.diverged,
            final_residual: last.residual,
            final_social_cost: last.social_cost,
            max_state_norm: self.max_state_norm,
        }
    }

    /// CSV with header `k,residual,social_cost,x0..,p0..`; reals are written
    /// with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let (nx, np) = self
            .points
            .first()
            .map(|pt| (pt.x.len(), pt.p.len()))
            .unwrap_or((0, 0));
        let mut header = vec!["k".to_string(), "residual".into(), "social_cost".into()];
        header.extend((0..nx).map(|i| format!("x{i}")));
        header.extend((0..np).map(|i| format!("p{i}")));
        writeln!(out, "{}", header.join(","))?;
        for pt in &self.points {
            write!(out, "{},{:.16e},{:.16e}", pt.k, pt.residual, pt.social_cost)?;
            for v in pt.x.iter().chain(&pt.p) {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_doubles() {
        let v = 0.1 + 0.2;
        let rec = TrajectoryRecord {
            points: vec![TrajectoryPoint {
                k: 0,
                residual: v,
                social_cost: 1.0 / 3.0,
                x: vec![v],
                p: vec![-v, 2.0],
            }],
            iterations_used: 0,
            converged: true,
            diverged: false,
            max_state_norm: 2.0,
        };
        let csv = rec.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,residual,social_cost,x0,p0,p1");
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields[1], v);
        assert_eq!(fields[2], 1.0 / 3.0);
        assert_eq!(fields[4], -v);
    }
}
