//! Optional CSV dump of leapfrog trajectories for debugging.

use std::io::Write;

use super::ProductState;

/// Collects rows `step, x_1.., v_1.., H` in memory; block coordinates are
/// concatenated in chart order.
#[derive(Debug, Default)]
pub struct TrajectoryWriter {
    rows: Vec<(usize, Vec<f64>, Vec<f64>, f64)>,
}

impl TrajectoryWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, step: usize, state: &ProductState, h: f64) {
        let x = state.pos.iter().flatten().copied().collect();
        let v = state.vel.iter().flatten().copied().collect();
        self.rows.push((step, x, v, h));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn hamiltonians(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.3)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.rows.first().map_or(0, |r| r.1.len());
        let mut header = vec!["step".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("v{i}")));
        header.push("H".into());
        writeln!(out, "{}", header.join(","))?;
        for (step, x, v, h) in &self.rows {
            write!(out, "{step}")?;
            for val in x.iter().chain(v) {
                write!(out, ",{val}")?;
            }
            writeln!(out, ",{h}")?;
        }
        Ok(())
    }
}
