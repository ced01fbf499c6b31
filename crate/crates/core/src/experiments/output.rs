//! CSV and text writers. Numbers use `{:e}`, the shortest representation
//! that reads back to the same bits, so identical runs give identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{extrema, ExtremumKind, Snapshot, Trajectory, DEFAULT_PROMINENCE};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, RECORDED_MODES};
use crate::schedule::ScheduleSpec;

/// Create `path` and hand a buffered writer to `body`; I/O failures carry the path.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_fidelity_csv(traj: &Trajectory, w: &mut dyn Write) -> std::io::Result<()> {
    let names: Vec<String> = (1..=RECORDED_MODES).map(|n| format!("F{n}")).collect();
    writeln!(w, "t_ms,{},norm", names.join(","))?;
    for k in 0..traj.len() {
        write!(w, "{:e}", traj.times[k] * 1e3)?;
        for n in 0..RECORDED_MODES {
            match traj.fidelities.get(n) {
                Some(f) => write!(w, ",{:e}", f[k])?,
                None => write!(w, ",NaN")?,
            }
        }
        writeln!(w, ",{:e}", traj.norm[k])?;
    }
    Ok(())
}

pub fn write_norm_csv(traj: &Trajectory, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "t_ms,norm")?;
    for (t, n) in traj.times.iter().zip(&traj.norm) {
        writeln!(w, "{:e},{:e}", t * 1e3, n)?;
    }
    Ok(())
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_{}us.csv", (t * 1e6).round() as i64)
}

pub fn write_snapshot_csv(snap: &Snapshot, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "x_mm,re,im,abs2")?;
    for (x, v) in snap.field.grid.points().zip(&snap.field.values) {
        writeln!(w, "{:e},{:e},{:e},{:e}", x * 1e3, v.re, v.im, v.norm_sqr())?;
    }
    Ok(())
}

/// (t, s, ΩcR, ΩcL, a_x) sampled uniformly over [0, duration].
pub fn write_schedule_csv(
    schedule: &ScheduleSpec,
    eta: f64,
    delta_p: f64,
    duration: f64,
    samples: usize,
    w: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(w, "t_ms,s,omega_c_r,omega_c_l,a_x")?;
    let samples = samples.max(2);
    for i in 0..samples {
        let t = duration * i as f64 / (samples - 1) as f64;
        let (r, l) = schedule.control_pair(t);
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e}",
            t * 1e3,
            schedule.signal(t),
            r,
            l,
            schedule.ax_reduced(eta, delta_p, t)
        )?;
    }
    Ok(())
}

/// Mode levels above the potential floor, in rad·kHz.
pub fn write_levels(scenario: &Scenario, w: &mut dyn Write) -> std::io::Result<()> {
    for n in 0..scenario.catalog.len() {
        writeln!(w, "level.{} = {:e} # rad.kHz", n + 1, scenario.catalog.level(n) * 1e-3)?;
    }
    Ok(())
}

/// Run summary: timing, step count, final fidelities and extrema of F_n.
pub fn write_summary(
    scenario: &Scenario,
    engine: &str,
    dt: f64,
    traj: &Trajectory,
    wall_seconds: f64,
    w: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(w, "scenario = {}", scenario.name)?;
    writeln!(w, "engine = {engine}")?;
    writeln!(w, "grid.n = {}", scenario.grid.n)?;
    writeln!(w, "dt = {dt:e}")?;
    writeln!(w, "steps = {}", traj.steps)?;
    writeln!(w, "samples = {}", traj.len())?;
    writeln!(w, "wall_seconds = {wall_seconds:.3}")?;
    writeln!(w, "light_transit_time = {:e}", scenario.medium.light_transit_time())?;
    write_levels(scenario, w)?;
    for (n, f) in traj.fidelities.iter().enumerate() {
        writeln!(w, "F{}.final = {:e}", n + 1, f.last().copied().unwrap_or(f64::NAN))?;
        let found = extrema(&traj.times, f, DEFAULT_PROMINENCE);
        let text: Vec<String> = found
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    ExtremumKind::Maximum => "max",
                    ExtremumKind::Minimum => "min",
                };
                format!("{kind}@{:.4}ms:{:.4}", e.t * 1e3, e.value)
            })
            .collect();
        writeln!(w, "F{}.extrema = {}", n + 1, text.join(" "))?;
    }
    if let Some(n) = traj.norm.last() {
        writeln!(w, "norm.final = {n:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComplexField, SpatialGrid};
    use num_complex::Complex64;

    #[test]
    fn fidelity_csv_layout() {
        let traj = Trajectory {
            times: vec![0.0, 1e-6],
            fidelities: vec![vec![1.0, 0.5], vec![0.0, 0.25], vec![0.0, 0.125]],
            norm: vec![2.0, 1.5],
            snapshots: vec![],
            steps: 1000,
        };
        let mut buf = Vec::new();
        write_fidelity_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_ms,F1,F2,F3,norm");
        assert_eq!(lines[1], "0e0,1e0,0e0,0e0,2e0");
        assert_eq!(lines.len(), 3);
        let back: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back[0], 1e-6 * 1e3);
        assert_eq!(back[3], 0.125);
    }

    #[test]
    fn snapshot_names_and_layout() {
        assert_eq!(snapshot_file_name(0.06e-3), "snapshot_60us.csv");
        assert_eq!(snapshot_file_name(1.03e-3), "snapshot_1030us.csv");
        let g = SpatialGrid::new(-1e-3, 1e-3, 16).unwrap();
        let snap = Snapshot { t: 0.0, field: ComplexField::from_fn(g, |x| Complex64::new(x, 1.0)) };
        let mut buf = Vec::new();
        write_snapshot_csv(&snap, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_mm,re,im,abs2\n-1e0,-1e-3,1e0,"));
        assert_eq!(text.lines().count(), 17);
    }
}
