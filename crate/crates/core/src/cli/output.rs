//! CSV trajectory records.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::integrator::{Trajectory, TrajectoryPoint};
use crate::two_level::BlochState;

/// Column layout of a trajectory file; fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    pub bloch: bool,
    pub finite_bath: bool,
}

impl Layout {
    pub fn header(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        if self.bloch {
            cols.extend(["m1", "m2", "m3"].map(String::from));
        } else {
            for i in 1..=self.dim {
                for j in i..=self.dim {
                    cols.push(format!("rho_{i}_{j}_re"));
                    cols.push(format!("rho_{i}_{j}_im"));
                }
            }
        }
        if self.finite_bath {
            cols.extend(["H_e", "T_e"].map(String::from));
        }
        cols.extend(["total_energy", "total_entropy", "min_eig", "trace_err"].map(String::from));
        cols
    }

    pub fn row(&self, p: &TrajectoryPoint) -> Vec<f64> {
        let mut v = vec![p.t];
        if self.bloch {
            let m = BlochState::vector_of(&p.rho).map(|m| [m.x, m.y, m.z]);
            v.extend(m.unwrap_or([f64::NAN; 3]));
        } else {
            let r = p.rho.matrix();
            for i in 0..self.dim {
                for j in i..self.dim {
                    v.push(r[(i, j)].re);
                    v.push(r[(i, j)].im);
                }
            }
        }
        if self.finite_bath {
            let env = p.env.as_ref();
            v.push(env.map_or(f64::NAN, |e| e.energy));
            v.push(env.map_or(f64::NAN, |e| e.temperature));
        }
        v.extend([
            p.monitors.total_energy,
            p.monitors.total_entropy,
            p.monitors.min_eig,
            p.monitors.trace_err,
        ]);
        v
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut w: W, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_value).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

/// Every `stride`-th recorded point, always including the last one.
pub fn strided(points: &[TrajectoryPoint], stride: usize) -> impl Iterator<Item = &TrajectoryPoint> {
    let last = points.len().saturating_sub(1);
    points
        .iter()
        .enumerate()
        .filter(move |(k, _)| k % stride == 0 || *k == last)
        .map(|(_, p)| p)
}

pub fn write_trajectory(path: &Path, layout: &Layout, traj: &Trajectory, stride: usize) -> io::Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_csv(
        file,
        &layout.header(),
        strided(&traj.points, stride).map(|p| layout.row(p)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_shapes() {
        let l = Layout {
            dim: 2,
            bloch: true,
            finite_bath: false,
        };
        assert_eq!(
            l.header().join(","),
            "t,m1,m2,m3,total_energy,total_entropy,min_eig,trace_err"
        );
        let l = Layout {
            dim: 3,
            bloch: false,
            finite_bath: true,
        };
        let h = l.header();
        assert_eq!(h.len(), 1 + 12 + 2 + 4);
        assert_eq!(h[1], "rho_1_1_re");
        assert_eq!(h[4], "rho_1_2_im");
        assert_eq!(h[13], "H_e");
    }

    #[test]
    fn values_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE] {
            let s = format_value(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_value(0.5), "5.0000000000000000e-1");
    }
}
