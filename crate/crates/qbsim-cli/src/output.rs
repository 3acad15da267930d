//! CSV artifacts and the run-metadata sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use qbsim::fitting::io::FEATURE_HEADER;
use qbsim::fitting::FitResult;
use qbsim::observables::{FeatureRecord, PopulationRecord};
use qbsim::polaritons::PolaritonBranch;
use qbsim::protocols::SweepResult;

pub const TRAJECTORY_HEADER: [&str; 7] = ["t_ns", "p_ground", "mean_photons", "p_d_s1", "p_a_s1", "p_a_t1", "phase"];
pub const SWEEP_HEADER: [&str; 6] = ["omega0_ev", "p_t1_probe", "e_up", "e_mp", "e_lp", "e_ttilde"];
pub const BRANCHES_HEADER: [&str; 7] = ["theta_deg", "branch", "energy_ev", "w_cavity", "w_d", "w_a", "w_t"];
pub const FIT_HEADER: [&str; 3] = ["param", "value", "stderr_proxy"];

pub struct Writer {
    dir: PathBuf,
    precision: usize,
    written: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path, precision: usize) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), precision, written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn float(&self, x: f64) -> String {
        format!("{:.*e}", self.precision - 1, x)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), csv::Error> {
        let file = BufWriter::new(File::create(self.dir.join(name))?);
        let mut w = qbsim::fitting::io::csv_writer(file);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn trajectory(&mut self, name: &str, rows: &[PopulationRecord], phase: &[usize]) -> Result<(), csv::Error> {
        let body = rows
            .iter()
            .zip(phase)
            .map(|(p, k)| {
                let mut v: Vec<String> =
                    [p.t, p.p_ground, p.mean_photons, p.p_donor_s1, p.p_acceptor_s1, p.p_acceptor_t1]
                        .map(|x| self.float(x))
                        .into();
                v.push(k.to_string());
                v
            })
            .collect();
        self.csv(name, &TRAJECTORY_HEADER, body)
    }

    pub fn sweep(&mut self, name: &str, s: &SweepResult) -> Result<(), csv::Error> {
        let body = s
            .points
            .iter()
            .map(|p| {
                let e = p.branch_energies;
                [p.omega0, p.populations.p_acceptor_t1, e[0], e[1], e[2], e[3]].map(|x| self.float(x)).into()
            })
            .collect();
        self.csv(name, &SWEEP_HEADER, body)
    }

    pub fn branches(&mut self, name: &str, rows: &[(f64, [PolaritonBranch; 4])]) -> Result<(), csv::Error> {
        let mut body = Vec::new();
        for (theta, br) in rows {
            for b in br {
                let c = b.character;
                body.push(vec![
                    self.float(*theta),
                    b.label.as_str().to_string(),
                    self.float(b.energy),
                    self.float(c[0]),
                    self.float(c[1]),
                    self.float(c[2]),
                    self.float(c[3]),
                ]);
            }
        }
        self.csv(name, &BRANCHES_HEADER, body)
    }

    pub fn fit(&mut self, name: &str, fit: &FitResult, extra: &[(&str, f64)]) -> Result<(), csv::Error> {
        let mut body: Vec<Vec<String>> =
            fit.params.iter().map(|p| vec![p.name.clone(), self.float(p.value), self.float(p.stderr_proxy)]).collect();
        body.push(vec!["objective".into(), self.float(fit.objective), self.float(f64::NAN)]);
        for (k, v) in extra {
            body.push(vec![k.to_string(), self.float(*v), self.float(f64::NAN)]);
        }
        self.csv(name, &FIT_HEADER, body)
    }

    pub fn features(&mut self, name: &str, f: &[FeatureRecord]) -> Result<(), csv::Error> {
        let body = f
            .iter()
            .map(|r| {
                [r.delta_e, r.rel_fluorescence_intensity, r.rel_sharpness, r.rel_phosphorescence_rate]
                    .map(|x| self.float(x))
                    .into()
            })
            .collect();
        self.csv(name, &FEATURE_HEADER, body)
    }

    pub fn raw(&mut self, name: &str, write: impl FnOnce(BufWriter<File>) -> qbsim::Result<()>) -> qbsim::Result<()> {
        write(BufWriter::new(File::create(self.dir.join(name))?))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn metadata<T: Serialize>(&self, name: &str, meta: &T) -> std::io::Result<()> {
        let mut f = BufWriter::new(File::create(self.dir.join(name))?);
        serde_json::to_writer_pretty(&mut f, meta)?;
        f.write_all(b"\n")?;
        f.flush()
    }
}
