use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::{ElementKind, Preconditioner, SolverParams};
use crate::problem_model::{Domain, PerforationLattice};

/// The five pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Mms,
    StrangeTerm,
    Corrector,
    CompareMeasures,
    Example6Analytic,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mms => "mms",
            Experiment::StrangeTerm => "strange_term",
            Experiment::Corrector => "corrector",
            Experiment::CompareMeasures => "compare_measures",
            Experiment::Example6Analytic => "example6_analytic",
        }
    }
}

/// Which corrector experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorCase {
    Laminate,
    Perforated,
}

/// Fully resolved run configuration. Every field is echoed into the reports
/// and hashed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    pub gamma: f64,
    /// Coefficient outside the outer balls; first laminate phase.
    pub a: f64,
    /// Coefficient inside the outer balls; second laminate phase.
    pub b: f64,
    /// Second setup of `compare_measures`.
    pub a2: f64,
    pub b2: f64,
    /// Ellipticity bounds used by the comparison band and the corrector error.
    pub alpha: f64,
    pub beta: f64,
    /// Cells per axis (upper bound for perforated runs).
    pub grid: usize,
    /// Cells per axis of the `mms` refinement sequence.
    pub levels: Vec<usize>,
    /// Constant measure density of the `mms` problem.
    pub mass: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
    pub element: ElementKind,
    /// Coarse-graining window in units of `eps`.
    pub window: f64,
    pub floor: f64,
    pub theta: f64,
    pub radius: f64,
    /// Experiment tolerance (see the README for its meaning per experiment).
    pub tol: f64,
    pub case: CorrectorCase,
    pub negative_control: bool,
    pub sphere_points: usize,
    pub radial_points: usize,
    pub output_dir: String,
}

/// All keys optional; unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<Experiment>,
    pub dim: Option<usize>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub eps_list: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub a2: Option<f64>,
    pub b2: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub grid: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub mass: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub preconditioner: Option<Preconditioner>,
    pub element: Option<ElementKind>,
    pub window: Option<f64>,
    pub floor: Option<f64>,
    pub theta: Option<f64>,
    pub radius: Option<f64>,
    pub tol: Option<f64>,
    pub case: Option<CorrectorCase>,
    pub negative_control: Option<bool>,
    pub sphere_points: Option<usize>,
    pub radial_points: Option<usize>,
    pub output_dir: Option<String>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Defaults of the chosen experiment overlaid with the given keys.
    pub fn resolve(&self, fallback: Option<Experiment>) -> Result<RunConfig> {
        let experiment = self
            .experiment
            .or(fallback)
            .ok_or_else(|| Error::Config("no experiment given".into()))?;
        if let (Some(e), Some(f)) = (self.experiment, fallback) {
            if e != f {
                return Err(Error::Config(format!("config is for {} but {} was requested", e.name(), f.name())));
            }
        }
        let mut c = match (experiment, self.case) {
            (Experiment::Corrector, Some(CorrectorCase::Perforated)) => RunConfig::perforated_corrector(),
            _ => RunConfig::defaults(experiment),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        take!(
            dim, lower, upper, eps_list, gamma, a, b, a2, b2, alpha, beta, grid, levels, mass, rel_tol, max_iter,
            preconditioner, element, window, floor, theta, radius, tol, case, negative_control, sphere_points,
            radial_points, output_dir
        );
        if self.dim.is_some() && self.lower.is_none() && self.upper.is_none() {
            c.lower = vec![0.0; c.dim];
            c.upper = vec![1.0; c.dim];
        }
        Ok(c)
    }
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = RunConfig {
            experiment,
            dim: 3,
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            eps_list: vec![0.5, 1.0 / 3.0, 0.25],
            gamma: 2.0,
            a: 1.0,
            b: 1.0,
            a2: 1.0,
            b2: 2.0,
            alpha: 1.0,
            beta: 1.0,
            grid: 128,
            levels: vec![16, 32, 64, 128],
            mass: 4.0,
            rel_tol: 1e-8,
            max_iter: 20_000,
            preconditioner: Preconditioner::Jacobi,
            element: ElementKind::Simplex,
            window: 1.0,
            floor: 1e-6,
            theta: 1e-3,
            radius: 0.0,
            tol: 0.3,
            case: CorrectorCase::Laminate,
            negative_control: false,
            sphere_points: 200,
            radial_points: 256,
            output_dir: format!("runs/{}", experiment.name()),
        };
        match experiment {
            Experiment::Mms => RunConfig {
                dim: 2,
                lower: vec![0.0; 2],
                upper: vec![1.0; 2],
                eps_list: vec![],
                tol: 0.2,
                rel_tol: 1e-10,
                ..base
            },
            Experiment::StrangeTerm => base,
            Experiment::Corrector => RunConfig {
                dim: 2,
                lower: vec![0.0; 2],
                upper: vec![1.0; 2],
                eps_list: vec![0.25, 0.125, 0.0625],
                b: 4.0,
                beta: 4.0,
                grid: 256,
                tol: 0.5,
                rel_tol: 1e-10,
                ..base
            },
            Experiment::CompareMeasures => RunConfig { eps_list: vec![0.25], beta: 2.0, tol: 0.1, ..base },
            Experiment::Example6Analytic => RunConfig {
                eps_list: vec![0.25, 0.125, 0.0625, 0.03125],
                gamma: 1.5,
                grid: 0,
                tol: 0.05,
                ..base
            },
        }
    }

    /// Settings for the perforated corrector run.
    pub fn perforated_corrector() -> Self {
        RunConfig {
            case: CorrectorCase::Perforated,
            dim: 3,
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            eps_list: vec![1.0 / 3.0],
            b: 1.0,
            beta: 1.0,
            grid: 128,
            tol: 1.0,
            rel_tol: 1e-8,
            ..RunConfig::defaults(Experiment::Corrector)
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        if self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(Error::Config(format!("lower/upper need {} entries", self.dim)));
        }
        Domain::new(self.dim, &self.lower, &self.upper).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver(&self) -> SolverParams {
        SolverParams { rel_tol: self.rel_tol, max_iter: self.max_iter, preconditioner: self.preconditioner, ..SolverParams::default() }
    }

    pub fn uses_lattice(&self) -> bool {
        matches!(self.experiment, Experiment::StrangeTerm | Experiment::CompareMeasures | Experiment::Example6Analytic)
            || (self.experiment == Experiment::Corrector && self.case == CorrectorCase::Perforated)
    }

    /// Checks everything that does not need a solve.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.domain()?;
        self.solver().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("eps_list must be strictly decreasing".into());
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("eps values must lie in (0, 1)".into());
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("a2", self.a2), ("b2", self.b2), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.alpha > self.beta {
            return bad("alpha must not exceed beta".into());
        }
        if !(self.tol >= 0.0 && self.floor > 0.0 && self.theta > 0.0 && self.radius >= 0.0 && self.window >= 1.0) {
            return bad("need tol >= 0, floor > 0, theta > 0, radius >= 0 and window >= 1 (in units of eps)".into());
        }
        match self.experiment {
            Experiment::Mms => {
                if self.levels.len() < 2 || self.levels.windows(2).any(|w| w[1] <= w[0]) || self.levels[0] < 2 {
                    return bad("levels must be increasing cell counts, at least two, starting at >= 2".into());
                }
                if !(self.mass >= 0.0) {
                    return bad("mass must be nonnegative".into());
                }
            }
            Experiment::Example6Analytic => {
                if self.dim != 3 {
                    return bad("example6_analytic runs in three dimensions".into());
                }
            }
            _ => {
                if self.eps_list.is_empty() {
                    return bad("eps_list is empty".into());
                }
                if self.grid < 2 {
                    return bad("grid must be at least 2 cells per axis".into());
                }
            }
        }
        if self.uses_lattice() {
            for &eps in &self.eps_list {
                PerforationLattice::new(eps, self.gamma, self.dim).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Cells per axis for a lattice run: the largest multiple of `1/eps` not
/// above `grid` when `1/eps` is an integer, `grid` otherwise.
pub fn cells_for_eps(grid: usize, eps: f64) -> usize {
    let m = (1.0 / eps).round();
    if ((1.0 / eps) - m).abs() < 1e-9 && m >= 1.0 && (m as usize) <= grid {
        (grid / m as usize) * m as usize
    } else {
        grid
    }
}
