//! Run configuration: a flat `key = value` file plus command-line overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ncbe_core::cases::{CaseId, TestCase};
use ncbe_core::{Nonlinearity, TimeScheme};

use crate::error::{config, CliError, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "NCBE_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMode {
    Uniform,
    Geometric { ratio: f64 },
    Random,
}

/// Last-to-first element size ratio when `geometric` is given without one.
pub const DEFAULT_GEOMETRIC_RATIO: f64 = 2.0;

impl FromStr for GridMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None if s == "uniform" => Ok(GridMode::Uniform),
            None if s == "random" => Ok(GridMode::Random),
            None if s == "geometric" => Ok(GridMode::Geometric { ratio: DEFAULT_GEOMETRIC_RATIO }),
            Some(("geometric", r)) => match r.trim().parse::<f64>() {
                Ok(ratio) if ratio > 0.0 => Ok(GridMode::Geometric { ratio }),
                _ => config(format!("bad geometric ratio `{r}`")),
            },
            _ => config(format!("unknown grid mode `{s}` (uniform, geometric[:ratio], random)")),
        }
    }
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridMode::Uniform => f.write_str("uniform"),
            GridMode::Geometric { ratio } => write!(f, "geometric:{ratio}"),
            GridMode::Random => f.write_str("random"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseId,
    /// Elements per axis; empty means the command's default list.
    pub n: Vec<usize>,
    pub degrees: Vec<usize>,
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub mode: Nonlinearity,
    pub scheme: TimeScheme,
    pub grid: GridMode,
    pub seed: u64,
    pub breakage: Option<String>,
    pub quad_points: Option<usize>,
    pub newton_tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub dump_operators: bool,
    pub reuse_operators: bool,
    pub save_coefficients: bool,
}

impl RunConfig {
    pub fn new(case: CaseId) -> Self {
        Self {
            case,
            n: Vec::new(),
            degrees: Vec::new(),
            tau: None,
            t_final: None,
            snapshots: None,
            mode: Nonlinearity::Consistent,
            scheme: TimeScheme::Bdf2,
            grid: GridMode::Uniform,
            seed: 1,
            breakage: None,
            quad_points: None,
            newton_tol: None,
            output: None,
            dump_operators: false,
            reuse_operators: false,
            save_coefficients: false,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| CliError::Config(format!("invalid {what} `{v}` for key `{key}`"));
        match key.trim() {
            "case" => self.case = v.parse()?,
            "n" | "N" => self.n = parse_list(v).map_err(|_| bad("element count"))?,
            "degree" | "r" => self.degrees = parse_list(v).map_err(|_| bad("degree"))?,
            "tau" => self.tau = Some(v.parse().map_err(|_| bad("time step"))?),
            "t_final" | "T" => self.t_final = Some(v.parse().map_err(|_| bad("final time"))?),
            "snapshots" => self.snapshots = Some(parse_list(v).map_err(|_| bad("time list"))?),
            "mode" => self.mode = v.parse().map_err(|_| bad("nonlinearity mode"))?,
            "scheme" => self.scheme = v.parse().map_err(|_| bad("time scheme"))?,
            "grid" => self.grid = v.parse()?,
            "seed" => self.seed = v.parse().map_err(|_| bad("seed"))?,
            "breakage" => self.breakage = Some(v.to_string()),
            "quad_points" => self.quad_points = Some(v.parse().map_err(|_| bad("point count"))?),
            "newton_tol" => self.newton_tol = Some(v.parse().map_err(|_| bad("tolerance"))?),
            "output" => self.output = Some(PathBuf::from(v)),
            "dump_operators" => self.dump_operators = parse_bool(v).ok_or_else(|| bad("flag"))?,
            "reuse_operators" => self.reuse_operators = parse_bool(v).ok_or_else(|| bad("flag"))?,
            "save_coefficients" => self.save_coefficients = parse_bool(v).ok_or_else(|| bad("flag"))?,
            other => return config(format!("unknown configuration key `{other}`")),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return config(format!("line {}: expected `key = value`, got `{line}`", i + 1));
            };
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.contains(&0) {
            return config("element counts must be at least 1");
        }
        if self.n.windows(2).any(|w| w[1] <= w[0]) {
            return config("element counts must be sorted ascending without repeats");
        }
        if self.degrees.iter().any(|&r| !(1..=3).contains(&r)) {
            return config("degrees must lie in 1..=3");
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return config("tau must be positive");
            }
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return config("final time must be positive");
            }
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, ()> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().map_err(|_| ())).collect()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Settings after defaults are filled in, each tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub ns: Vec<usize>,
    pub degrees: Vec<usize>,
    pub tau: f64,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub provenance: Vec<(&'static str, String)>,
}

/// Which command the defaults are resolved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Moments,
    Convergence,
}

fn default_ns(case: &TestCase, cmd: Command) -> Vec<usize> {
    use CaseId::*;
    match (cmd, case.id) {
        (Command::Run, _) => vec![case.default_n],
        (_, M1 | M2 | M3 | M4) => vec![80, 160, 320],
        (_, M5) => vec![80, 120, 160],
        (_, M6) => vec![15, 20, 25],
        (_, C1) => vec![20, 40, 80, 160, 320],
        (_, C2) => vec![80, 160, 320, 640, 1280],
        (_, C3) => vec![2, 4, 8],
        (_, C4) => vec![1, 2, 4],
    }
}

fn default_degrees(case: &TestCase, cmd: Command) -> Vec<usize> {
    match (cmd, case.id) {
        (Command::Convergence, CaseId::C3) => vec![1, 2, 3],
        _ => vec![case.default_degree],
    }
}

impl RunConfig {
    pub fn resolve(&self, case: &TestCase, cmd: Command) -> Result<Resolved> {
        self.validate()?;
        let tag = |given: bool| if given { "given" } else { "default" };
        let ns = if self.n.is_empty() { default_ns(case, cmd) } else { self.n.clone() };
        let degrees = if self.degrees.is_empty() { default_degrees(case, cmd) } else { self.degrees.clone() };
        let tau = self.tau.unwrap_or(case.tau);
        let t_final = self.t_final.unwrap_or(case.t_final);
        let snapshots: Vec<f64> = match &self.snapshots {
            Some(s) => s.clone(),
            None => case.snapshots.iter().copied().filter(|&t| t <= t_final * (1.0 + 1e-12)).collect(),
        };
        if let Some(&bad) = snapshots.iter().find(|&&t| !(0.0..=t_final * (1.0 + 1e-12)).contains(&t)) {
            return config(format!("snapshot time {bad} outside [0, {t_final}]"));
        }
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let provenance = vec![
            ("case", case.id.to_string()),
            ("title", case.title.to_string()),
            ("dimension", case.dim.to_string()),
            ("domain", format!("[{}, {}]^{}", case.x_min, case.x_max, case.dim)),
            ("collision", case.gamma.name.clone()),
            ("breakage", self.breakage.clone().unwrap_or_else(|| case.beta.name.clone())),
            ("n", format!("{} ({})", join(&ns), tag(!self.n.is_empty()))),
            ("degree", format!("{} ({})", join(&degrees), tag(!self.degrees.is_empty()))),
            ("tau", format!("{tau} ({})", tag(self.tau.is_some()))),
            ("t_final", format!("{t_final} ({})", tag(self.t_final.is_some()))),
            (
                "snapshots",
                format!(
                    "{} ({})",
                    snapshots.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
                    tag(self.snapshots.is_some())
                ),
            ),
            ("scheme", self.scheme.to_string()),
            ("mode", self.mode.to_string()),
            ("grid", self.grid.to_string()),
            ("seed", self.seed.to_string()),
            (
                "quad_points",
                match self.quad_points {
                    Some(q) => format!("{q} (given)"),
                    None => "from kernel regularity (default)".to_string(),
                },
            ),
            (
                "newton_tol",
                match self.newton_tol {
                    Some(t) => format!("{t} (given)"),
                    None => format!("{} (default)", ncbe_core::StepperConfig::default().newton_tol),
                },
            ),
        ];
        Ok(Resolved { ns, degrees, tau, t_final, snapshots, provenance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncbe_core::cases::case;

    #[test]
    fn file_and_overrides() {
        let mut cfg = RunConfig::new(CaseId::M1);
        cfg.apply_file_text("# comment\ncase = m2\nn = 80, 160\ntau=1e-3 # trailing\ngrid = geometric:4\n")
            .unwrap();
        assert_eq!(cfg.case, CaseId::M2);
        assert_eq!(cfg.n, vec![80, 160]);
        assert_eq!(cfg.tau, Some(1e-3));
        assert_eq!(cfg.grid, GridMode::Geometric { ratio: 4.0 });
        cfg.set("n", "320").unwrap();
        assert_eq!(cfg.n, vec![320]);
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.apply_file_text("no equals sign").is_err());
    }

    #[test]
    fn validation_rejects_bad_lists() {
        let mut cfg = RunConfig::new(CaseId::M1);
        cfg.n = vec![0];
        assert!(cfg.validate().is_err());
        cfg.n = vec![160, 80];
        assert!(cfg.validate().is_err());
        cfg.n = vec![80, 160];
        cfg.degrees = vec![4];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_are_tagged() {
        let c = case(CaseId::C1).unwrap();
        let mut cfg = RunConfig::new(CaseId::C1);
        cfg.tau = Some(5e-4);
        let r = cfg.resolve(&c, Command::Convergence).unwrap();
        assert_eq!(r.ns, vec![20, 40, 80, 160, 320]);
        let get = |k: &str| r.provenance.iter().find(|(key, _)| *key == k).unwrap().1.clone();
        assert_eq!(get("tau"), "0.0005 (given)");
        assert_eq!(get("t_final"), "1 (default)");
    }

    #[test]
    fn grid_modes_round_trip() {
        for g in [GridMode::Uniform, GridMode::Random, GridMode::Geometric { ratio: 3.5 }] {
            assert_eq!(g.to_string().parse::<GridMode>().unwrap(), g);
        }
        assert!("spiral".parse::<GridMode>().is_err());
    }
}
