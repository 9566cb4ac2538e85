use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Density,
    Wlambda,
    Zeros,
    LaplaceCheck,
    Tail,
    Kernel,
    KernelTail,
    McValidate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Wlambda => "wlambda",
            Command::Zeros => "zeros",
            Command::LaplaceCheck => "laplace-check",
            Command::Tail => "tail",
            Command::Kernel => "kernel",
            Command::KernelTail => "kernel-tail",
            Command::McValidate => "mc-validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// `start:stop:points[:log]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl Grid {
    pub const fn log(start: f64, stop: f64, points: usize) -> Self {
        Grid { start, stop, points, log: true }
    }

    pub const fn linear(start: f64, stop: f64, points: usize) -> Self {
        Grid { start, stop, points, log: false }
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let s = i as f64 / last;
                if i == 0 {
                    self.start
                } else if i + 1 == self.points {
                    self.stop
                } else if self.log {
                    (self.start.ln() + s * (self.stop / self.start).ln()).exp()
                } else {
                    self.start + s * (self.stop - self.start)
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 if parts[3] == "linear" => false,
            _ => return Err(format!("grid must look like a:b:k[:log], got '{s}'")),
        };
        let num = |p: &str| p.parse::<f64>().map_err(|e| format!("bad grid endpoint '{p}': {e}"));
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let points: usize = parts[2]
            .parse()
            .map_err(|e| format!("bad grid size '{}': {e}", parts[2]))?;
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(format!("grid needs finite start < stop, got {start}:{stop}"));
        }
        if points < 2 {
            return Err(format!("grid needs at least 2 points, got {points}"));
        }
        if log && start <= 0.0 {
            return Err(format!("log grid needs start > 0, got {start}"));
        }
        Ok(Grid { start, stop, points, log })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.points)?;
        if self.log {
            write!(f, ":log")?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gbm-hitfun",
    version,
    allow_negative_numbers = true,
    about = "Densities, tails and Poisson kernels for the stopped exponential functional of GBM"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// drift mu >= 0
    #[arg(long)]
    pub mu: Option<f64>,
    /// starting point x > 1
    #[arg(long)]
    pub x: Option<f64>,
    /// dimension of the hyperbolic space
    #[arg(long, default_value_t = 3)]
    pub n: u32,

    #[arg(long, conflicts_with = "t_grid")]
    pub t: Option<f64>,
    #[arg(long = "t-grid", value_name = "a:b:k[:log]")]
    pub t_grid: Option<Grid>,
    #[arg(long, conflicts_with = "rho_grid")]
    pub rho: Option<f64>,
    #[arg(long = "rho-grid", value_name = "a:b:k[:log]")]
    pub rho_grid: Option<Grid>,
    /// Laplace variable for laplace-check
    #[arg(long, conflicts_with = "r_grid")]
    pub r: Option<f64>,
    #[arg(long = "r-grid", value_name = "a:b:k[:log]")]
    pub r_grid: Option<Grid>,
    /// argument of w_lambda for wlambda
    #[arg(long, conflicts_with = "v_grid")]
    pub v: Option<f64>,
    #[arg(long = "v-grid", value_name = "a:b:k[:log]")]
    pub v_grid: Option<Grid>,

    /// relative quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long, default_value_t = 20_240_917)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// worker threads; GBM_HITFUN_THREADS takes precedence
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub bridge: Switch,

    /// csv by default, json for mc-validate
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    pub fn format(&self) -> OutputFormat {
        self.output.unwrap_or(match self.command {
            Command::McValidate => OutputFormat::Json,
            _ => OutputFormat::Csv,
        })
    }
}

/// A single value or a grid; `None` falls back to `default`.
pub fn points(single: Option<f64>, grid: Option<Grid>, default: Grid) -> (Vec<f64>, String) {
    match (single, grid) {
        (Some(v), _) => (vec![v], format!("{v}")),
        (None, Some(g)) => (g.values(), g.to_string()),
        (None, None) => (default.values(), default.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_grids() {
        let g: Grid = "1:100:3:log".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 3);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(v[2], 100.0);
        let g: Grid = "0:1:5".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.to_string(), "0:1:5");
    }

    #[test]
    fn rejects_bad_grids() {
        for s in ["1:1:3", "2:1:3", "0:1:1", "0:1:3:log", "a:1:3", "0:1", "0:1:3:cubic"] {
            assert!(s.parse::<Grid>().is_err(), "{s}");
        }
    }

    #[test]
    fn default_output_depends_on_command() {
        let cli = Cli::try_parse_from(["gbm-hitfun", "mc-validate"]).unwrap();
        assert_eq!(cli.format(), OutputFormat::Json);
        let cli = Cli::try_parse_from(["gbm-hitfun", "density", "--mu", "1", "--x", "2"]).unwrap();
        assert_eq!(cli.format(), OutputFormat::Csv);
    }

    proptest! {
        #[test]
        fn grids_round_trip(start in 1e-6f64..1e3, span in 1e-3f64..1e6, points in 2usize..500, log in any::<bool>()) {
            let g = Grid { start, stop: start + span, points, log };
            let back: Grid = g.to_string().parse().unwrap();
            prop_assert_eq!(back, g);
            let v = g.values();
            prop_assert_eq!(v.len(), points);
            prop_assert_eq!(v[0], start);
            prop_assert_eq!(v[points - 1], start + span);
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
