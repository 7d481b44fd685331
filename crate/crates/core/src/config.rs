//! Plain-text experiment configuration: an `[edges]` section with one
//! `i j rho` triple per line, an optional `[spatial]` dense row-major
//! matrix block, and a `[run]` section of `key = value` pairs. One file
//! describes one archivable experiment.

use crate::chain::SpatialChain;
use crate::error::{Error, Result};
use crate::typegraph::TypeGraph;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Exact,
    Mc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub edges: Vec<(usize, usize, f64)>,
    /// Row-major spatial transition matrix; empty means the trivial
    /// one-site chain.
    pub spatial: Vec<Vec<f64>>,
    pub start_type: usize,
    pub start_site: usize,
    pub n: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    pub seed: u64,
    pub num_envs: usize,
    pub runs: usize,
    pub method: Method,
    pub cap: u64,
    pub dp_budget: usize,
    pub restarts: usize,
    pub threads: usize,
    pub lambda: Option<f64>,
    /// Optional path to an environment CSV to load instead of sampling.
    pub environment: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            edges: Vec::new(),
            spatial: Vec::new(),
            start_type: 0,
            start_site: 0,
            n: None,
            n_grid: None,
            seed: 0,
            num_envs: 1000,
            runs: 1000,
            method: Method::Exact,
            cap: 10_000_000,
            dp_budget: crate::annealed::DP_BUDGET,
            restarts: 20,
            threads: 1,
            lambda: None,
            environment: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                if !matches!(section.as_str(), "edges" | "spatial" | "run") {
                    return Err(Error::ConfigParse {
                        line: lineno,
                        msg: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            match section.as_str() {
                "edges" => {
                    let f: Vec<&str> = line.split_whitespace().collect();
                    if f.len() != 3 {
                        return Err(Error::ConfigParse {
                            line: lineno,
                            msg: format!("expected `i j rho`, got `{line}`"),
                        });
                    }
                    let i = parse_num::<usize>(f[0], lineno)?;
                    let j = parse_num::<usize>(f[1], lineno)?;
                    let rho = parse_num::<f64>(f[2], lineno)?;
                    cfg.edges.push((i, j, rho));
                }
                "spatial" => {
                    let row: Result<Vec<f64>> = line
                        .split_whitespace()
                        .map(|t| parse_num::<f64>(t, lineno))
                        .collect();
                    cfg.spatial.push(row?);
                }
                "run" => {
                    let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
                        line: lineno,
                        msg: format!("expected `key = value`, got `{line}`"),
                    })?;
                    cfg.set_run_key(key.trim(), value.trim(), lineno)?;
                }
                _ => {
                    return Err(Error::ConfigParse {
                        line: lineno,
                        msg: "content before any section header".into(),
                    })
                }
            }
        }
        if cfg.edges.is_empty() {
            return Err(Error::MissingKey("[edges]"));
        }
        Ok(cfg)
    }

    fn set_run_key(&mut self, key: &str, value: &str, lineno: usize) -> Result<()> {
        match key {
            "start_type" => self.start_type = parse_num(value, lineno)?,
            "start_site" => self.start_site = parse_num(value, lineno)?,
            "n" => self.n = Some(parse_num(value, lineno)?),
            "n_grid" => {
                let grid: Result<Vec<usize>> = value
                    .split_whitespace()
                    .map(|t| parse_num::<usize>(t, lineno))
                    .collect();
                self.n_grid = Some(grid?);
            }
            "seed" => self.seed = parse_num(value, lineno)?,
            "num_envs" => self.num_envs = parse_num(value, lineno)?,
            "runs" => self.runs = parse_num(value, lineno)?,
            "method" => {
                self.method = match value {
                    "exact" => Method::Exact,
                    "mc" => Method::Mc,
                    other => {
                        return Err(Error::ConfigParse {
                            line: lineno,
                            msg: format!("method must be `exact` or `mc`, got `{other}`"),
                        })
                    }
                }
            }
            "cap" => self.cap = parse_num(value, lineno)?,
            "dp_budget" => self.dp_budget = parse_num(value, lineno)?,
            "restarts" => self.restarts = parse_num(value, lineno)?,
            "threads" => self.threads = parse_num(value, lineno)?,
            "lambda" => self.lambda = Some(parse_num(value, lineno)?),
            "environment" => self.environment = Some(value.to_string()),
            other => {
                return Err(Error::ConfigParse {
                    line: lineno,
                    msg: format!("unknown run key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse` of this string reproduces the config
    /// exactly.
    pub fn to_canonical_string(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        out.push_str("[edges]\n");
        for &(i, j, rho) in &self.edges {
            let _ = writeln!(out, "{i} {j} {rho:.16e}");
        }
        if !self.spatial.is_empty() {
            out.push_str("[spatial]\n");
            for row in &self.spatial {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out.push_str("[run]\n");
        let _ = writeln!(out, "start_type = {}", self.start_type);
        let _ = writeln!(out, "start_site = {}", self.start_site);
        if let Some(n) = self.n {
            let _ = writeln!(out, "n = {n}");
        }
        if let Some(grid) = &self.n_grid {
            let cells: Vec<String> = grid.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "n_grid = {}", cells.join(" "));
        }
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "num_envs = {}", self.num_envs);
        let _ = writeln!(out, "runs = {}", self.runs);
        let _ = writeln!(out, "method = {}", self.method.as_str());
        let _ = writeln!(out, "cap = {}", self.cap);
        let _ = writeln!(out, "dp_budget = {}", self.dp_budget);
        let _ = writeln!(out, "restarts = {}", self.restarts);
        let _ = writeln!(out, "threads = {}", self.threads);
        if let Some(l) = self.lambda {
            let _ = writeln!(out, "lambda = {l:.16e}");
        }
        if let Some(env) = &self.environment {
            let _ = writeln!(out, "environment = {env}");
        }
        out
    }

    pub fn build_graph(&self) -> Result<TypeGraph> {
        TypeGraph::build(&self.edges)
    }

    pub fn build_chain(&self) -> Result<SpatialChain> {
        if self.spatial.is_empty() {
            Ok(SpatialChain::trivial())
        } else {
            SpatialChain::new(self.spatial.clone())
        }
    }
}

fn parse_num<T: std::str::FromStr>(token: &str, lineno: usize) -> Result<T> {
    token.parse().map_err(|_| Error::ConfigParse {
        line: lineno,
        msg: format!("cannot parse `{token}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-cycle experiment
[edges]
0 1 1.0
1 0 3.0

[spatial]
0.5 0.5
0.25 0.75

[run]
start_type = 0
n = 5
n_grid = 4 8 12
seed = 42
method = mc
lambda = 1.5
";

    #[test]
    fn parses_sections_and_keys() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.edges.len(), 2);
        assert_eq!(cfg.spatial.len(), 2);
        assert_eq!(cfg.n, Some(5));
        assert_eq!(cfg.n_grid, Some(vec![4, 8, 12]));
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.method, Method::Mc);
        assert_eq!(cfg.lambda, Some(1.5));
        assert!(cfg.build_graph().is_ok());
        assert!(cfg.build_chain().is_ok());
    }

    #[test]
    fn round_trips_through_canonical_text() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let text = cfg.to_canonical_string();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
        // and the canonical text is a fixed point
        assert_eq!(text, back.to_canonical_string());
    }

    #[test]
    fn missing_edges_and_bad_lines_error() {
        assert!(matches!(
            ExperimentConfig::parse("[run]\nseed = 1\n"),
            Err(Error::MissingKey("[edges]"))
        ));
        assert!(matches!(
            ExperimentConfig::parse("[edges]\n0 1\n"),
            Err(Error::ConfigParse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("[edges]\n0 0 1.0\n[run]\nbogus = 3\n"),
            Err(Error::ConfigParse { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("[weird]\n"),
            Err(Error::ConfigParse { .. })
        ));
    }

    #[test]
    fn defaults_give_trivial_chain() {
        let cfg = ExperimentConfig::parse("[edges]\n0 0 2.0\n").unwrap();
        let chain = cfg.build_chain().unwrap();
        assert_eq!(chain.n_sites(), 1);
        assert_eq!(cfg.method, Method::Exact);
        assert_eq!(cfg.threads, 1);
    }
}
