//! Config-file schema and the small parsers shared by the subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryKind;
use crate::error::{Error, Result};
use crate::system::{grad_theory_by_name, MomentTheory};
use crate::tensor::Reduction;

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_ENV: &str = "MOMENT_OBC_OUT_DIR";

/// Optional values read from `--config file.json`; flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub theory: Option<String>,
    pub nd: Option<usize>,
    pub m: Option<String>,
    pub reduction: Option<String>,
    pub chi: Option<f64>,
    pub kn: Option<f64>,
    pub grid: Option<usize>,
    pub bc: Option<String>,
    pub cells: Option<usize>,
    pub cfl: Option<f64>,
    pub crossing_times: Option<f64>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl RunFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: RunFile = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Range checks on the values that are present.
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = &self.reduction {
            parse_reduction(r)?;
        }
        if let Some(b) = &self.bc {
            b.parse::<BoundaryKind>()?;
        }
        if let Some(m) = &self.m {
            parse_radial_counts(m)?;
        }
        if let Some(chi) = self.chi {
            check_chi(chi)?;
        }
        if let Some(kn) = self.kn {
            check_kn(kn)?;
        }
        if self.theory.is_some() || self.nd.is_some() || self.m.is_some() {
            resolve_theory(
                self.theory.as_deref(),
                self.nd,
                self.m.as_deref(),
                self.reduction
                    .as_deref()
                    .map(parse_reduction)
                    .transpose()?
                    .unwrap_or(Reduction::Planar),
            )?;
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn check_chi(chi: f64) -> Result<f64> {
    if chi > 0.0 && chi <= 1.0 {
        Ok(chi)
    } else {
        Err(Error::InvalidConfig(format!(
            "accommodation coefficient must lie in (0, 1], got {chi}"
        )))
    }
}

pub fn check_kn(kn: f64) -> Result<f64> {
    if kn > 0.0 && kn.is_finite() {
        Ok(kn)
    } else {
        Err(Error::InvalidConfig(format!(
            "Knudsen number must be positive, got {kn}"
        )))
    }
}

pub fn parse_reduction(s: &str) -> Result<Reduction> {
    match s.trim().to_ascii_lowercase().as_str() {
        "planar" | "2d" => Ok(Reduction::Planar),
        "full3d" | "full" | "3d" => Ok(Reduction::Full3d),
        other => Err(Error::InvalidConfig(format!(
            "unknown reduction `{other}` (expected planar or full3d)"
        ))),
    }
}

/// Parses a radial-count list such as `"2,2,1,1"`.
pub fn parse_radial_counts(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidConfig(format!(
            "malformed radial-count list `{s}`: expected comma-separated positive integers like 2,2,1,1"
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>().map_err(|_| {
                Error::InvalidConfig(format!(
                    "malformed radial-count list `{s}`: `{p}` is not a non-negative integer"
                ))
            })
        })
        .collect()
}

/// Resolves a theory from a name (`G20`, `custom`) and the explicit
/// rank/radial-count description.
pub fn resolve_theory(name: Option<&str>, nd: Option<usize>, m: Option<&str>, red: Reduction) -> Result<MomentTheory> {
    let explicit = nd.is_some() || m.is_some();
    match name.map(str::trim) {
        Some(n) if !n.eq_ignore_ascii_case("custom") => {
            if explicit {
                return Err(Error::InvalidConfig(format!(
                    "conflicting flags: --theory {n} with --nd/--m; use --theory custom for an explicit list"
                )));
            }
            grad_theory_by_name(n, red)
        }
        _ if explicit || name.is_some() => {
            let (Some(nd), Some(m)) = (nd, m) else {
                return Err(Error::InvalidConfig(
                    "a custom theory needs both --nd <max rank> and --m <radial counts>, e.g. --nd 3 --m 2,2,1,1"
                        .into(),
                ));
            };
            MomentTheory::custom(nd, parse_radial_counts(m)?, red)
        }
        _ => grad_theory_by_name("G20", red),
    }
}

/// Parses `a:b:n` into `n` equally spaced accommodation coefficients.
pub fn parse_scan_range(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| {
        Error::InvalidConfig(format!(
            "malformed scan range `{s}`: {why} (expected a:b:n, e.g. 0.1:1:10)"
        ))
    };
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad("need three fields"));
    }
    let a: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
    let b: f64 = parts[1].parse().map_err(|_| bad("end is not a number"))?;
    let n: usize = parts[2].parse().map_err(|_| bad("count is not a positive integer"))?;
    if n == 0 || n > 100_000 {
        return Err(bad("count must lie in 1..=100000"));
    }
    check_chi(a)?;
    check_chi(b)?;
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Relative paths are placed under `$MOMENT_OBC_OUT_DIR` when it is set.
pub fn output_path(p: &Path) -> Result<PathBuf> {
    let full = match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p.to_path_buf(),
    };
    if let Some(parent) = full.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_and_custom_agree() {
        let a = resolve_theory(Some("G20"), None, None, Reduction::Planar).unwrap();
        let b = resolve_theory(Some("custom"), Some(3), Some("2,2,1,1"), Reduction::Planar).unwrap();
        assert_eq!(a.radial_counts, b.radial_counts);
        assert_eq!(a.max_rank, b.max_rank);
        assert_eq!(a.moment_count(), b.moment_count());
    }

    #[test]
    fn theory_errors() {
        assert!(resolve_theory(Some("G148"), None, None, Reduction::Planar).is_err());
        assert!(resolve_theory(Some("G20"), Some(3), None, Reduction::Planar).is_err());
        assert!(resolve_theory(Some("custom"), Some(3), None, Reduction::Planar).is_err());
        assert!(resolve_theory(None, Some(3), Some("2,,1"), Reduction::Planar).is_err());
        assert!(resolve_theory(None, Some(3), Some("2,2,1"), Reduction::Planar).is_err());
        assert_eq!(resolve_theory(None, None, None, Reduction::Planar).unwrap().name, "G20");
    }

    #[test]
    fn scan_range() {
        assert_eq!(parse_scan_range("0.5:1:3").unwrap(), vec![0.5, 0.75, 1.0]);
        assert_eq!(parse_scan_range("0.3:0.3:1").unwrap(), vec![0.3]);
        for bad in [
            "",
            "1:2",
            "0:1:3",
            "0.1:1:0",
            "a:1:2",
            "0.1:1.5:2",
            "0.1:1:2:3",
            "NaN:1:2",
        ] {
            assert!(parse_scan_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn run_file() {
        let f = RunFile::from_json(r#"{"theory":"G35","chi":0.5,"kn":0.1}"#).unwrap();
        assert_eq!(f.theory.as_deref(), Some("G35"));
        assert!(RunFile::from_json(r#"{"kn":-1}"#).is_err());
        assert!(RunFile::from_json(r#"{"unknown":1}"#).is_err());
        assert!(RunFile::from_json(r#"{"bc":"periodic"}"#).is_err());
        assert!(RunFile::from_json("[").is_err());
    }
}
