use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::assembly::{AssemblyOptions, ThetaStrategy};
use crate::driver::StudyConfig;
use crate::error::{Error, Result};
use crate::linalg::PreconditionerKind;

use super::StudyArgs;

/// Keys accepted in a `--config` file. Every key is optional; flags given on
/// the command line win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub dim: Option<usize>,
    pub degree: Option<usize>,
    pub sigma: Option<f64>,
    pub max_dofs: Option<usize>,
    pub initial_n: Option<usize>,
    pub max_levels: Option<usize>,
    pub final_time: Option<f64>,
    pub target_error: Option<f64>,
    pub rtol: Option<f64>,
    pub restart: Option<usize>,
    pub max_iter: Option<usize>,
    pub preconditioner: Option<PreconditionerKind>,
    pub theta_scale: Option<f64>,
    pub mesh: Option<PathBuf>,
    pub nu: Option<f64>,
    pub source: Option<f64>,
    pub out: Option<PathBuf>,
    pub vtk: Option<bool>,
    pub dump_matrix: Option<bool>,
}

impl FileConfig {
    /// Reads `key = value` lines. Values follow TOML syntax except that bare
    /// words (`problem = peak`) are taken as strings.
    pub fn parse(text: &str) -> Result<Self> {
        let mut normalized = String::with_capacity(text.len());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected key = value, found `{line}`"),
                });
            };
            let (key, value) = (key.trim().replace('-', "_"), value.trim());
            let is_literal = value.starts_with('"')
                || value.starts_with('\'')
                || value == "true"
                || value == "false"
                || value.parse::<f64>().is_ok();
            if is_literal {
                normalized.push_str(&format!("{key} = {value}\n"));
            } else {
                normalized.push_str(&format!("{key} = \"{value}\"\n"));
            }
        }
        toml::from_str(&normalized).map_err(|e| Error::Parse {
            line: 0,
            msg: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Study settings after merging defaults, the config file and the flags.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub study: StudyConfig,
    pub mesh: Option<PathBuf>,
    pub nu: f64,
    pub source: f64,
    pub out: PathBuf,
    pub vtk: bool,
    pub dump_matrix: bool,
}

pub fn resolve(args: &StudyArgs, file: &FileConfig) -> Result<Resolved> {
    let defaults = StudyConfig::default();
    let sigma = args.sigma.or(file.sigma).unwrap_or(defaults.sigma);
    let theta_scale = args.theta_scale.or(file.theta_scale).unwrap_or(1.0);
    if !(theta_scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "theta scale must be positive, got {theta_scale}"
        )));
    }
    let study = StudyConfig {
        problem: args
            .problem
            .clone()
            .or_else(|| file.problem.clone())
            .unwrap_or(defaults.problem),
        dim: args.dim.or(file.dim).unwrap_or(defaults.dim),
        degree: args.degree.or(file.degree).unwrap_or(defaults.degree),
        sigma,
        max_dofs: args.max_dofs.or(file.max_dofs).unwrap_or(defaults.max_dofs),
        initial_n: args
            .initial_n
            .or(file.initial_n)
            .unwrap_or(defaults.initial_n),
        max_levels: args
            .max_levels
            .or(file.max_levels)
            .unwrap_or(defaults.max_levels),
        final_time: args
            .final_time
            .or(file.final_time)
            .unwrap_or(defaults.final_time),
        target_error: args.target_error.or(file.target_error),
        gmres: crate::linalg::GmresOptions {
            restart: args
                .restart
                .or(file.restart)
                .unwrap_or(defaults.gmres.restart),
            rtol: args.rtol.or(file.rtol).unwrap_or(defaults.gmres.rtol),
            max_iter: args
                .max_iter
                .or(file.max_iter)
                .unwrap_or(defaults.gmres.max_iter),
            preconditioner: args
                .preconditioner
                .or(file.preconditioner)
                .unwrap_or(defaults.gmres.preconditioner),
        },
        assembly: AssemblyOptions {
            theta: ThetaStrategy::InverseEstimate { scale: theta_scale },
            load_order: None,
        },
    };
    study.validate()?;
    let nu = args.nu.or(file.nu).unwrap_or(1.0);
    let source = args.source.or(file.source).unwrap_or(1.0);
    let mesh = args.mesh.clone().or_else(|| file.mesh.clone());
    if mesh.is_some() && study.problem != "custom" {
        return Err(Error::InvalidArgument(
            "--mesh is only available with --problem custom".into(),
        ));
    }
    if (args.nu.is_some() || args.source.is_some()) && study.problem != "custom" {
        return Err(Error::InvalidArgument(
            "--nu and --source only apply to --problem custom".into(),
        ));
    }
    Ok(Resolved {
        study,
        mesh,
        nu,
        source,
        out: args
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("stfem-out")),
        vtk: args.vtk || file.vtk.unwrap_or(false),
        dump_matrix: args.dump_matrix || file.dump_matrix.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_words_and_comments() {
        let c = FileConfig::parse(
            "# study\nproblem = peak\ndim = 2\nsigma = 0.5 # adaptive\npreconditioner = \"jacobi\"\nvtk = true\n",
        )
        .unwrap();
        assert_eq!(c.problem.as_deref(), Some("peak"));
        assert_eq!(c.dim, Some(2));
        assert_eq!(c.sigma, Some(0.5));
        assert_eq!(c.preconditioner, Some(PreconditionerKind::Jacobi));
        assert_eq!(c.vtk, Some(true));
    }

    #[test]
    fn unknown_key_and_bad_line() {
        assert!(FileConfig::parse("colour = red").is_err());
        assert!(matches!(
            FileConfig::parse("dim 2"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
