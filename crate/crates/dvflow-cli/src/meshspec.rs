//! Mesh specification strings.
//!
//! ```text
//! torus:<family>:<n>[:<perturbation>]
//! square:<family>:<n>[:<perturbation>]
//! prism:<family>:<n>:<layers>[:<perturbation>]
//! file:<path>
//! ```
//!
//! `<family>` is `equilateral` (alias `B`) or `perturbed` (alias `A`).
//! The perturbation defaults to 0.15 for the perturbed family; the seed
//! comes from the experiment configuration.

use dvflow::mesh::{build_square_dirichlet, build_torus_mesh, extrude_prismatic, read_mesh, Family, Mesh};
use dvflow::verify::DEFAULT_PERTURBATION;
use std::f64::consts::PI;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    Torus { family: Family, n: usize, perturbation: f64 },
    Square { family: Family, n: usize, perturbation: f64 },
    Prism { family: Family, n: usize, layers: usize, perturbation: f64 },
    File(PathBuf),
}

fn invalid(spec: &str, reason: &str) -> dvflow::Error {
    dvflow::Error::InvalidArgument { field: "mesh".into(), reason: format!("`{spec}`: {reason}") }
}

impl std::str::FromStr for MeshSpec {
    type Err = dvflow::Error;
    fn from_str(s: &str) -> dvflow::Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(MeshSpec::File(path.into()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 3 {
            return Err(invalid(s, "expected <kind>:<family>:<n>[...]"));
        }
        let family: Family = parts[1].parse().map_err(|_| invalid(s, "unknown family"))?;
        let int = |t: &str| t.parse::<usize>().map_err(|_| invalid(s, &format!("`{t}` is not a count")));
        let real = |t: Option<&&str>| -> dvflow::Result<f64> {
            match t {
                Some(t) => t.parse::<f64>().map_err(|_| invalid(s, &format!("`{t}` is not a number"))),
                None => Ok(if family == Family::Perturbed { DEFAULT_PERTURBATION } else { 0.0 }),
            }
        };
        let n = int(parts[2])?;
        let spec = match parts[0] {
            "torus" if parts.len() <= 4 => MeshSpec::Torus { family, n, perturbation: real(parts.get(3))? },
            "square" if parts.len() <= 4 => MeshSpec::Square { family, n, perturbation: real(parts.get(3))? },
            "prism" if (4..=5).contains(&parts.len()) => MeshSpec::Prism { family, n, layers: int(parts[3])?, perturbation: real(parts.get(4))? },
            "torus" | "square" | "prism" => return Err(invalid(s, "wrong number of fields")),
            _ => return Err(invalid(s, "kind must be torus, square, prism or file")),
        };
        Ok(spec)
    }
}

impl MeshSpec {
    pub fn build(&self, seed: u64) -> dvflow::Result<Mesh> {
        match self {
            MeshSpec::Torus { family, n, perturbation } => build_torus_mesh(*n, *family, *perturbation, seed),
            MeshSpec::Square { family, n, perturbation } => build_square_dirichlet(*n, *family, *perturbation, seed),
            MeshSpec::Prism { family, n, layers, perturbation } => {
                let layer = build_torus_mesh(*n, *family, *perturbation, seed)?;
                if *layers < 2 {
                    return Err(invalid("prism", "need at least 2 layers"));
                }
                extrude_prismatic(&layer, *layers, &[2.0 * PI / *layers as f64])
            }
            MeshSpec::File(p) => read_mesh(&std::fs::read_to_string(p)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        assert_eq!("torus:perturbed:32:0.15".parse::<MeshSpec>().unwrap(), MeshSpec::Torus { family: Family::Perturbed, n: 32, perturbation: 0.15 });
        assert_eq!("torus:B:16".parse::<MeshSpec>().unwrap(), MeshSpec::Torus { family: Family::Equilateral, n: 16, perturbation: 0.0 });
        assert_eq!("prism:A:8:4".parse::<MeshSpec>().unwrap(), MeshSpec::Prism { family: Family::Perturbed, n: 8, layers: 4, perturbation: DEFAULT_PERTURBATION });
        assert!(matches!("file:x.dvm".parse::<MeshSpec>().unwrap(), MeshSpec::File(_)));
        for bad in ["torus", "torus:x:8", "torus:A:eight", "disk:A:8", "prism:A:8", "torus:A:8:0.1:3"] {
            assert!(bad.parse::<MeshSpec>().is_err(), "{bad}");
        }
    }
}
