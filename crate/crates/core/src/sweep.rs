//! Batches of independent verification cells run on a worker pool and merged
//! in name order.

use crate::brackets::{verify_lie_algebra, Engine, GeneratorKind};
use crate::field_sector::field_refinement;
use crate::form::{FormKind, FormOfDynamics};
use crate::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget, GaussianProfile};
use crate::scenario::Scenario;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn default_profile() -> AmplitudeSpec {
    AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 1.0, width: 1.0, shift: [0.3, -0.2, 0.4, 0.1], target: AmplitudeTarget::Both, seed: 11 }
}

fn default_levels() -> usize {
    3
}

fn default_min_order() -> f64 {
    1.9
}

fn default_points() -> usize {
    4
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CellSpec {
    /// Closure of the exact-operator field sector on nested lattices.
    FieldRefinement {
        name: String,
        n0: usize,
        half_box: f64,
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default = "default_min_order")]
        min_order: f64,
        #[serde(default = "default_profile")]
        profile: AmplitudeSpec,
    },
    /// Lie-algebra suite on random on-shell points of a scenario.
    LieAlgebra {
        name: String,
        /// Scenario file; the built-in two-charge scenario when absent.
        #[serde(default)]
        scenario: Option<String>,
        form: FormKind,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl CellSpec {
    pub fn name(&self) -> &str {
        match self {
            CellSpec::FieldRefinement { name, .. } | CellSpec::LieAlgebra { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    #[serde(default)]
    pub cells: Vec<CellSpec>,
}

impl SweepManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub name: String,
    pub kind: String,
    pub status: CellStatus,
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    pub order: Option<f64>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: Vec<CellResult>,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

fn run_cell(cell: &CellSpec, base: &std::path::Path) -> CellResult {
    let mut out = CellResult { name: cell.name().into(), kind: String::new(), status: CellStatus::Pass, spacings: vec![], residuals: vec![], order: None, message: None };
    match cell {
        CellSpec::FieldRefinement { n0, levels, half_box, min_order, profile, .. } => {
            out.kind = "field-refinement".into();
            if *n0 < 2 || !(2..=4).contains(levels) || !(*half_box > 0.0) {
                out.status = CellStatus::Error;
                out.message = Some("n0 must be at least 2, levels in 2..=4 and half_box positive".into());
                return out;
            }
            let rep = field_refinement(*n0, *levels, *half_box, &GaussianProfile::from_spec(profile), *min_order);
            out.spacings = rep.spacings;
            out.residuals = rep.residuals;
            out.order = Some(rep.order);
            out.status = if rep.pass { CellStatus::Pass } else { CellStatus::Fail };
        }
        CellSpec::LieAlgebra { scenario, form, points, tol, seed, .. } => {
            out.kind = "lie-algebra".into();
            let res = (|| -> Result<(Vec<f64>, bool, f64)> {
                let mut s = match scenario {
                    Some(p) => Scenario::load(&base.join(p))?,
                    None => Scenario::two_charges(form.clone()),
                };
                s.form = form.clone();
                let f = FormOfDynamics::new(form.clone())?;
                let spacing = s.lattice.as_ref().map_or(0.0, |l| l.spacing);
                let mut residuals = Vec::new();
                let mut pass = true;
                for p in s.random_on_shell(*points, *seed)? {
                    let rep = verify_lie_algebra(&p, &GeneratorKind::General(f.clone()), Engine::AutoDiff, *tol, true)?;
                    residuals.push(rep.max_residual);
                    pass &= rep.pass;
                }
                Ok((residuals, pass, spacing))
            })();
            match res {
                Ok((r, pass, h)) => {
                    out.spacings = vec![h; r.len()];
                    out.residuals = r;
                    out.status = if pass { CellStatus::Pass } else { CellStatus::Fail };
                }
                Err(e) => {
                    out.status = CellStatus::Error;
                    out.message = Some(e.to_string());
                }
            }
        }
    }
    out
}

/// Runs every cell with `jobs` workers. Scenario paths resolve against `base`.
/// The summary is sorted by cell name, so it does not depend on `jobs`.
pub fn run_sweep(manifest: &SweepManifest, jobs: usize, base: &std::path::Path) -> Result<SweepSummary> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::Validation(e.to_string()))?;
    let mut cells: Vec<CellResult> = pool.install(|| manifest.cells.par_iter().map(|c| run_cell(c, base)).collect());
    cells.sort_by(|a, b| a.name.cmp(&b.name));
    let count = |s| cells.iter().filter(|c| c.status == s).count();
    let (passed, failed, errors) = (count(CellStatus::Pass), count(CellStatus::Fail), count(CellStatus::Error));
    Ok(SweepSummary { cells, passed, failed, errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_manifest() {
        let s = run_sweep(&SweepManifest::from_toml("").unwrap(), 2, std::path::Path::new(".")).unwrap();
        assert!(s.cells.is_empty());
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let m = SweepManifest::from_toml(
            r#"
[[cells]]
kind = "field-refinement"
name = "b-field"
n0 = 2
half_box = 3.0
min_order = 0.0

[[cells]]
kind = "lie-algebra"
name = "a-instant"
form = { kind = "instant" }
points = 1
tol = 1e-2

[[cells]]
kind = "lie-algebra"
name = "c-missing"
scenario = "does-not-exist.toml"
form = { kind = "lightcone" }
"#,
        )
        .unwrap();
        let base = std::path::Path::new(".");
        let (one, many) = (run_sweep(&m, 1, base).unwrap(), run_sweep(&m, 4, base).unwrap());
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
        assert_eq!(one.cells[0].name, "a-instant");
        assert_eq!(one.cells[2].status, CellStatus::Error);
    }
}
