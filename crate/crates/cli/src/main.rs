use clap::{Args, Parser, Subcommand, ValueEnum};
use relform::brackets::{verify_currie, verify_lie_algebra, BracketReport, Engine, GeneratorKind};
use relform::distributions::{reduce_covariant_to_3d, ReductionReport, ReductionVariant};
use relform::dynamics::{integrate_covariant, trajectory_csv, Gauge};
use relform::equivalence::{conservation_check, form_equivalence, EquivalenceReport};
use relform::field_sector::{field_refinement, kernel_closure_residual, ConvergenceReport};
use relform::form::{FormKind, FormOfDynamics};
use relform::lattice::{AmplitudeKind, AmplitudeSpec, AmplitudeTarget, GaussianProfile};
use relform::report::{output_dir, write_json, write_text, Report, RunManifest};
use relform::scenario::Scenario;
use relform::sweep::{run_sweep, SweepManifest, SweepSummary};
use relform::tensors::{FourVector, FramePath};
use relform::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relform", version, about = "Poincare generators and covariant dynamics of charges and fields in any form of dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Run one verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// Run a manifest of verification cells in parallel.
    Sweep(SweepArgs),
    /// Summarize report files.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; a built-in two-charge scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory (default: $RELFORM_OUT, else ./relform-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the field amplitude seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Include field modes in the CSV.
    #[arg(long)]
    modes: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Algebra,
    Currie,
    Distributions,
    Conservation,
    Equivalence,
}

#[derive(Args)]
struct VerifyArgs {
    kind: VerifyKind,
    #[command(flatten)]
    common: Common,
    /// Random on-shell points per form.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Residual tolerance (suite default when omitted).
    #[arg(long)]
    tol: Option<f64>,
    /// Nested lattices in the field-sector convergence study: 0 skips it, otherwise 2 to 4.
    #[arg(long, default_value_t = 3)]
    refine: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep manifest TOML.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn load_scenario(c: &Common, default_form: FormKind) -> Result<Scenario> {
    let mut s = match &c.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::two_charges(default_form),
    };
    if let (Some(seed), Some(l)) = (c.seed, s.lattice.as_mut()) {
        l.amplitude.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn tolerances(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn emit<T: Serialize>(dir: &Path, file: &str, command: &str, digest: &str, seed: u64, tol: BTreeMap<String, f64>, pass: bool, body: T) -> Result<()> {
    let manifest = RunManifest::new(command, digest, seed, tol, vec![file.to_string()]);
    write_json(&dir.join(file), &Report { manifest, pass, body })
}

fn simulate(a: &SimulateArgs) -> Result<bool> {
    let s = load_scenario(&a.common, FormKind::Instant)?;
    let dir = output_dir(a.common.out.as_deref());
    let pt = s.initial_point()?;
    let gauge = Gauge::Form { form: s.form_of_dynamics()?, frame: s.frame.clone() };
    let traj = integrate_covariant(&pt, &gauge, &s.integrator)?;
    if traj.max_constraint_drift > s.integrator.drift_bound {
        return Err(Error::Integration(format!("constraint drift {:e} exceeds {:e}", traj.max_constraint_drift, s.integrator.drift_bound)));
    }
    write_text(&dir.join("trajectory.csv"), &trajectory_csv(&traj, a.modes))?;
    let seed = s.lattice.as_ref().map_or(0, |l| l.amplitude.seed);
    let manifest = RunManifest::new("simulate", &s.digest(), seed, tolerances(&[("drift_bound", s.integrator.drift_bound)]), vec!["trajectory.csv".into()]);
    write_json(&dir.join("trajectory.manifest.json"), &manifest)?;
    Ok(true)
}

#[derive(Serialize)]
struct FormSummary {
    form: String,
    points: usize,
    max_residual: f64,
    pass: bool,
    reports: Vec<BracketReport>,
}

#[derive(Serialize)]
struct AlgebraBody {
    forms: Vec<FormSummary>,
    kernel_closure_residual: f64,
    field_refinement: Option<ConvergenceReport>,
}

fn standard_forms() -> Vec<FormKind> {
    vec![FormKind::Instant, FormKind::Lightcone, FormKind::Hyperboloid { a: 1.0 }]
}

fn per_form(s: &Scenario, points: usize, seed: u64, run: &dyn Fn(&relform::phase::PhaseSpacePoint, &FormOfDynamics) -> Result<BracketReport>) -> Result<Vec<FormSummary>> {
    let mut out = Vec::new();
    for kind in standard_forms() {
        let form = FormOfDynamics::new(kind.clone())?;
        let sc = Scenario { form: kind, ..s.clone() };
        let mut reports = Vec::new();
        for p in sc.random_on_shell(points, seed)? {
            reports.push(run(&p, &form)?);
        }
        let max_residual = reports.iter().map(|r| r.max_residual).fold(0.0, f64::max);
        let pass = reports.iter().all(|r| r.pass);
        out.push(FormSummary { form: form.name().into(), points, max_residual, pass, reports });
    }
    Ok(out)
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let c = &a.common;
    let dir = output_dir(c.out.as_deref());
    let seed = c.seed.unwrap_or(0);
    match a.kind {
        VerifyKind::Algebra => {
            let s = load_scenario(c, FormKind::Instant)?;
            let tol = a.tol.unwrap_or(1e-6);
            let forms = per_form(&s, a.points, seed, &|p, f| verify_lie_algebra(p, &GeneratorKind::General(f.clone()), Engine::AutoDiff, tol, true))?;
            let kernel = kernel_closure_residual();
            if a.refine == 1 || a.refine > 4 {
                return Err(Error::Validation("--refine takes 0 or 2..=4 levels".into()));
            }
            let refinement = (a.refine >= 2).then(|| {
                let prof = GaussianProfile::from_spec(&AmplitudeSpec { kind: AmplitudeKind::Gaussian, scale: 1.0, width: 1.0, shift: [0.3, -0.2, 0.4, 0.1], target: AmplitudeTarget::Both, seed: 11 });
                field_refinement(4, a.refine, 3.0, &prof, 1.9)
            });
            let pass = forms.iter().all(|f| f.pass) && kernel == 0.0 && refinement.as_ref().map_or(true, |r| r.pass);
            let body = AlgebraBody { forms, kernel_closure_residual: kernel, field_refinement: refinement };
            emit(&dir, "verify-algebra.json", "verify algebra", &s.digest(), seed, tolerances(&[("closure", tol), ("min_order", 1.9)]), pass, body)?;
            Ok(pass)
        }
        VerifyKind::Currie => {
            let s = load_scenario(c, FormKind::Instant)?;
            let tol = a.tol.unwrap_or(1e-8);
            let forms = per_form(&s, a.points, seed, &|p, f| verify_currie(p, &GeneratorKind::General(f.clone()), f, Engine::AutoDiff, tol, 1e-10, true))?;
            let pass = forms.iter().all(|f| f.pass);
            emit(&dir, "verify-currie.json", "verify currie", &s.digest(), seed, tolerances(&[("currie", tol), ("instant", 1e-10)]), pass, forms)?;
            Ok(pass)
        }
        VerifyKind::Distributions => {
            #[derive(Serialize)]
            struct Body {
                variants: Vec<ReductionReport>,
                control: ReductionReport,
                variants_agree: bool,
            }
            let v: Vec<ReductionReport> = [ReductionVariant::First, ReductionVariant::Second].into_iter().map(reduce_covariant_to_3d).collect();
            let control = reduce_covariant_to_3d(ReductionVariant::PerturbedControl);
            let agree = v[0].coefficient_a == v[1].coefficient_a && v[0].coefficient_adag == v[1].coefficient_adag;
            let pass = v.iter().all(|r| r.pass) && agree && !control.pass;
            emit(&dir, "verify-distributions.json", "verify distributions", "", 0, BTreeMap::new(), pass, Body { variants: v, control, variants_agree: agree })?;
            Ok(pass)
        }
        VerifyKind::Conservation => {
            let mut s = load_scenario(c, FormKind::Hyperboloid { a: 1.0 })?;
            if c.scenario.is_none() {
                let mut frame = FramePath::rotating(3, 0.7);
                frame.zdot = FourVector::new(-1.0, 0.1, 0.0, 0.0);
                s.frame = frame;
                s.integrator.tau_span = [0.0, 0.5];
            }
            let tol = a.tol.unwrap_or(1e-6);
            let (rep, _) = conservation_check(&s.initial_point()?, &s.form_of_dynamics()?, &s.frame, &s.integrator, tol)?;
            let pass = rep.pass;
            emit(&dir, "verify-conservation.json", "verify conservation", &s.digest(), seed, tolerances(&[("drift_per_tau", tol)]), pass, rep)?;
            Ok(pass)
        }
        VerifyKind::Equivalence => {
            let s = load_scenario(c, FormKind::Instant)?;
            let tol = a.tol.unwrap_or(1e-5);
            let rep: EquivalenceReport = form_equivalence(&s.initial_point()?, s.integrator.step.min(1.0 / 64.0), 8, tol)?;
            let pass = rep.pass;
            emit(&dir, "verify-equivalence.json", "verify equivalence", &s.digest(), seed, tolerances(&[("world_line", tol)]), pass, rep)?;
            Ok(pass)
        }
    }
}

fn sweep(a: &SweepArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&a.manifest)?;
    let m = SweepManifest::from_toml(&text)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let summary: SweepSummary = run_sweep(&m, a.jobs, base)?;
    let dir = output_dir(a.out.as_deref());
    let digest = hex_digest(text.as_bytes());
    let pass = summary.failed == 0 && summary.errors == 0;
    emit(&dir, "sweep-summary.json", "sweep", &digest, 0, BTreeMap::new(), pass, &summary)?;
    for c in &summary.cells {
        println!("{:<24} {:<18} {:<5} {}", c.name, c.kind, format!("{:?}", c.status).to_lowercase(), c.order.map_or(String::new(), |o| format!("order {o:.2}")));
    }
    if summary.errors > 0 {
        return Err(Error::Validation(format!("{} sweep cells could not run", summary.errors)));
    }
    Ok(pass)
}

fn hex_digest(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

fn report(a: &ReportArgs) -> Result<bool> {
    let mut all = true;
    for p in &a.inputs {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        let pass = v.get("pass").and_then(|b| b.as_bool()).ok_or_else(|| Error::Parse(format!("{}: not a relform report", p.display())))?;
        let m = &v["manifest"];
        println!("{} {} [{}] digest {}", if pass { "PASS" } else { "FAIL" }, p.display(), m["command"].as_str().unwrap_or("?"), m["digest"].as_str().unwrap_or("?"));
        all &= pass;
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
