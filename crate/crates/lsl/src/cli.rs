//! Command-line front end: stage commands over the library plus the
//! end-to-end reproduction bundle. All output goes to files; stdout carries
//! a terse summary. Exit codes: 0 success, 1 verification failure, 2
//! usage or input error.

use crate::conservation::{self, CurrentEntry};
use crate::expr::eval::{lsl_seed, FnTable, ZeroCertificate};
use crate::expr::{Expr, Var};
use crate::lang;
use crate::model::{canonical_model, nondimensionalize, ConventionFlag};
use crate::numeric::{self, Boundary, FieldState, GridSpec};
use crate::reference::DiffVerdict;
use crate::report::{normalized_json, sha256_hex, RunReport};
use crate::symmetry::{self, VectorField};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "lsl",
    version,
    about = "Symbolic Lie-symmetry and conservation-law laboratory for a \
             thermal-reservoir master equation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify point symmetries of the model (catalog by default).
    VerifySymmetries {
        /// Verify a user-supplied generator from a .vf file instead.
        #[arg(long)]
        vf: Option<PathBuf>,
        /// Restrict to a comma-separated list of catalog labels.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Export the determining system (JSON) here.
        #[arg(long)]
        determining: Option<PathBuf>,
    },
    /// Reduce the model along a catalog generator and solve the reduction.
    Reduce {
        #[arg(long, default_value = "G3")]
        generator: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive the adjoint equation and its invariant solution.
    Adjoint {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate conserved-current triplets with certificates and diffs.
    Claws {
        /// One of G1, G2, G3, G2', or all.
        #[arg(long, default_value = "all")]
        generator: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the finite-difference lab from a .cfg file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "lsl-run")]
        out_dir: PathBuf,
    },
    /// Full reproduction: symmetries, algebra, reduction, adjoint,
    /// currents, diffs, and the reference numeric run.
    Reproduce {
        /// Produce the symbolic-only bundle.
        #[arg(long)]
        skip_numeric: bool,
        #[arg(long, default_value = "lsl-bundle")]
        out_dir: PathBuf,
    },
}

/// Entry point used by the binary and by tests.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let result = match cli.cmd {
        Cmd::VerifySymmetries {
            vf,
            only,
            out,
            determining,
        } => cmd_verify_symmetries(vf, only, out, determining),
        Cmd::Reduce { generator, out } => cmd_reduce(&generator, out),
        Cmd::Adjoint { out } => cmd_adjoint(out),
        Cmd::Claws { generator, out } => cmd_claws(&generator, out),
        Cmd::Simulate { config, out_dir } => cmd_simulate(&config, &out_dir),
        Cmd::Reproduce {
            skip_numeric,
            out_dir,
        } => cmd_reproduce(skip_numeric, &out_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_VERIFICATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

impl From<lang::LangError> for CliError {
    fn from(e: lang::LangError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<symmetry::SymmetryError> for CliError {
    fn from(e: symmetry::SymmetryError) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<conservation::ConservationError> for CliError {
    fn from(e: conservation::ConservationError) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<numeric::LabError> for CliError {
    fn from(e: numeric::LabError) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn write_json(path: &Path, json: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, json)?;
    Ok(())
}

fn model_input_hash() -> (String, String) {
    let p = canonical_model();
    (
        "model".to_string(),
        sha256_hex(lang::print_expr(p.residual()).as_bytes()),
    )
}

/// Every report embeds the model hash so bundles are self-describing.
fn stamp_model<T: serde::Serialize>(mut rep: RunReport<T>) -> RunReport<T> {
    let (k, v) = model_input_hash();
    rep.inputs.insert(k, v);
    rep
}

// ----- verify-symmetries -----

#[derive(Serialize)]
struct RepairInfo {
    label: String,
    field: String,
    note: String,
}

#[derive(Serialize)]
struct SymmetryResult {
    label: String,
    verdict: String,
    expected_exact: bool,
    residual: String,
    repairs: Vec<RepairInfo>,
}

fn cmd_verify_symmetries(
    vf: Option<PathBuf>,
    only: Vec<String>,
    out: Option<PathBuf>,
    determining: Option<PathBuf>,
) -> Result<i32, CliError> {
    let start = Instant::now();
    let p = canonical_model();
    let mut input_file: Option<(String, Vec<u8>)> = None;

    let (fields, expected): (Vec<(String, VectorField)>, BTreeMap<String, bool>) = match &vf {
        Some(path) => {
            let text = std::fs::read(path)?;
            let field = lang::parse_vectorfield(&String::from_utf8_lossy(&text))?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "user".to_string());
            input_file = Some((path.display().to_string(), text));
            (
                vec![(label.clone(), field)],
                [(label, true)].into_iter().collect(),
            )
        }
        None => {
            let cat = symmetry::catalog();
            let expected = cat
                .iter()
                .map(|e| (e.label.clone(), e.expected_exact))
                .collect();
            (
                cat.into_iter().map(|e| (e.label, e.field)).collect(),
                expected,
            )
        }
    };
    let fields: Vec<(String, VectorField)> = if only.is_empty() {
        fields
    } else {
        fields
            .into_iter()
            .filter(|(l, _)| only.iter().any(|o| o == l))
            .collect()
    };
    if fields.is_empty() {
        return Err(CliError::Usage("no generators selected".to_string()));
    }

    let verdicts = symmetry::verify_generators(&fields, &p)?;
    let mut results = Vec::new();
    let mut failed_expected = false;
    for v in &verdicts {
        let expect_pass = expected.get(&v.label).copied().unwrap_or(true);
        if expect_pass && !v.passes {
            failed_expected = true;
        }
        println!(
            "{}: {}{}",
            v.label,
            if v.passes { "PASS" } else { "FAIL" },
            if v.passes {
                String::new()
            } else {
                format!("  residual = {}", v.residual)
            }
        );
        results.push(SymmetryResult {
            label: v.label.clone(),
            verdict: if v.passes { "pass" } else { "fail" }.to_string(),
            expected_exact: expect_pass,
            residual: lang::print_expr(&v.residual),
            repairs: v
                .repairs
                .iter()
                .map(|r| RepairInfo {
                    label: r.label.clone(),
                    field: r.field.to_string(),
                    note: r.note.clone(),
                })
                .collect(),
        });
    }

    if let Some(path) = &determining {
        let sys = symmetry::determining_system(&p)?;
        #[derive(Serialize)]
        struct Entry {
            monomial: String,
            coefficient: String,
        }
        let payload: Vec<Entry> = sys
            .iter()
            .map(|e| Entry {
                monomial: lang::print_expr(&e.monomial),
                coefficient: lang::print_expr(&e.coefficient),
            })
            .collect();
        let rep = stamp_model(RunReport::new("determining", payload).with_timing(start.elapsed()));
        write_json(path, &rep.to_json())?;
        println!(
            "determining system: {} equations -> {}",
            sys.len(),
            path.display()
        );
    }

    if let Some(path) = &out {
        let (k, v) = model_input_hash();
        let mut rep = RunReport::new("verify-symmetries", results).with_timing(start.elapsed());
        rep.inputs.insert(k, v);
        if let Some((name, bytes)) = &input_file {
            rep.inputs.insert(name.clone(), sha256_hex(bytes));
        }
        write_json(path, &rep.to_json())?;
    }

    Ok(if failed_expected {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    })
}

// ----- reduce -----

#[derive(Serialize)]
struct ReducePayload {
    generator: String,
    invariants: [String; 3],
    reduced_equation: String,
    solved_form: Option<String>,
    solution: String,
    solution_residual: String,
    reference_diff: DiffVerdict,
    flags: Vec<ConventionFlag>,
}

fn catalog_field(label: &str) -> Result<VectorField, CliError> {
    symmetry::catalog()
        .into_iter()
        .find(|e| e.label == label)
        .map(|e| e.field)
        .or_else(|| {
            symmetry::repair_candidates()
                .into_iter()
                .find(|r| r.label == label)
                .map(|r| r.field)
        })
        .ok_or_else(|| CliError::Usage(format!("unknown generator '{label}'")))
}

fn cmd_reduce(generator: &str, out: Option<PathBuf>) -> Result<i32, CliError> {
    let start = Instant::now();
    let p = canonical_model();
    let field = catalog_field(generator)?;
    let sol = symmetry::invariant_solution(&p, &field)?;
    let red = &sol.reduction;
    let inv = red.invariants.as_list();
    let residual = p
        .apply_to(&sol.solution)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let diff = crate::reference::structural_diff(
        red.system.residual(),
        &crate::reference::reduced_equation(),
    );
    println!(
        "invariants: mu = {}, nu = {}, Phi = {}",
        inv[0], inv[1], inv[2]
    );
    println!("reduced equation: {} = 0", red.system.residual());
    println!("invariant solution: {}", sol.solution);
    println!(
        "substitution check: residual = {} ({})",
        residual,
        if residual.is_zero() {
            "exact zero"
        } else {
            "NONZERO"
        }
    );
    for f in &sol.flags {
        println!("flag [{}]: {}", f.context, f.detail);
    }
    let payload = ReducePayload {
        generator: generator.to_string(),
        invariants: [
            lang::print_expr(&inv[0]),
            lang::print_expr(&inv[1]),
            lang::print_expr(&inv[2]),
        ],
        reduced_equation: lang::print_expr(red.system.residual()),
        solved_form: red.system.solved_rhs().map(lang::print_expr),
        solution: lang::print_expr(&sol.solution),
        solution_residual: lang::print_expr(&residual),
        reference_diff: diff,
        flags: sol.flags.clone(),
    };
    if let Some(path) = &out {
        let (k, v) = model_input_hash();
        let mut rep = RunReport::new("reduce", payload).with_timing(start.elapsed());
        rep.inputs.insert(k, v);
        write_json(path, &rep.to_json())?;
    }
    Ok(if residual.is_zero() {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    })
}

// ----- adjoint -----

#[derive(Serialize)]
struct AdjointPayload {
    adjoint_equation: String,
    solved_form: Option<String>,
    reference_diff: DiffVerdict,
    invariant_solution: String,
    solution_reference_diff: DiffVerdict,
    double_adjoint_recovers_residual: bool,
    exponent_is_negated_decay: bool,
    flags: Vec<ConventionFlag>,
}

fn cmd_adjoint(out: Option<PathBuf>) -> Result<i32, CliError> {
    let start = Instant::now();
    let p = canonical_model();
    let adj = conservation::adjoint(&p)?;
    let theta = conservation::adjoint_invariant_solution(&p)?;
    let diff =
        crate::reference::structural_diff(adj.residual(), &crate::reference::adjoint_equation());
    let sol_diff = crate::reference::structural_diff(
        &theta.solution,
        &crate::reference::adjoint_invariant_solution(),
    );
    let lag2 = Expr::jet(crate::expr::Dep::Rho, &[]) * adj.residual().clone();
    let double = conservation::euler_lagrange(&lag2, crate::expr::Dep::Theta)?;
    let double_ok = (&double - p.residual()).is_zero();
    let rho_sol = symmetry::invariant_solution(&p, &catalog_field("G3")?)?;
    let exponent_ok =
        (theta.decay_coefficient.clone() + rho_sol.decay_coefficient.clone()).is_zero();

    println!("adjoint equation: {} = 0", adj.residual());
    println!("adjoint invariant solution: {}", theta.solution);
    println!(
        "double adjoint recovers the residual: {}",
        if double_ok { "yes" } else { "NO" }
    );
    let mut flags = adj.flags().to_vec();
    flags.extend(theta.flags.clone());
    for f in &flags {
        println!("flag [{}]: {}", f.context, f.detail);
    }
    let payload = AdjointPayload {
        adjoint_equation: lang::print_expr(adj.residual()),
        solved_form: adj.solved_rhs().map(lang::print_expr),
        reference_diff: diff,
        invariant_solution: lang::print_expr(&theta.solution),
        solution_reference_diff: sol_diff,
        double_adjoint_recovers_residual: double_ok,
        exponent_is_negated_decay: exponent_ok,
        flags,
    };
    if let Some(path) = &out {
        let (k, v) = model_input_hash();
        let mut rep = RunReport::new("adjoint", payload).with_timing(start.elapsed());
        rep.inputs.insert(k, v);
        write_json(path, &rep.to_json())?;
    }
    Ok(if double_ok && exponent_ok {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    })
}

// ----- claws -----

#[derive(Serialize)]
struct ClawsEntry {
    generator: String,
    phi_t: String,
    phi_x: String,
    phi_y: String,
    provenance: String,
    certificate: ZeroCertificate,
    certified_exact: bool,
    expected_exact: bool,
    failure_residual: Option<String>,
    reference_diff: Option<[DiffVerdict; 3]>,
    flags: Vec<ConventionFlag>,
}

fn claws_entries(p: &crate::model::PdeSystem) -> Result<Vec<ClawsEntry>, CliError> {
    let entries = conservation::catalog_currents(p)?;
    Ok(entries
        .iter()
        .map(|e: &CurrentEntry| ClawsEntry {
            generator: e.vector.label.clone(),
            phi_t: lang::print_expr(&e.vector.phi_t),
            phi_x: lang::print_expr(&e.vector.phi_x),
            phi_y: lang::print_expr(&e.vector.phi_y),
            provenance: e.vector.provenance.clone(),
            certificate: e.vector.certificate.clone(),
            certified_exact: e.certified,
            expected_exact: e.vector.label != "G2",
            failure_residual: e.failure_residual.as_ref().map(lang::print_expr),
            reference_diff: e.reference_diff.clone(),
            flags: e.flags.clone(),
        })
        .collect())
}

fn cmd_claws(generator: &str, out: Option<PathBuf>) -> Result<i32, CliError> {
    let start = Instant::now();
    let p = canonical_model();
    let mut entries = claws_entries(&p)?;
    if generator != "all" {
        entries.retain(|e| e.generator == generator);
        if entries.is_empty() {
            return Err(CliError::Usage(format!(
                "unknown triplet generator '{generator}' (use G1, G2, G3, G2', or all)"
            )));
        }
    }
    let mut failed_expected = false;
    for e in &entries {
        println!(
            "{}: certificate {}{}",
            e.generator,
            if e.certified_exact { "EXACT" } else { "FAILED" },
            match &e.reference_diff {
                Some(d) => format!(
                    "  diffs = [{}]",
                    d.iter()
                        .map(|v| match v {
                            DiffVerdict::Match => "match",
                            DiffVerdict::MatchModuloConstants { .. } => "match-modulo-constants",
                            DiffVerdict::Mismatch { .. } => "mismatch",
                        })
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
                None => String::new(),
            }
        );
        if e.expected_exact && !e.certified_exact {
            failed_expected = true;
        }
    }
    if let Some(path) = &out {
        let (k, v) = model_input_hash();
        let mut rep = RunReport::new("claws", entries).with_timing(start.elapsed());
        rep.inputs.insert(k, v);
        write_json(path, &rep.to_json())?;
    }
    Ok(if failed_expected {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    })
}

// ----- simulate -----

struct SimConfig {
    grid: GridSpec,
    boundary: Boundary,
    init: Expr,
    stride: usize,
    offsets: Vec<f64>,
    monitor: Option<String>,
    compare_closed_form: bool,
}

fn parse_sim_config(cfg: &lang::CfgDoc) -> Result<SimConfig, CliError> {
    let n = cfg.get_usize("n")?.unwrap_or(129);
    let lx = cfg.get_f64("lx")?.unwrap_or(8.0);
    let dtau = cfg.get_f64("dtau")?.unwrap_or(1e-3);
    let steps = cfg.get_usize("steps")?.unwrap_or(1000);
    let alpha = cfg.get_f64("alpha")?.unwrap_or(1.0);
    let dcoef = cfg.get_f64("D")?.unwrap_or(1.0);
    let grid = GridSpec::new(n, lx, dtau, steps, alpha, dcoef)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let boundary = match cfg.get("boundary").unwrap_or("zero") {
        "zero" => Boundary::Zero,
        "natural" => Boundary::Natural,
        other => {
            return Err(CliError::Usage(format!(
                "boundary must be 'zero' or 'natural', got '{other}'"
            )))
        }
    };
    let init = lang::parse_expr(cfg.get("init").unwrap_or("exp(-(y-x)^2/4)"))?;
    let stride = cfg.get_usize("stride")?.unwrap_or((steps / 50).max(1));
    let offsets: Vec<f64> = match cfg.get("offsets") {
        None => vec![0.5, 1.0, 2.0],
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad offset '{s}'")))
            })
            .collect::<Result<_, _>>()?,
    };
    let monitor = cfg.get("monitor").and_then(|m| {
        if m == "none" {
            None
        } else {
            Some(m.to_string())
        }
    });
    let compare_closed_form = matches!(cfg.get("closed_form"), Some("true") | Some("1"));
    Ok(SimConfig {
        grid,
        boundary,
        init,
        stride,
        offsets,
        monitor,
        compare_closed_form,
    })
}

#[derive(Serialize)]
struct SimulateSummary {
    config: BTreeMap<String, String>,
    si_map: BTreeMap<String, String>,
    stored_states: usize,
    final_tau: f64,
    final_l2: f64,
    final_max: f64,
    closed_form_max_mixed_rel_error: Option<f64>,
    decay_fits: Vec<numeric::DecayFit>,
    monitor: Option<numeric::MonitorReport>,
}

fn cmd_simulate(config: &Path, out_dir: &Path) -> Result<i32, CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
    let cfg = lang::CfgDoc::parse(&text)?;
    let sim = parse_sim_config(&cfg)?;
    std::fs::create_dir_all(out_dir)?;

    let mut fns = FnTable::new();
    fns.insert_gauss_quarter("varrho");
    fns.insert_gauss_quarter("w");
    let init = numeric::sample(&sim.init, &sim.grid, 0.0, &[], &fns)?;
    let traj = numeric::integrate(&sim.grid, &init, sim.boundary, sim.stride)?;

    // norms.csv
    let mut norms = String::from("tau,l2,max_abs\n");
    for st in &traj.states {
        norms.push_str(&format!(
            "{:.12e},{:.12e},{:.12e}\n",
            st.time,
            st.l2(),
            st.max_abs()
        ));
    }
    std::fs::write(out_dir.join("norms.csv"), &norms)?;

    // decoherence fits
    let fits = numeric::decoherence_metric(&traj, &sim.offsets)?;
    let mut decay = String::from("s,rate,expected,points\n");
    for f in &fits {
        decay.push_str(&format!(
            "{},{:.12e},{:.12e},{}\n",
            f.s, f.rate, f.expected, f.points
        ));
    }
    std::fs::write(out_dir.join("decay.csv"), &decay)?;

    // closed-form comparison
    let closed_form_err = if sim.compare_closed_form {
        let exact = numeric::sample_closed_form(&sim.grid, traj.final_state().time);
        Some(numeric::compare_to_closed_form(
            traj.final_state(),
            &exact,
            1e-3,
        ))
    } else {
        None
    };

    // optional conservation monitor
    let monitor = match &sim.monitor {
        None => None,
        Some(label) => {
            let p = canonical_model();
            let entries = conservation::catalog_currents(&p)?;
            let entry = entries
                .iter()
                .find(|e| &e.vector.label == label)
                .ok_or_else(|| CliError::Usage(format!("unknown monitor triplet '{label}'")))?;
            let params_owned = numeric::reference_parameter_binding();
            let params: Vec<(&str, f64)> = params_owned.iter().map(|(a, b)| (*a, *b)).collect();
            let rep = numeric::conservation_monitor(&entry.vector, &traj, &params, &fns, 8)?;
            let mut qcsv = String::from("tau,q_re,q_im\n");
            for (t, re, im) in &rep.q_series {
                qcsv.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", t, re, im));
            }
            std::fs::write(out_dir.join("qseries.csv"), &qcsv)?;
            let mut rcsv = String::from("tau,residual_inf\n");
            for (t, r) in &rep.residual_series {
                rcsv.push_str(&format!("{:.12e},{:.12e}\n", t, r));
            }
            std::fs::write(out_dir.join("residuals.csv"), &rcsv)?;
            Some(rep)
        }
    };

    let (nd, map) = nondimensionalize(&canonical_model());
    let _ = nd;
    let summary = SimulateSummary {
        config: cfg
            .keys()
            .map(|k| (k.to_string(), cfg.get(k).unwrap_or("").to_string()))
            .collect(),
        si_map: map
            .iter()
            .map(|(k, v)| (k.clone(), lang::print_expr(v)))
            .collect(),
        stored_states: traj.states.len(),
        final_tau: traj.final_state().time,
        final_l2: traj.final_state().l2(),
        final_max: traj.final_state().max_abs(),
        closed_form_max_mixed_rel_error: closed_form_err,
        decay_fits: fits,
        monitor,
    };
    let rep = RunReport::new("simulate", summary)
        .with_input("config", text.as_bytes())
        .with_timing(start.elapsed());
    write_json(&out_dir.join("summary.json"), &rep.to_json())?;
    println!(
        "simulate: {} stored states to tau = {:.3}; outputs in {}",
        traj.states.len(),
        traj.final_state().time,
        out_dir.display()
    );
    Ok(EXIT_OK)
}

// ----- reproduce -----

#[derive(Serialize, Default)]
struct BundleSummary {
    verdicts: BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

struct Bundle {
    dir: PathBuf,
    summary: BundleSummary,
}

impl Bundle {
    fn new(dir: &Path) -> Result<Bundle, CliError> {
        std::fs::create_dir_all(dir)?;
        std::fs::create_dir_all(dir.join("numeric"))?;
        Ok(Bundle {
            dir: dir.to_path_buf(),
            summary: BundleSummary::default(),
        })
    }

    fn write_report<T: Serialize>(
        &mut self,
        name: &str,
        report: &RunReport<T>,
    ) -> Result<(), CliError> {
        let json = report.to_json();
        write_json(&self.dir.join(name), &json)?;
        self.summary.artifacts.insert(
            name.to_string(),
            sha256_hex(normalized_json(&json).as_bytes()),
        );
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        write_json(&self.dir.join(name), text)?;
        self.summary
            .artifacts
            .insert(name.to_string(), sha256_hex(text.as_bytes()));
        Ok(())
    }

    fn verdict(&mut self, key: &str, ok: bool, detail: &str) {
        let v = format!("{}{}", if ok { "pass" } else { "FAIL" }, detail);
        println!("{key}: {v}");
        self.summary.verdicts.insert(key.to_string(), v);
    }
}

fn cmd_reproduce(skip_numeric: bool, out_dir: &Path) -> Result<i32, CliError> {
    let start = Instant::now();
    let mut bundle = Bundle::new(out_dir)?;
    let p = canonical_model();
    let mut all_ok = true;

    // stage 1: catalog verification
    let stage = Instant::now();
    let cat = symmetry::catalog();
    let fields: Vec<(String, VectorField)> = cat
        .iter()
        .map(|e| (e.label.clone(), e.field.clone()))
        .collect();
    let verdicts = symmetry::verify_generators(&fields, &p)?;
    let mut results = Vec::new();
    for (entry, v) in cat.iter().zip(&verdicts) {
        if entry.expected_exact && !v.passes {
            all_ok = false;
        }
        results.push(SymmetryResult {
            label: v.label.clone(),
            verdict: if v.passes { "pass" } else { "fail" }.to_string(),
            expected_exact: entry.expected_exact,
            residual: lang::print_expr(&v.residual),
            repairs: v
                .repairs
                .iter()
                .map(|r| RepairInfo {
                    label: r.label.clone(),
                    field: r.field.to_string(),
                    note: r.note.clone(),
                })
                .collect(),
        });
    }
    let exact_ok = verdicts
        .iter()
        .zip(&cat)
        .all(|(v, e)| !e.expected_exact || v.passes);
    bundle.verdict("symmetries", exact_ok, "");
    let (k, v) = model_input_hash();
    let mut rep = RunReport::new("verify-symmetries", results).with_timing(stage.elapsed());
    rep.inputs.insert(k, v);
    bundle.write_report("symmetries.json", &rep)?;

    // determining system export
    let sys = symmetry::determining_system(&p)?;
    {
        #[derive(Serialize)]
        struct Entry {
            monomial: String,
            coefficient: String,
        }
        let payload: Vec<Entry> = sys
            .iter()
            .map(|e| Entry {
                monomial: lang::print_expr(&e.monomial),
                coefficient: lang::print_expr(&e.coefficient),
            })
            .collect();
        let rep = stamp_model(RunReport::new("determining", payload));
        bundle.write_report("determining.json", &rep)?;
    }

    // stage 2: algebra
    let stage = Instant::now();
    let basis: Vec<(String, VectorField)> = fields.clone();
    let table = symmetry::structure_constants(&basis, lsl_seed())?;
    let mut anti_ok = true;
    let mut jacobi_ok = true;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let ab = symmetry::commutator(&basis[i].1, &basis[j].1);
            let ba = symmetry::commutator(&basis[j].1, &basis[i].1);
            let sum = VectorField::linear_combination(&Expr::one(), &ab, &Expr::one(), &ba);
            if !sum.is_zero() {
                anti_ok = false;
            }
        }
    }
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            for kk in (j + 1)..basis.len() {
                if !symmetry::jacobi_defect(&basis[i].1, &basis[j].1, &basis[kk].1).is_zero() {
                    jacobi_ok = false;
                }
            }
        }
    }
    let g1g4 = symmetry::commutator(&basis[0].1, &basis[3].1);
    let g3 = &basis[2].1;
    let bracket_ok =
        g1g4.xi_x == g3.xi_x && g1g4.xi_y == g3.xi_y && g1g4.xi_t == g3.xi_t && g1g4.eta == g3.eta;
    if !(anti_ok && jacobi_ok && bracket_ok) {
        all_ok = false;
    }
    bundle.verdict(
        "algebra",
        anti_ok && jacobi_ok && bracket_ok,
        &format!(" (antisymmetry={anti_ok}, jacobi={jacobi_ok}, [G1,G4]=G3: {bracket_ok})"),
    );
    {
        #[derive(Serialize)]
        struct AlgebraPayload {
            table: String,
            antisymmetry: bool,
            jacobi: bool,
            g1_g4_bracket_is_g3: bool,
        }
        let rep = stamp_model(
            RunReport::new(
                "algebra",
                AlgebraPayload {
                    table: table.render(),
                    antisymmetry: anti_ok,
                    jacobi: jacobi_ok,
                    g1_g4_bracket_is_g3: bracket_ok,
                },
            )
            .with_timing(stage.elapsed()),
        );
        bundle.write_report("algebra.json", &rep)?;
    }

    // stage 3: reduction and closed-form solution
    let stage = Instant::now();
    let g3_field = catalog_field("G3")?;
    let sol = symmetry::invariant_solution(&p, &g3_field)?;
    let residual = p
        .apply_to(&sol.solution)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let reduction_ok = residual.is_zero()
        && !sol
            .reduction
            .system
            .residual()
            .contains(&Expr::jet(crate::expr::Dep::Phi, &[Var::Mu, Var::Mu]));
    if !reduction_ok {
        all_ok = false;
    }
    bundle.verdict("reduction", reduction_ok, "");
    {
        let inv = sol.reduction.invariants.as_list();
        let payload = ReducePayload {
            generator: "G3".to_string(),
            invariants: [
                lang::print_expr(&inv[0]),
                lang::print_expr(&inv[1]),
                lang::print_expr(&inv[2]),
            ],
            reduced_equation: lang::print_expr(sol.reduction.system.residual()),
            solved_form: sol.reduction.system.solved_rhs().map(lang::print_expr),
            solution: lang::print_expr(&sol.solution),
            solution_residual: lang::print_expr(&residual),
            reference_diff: crate::reference::structural_diff(
                sol.reduction.system.residual(),
                &crate::reference::reduced_equation(),
            ),
            flags: sol.flags.clone(),
        };
        let rep = stamp_model(RunReport::new("reduce", payload).with_timing(stage.elapsed()));
        bundle.write_report("reduction.json", &rep)?;
    }

    // stage 4 and 5: adjoint pipeline
    let stage = Instant::now();
    let adj = conservation::adjoint(&p)?;
    let theta = conservation::adjoint_invariant_solution(&p)?;
    let lag2 = Expr::jet(crate::expr::Dep::Rho, &[]) * adj.residual().clone();
    let double = conservation::euler_lagrange(&lag2, crate::expr::Dep::Theta)?;
    let double_ok = (&double - p.residual()).is_zero();
    let exponent_ok = (theta.decay_coefficient.clone() + sol.decay_coefficient.clone()).is_zero();
    if !(double_ok && exponent_ok) {
        all_ok = false;
    }
    bundle.verdict(
        "adjoint",
        double_ok && exponent_ok,
        &format!(" (double-adjoint={double_ok}, exponent-flip={exponent_ok})"),
    );
    {
        let payload = AdjointPayload {
            adjoint_equation: lang::print_expr(adj.residual()),
            solved_form: adj.solved_rhs().map(lang::print_expr),
            reference_diff: crate::reference::structural_diff(
                adj.residual(),
                &crate::reference::adjoint_equation(),
            ),
            invariant_solution: lang::print_expr(&theta.solution),
            solution_reference_diff: crate::reference::structural_diff(
                &theta.solution,
                &crate::reference::adjoint_invariant_solution(),
            ),
            double_adjoint_recovers_residual: double_ok,
            exponent_is_negated_decay: exponent_ok,
            flags: adj.flags().to_vec(),
        };
        let rep = stamp_model(RunReport::new("adjoint", payload).with_timing(stage.elapsed()));
        bundle.write_report("adjoint.json", &rep)?;
    }

    // stage 6: conserved currents, 12.x reproduction, mutations
    let stage = Instant::now();
    let entries = claws_entries(&p)?;
    let expected_exact_ok = entries
        .iter()
        .all(|e| !e.expected_exact || e.certified_exact);
    if !expected_exact_ok {
        all_ok = false;
    }
    let g2_finding = entries
        .iter()
        .find(|e| e.generator == "G2")
        .map(|e| !e.certified_exact)
        .unwrap_or(false);
    bundle.verdict(
        "currents",
        expected_exact_ok,
        &format!(" (G1/G3/G2' exact; G2 fails as printed: {g2_finding})"),
    );
    {
        let rep = stamp_model(RunReport::new("claws", &entries).with_timing(stage.elapsed()));
        bundle.write_report("claws.json", &rep)?;
    }
    let generic = conservation::general_current_reproduction(&p)?;
    let generic_ok =
        generic[0].matches_modulo_constants() && generic[1].is_match() && generic[2].is_match();
    if !generic_ok {
        all_ok = false;
    }
    bundle.verdict("general-currents", generic_ok, "");
    {
        let rep = stamp_model(RunReport::new("general-currents", &generic));
        bundle.write_report("currents_generic.json", &rep)?;
    }
    {
        let stage = Instant::now();
        let raw_entries = conservation::catalog_currents(&p)?;
        let adj_p = conservation::adjoint(&p)?;
        let printed: Vec<conservation::CurrentEntry> = raw_entries
            .into_iter()
            .filter(|e| e.vector.label != "G2'")
            .collect();
        let sweep = conservation::mutation_sweep(&printed, &p, &adj_p)?;
        let detected = sweep.iter().filter(|(_, broke)| *broke).count();
        let mutations_ok = detected == sweep.len() && sweep.len() == 9;
        if !mutations_ok {
            all_ok = false;
        }
        bundle.verdict(
            "mutations",
            mutations_ok,
            &format!(" ({detected}/{} detected)", sweep.len()),
        );
        let rep = stamp_model(RunReport::new("mutations", &sweep).with_timing(stage.elapsed()));
        bundle.write_report("mutations.json", &rep)?;
    }

    // stage 7: reference numeric run
    if !skip_numeric {
        let stage = Instant::now();
        let grid = GridSpec::reference();
        let init = numeric::sample_closed_form(&grid, 0.0);
        let traj = numeric::integrate(&grid, &init, Boundary::Natural, 100)?;
        let exact = numeric::sample_closed_form(&grid, traj.final_state().time);
        let cf_err = numeric::compare_to_closed_form(traj.final_state(), &exact, 1e-3);
        let cf_ok = cf_err < 1e-3;
        let fits = numeric::decoherence_metric(&traj, &[0.5, 1.0, 2.0])?;
        let decay_ok = fits
            .iter()
            .all(|f| (f.rate - f.expected).abs() / f.expected.abs() < 0.02);
        if !(cf_ok && decay_ok) {
            all_ok = false;
        }
        bundle.verdict(
            "numeric",
            cf_ok && decay_ok,
            &format!(" (closed-form error {cf_err:.3e}; decay fits within 2%: {decay_ok})"),
        );
        let mut decay = String::from("s,rate,expected,points\n");
        for f in &fits {
            decay.push_str(&format!(
                "{},{:.12e},{:.12e},{}\n",
                f.s, f.rate, f.expected, f.points
            ));
        }
        bundle.write_text("numeric/decay.csv", &decay)?;
        let mut norms = String::from("tau,l2,max_abs\n");
        for st in &traj.states {
            norms.push_str(&format!(
                "{:.12e},{:.12e},{:.12e}\n",
                st.time,
                st.l2(),
                st.max_abs()
            ));
        }
        bundle.write_text("numeric/norms.csv", &norms)?;

        // divergence-residual refinement of the diagonal-translation triplet
        let entries = conservation::catalog_currents(&p)?;
        let g3cur = &entries
            .iter()
            .find(|e| e.vector.label == "G3")
            .expect("catalog has G3")
            .vector;
        let params_owned = numeric::reference_parameter_binding();
        let params: Vec<(&str, f64)> = params_owned.iter().map(|(a, b)| (*a, *b)).collect();
        let mut fns = FnTable::new();
        fns.insert_gauss_quarter("w");
        fns.insert_gauss_quarter("varrho");
        let mut rows = String::from("n,residual_inf,corrupted_residual_inf\n");
        for n in [65usize, 129, 257] {
            let g = GridSpec::new(n, 8.0, 1e-3, 1, 1.0, 1.0)
                .map_err(|e| CliError::Failure(e.to_string()))?;
            let dt = g.spacing() / 16.0;
            let t0 = 0.05;
            let states: [FieldState; 5] = [
                numeric::sample_closed_form(&g, t0 - 2.0 * dt),
                numeric::sample_closed_form(&g, t0 - dt),
                numeric::sample_closed_form(&g, t0),
                numeric::sample_closed_form(&g, t0 + dt),
                numeric::sample_closed_form(&g, t0 + 2.0 * dt),
            ];
            let r = numeric::divergence_residual_fd(g3cur, &states, dt, &g, &params, &fns)?;
            let bad = g3cur.with_scaled_component(Var::X, 2);
            let rb = numeric::divergence_residual_fd(&bad, &states, dt, &g, &params, &fns)?;
            rows.push_str(&format!("{n},{r:.12e},{rb:.12e}\n"));
        }
        bundle.write_text("numeric/residual_refinement.csv", &rows)?;
        println!("numeric stage took {:?}", stage.elapsed());
    }

    // summary
    let elapsed = start.elapsed();
    let summary_json = serde_json::to_string_pretty(&bundle.summary).expect("summary serializes");
    write_json(&out_dir.join("summary.json"), &summary_json)?;
    write_json(
        &out_dir.join("timings.json"),
        &format!("{{\n  \"total_ms\": {}\n}}\n", elapsed.as_millis()),
    )?;
    println!(
        "bundle written to {} in {:?}; overall: {}",
        out_dir.display(),
        elapsed,
        if all_ok { "PASS" } else { "FAIL" }
    );
    Ok(if all_ok { EXIT_OK } else { EXIT_VERIFICATION })
}
