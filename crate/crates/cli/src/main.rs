use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qatpg_core::atpg::{
    build_fault_table, candidate_tests, generate_complete_set, parse_test_list, verify_tests, TestSetReport,
    DEFAULT_TAU,
};
use qatpg_core::circuit::{parse_circuit, Circuit};
use qatpg_core::faults::{apply_faults, enumerate_faults, EnumParams, Fault, FaultClass, FaultSet, FaultedModel};
use qatpg_core::metrics::{
    angle, bures, default_basis, fidelity, parse_ket, pauli_expectations, process_characterize, s_distance,
    s_fidelity, state_tomography, trace_distance, ProcessMap,
};
use qatpg_core::qmath::ComplexMatrix;
use qatpg_core::simulator::{evolve_density, run_exact, run_shots, Basis, Bits, Test};

/// Fault simulation and test generation for quantum switching networks.
#[derive(Parser)]
#[command(name = "qatpg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one test on the circuit, optionally with faults injected
    Sim(SimArgs),
    /// List the faults of the selected classes
    Faults(FaultArgs),
    /// Build the test-by-fault detection table
    Table(TableArgs),
    /// Generate a covering test set
    Gen(GenArgs),
    /// Check the coverage of an existing test set
    Verify(VerifyArgs),
    /// Distances between two states, or between a faulty and ideal circuit
    Distance(DistanceArgs),
    /// Reconstruct an output state or a process map by tomography
    Tomo(TomoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisChoice {
    Z,
    X,
    Both,
}

#[derive(Args)]
struct Output {
    /// Output format
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write output to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FaultSelect {
    /// Circuit file
    #[arg(long)]
    circuit: PathBuf,
    /// Comma-separated fault classes (pauli, initrot, initstuck, init,
    /// lostphase, kick, faded, forced, meas, czangle, all)
    #[arg(long, default_value = "all")]
    classes: String,
}

#[derive(Args)]
struct SimArgs {
    /// Circuit file
    #[arg(long)]
    circuit: PathBuf,
    /// Prepared bitstring, wire 0 first
    #[arg(long)]
    prep: String,
    /// Preparation basis
    #[arg(long, default_value = "z")]
    basis: String,
    /// Measurement basis [default: same as --basis]
    #[arg(long)]
    measure: Option<String>,
    /// Fault to inject, e.g. "meas q=0 v=1" (repeatable)
    #[arg(long = "fault")]
    faults: Vec<String>,
    /// Number of shots; 0 prints the exact distribution
    #[arg(long, default_value_t = 0)]
    shots: u64,
    /// Sampling seed, required when --shots is positive
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FaultArgs {
    #[command(flatten)]
    select: FaultSelect,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    select: FaultSelect,
    /// Detection threshold on total variation distance
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Which basis the table rows use
    #[arg(long, value_enum, default_value = "z")]
    basis: BasisChoice,
    /// Read the table rows from a test list instead
    #[arg(long, conflicts_with = "basis")]
    tests: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    select: FaultSelect,
    /// Detection threshold on total variation distance
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Exit with status 2 unless every fault is covered
    #[arg(long)]
    require_complete: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    select: FaultSelect,
    /// Test set: one test per line, or JSON as written by `gen --format json`
    #[arg(long)]
    tests: PathBuf,
    /// Detection threshold on total variation distance
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Exit with status 2 unless every fault is covered
    #[arg(long)]
    require_complete: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct DistanceArgs {
    /// First state as a ket, e.g. "|0+>"
    #[arg(long, requires = "b", conflicts_with = "circuit")]
    a: Option<String>,
    /// Second state as a ket
    #[arg(long, requires = "a")]
    b: Option<String>,
    /// Compare the faulty circuit against the ideal one (at most 2 qubits)
    #[arg(long, required_unless_present = "a")]
    circuit: Option<PathBuf>,
    /// Fault to inject (repeatable)
    #[arg(long = "fault", requires = "circuit")]
    faults: Vec<String>,
    /// Report fidelity
    #[arg(long)]
    fidelity: bool,
    /// Report trace distance
    #[arg(long)]
    trace: bool,
    /// Report Bures distance
    #[arg(long)]
    bures: bool,
    /// Report Bures angle
    #[arg(long)]
    angle: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TomoArgs {
    /// Circuit file (at most 2 qubits)
    #[arg(long)]
    circuit: PathBuf,
    /// Fault to inject (repeatable)
    #[arg(long = "fault")]
    faults: Vec<String>,
    /// Reconstruct the output state for this Z-basis input instead of the process
    #[arg(long)]
    prep: Option<String>,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("QATPG_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("QATPG_THREADS=`{v}` is not a number"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Sim(a) => sim(a),
        Command::Faults(a) => list_faults(a),
        Command::Table(a) => table(a),
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Distance(a) => distance(a),
        Command::Tomo(a) => tomo(a),
    }
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(parse_circuit(&text)
        .with_context(|| format!("parsing {}", path.display()))?
        .with_name(name))
}

fn load_model(path: &Path, faults: &[String]) -> Result<(Circuit, FaultedModel)> {
    let c = load_circuit(path)?;
    let faults = faults
        .iter()
        .map(|f| Fault::parse(f, &c))
        .collect::<qatpg_core::Result<Vec<_>>>()?;
    let m = apply_faults(&c, &faults)?;
    Ok((c, m))
}

fn load_faults(sel: &FaultSelect) -> Result<(Circuit, FaultSet)> {
    let c = load_circuit(&sel.circuit)?;
    let classes = FaultClass::parse_list(&sel.classes)?;
    if classes.is_empty() {
        bail!("no fault classes selected");
    }
    let fs = enumerate_faults(&c, &classes, &EnumParams::default());
    Ok((c, fs))
}

fn emit(out: &Output, text: String) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

/// Rounds away float noise so that exact values print as `1.0`, `0.25`.
fn num(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn fmt_num(x: f64) -> String {
    format!("{:?}", num(x))
}

fn sim(a: SimArgs) -> Result<ExitCode> {
    let (_, m) = load_model(&a.circuit, &a.faults)?;
    let basis: Basis = a.basis.parse()?;
    let measure: Basis = match &a.measure {
        Some(s) => s.parse()?,
        None => basis,
    };
    let prep: Bits = a.prep.parse()?;
    let test = Test::new(prep, basis, measure);
    let text = if a.shots == 0 {
        let dist = run_exact(&m, &test)?;
        let rows: Vec<(Bits, f64)> = dist.iter().map(|(b, p)| (b, num(p))).filter(|&(_, p)| p > 0.0).collect();
        match a.output.format {
            Format::Text => rows.iter().map(|(b, p)| format!("{b}: {p:?}\n")).collect(),
            Format::Csv => std::iter::once("outcome,probability\n".to_string())
                .chain(rows.iter().map(|(b, p)| format!("{b},{p:?}\n")))
                .collect(),
            Format::Json => json(&rows.iter().map(|(b, p)| (b.to_string(), *p)).collect::<BTreeMap<_, _>>()),
        }
    } else {
        let seed = a.seed.context("--seed is required when --shots is positive")?;
        let counts = run_shots(&m, &test, a.shots, seed)?;
        match a.output.format {
            Format::Text => counts.iter().map(|(b, n)| format!("{b}: {n}\n")).collect(),
            Format::Csv => std::iter::once("outcome,count\n".to_string())
                .chain(counts.iter().map(|(b, n)| format!("{b},{n}\n")))
                .collect(),
            Format::Json => json(&counts.iter().map(|(b, n)| (b.to_string(), *n)).collect::<BTreeMap<_, _>>()),
        }
    };
    emit(&a.output, text)?;
    Ok(ExitCode::SUCCESS)
}

fn list_faults(a: FaultArgs) -> Result<ExitCode> {
    let (_, fs) = load_faults(&a.select)?;
    let text = match a.output.format {
        Format::Text => fs.faults.iter().map(|f| format!("{f}\n")).collect(),
        Format::Csv => std::iter::once("id,class,fault\n".to_string())
            .chain(fs.faults.iter().enumerate().map(|(i, f)| format!("f{},{},\"{f}\"\n", i + 1, f.class())))
            .collect(),
        Format::Json => json(&fs.faults.iter().map(Fault::to_string).collect::<Vec<_>>()),
    };
    emit(&a.output, text)?;
    Ok(ExitCode::SUCCESS)
}

fn table(a: TableArgs) -> Result<ExitCode> {
    let (c, fs) = load_faults(&a.select)?;
    let tests = match &a.tests {
        Some(path) => read_tests(path)?,
        None => {
            let all = candidate_tests(c.width());
            match a.basis {
                BasisChoice::Both => all,
                BasisChoice::Z => all.into_iter().filter(Test::is_z).collect(),
                BasisChoice::X => all.into_iter().filter(Test::is_x).collect(),
            }
        }
    };
    let ft = build_fault_table(&c, &fs, &tests, a.tau)?;
    let text = match a.output.format {
        Format::Text => ft.to_string(),
        Format::Csv => ft.to_csv(),
        Format::Json => ft.to_json() + "\n",
    };
    emit(&a.output, text)?;
    Ok(ExitCode::SUCCESS)
}

fn report_text(r: &TestSetReport, format: Format) -> String {
    match format {
        Format::Text => r.to_string(),
        Format::Csv => {
            let mut s = String::from("test\n");
            s.push_str(&r.tests_text());
            s
        }
        Format::Json => r.to_json() + "\n",
    }
}

fn coverage_exit(r: &TestSetReport, require_complete: bool) -> ExitCode {
    if require_complete && !r.complete {
        eprintln!("incomplete coverage: {} fault(s) undetected", r.uncovered.len());
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let (c, fs) = load_faults(&a.select)?;
    let r = generate_complete_set(&c, &fs, a.tau)?;
    emit(&a.output, report_text(&r, a.output.format))?;
    Ok(coverage_exit(&r, a.require_complete))
}

fn read_tests(path: &Path) -> Result<Vec<Test>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with(['{', '[']) {
        if let Ok(r) = serde_json::from_str::<TestSetReport>(&text) {
            return Ok(r.chosen);
        }
        let list: Vec<Test> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(list);
    }
    parse_test_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let (c, fs) = load_faults(&a.select)?;
    let tests = read_tests(&a.tests)?;
    let r = verify_tests(&c, &fs, &tests, a.tau)?;
    emit(&a.output, report_text(&r, a.output.format))?;
    Ok(coverage_exit(&r, a.require_complete))
}

type Metric = (&'static str, fn(&ComplexMatrix, &ComplexMatrix) -> qatpg_core::Result<f64>);

fn distance(a: DistanceArgs) -> Result<ExitCode> {
    let mut values: Vec<(&str, f64)> = Vec::new();
    if let (Some(ka), Some(kb)) = (&a.a, &a.b) {
        let rho = parse_ket(ka)?.density();
        let sigma = parse_ket(kb)?.density();
        let all: [(bool, Metric); 4] = [
            (a.fidelity, ("fidelity", fidelity)),
            (a.trace, ("trace", trace_distance)),
            (a.bures, ("bures", bures)),
            (a.angle, ("angle", angle)),
        ];
        let none = all.iter().all(|(on, _)| !on);
        for (on, (name, f)) in all {
            if on || none {
                values.push((name, f(&rho, &sigma)?));
            }
        }
    } else {
        let path = a.circuit.as_deref().context("either --a/--b or --circuit is required")?;
        let (c, m) = load_model(path, &a.faults)?;
        let basis = default_basis(c.width())?;
        let real = ProcessMap::from_model(&m)?;
        let ideal = ProcessMap::from_model(&FaultedModel::gold(&c))?;
        values.push(("s_fidelity", s_fidelity(&real, &ideal, &basis)?));
        values.push(("s_distance", s_distance(&real, &ideal, &basis)?));
    }
    let text = match a.output.format {
        Format::Text if values.len() == 1 => format!("{}\n", fmt_num(values[0].1)),
        Format::Text => values.iter().map(|(k, v)| format!("{k}: {}\n", fmt_num(*v))).collect(),
        Format::Csv => std::iter::once("metric,value\n".to_string())
            .chain(values.iter().map(|(k, v)| format!("{k},{}\n", fmt_num(*v))))
            .collect(),
        Format::Json => json(&values.iter().map(|(k, v)| (*k, num(*v))).collect::<BTreeMap<_, _>>()),
    };
    emit(&a.output, text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn matrix_json(m: &ComplexMatrix) -> MatrixJson {
    let part = |f: fn(&qatpg_core::qmath::C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.rows()).map(|r| (0..m.cols()).map(|c| num(f(&m[(r, c)]))).collect()).collect()
    };
    MatrixJson { re: part(|z| z.re), im: part(|z| z.im) }
}

fn matrix_text(m: &ComplexMatrix) -> String {
    let mut s = String::new();
    for r in 0..m.rows() {
        let cells: Vec<String> = (0..m.cols())
            .map(|c| {
                let z = m[(r, c)];
                format!("{:+.6}{:+.6}i", num(z.re), num(z.im))
            })
            .collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

fn matrix_csv(m: &ComplexMatrix) -> String {
    let mut s = String::from("row,col,re,im\n");
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m[(r, c)];
            s.push_str(&format!("{r},{c},{},{}\n", fmt_num(z.re), fmt_num(z.im)));
        }
    }
    s
}

fn tomo(a: TomoArgs) -> Result<ExitCode> {
    let (c, m) = load_model(&a.circuit, &a.faults)?;
    let (label, mat, extra) = match &a.prep {
        Some(p) => {
            let prep: Bits = p.parse()?;
            if prep.width() != c.width() {
                bail!("--prep has {} bits but the circuit has {} qubits", prep.width(), c.width());
            }
            let d = 1usize << c.width();
            let mut rho = ComplexMatrix::zeros(d, d);
            rho[(prep.value(), prep.value())] = 1.0.into();
            let out = evolve_density(&m, &rho)?;
            let rec = state_tomography(&pauli_expectations(&out)?, c.width())?;
            ("state", rec, None)
        }
        None => {
            let basis = default_basis(c.width())?;
            let map = process_characterize(|rho| evolve_density(&m, rho), &basis)?;
            let dev = map.trace_preservation_deviation();
            ("superoperator", map.superoperator().clone(), Some(dev))
        }
    };
    let text = match a.output.format {
        Format::Text => {
            let mut s = format!("{label}:\n{}", matrix_text(&mat));
            if let Some(d) = extra {
                s.push_str(&format!("trace preservation deviation: {:.3e}\n", d));
            }
            s
        }
        Format::Csv => matrix_csv(&mat),
        Format::Json => {
            let mut v = serde_json::Map::new();
            v.insert(label.into(), serde_json::to_value(matrix_json(&mat))?);
            if let Some(d) = extra {
                v.insert("trace_preservation_deviation".into(), d.into());
            }
            json(&v)
        }
    };
    emit(&a.output, text)?;
    Ok(ExitCode::SUCCESS)
}
