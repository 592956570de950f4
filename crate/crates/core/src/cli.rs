//! Command-line entry point.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or protocol
//! errors. With `--json` the JSON document is the only standard output.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::model::{
    build_measure, build_pair_table, chsh_value, outcome_pairs, setting_pairs, AngleConfig, ChshPattern,
};
use crate::randtests::{self, extract_bits, BitPolicy, BitStream};
use crate::sampler::{generate_stream_parallel, RecordStream, SeedSpec, DEFAULT_SHARD_SIZE};
use crate::stats::{self, Counts};
use crate::wire::{self, Format, RecordWriter, SessionConfig, SessionTransport, Side};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "classical-chsh",
    version,
    about = "Classical conditional-probability CHSH model: exact analytics, seeded sampling, estimation, bit tests and a two-wing harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct AngleArgs {
    /// Angle config file: four key=value lines (theta1, theta2, theta1p, theta2p), radians.
    #[arg(long, value_name = "FILE")]
    angles: Option<PathBuf>,
    /// Left orientation 1 [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    theta1: Option<f64>,
    /// Left orientation 2 [default: π/2]
    #[arg(long, allow_hyphen_values = true)]
    theta2: Option<f64>,
    /// Right orientation 1 [default: π/4]
    #[arg(long, allow_hyphen_values = true)]
    theta1p: Option<f64>,
    /// Right orientation 2 [default: −π/4]
    #[arg(long, allow_hyphen_values = true)]
    theta2p: Option<f64>,
    /// Read --theta* flags as degrees (the config file is always radians).
    #[arg(long)]
    degrees: bool,
}

impl AngleArgs {
    fn resolve(&self) -> CliResult<AngleConfig> {
        let base = match &self.angles {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
                AngleConfig::from_config_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))?
            }
            None => AngleConfig::tsirelson(),
        };
        let conv = |v: f64| if self.degrees { v.to_radians() } else { v };
        AngleConfig::new(
            self.theta1.map(conv).unwrap_or(base.theta1),
            self.theta2.map(conv).unwrap_or(base.theta2),
            self.theta1p.map(conv).unwrap_or(base.theta1p),
            self.theta2p.map(conv).unwrap_or(base.theta2p),
        )
        .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
            FormatArg::Bin => Format::Bin,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PatternArg {
    #[value(name = "11")]
    P11,
    #[value(name = "12")]
    P12,
    #[value(name = "21")]
    P21,
    #[value(name = "22")]
    P22,
}

impl From<PatternArg> for ChshPattern {
    fn from(p: PatternArg) -> ChshPattern {
        match p {
            PatternArg::P11 => ChshPattern::Minus11,
            PatternArg::P12 => ChshPattern::Minus12,
            PatternArg::P21 => ChshPattern::Minus21,
            PatternArg::P22 => ChshPattern::Minus22,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Left,
    Right,
    Interleaved,
    Xor,
}

impl From<PolicyArg> for BitPolicy {
    fn from(p: PolicyArg) -> BitPolicy {
        match p {
            PolicyArg::Left => BitPolicy::Left,
            PolicyArg::Right => BitPolicy::Right,
            PolicyArg::Interleaved => BitPolicy::Interleaved,
            PolicyArg::Xor => BitPolicy::Xor,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Role {
    Source,
    Left,
    Right,
    Merge,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact pair table, measure, correlations and CHSH value.
    Exact {
        #[command(flatten)]
        angles: AngleArgs,
        /// Term carrying the minus sign.
        #[arg(long, value_enum, default_value = "22")]
        pattern: PatternArg,
        #[arg(long)]
        json: bool,
    },
    /// Generate a record stream.
    Sample {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[command(flatten)]
        angles: AngleArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Output file [default: standard output]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
        shard_size: u64,
        /// Worker threads; output does not depend on this.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Estimate conditionals and CHSH from a record file and compare with the exact model.
    Estimate {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Record format [default: from the file extension, else csv]
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long, value_enum, default_value = "22")]
        pattern: PatternArg,
        /// Flag and violation threshold in standard errors.
        #[arg(long, default_value_t = stats::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        angles: AngleArgs,
        #[arg(long)]
        json: bool,
    },
    /// Extract a bitfile from a record file.
    Bits {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Record format [default: from the file extension, else csv]
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long, value_enum, default_value = "left")]
        policy: PolicyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomness battery on a bitfile.
    Test {
        #[arg(long = "in", value_name = "BITFILE")]
        input: PathBuf,
        #[arg(long, default_value_t = randtests::DEFAULT_ALPHA)]
        alpha: f64,
        /// Block length for the block-frequency test.
        #[arg(long, default_value_t = randtests::DEFAULT_BLOCK_LEN)]
        block_len: usize,
        #[arg(long)]
        json: bool,
    },
    /// Source/wing/merge session. Without --role all four run in this process.
    PairRun {
        #[arg(long, value_enum)]
        role: Option<Role>,
        /// Address to accept on (left/right: from the source; merge: from both wings).
        #[arg(long, value_name = "ADDR")]
        listen: Option<String>,
        /// Address to dial (source: left then right wing; left/right: the merger).
        #[arg(long, value_name = "ADDR")]
        connect: Vec<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
        shard_size: u64,
        #[command(flatten)]
        angles: AngleArgs,
        /// Merged stream format.
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Merged stream file [default: standard output]
        #[arg(long)]
        out: Option<PathBuf>,
        /// In-process mode: use localhost TCP instead of loopback pipes.
        #[arg(long)]
        tcp: bool,
        /// In-process mode: write source→wing traffic to DIR/left.bin and DIR/right.bin.
        #[arg(long, value_name = "DIR")]
        capture_dir: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs one subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Exact { angles, pattern, json } => cmd_exact(&angles.resolve()?, pattern.into(), json, out),
        Command::Sample {
            seed,
            n,
            angles,
            format,
            out: path,
            shard_size,
            workers,
        } => {
            let seeds = SeedSpec::new(seed, shard_size).map_err(|e| CliError::Usage(e.to_string()))?;
            if workers == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            cmd_sample(
                seeds,
                n,
                &angles.resolve()?,
                format.into(),
                path.as_deref(),
                workers,
                out,
            )?;
            let _ = writeln!(err, "sampled {n} records (seed {seed}, shard size {shard_size})");
            Ok(())
        }
        Command::Estimate {
            input,
            format,
            pattern,
            threshold,
            angles,
            json,
        } => {
            if !(threshold > 0.0 && threshold.is_finite()) {
                return Err(CliError::Usage("--threshold must be positive".into()));
            }
            let format = resolve_format(format, &input);
            cmd_estimate(&input, format, pattern.into(), threshold, &angles.resolve()?, json, out)
        }
        Command::Bits {
            input,
            format,
            policy,
            out: path,
        } => {
            let format = resolve_format(format, &input);
            let records = wire::codec::read_records_file(&input, format).map_err(data)?;
            let bits = extract_bits(&records, policy.into());
            let file = File::create(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
            let mut w = io::BufWriter::new(file);
            bits.write_packed(&mut w).and_then(|_| w.flush()).map_err(data)?;
            let _ = writeln!(err, "wrote {} bits to {}", bits.len(), path.display());
            Ok(())
        }
        Command::Test {
            input,
            alpha,
            block_len,
            json,
        } => cmd_test(&input, alpha, block_len, json, out),
        Command::PairRun {
            role,
            listen,
            connect,
            seed,
            n,
            shard_size,
            angles,
            format,
            out: path,
            tcp,
            capture_dir,
        } => {
            let seeds = SeedSpec::new(seed, shard_size).map_err(|e| CliError::Usage(e.to_string()))?;
            let angles = angles.resolve()?;
            let opts = PairRunOpts {
                seeds,
                n,
                angles,
                format: format.into(),
                path,
            };
            match role {
                None => cmd_pair_local(&opts, tcp, capture_dir.as_deref(), out, err),
                Some(role) => cmd_pair_role(role, listen, connect, &opts, out, err),
            }
        }
    }
}

fn resolve_format(explicit: Option<FormatArg>, path: &Path) -> Format {
    explicit
        .map(Format::from)
        .or_else(|| Format::from_path(path))
        .unwrap_or(Format::Csv)
}

fn header(angles: &AngleConfig, pattern: Option<ChshPattern>, seed: Option<u64>) -> Value {
    json!({
        "version": VERSION,
        "angles": angles,
        "pattern": pattern.map(|p| p.label()),
        "seed": seed,
    })
}

fn print_json(out: &mut dyn Write, v: &Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(data)?;
    writeln!(out).map_err(data)
}

fn cmd_exact(angles: &AngleConfig, pattern: ChshPattern, json_out: bool, out: &mut dyn Write) -> CliResult<()> {
    let table = build_pair_table(angles);
    let measure = build_measure(angles);
    let chsh = chsh_value(angles, pattern);
    if json_out {
        let pair_table: Vec<Value> = setting_pairs()
            .iter()
            .flat_map(|&(i, j)| {
                outcome_pairs().into_iter().map(move |(a, b)| {
                    json!({"i": i.value(), "j": j.value(), "a": a.value(), "b": b.value(), "p": table.get(i, j, a, b)})
                })
            })
            .collect();
        let atoms: Vec<Value> = measure
            .atoms()
            .map(|(omega, w)| json!({"omega": omega.coords(), "weight": w}))
            .collect();
        let correlations: Vec<Value> = setting_pairs()
            .iter()
            .map(|&(i, j)| json!({"i": i.value(), "j": j.value(), "value": chsh.correlations[i.index()][j.index()]}))
            .collect();
        let doc = json!({
            "header": header(angles, Some(pattern), None),
            "pair_table": pair_table,
            "measure": {"atoms": atoms, "total": measure.total()},
            "correlations": correlations,
            "chsh": {"pattern": pattern.label(), "s": chsh.s},
            "chsh_max": {"pattern": chsh.s_max_pattern.label(), "s": chsh.s_max},
        });
        return print_json(out, &doc);
    }
    let w = |e: io::Error| data(e);
    writeln!(
        out,
        "# classical-chsh {VERSION}  angles: theta1={} theta2={} theta1p={} theta2p={}  pattern: minus on {}",
        angles.theta1, angles.theta2, angles.theta1p, angles.theta2p, pattern
    )
    .map_err(w)?;
    writeln!(out, "\npair probabilities p_ij(a, b)").map_err(w)?;
    writeln!(
        out,
        "{:>5} {:>14} {:>14} {:>14} {:>14}",
        "i j", "(+,+)", "(+,-)", "(-,+)", "(-,-)"
    )
    .map_err(w)?;
    for (i, j) in setting_pairs() {
        write!(out, "{:>5}", format!("{i} {j}")).map_err(w)?;
        for (a, b) in outcome_pairs() {
            write!(out, " {:>14.10}", table.get(i, j, a, b)).map_err(w)?;
        }
        writeln!(out).map_err(w)?;
    }
    writeln!(out, "\nmeasure P(omega)").map_err(w)?;
    for (omega, weight) in measure.atoms() {
        let c = omega.coords();
        writeln!(
            out,
            "  ({:>2}, {:>2}, {:>2}, {:>2})  {:.12}",
            c[0], c[1], c[2], c[3], weight
        )
        .map_err(w)?;
    }
    writeln!(out, "  total mass {:.15}", measure.total()).map_err(w)?;
    writeln!(out, "\ncorrelations E_ij").map_err(w)?;
    for (i, j) in setting_pairs() {
        writeln!(out, "  E{i}{j} = {:>14.10}", chsh.correlations[i.index()][j.index()]).map_err(w)?;
    }
    writeln!(out, "\nS (minus on {pattern}) = {:.10}", chsh.s).map_err(w)?;
    writeln!(out, "S_max (minus on {}) = {:.10}", chsh.s_max_pattern, chsh.s_max).map_err(w)?;
    Ok(())
}

fn open_output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    match path {
        Some(p) => Ok(Box::new(
            File::create(p).map_err(|e| data(format!("{}: {e}", p.display())))?,
        )),
        None => Ok(Box::new(stdout)),
    }
}

fn cmd_sample(
    seeds: SeedSpec,
    n: u64,
    angles: &AngleConfig,
    format: Format,
    path: Option<&Path>,
    workers: usize,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let sink = open_output(path, stdout)?;
    let mut writer = RecordWriter::new(sink, format);
    if workers == 1 {
        for r in RecordStream::new(seeds, n, angles) {
            writer.write(&r).map_err(data)?;
        }
    } else {
        for r in &generate_stream_parallel(&seeds, n, angles, workers).map_err(data)? {
            writer.write(r).map_err(data)?;
        }
    }
    writer.finish().map_err(data)?;
    Ok(())
}

fn cmd_estimate(
    input: &Path,
    format: Format,
    pattern: ChshPattern,
    threshold: f64,
    angles: &AngleConfig,
    json_out: bool,
    out: &mut dyn Write,
) -> CliResult<()> {
    let records = wire::codec::read_records_file(input, format).map_err(data)?;
    let counts = Counts::from_records(&records);
    let conditionals = stats::empirical_conditionals(&counts).map_err(data)?;
    let est = stats::empirical_chsh(&counts, pattern).map_err(data)?;
    let exact = chsh_value(angles, pattern);
    let report = stats::compare(&exact, &build_pair_table(angles), &est, &conditionals, threshold);
    if json_out {
        let doc = json!({
            "header": header(angles, Some(pattern), None),
            "n_records": counts.total(),
            "conditionals": report.cells,
            "correlations": report.correlations,
            "chsh": {
                "pattern": report.pattern,
                "s_hat": report.s_hat,
                "se_s": report.se_s,
                "s_exact": report.s_exact,
                "z": report.s_z,
                "threshold": report.threshold,
            },
            "agrees_with_model": report.agrees_with_model,
            "verdict": report.verdict,
        });
        return print_json(out, &doc);
    }
    let w = |e: io::Error| data(e);
    writeln!(
        out,
        "# classical-chsh {VERSION}  input: {}  records: {}  pattern: minus on {}",
        input.display(),
        counts.total(),
        pattern
    )
    .map_err(w)?;
    writeln!(
        out,
        "\n{:>5} {:>7} {:>10} {:>10} {:>10} {:>8}",
        "i j", "(a,b)", "exact", "estimate", "se", "z"
    )
    .map_err(w)?;
    for c in &report.cells {
        writeln!(
            out,
            "{:>5} {:>7} {:>10.6} {:>10.6} {:>10.6} {:>8.3}{}",
            format!("{} {}", c.i, c.j),
            format!("({:+},{:+})", c.a, c.b),
            c.exact,
            c.estimate,
            c.se,
            c.z,
            if c.flagged { "  !" } else { "" }
        )
        .map_err(w)?;
    }
    writeln!(out).map_err(w)?;
    for c in &report.correlations {
        writeln!(
            out,
            "  E{}{}  exact {:>10.6}  estimate {:>10.6} ± {:.6}{}",
            c.i,
            c.j,
            c.exact,
            c.estimate,
            c.se,
            if c.flagged { "  !" } else { "" }
        )
        .map_err(w)?;
    }
    writeln!(
        out,
        "\nS_hat = {:.6} ± {:.6}   (exact {:.6})\nverdict: {}",
        report.s_hat, report.se_s, report.s_exact, report.verdict
    )
    .map_err(w)?;
    Ok(())
}

fn cmd_test(input: &Path, alpha: f64, block_len: usize, json_out: bool, out: &mut dyn Write) -> CliResult<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(CliError::Usage(format!("--alpha {alpha} must lie in (0, 0.5)")));
    }
    let file = File::open(input).map_err(|e| data(format!("{}: {e}", input.display())))?;
    let bits = BitStream::read_packed(io::BufReader::new(file)).map_err(data)?;
    let report = randtests::run_battery_with(&bits, alpha, block_len).map_err(data)?;
    if json_out {
        let doc = json!({
            "header": {"version": VERSION, "input": input.display().to_string(), "block_len": block_len},
            "alpha": report.alpha,
            "n_bits": report.n_bits,
            "tests": report.tests,
            "pass": report.pass,
        });
        return print_json(out, &doc);
    }
    let w = |e: io::Error| data(e);
    writeln!(
        out,
        "# classical-chsh {VERSION}  bits: {}  alpha: {alpha}",
        report.n_bits
    )
    .map_err(w)?;
    for t in &report.tests {
        let status = match &t.status {
            randtests::TestStatus::Ok => if t.pass { "pass" } else { "FAIL" }.to_string(),
            randtests::TestStatus::PrerequisiteFailed => "FAIL (frequency prerequisite)".to_string(),
            randtests::TestStatus::Error(m) => format!("n/a ({m})"),
        };
        writeln!(
            out,
            "  {:<16} statistic {:>14.6}  p {:>12.6e}  {status}",
            t.name, t.statistic, t.p_value
        )
        .map_err(w)?;
    }
    writeln!(out, "battery: {}", if report.pass { "PASS" } else { "FAIL" }).map_err(w)?;
    Ok(())
}

struct PairRunOpts {
    seeds: SeedSpec,
    n: u64,
    angles: AngleConfig,
    format: Format,
    path: Option<PathBuf>,
}

fn cmd_pair_local(
    opts: &PairRunOpts,
    tcp: bool,
    capture_dir: Option<&Path>,
    stdout: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let cfg = SessionConfig {
        seeds: opts.seeds,
        n: opts.n,
        angles: opts.angles,
        transport: if tcp {
            SessionTransport::LocalTcp
        } else {
            SessionTransport::Loopback
        },
    };
    let session = wire::run_session(&cfg).map_err(data)?;
    if let Some(dir) = capture_dir {
        std::fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
        for (name, bytes) in [
            ("left.bin", &session.left_channel),
            ("right.bin", &session.right_channel),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| data(format!("{}: {e}", p.display())))?;
        }
    }
    let sink = open_output(opts.path.as_deref(), stdout)?;
    let mut writer = RecordWriter::new(sink, opts.format);
    for r in &session.records {
        writer.write(r).map_err(data)?;
    }
    writer.finish().map_err(data)?;
    let _ = writeln!(err, "merged {} records", session.records.len());
    Ok(())
}

fn connect_with_retry(addr: &str) -> CliResult<TcpStream> {
    let addrs: Vec<_> = addr
        .to_socket_addrs()
        .map_err(|e| CliError::Usage(format!("bad address {addr}: {e}")))?
        .collect();
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        match TcpStream::connect(&addrs[..]) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(data(format!("connect {addr}: {e}"))),
            Err(_) => std::thread::sleep(Duration::from_millis(50)),
        }
    }
}

fn cmd_pair_role(
    role: Role,
    listen: Option<String>,
    connect: Vec<String>,
    opts: &PairRunOpts,
    stdout: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let need_listen = || {
        listen
            .clone()
            .ok_or_else(|| CliError::Usage(format!("--role {role:?} needs --listen")))
    };
    let bind = |addr: &str| TcpListener::bind(addr).map_err(|e| data(format!("listen {addr}: {e}")));
    match role {
        Role::Source => {
            let [left, right] = connect.as_slice() else {
                return Err(CliError::Usage(
                    "--role source needs --connect LEFT --connect RIGHT".into(),
                ));
            };
            let l = connect_with_retry(left)?;
            let r = connect_with_retry(right)?;
            let sent = wire::run_source(opts.seeds, opts.n, &opts.angles, l, r).map_err(data)?;
            let _ = writeln!(err, "source sent {sent} events");
        }
        Role::Left | Role::Right => {
            let side = if role == Role::Left { Side::Left } else { Side::Right };
            let [merger] = connect.as_slice() else {
                return Err(CliError::Usage(format!("--role {side} needs --connect MERGER")));
            };
            let listener = bind(&need_listen()?)?;
            let (up, _) = listener.accept().map_err(data)?;
            let down = connect_with_retry(merger)?;
            let forwarded = wire::run_wing(side, up, down).map_err(data)?;
            let _ = writeln!(err, "{side} wing forwarded {forwarded} halves");
        }
        Role::Merge => {
            let listener = bind(&need_listen()?)?;
            let (a, _) = listener.accept().map_err(data)?;
            let (b, _) = listener.accept().map_err(data)?;
            let sink = open_output(opts.path.as_deref(), stdout)?;
            let mut writer = RecordWriter::new(sink, opts.format);
            let merged = wire::run_merger(a, b, |r| writer.write(r));
            writer.finish().map_err(data)?;
            let merged = merged.map_err(data)?;
            let _ = writeln!(err, "merged {merged} records");
        }
    }
    Ok(())
}
