//! `qic`: encode images as quantum circuits, price them, sweep
//! rate-distortion curves and simulate encoded circuits.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use qic_core::blocktransform::{self, QuantSpec};
use qic_core::costmodel::{cross_check, CostParams, CostReport};
use qic_core::encoders::{build_circuit, extract_data, Scheme};
use qic_core::harness::{
    self, dct_cost, decode_image, encode_dct, encode_pixels, forward_dct, reconstruct,
    run_pixel_domain, run_rd_curve, write_csv, write_mismatch_csv, CsvRow, Domain, EncodedImage,
};
use qic_core::pixelgrid::{load_pgm, GrayImage};
use qic_core::simulator::{mismatches, simulate_basis, simulate_statevector, BasisMap, SimError};
use qic_core::Execution;

#[derive(Parser)]
#[command(name = "qic", version, about = "Quantum image circuit workbench")]
struct Cli {
    /// Disable data parallelism.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode an image into a circuit container.
    Encode(EncodeArgs),
    /// Price an image under one or more schemes.
    Cost(CostArgs),
    /// Bits and PSNR over a sweep of quantization factors.
    Rdcurve(RdArgs),
    /// Simulate a circuit container and decode it.
    Simulate(SimArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Pixel,
    Dct,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Pixel => Domain::Pixel,
            DomainArg::Dct => Domain::Dct,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Basis,
    Statevector,
}

#[derive(Clone, Debug)]
struct SchemeList(Vec<Scheme>);

fn parse_schemes(s: &str) -> Result<SchemeList, String> {
    if s == "all" {
        return Ok(SchemeList(Scheme::ALL.to_vec()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<Scheme>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()
        .map(SchemeList)
}

fn parse_quant(s: &str) -> Result<QuantSpec, String> {
    let v: u32 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not an integer"))?;
    QuantSpec::new(v).map_err(|e| e.to_string())
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long, value_parser = |s: &str| s.parse::<Scheme>().map_err(|e| e.to_string()))]
    scheme: Scheme,
    #[arg(long, value_enum)]
    domain: DomainArg,
    /// Quantization factor (transform domain only).
    #[arg(long, value_parser = parse_quant)]
    q: Option<QuantSpec>,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CostArgs {
    /// Comma-separated schemes, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_schemes)]
    schemes: SchemeList,
    #[arg(long, value_enum, default_value = "pixel")]
    domain: DomainArg,
    #[arg(long, value_parser = parse_quant)]
    q: Option<QuantSpec>,
    #[arg(short, long)]
    input: PathBuf,
    /// Cost constants (`C_T`, `R_N`, `A_BIT`); defaults to 1 each.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RdArgs {
    #[arg(long, default_value = "zscneqr,scmfrqi,efrqi", value_parser = parse_schemes)]
    schemes: SchemeList,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,70", value_parser = parse_quant)]
    q: Vec<QuantSpec>,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value = "basis")]
    mode: Mode,
    /// Base seed for reset outcomes; circuit `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    circuit: PathBuf,
    /// Write the decoded image here.
    #[arg(long)]
    decode: Option<PathBuf>,
    /// Write positions where the decode differs from the encoded data.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Internal(m) => m,
        }
    }
}

fn read_image(path: &Path) -> Result<GrayImage, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    load_pgm(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_params(path: Option<&Path>) -> Result<CostParams, Failure> {
    let Some(path) = path else {
        return Ok(CostParams::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    CostParams::parse_config(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Input(format!("stdout: {e}"))),
    }
}

fn encode(args: EncodeArgs, exec: Execution) -> Result<(), Failure> {
    let img = read_image(&args.input)?;
    let out = match (args.domain, args.q) {
        (DomainArg::Pixel, None) => encode_pixels(&img, args.scheme),
        (DomainArg::Pixel, Some(_)) => {
            return Err(Failure::Usage("--q applies to --domain dct only".into()))
        }
        (DomainArg::Dct, Some(q)) => encode_dct(&img, q, args.scheme, exec),
        (DomainArg::Dct, None) => return Err(Failure::Usage("--domain dct needs --q".into())),
    }
    .map_err(|e| Failure::Input(e.to_string()))?;
    fs::write(&args.output, out.serialize())
        .map_err(|e| Failure::Input(format!("{}: {e}", args.output.display())))?;
    let gates: usize = harness::circuits(&out).map(|c| c.gates().len()).sum();
    eprintln!("{} circuit(s), {gates} gates", out.entries.len());
    Ok(())
}

/// Price `scheme` and confirm the formula against the circuits it describes.
fn checked_cost(
    img: &GrayImage,
    domain: Domain,
    quant: Option<QuantSpec>,
    scheme: Scheme,
    params: &CostParams,
    exec: Execution,
) -> Result<(CostReport, Option<f64>), Failure> {
    let fail = |e: harness::HarnessError| Failure::Input(e.to_string());
    let (report, encoded, psnr) = match (domain, quant) {
        (Domain::Pixel, _) => {
            let report = run_pixel_domain(img, &[scheme], params)
                .map_err(fail)?
                .remove(0);
            let (data, layout) = harness::pixel_encoding(img).map_err(fail)?;
            let circuit =
                build_circuit(&data, layout, scheme).map_err(|e| Failure::Input(e.to_string()))?;
            (report, vec![circuit], None)
        }
        (Domain::Dct, Some(q)) => {
            let enc = forward_dct(img, q, exec).map_err(fail)?;
            let report = dct_cost(&enc, scheme, params, exec).map_err(fail)?;
            let circuits = harness::block_circuits(&enc, scheme, exec).map_err(fail)?;
            let recon = reconstruct(&enc, exec);
            let psnr = blocktransform::psnr(&img.pad_for_blocks(0), &recon)
                .map_err(|e| Failure::Input(e.to_string()))?;
            (
                report,
                circuits.into_iter().map(|e| e.circuit).collect(),
                Some(psnr),
            )
        }
        (Domain::Dct, None) => return Err(Failure::Usage("--domain dct needs --q".into())),
    };
    let cc = cross_check(&encoded, &report, params);
    if !cc.agrees() {
        return Err(Failure::Internal(format!(
            "{scheme}: formula connection bits {} disagree with gate list {}",
            cc.formula, cc.gate_list
        )));
    }
    Ok((report, psnr))
}

fn cost(args: CostArgs, exec: Execution) -> Result<(), Failure> {
    let img = read_image(&args.input)?;
    let params = read_params(args.params.as_deref())?;
    let domain = Domain::from(args.domain);
    if domain == Domain::Pixel && args.q.is_some() {
        return Err(Failure::Usage("--q applies to --domain dct only".into()));
    }
    let id = image_id(&args.input);
    let mut results = Vec::new();
    for &scheme in &args.schemes.0 {
        results.push(checked_cost(&img, domain, args.q, scheme, &params, exec)?);
    }
    let rows = results.iter().map(|(report, psnr)| CsvRow {
        image: &id,
        domain,
        q: args.q.map(QuantSpec::get),
        report,
        psnr_db: *psnr,
    });
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).map_err(|e| Failure::Internal(e.to_string()))?;
    write_output(args.csv.as_deref(), &buf)
}

fn rdcurve(args: RdArgs, exec: Execution) -> Result<(), Failure> {
    let img = read_image(&args.input)?;
    let params = read_params(args.params.as_deref())?;
    let id = image_id(&args.input);
    let points = run_rd_curve(&img, &id, &args.schemes.0, &args.q, &params, exec)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let rows = points.iter().map(|p| CsvRow {
        image: &p.image,
        domain: Domain::Dct,
        q: Some(p.q),
        report: &p.report,
        psnr_db: Some(p.psnr_db),
    });
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).map_err(|e| Failure::Internal(e.to_string()))?;
    write_output(args.csv.as_deref(), &buf)
}

fn simulate(args: SimArgs, exec: Execution) -> Result<(), Failure> {
    let at = |e: &dyn std::fmt::Display| Failure::Input(format!("{}: {e}", args.circuit.display()));
    let text = fs::read_to_string(&args.circuit).map_err(|e| at(&e))?;
    let encoded = EncodedImage::parse(&text).map_err(|e| at(&e))?;
    let sim_err = |e: SimError| Failure::Input(e.to_string());
    let maps: Vec<BasisMap> = match args.mode {
        Mode::Basis => exec
            .map(&encoded.entries, |e| {
                simulate_basis(&e.circuit, Execution::Sequential)
            })
            .into_iter()
            .collect::<Result<_, _>>()
            .map_err(sim_err)?,
        Mode::Statevector => encoded
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                simulate_statevector(&e.circuit, args.seed.wrapping_add(i as u64))
                    .map(|s| s.to_basis_map())
            })
            .collect::<Result<_, _>>()
            .map_err(sim_err)?,
    };

    let mut rows = Vec::new();
    for (e, map) in encoded.entries.iter().zip(&maps) {
        let data = extract_data(&e.circuit)
            .map_err(|err| Failure::Input(format!("{}: {err}", e.circuit.source())))?;
        rows.extend(mismatches(map, &data).into_iter().map(|m| (e.block, m)));
    }
    if let Some(path) = &args.decode {
        let img = decode_image(&encoded, &maps, exec).map_err(|e| Failure::Input(e.to_string()))?;
        fs::write(path, img.write_pgm())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &args.report {
        let mut buf = Vec::new();
        write_mismatch_csv(&mut buf, &rows).map_err(|e| Failure::Internal(e.to_string()))?;
        fs::write(path, buf).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    eprintln!(
        "{} circuit(s) simulated, {} mismatching position(s)",
        maps.len(),
        rows.len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Encode(a) => encode(a, exec),
        Command::Cost(a) => cost(a, exec),
        Command::Rdcurve(a) => rdcurve(a, exec),
        Command::Simulate(a) => simulate(a, exec),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qic: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
