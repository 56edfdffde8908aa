//! `filmtag` command-line front end.
//!
//! Exit codes: 0 success, 1 authentication failure, 2 invalid input.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use filmtag::assets;
use filmtag::colorimetry::{ColorMatchingTable, Colorimeter, Illuminant};
use filmtag::designer;
use filmtag::files::{self, DesignDoc, MaterialResolver, StackDoc, TagDoc};
use filmtag::tag::{
    self, authenticate, encode_qr, pdlc_haze, random_payload, render_with_haze, IlluminationMode, MaskChoice,
    TagModel, Verifier,
};
use filmtag::tmm::{self, Channel, IncidenceSpec, Polarization, SpectralResponse, StackSpec, WavelengthGrid};

type CliResult<T> = Result<T, Box<dyn Error>>;

const DEFAULT_PAYLOAD_LEN: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "filmtag", version, about = "Thin-film nanocavity optics and optical tag simulator")]
struct Cli {
    /// Root for relative material paths and the bundled observer tables.
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate R/T/A spectra of a stack file.
    Simulate(SimulateArgs),
    /// Chromaticity of a stack or a spectra CSV.
    Color(ColorArgs),
    /// Optimize layer thicknesses from a design file.
    Optimize(OptimizeArgs),
    /// Render or authenticate a simulated tag.
    Tag(TagArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    stack: PathBuf,
    /// Wavelength grid as min:max:step in nm.
    #[arg(long, default_value = "350:800:1")]
    grid: String,
    /// Angle of incidence in degrees.
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    #[arg(long, value_enum, default_value_t = PolArg::Unpolarized)]
    pol: PolArg,
    #[arg(long, default_value = "spectra.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolArg {
    S,
    P,
    Unpolarized,
}

impl From<PolArg> for Polarization {
    fn from(p: PolArg) -> Self {
        match p {
            PolArg::S => Polarization::S,
            PolArg::P => Polarization::P,
            PolArg::Unpolarized => Polarization::Unpolarized,
        }
    }
}

#[derive(Debug, Args)]
struct ColorArgs {
    /// Stack JSON or spectra CSV.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::R)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = IlluminantArg::D65)]
    illuminant: IlluminantArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "R")]
    R,
    #[value(name = "T")]
    T,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IlluminantArg {
    D65,
    Ee,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    design: PathBuf,
    /// Result file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("action").required(true).multiple(true).args(["render", "authenticate"])))]
struct TagArgs {
    tag: PathBuf,
    /// Tag temperature in °C.
    #[arg(long)]
    temp: f64,
    #[arg(long, value_enum, default_value_t = IlluminationArg::Reflection)]
    mode: IlluminationArg,
    /// Write the rendered tag as a binary PPM.
    #[arg(long, value_name = "PPM")]
    render: Option<PathBuf>,
    /// Print the two-level verdict; exit 1 unless both levels pass.
    #[arg(long)]
    authenticate: bool,
    /// Pixels per module.
    #[arg(long, default_value_t = 8)]
    scale: usize,
    /// Genuine stack the verifier predicts colours from; the bundled
    /// nanocavity when omitted.
    #[arg(long, value_name = "STACK")]
    reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IlluminationArg {
    Reflection,
    Transmission,
}

impl From<IlluminationArg> for IlluminationMode {
    fn from(m: IlluminationArg) -> Self {
        match m {
            IlluminationArg::Reflection => IlluminationMode::Reflection,
            IlluminationArg::Transmission => IlluminationMode::Transmission,
        }
    }
}

struct Context {
    data_dir: PathBuf,
}

impl Context {
    fn resolver(&self) -> MaterialResolver {
        MaterialResolver::new(&self.data_dir)
    }

    fn stack(&self, path: &Path) -> CliResult<StackSpec> {
        let doc = StackDoc::parse(&files::read_to_string(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(self.resolver().stack(&doc)?)
    }

    fn colorimeter(&self, illuminant: IlluminantArg) -> CliResult<Colorimeter> {
        let dir = self.data_dir.join("colorimetry");
        let cmf = ColorMatchingTable::parse(&files::read_to_string(&dir.join("cie1931_2deg_5nm.csv"))?)?;
        let illuminant = match illuminant {
            IlluminantArg::D65 => Illuminant::parse("D65", &files::read_to_string(&dir.join("d65_5nm.csv"))?)?,
            IlluminantArg::Ee => Illuminant::EqualEnergy,
        };
        Ok(Colorimeter::new(cmf, illuminant)?)
    }
}

fn parse_grid(spec: &str) -> CliResult<WavelengthGrid> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("grid {spec:?} is not min:max:step"))?;
    let [min, max, step] = parts[..] else {
        return Err(format!("grid {spec:?} is not min:max:step").into());
    };
    Ok(WavelengthGrid::range(min, max, step)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()).into())
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> CliResult<ExitCode> {
    let stack = ctx.stack(&args.stack)?;
    let grid = parse_grid(&args.grid)?;
    let incidence = IncidenceSpec::new(args.angle, args.pol.into())?;
    let resp = tmm::simulate(&stack, &grid, &incidence)?;
    write_file(&args.out, resp.to_csv().as_bytes())?;
    let extrema = |c: Channel| {
        let v = resp.channel(c);
        json!({
            "maxima": tmm::local_maxima(&resp.wavelengths, v),
            "minima": tmm::local_minima(&resp.wavelengths, v),
        })
    };
    println!("{}", json!({"T": extrema(Channel::T), "R": extrema(Channel::R)}));
    Ok(ExitCode::SUCCESS)
}

fn cmd_color(ctx: &Context, args: &ColorArgs) -> CliResult<ExitCode> {
    let colorimeter = ctx.colorimeter(args.illuminant)?;
    let text = files::read_to_string(&args.input)?;
    let resp = if text.starts_with(tmm::SPECTRA_CSV_HEADER) {
        SpectralResponse::from_csv(&text)?
    } else {
        let doc = StackDoc::parse(&text).map_err(|e| format!("{}: {e}", args.input.display()))?;
        let stack = ctx.resolver().stack(&doc)?;
        let (min, max) = colorimeter.cmf().support();
        tmm::simulate(&stack, &WavelengthGrid::range(min, max, 1.0)?, &IncidenceSpec::normal())?
    };
    let channel = match args.mode {
        ModeArg::R => Channel::R,
        ModeArg::T => Channel::T,
    };
    let result = colorimeter.chromaticity(&resp.wavelengths, resp.channel(channel))?;
    println!("{}", result.to_json());
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(ctx: &Context, args: &OptimizeArgs) -> CliResult<ExitCode> {
    let doc = DesignDoc::parse(&files::read_to_string(&args.design)?)
        .map_err(|e| format!("{}: {e}", args.design.display()))?;
    let (space, targets) = doc.resolve(&mut ctx.resolver())?;
    let result = designer::optimize(&space, &targets, doc.budget, doc.seed)?;
    let text = serde_json::to_string(&result)? + "\n";
    match &args.out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_tag(ctx: &Context, args: &TagArgs) -> CliResult<ExitCode> {
    let doc = TagDoc::parse(&files::read_to_string(&args.tag)?).map_err(|e| format!("{}: {e}", args.tag.display()))?;
    let stack = ctx.resolver().stack(&doc.stack)?;
    let payload = match &doc.payload {
        Some(p) => p.as_bytes().to_vec(),
        None => random_payload(doc.seed, DEFAULT_PAYLOAD_LEN),
    };
    let qr = encode_qr(&payload, doc.ec_level, MaskChoice::Auto)?;
    let tag = TagModel::new(stack, qr, doc.lc);
    let colorimeter = ctx.colorimeter(IlluminantArg::D65)?;
    let colors = colorimeter.classify_mode_colors(&tag.stack)?;
    let haze = pdlc_haze(&tag.pdlc, args.temp);
    let image = render_with_haze(&tag, &colors, haze, args.temp, args.mode.into(), args.scale)?;

    if let Some(path) = &args.render {
        write_file(path, &image.to_ppm())?;
    }
    if !args.authenticate {
        return Ok(ExitCode::SUCCESS);
    }
    let reference = match &args.reference {
        Some(path) => ctx.stack(path)?,
        None => ctx.stack(&ctx.data_dir.join("paper_stack.json"))?,
    };
    let verifier = Verifier::from_colors(&payload, colorimeter.classify_mode_colors(&reference)?, colorimeter);
    let verdict = match authenticate(&image, &verifier) {
        Ok(v) => v,
        Err(tag::TagError::NotATag) => {
            eprintln!("error: finder patterns not found");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    println!("{}", verdict.to_json());
    Ok(if verdict.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Context {
        data_dir: cli.data_dir.unwrap_or_else(assets::default_data_dir),
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Color(a) => cmd_color(&ctx, a),
        Command::Optimize(a) => cmd_optimize(&ctx, a),
        Command::Tag(a) => cmd_tag(&ctx, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
