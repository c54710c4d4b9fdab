use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gbpd_core::clip::{clip_to_window, ClippedDiagram};
use gbpd_core::diagram::{build_diagram, DiagramGraph, Tolerances};
use gbpd_core::fit::{fit_generators_from_labels, FitWarning};
use gbpd_core::measure::measure_all;
use gbpd_core::oracle::{compare_labels, rasterize, rasterize_analytic, read_pgm, write_pgm};
use gbpd_core::output::DiagramDocument;
use gbpd_core::scene::{generate, read_scene, write_scene, Preset};
use gbpd_core::svg::{render_svg, SvgOptions};
use gbpd_core::{Generator, Vec2, Window};

/// Generalized balanced power diagrams: scenes, analytic diagrams, label
/// images and cell measures.
#[derive(Parser)]
#[command(name = "gbpd", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random scene as CSV.
    Gen(GenArgs),
    /// Build the diagram of a scene and write it as JSON (and optionally SVG).
    Compute(ComputeArgs),
    /// Label every pixel of the window with its nearest generator (PGM).
    Raster(RasterArgs),
    /// Area, perimeter and neighbour count of every cell inside the window (CSV).
    Measure(MeasureArgs),
    /// Compare two label images.
    Compare(CompareArgs),
    /// Fit one generator per label of a label image (CSV).
    Fit(FitArgs),
}

#[derive(Args)]
struct WindowArg {
    /// Window as x0 y0 x1 y1.
    #[arg(long, num_args = 4, value_names = ["X0", "Y0", "X1", "Y1"], default_values_t = [0.0, 0.0, 400.0, 400.0], allow_negative_numbers = true)]
    window: Vec<f64>,
}

impl WindowArg {
    fn get(&self) -> Result<Window> {
        let w = &self.window;
        Window::new(w[0], w[1], w[2], w[3])
            .ok_or_else(|| Failure::usage(anyhow!("window must satisfy x0 < x1 and y0 < y1")))
    }
}

#[derive(Args)]
struct SceneInput {
    /// Scene CSV (id,px,py,m11,m12,m22,w).
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    window: WindowArg,
    /// Vertex tolerance, relative to the local distance scale.
    #[arg(long)]
    tol: Option<f64>,
}

impl SceneInput {
    fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(eps) = self.tol {
            t.eps_vert = eps;
        }
        t
    }
}

#[derive(Args)]
struct GenArgs {
    /// paper-random, paper-weights or isotropic.
    #[arg(long, default_value = "paper-random")]
    preset: String,
    /// Number of generators.
    #[arg(long, short, default_value_t = 148)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    window: WindowArg,
    /// Output file (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    scene: SceneInput,
    /// Diagram JSON (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also render the diagram clipped to the window.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Mark vertices in the SVG.
    #[arg(long)]
    svg_vertices: bool,
    /// SVG width in pixels.
    #[arg(long, default_value_t = 800)]
    width: usize,
    /// SVG height in pixels.
    #[arg(long, default_value_t = 800)]
    height: usize,
}

#[derive(Args)]
struct RasterArgs {
    #[command(flatten)]
    scene: SceneInput,
    #[arg(long, default_value_t = 400)]
    width: usize,
    #[arg(long, default_value_t = 400)]
    height: usize,
    /// Label from the analytic diagram instead of per-pixel distances.
    #[arg(long)]
    analytic: bool,
    /// PGM output (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    scene: SceneInput,
    /// CSV output (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference image; distances are measured to its boundaries.
    a: PathBuf,
    b: PathBuf,
    /// Exit with status 1 if the mismatch fraction exceeds this.
    #[arg(long)]
    max_mismatch: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Label image (PGM).
    #[arg(long, short)]
    input: PathBuf,
    /// Covariance-to-matrix scale: M = U diag(1/(scale e1), 1/(scale e2)) Uᵀ.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Weight given to every fitted generator.
    #[arg(long, default_value_t = 0.0)]
    weight: f64,
    /// Scene CSV output (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Error classes and their exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Other = 1,
    Usage = 2,
    Parse = 3,
    Io = 4,
    Compute = 5,
}

#[derive(Debug)]
struct Failure {
    kind: Kind,
    error: anyhow::Error,
}

impl Failure {
    fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        Failure { kind, error: error.into() }
    }
    fn usage(e: impl Into<anyhow::Error>) -> Self {
        Self::new(Kind::Usage, e)
    }
    fn parse(e: impl Into<anyhow::Error>) -> Self {
        Self::new(Kind::Parse, e)
    }
    fn io(e: impl Into<anyhow::Error>) -> Self {
        Self::new(Kind::Io, e)
    }
    fn compute(e: impl Into<anyhow::Error>) -> Self {
        Self::new(Kind::Compute, e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).with_context(|| format!("cannot open {}", path.display())).map_err(Failure::io)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(Failure::io)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let mut w = sink(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(Failure::io)
}

fn load_scene(path: &Path) -> Result<Vec<Generator>> {
    let scene =
        read_scene(open(path)?).with_context(|| format!("reading {}", path.display())).map_err(Failure::parse)?;
    if scene.is_empty() {
        return Err(Failure::parse(anyhow!("{}: scene has no generators", path.display())));
    }
    Ok(scene)
}

fn load_labels(path: &Path) -> Result<gbpd_core::LabelImage> {
    read_pgm(open(path)?).with_context(|| format!("reading {}", path.display())).map_err(|e| {
        match e.downcast_ref::<gbpd_core::oracle::OracleError>() {
            Some(gbpd_core::oracle::OracleError::Io(_)) => Failure::io(e),
            _ => Failure::parse(e),
        }
    })
}

fn diagram(input: &SceneInput) -> Result<(Vec<Generator>, DiagramGraph, Window)> {
    let scene = load_scene(&input.input)?;
    let win = input.window.get()?;
    let g = build_diagram(&scene, &input.tolerances());
    Ok((scene, g, win))
}

fn gen(a: GenArgs) -> Result<()> {
    let preset: Preset = a.preset.parse().map_err(Failure::usage)?;
    if a.n == 0 {
        return Err(Failure::usage(anyhow!("--n must be at least 1")));
    }
    let scene = generate(preset, a.n, a.seed, a.window.get()?);
    let mut w = sink(a.out.as_deref())?;
    write_scene(&mut w, &scene).map_err(Failure::io)?;
    w.flush().map_err(Failure::io)
}

fn compute(a: ComputeArgs) -> Result<()> {
    let (_, g, win) = diagram(&a.scene)?;
    let doc = DiagramDocument::from_graph(&g);
    write_all(a.out.as_deref(), |w| writeln!(w, "{}", doc.to_json()))?;
    if let Some(path) = &a.svg {
        let clipped = clip_to_window(&g, win);
        let vertices: Vec<Vec2> = g.vertices.iter().map(|v| v.pos).collect();
        let opts = SvgOptions { width: a.width, height: a.height, vertices: a.svg_vertices, ..SvgOptions::default() };
        let svg = render_svg(&clipped, &vertices, &opts);
        write_all(Some(path), |w| w.write_all(svg.as_bytes()))?;
    }
    let empty = g.cells.iter().filter(|c| c.empty).count();
    eprintln!(
        "{} generators, {} vertices, {} edges, {} empty cells",
        g.generators.len(),
        g.vertices.len(),
        g.edges.len(),
        empty
    );
    Ok(())
}

fn raster(a: RasterArgs) -> Result<()> {
    if a.width == 0 || a.height == 0 {
        return Err(Failure::usage(anyhow!("--width and --height must be positive")));
    }
    let img = if a.analytic {
        let (_, g, win) = diagram(&a.scene)?;
        rasterize_analytic(&clip_to_window(&g, win), a.width, a.height)
    } else {
        let scene = load_scene(&a.scene.input)?;
        rasterize(&scene, a.scene.window.get()?, a.width, a.height)
    };
    write_all(a.out.as_deref(), |w| write_pgm(w, &img))
}

fn measure_rows(c: &ClippedDiagram) -> Result<Vec<String>> {
    let cells = measure_all(c).map_err(Failure::compute)?;
    Ok(cells
        .iter()
        .map(|m| {
            format!(
                "{},{},{},{},{}",
                c.generators[m.cell_id].id,
                m.area,
                m.perimeter,
                m.regions(),
                c.neighbors(m.cell_id).len()
            )
        })
        .collect())
}

fn measure(a: MeasureArgs) -> Result<()> {
    let (_, g, win) = diagram(&a.scene)?;
    let rows = measure_rows(&clip_to_window(&g, win))?;
    write_all(a.out.as_deref(), |w| {
        writeln!(w, "cell_id,area,perimeter,n_components,n_neighbors")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}

fn compare(a: CompareArgs) -> Result<bool> {
    let x = load_labels(&a.a)?;
    let y = load_labels(&a.b)?;
    let stats = compare_labels(&x, &y).map_err(Failure::usage)?;
    println!("mismatch {} of {} pixels", stats.count, stats.total);
    println!("fraction {}", stats.fraction);
    println!("within_one_pixel {}", stats.within_one_fraction());
    let hist: Vec<String> = stats.histogram.iter().map(usize::to_string).collect();
    println!("distance_histogram {}", hist.join(" "));
    Ok(a.max_mismatch.is_none_or(|m| stats.fraction <= m))
}

fn fit(a: FitArgs) -> Result<()> {
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(Failure::usage(anyhow!("--scale must be positive")));
    }
    let img = load_labels(&a.input)?;
    let fit = fit_generators_from_labels(&img, a.scale, a.weight).map_err(Failure::compute)?;
    for w in &fit.warnings {
        let FitWarning::DegenerateRegion { label, pixels } = w;
        eprintln!("warning: label {label} ({pixels} pixels) is degenerate; using an isotropic generator");
    }
    let mut w = sink(a.out.as_deref())?;
    write_scene(&mut w, &fit.generators).map_err(Failure::io)?;
    w.flush().map_err(Failure::io)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::usage)?;
    }
    match cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Compute(a) => compute(a).map(|_| true),
        Command::Raster(a) => raster(a).map(|_| true),
        Command::Measure(a) => measure(a).map(|_| true),
        Command::Compare(a) => compare(a),
        Command::Fit(a) => fit(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(Kind::Other as u8),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.kind as u8)
        }
    }
}
