//! `owc`: dataset generation, rendering, tracking and noise sweeps for the
//! sea-surface optical link simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

use owc_core::config::{flag_name, parse_snr_list, RunConfig, KEYS};
use owc_core::dataset::{self, Dataset, Split};
use owc_core::eval::{self, TrackerFailure};
use owc_core::optics::{solve_candidates, LinkGeometry, SolverSettings};
use owc_core::par::Exec;
use owc_core::render::{self, RenderSettings};
use owc_core::tracker::{parse_tracker_list, TrackerFactory};
use owc_core::wave::{write_heightmap, HeightmapSpec};
use owc_core::OwcError;

const ECHO_FILE: &str = "config.cfg";
const DEFAULT_TRACKERS: &str = "oracle,meanshift,none";

fn config_args(cmd: Command) -> Command {
    let cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value configuration file"),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads (default: all cores)"),
        );
    KEYS.iter().fold(cmd, |cmd, k| {
        let mut arg = Arg::new(k.key)
            .long(flag_name(k.key))
            .value_name("VALUE")
            .help(k.help)
            .help_heading("Configuration overrides");
        if let Some(a) = k.alias {
            arg = arg.visible_alias(a);
        }
        cmd.arg(arg)
    })
}

fn dataset_arg() -> Arg {
    Arg::new("dataset")
        .long("dataset")
        .value_name("DIR")
        .required(true)
        .help("dataset directory written by `owc gen`")
}

fn trackers_arg(default: &'static str) -> Arg {
    Arg::new("trackers")
        .long("trackers")
        .visible_alias("tracker")
        .value_name("LIST")
        .default_value(default)
        .help("comma-separated trackers: oracle, meanshift, none, file:<path>")
}

fn cli() -> Command {
    Command::new("owc")
        .about("Air-to-sea optical link simulator with vision-based alignment")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(config_args(
            Command::new("gen").about("Generate a labelled image-sequence dataset"),
        ))
        .subcommand(config_args(
            Command::new("track")
                .about("Score trackers on a dataset")
                .arg(dataset_arg())
                .arg(trackers_arg("oracle")),
        ))
        .subcommand(config_args(
            Command::new("sweep")
                .about("Score trackers on a dataset over a list of image SNRs")
                .arg(dataset_arg())
                .arg(trackers_arg(DEFAULT_TRACKERS))
                .arg(
                    Arg::new("snr")
                        .long("snr")
                        .value_name("LIST")
                        .required(true)
                        .help("comma-separated peak SNRs in dB; inf for clean frames"),
                ),
        ))
        .subcommand(config_args(
            Command::new("simulate")
                .about("Run trackers over one long simulated sequence")
                .arg(trackers_arg(DEFAULT_TRACKERS)),
        ))
        .subcommand(config_args(
            Command::new("render")
                .about("Render one camera frame of a scene to a 16-bit PGM")
                .arg(
                    Arg::new("index")
                        .long("index")
                        .value_name("K")
                        .value_parser(clap::value_parser!(usize))
                        .default_value("0")
                        .help("frame index within the scene's sequence"),
                ),
        ))
        .subcommand(config_args(
            Command::new("surface")
                .about("Export a height map of a scene's sea surface")
                .arg(
                    Arg::new("extent")
                        .long("extent")
                        .value_name("METRES")
                        .value_parser(clap::value_parser!(f64))
                        .default_value("20")
                        .help("side of the square patch centred on the origin"),
                )
                .arg(
                    Arg::new("cells")
                        .long("cells")
                        .value_name("N")
                        .value_parser(clap::value_parser!(u32))
                        .default_value("256")
                        .help("samples per side"),
                )
                .arg(
                    Arg::new("time")
                        .long("time")
                        .value_name("SECONDS")
                        .value_parser(clap::value_parser!(f64))
                        .default_value("0")
                        .help("surface time"),
                ),
        ))
}

struct Ctx {
    cfg: RunConfig,
    exec: Exec,
}

fn setup(m: &ArgMatches) -> Result<Ctx, OwcError> {
    let overrides: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|k| {
            m.get_one::<String>(k.key)
                .map(|v| (k.key.to_string(), v.clone()))
        })
        .collect();
    let env_seed = std::env::var("OWC_SEED").ok();
    let file = m.get_one::<String>("config").map(PathBuf::from);
    let cfg = RunConfig::resolve(file.as_deref(), env_seed.as_deref(), &overrides)?;
    let jobs = m.get_one::<usize>("jobs").copied();
    if jobs == Some(0) {
        return Err(OwcError::Config("--jobs must be >= 1".into()));
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        // Fails only if the pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let exec = if jobs == Some(1) {
        Exec::Sequential
    } else {
        Exec::default()
    };
    eprint!("# effective configuration\n{}", cfg.render());
    Ok(Ctx { cfg, exec })
}

fn create_out(cfg: &RunConfig) -> Result<&Path, OwcError> {
    let out = cfg.out.as_path();
    fs::create_dir_all(out).map_err(|e| OwcError::Io {
        path: out.into(),
        source: e,
    })?;
    let echo = out.join(ECHO_FILE);
    fs::write(&echo, cfg.render()).map_err(|e| OwcError::Io {
        path: echo,
        source: e,
    })?;
    Ok(out)
}

fn trackers(m: &ArgMatches, cfg: &RunConfig) -> Result<Vec<TrackerFactory>, OwcError> {
    let list = m.get_one::<String>("trackers").expect("has default");
    parse_tracker_list(list)?
        .into_iter()
        .map(|s| TrackerFactory::new(s, cfg.meanshift))
        .collect()
}

fn report_failures(failures: &[TrackerFailure]) {
    for f in failures {
        eprintln!(
            "warning: {} failed at frame {}: {}",
            f.tracker, f.frame, f.message
        );
    }
}

fn cmd_gen(m: &ArgMatches) -> Result<(), OwcError> {
    let ctx = setup(m)?;
    let out = create_out(&ctx.cfg)?;
    dataset::generate_dataset(&ctx.cfg.dataset, out, ctx.exec)?;
    println!("{}", out.join(dataset::MANIFEST_FILE).display());
    Ok(())
}

fn open_for_eval(
    m: &ArgMatches,
    ctx: &Ctx,
) -> Result<(Dataset, Vec<eval::PreparedSample>), OwcError> {
    let dir = PathBuf::from(m.get_one::<String>("dataset").expect("required"));
    let ds = Dataset::open(&dir)?;
    let prepared = eval::load_for_eval(&ds, ctx.cfg.eval_split, ctx.exec)?;
    Ok((ds, prepared))
}

fn cmd_track(m: &ArgMatches) -> Result<(), OwcError> {
    let ctx = setup(m)?;
    let trackers = trackers(m, &ctx.cfg)?;
    let (ds, prepared) = open_for_eval(m, &ctx)?;
    let opts = ctx.cfg.eval_options(ctx.exec);
    let run = eval::evaluate_dataset(&ds.config, &prepared, &trackers, &opts)?;
    report_failures(&run.failures);
    let out = create_out(&ctx.cfg)?;
    eval::write_scores_csv(&out.join("scores.csv"), &run.scores)?;
    eval::write_trace_csv(&out.join("trace.csv"), &run.trace)?;
    println!("{}", out.join("scores.csv").display());
    Ok(())
}

fn cmd_sweep(m: &ArgMatches) -> Result<(), OwcError> {
    let ctx = setup(m)?;
    let snrs = parse_snr_list(m.get_one::<String>("snr").expect("required"))?;
    let trackers = trackers(m, &ctx.cfg)?;
    let (ds, prepared) = open_for_eval(m, &ctx)?;
    let opts = ctx.cfg.eval_options(ctx.exec);
    let sweep = eval::run_noise_sweep(&ds.config, &prepared, &trackers, &snrs, &opts)?;
    let out = create_out(&ctx.cfg)?;
    eval::write_sweep_csv(&out.join("sweep.csv"), &sweep)?;
    eval::write_gnuplot_script(&out.join("sweep.gp"), &sweep, "sweep.csv")?;
    println!("{}", out.join("sweep.csv").display());
    Ok(())
}

fn cmd_simulate(m: &ArgMatches) -> Result<(), OwcError> {
    let ctx = setup(m)?;
    let trackers = trackers(m, &ctx.cfg)?;
    let run = eval::run_temporal(&ctx.cfg.temporal(ctx.exec), &trackers)?;
    report_failures(&run.failures);
    let out = create_out(&ctx.cfg)?;
    eval::write_scores_csv(&out.join("scores.csv"), &run.scores)?;
    eval::write_trace_csv(&out.join("trace.csv"), &run.trace)?;
    println!("{}", out.join("scores.csv").display());
    Ok(())
}

fn cmd_render(m: &ArgMatches) -> Result<(), OwcError> {
    let ctx = setup(m)?;
    let d = &ctx.cfg.dataset;
    let k = *m.get_one::<usize>("index").expect("has default");
    if k >= d.n_t {
        return Err(OwcError::Config(format!(
            "--index {k} is outside the sequence of n_t = {} frames",
            d.n_t
        )));
    }
    let (scene, surface) = dataset::draw_scene(d, ctx.cfg.scene_id, Split::Test)?;
    let camera = d.camera(scene.rx, scene.camera_boresight)?;
    let t = d.timestamps(scene.t0)[k];
    let settings = RenderSettings {
        exec: ctx.exec,
        ..RenderSettings::default()
    };
    let paths = solve_candidates(
        scene.tx,
        scene.rx,
        &surface,
        t,
        &d.optics,
        &SolverSettings::default(),
    );
    let geom = LinkGeometry {
        tx: scene.tx,
        rx: scene.rx,
        tx_boresight: paths[0].transmitter_direction(scene.tx),
        rx_boresight: camera.boresight,
        t,
        surface: &surface,
    };
    let frame = render::render_with_paths(&camera, &geom, &d.optics, &settings, &paths);
    let out = create_out(&ctx.cfg)?;
    let path = out.join(format!("scene{}_frame{k}.pgm", ctx.cfg.scene_id));
    render::write_pgm16(&path, &frame)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_surface(m: &ArgMatches) -> Result<(), OwcError> {
    let ctx = setup(m)?;
    let extent = *m.get_one::<f64>("extent").expect("has default");
    let cells = *m.get_one::<u32>("cells").expect("has default");
    let t = *m.get_one::<f64>("time").expect("has default");
    if !(extent > 0.0 && extent.is_finite()) || cells < 2 || !t.is_finite() {
        return Err(OwcError::Config(
            "--extent must be > 0, --cells >= 2 and --time finite".into(),
        ));
    }
    let d = &ctx.cfg.dataset;
    let surface = d.surface(dataset::sample_seed(d.seed, ctx.cfg.scene_id))?;
    let step = extent / f64::from(cells - 1);
    let spec = HeightmapSpec {
        x0: -extent / 2.0,
        y0: -extent / 2.0,
        dx: step,
        dy: step,
        rows: cells,
        cols: cells,
    };
    let out = create_out(&ctx.cfg)?;
    let path = out.join(format!("surface{}.bin", ctx.cfg.scene_id));
    write_heightmap(&path, &surface, t, &spec)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match matches.subcommand() {
        Some(("gen", m)) => cmd_gen(m),
        Some(("track", m)) => cmd_track(m),
        Some(("sweep", m)) => cmd_sweep(m),
        Some(("simulate", m)) => cmd_simulate(m),
        Some(("render", m)) => cmd_render(m),
        Some(("surface", m)) => cmd_surface(m),
        _ => unreachable!("subcommand_required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
