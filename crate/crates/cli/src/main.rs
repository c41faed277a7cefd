use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use franson_core::analysis::{
    cross_histogram, normalize_histogram, CoincidenceHistogram, DEFAULT_BIN_WIDTH,
};
use franson_core::constants::PS_PER_S;
use franson_core::emission::simulate_pair_stream;
use franson_core::experiment::{analyze_phase_scan, phase_tags, recover_t2, run_sweep, window_curves, PhaseScan};
use franson_core::io::{read_time_tags, write_atomic, write_time_tags, ExperimentConfig, PowerSweepTable};
use franson_core::lock::run_lock;
use franson_core::optics::{CHANNEL_X, CHANNEL_XX};
use franson_core::physics::dressed_eigenvalues;
use franson_core::rng::derive_seed;
use franson_core::{Error, Result};

#[derive(Parser)]
#[command(name = "franson", version, about = "Energy-time entanglement simulation and analysis for a driven quantum-dot cascade")]
struct Cli {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dressed-state energies versus Rabi energy.
    Dressed {
        /// meV
        #[arg(long, default_value_t = 0.0)]
        rabi_min: f64,
        /// meV
        #[arg(long, default_value_t = 1.0)]
        rabi_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Simulates every phase setting and writes one time-tag file per phase.
    Simulate {
        /// Also write the emitted pair events of the first shard at phase 0.
        #[arg(long)]
        pairs: bool,
    },
    /// Histograms `t_b - t_a` of a time-tag file.
    Correlate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = CHANNEL_XX)]
        channel_a: u8,
        #[arg(long, default_value_t = CHANNEL_X)]
        channel_b: u8,
        /// ps; defaults to the configured bin width.
        #[arg(long)]
        bin_width: Option<u64>,
        /// Acquisition time (s); defaults to the span of the tags.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Fits the Franson visibility of the files listed in a simulate manifest.
    FransonFit {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Synthetic Michelson scan and coherence-time fit.
    Michelson,
    /// Simulates the interferometer phase lock.
    LockSim,
    /// Runs the full pipeline for every row of a power-sweep table.
    Sweep {
        #[arg(long)]
        table: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    let out = Output { dir: &cli.out, format: cli.format };
    match &cli.command {
        Command::Dressed { rabi_min, rabi_max, steps } => dressed(&config, &out, *rabi_min, *rabi_max, *steps),
        Command::Simulate { pairs } => simulate(&config, &out, *pairs),
        Command::Correlate { input, channel_a, channel_b, bin_width, duration } => {
            correlate(&config, &out, input, (*channel_a, *channel_b), bin_width.unwrap_or(config.analysis.bin_width), *duration)
        }
        Command::FransonFit { manifest } => franson_fit(&config, &out, manifest),
        Command::Michelson => michelson(&config, &out),
        Command::LockSim => lock_sim(&config, &out),
        Command::Sweep { table } => sweep(&config, &out, table),
    }
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
}

impl Output<'_> {
    /// Writes `rows` as `<stem>.csv` or `<stem>.json`.
    fn table<T: Serialize>(&self, stem: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.dir.join(format!("{stem}.{}", self.format.extension()));
        let bytes = match self.format {
            Format::Csv => csv_bytes(rows)?,
            Format::Json => serde_json::to_vec_pretty(rows)?,
        };
        write_atomic(&path, &bytes)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn json<T: Serialize>(&self, stem: &str, value: &T) -> Result<PathBuf> {
        let path = self.dir.join(format!("{stem}.json"));
        write_atomic(&path, &serde_json::to_vec_pretty(value)?)?;
        Ok(path)
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Serialize)]
struct DressedRow {
    rabi_energy_mev: f64,
    e0_mev: f64,
    e_minus_mev: f64,
    e_plus_mev: f64,
    split_mev: f64,
}

fn dressed(config: &ExperimentConfig, out: &Output, rabi_min: f64, rabi_max: f64, steps: usize) -> Result<()> {
    if steps < 2 || !(rabi_max > rabi_min) || rabi_min < 0.0 {
        return Err(Error::config("dressed", "need steps >= 2 and 0 <= rabi_min < rabi_max"));
    }
    let binding = config.qd.binding_energy();
    let rows = (0..steps)
        .map(|k| {
            let rabi = rabi_min + (rabi_max - rabi_min) * k as f64 / (steps - 1) as f64;
            let e = dressed_eigenvalues(binding, rabi * 1e-3)?;
            Ok(DressedRow {
                rabi_energy_mev: rabi,
                e0_mev: e.e0 * 1e3,
                e_minus_mev: e.e_minus * 1e3,
                e_plus_mev: e.e_plus * 1e3,
                split_mev: (e.e_plus - e.e_minus).abs() * 1e3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.table("dressed", &rows)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    phase_index: usize,
    /// Sum of both interferometer phases (rad).
    phase_rad: f64,
    file: String,
    tags: usize,
    duration_s: f64,
}

#[derive(Serialize)]
struct PairRow {
    t_xx_ps: f64,
    t_x_ps: f64,
    pair_phase_rad: f64,
    from_cascade: bool,
    has_xx: bool,
    has_x: bool,
}

fn simulate(config: &ExperimentConfig, out: &Output, pairs: bool) -> Result<()> {
    let seed = config.seed;
    let offset = if config.analysis.swept_interferometer == 2 { config.optics.mzi1.phase } else { config.optics.mzi2.phase };
    let mut manifest = Vec::new();
    for (k, phase) in config.analysis.phases().into_iter().enumerate() {
        let tags = phase_tags(config, k, seed)?;
        let file = format!("phase_{k:02}.ftag");
        write_time_tags(&out.dir.join(&file), &tags)?;
        manifest.push(ManifestRow {
            phase_index: k,
            phase_rad: phase + offset,
            file,
            tags: tags.len(),
            duration_s: config.emitter.duration / PS_PER_S,
        });
    }
    let path = out.dir.join("manifest.csv");
    write_atomic(&path, &csv_bytes(&manifest)?)?;
    if pairs {
        let mut emitter = config.emitter_config(derive_seed(derive_seed(seed, 0), 0));
        emitter.duration = emitter.duration.min(config.analysis.shard_duration);
        let stream = simulate_pair_stream(&emitter, &config.drive)?;
        let rows: Vec<PairRow> = stream
            .events
            .iter()
            .map(|e| PairRow {
                t_xx_ps: e.t_xx,
                t_x_ps: e.t_x,
                pair_phase_rad: e.pair_phase,
                from_cascade: e.from_cascade,
                has_xx: e.photons.has_xx(),
                has_x: e.photons.has_x(),
            })
            .collect();
        write_atomic(&out.dir.join("pairs.csv"), &csv_bytes(&rows)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HistogramRow {
    tau_ps: f64,
    counts: u64,
    normalized: f64,
}

fn histogram_rows(hist: &CoincidenceHistogram) -> Result<Vec<HistogramRow>> {
    let normalized = normalize_histogram(hist)?.values();
    Ok((0..hist.len())
        .map(|k| HistogramRow { tau_ps: hist.bin_center(k), counts: hist.counts[k], normalized: normalized[k] })
        .collect())
}

fn correlate(
    config: &ExperimentConfig,
    out: &Output,
    input: &Path,
    channels: (u8, u8),
    bin_width: u64,
    duration: Option<f64>,
) -> Result<()> {
    let tags = read_time_tags(input)?;
    let width = if bin_width == 0 { DEFAULT_BIN_WIDTH } else { bin_width };
    let hist = cross_histogram(&tags, channels.0, channels.1, width, config.analysis.range, duration)?;
    out.table("histogram", &histogram_rows(&hist)?)?;
    Ok(())
}

#[derive(Serialize)]
struct PhaseRow {
    phase_rad: f64,
    corrected_sum: f64,
    corrected_sigma: f64,
    uncorrected_sum: f64,
    uncorrected_sigma: f64,
}

#[derive(Serialize)]
struct WindowRow {
    t_lo_ps: f64,
    t_hi_ps: f64,
    corrected_v: f64,
    corrected_sigma: f64,
    uncorrected_v: f64,
    uncorrected_sigma: f64,
}

fn franson_fit(config: &ExperimentConfig, out: &Output, manifest: &Path) -> Result<()> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let rows: Vec<ManifestRow> = csv::Reader::from_path(manifest)?.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("manifest {} lists no files", manifest.display())));
    }
    let a = &config.analysis;
    let long_range = (-a.blink_half_range, a.blink_half_range);
    let mut long_delay = CoincidenceHistogram::empty(a.blink_bin_width, long_range, 0.0, (0, 0))?;
    let mut histograms = Vec::with_capacity(rows.len());
    for row in &rows {
        let tags = read_time_tags(&base.join(&row.file))?;
        let seconds = Some(row.duration_s);
        histograms.push(cross_histogram(&tags, CHANNEL_XX, CHANNEL_X, a.bin_width, a.range, seconds)?);
        long_delay.merge(&cross_histogram(&tags, CHANNEL_XX, CHANNEL_X, a.blink_bin_width, long_range, seconds)?)?;
    }
    let scan = PhaseScan { phases: rows.iter().map(|r| r.phase_rad).collect(), histograms, long_delay };
    let analysis = analyze_phase_scan(&scan, a)?;

    let phases: Vec<PhaseRow> = scan
        .phases
        .iter()
        .zip(analysis.corrected_sums.iter().zip(&analysis.uncorrected_sums))
        .map(|(p, (c, u))| PhaseRow {
            phase_rad: *p,
            corrected_sum: c.sum,
            corrected_sigma: c.sigma,
            uncorrected_sum: u.sum,
            uncorrected_sigma: u.sigma,
        })
        .collect();
    out.table("franson_phases", &phases)?;

    let t_his: Vec<f64> = (1..=12).map(|k| (a.window.1 * k as f64 / 12.0 / a.bin_width as f64).round() * a.bin_width as f64).collect();
    let (corrected, uncorrected) = window_curves(&scan, a, &analysis.blinking, &t_his)?;
    let windows: Vec<WindowRow> = corrected
        .iter()
        .zip(&uncorrected)
        .map(|(c, u)| WindowRow {
            t_lo_ps: c.t_lo,
            t_hi_ps: c.t_hi,
            corrected_v: c.visibility,
            corrected_sigma: c.sigma_v,
            uncorrected_v: u.visibility,
            uncorrected_sigma: u.sigma_v,
        })
        .collect();
    out.table("franson_windows", &windows)?;
    out.json("franson_fit", &analysis)?;
    println!(
        "V = {:.4} ± {:.4} (uncorrected {:.4}), CHSH margin {:.2} σ, blinking b = {:.3}, τ_b = {:.0} ps",
        analysis.corrected.visibility,
        analysis.corrected.sigma_v,
        analysis.uncorrected.visibility,
        analysis.chsh.n_sigma,
        analysis.blinking.amplitude,
        analysis.blinking.timescale
    );
    Ok(())
}

#[derive(Serialize)]
struct MichelsonRow {
    delay_ps: f64,
    visibility: f64,
    sigma: f64,
    excluded: bool,
}

fn michelson(config: &ExperimentConfig, out: &Output) -> Result<()> {
    let scan = recover_t2(&config.michelson, config.qd.fss, 1.0, config.seed)?;
    let rows: Vec<MichelsonRow> = (0..scan.delays.len())
        .map(|k| MichelsonRow {
            delay_ps: scan.delays[k],
            visibility: scan.visibilities[k],
            sigma: scan.sigmas[k],
            excluded: scan.excluded[k],
        })
        .collect();
    out.table("michelson", &rows)?;
    out.json("michelson_fit", &scan.fit)?;
    println!("T2 = {:.1} ± {:.1} ps", scan.fit.timescale, scan.fit.sigma_timescale);
    Ok(())
}

#[derive(Serialize)]
struct LockRow {
    t_s: f64,
    phase_true_rad: f64,
    reading: f64,
    control: f64,
    residual_rad: f64,
}

fn lock_sim(config: &ExperimentConfig, out: &Output) -> Result<()> {
    let trace = run_lock(&config.lock, config.seed)?;
    let rows: Vec<LockRow> = trace
        .records
        .iter()
        .map(|r| LockRow { t_s: r.t, phase_true_rad: r.phase_true, reading: r.reading, control: r.control, residual_rad: r.residual })
        .collect();
    out.table("lock", &rows)?;
    println!("residual RMS {:.4} rad", trace.residual_rms(rows.len() / 10));
    Ok(())
}

fn sweep(config: &ExperimentConfig, out: &Output, table: &Path) -> Result<()> {
    let table = PowerSweepTable::load(table)?;
    let report = run_sweep(config, &table, config.seed)?;
    out.table("sweep", &report.rows)?;
    out.json("sweep_detail", &report)?;
    for (power, message) in &report.failures {
        eprintln!("row at {power} µW skipped: {message}");
    }
    Ok(())
}
