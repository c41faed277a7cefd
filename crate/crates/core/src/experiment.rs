//! End-to-end drivers: phase scans, their analysis, Michelson coherence-time
//! recovery and power sweeps.

use serde::Serialize;

use crate::analysis::{
    chsh_check, cross_histogram, fit_blinking_offset, fit_exponential, fit_visibility, g2_zero, normalize_histogram,
    visibility_vs_window, window_sum, BlinkingFit, ChshCheck, CoincidenceHistogram, ExponentialFit, VisibilityFit,
    WindowSum, WindowVisibility,
};
use crate::constants::{PLANCK_EV_PS, PS_PER_S};
use crate::emission::simulate_pair_stream;
use crate::error::{Error, Result};
use crate::io::{AnalysisConfig, ExperimentConfig, MichelsonConfig, PowerSweepTable};
use crate::optics::{
    franson_route_and_detect, fringe_visibility, michelson_fringe_scan, MichelsonScan, TimeTag, CHANNEL_X, CHANNEL_XX,
};
use crate::rng::{self, derive_seed};

/// Shard boundaries `(start, length)` in ps covering `duration`.
fn shards(duration: f64, shard: f64) -> Vec<(f64, f64)> {
    let n = (duration / shard).ceil().max(1.0) as usize;
    (0..n).map(|s| (s as f64 * shard, (duration - s as f64 * shard).min(shard))).collect()
}

/// Detected tags of shard `shard` at phase setting `phase_index`, with
/// times relative to the shard start, plus the shard length (ps).
pub fn shard_tags(config: &ExperimentConfig, phase_index: usize, shard: usize, seed: u64) -> Result<(Vec<TimeTag>, f64)> {
    let bounds = shards(config.emitter.duration, config.analysis.shard_duration);
    let (_, length) = *bounds
        .get(shard)
        .ok_or_else(|| Error::config("analysis.shard_duration", format!("shard {shard} out of range")))?;
    let phase = *config
        .analysis
        .phases()
        .get(phase_index)
        .ok_or_else(|| Error::config("analysis.phase_steps", format!("phase {phase_index} out of range")))?;
    let shard_seed = derive_seed(derive_seed(seed, phase_index as u64), shard as u64);
    let mut emitter = config.emitter_config(shard_seed);
    emitter.duration = length;
    let stream = simulate_pair_stream(&emitter, &config.drive)?;
    let mut setup = config.franson_setup();
    if config.analysis.swept_interferometer == 2 {
        setup.mzi2.phase = phase;
    } else {
        setup.mzi1.phase = phase;
    }
    let mut routing = rng::seeded(shard_seed, rng::stream::ROUTING);
    Ok((franson_route_and_detect(&stream, &setup, &mut routing)?, length))
}

/// All detected tags at one phase setting, shards laid end to end.
pub fn phase_tags(config: &ExperimentConfig, phase_index: usize, seed: u64) -> Result<Vec<TimeTag>> {
    let mut all = Vec::new();
    for (s, (start, _)) in shards(config.emitter.duration, config.analysis.shard_duration).into_iter().enumerate() {
        let (tags, _) = shard_tags(config, phase_index, s, seed)?;
        let offset = start.round() as u64;
        all.extend(tags.into_iter().map(|t| TimeTag { channel: t.channel, time: t.time + offset }));
    }
    Ok(all)
}

/// Raw histograms of a full phase scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseScan {
    /// `φ₁ + φ₂` of each setting (rad).
    pub phases: Vec<f64>,
    /// Fine XX→X histograms, one per phase.
    pub histograms: Vec<CoincidenceHistogram>,
    /// Long-delay histogram summed over all phases.
    pub long_delay: CoincidenceHistogram,
}

impl PhaseScan {
    pub fn normalized(&self) -> Result<Vec<CoincidenceHistogram>> {
        self.histograms.iter().map(normalize_histogram).collect()
    }
}

/// Simulates, routes and histograms every phase setting.
///
/// Shards are seeded independently, so memory stays bounded by one shard.
pub fn run_phase_scan(config: &ExperimentConfig, seed: u64) -> Result<PhaseScan> {
    config.validate()?;
    let a = &config.analysis;
    let bounds = shards(config.emitter.duration, a.shard_duration);
    let phases = config.analysis.phases();
    let mut histograms = Vec::with_capacity(phases.len());
    let long_range = (-a.blink_half_range, a.blink_half_range);
    let mut long_delay = CoincidenceHistogram::empty(a.blink_bin_width, long_range, 0.0, (0, 0))?;
    for k in 0..phases.len() {
        let mut fine = CoincidenceHistogram::empty(a.bin_width, a.range, 0.0, (0, 0))?;
        for (s, _) in bounds.iter().enumerate() {
            let (tags, length) = shard_tags(config, k, s, seed)?;
            let seconds = length / PS_PER_S;
            fine.merge(&cross_histogram(&tags, CHANNEL_XX, CHANNEL_X, a.bin_width, a.range, Some(seconds))?)?;
            long_delay.merge(&cross_histogram(&tags, CHANNEL_XX, CHANNEL_X, a.blink_bin_width, long_range, Some(seconds))?)?;
        }
        log::debug!("phase {k}: {} coincidences in range", fine.counts.iter().sum::<u64>());
        histograms.push(fine);
    }
    let offset = if a.swept_interferometer == 2 { config.optics.mzi1.phase } else { config.optics.mzi2.phase };
    Ok(PhaseScan { phases: phases.iter().map(|p| p + offset).collect(), histograms, long_delay })
}

/// Blinking-corrected and uncorrected visibility of a phase scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FransonAnalysis {
    pub window: (f64, f64),
    pub blinking: BlinkingFit,
    pub corrected_sums: Vec<WindowSum>,
    pub uncorrected_sums: Vec<WindowSum>,
    pub corrected: VisibilityFit,
    pub uncorrected: VisibilityFit,
    pub chsh: ChshCheck,
}

/// Normalizes, fits the blinking offset on the long-delay histogram and fits
/// the visibility of the window sums. "Uncorrected" subtracts only the
/// accidental level of one normalized coincidence.
pub fn analyze_phase_scan(scan: &PhaseScan, analysis: &AnalysisConfig) -> Result<FransonAnalysis> {
    let long = normalize_histogram(&scan.long_delay)?;
    let blinking = fit_blinking_offset(&long, analysis.blink_fit_range)?;
    let normalized = scan.normalized()?;
    let accidental = BlinkingFit::accidental_level();
    let sums = |offset: &BlinkingFit| -> Result<Vec<WindowSum>> {
        normalized.iter().map(|h| window_sum(h, analysis.window, Some(offset))).collect()
    };
    let corrected_sums = sums(&blinking)?;
    let uncorrected_sums = sums(&accidental)?;
    let fit = |s: &[WindowSum]| {
        let values: Vec<f64> = s.iter().map(|w| w.sum).collect();
        let sigmas: Vec<f64> = s.iter().map(|w| w.sigma).collect();
        fit_visibility(&scan.phases, &values, &sigmas)
    };
    let corrected = fit(&corrected_sums)?;
    let uncorrected = fit(&uncorrected_sums)?;
    let chsh = chsh_check(corrected.visibility, corrected.sigma_v)?;
    Ok(FransonAnalysis { window: analysis.window, blinking, corrected_sums, uncorrected_sums, corrected, uncorrected, chsh })
}

/// Corrected and uncorrected visibility for windows `[window.0, t_hi]`.
pub fn window_curves(
    scan: &PhaseScan,
    analysis: &AnalysisConfig,
    blinking: &BlinkingFit,
    t_his: &[f64],
) -> Result<(Vec<WindowVisibility>, Vec<WindowVisibility>)> {
    let normalized = scan.normalized()?;
    let t_lo = analysis.window.0;
    let corrected = visibility_vs_window(&normalized, &scan.phases, t_lo, t_his, Some(blinking))?;
    let uncorrected = visibility_vs_window(&normalized, &scan.phases, t_lo, t_his, Some(&BlinkingFit::accidental_level()))?;
    Ok((corrected, uncorrected))
}

/// Fringe visibility per coarse delay of a synthetic Michelson scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceScan {
    pub delays: Vec<f64>,
    pub visibilities: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Points left out of the decay fit.
    pub excluded: Vec<bool>,
    pub fit: ExponentialFit,
}

/// Scans, extracts fringe visibilities and fits the exponential envelope.
///
/// In a diagonal basis points with `|cos(πδτ/h)| < 0.5` are excluded and the
/// rest are divided by the known beat factor. Points whose visibility is
/// below three noise standard deviations are excluded at any basis.
pub fn recover_t2(michelson: &MichelsonConfig, fss: f64, mean_intensity: f64, seed: u64) -> Result<CoherenceScan> {
    michelson.validate().map_err(|e| e.within("michelson"))?;
    let scan = MichelsonScan {
        t2: michelson.t2,
        fss,
        basis: michelson.basis,
        delays: michelson.delays(),
        piezo_steps: michelson.piezo_steps,
        noise_sigma: michelson.noise_sigma,
        mean_intensity,
    };
    let records = michelson_fringe_scan(&scan, &mut rng::seeded(seed, rng::stream::MICHELSON))?;
    let visibilities = records.iter().map(fringe_visibility).collect::<Result<Vec<f64>>>()?;
    // Linear-fit amplitude error for evenly spread piezo positions.
    let sigma = (michelson.noise_sigma.max(1e-9) / mean_intensity) * (2.0 / michelson.piezo_steps as f64).sqrt();
    let beat: Vec<f64> = scan
        .delays
        .iter()
        .map(|tau| if michelson.basis.is_diagonal() { (std::f64::consts::PI * fss * tau / PLANCK_EV_PS).cos().abs() } else { 1.0 })
        .collect();
    let excluded: Vec<bool> = beat.iter().zip(&visibilities).map(|(b, v)| *b < 0.5 || *v < 3.0 * sigma).collect();
    let envelope: Vec<f64> = visibilities.iter().zip(&beat).map(|(v, b)| v / b.max(0.5)).collect();
    let sigmas: Vec<f64> = beat.iter().map(|b| sigma / b.max(0.5)).collect();
    let fit = fit_exponential(&scan.delays, &envelope, &sigmas, &excluded)?;
    Ok(CoherenceScan { delays: scan.delays, visibilities, sigmas, excluded, fit })
}

/// One line of a power-sweep report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRowReport {
    pub power_uw: f64,
    pub visibility: f64,
    pub sigma_v: f64,
    pub chsh_n_sigma: f64,
    pub t2_recovered: f64,
    pub sigma_t2: f64,
    /// Normalized XX auto-correlation around zero delay at the first phase.
    pub g2_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRowReport>,
    /// `(power_uw, error)` of rows that failed and were skipped.
    pub failures: Vec<(f64, String)>,
}

/// Applies a sweep row to a copy of `config`.
pub fn config_for_row(config: &ExperimentConfig, row: &crate::io::PowerSweepRow) -> ExperimentConfig {
    let mut c = config.clone();
    c.drive.power_label = row.power_uw;
    c.michelson.t2 = row.t2_ps;
    c.emitter.pair_contrast_c0 = row.pair_contrast_c0;
    c.emitter.blink_off_rate = row.blink_off_rate;
    c.emitter.blink_on_rate = row.blink_on_rate;
    c.emitter.excitation_rate = row.excitation_rate;
    c
}

fn sweep_row(config: &ExperimentConfig, seed: u64) -> Result<SweepRowReport> {
    config.validate()?;
    let scan = run_phase_scan(config, seed)?;
    let analysis = analyze_phase_scan(&scan, &config.analysis)?;
    let coherence = recover_t2(&config.michelson, config.qd.fss, 1.0, seed)?;
    let (tags, length) = shard_tags(config, 0, 0, seed)?;
    let a = &config.analysis;
    let auto = cross_histogram(&tags, CHANNEL_XX, CHANNEL_XX, a.bin_width, a.range, Some(length / PS_PER_S))?;
    let g2 = g2_zero(&normalize_histogram(&auto)?, 4.0 * a.bin_width as f64)?;
    Ok(SweepRowReport {
        power_uw: config.drive.power_label,
        visibility: analysis.corrected.visibility,
        sigma_v: analysis.corrected.sigma_v,
        chsh_n_sigma: analysis.chsh.n_sigma,
        t2_recovered: coherence.fit.timescale,
        sigma_t2: coherence.fit.sigma_timescale,
        g2_zero: g2,
    })
}

/// Runs the full pipeline per table row. Failing rows are logged, recorded
/// and skipped.
pub fn run_sweep(config: &ExperimentConfig, table: &PowerSweepTable, seed: u64) -> Result<SweepReport> {
    table.validate()?;
    let mut report = SweepReport { rows: Vec::new(), failures: Vec::new() };
    for (i, row) in table.rows.iter().enumerate() {
        let c = config_for_row(config, row);
        match sweep_row(&c, derive_seed(seed, i as u64)) {
            Ok(r) => report.rows.push(r),
            Err(e) => {
                log::error!("sweep row {i} ({} µW) failed: {e}", row.power_uw);
                report.failures.push((row.power_uw, e.to_string()));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shards_cover_the_duration() {
        let s = shards(25.0, 10.0);
        assert_eq!(s, vec![(0.0, 10.0), (10.0, 10.0), (20.0, 5.0)]);
        assert_eq!(shards(10.0, 10.0).len(), 1);
    }
}
