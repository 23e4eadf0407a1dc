//! End-to-end runs: initial model table, data preparation, updating and outputs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::beam::assemble;
use crate::config::RunConfig;
use crate::data::{load_measured, save_measured, synth_measured};
use crate::error::{Error, Result, StageContext};
use crate::ga::{ga_optimize, GaResult};
use crate::guyan::reduce;
use crate::modal::solve_modes;
use crate::objective::{BeamPosterior, MeasuredModalData};
use crate::predict::{predict, SamplePrediction};
use crate::report::{
    chain_csv, emit_histograms, ga_history_csv, histogram_csv, sig6, write_atomic, HistogramPair, ReportMeta,
    UpdateReport,
};
use crate::sampler::{posterior_predictive, run_chain, Chain, Predictive};

/// Free-free Euler–Bernoulli eigenvalue parameters `βₙL` of the first five elastic modes.
pub const FREE_FREE_BETA_L: [f64; 5] = [4.730041, 7.853205, 10.995608, 14.137165, 17.278760];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bayes,
    Ml,
    Both,
}

impl Method {
    pub fn bayes(self) -> bool {
        matches!(self, Method::Bayes | Method::Both)
    }

    pub fn ml(self) -> bool {
        matches!(self, Method::Ml | Method::Both)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bayes" => Ok(Method::Bayes),
            "ml" => Ok(Method::Ml),
            "both" => Ok(Method::Both),
            other => Err(Error::config("method", format!("{other:?} is not one of bayes, ml, both"))),
        }
    }
}

/// Elastic frequencies of the reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTable {
    pub full_hz: Vec<f64>,
    pub reduced_hz: Vec<f64>,
    /// Closed-form values; beyond the tabulated modes this is `NaN`.
    pub analytical_hz: Vec<f64>,
}

impl ModelTable {
    pub fn csv(&self, digest: &str) -> String {
        let mut out = format!("# config_sha256: {digest}\nmode,full_hz,reduced_hz,analytical_hz\n");
        for i in 0..self.full_hz.len() {
            let a = self.analytical_hz[i];
            let a = if a.is_finite() { sig6(a) } else { String::new() };
            out.push_str(&format!(
                "{},{},{},{a}\n",
                i + 1,
                sig6(self.full_hz[i]),
                sig6(self.reduced_hz[i])
            ));
        }
        out
    }
}

pub fn model_table(config: &RunConfig) -> Result<ModelTable> {
    let g = &config.geometry;
    let full = assemble(g, &config.reference()?)?;
    let n = config.n_modes;
    let full_modes = solve_modes(&full, n, true)?;
    let reduced_modes = solve_modes(&reduce(&full, config.masters()?)?, n, true)?;
    let analytical_hz = (0..n)
        .map(|i| FREE_FREE_BETA_L.get(i).map_or(f64::NAN, |&b| g.analytical_frequency(b)))
        .collect();
    Ok(ModelTable {
        full_hz: full_modes.frequencies_hz,
        reduced_hz: reduced_modes.frequencies_hz,
        analytical_hz,
    })
}

/// Synthetic data from the configured truth, noise and seed.
pub fn synthesize(config: &RunConfig) -> Result<MeasuredModalData> {
    synth_measured(
        &config.truth()?,
        &config.geometry,
        config.masters()?,
        config.n_modes,
        config.synth.noise(),
        config.synth.seed,
    )
}

/// The configured measured file, or synthetic data when none is set.
pub fn measured_data(config: &RunConfig) -> Result<MeasuredModalData> {
    let data = match &config.paths.measured {
        Some(p) => load_measured(p)?,
        None => synthesize(config)?,
    };
    if data.coordinate_map != config.masters()? {
        return Err(Error::config(
            "masters",
            "measured coordinate_map differs from the configured master coordinates",
        ));
    }
    Ok(data)
}

pub fn posterior(config: &RunConfig, data: &MeasuredModalData) -> Result<BeamPosterior> {
    BeamPosterior::new(
        config.geometry.clone(),
        data.clone(),
        config.prior_spec()?,
        config.beta,
        config.residual,
    )
}

#[derive(Debug, Clone)]
pub struct BayesRun {
    pub chain: Chain,
    pub predictive: Predictive,
    pub histograms: HistogramPair,
    pub report: UpdateReport,
}

#[derive(Debug, Clone)]
pub struct MlRun {
    pub ga: GaResult,
    pub prediction: SamplePrediction,
    pub report: UpdateReport,
}

#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub config_digest: String,
    pub data: MeasuredModalData,
    pub initial: SamplePrediction,
    pub initial_log_likelihood: f64,
    pub initial_log_posterior: f64,
    pub bayes: Option<BayesRun>,
    pub ml: Option<MlRun>,
}

pub fn run_update(config: &RunConfig, data: &MeasuredModalData, method: Method) -> Result<UpdateOutcome> {
    let digest = config.digest()?;
    let reference = config.reference()?;
    let target = posterior(config, data)?;
    let initial = predict(&reference, &config.geometry, data).stage("initial model")?;
    let initial_value = target.evaluate(&reference).stage("initial model")?;

    let bayes = if method.bayes() {
        let chain = run_chain(&reference.to_vec(), &target, &config.chain).stage("metropolis chain")?;
        let predictive =
            posterior_predictive(&chain.samples, &config.geometry, data).stage("posterior predictive")?;
        let h = &config.histogram;
        let histograms = emit_histograms(&predictive, h.mode, h.coordinate, h.bins).stage("histograms")?;
        let meta = ReportMeta {
            method: "bayes".into(),
            seed: config.chain.seed,
            config_digest: digest.clone(),
            skipped: predictive.skipped,
        };
        let report = UpdateReport::from_predictive(&data.modal.frequencies_hz, &initial, &predictive.stats, meta);
        Some(BayesRun {
            chain,
            predictive,
            histograms,
            report,
        })
    } else {
        None
    };

    let ml = if method.ml() {
        let ga = ga_optimize(&target.likelihood(), &reference.to_vec(), &config.ga).stage("genetic algorithm")?;
        let prediction = predict(&ga.best_params()?, &config.geometry, data).stage("ml prediction")?;
        let meta = ReportMeta {
            method: "ml".into(),
            seed: config.ga.seed,
            config_digest: digest.clone(),
            skipped: 0,
        };
        let report = UpdateReport::from_point(&data.modal.frequencies_hz, &initial, &prediction, meta);
        Some(MlRun { ga, prediction, report })
    } else {
        None
    };

    Ok(UpdateOutcome {
        config_digest: digest,
        data: data.clone(),
        initial,
        initial_log_likelihood: initial_value.log_likelihood,
        initial_log_posterior: initial_value.log_posterior,
        bayes,
        ml,
    })
}

pub const FREQUENCY_REPORT: &str = "frequencies";
pub const MAC_REPORT: &str = "mac";
pub const CHAIN_FILE: &str = "chain.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const GA_HISTORY_FILE: &str = "ga_history.csv";
pub const MEASURED_FILE: &str = "measured.json";
pub const CONFIG_FILE: &str = "config.json";

pub fn report_paths(dir: &Path, method: &str) -> [PathBuf; 2] {
    [
        dir.join(format!("{FREQUENCY_REPORT}_{method}.csv")),
        dir.join(format!("{MAC_REPORT}_{method}.csv")),
    ]
}

pub fn write_report(report: &UpdateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let [f, m] = report_paths(dir, &report.meta.method);
    write_atomic(&f, report.frequency_csv().as_bytes())?;
    write_atomic(&m, report.mac_csv().as_bytes())?;
    Ok(vec![f, m])
}

/// Write reports, raw exports, the data used and the resolved configuration.
pub fn write_outputs(outcome: &UpdateOutcome, config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join(CONFIG_FILE);
    write_atomic(&path, config.to_json()?.as_bytes())?;
    written.push(path);
    let path = dir.join(MEASURED_FILE);
    save_measured(&outcome.data, &path)?;
    written.push(path);

    if let Some(b) = &outcome.bayes {
        written.extend(write_report(&b.report, dir)?);
        let path = dir.join(CHAIN_FILE);
        write_atomic(&path, chain_csv(&b.chain, &b.report.meta).as_bytes())?;
        written.push(path);
        let path = dir.join(HISTOGRAM_FILE);
        write_atomic(&path, histogram_csv(&b.histograms, &b.report.meta).as_bytes())?;
        written.push(path);
    }
    if let Some(m) = &outcome.ml {
        written.extend(write_report(&m.report, dir)?);
        let path = dir.join(GA_HISTORY_FILE);
        write_atomic(&path, ga_history_csv(&m.ga, &m.report.meta).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Rebuild the Bayesian report from exported chain states.
pub fn report_from_chain(
    config: &RunConfig,
    data: &MeasuredModalData,
    samples: &[Vec<f64>],
) -> Result<(UpdateReport, Predictive)> {
    let initial = predict(&config.reference()?, &config.geometry, data).stage("initial model")?;
    let predictive = posterior_predictive(samples, &config.geometry, data).stage("posterior predictive")?;
    let meta = ReportMeta {
        method: "bayes".into(),
        seed: config.chain.seed,
        config_digest: config.digest()?,
        skipped: predictive.skipped,
    };
    let report = UpdateReport::from_predictive(&data.modal.frequencies_hz, &initial, &predictive.stats, meta);
    Ok((report, predictive))
}
