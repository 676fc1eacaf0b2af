//! One Monte Carlo realization of the uplink and the fronthaul chains that
//! turn it into CPU-side statistics.

use anyhow::{Context, Result};
use cfota_core::ap_local::{local_stats, whitened_local_stats, zf_precoder, LocalStats, Phase, PhasePayload, ZfPrecoder};
use cfota_core::channel::{sample_access, sample_fronthaul};
use cfota_core::detect::{detect_lmmse, symbol_errors, Constellation};
use cfota_core::fronthaul::{
    lmmse_estimate, ls_estimate, ota_transmit, reconstruct, summed_payload, CpuObservation, GlobalStats,
};
use cfota_core::linalg::{cn_vector, cr, CMat, CVec};
use cfota_core::moments::MomentModel;
use cfota_core::ods::{digital_sum, FloatFormat};
use cfota_core::ap_local::{devectorize_upper, unstack_mf};
use cfota_core::perf::Estimator;
use cfota_core::power::{instantaneous_eta, PowerPlan};
use cfota_core::rng::{domain, stream, SimRng};
use cfota_core::scenario::{generate_scenario_drop, CovarianceSet, EwhwMode, ScenarioConfig};
use rand::Rng;

pub type Cov = CovarianceSet<f64>;
pub type Model = MomentModel<f64>;
pub type Mat = CMat<f64>;
pub type Vector = CVec<f64>;
pub type Stats = GlobalStats<f64>;

/// Unit-energy Gray 4-QAM used by every SER experiment.
pub fn qpsk() -> Constellation<f64> {
    Constellation::qam(4).expect("4-QAM is a valid square constellation")
}

/// Geometry and moment model of one drop.
#[derive(Clone, Debug)]
pub struct DropModel {
    pub cov: Cov,
    pub model: Model,
}

/// Statistical model for `cov`, using the precoder-moment method of `cfg`.
pub fn moment_model(cfg: &ScenarioConfig, cov: &Cov, drop: u64) -> Result<Model> {
    let model = match cfg.ewhw_mode {
        EwhwMode::Mc => {
            let mut rng = stream(cfg.seed, domain::FRONTHAUL_MOMENTS, drop);
            Model::with_ewhw_mc(cov, cfg.m, cfg.tau_u, cfg.p_ul, cfg.sigma2, cfg.ewhw_trials, &mut rng)
        }
        EwhwMode::Analytic => Model::with_ewhw_analytic(cov, cfg.m, cfg.tau_u, cfg.p_ul, cfg.sigma2),
    };
    Ok(model?)
}

pub fn build_drop(cfg: &ScenarioConfig, drop: u64) -> Result<DropModel> {
    let cov = generate_scenario_drop::<f64>(cfg, drop)?;
    let model = moment_model(cfg, &cov, drop).with_context(|| format!("moment model of drop {drop}"))?;
    Ok(DropModel { cov, model })
}

pub fn build_drops(cfg: &ScenarioConfig) -> Result<Vec<DropModel>> {
    (0..cfg.drops as u64).map(|d| build_drop(cfg, d)).collect()
}

/// Power scaling of one phase: planned from moments, or recomputed from the
/// realization when the planned value does not exist (`N = M`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaRule {
    Planned(f64),
    Instantaneous { p_max: f64 },
}

/// Per-phase scaling rules for a model and budget; `N = M` falls back to
/// per-realization scaling because `E[(G^H G)^-1]` diverges there.
pub fn eta_rules(model: &Model, n: usize, p_max: f64) -> Result<[EtaRule; 2]> {
    if n == model.m {
        return Ok([EtaRule::Instantaneous { p_max }; 2]);
    }
    let plan = PowerPlan::from_model(model, p_max)?;
    Ok([
        EtaRule::Planned(plan.eta(Phase::Gramian)),
        EtaRule::Planned(plan.eta(Phase::MatchedFilter)),
    ])
}

impl EtaRule {
    pub fn scaled(self, factor: f64) -> Self {
        match self {
            EtaRule::Planned(e) => EtaRule::Planned(e * factor),
            EtaRule::Instantaneous { p_max } => EtaRule::Instantaneous { p_max: p_max * factor },
        }
    }
}

/// Channels, symbols and unit-variance receiver noise of one trial.
#[derive(Clone, Debug)]
pub struct Realization {
    pub h: Vec<Mat>,
    pub g: Vec<Mat>,
    /// Symbol indices per data slot.
    pub symbols: Vec<Vec<usize>>,
    /// Unit-variance access noise per AP and slot.
    noise: Vec<Vec<Vector>>,
}

impl Realization {
    /// Draw order: access channels, fronthaul channels, symbols, noise.
    pub fn draw<R: Rng + ?Sized>(cov: &Cov, m: usize, tau_u: usize, order: usize, rng: &mut R) -> Self {
        let h = sample_access(cov, rng).h;
        let g = sample_fronthaul(cov, m, rng).g;
        let symbols = (0..tau_u)
            .map(|_| (0..cov.k()).map(|_| rng.random_range(0..order)).collect())
            .collect();
        let noise = (0..cov.l())
            .map(|_| (0..tau_u).map(|_| cn_vector::<f64, R>(rng, cov.n(), 1.0)).collect())
            .collect();
        Self { h, g, symbols, noise }
    }

    pub fn transmitted(&self, c: &Constellation<f64>) -> Vec<Vector> {
        self.symbols.iter().map(|idx| c.symbols(idx)).collect()
    }

    /// `y_l = sqrt(p) H_l s + n_l` for every AP and slot.
    pub fn received(&self, s: &[Vector], p_ul: f64, sigma2: f64) -> Vec<Vec<Vector>> {
        let (amp, sd) = (cr(p_ul.sqrt()), cr(sigma2.sqrt()));
        self.h
            .iter()
            .zip(&self.noise)
            .map(|(h, noise)| {
                s.iter()
                    .zip(noise)
                    .map(|(s, w)| h * s * amp + w * sd)
                    .collect()
            })
            .collect()
    }

    pub fn locals(&self, s: &[Vector], p_ul: f64, sigma2: f64) -> Result<Vec<LocalStats<f64>>> {
        self.received(s, p_ul, sigma2)
            .iter()
            .zip(&self.h)
            .map(|(y, h)| Ok(local_stats(h, y)?))
            .collect()
    }

    pub fn precoders(&self) -> Result<Vec<ZfPrecoder<f64>>> {
        self.g
            .iter()
            .map(|g| Ok(zf_precoder(g)?))
            .collect()
    }
}

/// Imperfect-CSI local statistics: each AP whitens with its own
/// interference-plus-noise covariance.
pub fn whitened_locals(
    h_hat: &[Mat],
    rtilde: &[Vec<Mat>],
    y: &[Vec<Vector>],
    p_ul: f64,
    sigma2: f64,
) -> Result<Vec<LocalStats<f64>>> {
    h_hat
        .iter()
        .zip(y)
        .enumerate()
        .map(|(l, (hh, yl))| {
            let r: Vec<&Mat> = rtilde.iter().map(|row| &row[l]).collect();
            Ok(whitened_local_stats(hh, yl, &r, p_ul, sigma2)?)
        })
        .collect()
}

/// Chunked transmit matrices of both phases, indexed `[phase][ap]`.
#[derive(Clone, Debug)]
pub struct Payloads {
    pub xbar: [Vec<Mat>; 2],
    pub vectors: [Vec<Vector>; 2],
}

impl Payloads {
    pub fn build(locals: &[LocalStats<f64>], m: usize) -> Result<Self> {
        let mut xbar: [Vec<Mat>; 2] = Default::default();
        let mut vectors: [Vec<Vector>; 2] = Default::default();
        for phase in Phase::BOTH {
            for s in locals {
                let p = PhasePayload::build(s, phase, m)?;
                xbar[phase.index()].push(p.xbar);
                vectors[phase.index()].push(p.x);
            }
        }
        Ok(Self { xbar, vectors })
    }

    /// Error-free sum of one phase's chunked payloads.
    pub fn summed(&self, phase: Phase) -> Mat {
        summed_payload(&self.xbar[phase.index()])
    }
}

/// Transmits one phase over the air.
pub fn transmit<R: Rng + ?Sized>(
    payloads: &Payloads,
    phase: Phase,
    precoders: &[ZfPrecoder<f64>],
    g: &[Mat],
    rule: EtaRule,
    sigma2_cpu: f64,
    rng: &mut R,
) -> Result<CpuObservation<f64>> {
    let xbars = &payloads.xbar[phase.index()];
    let eta = match rule {
        EtaRule::Planned(e) => e,
        EtaRule::Instantaneous { p_max } => {
            let precoded: Vec<Mat> = precoders.iter().zip(xbars).map(|(w, x)| &w.w * x).collect();
            instantaneous_eta(&precoded, p_max)?
        }
    };
    Ok(ota_transmit(xbars, precoders, g, eta, sigma2_cpu, rng)?)
}

pub fn estimate(est: Estimator, obs: &CpuObservation<f64>, model: &Model, phase: Phase) -> Result<Mat> {
    Ok(match est {
        Estimator::Ls => ls_estimate(obs)?,
        Estimator::Lmmse => lmmse_estimate(obs, &model.prior(phase))?,
    })
}

/// Both phases over the air followed by CPU estimation and reconstruction.
#[allow(clippy::too_many_arguments)]
pub fn ota_stats(
    payloads: &Payloads,
    precoders: &[ZfPrecoder<f64>],
    g: &[Mat],
    model: &Model,
    rules: [EtaRule; 2],
    est: Estimator,
    sigma2_cpu: f64,
    rng: &mut SimRng,
) -> Result<Stats> {
    let obs: Vec<CpuObservation<f64>> = Phase::BOTH
        .iter()
        .map(|&ph| transmit(payloads, ph, precoders, g, rules[ph.index()], sigma2_cpu, rng))
        .collect::<Result<_>>()?;
    stats_from_observations(&obs, model, est)
}

pub fn stats_from_observations(obs: &[CpuObservation<f64>], model: &Model, est: Estimator) -> Result<Stats> {
    let x1 = estimate(est, &obs[0], model, Phase::Gramian)?;
    let x2 = estimate(est, &obs[1], model, Phase::MatchedFilter)?;
    Ok(reconstruct(&x1, &x2, model.k, model.tau_u)?)
}

/// Per-AP quantization to `fmt` and an error-free digital sum.
pub fn ods_stats(payloads: &Payloads, model: &Model, fmt: FloatFormat) -> Result<Stats> {
    let sum = |phase: Phase| -> Result<Vector> {
        let scales: Vec<f64> = (0..model.l()).map(|l| model.entry_rms(phase, l)).collect();
        Ok(digital_sum(&payloads.vectors[phase.index()], &scales, fmt)?)
    };
    Ok(Stats {
        a: devectorize_upper(&sum(Phase::Gramian)?, model.k)?,
        t: unstack_mf(&sum(Phase::MatchedFilter)?, model.k, model.tau_u)?,
    })
}

/// Symbol errors of the LMMSE detector over every slot.
pub fn count_errors(
    stats: &Stats,
    symbols: &[Vec<usize>],
    p_ul: f64,
    sigma2: f64,
    c: &Constellation<f64>,
) -> Result<u64> {
    let mut errors = 0;
    for (t, idx) in stats.t.iter().zip(symbols) {
        let s = detect_lmmse(&stats.a, t, p_ul, sigma2)?;
        errors += symbol_errors(&c.hard_decisions(&s), idx) as u64;
    }
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfota_core::fronthaul::relative_error;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            l: 4,
            k: 3,
            tau_p: 3,
            tau_u: 2,
            ewhw_mode: EwhwMode::Analytic,
            ..Default::default()
        }
    }

    #[test]
    fn strong_fronthaul_reproduces_exact_statistics() {
        let cfg = small_cfg();
        let d = build_drop(&cfg, 0).unwrap();
        let c = qpsk();
        let mut rng = stream(1, domain::TRIALS, 0);
        let r = Realization::draw(&d.cov, cfg.m, cfg.tau_u, c.len(), &mut rng);
        let s = r.transmitted(&c);
        let locals = r.locals(&s, cfg.p_ul, cfg.sigma2).unwrap();
        let exact = Stats::exact(&locals).unwrap();
        let payloads = Payloads::build(&locals, cfg.m).unwrap();
        let pre = r.precoders().unwrap();
        let rules = eta_rules(&d.model, cfg.n, 1e9).unwrap();
        for est in Estimator::BOTH {
            let got = ota_stats(&payloads, &pre, &r.g, &d.model, rules, est, cfg.sigma2, &mut rng.clone()).unwrap();
            assert!(relative_error(&got.a, &exact.a) < 1e-5);
        }
        let inst = [EtaRule::Instantaneous { p_max: 1e9 }; 2];
        let got = ota_stats(&payloads, &pre, &r.g, &d.model, inst, Estimator::Ls, cfg.sigma2, &mut rng).unwrap();
        assert!(relative_error(&got.a, &exact.a) < 1e-5);
        let fmt = FloatFormat::new(11, 52).unwrap();
        let ods = ods_stats(&payloads, &d.model, fmt).unwrap();
        assert!(relative_error(&ods.a, &exact.a) < 1e-12);
    }

    #[test]
    fn noise_free_detection_is_error_free() {
        let cfg = small_cfg();
        let d = build_drop(&cfg, 0).unwrap();
        let c = qpsk();
        let mut rng = stream(2, domain::TRIALS, 0);
        let r = Realization::draw(&d.cov, cfg.m, cfg.tau_u, c.len(), &mut rng);
        let s = r.transmitted(&c);
        let locals = r.locals(&s, cfg.p_ul, 0.0).unwrap();
        let exact = Stats::exact(&locals).unwrap();
        assert_eq!(count_errors(&exact, &r.symbols, cfg.p_ul, 1e-30, &c).unwrap(), 0);
    }
}
