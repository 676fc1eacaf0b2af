//! The figure experiments. Each returns a [`Table`] whose first column is
//! the sweep axis.

use anyhow::{bail, ensure, Context, Result};
use cfota_core::ap_local::{devectorize_upper, dechunk, local_stats, upper_len, Phase, PhasePayload};
use cfota_core::channel::{access_error_covariances, lmmse_access_estimate, AccessChannels};
use cfota_core::fronthaul::{ls_estimate, lmmse_estimate, ota_transmit, GlobalStats};
use cfota_core::linalg::{cr, frob2, inverse, psd_inv_sqrt, CMat};
use cfota_core::moments::MomentModel;
use cfota_core::ods::{
    allocate_resources, channel_uses_ota, digital_sum, ergodic_rate, ota_extra_snr_factor,
    payload_bits, select_format_by, FloatFormat, FormatCriterion,
};
use cfota_core::perf::{
    data_mse_floor, data_mse_zf, inverse_traces, mse_gramian_theory, mse_mf_theory, prelog, to_db, Estimator,
    MeanAccumulator, SiAccumulator, UatfAccumulator,
};
use cfota_core::power::{power_report, PowerPlan};
use cfota_core::rng::{domain, stream};
use cfota_core::scenario::{generate_scenario_drop, CovarianceSet, ScenarioConfig};
use toml::Table as TomlTable;

use crate::config::RunConfig;
use crate::pipeline::{
    build_drops, count_errors, eta_rules, estimate, ods_stats, qpsk, stats_from_observations, transmit,
    whitened_locals, DropModel, EtaRule, Mat, Model, Payloads, Realization, Stats,
};
use crate::runner::{par_map, ser_point, ser_table, with_workers, SerCount};
use crate::table::Table;

/// Extra stream domains owned by the harness.
pub mod streams {
    /// CPU receiver noise, one stream per trial, shared by every series of
    /// that trial.
    pub const CPU_NOISE: u64 = 101;
    /// Access pilot noise, one stream per trial.
    pub const PILOT_NOISE: u64 = 102;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Fig2Nmse,
    Fig3Ser,
    Fig4SeCdf,
    Fig6NmseVsNb,
    Fig7CuVsNb,
    Fig7bCuVsL,
    Fig9SerOds,
    Fig10SerImpcsi,
    AsymptoteCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Fig2Nmse,
        Experiment::Fig3Ser,
        Experiment::Fig4SeCdf,
        Experiment::Fig6NmseVsNb,
        Experiment::Fig7CuVsNb,
        Experiment::Fig7bCuVsL,
        Experiment::Fig9SerOds,
        Experiment::Fig10SerImpcsi,
        Experiment::AsymptoteCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2Nmse => "fig2_nmse",
            Experiment::Fig3Ser => "fig3_ser",
            Experiment::Fig4SeCdf => "fig4_se_cdf",
            Experiment::Fig6NmseVsNb => "fig6_nmse_vs_nb",
            Experiment::Fig7CuVsNb => "fig7_cu_vs_nb",
            Experiment::Fig7bCuVsL => "fig7b_cu_vs_L",
            Experiment::Fig9SerOds => "fig9_ser_ods",
            Experiment::Fig10SerImpcsi => "fig10_ser_impcsi",
            Experiment::AsymptoteCheck => "asymptote_check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Fig2Nmse => "Gramian and MF NMSE vs P_max, simulation against closed forms (LS, LMMSE)",
            Experiment::Fig3Ser => "4-QAM SER vs uplink SNR for LS/LMMSE fronthaul estimation and a wired baseline",
            Experiment::Fig4SeCdf => "CDF of per-UE UatF spectral efficiency: OTA vs wired UatF and wired side information",
            Experiment::Fig6NmseVsNb => "MF NMSE vs quantizer bits: digital fronthaul vs OTA for several L",
            Experiment::Fig7CuVsNb => "Fronthaul channel uses vs quantizer bits for several L",
            Experiment::Fig7bCuVsL => "Fronthaul channel uses vs L for several quantizer widths",
            Experiment::Fig9SerOds => "SER vs uplink SNR: digital fronthaul vs OTA with and without extra SNR",
            Experiment::Fig10SerImpcsi => "SER vs uplink SNR with estimated access channels at several pilot powers",
            Experiment::AsymptoteCheck => "ZF data MSE vs uplink power against its large-power floor",
        }
    }

    /// What the axis and the `trials` key mean for this experiment.
    pub fn axis(self) -> &'static str {
        match self {
            Experiment::Fig2Nmse => "p_max",
            Experiment::Fig3Ser | Experiment::Fig9SerOds | Experiment::Fig10SerImpcsi => "rho_db",
            Experiment::Fig4SeCdf => "cdf",
            Experiment::Fig6NmseVsNb | Experiment::Fig7CuVsNb => "n_b",
            Experiment::Fig7bCuVsL => "L",
            Experiment::AsymptoteCheck => "rho_db",
        }
    }

    /// Scenario values this experiment uses unless the config overrides them.
    pub fn preset(self) -> TomlTable {
        let text = match self {
            Experiment::Fig2Nmse => "",
            Experiment::Fig3Ser => "trials = 20000\ndrops = 20",
            Experiment::Fig4SeCdf => "trials = 10000\ndrops = 50",
            Experiment::Fig6NmseVsNb => "p_ul = 1e-5\nP_max = 5.0\ntrials = 200",
            Experiment::Fig7CuVsNb | Experiment::Fig7bCuVsL => "trials = 500\ndrops = 10",
            Experiment::Fig9SerOds => "P_max = 5.0\ntrials = 20000\ndrops = 20",
            Experiment::Fig10SerImpcsi => "trials = 5000\ndrops = 20",
            Experiment::AsymptoteCheck => {
                "pathloss_a = 0.0\npathloss_b = 0.0\nsigma2 = 1.0\np_ul = 1.0\n\
                 ewhw_mode = \"analytic\"\ntrials = 10000"
            }
        };
        text.parse().expect("presets are valid TOML")
    }

    pub fn default_grid(self) -> Vec<f64> {
        let rho: Vec<f64> = (0..9).map(|i| 70.0 + 5.0 * i as f64).collect();
        match self {
            Experiment::Fig2Nmse => vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            Experiment::Fig3Ser | Experiment::Fig9SerOds | Experiment::Fig10SerImpcsi => rho,
            Experiment::Fig4SeCdf => vec![0.1, 5.0],
            Experiment::Fig6NmseVsNb => (4..=16).map(|i| 2.0 * i as f64).collect(),
            Experiment::Fig7CuVsNb => (1..=8).map(|i| 4.0 * i as f64).collect(),
            Experiment::Fig7bCuVsL => vec![4.0, 8.0, 16.0, 32.0, 64.0],
            Experiment::AsymptoteCheck => (0..=6).map(|i| 10.0 * i as f64).collect(),
        }
    }

    pub fn run(self, cfg: &RunConfig) -> Result<Table> {
        let grid = cfg.harness.grid.clone().unwrap_or_else(|| self.default_grid());
        let sc = &cfg.scenario;
        let mut table = match self {
            Experiment::Fig2Nmse => fig2_nmse(sc, &grid)?,
            Experiment::Fig3Ser => fig3_ser(sc, &grid, cfg.harness.target_errors)?,
            Experiment::Fig4SeCdf => fig4_se_cdf(sc, &grid)?,
            Experiment::Fig6NmseVsNb => fig6_nmse_vs_nb(sc, &integers(&grid)?, &[8, 16, 32, 64])?,
            Experiment::Fig7CuVsNb => fig7_cu_vs_nb(sc, &integers(&grid)?, &[4, 8, 16, 32, 64])?,
            Experiment::Fig7bCuVsL => fig7b_cu_vs_l(sc, &integers(&grid)?, &[4, 8, 16, 32])?,
            Experiment::Fig9SerOds => fig9_ser_ods(sc, &grid, cfg.harness.target_errors)?,
            Experiment::Fig10SerImpcsi => fig10_ser_impcsi(sc, &grid, cfg.harness.target_errors, &[1e-4, 1e-3, 5e-3])?,
            Experiment::AsymptoteCheck => asymptote_check(sc, &grid)?,
        };
        table.sort_by_axis();
        Ok(table)
    }
}

/// Runs `exp` on a pool sized by the harness options.
pub fn run_experiment(exp: Experiment, cfg: &RunConfig) -> Result<Table> {
    with_workers(cfg.harness.workers, || exp.run(cfg))?
}

fn integers(grid: &[f64]) -> Result<Vec<usize>> {
    grid.iter()
        .map(|&x| {
            ensure!(x >= 1.0 && x.fract() == 0.0, "grid value {x} must be a positive integer");
            Ok(x as usize)
        })
        .collect()
}

/// Compact series label: `0.1`, `5`, `1e-4` all print without noise.
pub fn label(x: f64) -> String {
    format!("{x}")
}

fn trial_rng(sc: &ScenarioConfig, i: u64) -> cfota_core::rng::SimRng {
    stream(sc.seed, domain::TRIALS, i)
}

fn cpu_rng(sc: &ScenarioConfig, i: u64) -> cfota_core::rng::SimRng {
    stream(sc.seed, streams::CPU_NOISE, i)
}

fn rho_to_p(sc: &ScenarioConfig, rho_db: f64) -> f64 {
    sc.sigma2 * 10f64.powf(rho_db / 10.0)
}

fn require_planned(sc: &ScenarioConfig, what: &str) -> Result<()> {
    if sc.n == sc.m {
        bail!("{what} needs the moment-based power plan, which requires N > M");
    }
    Ok(())
}

fn planned(rule: EtaRule) -> f64 {
    match rule {
        EtaRule::Planned(e) => e,
        EtaRule::Instantaneous { .. } => f64::NAN,
    }
}

/// Per-slot squared error of the matched-filter outputs.
fn mf_error(est: &Stats, truth: &Stats) -> f64 {
    est.t
        .iter()
        .zip(&truth.t)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        / truth.t.len() as f64
}

const FIG2_SERIES: [(&str, Phase, Estimator); 4] = [
    ("gramian_ls", Phase::Gramian, Estimator::Ls),
    ("gramian_lmmse", Phase::Gramian, Estimator::Lmmse),
    ("mf_ls", Phase::MatchedFilter, Estimator::Ls),
    ("mf_lmmse", Phase::MatchedFilter, Estimator::Lmmse),
];

/// Empirical and closed-form NMSE of both statistics for both estimators.
///
/// Columns per series: `_sim_db`, `_theory_db`, `_mse`, `_mse_sem`,
/// `_theory`. NMSE divides by the model energy of the target.
pub fn fig2_nmse(sc: &ScenarioConfig, grid: &[f64]) -> Result<Table> {
    require_planned(sc, "fig2_nmse")?;
    let drops = build_drops(sc)?;
    let rules = drops
        .iter()
        .map(|d| grid.iter().map(|&pm| eta_rules(&d.model, sc.n, pm)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let c = qpsk();
    let nd = drops.len() as u64;
    // Per trial: for every grid point, squared error per series.
    let per_trial = par_map(0..sc.trials as u64, |i| {
        let di = (i % nd) as usize;
        let d = &drops[di];
        let mut rng = trial_rng(sc, i);
        let r = Realization::draw(&d.cov, sc.m, sc.tau_u, c.len(), &mut rng);
        let s = r.transmitted(&c);
        let locals = r.locals(&s, sc.p_ul, sc.sigma2)?;
        let exact = Stats::exact(&locals)?;
        let payloads = Payloads::build(&locals, sc.m)?;
        let pre = r.precoders()?;
        let noise = cpu_rng(sc, i);
        rules[di]
            .iter()
            .map(|rl| {
                let mut nr = noise.clone();
                let obs = Phase::BOTH
                    .iter()
                    .map(|&ph| transmit(&payloads, ph, &pre, &r.g, rl[ph.index()], sc.sigma2, &mut nr))
                    .collect::<Result<Vec<_>>>()?;
                let mut errs = [0.0; 4];
                for est in Estimator::BOTH {
                    let got = stats_from_observations(&obs, &d.model, est)?;
                    for (j, (_, ph, e)) in FIG2_SERIES.iter().enumerate() {
                        if *e == est {
                            errs[j] = match ph {
                                Phase::Gramian => frob2(&(&got.a - &exact.a)),
                                Phase::MatchedFilter => mf_error(&got, &exact),
                            };
                        }
                    }
                }
                Ok(errs)
            })
            .collect::<Result<Vec<[f64; 4]>>>()
    })?;

    let mut header = vec!["p_max".to_string()];
    for (name, _, _) in FIG2_SERIES {
        for suffix in ["sim_db", "theory_db", "mse", "mse_sem", "theory"] {
            header.push(format!("{name}_{suffix}"));
        }
    }
    let mut table = Table::new(header);
    for (gi, &pm) in grid.iter().enumerate() {
        let mut row = vec![pm];
        for (j, (_, ph, est)) in FIG2_SERIES.iter().enumerate() {
            let mut acc = MeanAccumulator::default();
            let (mut theory, mut energy) = (0.0, 0.0);
            for (i, t) in per_trial.iter().enumerate() {
                acc.push(t[gi][j]);
                let d = &drops[i % drops.len()];
                let eta = planned(rules[i % drops.len()][gi][ph.index()]);
                theory += match ph {
                    Phase::Gramian => mse_gramian_theory(*est, &d.model, eta, sc.sigma2),
                    Phase::MatchedFilter => mse_mf_theory(*est, &d.model, eta, sc.sigma2),
                };
                energy += match ph {
                    Phase::Gramian => d.model.gramian_energy(),
                    Phase::MatchedFilter => d.model.mf_energy(),
                };
            }
            let n = per_trial.len() as f64;
            let rep = acc.report(theory / n, energy / n)?;
            row.extend([rep.nmse_empirical_db, rep.nmse_theory_db, rep.empirical, rep.sem, rep.theory]);
        }
        table.push(row)?;
    }
    Ok(table)
}

/// Per-drop context of an SER point: model at that uplink power and the
/// power rules of each budget.
struct SerContext {
    model: Model,
    rules: Vec<[EtaRule; 2]>,
}

fn ser_contexts(sc: &ScenarioConfig, drops: &[DropModel], grid: &[f64], budgets: &[f64]) -> Result<Vec<Vec<SerContext>>> {
    drops
        .iter()
        .map(|d| {
            grid.iter()
                .map(|&rho| {
                    let model = d.model.with_p_ul(rho_to_p(sc, rho));
                    let rules = budgets
                        .iter()
                        .map(|&pm| eta_rules(&model, sc.n, pm))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(SerContext { model, rules })
                })
                .collect()
        })
        .collect()
}

/// LS and LMMSE fronthaul estimation at each power budget plus a wired
/// (error-free fronthaul) baseline.
pub fn fig3_ser(sc: &ScenarioConfig, grid: &[f64], target: u64) -> Result<Table> {
    let budgets = [1.0, 5.0];
    let mut names = Vec::new();
    for pm in budgets {
        for est in Estimator::BOTH {
            names.push(format!("{}_pmax_{}", est.name(), label(pm)));
        }
    }
    names.push("wired".into());
    let drops = build_drops(sc)?;
    let ctx = ser_contexts(sc, &drops, grid, &budgets)?;
    let c = qpsk();
    let nd = drops.len() as u64;
    let per_trial = (sc.k * sc.tau_u) as u64;
    let counts = grid
        .iter()
        .enumerate()
        .map(|(gi, &rho)| {
            let p = rho_to_p(sc, rho);
            ser_point(names.len(), per_trial, sc.trials as u64, target, |i, active| {
                let di = (i % nd) as usize;
                let cx = &ctx[di][gi];
                let mut rng = trial_rng(sc, i);
                let r = Realization::draw(&drops[di].cov, sc.m, sc.tau_u, c.len(), &mut rng);
                let s = r.transmitted(&c);
                let locals = r.locals(&s, p, sc.sigma2)?;
                let mut errs = vec![0; names.len()];
                if active[..2 * budgets.len()].iter().any(|&a| a) {
                    let payloads = Payloads::build(&locals, sc.m)?;
                    let pre = r.precoders()?;
                    let noise = cpu_rng(sc, i);
                    for (bi, rules) in cx.rules.iter().enumerate() {
                        if !(active[2 * bi] || active[2 * bi + 1]) {
                            continue;
                        }
                        let mut nr = noise.clone();
                        let obs = Phase::BOTH
                            .iter()
                            .map(|&ph| transmit(&payloads, ph, &pre, &r.g, rules[ph.index()], sc.sigma2, &mut nr))
                            .collect::<Result<Vec<_>>>()?;
                        for (ei, est) in Estimator::BOTH.into_iter().enumerate() {
                            let j = 2 * bi + ei;
                            if active[j] {
                                let st = stats_from_observations(&obs, &cx.model, est)?;
                                errs[j] = count_errors(&st, &r.symbols, p, sc.sigma2, &c)?;
                            }
                        }
                    }
                }
                let w = names.len() - 1;
                if active[w] {
                    errs[w] = count_errors(&Stats::exact(&locals)?, &r.symbols, p, sc.sigma2, &c)?;
                }
                Ok(errs)
            })
        })
        .collect::<Result<Vec<Vec<SerCount>>>>()?;
    ser_table("rho_db", &names, grid, &counts)
}

/// Per-UE UatF spectral efficiencies over all drops, one vector per series.
pub struct SeSamples {
    pub names: Vec<String>,
    pub samples: Vec<Vec<f64>>,
}

/// Per-UE spectral efficiency of OTA fronthaul at each budget in `budgets`
/// (LMMSE Gramian estimate, ZF combiner on it) and of the two wired
/// benchmarks. Each drop uses `trials / drops` channel realizations.
pub fn se_samples(sc: &ScenarioConfig, budgets: &[f64]) -> Result<SeSamples> {
    require_planned(sc, "fig4_se_cdf")?;
    let per_drop = (sc.trials / sc.drops).max(1) as u64;
    let rho = sc.rho_ul();
    let pre_log = prelog(sc.tau_p, sc.tau_c);
    let mut names: Vec<String> = budgets.iter().map(|&b| format!("ota_pmax_{}", label(b))).collect();
    names.push("wired_uatf".into());
    names.push("wired_si".into());
    let mut samples = vec![Vec::new(); names.len()];
    for drop in 0..sc.drops as u64 {
        let d = crate::pipeline::build_drop(sc, drop)?;
        let plans = budgets
            .iter()
            .map(|&pm| PowerPlan::from_model(&d.model, pm))
            .collect::<cfota_core::Result<Vec<_>>>()?;
        let prior = d.model.prior(Phase::Gramian);
        type Accs = (Vec<UatfAccumulator>, UatfAccumulator, SiAccumulator);
        let parts: Vec<Accs> = par_map(0..per_drop, |r| {
            let i = drop * per_drop + r;
            let mut rng = trial_rng(sc, i);
            let h = cfota_core::channel::sample_access(&d.cov, &mut rng).h;
            let g = cfota_core::channel::sample_fronthaul(&d.cov, sc.m, &mut rng).g;
            let locals = h.iter().map(|h| local_stats(h, &[])).collect::<cfota_core::Result<Vec<_>>>()?;
            let a = Stats::exact(&locals)?.a;
            let xbars = locals
                .iter()
                .map(|s| PhasePayload::build(s, Phase::Gramian, sc.m).map(|p| p.xbar))
                .collect::<cfota_core::Result<Vec<_>>>()?;
            let pre = g.iter().map(cfota_core::ap_local::zf_precoder).collect::<cfota_core::Result<Vec<_>>>()?;
            let noise = cpu_rng(sc, i);
            let mut ota = Vec::with_capacity(plans.len());
            for plan in &plans {
                let obs = ota_transmit(&xbars, &pre, &g, plan.eta(Phase::Gramian), sc.sigma2, &mut noise.clone())?;
                let x1 = lmmse_estimate(&obs, &prior)?;
                let a_hat = devectorize_upper(&dechunk(&x1, upper_len(sc.k))?, sc.k)?;
                let v = inverse(&a_hat).context("estimated Gramian is singular")?;
                let mut acc = UatfAccumulator::new(sc.k);
                acc.push(&v, &a, 1.0 / plan.eta(Phase::MatchedFilter));
                ota.push(acc);
            }
            let v = inverse(&a)?;
            let mut wired = UatfAccumulator::new(sc.k);
            wired.push(&v, &a, 0.0);
            let mut si = SiAccumulator::new(sc.k);
            si.push(&v, &a, rho);
            Ok((ota, wired, si))
        })?;
        let mut ota: Vec<UatfAccumulator> = budgets.iter().map(|_| UatfAccumulator::new(sc.k)).collect();
        let mut wired = UatfAccumulator::new(sc.k);
        let mut si = SiAccumulator::new(sc.k);
        for (o, w, s) in &parts {
            for (acc, part) in ota.iter_mut().zip(o) {
                acc.merge(part);
            }
            wired.merge(w);
            si.merge(s);
        }
        for (j, acc) in ota.iter().enumerate() {
            samples[j].extend(acc.rates(rho, pre_log));
        }
        samples[budgets.len()].extend(wired.rates(rho, pre_log));
        samples[budgets.len() + 1].extend(si.rates(pre_log));
    }
    Ok(SeSamples { names, samples })
}

/// Empirical CDF table: row `i` holds the `i`-th smallest value of every
/// series at probability `(i + 0.5) / n`.
pub fn fig4_se_cdf(sc: &ScenarioConfig, budgets: &[f64]) -> Result<Table> {
    let se = se_samples(sc, budgets)?;
    let mut header = vec!["cdf".to_string()];
    header.extend(se.names.iter().cloned());
    let mut sorted = se.samples;
    for s in &mut sorted {
        s.sort_by(f64::total_cmp);
    }
    let n = sorted[0].len();
    let mut table = Table::new(header);
    for i in 0..n {
        let mut row = vec![(i as f64 + 0.5) / n as f64];
        row.extend(sorted.iter().map(|s| s[i]));
        table.push(row)?;
    }
    Ok(table)
}

/// Real and imaginary parts of AP payload entries, each divided by its
/// model RMS, pooled over both phases and a few calibration realizations.
/// `models[d]` normalizes drop `d` at uplink power `p`.
fn payload_sample(sc: &ScenarioConfig, drops: &[DropModel], models: &[&Model], p: f64) -> Result<Vec<f64>> {
    let mut sample = Vec::with_capacity(CALIBRATION_VALUES);
    let mut i = 0u64;
    while sample.len() < CALIBRATION_VALUES {
        let di = (i % drops.len() as u64) as usize;
        let mut rng = stream(sc.seed, domain::CALIBRATION, i);
        let r = Realization::draw(&drops[di].cov, sc.m, sc.tau_u, 4, &mut rng);
        let s = r.transmitted(&qpsk());
        let payloads = Payloads::build(&r.locals(&s, p, sc.sigma2)?, sc.m)?;
        for phase in Phase::BOTH {
            for (ap, v) in payloads.vectors[phase.index()].iter().enumerate() {
                let rms = models[di].entry_rms(phase, ap);
                sample.extend(v.iter().flat_map(|z| [z.re / rms, z.im / rms]));
            }
        }
        i += 1;
    }
    Ok(sample)
}

const CALIBRATION_VALUES: usize = 20_000;

/// Exponent/mantissa split for each width with the lowest relative error on
/// normalized payloads. Gramian entries of weak UE pairs sit decades below
/// the RMS, so range matters more than the energy-weighted error suggests.
fn formats_for(sample: &[f64], nbs: &[usize]) -> Result<Vec<FloatFormat>> {
    nbs.iter()
        .map(|&nb| Ok(select_format_by(nb as u32, sample, FormatCriterion::Relative)?))
        .collect()
}

/// Matched-filter NMSE of the digital fronthaul at each quantizer width and
/// of the OTA fronthaul (LMMSE, no extra SNR) for every `L`.
pub fn fig6_nmse_vs_nb(sc: &ScenarioConfig, nbs: &[usize], ls: &[usize]) -> Result<Table> {
    let mut header = vec!["n_b".to_string()];
    for l in ls {
        header.extend([format!("ods_L{l}_db"), format!("ods_L{l}_sem")]);
    }
    for l in ls {
        header.extend([format!("ota_L{l}_db"), format!("ota_L{l}_sem")]);
    }
    let c = qpsk();
    // [L][n_b] for ODS, [L] for OTA, as (mean, sem) NMSE.
    let mut ods = Vec::new();
    let mut ota = Vec::new();
    for &l in ls {
        let scl = ScenarioConfig { l, ..sc.clone() };
        let drops = build_drops(&scl)?;
        let rules = drops
            .iter()
            .map(|d| eta_rules(&d.model, scl.n, scl.p_max))
            .collect::<Result<Vec<_>>>()?;
        let models: Vec<&Model> = drops.iter().map(|d| &d.model).collect();
        let formats = formats_for(&payload_sample(&scl, &drops, &models, scl.p_ul)?, nbs)?;
        let nd = drops.len() as u64;
        let per_trial = par_map(0..scl.trials as u64, |i| {
            let di = (i % nd) as usize;
            let d = &drops[di];
            let mut rng = trial_rng(&scl, i);
            let r = Realization::draw(&d.cov, scl.m, scl.tau_u, c.len(), &mut rng);
            let s = r.transmitted(&c);
            let locals = r.locals(&s, scl.p_ul, scl.sigma2)?;
            let payloads = Payloads::build(&locals, scl.m)?;
            let vecs = &payloads.vectors[Phase::MatchedFilter.index()];
            let truth = vecs.iter().skip(1).fold(vecs[0].clone(), |acc, v| acc + v);
            let scales: Vec<f64> = (0..scl.l).map(|ap| d.model.entry_rms(Phase::MatchedFilter, ap)).collect();
            let mut errs = formats
                .iter()
                .map(|&f| Ok((digital_sum(vecs, &scales, f)? - &truth).norm_squared()))
                .collect::<Result<Vec<f64>>>()?;
            let pre = r.precoders()?;
            let obs = transmit(&payloads, Phase::MatchedFilter, &pre, &r.g, rules[di][1], scl.sigma2, &mut cpu_rng(&scl, i))?;
            let est = estimate(Estimator::Lmmse, &obs, &d.model, Phase::MatchedFilter)?;
            let got = dechunk(&est, truth.len())?;
            errs.push((got - &truth).norm_squared());
            Ok(errs)
        })?;
        let energy = (0..per_trial.len())
            .map(|i| drops[i % drops.len()].model.mf_energy() * scl.tau_u as f64)
            .sum::<f64>()
            / per_trial.len() as f64;
        let summarize = |j: usize| {
            let mut acc = MeanAccumulator::default();
            per_trial.iter().for_each(|e| acc.push(e[j]));
            (to_db(acc.mean() / energy), acc.sem() / energy)
        };
        ods.push((0..nbs.len()).map(summarize).collect::<Vec<_>>());
        ota.push(summarize(nbs.len()));
    }
    let mut table = Table::new(header);
    for (ni, &nb) in nbs.iter().enumerate() {
        let mut row = vec![nb as f64];
        for o in &ods {
            row.extend([o[ni].0, o[ni].1]);
        }
        for o in &ota {
            row.extend([o.0, o.1]);
        }
        table.push(row)?;
    }
    Ok(table)
}

/// Ergodic waterfilling rate of every AP link, indexed `[L][drop][ap]`.
/// `trials` is the number of fronthaul draws per AP.
pub fn ergodic_rates(sc: &ScenarioConfig, ls: &[usize]) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut out = Vec::with_capacity(ls.len());
    for &l in ls {
        let scl = ScenarioConfig { l, ..sc.clone() };
        let covs = (0..scl.drops as u64)
            .map(|d| generate_scenario_drop::<f64>(&scl, d))
            .collect::<cfota_core::Result<Vec<CovarianceSet<f64>>>>()?;
        let flat = par_map(0..(scl.drops * l) as u64, |idx| {
            let (d, ap) = (idx as usize / l, idx as usize % l);
            let mut rng = stream(scl.seed, domain::ERGODIC_RATE, ((d as u64) << 32) | ap as u64);
            let r = ergodic_rate(covs[d].g_beta(ap), scl.n, scl.m, scl.p_max, scl.sigma2, scl.trials, &mut rng)?;
            Ok(r.mean)
        })?;
        out.push(flat.chunks(l).map(|c| c.to_vec()).collect());
    }
    Ok(out)
}

/// Mean and SEM over drops of the digital channel uses, indexed `[L][n_b]`.
fn upsilon_table(sc: &ScenarioConfig, ls: &[usize], nbs: &[usize]) -> Result<Vec<Vec<(f64, f64)>>> {
    let rates = ergodic_rates(sc, ls)?;
    let n_s = sc.n_s2();
    rates
        .iter()
        .map(|per_drop| {
            nbs.iter()
                .map(|&nb| {
                    let mut acc = MeanAccumulator::default();
                    for rbar in per_drop {
                        let plan = allocate_resources(rbar, payload_bits(n_s, nb as u32), n_s, sc.m)?;
                        acc.push(plan.upsilon_ods as f64);
                    }
                    let sem = if acc.n > 1 { acc.sem() } else { 0.0 };
                    Ok((acc.mean(), sem))
                })
                .collect()
        })
        .collect()
}

pub fn fig7_cu_vs_nb(sc: &ScenarioConfig, nbs: &[usize], ls: &[usize]) -> Result<Table> {
    let ups = upsilon_table(sc, ls, nbs)?;
    let mut header = vec!["n_b".to_string()];
    for l in ls {
        header.extend([format!("ods_L{l}"), format!("ods_L{l}_sem")]);
    }
    header.push("ota".into());
    let ota = channel_uses_ota(sc.n_s2(), sc.m) as f64;
    let mut table = Table::new(header);
    for (ni, &nb) in nbs.iter().enumerate() {
        let mut row = vec![nb as f64];
        for u in &ups {
            row.extend([u[ni].0, u[ni].1]);
        }
        row.push(ota);
        table.push(row)?;
    }
    Ok(table)
}

pub fn fig7b_cu_vs_l(sc: &ScenarioConfig, ls: &[usize], nbs: &[usize]) -> Result<Table> {
    let ups = upsilon_table(sc, ls, nbs)?;
    let mut header = vec!["L".to_string()];
    for nb in nbs {
        header.extend([format!("ods_nb{nb}"), format!("ods_nb{nb}_sem")]);
    }
    header.push("ota".into());
    let ota = channel_uses_ota(sc.n_s2(), sc.m) as f64;
    let mut table = Table::new(header);
    for (li, &l) in ls.iter().enumerate() {
        let mut row = vec![l as f64];
        for u in &ups[li] {
            row.extend([u.0, u.1]);
        }
        row.push(ota);
        table.push(row)?;
    }
    Ok(table)
}

/// Digital fronthaul at 8 and 16 bits against OTA (LMMSE) without extra
/// SNR, OTA with the channel-use matched power boost for each width, and a
/// genie with exact statistics.
pub fn fig9_ser_ods(sc: &ScenarioConfig, grid: &[f64], target: u64) -> Result<Table> {
    require_planned(sc, "fig9_ser_ods")?;
    let widths = [8usize, 16];
    let names: Vec<String> = vec![
        "ods_nb8".into(),
        "ods_nb16".into(),
        "ota_no_extra".into(),
        "ota_nb8".into(),
        "ota_nb16".into(),
        "genie".into(),
    ];
    let drops = build_drops(sc)?;
    let rates = ergodic_rates(&ScenarioConfig { trials: ERGODIC_DRAWS, ..sc.clone() }, &[sc.l])?;
    let factors = rates[0]
        .iter()
        .map(|rbar| {
            let mut f = vec![1.0];
            for &nb in &widths {
                let plan = allocate_resources(rbar, payload_bits(sc.n_s2(), nb as u32), sc.n_s2(), sc.m)?;
                f.push(ota_extra_snr_factor(&plan)?);
            }
            Ok(f)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let ctx = ser_contexts(sc, &drops, grid, &[sc.p_max])?;
    let c = qpsk();
    let nd = drops.len() as u64;
    let per_trial = (sc.k * sc.tau_u) as u64;
    let counts = grid
        .iter()
        .enumerate()
        .map(|(gi, &rho)| {
            let p = rho_to_p(sc, rho);
            let models: Vec<&Model> = ctx.iter().map(|cd| &cd[gi].model).collect();
            let formats = formats_for(&payload_sample(sc, &drops, &models, p)?, &widths)?;
            ser_point(names.len(), per_trial, sc.trials as u64, target, |i, active| {
                let di = (i % nd) as usize;
                let cx = &ctx[di][gi];
                let mut rng = trial_rng(sc, i);
                let r = Realization::draw(&drops[di].cov, sc.m, sc.tau_u, c.len(), &mut rng);
                let s = r.transmitted(&c);
                let locals = r.locals(&s, p, sc.sigma2)?;
                let payloads = Payloads::build(&locals, sc.m)?;
                let mut errs = vec![0; names.len()];
                for (j, &fmt) in formats.iter().enumerate() {
                    if active[j] {
                        errs[j] = count_errors(&ods_stats(&payloads, &cx.model, fmt)?, &r.symbols, p, sc.sigma2, &c)?;
                    }
                }
                if active[2..5].iter().any(|&a| a) {
                    let pre = r.precoders()?;
                    let noise = cpu_rng(sc, i);
                    for (fi, &f) in factors[di].iter().enumerate() {
                        let j = 2 + fi;
                        if !active[j] {
                            continue;
                        }
                        let rules = cx.rules[0].map(|rl| rl.scaled(f));
                        let mut nr = noise.clone();
                        let obs = Phase::BOTH
                            .iter()
                            .map(|&ph| transmit(&payloads, ph, &pre, &r.g, rules[ph.index()], sc.sigma2, &mut nr))
                            .collect::<Result<Vec<_>>>()?;
                        let st = stats_from_observations(&obs, &cx.model, Estimator::Lmmse)?;
                        errs[j] = count_errors(&st, &r.symbols, p, sc.sigma2, &c)?;
                    }
                }
                if active[5] {
                    errs[5] = count_errors(&Stats::exact(&locals)?, &r.symbols, p, sc.sigma2, &c)?;
                }
                Ok(errs)
            })
        })
        .collect::<Result<Vec<Vec<SerCount>>>>()?;
    ser_table("rho_db", &names, grid, &counts)
}

/// Fronthaul draws per AP when ergodic rates only feed a power boost.
pub const ERGODIC_DRAWS: usize = 1000;

/// Covariances of the whitened channel estimate `Sigma^{-1/2} H_hat` at
/// uplink power `p_ul`, sharing the precoder moments of `base`.
fn whitened_model(
    cov: &CovarianceSet<f64>,
    rtilde: &[Vec<Mat>],
    base: &Model,
    sc: &ScenarioConfig,
    p_ul: f64,
) -> Result<Model> {
    let (k, l, n) = (cov.k(), cov.l(), cov.n());
    let mut r = vec![Vec::with_capacity(l); k];
    for ap in 0..l {
        let mut sigma = CMat::<f64>::identity(n, n) * cr(sc.sigma2);
        for row in rtilde {
            sigma += &row[ap] * cr(p_ul);
        }
        let w = psd_inv_sqrt(&sigma, 1e-12);
        for (kk, rk) in r.iter_mut().enumerate() {
            let rhat = cov.r(kk, ap) - &rtilde[kk][ap];
            rk.push(&w * rhat * &w);
        }
    }
    let wcov = CovarianceSet::from_matrices(r, cov.g_betas().to_vec())?;
    Ok(MomentModel::new(&wcov, sc.m, sc.tau_u, p_ul, 1.0, base.ewhw.clone())?)
}

/// OTA (LS) with LMMSE-estimated access channels at each pilot power,
/// OTA (LS) with perfect access CSI, and a wired perfect-CSI baseline.
pub fn fig10_ser_impcsi(sc: &ScenarioConfig, grid: &[f64], target: u64, pilots: &[f64]) -> Result<Table> {
    let mut names: Vec<String> = pilots
        .iter()
        .map(|&pp| format!("ota_ls_pilot_{}mw", label((pp * 1e3 * 1e6).round() / 1e6)))
        .collect();
    names.push("ota_ls_perfect_csi".into());
    names.push("wired".into());
    let np = pilots.len();
    let drops = build_drops(sc)?;
    let perfect = ser_contexts(sc, &drops, grid, &[sc.p_max])?;
    // [drop][pilot] error covariances, then [drop][pilot][rho] contexts.
    let rtildes = drops
        .iter()
        .map(|d| {
            pilots
                .iter()
                .map(|&pp| Ok(access_error_covariances(&d.cov, pp, sc.tau_p, sc.sigma2, sc.pilot_reuse)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let whitened = drops
        .iter()
        .zip(&rtildes)
        .map(|(d, rts)| {
            rts.iter()
                .map(|rt| {
                    grid.iter()
                        .map(|&rho| {
                            let model = whitened_model(&d.cov, rt, &d.model, sc, rho_to_p(sc, rho))?;
                            let rules = eta_rules(&model, sc.n, sc.p_max)?;
                            Ok(SerContext { model, rules: vec![rules] })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let c = qpsk();
    let nd = drops.len() as u64;
    let per_trial = (sc.k * sc.tau_u) as u64;
    let counts = grid
        .iter()
        .enumerate()
        .map(|(gi, &rho)| {
            let p = rho_to_p(sc, rho);
            ser_point(names.len(), per_trial, sc.trials as u64, target, |i, active| {
                let di = (i % nd) as usize;
                let d = &drops[di];
                let mut rng = trial_rng(sc, i);
                let r = Realization::draw(&d.cov, sc.m, sc.tau_u, c.len(), &mut rng);
                let s = r.transmitted(&c);
                let y = r.received(&s, p, sc.sigma2);
                let noise = cpu_rng(sc, i);
                let pilot_noise = stream(sc.seed, streams::PILOT_NOISE, i);
                let mut errs = vec![0; names.len()];
                let pre = if active[..=np].iter().any(|&a| a) { Some(r.precoders()?) } else { None };
                let ch = AccessChannels { h: r.h.clone() };
                for (pi, &pp) in pilots.iter().enumerate() {
                    if !active[pi] {
                        continue;
                    }
                    let cx = &whitened[di][pi][gi];
                    let est = lmmse_access_estimate(&ch, &d.cov, pp, sc.tau_p, sc.sigma2, sc.pilot_reuse, &mut pilot_noise.clone())?;
                    let locals = whitened_locals(&est.h_hat, &est.rtilde, &y, p, sc.sigma2)?;
                    let payloads = Payloads::build(&locals, sc.m)?;
                    let pre = pre.as_ref().expect("precoders built when a series is active");
                    let mut nr = noise.clone();
                    let obs = Phase::BOTH
                        .iter()
                        .map(|&ph| transmit(&payloads, ph, pre, &r.g, cx.rules[0][ph.index()], sc.sigma2, &mut nr))
                        .collect::<Result<Vec<_>>>()?;
                    let st = stats_from_observations(&obs, &cx.model, Estimator::Ls)?;
                    errs[pi] = count_errors(&st, &r.symbols, p, 1.0, &c)?;
                }
                let locals = y
                    .iter()
                    .zip(&r.h)
                    .map(|(yl, h)| local_stats(h, yl))
                    .collect::<cfota_core::Result<Vec<_>>>()?;
                if active[np] {
                    let cx = &perfect[di][gi];
                    let payloads = Payloads::build(&locals, sc.m)?;
                    let pre = pre.as_ref().expect("precoders built when a series is active");
                    let mut nr = noise.clone();
                    let obs = Phase::BOTH
                        .iter()
                        .map(|&ph| transmit(&payloads, ph, pre, &r.g, cx.rules[0][ph.index()], sc.sigma2, &mut nr))
                        .collect::<Result<Vec<_>>>()?;
                    let st = stats_from_observations(&obs, &cx.model, Estimator::Ls)?;
                    errs[np] = count_errors(&st, &r.symbols, p, sc.sigma2, &c)?;
                }
                if active[np + 1] {
                    errs[np + 1] = count_errors(&GlobalStats::exact(&locals)?, &r.symbols, p, sc.sigma2, &c)?;
                }
                Ok(errs)
            })
        })
        .collect::<Result<Vec<Vec<SerCount>>>>()?;
    ser_table("rho_db", &names, grid, &counts)
}

/// Simulated ZF data MSE with an exact Gramian and an OTA matched-filter
/// phase, next to its conditional closed form and the large-power floor
/// `sigma2 a_r / P_max tr A^{-2}` evaluated on the same realizations.
pub fn asymptote_check(sc: &ScenarioConfig, grid: &[f64]) -> Result<Table> {
    require_planned(sc, "asymptote_check")?;
    let drops = build_drops(sc)?;
    let c = qpsk();
    let nd = drops.len() as u64;
    let mut table = Table::new(
        [
            "rho_db", "data_mse", "data_mse_sem", "theory", "theory_sem", "floor", "floor_sem", "eta",
        ]
        .map(String::from)
        .to_vec(),
    );
    for &rho in grid {
        let p = rho_to_p(sc, rho);
        // Per drop: eta and a_r of the AP with the largest phase-2 report.
        let per_drop = drops
            .iter()
            .map(|d| {
                let model = d.model.with_p_ul(p);
                let eta = PowerPlan::from_model(&model, sc.p_max)?.eta(Phase::MatchedFilter);
                let reports = power_report(&model, Phase::MatchedFilter);
                let r = (0..reports.len())
                    .max_by(|&x, &y| reports[x].total_cmp(&reports[y]))
                    .expect("at least one AP");
                Ok((eta, d.model.a[r]))
            })
            .collect::<Result<Vec<_>>>()?;
        let per_trial = par_map(0..sc.trials as u64, |i| {
            let di = (i % nd) as usize;
            let (eta, a_r) = per_drop[di];
            let mut rng = trial_rng(sc, i);
            let r = Realization::draw(&drops[di].cov, sc.m, sc.tau_u, c.len(), &mut rng);
            let s = r.transmitted(&c);
            let locals = r.locals(&s, p, sc.sigma2)?;
            let a = Stats::exact(&locals)?.a;
            let payloads = Payloads::build(&locals, sc.m)?;
            let pre = r.precoders()?;
            let obs = transmit(&payloads, Phase::MatchedFilter, &pre, &r.g, EtaRule::Planned(eta), sc.sigma2, &mut cpu_rng(sc, i))?;
            let t = dechunk(&ls_estimate(&obs)?, sc.k * sc.tau_u)?;
            let t = cfota_core::ap_local::unstack_mf(&t, sc.k, sc.tau_u)?;
            let a_inv = cfota_core::linalg::hpd_inverse(&a)?;
            let scale = cr(1.0 / p.sqrt());
            let err = s
                .iter()
                .zip(&t)
                .map(|(s, t)| (s - &a_inv * t * scale).norm_squared())
                .sum::<f64>()
                / sc.tau_u as f64;
            let (tr1, tr2) = inverse_traces(&a)?;
            Ok([
                err,
                data_mse_zf(tr1, tr2, eta, p, sc.sigma2),
                data_mse_floor(tr2, sc.sigma2, a_r, sc.p_max),
            ])
        })?;
        let mut accs = [MeanAccumulator::default(); 3];
        for t in &per_trial {
            for (acc, &v) in accs.iter_mut().zip(t) {
                acc.push(v);
            }
        }
        let eta_mean = (0..per_trial.len()).map(|i| per_drop[i % per_drop.len()].0).sum::<f64>() / per_trial.len() as f64;
        table.push(vec![
            rho,
            accs[0].mean(),
            accs[0].sem(),
            accs[1].mean(),
            accs[1].sem(),
            accs[2].mean(),
            accs[2].sem(),
            eta_mean,
        ])?;
    }
    Ok(table)
}
