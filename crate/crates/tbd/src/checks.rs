//! Acceptance checks. Each returns a pass/fail verdict with the measured
//! statistic; `selftest` runs the oracle-backed ones.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use glmb_core::approx::{decompose, marginal_product_approx, separable_update, Gamma};
use glmb_core::filter::{
    generic_update, generic_update_with, predict, separable_update_path, BirthModel, Coupling, FilterState,
    FnLikelihood, IdentityTransition, SetLikelihood, SurvivalModel, Truncation,
};
use glmb_core::glmb::{DGlmbComponent, DGlmbDensity, DiscreteGridDensity, SingleObjectDensity};
use glmb_core::math::ln_bessel_i0;
use glmb_core::oracle::{self, exact_bayes, kld, label_space, mass_at, random_grid_dglmb, random_instance, unit_grid};
use glmb_core::rng::stream;
use glmb_core::sensor::{amplitude_from_snr, synthesize_frame, Axis, RadarGrid};
use glmb_core::{Label, LabelSet, LabeledState};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{Mode, ScenarioConfig};
use crate::montecarlo::{run_monte_carlo, simulate, steady_state, steady_steps, RunOptions};
use crate::presets;
use crate::trial::{birth_model, radar_likelihood, filter_time, frame_for_step, survival_model, trial_seed, Scenario};
use crate::truth::{build_grid, generate_truth};

#[allow(clippy::excessive_precision)]
mod reference {
    include!("../../core/tests/data/ln_i0_reference.rs");
}

/// Verdict of one criterion.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    f: impl FnOnce() -> Result<(bool, String), String>,
) -> CheckResult {
    let start = Instant::now();
    let r = f();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match r {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(l) = limit {
        if elapsed > l {
            passed = false;
            detail.push_str(&format!("; over the {} s budget", l.as_secs()));
        }
    }
    CheckResult {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

/// Criterion 1: the marginal-product approximation keeps the cardinality
/// distribution and PHD of arbitrary small labeled densities.
pub fn preservation(instances: usize) -> CheckResult {
    timed(1, "cardinality and PHD preservation", Some(Duration::from_secs(30)), || {
        let mut worst = 0.0f64;
        for i in 0..instances {
            let mut rng = stream(101, &[i as u64]);
            let (nl, ng) = (rng.random_range(1..=3), rng.random_range(1..=5));
            let inst = random_instance(&mut rng, nl, ng).map_err(err)?;
            let approx = marginal_product_approx(&decompose(&inst).map_err(err)?).map_err(err)?;
            let card = approx.cardinality();
            for (n, want) in inst.cardinality().iter().enumerate() {
                worst = worst.max((card.mass(n) - want).abs());
            }
            let phd = approx.phd();
            for label in inst.label_space().iter() {
                for (g, x) in inst.grid().iter().enumerate() {
                    let got = phd
                        .per_label
                        .get(label)
                        .map_or(0.0, |t| t.mass * mass_at(&t.density, x));
                    worst = worst.max((got - inst.phd(*label, g)).abs());
                }
            }
        }
        Ok((worst <= 1e-10, format!("{instances} instances, max abs error {worst:.2e} (tol 1e-10)")))
    })
}

/// Criterion 2: no same-weight δ-GLMB is closer in KLD than the marginal
/// product.
pub fn kld_minimality(instances: usize, perturbations: usize) -> CheckResult {
    timed(2, "KLD minimality", Some(Duration::from_secs(60)), || {
        let mut worst = f64::INFINITY;
        for i in 0..instances {
            let mut rng = stream(102, &[i as u64]);
            let (nl, ng) = (rng.random_range(2..=3), rng.random_range(3..=5));
            let inst = random_instance(&mut rng, nl, ng).map_err(err)?;
            let approx = marginal_product_approx(&decompose(&inst).map_err(err)?).map_err(err)?;
            let space = inst.label_space().clone();
            let grid = inst.grid().to_vec();
            let as_inst = |d: &DGlmbDensity| oracle::DiscreteInstance::from_dglmb(d, space.clone(), grid.clone());
            let best = kld(&inst, &as_inst(&approx).map_err(err)?).map_err(err)?;
            for _ in 0..perturbations {
                let scale = 0.05 + rng.random::<f64>();
                let components = approx
                    .components()
                    .iter()
                    .map(|c| {
                        let densities = c
                            .densities
                            .iter()
                            .map(|(l, d)| {
                                let masses = grid
                                    .iter()
                                    .map(|x| {
                                        let z: f64 = StandardNormal.sample(&mut rng);
                                        mass_at(d, x) * (scale * z).exp()
                                    })
                                    .collect();
                                let g = DiscreteGridDensity::new(grid.clone(), masses)?;
                                Ok((*l, Arc::new(SingleObjectDensity::Grid(g))))
                            })
                            .collect::<glmb_core::Result<_>>()?;
                        DGlmbComponent::new(c.label_set.clone(), c.weight, densities)
                    })
                    .collect::<glmb_core::Result<Vec<_>>>()
                    .map_err(err)?;
                let other = DGlmbDensity::new(components).map_err(err)?;
                let k = kld(&inst, &as_inst(&other).map_err(err)?).map_err(err)?;
                worst = worst.min(k - best);
            }
        }
        Ok((
            worst >= -1e-12,
            format!(
                "{instances} instances x {perturbations} perturbations, min KLD margin {worst:.3e} (tol -1e-12)"
            ),
        ))
    })
}

/// Criterion 3: the separable update is exact Bayes.
pub fn conjugacy(instances: usize) -> CheckResult {
    timed(3, "separable update conjugacy", Some(Duration::from_secs(30)), || {
        let mut worst = 0.0f64;
        for i in 0..instances {
            let mut rng = stream(103, &[i as u64]);
            let (nl, ng) = (rng.random_range(1..=3), rng.random_range(1..=5));
            let prior = random_grid_dglmb(&mut rng, nl, ng).map_err(err)?;
            let table: Vec<Vec<f64>> = (0..nl)
                .map(|_| (0..ng).map(|_| 0.1 + 2.0 * rng.random::<f64>()).collect())
                .collect();
            let gamma = |x: &glmb_core::Kinematic, l: Label| table[l.index as usize][x[0] as usize];
            let post = separable_update(&prior, &Gamma(gamma)).map_err(err)?;
            let inst = oracle::DiscreteInstance::from_dglmb(&prior, label_space(nl), unit_grid(ng)).map_err(err)?;
            let exact = exact_bayes(&inst, |x| x.iter().map(|(l, g)| table[l.index as usize][*g]).product())
                .map_err(err)?;
            let got = oracle::DiscreteInstance::from_dglmb(&post, label_space(nl), unit_grid(ng)).map_err(err)?;
            for set in exact.sets() {
                worst = worst.max((exact.mass(&set) - got.mass(&set)).abs());
            }
        }
        Ok((worst <= 1e-12, format!("{instances} instances, max pointwise error {worst:.2e} (tol 1e-12)")))
    })
}

/// Criterion 4: the grid-exhaustive generic update equals exact Bayes
/// followed by the marginal-product approximation, weights included.
pub fn generic_pipeline(instances: usize) -> CheckResult {
    timed(4, "generic update pipeline", Some(Duration::from_secs(60)), || {
        let mut worst = 0.0f64;
        for i in 0..instances {
            let mut rng = stream(104, &[i as u64]);
            let (nl, ng) = (rng.random_range(1..=3), rng.random_range(2..=4));
            let prior = random_grid_dglmb(&mut rng, nl, ng).map_err(err)?;
            let inst = oracle::DiscreteInstance::from_dglmb(&prior, label_space(nl), unit_grid(ng)).map_err(err)?;
            let table: BTreeMap<oracle::LabeledSet, f64> = oracle::enumerate_sets(&label_space(nl), ng)
                .into_iter()
                .map(|s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (s, z)
                })
                .collect();
            let log_lik = |xs: &[LabeledState]| table[&inst.to_labeled_set(xs).expect("grid state")];
            let state = FilterState::from_density(prior.clone(), 0, i as u64);
            let post = generic_update(&state, &FnLikelihood(log_lik), &Truncation::none()).map_err(err)?;
            let exact = exact_bayes(&inst, |x| table[x].exp()).map_err(err)?;
            let want = marginal_product_approx(&decompose(&exact).map_err(err)?).map_err(err)?;
            if post.density.len() != want.len() {
                return Ok((false, format!("instance {i}: component count differs")));
            }
            for w in want.components() {
                let Some(g) = post.density.get(&w.label_set) else {
                    return Ok((false, format!("instance {i}: missing component {}", w.label_set)));
                };
                worst = worst.max((g.weight - w.weight).abs());
                for (l, d) in &w.densities {
                    for x in inst.grid() {
                        worst = worst.max((mass_at(&g.densities[l], x) - mass_at(d, x)).abs());
                    }
                }
            }
        }
        Ok((
            worst <= 1e-12,
            format!("{instances} instances, max weight/marginal error {worst:.2e} (tol 1e-12)"),
        ))
    })
}

/// Criterion 5: survivor weights, total mass and the birth-subset weights
/// of the prediction.
pub fn prediction_algebra(instances: usize) -> CheckResult {
    timed(5, "prediction algebra", None, || {
        let p_s = 0.99;
        let mut worst = 0.0f64;
        let mut worst_total = 0.0f64;
        for i in 0..instances {
            let mut rng = stream(105, &[i as u64]);
            let ng = rng.random_range(1..=4);
            let prior = random_grid_dglmb(&mut rng, 2, ng).map_err(err)?;
            let state = FilterState::from_density(prior.clone(), 0, i as u64);
            let survival = SurvivalModel::constant(p_s, IdentityTransition);
            let pred = predict(&state, &survival, &BirthModel::new(), &Truncation::none()).map_err(err)?;
            worst_total = worst_total.max((pred.density.total_weight() - 1.0).abs());
            // w_S(L) = Σ_{J ⊇ L} p_S^|L| (1 − p_S)^|J∖L| w(J), enumerated over all J
            for set in label_space(2).subsets() {
                let mut want = 0.0;
                for j in label_space(2).subsets() {
                    if let (true, Some(c)) = (set.is_subset(&j), prior.get(&j)) {
                        want += c.weight * p_s.powi(set.len() as i32) * (1.0 - p_s).powi((j.len() - set.len()) as i32);
                    }
                }
                let got = pred.density.get(&set).map_or(0.0, |c| c.weight);
                worst = worst.max((got - want).abs());
            }
        }
        let mut births = BirthModel::new();
        let density = SingleObjectDensity::Grid(DiscreteGridDensity::new(unit_grid(1), vec![1.0]).map_err(err)?);
        for i in 0..3 {
            births.insert(Label::new(1, i), 0.01, density.clone()).map_err(err)?;
        }
        let empty = FilterState::new(0);
        let survival = SurvivalModel::constant(p_s, IdentityTransition);
        let pred = predict(&empty, &survival, &births, &Truncation::none()).map_err(err)?;
        let mut birth_err = 0.0f64;
        for set in LabelSet::from_iter((0..3).map(|i| Label::new(1, i))).subsets() {
            let want = [0.970299, 0.009801, 0.000099, 0.000001][set.len()];
            let got = pred.density.get(&set).map_or(0.0, |c| c.weight);
            birth_err = birth_err.max((got - want).abs());
        }
        Ok((
            worst <= 1e-12 && worst_total <= 1e-9 && birth_err <= 1e-12,
            format!(
                "survivor error {worst:.2e} (tol 1e-12), total-mass error {worst_total:.2e} (tol 1e-9), \
                 birth-subset error {birth_err:.2e} (empty set 0.970299)"
            ),
        ))
    })
}

/// Kolmogorov–Smirnov statistic against `Exp(mean)`.
pub fn ks_exponential(samples: &mut [f64], mean: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let f = 1.0 - (-z / mean).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Criterion 6: noise-only cells are exponential and a centred target's
/// cell has mean `2σ² + Ā²`.
pub fn sensor_statistics() -> CheckResult {
    timed(6, "sensor statistics", Some(Duration::from_secs(30)), || {
        let sigma_sq = 1.0;
        let grid = RadarGrid::new(
            Axis::new(1000.0, 5.0, 100).map_err(err)?,
            Axis::new(0.0, 0.01, 100).map_err(err)?,
            Axis::new(-5.0, 1.0, 10).map_err(err)?,
            sigma_sq,
        )
        .map_err(err)?;
        let frame = synthesize_frame(&[], &grid, 1e-2, &mut stream(106, &[0])).map_err(err)?.frame;
        let mut z = frame.powers().to_vec();
        let n = z.len();
        let d = ks_exponential(&mut z, 2.0 * sigma_sq);
        let crit = 1.6276 / (n as f64).sqrt();

        let small = RadarGrid::new(
            Axis::new(1000.0, 5.0, 5).map_err(err)?,
            Axis::new(0.5, 0.01, 5).map_err(err)?,
            Axis::new(-2.0, 1.0, 5).map_err(err)?,
            sigma_sq,
        )
        .map_err(err)?;
        let a = amplitude_from_snr(7.0, sigma_sq);
        let c = small.centroid(2, 2, 2);
        let (s, co) = c[1].sin_cos();
        let x = LabeledState::new([c[0] * co, -c[2] * co, c[0] * s, -c[2] * s, a], Label::new(0, 0));
        let frames = 20_000;
        let mut rng = stream(106, &[1]);
        let samples: Vec<f64> = (0..frames)
            .map(|_| synthesize_frame(&[x], &small, 1e-2, &mut rng).map(|f| f.frame.get(2, 2, 2)))
            .collect::<glmb_core::Result<_>>()
            .map_err(err)?;
        let mean = samples.iter().sum::<f64>() / frames as f64;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (frames - 1) as f64;
        let se = (var / frames as f64).sqrt();
        let want = 2.0 * sigma_sq + a * a;
        Ok((
            d < crit && (mean - want).abs() < 3.0 * se,
            format!(
                "KS D={d:.5} vs critical {crit:.5} on {n} cells; centre mean {mean:.4} vs {want:.4} (3 SE = {:.4})",
                3.0 * se
            ),
        ))
    })
}

/// Criterion 7: `ln I0` against the 50-digit table.
pub fn bessel_accuracy() -> CheckResult {
    timed(7, "log I0 accuracy", None, || {
        let worst = reference::LN_I0_REFERENCE
            .iter()
            .map(|(x, want)| ((ln_bessel_i0(*x) - want) / want).abs())
            .fold(0.0, f64::max);
        Ok((
            worst < 1e-9,
            format!("{} arguments, max relative error {worst:.2e} (tol 1e-9)", reference::LN_I0_REFERENCE.len()),
        ))
    })
}

/// The oracle-backed checks (1 to 7).
pub fn oracle_checks() -> Vec<CheckResult> {
    vec![
        preservation(100),
        kld_minimality(20, 200),
        conjugacy(100),
        generic_pipeline(50),
        prediction_algebra(20),
        sensor_statistics(),
        bessel_accuracy(),
    ]
}

/// Criterion 8: cardinality and OSPA of the desk scenario in steady state.
pub fn desk_tracking(cfg: &ScenarioConfig, settle: usize) -> CheckResult {
    timed(8, "desk-scale tracking", Some(Duration::from_secs(600)), || {
        let opts = RunOptions::from_config(cfg);
        let summary = simulate(cfg, &opts).map_err(err)?;
        let steps = steady_steps(&summary.truth, settle);
        let s = steady_state(&summary.outcomes, &steps);
        let ok = summary.failures.is_empty() && s.mean_abs_card_error < 0.5 && s.mean_ospa < 25.0;
        Ok((
            ok,
            format!(
                "{} trials ({} failed), {} steady steps: mean |card error| {:.3} (< 0.5), mean OSPA {:.2} m (< 25)",
                opts.trials,
                summary.failures.len(),
                s.steps,
                s.mean_abs_card_error,
                s.mean_ospa
            ),
        ))
    })
}

/// Standard deviation of `η_generic / η_separable - 1` for one component,
/// from the relative variances of the two estimators of `η`: with
/// independent clouds and per-label second moments `m_l = E[r_l²]` of the
/// normalized likelihood ratio, the common-index mean of `Π r_l` has
/// relative variance `(Π m_l - 1)/n`, the product of per-label means
/// `Σ (m_l - 1)/n`. `None` unless the clouds have pairwise disjoint
/// footprints.
fn eta_relative_sd<L: SetLikelihood>(c: &DGlmbComponent, lik: &L) -> Option<f64> {
    let mut bounds: Vec<L::Footprint> = Vec::new();
    let mut prod_m2 = 1.0;
    let mut sum_m2 = 0.0;
    let mut n_eff = f64::INFINITY;
    for (l, d) in &c.densities {
        if d.is_grid() {
            return None;
        }
        let evals: Vec<(f64, L::Footprint)> = d.points().iter().map(|x| lik.single(&LabeledState::new(*x, *l))).collect();
        let bound = evals.iter().skip(1).fold(evals.first()?.1.clone(), |b, e| lik.union(&b, &e.1));
        if bounds.iter().any(|b| lik.overlaps(b, &bound)) {
            return None;
        }
        bounds.push(bound);
        let max = evals.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut m1, mut m2) = (0.0, 0.0);
        for (w, e) in d.weights().iter().zip(&evals) {
            let r = (e.0 - max).exp();
            m1 += w * r;
            m2 += w * r * r;
        }
        let m2 = m2 / (m1 * m1);
        prod_m2 *= m2;
        sum_m2 += m2 - 1.0;
        n_eff = n_eff.min(1.0 / d.weights().iter().map(|w| w * w).sum::<f64>());
    }
    Some(((prod_m2 - 1.0 + sum_m2) / n_eff).sqrt())
}

/// Share of any distribution within three standard deviations of its mean,
/// at least. The joint-sample estimator is heavily right-skewed, so a
/// Gaussian coverage level does not apply.
const CHEBYSHEV_3SD: f64 = 8.0 / 9.0;

/// Criterion 9: for components whose label clouds have disjoint footprints,
/// the generic update with common-index joint samples and the separable
/// update give the same normalizers `η` up to Monte Carlo error.
pub fn separable_consistency(cfg: &ScenarioConfig, trials: usize, steps: usize) -> CheckResult {
    timed(9, "separable vs generic weights", None, || {
        let mut cfg = cfg.clone();
        cfg.steps = cfg.steps.min(steps);
        let grid = build_grid(&cfg);
        let truth = generate_truth(&cfg, &grid);
        let sc = Scenario {
            cfg: &cfg,
            grid: &grid,
            truth: &truth,
            mode: Mode::Separable,
            ospa: Default::default(),
        };
        let survival = survival_model(&cfg, &grid);
        let trunc = cfg.filter.truncation;
        let (mut compared, mut overlapping, mut within, mut worst_z) = (0usize, 0usize, 0usize, 0.0f64);
        for t in 0..trials {
            let seed = trial_seed(cfg.seed, t);
            let mut state = FilterState::new(seed);
            for k in 0..cfg.steps {
                let (frame, _) = frame_for_step(&sc, seed, k).map_err(err)?;
                let births = birth_model(&cfg, seed, filter_time(k)).map_err(err)?;
                let pred = predict(&state, &survival, &births, &trunc).map_err(err)?;
                let lik = radar_likelihood(&cfg, &frame, &grid);
                let gen = generic_update_with(&pred, &lik, &trunc, Coupling::Common).map_err(err)?;
                let sep = separable_update_path(&pred, &lik, &trunc).map_err(err)?;
                let gen_eta: BTreeMap<&LabelSet, f64> =
                    gen.diagnostics.component_log_eta.iter().map(|(s, e)| (s, *e)).collect();
                for (set, sep_eta) in &sep.diagnostics.component_log_eta {
                    if set.len() < 2 {
                        continue;
                    }
                    let (Some(c), Some(g)) = (pred.density.get(set), gen_eta.get(set)) else { continue };
                    let Some(sd) = eta_relative_sd(c, &lik) else {
                        overlapping += 1;
                        continue;
                    };
                    let z = ((g - sep_eta).exp() - 1.0).abs() / sd.max(1e-300);
                    compared += 1;
                    within += usize::from(z <= 3.0);
                    worst_z = worst_z.max(z);
                }
                state = sep;
            }
        }
        let frac = within as f64 / compared.max(1) as f64;
        Ok((
            compared > 0 && frac >= CHEBYSHEV_3SD,
            format!(
                "{trials} trials, {compared} multi-target components with disjoint clouds ({overlapping} overlapping \
                 skipped): {:.2}% of normalizer ratios within 3 sd of 1 (need {:.2}%), max z {worst_z:.2}",
                100.0 * frac,
                100.0 * CHEBYSHEV_3SD
            ),
        ))
    })
}

/// Criterion 10: identical CSV bytes across repeated runs and thread counts.
pub fn determinism(cfg: &ScenarioConfig, dirs: [&Path; 3], threads: usize) -> CheckResult {
    timed(10, "determinism", None, || {
        let mut opts = RunOptions::from_config(cfg);
        let runs = [(dirs[0], 1), (dirs[1], threads), (dirs[2], threads)];
        for (dir, n) in runs {
            opts.threads = Some(n);
            run_monte_carlo(cfg, &opts, dir).map_err(err)?;
        }
        let mut differing = Vec::new();
        for name in ["ospa.csv", "cardinality.csv", "tracks.csv", "failures.csv"] {
            let a = std::fs::read(dirs[0].join(name)).map_err(err)?;
            for d in &dirs[1..] {
                if std::fs::read(d.join(name)).map_err(err)? != a {
                    differing.push(name);
                }
            }
        }
        Ok((
            differing.is_empty(),
            if differing.is_empty() {
                format!("{} trials: CSVs byte-identical for 1 vs {threads} threads and on rerun", opts.trials)
            } else {
                format!("differing files: {differing:?}")
            },
        ))
    })
}

/// The desk scenario used by criterion 8.
pub fn desk_config() -> ScenarioConfig {
    presets::desk()
}
