//! Discrete-time replicator dynamics on a symmetric game.
//!
//! A population of `φ(s)` agents per strategy is randomly paired; each
//! strategy's fitness is its expected payoff against the population mixture
//! and its count is multiplied by `1 + fitness` every step. Verdicts only look
//! at shares, but counts are tracked too (with a separate log-scale so they
//! cannot overflow).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{MixedStrategy, SymmetricGame, PROB_TOLERANCE};
use crate::seed::{derive_seed, rng_from_seed};

/// Shares below this are treated as extinct and clamped to zero.
pub const EXTINCTION_THRESHOLD: f64 = 1e-12;

const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BELOW: f64 = 1e-100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    counts: Vec<f64>,
    /// Natural log of the factor the stored counts have been divided by.
    log_scale: f64,
}

impl Population {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("population over zero strategies"));
        }
        if let Some(c) = counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::domain(format!("invalid count {c}")));
        }
        if counts.iter().all(|&c| c == 0.0) {
            return Err(Error::domain(
                "population needs at least one positive count",
            ));
        }
        Ok(Population {
            counts,
            log_scale: 0.0,
        })
    }

    pub fn from_shares(shares: &[f64]) -> Result<Self> {
        let s = MixedStrategy::new(shares.to_vec())?;
        Population::new(s.probs().to_vec())
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// `ln Σ φ(s)` of the actual (unscaled) population.
    pub fn log_size(&self) -> f64 {
        self.counts.iter().sum::<f64>().ln() + self.log_scale
    }

    /// `ln φ(s)` of the actual population; `-inf` for an empty strategy.
    pub fn log_count(&self, strategy: usize) -> f64 {
        self.counts[strategy].ln() + self.log_scale
    }

    pub fn shares(&self) -> Vec<f64> {
        let total: f64 = self.counts.iter().sum();
        self.counts.iter().map(|c| c / total).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn renormalize(&mut self) {
        let total: f64 = self.counts.iter().sum();
        if total > RESCALE_ABOVE || total < RESCALE_BELOW {
            self.counts.iter_mut().for_each(|c| *c /= total);
            self.log_scale += total.ln();
        }
    }
}

/// Expected payoff of each pure strategy against the population mixture.
pub fn strategy_fitness(sym: &SymmetricGame, pop: &Population) -> Vec<f64> {
    sym.payoffs_against(&pop.shares())
}

/// `φ'(s) = φ(s) · (1 + u(s))`.
pub fn replicator_step(sym: &SymmetricGame, pop: &Population) -> Result<Population> {
    if pop.len() != sym.num_actions() {
        return Err(Error::domain(format!(
            "population has {} strategies, game has {}",
            pop.len(),
            sym.num_actions()
        )));
    }
    let fitness = strategy_fitness(sym, pop);
    // A common factor leaves shares unchanged; keep them bit-exact.
    let mut alive = pop.counts.iter().zip(&fitness).filter(|(&c, _)| c > 0.0);
    if let Some((_, &u0)) = alive.next() {
        if u0 + 1.0 > 0.0 && alive.all(|(_, &u)| u == u0) {
            return Ok(Population {
                counts: pop.counts.clone(),
                log_scale: pop.log_scale + (1.0 + u0).ln(),
            });
        }
    }
    let mut counts = Vec::with_capacity(pop.len());
    for (s, (&c, &u)) in pop.counts.iter().zip(&fitness).enumerate() {
        let factor = 1.0 + u;
        if c > 0.0 && factor < 0.0 {
            return Err(Error::Dynamics(format!(
                "strategy {} has growth factor {factor} < 0; rescale payoffs \
                 (SymmetricGame::affine) so that 1 + u ≥ 0",
                sym.actions()[s]
            )));
        }
        counts.push(c * factor);
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Err(Error::Dynamics(
            "every strategy has growth factor 0; the population vanished".into(),
        ));
    }
    let mut next = Population {
        counts,
        log_scale: pop.log_scale,
    };
    next.renormalize();
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicatorConfig {
    pub budget: usize,
    /// Steady when the largest share change stays below this...
    pub eps: f64,
    /// ...for this many consecutive steps.
    pub confirm: usize,
}

impl Default for ReplicatorConfig {
    fn default() -> Self {
        ReplicatorConfig {
            budget: 10_000,
            eps: 1e-8,
            confirm: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ReplicatorStatus {
    Steady { shares: Vec<f64>, step: usize },
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Extinction {
    pub strategy: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicatorTrace {
    /// `shares[t]` for `t = 0..=steps`; row 0 is the initial population.
    pub shares: Vec<Vec<f64>>,
    /// Fitness of each strategy at the shares of the same row.
    pub fitness: Vec<Vec<f64>>,
    pub extinctions: Vec<Extinction>,
    pub status: ReplicatorStatus,
    pub final_population: Population,
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn clamp_extinct(pop: &mut Population) -> Vec<usize> {
    let total: f64 = pop.counts.iter().sum();
    let mut gone = Vec::new();
    for (s, c) in pop.counts.iter_mut().enumerate() {
        if *c > 0.0 && *c / total < EXTINCTION_THRESHOLD {
            *c = 0.0;
            gone.push(s);
        }
    }
    gone
}

pub fn run_replicator(
    sym: &SymmetricGame,
    initial: Population,
    config: &ReplicatorConfig,
) -> Result<ReplicatorTrace> {
    if config.budget < 1 {
        return Err(Error::Precondition("budget must be at least 1".into()));
    }
    if config.eps.is_nan() || config.eps <= 0.0 {
        return Err(Error::Precondition(
            "steady-state tolerance must be positive".into(),
        ));
    }
    let mut pop = initial;
    let mut shares = vec![pop.shares()];
    let mut fitness = vec![strategy_fitness(sym, &pop)];
    let mut extinctions = Vec::new();
    let mut calm = 0;
    let mut status = ReplicatorStatus::BudgetExhausted;
    for step in 1..=config.budget {
        pop = replicator_step(sym, &pop)?;
        extinctions.extend(
            clamp_extinct(&mut pop)
                .into_iter()
                .map(|strategy| Extinction { strategy, step }),
        );
        let now = pop.shares();
        let change = max_change(&now, shares.last().expect("non-empty"));
        fitness.push(strategy_fitness(sym, &pop));
        shares.push(now);
        calm = if change < config.eps { calm + 1 } else { 0 };
        if calm >= config.confirm {
            status = ReplicatorStatus::Steady {
                shares: shares.last().cloned().expect("non-empty"),
                step,
            };
            break;
        }
    }
    Ok(ReplicatorTrace {
        shares,
        fitness,
        extinctions,
        status,
        final_population: pop,
    })
}

impl ReplicatorTrace {
    /// Columns: `step`, `share_<s>` per strategy, `fitness_<s>` per strategy.
    pub fn write_csv<W: std::io::Write>(&self, sym: &SymmetricGame, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        header.extend(sym.actions().iter().map(|a| format!("share_{a}")));
        header.extend(sym.actions().iter().map(|a| format!("fitness_{a}")));
        w.write_record(&header)?;
        for (t, (s, f)) in self.shares.iter().zip(&self.fitness).enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(s.iter().map(f64::to_string));
            row.extend(f.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Isolated rest points of the share dynamics: for every support, the
/// interior point (if any) where all supported strategies earn equal fitness.
/// Supports with a singular indifference system are skipped.
pub fn steady_states(sym: &SymmetricGame) -> Vec<Vec<f64>> {
    let n = sym.num_actions();
    let mut supports: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    supports.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut out = Vec::new();
    for support in supports {
        let k = support.len();
        let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut b = DVector::<f64>::zeros(k + 1);
        for (r, &s) in support.iter().enumerate() {
            for (c, &t) in support.iter().enumerate() {
                a[(r, c)] = sym.u(s, t);
            }
            a[(r, k)] = -1.0;
            a[(k, r)] = 1.0;
        }
        b[k] = 1.0;
        let lu = a.lu();
        if !lu.is_invertible() {
            continue;
        }
        let Some(sol) = lu.solve(&b) else { continue };
        if sol
            .iter()
            .take(k)
            .any(|&x| x.is_nan() || x <= EXTINCTION_THRESHOLD)
        {
            continue;
        }
        let mut x = vec![0.0; n];
        for (&s, &v) in support.iter().zip(sol.iter()) {
            x[s] = v;
        }
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        out.push(x);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    /// Size (max-norm) of each perturbation.
    pub eps_p: f64,
    pub trials: usize,
    pub seed: u64,
    /// Steps simulated per trial.
    pub budget: usize,
    /// One step from the candidate must move shares by less than this.
    pub steady_eps: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            eps_p: 0.01,
            trials: 8,
            seed: 0,
            budget: 20_000,
            steady_eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTrial {
    pub trial: usize,
    pub max_distance: f64,
    pub final_distance: f64,
    pub returned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub stable: bool,
    pub trials: Vec<ProbeTrial>,
}

impl ProbeReport {
    /// Columns: `trial`, `max_distance`, `returned`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "max_distance", "returned"])?;
        for t in &self.trials {
            w.write_record([
                t.trial.to_string(),
                t.max_distance.to_string(),
                t.returned.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform point on the simplex.
fn simplex_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Perturbs `candidate` along a random simplex direction so that the
/// max-norm displacement is exactly `eps_p`. Every strategy gets a positive
/// share, so pure candidates face every possible invader.
fn perturb<R: Rng>(candidate: &[f64], eps_p: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let target = simplex_point(candidate.len(), rng);
        let dir: Vec<f64> = target.iter().zip(candidate).map(|(t, c)| t - c).collect();
        let norm = dir.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        if norm >= eps_p {
            let k = eps_p / norm;
            return candidate.iter().zip(&dir).map(|(c, d)| c + k * d).collect();
        }
    }
}

/// Checks whether small random displacements from `candidate` die out.
///
/// Each trial perturbs the shares by `eps_p` (max-norm), runs the dynamics
/// for `budget` steps and counts as returned if it ends within `eps_p / 2`.
pub fn stability_probe(
    sym: &SymmetricGame,
    candidate: &[f64],
    config: &ProbeConfig,
) -> Result<ProbeReport> {
    if candidate.len() != sym.num_actions() {
        return Err(Error::domain("candidate length does not match the game"));
    }
    let start = Population::from_shares(candidate)?;
    let candidate = start.shares();
    if !(config.eps_p > 0.0 && config.eps_p < 1.0) {
        return Err(Error::Precondition(
            "perturbation size must lie in (0, 1)".into(),
        ));
    }
    if config.trials < 1 || config.budget < 1 {
        return Err(Error::Precondition(
            "trials and budget must be at least 1".into(),
        ));
    }
    let moved = max_change(&replicator_step(sym, &start)?.shares(), &candidate);
    if moved >= config.steady_eps {
        return Err(Error::Precondition(format!(
            "candidate is not a steady state (one step moves shares by {moved:e})"
        )));
    }

    let close_enough = config.eps_p * 1e-4;
    let mut trials = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut rng = rng_from_seed(derive_seed(config.seed, trial as u64));
        let mut pop = Population::new(perturb(&candidate, config.eps_p, &mut rng))?;
        let mut max_distance = max_change(&pop.shares(), &candidate);
        let mut distance = max_distance;
        for _ in 0..config.budget {
            pop = replicator_step(sym, &pop)?;
            distance = max_change(&pop.shares(), &candidate);
            max_distance = max_distance.max(distance);
            if distance < close_enough {
                break;
            }
        }
        trials.push(ProbeTrial {
            trial,
            max_distance,
            final_distance: distance,
            returned: distance <= config.eps_p / 2.0,
        });
    }
    Ok(ProbeReport {
        stable: trials.iter().all(|t| t.returned),
        trials,
    })
}

/// Shares that sum to one within the library-wide tolerance.
pub fn shares_are_normalized(shares: &[f64]) -> bool {
    (shares.iter().sum::<f64>() - 1.0).abs() <= PROB_TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn constant(c: f64) -> SymmetricGame {
        SymmetricGame::from_matrix(vec![vec![c; 2]; 2]).unwrap()
    }

    #[test]
    fn fitness_examples() {
        let g = fig3_symmetric();
        let f = strategy_fitness(&g, &Population::from_shares(&[0.2, 0.8]).unwrap());
        assert!((f[0] - 0.8).abs() < 1e-15 && (f[1] - 0.2).abs() < 1e-15);

        let rps = rock_paper_scissors();
        let f = strategy_fitness(&rps, &Population::new(vec![0.0, 5.0, 0.0]).unwrap());
        assert_eq!(f, vec![rps.u(0, 1), rps.u(1, 1), rps.u(2, 1)]);

        let f = strategy_fitness(&constant(3.0), &Population::new(vec![1.0, 2.0]).unwrap());
        assert_eq!(f, vec![3.0, 3.0]);
    }

    #[test]
    fn one_step_by_hand() {
        let g = fig3_symmetric();
        let next = replicator_step(&g, &Population::new(vec![20.0, 80.0]).unwrap()).unwrap();
        assert!((next.counts()[0] - 36.0).abs() < 1e-12);
        assert!((next.counts()[1] - 96.0).abs() < 1e-12);
        let s = next.shares();
        assert!((s[0] - 3.0 / 11.0).abs() < 1e-15 && (s[1] - 8.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn equal_fitness_keeps_shares() {
        let g = fig3_symmetric();
        let next = replicator_step(&g, &Population::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(next.shares(), vec![0.5, 0.5]);
        let next =
            replicator_step(&constant(0.0), &Population::new(vec![3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(next.counts(), &[3.0, 4.0]);
    }

    #[test]
    fn negative_growth_is_rejected() {
        let err = replicator_step(&constant(-2.0), &Population::new(vec![1.0, 1.0]).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::Dynamics(_)));
        // Zero-count strategies are exempt.
        let g = SymmetricGame::from_matrix(vec![vec![0.5, 0.5], vec![-3.0, -3.0]]).unwrap();
        assert!(replicator_step(&g, &Population::new(vec![1.0, 0.0]).unwrap()).is_ok());
    }

    #[test]
    fn anti_coordination_converges_to_half() {
        let g = fig3_symmetric();
        let trace = run_replicator(
            &g,
            Population::new(vec![20.0, 80.0]).unwrap(),
            &ReplicatorConfig::default(),
        )
        .unwrap();
        match &trace.status {
            ReplicatorStatus::Steady { shares, .. } => {
                assert!((shares[0] - 0.5).abs() < 1e-6, "{shares:?}");
            }
            other => panic!("{other:?}"),
        }
        assert!(trace.shares.iter().all(|s| shares_are_normalized(s)));
    }

    #[test]
    fn pure_equilibrium_is_steady_at_once() {
        let g = SymmetricGame::from_matrix(vec![vec![0.3, 0.1], vec![0.0, 0.2]]).unwrap();
        let trace = run_replicator(
            &g,
            Population::new(vec![5.0, 0.0]).unwrap(),
            &ReplicatorConfig::default(),
        )
        .unwrap();
        assert_eq!(
            trace.status,
            ReplicatorStatus::Steady {
                shares: vec![1.0, 0.0],
                step: 10
            }
        );
    }

    #[test]
    fn constant_game_is_identity() {
        let trace = run_replicator(
            &constant(0.25),
            Population::new(vec![1.0, 3.0]).unwrap(),
            &ReplicatorConfig::default(),
        )
        .unwrap();
        assert!(trace.shares.iter().all(|s| *s == vec![0.25, 0.75]));
        assert!(matches!(trace.status, ReplicatorStatus::Steady { .. }));
    }

    #[test]
    fn extinction_is_recorded_and_clamped() {
        // B loses to A everywhere; its share decays geometrically.
        let g = SymmetricGame::from_matrix(vec![vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let config = ReplicatorConfig {
            budget: 200,
            eps: 1e-300,
            confirm: 10,
        };
        let trace = run_replicator(&g, Population::new(vec![1.0, 1.0]).unwrap(), &config).unwrap();
        assert_eq!(trace.extinctions.len(), 1);
        let ext = trace.extinctions[0];
        assert_eq!(ext.strategy, 1);
        assert!(trace.shares[ext.step..].iter().all(|s| s[1] == 0.0));
    }

    #[test]
    fn counts_never_overflow() {
        let g = constant(0.9);
        let mut pop = Population::new(vec![1.0, 1.0]).unwrap();
        for _ in 0..5000 {
            pop = replicator_step(&g, &pop).unwrap();
        }
        assert!(pop.counts().iter().all(|c| c.is_finite()));
        let expected = 2f64.ln() + 5000.0 * 1.9f64.ln();
        assert!((pop.log_size() - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn steady_states_of_anti_coordination() {
        let s = steady_states(&fig3_symmetric());
        assert_eq!(s, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]);
    }

    #[test]
    fn probe_examples() {
        let g = fig3_symmetric();
        let config = ProbeConfig::default();
        assert!(stability_probe(&g, &[0.5, 0.5], &config).unwrap().stable);
        assert!(!stability_probe(&g, &[1.0, 0.0], &config).unwrap().stable);
        let c = constant(0.5);
        assert!(!stability_probe(&c, &[0.3, 0.7], &config).unwrap().stable);
    }

    #[test]
    fn probe_requires_steady_candidate() {
        let g = fig3_symmetric();
        assert!(matches!(
            stability_probe(&g, &[0.2, 0.8], &ProbeConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn probe_csv() {
        let g = fig3_symmetric();
        let report = stability_probe(
            &g,
            &[0.5, 0.5],
            &ProbeConfig {
                trials: 2,
                ..ProbeConfig::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,max_distance,returned\n0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
