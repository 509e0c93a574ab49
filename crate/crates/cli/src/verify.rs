//! `verify`: named property checks over the coder, the dual coder, the loss
//! head and the benchmark regressor.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use phasecoder::bench::{generate_dataset, Head, Regressor};
use phasecoder::head::{squash_grad_scalar, squash_scalar};
use phasecoder::{
    angle_loss, angle_to_phase, angular_distance, encode, encode_dual, phase_to_angle, squash_grad,
    unwrap_phases, DualPhaseCode, LossWeights, Phase, PhaseCode, SymmetryConfig, UnwrapResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRID_POINTS: usize = 10_000;
pub const EXACT_TOL: f64 = 1e-9;
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;
pub const FD_PROBES: usize = 1000;

pub type DecodeFn = fn(&PhaseCode) -> phasecoder::Result<Phase>;

/// Replaceable pieces of the pipeline under test.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub decode: DecodeFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            decode: phasecoder::decode,
        }
    }
}

impl Hooks {
    fn decode_dual(&self, code: &DualPhaseCode) -> phasecoder::Result<UnwrapResult> {
        unwrap_phases((self.decode)(code.x1())?, (self.decode)(code.x2())?)
    }

    fn decode_dual_to_angle(&self, code: &DualPhaseCode) -> phasecoder::Result<f64> {
        Ok(phase_to_angle(
            self.decode_dual(code)?.phi,
            &SymmetryConfig::rectangle(),
        ))
    }
}

/// `Ok` carries a short measurement, `Err` the reason for failure.
pub type CheckResult = Result<String, String>;

pub struct Check {
    pub name: String,
    run: Box<dyn Fn(&Hooks) -> CheckResult>,
}

impl Check {
    fn new(name: impl Into<String>, run: impl Fn(&Hooks) -> CheckResult + 'static) -> Self {
        Self {
            name: name.into(),
            run: Box::new(run),
        }
    }

    pub fn run(&self, hooks: &Hooks) -> Outcome {
        let start = Instant::now();
        let result = (self.run)(hooks);
        Outcome {
            name: self.name.clone(),
            result,
            elapsed: start.elapsed(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub result: CheckResult,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.result.is_ok()
    }

    pub fn line(&self) -> String {
        let (tag, detail) = match &self.result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        format!(
            "{tag}  {:<36} {detail} ({} ms)",
            self.name,
            self.elapsed.as_millis()
        )
    }
}

fn phase_grid() -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(|i| -PI + 2.0 * PI * i as f64 / GRID_POINTS as f64)
}

/// Uniform grid on `[-pi/2, pi/2)` plus points approaching both ends.
fn angle_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| -FRAC_PI_2 + PI * i as f64 / GRID_POINTS as f64)
        .collect();
    for k in 1..=12 {
        let eps = 10f64.powi(-k);
        grid.push(-FRAC_PI_2 + eps);
        grid.push(FRAC_PI_2 - eps);
    }
    grid
}

fn err(e: phasecoder::Error) -> String {
    e.to_string()
}

fn within(name: &str, worst: f64, tol: f64) -> CheckResult {
    if worst <= tol {
        Ok(format!("{name}={worst:.2e}"))
    } else {
        Err(format!("{name}={worst:.3e} exceeds {tol:.0e}"))
    }
}

fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn round_trip(hooks: &Hooks, n: usize) -> CheckResult {
    let mut worst: f64 = 0.0;
    for raw in phase_grid() {
        let phi = Phase::new(raw).map_err(err)?;
        let back = (hooks.decode)(&encode(phi, n).map_err(err)?).map_err(err)?;
        worst = worst.max(phasecoder::coder::phase_distance(back, phi));
    }
    within("max_err", worst, EXACT_TOL)
}

fn invariance(
    hooks: &Hooks,
    n: usize,
    seed: u64,
    map: impl Fn(&mut ChaCha8Rng) -> (f64, f64),
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..FD_PROBES {
        let phi = Phase::new(rng.random_range(-PI..PI)).map_err(err)?;
        let (a, c) = map(&mut rng);
        let code = encode(phi, n).map_err(err)?;
        let moved =
            PhaseCode::new(code.values().iter().map(|x| a * x + c).collect()).map_err(err)?;
        let d = phasecoder::coder::phase_distance(
            (hooks.decode)(&code).map_err(err)?,
            (hooks.decode)(&moved).map_err(err)?,
        );
        worst = worst.max(d);
    }
    within("max_shift", worst, EXACT_TOL)
}

fn dual_round_trip(hooks: &Hooks, n: usize) -> CheckResult {
    let rect = SymmetryConfig::rectangle();
    let mut worst: f64 = 0.0;
    for theta in angle_grid() {
        let back = hooks
            .decode_dual_to_angle(&encode_dual(theta, n).map_err(err)?)
            .map_err(err)?;
        worst = worst.max(angular_distance(back, theta, &rect));
    }
    within("max_err", worst, EXACT_TOL)
}

fn boundary_continuity(n: usize) -> CheckResult {
    let rect = SymmetryConfig::rectangle();
    let lower = encode(angle_to_phase(-FRAC_PI_2, &rect).map_err(err)?, n).map_err(err)?;
    let dual_lower = encode_dual(-FRAC_PI_2, n).map_err(err)?;
    let mut worst_ratio: f64 = 0.0;
    for k in 3..=9 {
        let eps = 10f64.powi(-k);
        let theta = FRAC_PI_2 - eps;
        let upper = encode(angle_to_phase(theta, &rect).map_err(err)?, n).map_err(err)?;
        let dual_upper = encode_dual(theta, n).map_err(err)?;
        for (gap, freq) in [
            (sup_norm(upper.values(), lower.values()), 2.0),
            (
                sup_norm(dual_upper.x1().values(), dual_lower.x1().values()),
                2.0,
            ),
            (
                sup_norm(dual_upper.x2().values(), dual_lower.x2().values()),
                4.0,
            ),
        ] {
            let bound = 2.0 * freq * eps;
            if gap > bound {
                return Err(format!("k={k}: gap {gap:.3e} exceeds {bound:.0e}"));
            }
            worst_ratio = worst_ratio.max(gap / bound);
        }
    }
    Ok(format!("max_gap/bound={worst_ratio:.3}"))
}

fn square_invariance(n: usize) -> CheckResult {
    let rect = SymmetryConfig::rectangle();
    let mut worst: f64 = 0.0;
    for theta in angle_grid().into_iter().step_by(7) {
        let turned = rect.wrap_angle(theta + FRAC_PI_2).map_err(err)?;
        let a = encode_dual(theta, n).map_err(err)?;
        let b = encode_dual(turned, n).map_err(err)?;
        worst = worst.max(sup_norm(a.x2().values(), b.x2().values()));
    }
    within("max_x2_diff", worst, EXACT_TOL)
}

fn branch_robustness(hooks: &Hooks, n: usize) -> CheckResult {
    let rect = SymmetryConfig::rectangle();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut tested = 0usize;
    for theta in angle_grid().into_iter().step_by(5) {
        let clean = encode_dual(theta, n).map_err(err)?;
        if hooks.decode_dual(&clean).map_err(err)?.delta.abs() <= 0.5 {
            continue;
        }
        let x1 = clean
            .x1()
            .values()
            .iter()
            .map(|x| x + rng.random_range(-0.2..=0.2))
            .collect();
        let noisy = DualPhaseCode::new(PhaseCode::new(x1).map_err(err)?, clean.x2().clone())
            .map_err(err)?;
        let back = hooks.decode_dual_to_angle(&noisy).map_err(err)?;
        worst = worst.max(angular_distance(back, theta, &rect));
        tested += 1;
    }
    within("max_err", worst, EXACT_TOL).map(|m| format!("{m} over {tested} codes"))
}

/// Relative error with a floor so that round-off on tiny gradients is not
/// counted as a mismatch.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

fn squash_gradient() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..FD_PROBES)
        .map(|_| rng.random_range(-10.0..10.0))
        .collect();
    let worst = xs
        .iter()
        .zip(squash_grad(&xs))
        .map(|(&x, g)| rel_err(g, central(squash_scalar, x)))
        .fold(0.0, f64::max);
    within("max_rel_err", worst, FD_TOL)
}

fn angle_loss_gradient() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    while probes < FD_PROBES {
        let n = rng.random_range(3..=10);
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gt: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let i = rng.random_range(0..n);
        if (pred[i] - gt[i]).abs() < 10.0 * FD_STEP {
            continue;
        }
        let analytic = angle_loss(&pred, &gt).map_err(err)?.grad[i];
        let fd = central(
            |v| {
                let mut p = pred.clone();
                p[i] = v;
                angle_loss(&p, &gt).map(|l| l.loss).unwrap_or(f64::NAN)
            },
            pred[i],
        );
        worst = worst.max(rel_err(analytic, fd));
        probes += 1;
    }
    within("max_rel_err", worst, FD_TOL)
}

fn loss_weights() -> CheckResult {
    let w = LossWeights::default();
    if w.w3 != 0.2 * w.w1 {
        return Err(format!(
            "default angle weight {} is not 0.2 * {}",
            w.w3, w.w1
        ));
    }
    let w = LossWeights::with_default_ratio(2.5, 1.0).map_err(err)?;
    if (w.w3 - 0.5).abs() > 1e-15 {
        return Err(format!("w3 = {} for w1 = 2.5", w.w3));
    }
    Ok("w3=0.2*w1".into())
}

fn batch_loss(model: &Regressor, xs: &[Vec<f64>], ts: &[Vec<f64>]) -> f64 {
    xs.iter()
        .zip(ts)
        .map(|(x, t)| {
            model
                .predict(x)
                .and_then(|p| angle_loss(&p, t))
                .map_or(f64::NAN, |l| l.loss)
        })
        .sum::<f64>()
        / xs.len() as f64
}

/// Backprop against finite differences on a small regressor, cycling over
/// parameters until `FD_PROBES` coordinates have been compared.
fn backprop_gradient(head: Head) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut model = Regressor::new(head, 8, 6, 3, &mut rng).map_err(err)?;
    // jitter moves pre-activations off the ReLU kink
    let jittered: Vec<f64> = model
        .parameters()
        .iter()
        .map(|p| p + rng.random_range(-0.1..0.1))
        .collect();
    model.set_parameters(&jittered).map_err(err)?;
    let xs: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    // targets beyond the reachable outputs keep the L1 kink away
    let ts: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            (0..model.output_dim())
                .map(|_| if rng.random::<bool>() { 5.0 } else { -5.0 })
                .collect()
        })
        .collect();

    let mut grads = model.zero_gradients();
    for (x, t) in xs.iter().zip(&ts) {
        let fwd = model.forward(x).map_err(err)?;
        let l = angle_loss(&fwd.output, t).map_err(err)?;
        model.backward(&fwd, &l.grad, &mut grads).map_err(err)?;
    }
    grads.scale(1.0 / xs.len() as f64);
    let analytic = grads.flatten();

    let params = model.parameters();
    let mut worst: f64 = 0.0;
    for probe in 0..FD_PROBES {
        let i = probe % params.len();
        let mut p = params.clone();
        p[i] = params[i] + FD_STEP;
        model.set_parameters(&p).map_err(err)?;
        let up = batch_loss(&model, &xs, &ts);
        p[i] = params[i] - FD_STEP;
        model.set_parameters(&p).map_err(err)?;
        let down = batch_loss(&model, &xs, &ts);
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * FD_STEP)));
    }
    within("max_rel_err", worst, FD_TOL)
}

fn target_decodes(hooks: &Hooks, head: Head, n: usize) -> CheckResult {
    let rect = SymmetryConfig::rectangle();
    let data = generate_dataset(500, 0.2, 0.0, 5).map_err(err)?;
    let mut worst: f64 = 0.0;
    for s in &data {
        let target = head.target(s.target_theta, n).map_err(err)?;
        let back = match head {
            Head::Naive => target[0],
            Head::Psc => phase_to_angle(
                (hooks.decode)(&PhaseCode::new(target).map_err(err)?).map_err(err)?,
                &rect,
            ),
            Head::Pscd => hooks
                .decode_dual_to_angle(&DualPhaseCode::from_concatenated(&target).map_err(err)?)
                .map_err(err)?,
        };
        worst = worst.max(angular_distance(back, s.target_theta, &rect));
    }
    within("max_err", worst, EXACT_TOL)
}

fn squash_range() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..FD_PROBES {
        let x: f64 = rng.random_range(-30.0..30.0);
        let y = squash_scalar(x);
        if !(y > -1.0 && y < 1.0) || squash_scalar(-x) != -y || squash_grad_scalar(x) <= 0.0 {
            return Err(format!("x = {x}: squash = {y}"));
        }
    }
    Ok("odd, increasing, in (-1, 1)".into())
}

pub fn coder_checks(n: usize) -> Vec<Check> {
    vec![
        Check::new(format!("coder.round_trip[n={n}]"), move |h| {
            round_trip(h, n)
        }),
        Check::new(format!("coder.dc_offset[n={n}]"), move |h| {
            invariance(h, n, 20 + n as u64, |rng| {
                (1.0, rng.random_range(-10.0..=10.0))
            })
        }),
        Check::new(format!("coder.positive_scale[n={n}]"), move |h| {
            invariance(h, n, 40 + n as u64, |rng| {
                (rng.random_range(0.1..=10.0), 0.0)
            })
        }),
    ]
}

pub fn dual_checks(n: usize) -> Vec<Check> {
    vec![
        Check::new(format!("dual.round_trip[n={n}]"), move |h| {
            dual_round_trip(h, n)
        }),
        Check::new(format!("dual.boundary_continuity[n={n}]"), move |_| {
            boundary_continuity(n)
        }),
        Check::new(format!("dual.square_invariance[n={n}]"), move |_| {
            square_invariance(n)
        }),
        Check::new(format!("dual.branch_robustness[n={n}]"), move |h| {
            branch_robustness(h, n)
        }),
    ]
}

pub fn head_checks() -> Vec<Check> {
    vec![
        Check::new("head.squash_range", |_| squash_range()),
        Check::new("head.squash_gradient", |_| squash_gradient()),
        Check::new("head.angle_loss_gradient", |_| angle_loss_gradient()),
        Check::new("head.loss_weights", |_| loss_weights()),
    ]
}

pub fn backprop_checks() -> Vec<Check> {
    Head::ALL
        .into_iter()
        .map(|head| {
            Check::new(format!("bench.backprop_gradient[{head}]"), move |_| {
                backprop_gradient(head)
            })
        })
        .collect()
}

pub fn target_checks(n: usize) -> Vec<Check> {
    Head::ALL
        .into_iter()
        .map(|head| {
            Check::new(format!("bench.target_decodes[{head},n={n}]"), move |h| {
                target_decodes(h, head, n)
            })
        })
        .collect()
}

/// Coder checks run at every `n_steps` value plus 8; dual and benchmark
/// checks at every `n_steps` value.
pub fn full_suite(n_steps: &[usize]) -> Vec<Check> {
    let mut coder_ns = n_steps.to_vec();
    if !coder_ns.contains(&8) {
        coder_ns.push(8);
    }
    let mut checks: Vec<Check> = coder_ns.into_iter().flat_map(coder_checks).collect();
    checks.extend(n_steps.iter().flat_map(|&n| dual_checks(n)));
    checks.extend(head_checks());
    checks.extend(backprop_checks());
    checks.extend(n_steps.iter().flat_map(|&n| target_checks(n)));
    checks
}

pub fn run_suite(checks: &[Check], hooks: &Hooks) -> Vec<Outcome> {
    checks.iter().map(|c| c.run(hooks)).collect()
}
