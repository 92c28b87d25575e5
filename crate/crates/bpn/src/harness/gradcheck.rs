//! Finite-difference verification of every analytic gradient.
//!
//! For each random seed this builds a small random f64 network (1-3 hidden
//! layers, at most 8 units each), random bias factors, optionally binary
//! keys and an active quadratic penalty, and compares every entry of
//! dW/db/dM/dWt against central finite differences of the scalar objective.
//! Configurations whose pre-activations sit too close to a relu kink are
//! re-drawn, since the two-sided difference straddles the non-smooth point
//! there.

use crate::methods::ewc::EwcState;
use crate::net::{
    backward, forward, mlp_layers, BiasFactors, BiasSource, NetworkState, TaskKeys,
};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::{sample_sign_vector, RngStream, StreamDomain};
use crate::numerics::softmax_xent;

const FD_STEP: f64 = 1e-6;
const KINK_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamClass {
    Weights,
    Biases,
    FactorM,
    FactorWt,
}

impl std::fmt::Display for ParamClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ParamClass::Weights => "dW",
            ParamClass::Biases => "db",
            ParamClass::FactorM => "dM",
            ParamClass::FactorWt => "dWt",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub seeds_run: usize,
    pub params_checked: usize,
    pub tolerance: f64,
    /// Worst relative error seen per parameter class.
    pub worst: Vec<(ParamClass, f64)>,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= self.tolerance
    }
}

struct Scenario {
    net: NetworkState<f64>,
    factors: BiasFactors<f64>,
    keys: Option<TaskKeys<f64>>,
    ewc: Option<EwcState<f64>>,
    x: Matrix<f64>,
    labels: Vec<usize>,
}

impl Scenario {
    fn objective(&self, net: &NetworkState<f64>, factors: &BiasFactors<f64>) -> f64 {
        let (logits, _) = forward(net, BiasSource::Factors(factors), self.keys.as_ref(), &self.x)
            .expect("scenario shapes are consistent");
        let (loss, _) = softmax_xent(&logits, &self.labels).expect("labels in range");
        let mut total = loss;
        if let Some(ewc) = &self.ewc {
            total += ewc.penalty(net).expect("anchor shapes match").0;
        }
        total
    }
}

fn build_scenario(seed: u64, use_keys: bool, use_ewc: bool) -> Scenario {
    // deterministic re-draws until no pre-activation hugs a relu kink
    for attempt in 0.. {
        let mut rng = RngStream::for_domain(seed, StreamDomain::WeightInit, attempt, 0);
        let n_hidden = 1 + rng.below(3);
        let dims: Vec<usize> = (0..n_hidden).map(|_| 2 + rng.below(7)).collect();
        let in_dim = 2 + rng.below(7);
        let classes = 2 + rng.below(4);
        let net =
            NetworkState::init_uniform(mlp_layers(in_dim, &dims, classes), &mut rng).unwrap();

        let h = 1 + rng.below(6);
        let mut factors = BiasFactors::init(&net, h, 1, &mut rng).unwrap();
        for l in 0..factors.n_layers() {
            for j in 0..h {
                factors.m_mut(l).set(0, j, rng.uniform_in(-0.5, 0.5));
            }
        }

        let keys = use_keys.then(|| {
            TaskKeys::new(
                1,
                net.layers()
                    .iter()
                    .map(|l| sample_sign_vector::<f64>(l.in_dim, &mut rng).unwrap())
                    .collect(),
            )
        });

        let ewc = use_ewc.then(|| {
            let mut anchored = net.clone();
            for i in 0..anchored.n_layers() {
                let jitter = Matrix::from_fn(
                    anchored.weight(i).rows(),
                    anchored.weight(i).cols(),
                    |_, _| rng.uniform_in(-0.1, 0.1),
                );
                anchored.weight_mut(i).add_assign(&jitter).unwrap();
            }
            let mut state = EwcState::new(&anchored, 10.0);
            // synthetic strictly-positive fisher so the penalty bites
            let fisher = crate::methods::ewc::FisherDiag {
                w: net
                    .layers()
                    .iter()
                    .map(|l| Matrix::from_fn(l.in_dim, l.out_dim, |_, _| rng.uniform_in(0.1, 1.0)))
                    .collect(),
                b: net
                    .layers()
                    .iter()
                    .map(|l| (0..l.out_dim).map(|_| rng.uniform_in(0.1, 1.0)).collect())
                    .collect(),
            };
            state.absorb_task(&fisher, &anchored).unwrap();
            state
        });

        let batch = 3 + rng.below(4);
        let x = Matrix::from_fn(batch, in_dim, |_, _| rng.uniform_in(-1.0, 1.0));
        let labels: Vec<usize> = (0..batch).map(|_| rng.below(classes)).collect();

        let (_, trace) = forward(&net, BiasSource::Factors(&factors), keys.as_ref(), &x).unwrap();
        let min_abs_z = trace
            .pre
            .iter()
            .take(net.n_layers() - 1) // relu layers only
            .flat_map(|m| m.data())
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min);
        if min_abs_z > KINK_MARGIN {
            return Scenario {
                net,
                factors,
                keys,
                ewc,
                x,
                labels,
            };
        }
    }
    unreachable!()
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    if denom < 1e-10 {
        0.0
    } else {
        (analytic - numeric).abs() / denom
    }
}

/// Checks one scenario exhaustively; returns (params checked, worst error
/// per class).
fn check_scenario(s: &Scenario) -> (usize, Vec<(ParamClass, f64)>) {
    let (logits, trace) =
        forward(&s.net, BiasSource::Factors(&s.factors), s.keys.as_ref(), &s.x).unwrap();
    let (_, dlogits) = softmax_xent(&logits, &s.labels).unwrap();
    let mut grads = backward(
        &s.net,
        BiasSource::Factors(&s.factors),
        s.keys.as_ref(),
        &trace,
        &dlogits,
    )
    .unwrap();
    if let Some(ewc) = &s.ewc {
        let (_, pgrad) = ewc.penalty(&s.net).unwrap();
        for (g, p) in grads.dw.iter_mut().zip(&pgrad.dw) {
            g.add_assign(p).unwrap();
        }
        for (g, p) in grads.db.iter_mut().zip(&pgrad.db) {
            for (a, &b) in g.iter_mut().zip(p) {
                *a += b;
            }
        }
    }

    let mut checked = 0usize;
    let mut worst = vec![
        (ParamClass::Weights, 0.0f64),
        (ParamClass::Biases, 0.0),
        (ParamClass::FactorM, 0.0),
        (ParamClass::FactorWt, 0.0),
    ];
    let mut record = |class: ParamClass, err: f64| {
        for (c, w) in worst.iter_mut() {
            if *c == class {
                *w = w.max(err);
            }
        }
    };

    let fd_net = |mutate: &dyn Fn(&mut NetworkState<f64>, f64)| {
        let mut plus = s.net.clone();
        mutate(&mut plus, FD_STEP);
        let mut minus = s.net.clone();
        mutate(&mut minus, -FD_STEP);
        (s.objective(&plus, &s.factors) - s.objective(&minus, &s.factors)) / (2.0 * FD_STEP)
    };
    let fd_factors = |mutate: &dyn Fn(&mut BiasFactors<f64>, f64)| {
        let mut plus = s.factors.clone();
        mutate(&mut plus, FD_STEP);
        let mut minus = s.factors.clone();
        mutate(&mut minus, -FD_STEP);
        (s.objective(&s.net, &plus) - s.objective(&s.net, &minus)) / (2.0 * FD_STEP)
    };

    for layer in 0..s.net.n_layers() {
        let (in_dim, out_dim) = (s.net.layers()[layer].in_dim, s.net.layers()[layer].out_dim);
        for r in 0..in_dim {
            for c in 0..out_dim {
                let numeric = fd_net(&|nn, h| {
                    let v = nn.weight(layer).get(r, c);
                    nn.weight_mut(layer).set(r, c, v + h);
                });
                record(ParamClass::Weights, rel_err(grads.dw[layer].get(r, c), numeric));
                checked += 1;
            }
        }
        for j in 0..out_dim {
            let numeric = fd_net(&|nn, h| nn.bias_mut(layer)[j] += h);
            record(ParamClass::Biases, rel_err(grads.db[layer][j], numeric));
            checked += 1;
        }
        let dm = &grads.dm.as_ref().unwrap()[layer];
        for j in 0..dm.cols() {
            let numeric = fd_factors(&|ff, h| {
                let v = ff.m(layer).get(0, j);
                ff.m_mut(layer).set(0, j, v + h);
            });
            record(ParamClass::FactorM, rel_err(dm.get(0, j), numeric));
            checked += 1;
        }
        let dwt = &grads.dwt.as_ref().unwrap()[layer];
        for r in 0..dwt.rows() {
            for c in 0..dwt.cols() {
                let numeric = fd_factors(&|ff, h| {
                    let v = ff.wt(layer).get(r, c);
                    ff.wt_mut(layer).set(r, c, v + h);
                });
                record(ParamClass::FactorWt, rel_err(dwt.get(r, c), numeric));
                checked += 1;
            }
        }
    }
    (checked, worst)
}

/// Runs the full sweep: every seed is checked in all four
/// keys x penalty combinations cycling deterministically.
pub fn run_gradcheck(n_seeds: usize, tolerance: f64) -> GradCheckReport {
    let mut worst = vec![
        (ParamClass::Weights, 0.0f64),
        (ParamClass::Biases, 0.0),
        (ParamClass::FactorM, 0.0),
        (ParamClass::FactorWt, 0.0),
    ];
    let mut params = 0usize;
    for seed in 0..n_seeds as u64 {
        let use_keys = seed % 2 == 1;
        let use_ewc = (seed / 2) % 2 == 1;
        let scenario = build_scenario(seed, use_keys, use_ewc);
        let (checked, scenario_worst) = check_scenario(&scenario);
        params += checked;
        for ((_, acc), (_, w)) in worst.iter_mut().zip(&scenario_worst) {
            *acc = acc.max(*w);
        }
    }
    let max_rel_err = worst.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    GradCheckReport {
        seeds_run: n_seeds,
        params_checked: params,
        tolerance,
        worst,
        max_rel_err,
    }
}

pub fn render_gradcheck(report: &GradCheckReport) -> String {
    let mut out = format!(
        "gradient check: {} seeds, {} parameters, tolerance {:.0e}\n",
        report.seeds_run, report.params_checked, report.tolerance
    );
    for (class, err) in &report.worst {
        out.push_str(&format!("  {class:4} worst rel err {err:.3e}\n"));
    }
    out.push_str(&format!(
        "  overall {} (max {:.3e})\n",
        if report.passed() { "PASS" } else { "FAIL" },
        report.max_rel_err
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_small_sweep_passes() {
        let report = run_gradcheck(8, 1e-4);
        assert!(report.passed(), "{}", render_gradcheck(&report));
        assert!(report.params_checked > 500);
    }
}
