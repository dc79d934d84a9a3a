use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::LossKind;
use super::network::{grad_at, Gradients, Network};
use super::FnnError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub h: f64,
    /// Number of parameters sampled.
    pub params: usize,
    pub seed: u64,
    /// Denominator floor, so that gradients near zero compare absolutely.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            h: 1e-5,
            params: 200,
            seed: 0,
            floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat parameter index with the largest error.
    pub worst_param: usize,
    pub checked: usize,
}

/// Analytic gradient of the mean batch loss, dropout disabled.
pub fn analytic_gradients<S: Scalar>(
    net: &Network<S>,
    x: &[S],
    targets: &[S],
    batch: usize,
    kind: LossKind,
) -> Result<Gradients<S>, FnnError> {
    Ok(net.loss_and_gradients(x, targets, batch, kind, None)?.1)
}

/// Compares `grads` with central differences of the mean batch loss over a
/// random sample of parameters. The network is restored before returning.
pub fn check_gradients<S: Scalar>(
    net: &mut Network<S>,
    x: &[S],
    targets: &[S],
    batch: usize,
    kind: LossKind,
    grads: &Gradients<S>,
    opts: GradCheckOptions,
) -> Result<GradCheckReport, FnnError> {
    let total = net.num_params();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let picks: Vec<usize> = if opts.params >= total {
        (0..total).collect()
    } else {
        rand::seq::index::sample(&mut rng, total, opts.params).into_vec()
    };
    let h = S::of(opts.h);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: 0,
        checked: picks.len(),
    };
    for &i in &picks {
        let orig = *net.param_mut(i);
        *net.param_mut(i) = orig + h;
        let plus = net.batch_loss(x, targets, batch, kind);
        *net.param_mut(i) = orig - h;
        let minus = net.batch_loss(x, targets, batch, kind);
        *net.param_mut(i) = orig;
        let numeric = ((plus? - minus?) / (h + h)).to_f64_lossy();
        let analytic = grad_at(grads, i).to_f64_lossy();
        let denom = analytic.abs().max(numeric.abs()).max(opts.floor);
        let err = (analytic - numeric).abs() / denom;
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst_param = i;
        }
    }
    Ok(report)
}

/// Backpropagation checked against finite differences.
pub fn gradient_check<S: Scalar>(
    net: &mut Network<S>,
    x: &[S],
    targets: &[S],
    batch: usize,
    kind: LossKind,
    opts: GradCheckOptions,
) -> Result<GradCheckReport, FnnError> {
    let grads = analytic_gradients(net, x, targets, batch, kind)?;
    check_gradients(net, x, targets, batch, kind, &grads, opts)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::fnn::config::NetworkConfig;

    fn batch(input: usize, outputs: usize, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n * input).map(|_| rng.random_range(0.0..3.0)).collect();
        let mut t = vec![0.0; n * outputs];
        for r in 0..n {
            t[r * outputs + rng.random_range(0..outputs)] = 1.0;
        }
        (x, t)
    }

    #[test]
    fn backprop_matches_differences() {
        for cfg in [
            NetworkConfig::compact(6, 4, 1),
            NetworkConfig::deep(11, 4, 1),
        ] {
            let mut net = Network::<f64>::new(&cfg).unwrap();
            let (x, t) = batch(cfg.input, 4, 10, 2);
            let before = net.clone();
            let r = gradient_check(&mut net, &x, &t, 10, cfg.loss, GradCheckOptions::default())
                .unwrap();
            assert!(r.max_rel_error <= 1e-4, "{r:?}");
            assert_eq!(r.checked, 200);
            assert_eq!(net, before);
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let cfg = NetworkConfig::compact(6, 4, 1);
        let mut net = Network::<f64>::new(&cfg).unwrap();
        let (x, t) = batch(6, 4, 10, 3);
        let mut g = analytic_gradients(&net, &x, &t, 10, cfg.loss).unwrap();
        g[0].w.iter_mut().for_each(|v| *v = -*v);
        let opts = GradCheckOptions {
            params: usize::MAX,
            ..Default::default()
        };
        let r = check_gradients(&mut net, &x, &t, 10, cfg.loss, &g, opts).unwrap();
        assert!(r.max_rel_error > 1e-2, "{r:?}");
    }
}
