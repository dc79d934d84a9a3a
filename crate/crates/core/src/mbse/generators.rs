use crate::linalg::Matrix;
use crate::model::LtpaModel;
use crate::scalar::Scalar;

/// Silent sub-generator `q_u`, one observable rate matrix per label, and the
/// exit rates.
///
/// `q_u[i][j]` (i != j) sums the silent rates i -> j; the diagonal is minus
/// the exit rate plus any silent self-loop rate, so silent self-loops are
/// no-ops. `r[q][i][j]` sums the rates of `q`-labeled transitions i -> j.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet<S> {
    pub q_u: Matrix<S>,
    pub r: Vec<Matrix<S>>,
    pub lambda: Vec<S>,
}

impl<S: Scalar> GeneratorSet<S> {
    pub fn build(model: &LtpaModel) -> Self {
        let n = model.num_states();
        let mut q_u = Matrix::zeros(n);
        let mut r = vec![Matrix::zeros(n); model.num_labels()];
        let lambda: Vec<S> = (0..n)
            .map(|i| S::of(model.exit_rate(crate::model::StateId(i))))
            .collect();
        for (i, &l) in lambda.iter().enumerate() {
            q_u.set(i, i, -l);
        }
        for t in model.transitions() {
            let rate = S::of(t.rate);
            match model.obs(t.event) {
                None => q_u.add_at(t.src.0, t.dst.0, rate),
                Some(q) => r[q.0].add_at(t.src.0, t.dst.0, rate),
            }
        }
        GeneratorSet { q_u, r, lambda }
    }

    pub fn num_states(&self) -> usize {
        self.q_u.dim()
    }

    /// Largest `|sum_q r_q row + q_u row|`, relative to the exit rate.
    pub fn row_sum_defect(&self) -> f64 {
        let n = self.num_states();
        (0..n)
            .map(|i| {
                let mut s = self.q_u.row(i).iter().fold(S::zero(), |a, &x| a + x);
                for r in &self.r {
                    s += r.row(i).iter().fold(S::zero(), |a, &x| a + x);
                }
                s.abs().to_f64_lossy() / self.lambda[i].to_f64_lossy().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}
