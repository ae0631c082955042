/// One outer iteration. Values refer to the iterate `Q^t` before the step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub objective: f64,
    /// Step taken from `Q^t`; 0 on the final record.
    pub gamma: f64,
    /// `‖BQ^t − Q^t‖_F`.
    pub residual: f64,
    pub rates: Vec<f64>,
    /// `min_k (r_k − R_k)`.
    pub min_rate_slack: f64,
    pub dinkelbach_iters: usize,
    pub dual_iters: usize,
    /// Wall time since the solver started, in milliseconds.
    pub ms: f64,
}
