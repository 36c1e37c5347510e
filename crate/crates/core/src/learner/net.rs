//! Small feed-forward policy/value network with hand-written forward and
//! backward passes over sparse binary observations.
//!
//! Layout: flatten(birdview) ++ ego features -> two tanh hidden layers ->
//! a categorical action head and a scalar value head. The first layer is
//! stored column-major so both the forward pass and the weight gradient can
//! skip the zero cells of the occupancy grid.

use crate::rng::stream;
use crate::sim::birdview::{BirdviewObservation, EGO_FEATURES, GRID_LEN};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Ego feature scales; raw features divide by these before entering the net.
pub const EGO_FEATURE_SCALE: [f64; EGO_FEATURES] = [15.0, 15.0, 150.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("observation shape mismatch: expected {expected} grid cells")]
    ShapeMismatch { expected: usize },
    #[error("rewards/values/dones lengths are inconsistent")]
    LengthMismatch,
    #[error("non-finite loss; update aborted (policy {policy_loss}, value {value_loss})")]
    NonFiniteLoss { policy_loss: f64, value_loss: f64 },
    #[error("checkpoint malformed: {0}")]
    BadCheckpoint(String),
    #[error("batch of {got} transitions does not match configured size {want}")]
    BatchSize { got: usize, want: usize },
}

/// Network dimensions. Grid cells and ego features are separate so the
/// sparse path knows where the dense tail begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub grid_cells: usize,
    pub ego_features: usize,
    pub hidden: usize,
    pub actions: usize,
}

impl NetConfig {
    pub fn for_actions(actions: usize) -> Self {
        NetConfig {
            grid_cells: GRID_LEN,
            ego_features: EGO_FEATURES,
            hidden: 128,
            actions,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.grid_cells + self.ego_features
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Layout {
    w1: usize, // [input][hidden], column-major by input index
    b1: usize,
    w2: usize, // [hidden][hidden], row-major
    b2: usize,
    wa: usize, // [actions][hidden], row-major
    ba: usize,
    wv: usize, // [hidden]
    bv: usize,
    len: usize,
}

impl Layout {
    fn new(cfg: &NetConfig) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let start = at;
            at += n;
            start
        };
        let input = cfg.input_dim();
        let w1 = take(input * cfg.hidden);
        let b1 = take(cfg.hidden);
        let w2 = take(cfg.hidden * cfg.hidden);
        let b2 = take(cfg.hidden);
        let wa = take(cfg.actions * cfg.hidden);
        let ba = take(cfg.actions);
        let wv = take(cfg.hidden);
        let bv = take(1);
        Layout { w1, b1, w2, b2, wa, ba, wv, bv, len: at }
    }
}

/// Flat parameter vector plus its layout: the unit Adam, the checkpoint
/// format and the finite-difference tests all operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub cfg: NetConfig,
    pub data: Vec<f64>,
    layout: Layout,
}

/// Sparse network input: set grid cells plus the raw ego features.
#[derive(Debug, Clone, Copy)]
pub struct NetInput<'a> {
    pub active_cells: &'a [u16],
    pub ego: &'a [f64; EGO_FEATURES],
}

impl<'a> NetInput<'a> {
    pub fn from_observation(obs: &'a BirdviewObservation) -> Self {
        NetInput {
            active_cells: &obs.cells,
            ego: &obs.ego,
        }
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub value: f64,
}

impl PolicyParams {
    pub fn zeros(cfg: NetConfig) -> Self {
        let layout = Layout::new(&cfg);
        PolicyParams {
            cfg,
            data: vec![0.0; layout.len],
            layout,
        }
    }

    /// Seeded init: row-orthogonalized Gaussian hidden layers (gain sqrt(2)),
    /// a near-zero action head and a unit-gain value head.
    pub fn init(cfg: NetConfig, seed: u64) -> Self {
        let mut p = Self::zeros(cfg);
        let mut rng = stream(seed, 0x11A7);
        let hidden = cfg.hidden;
        let input = cfg.input_dim();

        // First layer: orthogonalize across the hidden dimension. Columns
        // are input-major, so fill a temporary row-major matrix then write.
        let rows = orthogonal_rows(hidden, input, 2f64.sqrt(), &mut rng);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                p.data[p.layout.w1 + c * hidden + r] = *v;
            }
        }
        let rows = orthogonal_rows(hidden, hidden, 2f64.sqrt(), &mut rng);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                p.data[p.layout.w2 + r * hidden + c] = *v;
            }
        }
        let rows = orthogonal_rows(cfg.actions, hidden, 0.01, &mut rng);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                p.data[p.layout.wa + r * hidden + c] = *v;
            }
        }
        let rows = orthogonal_rows(1, hidden, 1.0, &mut rng);
        for (c, v) in rows[0].iter().enumerate() {
            p.data[p.layout.wv + c] = *v;
        }
        p
    }

    pub fn param_count(&self) -> usize {
        self.data.len()
    }

    fn w1_col(&self, input_index: usize) -> &[f64] {
        let h = self.cfg.hidden;
        &self.data[self.layout.w1 + input_index * h..self.layout.w1 + (input_index + 1) * h]
    }

    /// Forward pass over a sparse observation.
    pub fn forward(&self, input: &NetInput) -> Result<ForwardTrace, LearnError> {
        let h = self.cfg.hidden;
        if input
            .active_cells
            .iter()
            .any(|&c| (c as usize) >= self.cfg.grid_cells)
        {
            return Err(LearnError::ShapeMismatch {
                expected: self.cfg.grid_cells,
            });
        }

        let mut z1 = self.data[self.layout.b1..self.layout.b1 + h].to_vec();
        for &cell in input.active_cells {
            let col = self.w1_col(cell as usize);
            for (z, w) in z1.iter_mut().zip(col) {
                *z += w;
            }
        }
        for (k, ego) in input.ego.iter().enumerate() {
            let x = ego / EGO_FEATURE_SCALE[k];
            let col = self.w1_col(self.cfg.grid_cells + k);
            for (z, w) in z1.iter_mut().zip(col) {
                *z += w * x;
            }
        }
        let h1: Vec<f64> = z1.iter().map(|z| z.tanh()).collect();

        let mut h2 = vec![0.0; h];
        for (j, out) in h2.iter_mut().enumerate() {
            let row = &self.data[self.layout.w2 + j * h..self.layout.w2 + (j + 1) * h];
            let mut acc = self.data[self.layout.b2 + j];
            for (w, x) in row.iter().zip(&h1) {
                acc += w * x;
            }
            *out = acc.tanh();
        }

        let mut logits = vec![0.0; self.cfg.actions];
        for (a, out) in logits.iter_mut().enumerate() {
            let row = &self.data[self.layout.wa + a * h..self.layout.wa + (a + 1) * h];
            let mut acc = self.data[self.layout.ba + a];
            for (w, x) in row.iter().zip(&h2) {
                acc += w * x;
            }
            *out = acc;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> = logits.iter().map(|l| l - lse).collect();

        let mut value = self.data[self.layout.bv];
        let wv = &self.data[self.layout.wv..self.layout.wv + h];
        for (w, x) in wv.iter().zip(&h2) {
            value += w * x;
        }

        Ok(ForwardTrace { h1, h2, logits, log_probs, value })
    }

    /// Backpropagates `g_logits` and `g_value` for one sample, accumulating
    /// into `grads` (same layout as the parameters).
    pub fn backward(
        &self,
        input: &NetInput,
        trace: &ForwardTrace,
        g_logits: &[f64],
        g_value: f64,
        grads: &mut [f64],
    ) {
        let h = self.cfg.hidden;
        let l = self.layout;

        // Heads into h2.
        let mut g_h2 = vec![0.0; h];
        for (a, ga) in g_logits.iter().enumerate() {
            if *ga == 0.0 {
                continue;
            }
            let row = &self.data[l.wa + a * h..l.wa + (a + 1) * h];
            let grow = &mut grads[l.wa + a * h..l.wa + (a + 1) * h];
            for j in 0..h {
                grow[j] += ga * trace.h2[j];
                g_h2[j] += ga * row[j];
            }
            grads[l.ba + a] += ga;
        }
        if g_value != 0.0 {
            let wv = &self.data[l.wv..l.wv + h];
            for j in 0..h {
                grads[l.wv + j] += g_value * trace.h2[j];
                g_h2[j] += g_value * wv[j];
            }
            grads[l.bv] += g_value;
        }

        // tanh' = 1 - h2^2, back through the second hidden layer.
        let d2: Vec<f64> = g_h2
            .iter()
            .zip(&trace.h2)
            .map(|(g, y)| g * (1.0 - y * y))
            .collect();
        let mut g_h1 = vec![0.0; h];
        for (j, dj) in d2.iter().enumerate() {
            if *dj == 0.0 {
                continue;
            }
            let row = &self.data[l.w2 + j * h..l.w2 + (j + 1) * h];
            let grow = &mut grads[l.w2 + j * h..l.w2 + (j + 1) * h];
            for k in 0..h {
                grow[k] += dj * trace.h1[k];
                g_h1[k] += dj * row[k];
            }
            grads[l.b2 + j] += dj;
        }

        let d1: Vec<f64> = g_h1
            .iter()
            .zip(&trace.h1)
            .map(|(g, y)| g * (1.0 - y * y))
            .collect();
        for &cell in input.active_cells {
            let gcol = &mut grads[l.w1 + (cell as usize) * h..l.w1 + (cell as usize + 1) * h];
            for (g, d) in gcol.iter_mut().zip(&d1) {
                *g += d;
            }
        }
        for (k, ego) in input.ego.iter().enumerate() {
            let x = ego / EGO_FEATURE_SCALE[k];
            if x == 0.0 {
                continue;
            }
            let idx = self.cfg.grid_cells + k;
            let gcol = &mut grads[l.w1 + idx * h..l.w1 + (idx + 1) * h];
            for (g, d) in gcol.iter_mut().zip(&d1) {
                *g += d * x;
            }
        }
        for (j, d) in d1.iter().enumerate() {
            grads[l.b1 + j] += d;
        }
    }
}

/// Gram-Schmidt orthonormalized Gaussian rows scaled by `gain`. When there
/// are more rows than columns the surplus rows stay scaled Gaussians.
fn orthogonal_rows(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut row: Vec<f64> = (0..cols).map(|_| gaussian(rng)).collect();
        if r < cols {
            for prev in &out[..r.min(out.len())] {
                let dot: f64 = row.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (x, p) in row.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
        }
        let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 1e-12 { gain / norm } else { 0.0 };
        for x in &mut row {
            *x *= scale;
        }
        out.push(row);
    }
    // Undo the gain for the orthonormalization reference copies: rows were
    // normalized including gain, which is what downstream consumers want.
    out
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per draw keeps this dependency-free.
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The operation the learner contract calls `policy_forward`: action
/// distribution and value for one observation.
pub fn policy_forward(
    params: &PolicyParams,
    obs: &BirdviewObservation,
) -> Result<(Vec<f64>, f64), LearnError> {
    let trace = params.forward(&NetInput::from_observation(obs))?;
    let probs = trace.log_probs.iter().map(|lp| lp.exp()).collect();
    Ok((probs, trace.value))
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut PolicyParams, grads: &[f64], lr: f64) {
        assert_eq!(grads.len(), params.data.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..grads.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params.data[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
