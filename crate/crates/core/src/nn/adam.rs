//! Adam with bias correction.

use crate::error::{Error, Result};

pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment accumulators plus the step counter, one moment
/// pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(shapes: &[usize]) -> Self {
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }
}

/// One Adam update over parallel lists of parameter and gradient slices.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::InvalidArgument(format!(
            "adam: {} parameter tensors, {} gradient tensors, state has {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads.iter()).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::InvalidArgument(format!(
                "adam: tensor {i} shape mismatch ({} params, {} grads, {} moments)",
                p.len(),
                g.len(),
                state.m[i].len()
            )));
        }
    }

    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (i, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
        let (ms, vs) = (&mut state.m[i], &mut state.v[i]);
        for (((pv, &gv), m), v) in p.iter_mut().zip(g.iter()).zip(ms.iter_mut()).zip(vs.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * gv;
            *v = beta2 * *v + (1.0 - beta2) * gv * gv;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
