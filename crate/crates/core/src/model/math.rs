//! Dense f64 primitives for the forward and backward passes. Row-major
//! matrices, accumulate-into-output convention for the backward helpers.

/// out[m,n] += a[m,k] * b[k,n]
pub fn matmul_nn(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            if a_ip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for j in 0..n {
                out_row[j] += a_ip * b_row[j];
            }
        }
    }
}

/// out[m,n] += a[m,k] * b[n,k]^T  (b stored row-major as [n,k])
pub fn matmul_nt(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for p in 0..k {
                acc += a_row[p] * b_row[p];
            }
            out_row[j] += acc;
        }
    }
}

/// out[m,n] += a[k,m]^T * b[k,n]  (a stored row-major as [k,m])
pub fn matmul_tn(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for p in 0..k {
        let a_row = &a[p * m..(p + 1) * m];
        let b_row = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let a_pi = a_row[i];
            if a_pi == 0.0 {
                continue;
            }
            let out_row = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                out_row[j] += a_pi * b_row[j];
            }
        }
    }
}

/// y[l, :] += bias for each of the l rows.
pub fn add_bias(y: &mut [f64], bias: &[f64]) {
    let n = bias.len();
    for row in y.chunks_mut(n) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// bias_grad += column sums of dy.
pub fn bias_grad(grad: &mut [f64], dy: &[f64]) {
    let n = grad.len();
    for row in dy.chunks(n) {
        for (g, d) in grad.iter_mut().zip(row) {
            *g += d;
        }
    }
}

pub const LN_EPS: f64 = 1e-5;

/// Per-row layer normalization. Returns (output, xhat, inv_std) where xhat
/// is the normalized input kept for the backward pass.
pub fn layernorm_fwd(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    rows: usize,
    dim: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut y = vec![0.0; rows * dim];
    let mut xhat = vec![0.0; rows * dim];
    let mut inv_std = vec![0.0; rows];
    for r in 0..rows {
        let xr = &x[r * dim..(r + 1) * dim];
        let mean = xr.iter().sum::<f64>() / dim as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / dim as f64;
        let istd = 1.0 / (var + LN_EPS).sqrt();
        inv_std[r] = istd;
        for i in 0..dim {
            let h = (xr[i] - mean) * istd;
            xhat[r * dim + i] = h;
            y[r * dim + i] = gamma[i] * h + beta[i];
        }
    }
    (y, xhat, inv_std)
}

/// Backward of layer normalization; returns dx and accumulates dgamma/dbeta.
#[allow(clippy::too_many_arguments)]
pub fn layernorm_bwd(
    dy: &[f64],
    xhat: &[f64],
    inv_std: &[f64],
    gamma: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
    rows: usize,
    dim: usize,
) -> Vec<f64> {
    let mut dx = vec![0.0; rows * dim];
    let n = dim as f64;
    for r in 0..rows {
        let dyr = &dy[r * dim..(r + 1) * dim];
        let xhr = &xhat[r * dim..(r + 1) * dim];
        let mut sum_dyg = 0.0;
        let mut sum_dyg_xh = 0.0;
        for i in 0..dim {
            let dyg = dyr[i] * gamma[i];
            sum_dyg += dyg;
            sum_dyg_xh += dyg * xhr[i];
            dgamma[i] += dyr[i] * xhr[i];
            dbeta[i] += dyr[i];
        }
        let istd = inv_std[r];
        for i in 0..dim {
            let dyg = dyr[i] * gamma[i];
            dx[r * dim + i] = istd * (dyg - sum_dyg / n - xhr[i] * sum_dyg_xh / n);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    let sech2 = 1.0 - t * t;
    0.5 * (1.0 + t) + 0.5 * x * sech2 * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Softmax over `row` in place (numerically stabilized).
pub fn softmax_row(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Log-softmax of `row`, written into `out`.
pub fn log_softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    for (o, v) in out.iter_mut().zip(row) {
        *o = v - log_sum;
    }
}
