//! Forward and backward passes. Examples are processed one at a time in f64;
//! padded positions never enter any computation, so masked padding cannot
//! leak into losses or gradients.
//!
//! Output convention: for a target sequence `[bos, m_1, ..., m_k]` the model
//! produces one log-distribution per predicted position, row `t` giving
//! `log p(m_{t+1} | m_{<=t}, C)`. The decoder consumes the prefix without
//! its last token.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::encode::EncodedExample;
use super::math::{
    add_bias, bias_grad, gelu, gelu_grad, layernorm_bwd, layernorm_fwd, log_softmax_row,
    matmul_nn, matmul_nt, matmul_tn, softmax_row,
};
use super::params::{DenseParams, ModelParameters, ParamLayout};
use super::ModelConfig;
use crate::error::{Error, Result};

/// Per-tensor gradients in the parameter layout.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) layout: Arc<ParamLayout>,
    pub(crate) data: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(dense: &DenseParams) -> Gradients {
        Gradients {
            layout: Arc::clone(&dense.layout),
            data: vec![0.0; dense.data.len()],
        }
    }

    pub fn get(&self, name: &str) -> &[f64] {
        &self.data[self.layout.range(name)]
    }

    fn slice_mut(&mut self, name: &str) -> &mut [f64] {
        let range = self.layout.range(name);
        &mut self.data[range]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

/// Optional training-time dropout: seeded mask source.
pub(crate) struct Dropout<'r> {
    pub rng: &'r mut ChaCha8Rng,
    pub p: f64,
}

impl Dropout<'_> {
    /// Inverted-dropout mask; applied in place, returned for the backward.
    fn apply(&mut self, x: &mut [f64]) -> Vec<f64> {
        let keep = 1.0 - self.p;
        let mut mask = vec![0.0; x.len()];
        for (m, v) in mask.iter_mut().zip(x.iter_mut()) {
            if self.rng.random::<f64>() < keep {
                *m = 1.0 / keep;
                *v *= *m;
            } else {
                *v = 0.0;
            }
        }
        mask
    }
}

fn maybe_dropout(ctx: &mut Option<Dropout<'_>>, x: &mut [f64]) -> Option<Vec<f64>> {
    match ctx {
        Some(d) if d.p > 0.0 => Some(d.apply(x)),
        _ => None,
    }
}

fn apply_mask(dy: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(mask) = mask {
        for (d, m) in dy.iter_mut().zip(mask) {
            *d *= m;
        }
    }
}

// ---------------------------------------------------------------------------
// Sublayer building blocks
// ---------------------------------------------------------------------------

fn linear_fwd(
    p: &DenseParams,
    w: &str,
    b: &str,
    x: &[f64],
    rows: usize,
    in_dim: usize,
    out_dim: usize,
) -> Vec<f64> {
    let mut y = vec![0.0; rows * out_dim];
    matmul_nn(&mut y, x, p.get(w), rows, in_dim, out_dim);
    add_bias(&mut y, p.get(b));
    y
}

/// Accumulates dW/db and adds the input gradient into `dx`.
#[allow(clippy::too_many_arguments)]
fn linear_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    w: &str,
    b: &str,
    x: &[f64],
    dy: &[f64],
    dx: &mut [f64],
    rows: usize,
    in_dim: usize,
    out_dim: usize,
) {
    matmul_nt(dx, dy, p.get(w), rows, out_dim, in_dim);
    matmul_tn(g.slice_mut(w), x, dy, in_dim, rows, out_dim);
    bias_grad(g.slice_mut(b), dy);
}

struct LnTrace {
    out: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

fn ln_fwd(p: &DenseParams, prefix: &str, x: &[f64], rows: usize, dim: usize) -> LnTrace {
    let gamma = p.get(&format!("{prefix}.gamma"));
    let beta = p.get(&format!("{prefix}.beta"));
    let (out, xhat, inv_std) = layernorm_fwd(x, gamma, beta, rows, dim);
    LnTrace { out, xhat, inv_std }
}

#[allow(clippy::too_many_arguments)]
fn ln_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    prefix: &str,
    trace: &LnTrace,
    dy: &[f64],
    rows: usize,
    dim: usize,
) -> Vec<f64> {
    let gamma_name = format!("{prefix}.gamma");
    let beta_name = format!("{prefix}.beta");
    let gamma = p.get(&gamma_name).to_vec();
    let mut dgamma = vec![0.0; dim];
    let mut dbeta = vec![0.0; dim];
    let dx = layernorm_bwd(
        dy,
        &trace.xhat,
        &trace.inv_std,
        &gamma,
        &mut dgamma,
        &mut dbeta,
        rows,
        dim,
    );
    for (acc, v) in g.slice_mut(&gamma_name).iter_mut().zip(&dgamma) {
        *acc += v;
    }
    for (acc, v) in g.slice_mut(&beta_name).iter_mut().zip(&dbeta) {
        *acc += v;
    }
    dx
}

struct AttnTrace {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// [heads, lq, lk], zero where causally masked.
    probs: Vec<f64>,
    ctx: Vec<f64>,
    out: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn attention_fwd(
    p: &DenseParams,
    prefix: &str,
    x_q: &[f64],
    x_kv: &[f64],
    lq: usize,
    lk: usize,
    hidden: usize,
    heads: usize,
    causal: bool,
) -> AttnTrace {
    let d = hidden / heads;
    let scale = 1.0 / (d as f64).sqrt();
    let q = linear_fwd(p, &format!("{prefix}.wq"), &format!("{prefix}.bq"), x_q, lq, hidden, hidden);
    let k = linear_fwd(p, &format!("{prefix}.wk"), &format!("{prefix}.bk"), x_kv, lk, hidden, hidden);
    let v = linear_fwd(p, &format!("{prefix}.wv"), &format!("{prefix}.bv"), x_kv, lk, hidden, hidden);

    let mut probs = vec![0.0; heads * lq * lk];
    let mut ctx = vec![0.0; lq * hidden];
    for head in 0..heads {
        let off = head * d;
        for i in 0..lq {
            let jmax = if causal { (i + 1).min(lk) } else { lk };
            let row = &mut probs[head * lq * lk + i * lk..head * lq * lk + i * lk + jmax];
            for (j, slot) in row.iter_mut().enumerate() {
                let qi = &q[i * hidden + off..i * hidden + off + d];
                let kj = &k[j * hidden + off..j * hidden + off + d];
                let mut dot = 0.0;
                for t in 0..d {
                    dot += qi[t] * kj[t];
                }
                *slot = dot * scale;
            }
            softmax_row(row);
            let ctx_row = &mut ctx[i * hidden + off..i * hidden + off + d];
            for (j, &pj) in row.iter().enumerate() {
                let vj = &v[j * hidden + off..j * hidden + off + d];
                for t in 0..d {
                    ctx_row[t] += pj * vj[t];
                }
            }
        }
    }
    let out = linear_fwd(p, &format!("{prefix}.wo"), &format!("{prefix}.bo"), &ctx, lq, hidden, hidden);
    AttnTrace { q, k, v, probs, ctx, out }
}

/// Returns (dx_q, dx_kv).
#[allow(clippy::too_many_arguments)]
fn attention_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    prefix: &str,
    trace: &AttnTrace,
    x_q: &[f64],
    x_kv: &[f64],
    dout: &[f64],
    lq: usize,
    lk: usize,
    hidden: usize,
    heads: usize,
    causal: bool,
) -> (Vec<f64>, Vec<f64>) {
    let d = hidden / heads;
    let scale = 1.0 / (d as f64).sqrt();

    let mut dctx = vec![0.0; lq * hidden];
    linear_bwd(
        p,
        g,
        &format!("{prefix}.wo"),
        &format!("{prefix}.bo"),
        &trace.ctx,
        dout,
        &mut dctx,
        lq,
        hidden,
        hidden,
    );

    let mut dq = vec![0.0; lq * hidden];
    let mut dk = vec![0.0; lk * hidden];
    let mut dv = vec![0.0; lk * hidden];
    let mut dp = vec![0.0; lk];
    for head in 0..heads {
        let off = head * d;
        for i in 0..lq {
            let jmax = if causal { (i + 1).min(lk) } else { lk };
            let probs = &trace.probs[head * lq * lk + i * lk..head * lq * lk + i * lk + jmax];
            let dctx_row = &dctx[i * hidden + off..i * hidden + off + d];
            // dP and dV
            for j in 0..jmax {
                let vj = &trace.v[j * hidden + off..j * hidden + off + d];
                let mut acc = 0.0;
                for t in 0..d {
                    acc += dctx_row[t] * vj[t];
                }
                dp[j] = acc;
                let dvj = &mut dv[j * hidden + off..j * hidden + off + d];
                for t in 0..d {
                    dvj[t] += probs[j] * dctx_row[t];
                }
            }
            // softmax backward
            let dot: f64 = probs.iter().zip(&dp[..jmax]).map(|(p, d)| p * d).sum();
            for j in 0..jmax {
                let ds = probs[j] * (dp[j] - dot) * scale;
                let kj = &trace.k[j * hidden + off..j * hidden + off + d];
                let qi = &trace.q[i * hidden + off..i * hidden + off + d];
                let dqi = &mut dq[i * hidden + off..i * hidden + off + d];
                for t in 0..d {
                    dqi[t] += ds * kj[t];
                }
                let dkj = &mut dk[j * hidden + off..j * hidden + off + d];
                for t in 0..d {
                    dkj[t] += ds * qi[t];
                }
            }
        }
    }

    let mut dx_q = vec![0.0; lq * hidden];
    let mut dx_kv = vec![0.0; lk * hidden];
    linear_bwd(
        p,
        g,
        &format!("{prefix}.wq"),
        &format!("{prefix}.bq"),
        x_q,
        &dq,
        &mut dx_q,
        lq,
        hidden,
        hidden,
    );
    linear_bwd(
        p,
        g,
        &format!("{prefix}.wk"),
        &format!("{prefix}.bk"),
        x_kv,
        &dk,
        &mut dx_kv,
        lk,
        hidden,
        hidden,
    );
    linear_bwd(
        p,
        g,
        &format!("{prefix}.wv"),
        &format!("{prefix}.bv"),
        x_kv,
        &dv,
        &mut dx_kv,
        lk,
        hidden,
        hidden,
    );
    (dx_q, dx_kv)
}

struct FfnTrace {
    pre: Vec<f64>,
    post: Vec<f64>,
    out: Vec<f64>,
}

fn ffn_fwd(p: &DenseParams, prefix: &str, x: &[f64], rows: usize, h: usize, f: usize) -> FfnTrace {
    let pre = linear_fwd(p, &format!("{prefix}.w1"), &format!("{prefix}.b1"), x, rows, h, f);
    let post: Vec<f64> = pre.iter().map(|&v| gelu(v)).collect();
    let out = linear_fwd(p, &format!("{prefix}.w2"), &format!("{prefix}.b2"), &post, rows, f, h);
    FfnTrace { pre, post, out }
}

#[allow(clippy::too_many_arguments)]
fn ffn_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    prefix: &str,
    trace: &FfnTrace,
    x: &[f64],
    dy: &[f64],
    rows: usize,
    h: usize,
    f: usize,
) -> Vec<f64> {
    let mut dpost = vec![0.0; rows * f];
    linear_bwd(
        p,
        g,
        &format!("{prefix}.w2"),
        &format!("{prefix}.b2"),
        &trace.post,
        dy,
        &mut dpost,
        rows,
        f,
        h,
    );
    let dpre: Vec<f64> = dpost
        .iter()
        .zip(&trace.pre)
        .map(|(d, &v)| d * gelu_grad(v))
        .collect();
    let mut dx = vec![0.0; rows * h];
    linear_bwd(
        p,
        g,
        &format!("{prefix}.w1"),
        &format!("{prefix}.b1"),
        x,
        &dpre,
        &mut dx,
        rows,
        h,
        f,
    );
    dx
}

fn add_in_place(acc: &mut [f64], other: &[f64]) {
    for (a, o) in acc.iter_mut().zip(other) {
        *a += o;
    }
}

// ---------------------------------------------------------------------------
// Encoder / decoder stacks
// ---------------------------------------------------------------------------

struct EmbedTrace {
    ln: LnTrace,
    drop: Option<Vec<f64>>,
    x: Vec<f64>,
}

fn embed_fwd(
    p: &DenseParams,
    ids: &[u32],
    pos_name: &str,
    ln_name: &str,
    hidden: usize,
    dropout: &mut Option<Dropout<'_>>,
) -> EmbedTrace {
    let len = ids.len();
    let tok = p.get("tok_emb");
    let pos = p.get(pos_name);
    let mut sum = vec![0.0; len * hidden];
    for (i, &id) in ids.iter().enumerate() {
        let e = &tok[id as usize * hidden..(id as usize + 1) * hidden];
        let pr = &pos[i * hidden..(i + 1) * hidden];
        let row = &mut sum[i * hidden..(i + 1) * hidden];
        for t in 0..hidden {
            row[t] = e[t] + pr[t];
        }
    }
    let ln = ln_fwd(p, ln_name, &sum, len, hidden);
    let mut x = ln.out.clone();
    let drop = maybe_dropout(dropout, &mut x);
    EmbedTrace { ln, drop, x }
}

#[allow(clippy::too_many_arguments)]
fn embed_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    trace: &EmbedTrace,
    ids: &[u32],
    pos_name: &str,
    ln_name: &str,
    hidden: usize,
    mut dx: Vec<f64>,
) {
    apply_mask(&mut dx, &trace.drop);
    let dsum = ln_bwd(p, g, ln_name, &trace.ln, &dx, ids.len(), hidden);
    {
        let dtok = g.slice_mut("tok_emb");
        for (i, &id) in ids.iter().enumerate() {
            let row = &dsum[i * hidden..(i + 1) * hidden];
            let dst = &mut dtok[id as usize * hidden..(id as usize + 1) * hidden];
            add_in_place(dst, row);
        }
    }
    let dpos = g.slice_mut(pos_name);
    for i in 0..ids.len() {
        let row = &dsum[i * hidden..(i + 1) * hidden];
        let dst = &mut dpos[i * hidden..(i + 1) * hidden];
        add_in_place(dst, row);
    }
}

struct EncLayerTrace {
    x_in: Vec<f64>,
    attn: AttnTrace,
    drop_attn: Option<Vec<f64>>,
    ln1: LnTrace,
    ffn: FfnTrace,
    drop_ffn: Option<Vec<f64>>,
    ln2: LnTrace,
}

struct EncoderTrace {
    embed: EmbedTrace,
    layers: Vec<EncLayerTrace>,
    memory: Vec<f64>,
}

fn encoder_fwd(
    p: &DenseParams,
    config: &ModelConfig,
    src_ids: &[u32],
    dropout: &mut Option<Dropout<'_>>,
) -> EncoderTrace {
    let h = config.hidden_dim;
    let len = src_ids.len();
    let embed = embed_fwd(p, src_ids, "pos_src", "ln_emb_src", h, dropout);
    let mut x = embed.x.clone();
    let mut layers = Vec::with_capacity(config.encoder_layers);
    for i in 0..config.encoder_layers {
        let attn = attention_fwd(p, &format!("enc{i}.attn"), &x, &x, len, len, h, config.heads, false);
        let mut a = attn.out.clone();
        let drop_attn = maybe_dropout(dropout, &mut a);
        let mut res1 = x.clone();
        add_in_place(&mut res1, &a);
        let ln1 = ln_fwd(p, &format!("enc{i}.ln1"), &res1, len, h);

        let ffn = ffn_fwd(p, &format!("enc{i}.ffn"), &ln1.out, len, h, config.ffn_dim);
        let mut f = ffn.out.clone();
        let drop_ffn = maybe_dropout(dropout, &mut f);
        let mut res2 = ln1.out.clone();
        add_in_place(&mut res2, &f);
        let ln2 = ln_fwd(p, &format!("enc{i}.ln2"), &res2, len, h);

        let next = ln2.out.clone();
        layers.push(EncLayerTrace {
            x_in: x,
            attn,
            drop_attn,
            ln1,
            ffn,
            drop_ffn,
            ln2,
        });
        x = next;
    }
    EncoderTrace {
        embed,
        layers,
        memory: x,
    }
}

fn encoder_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    config: &ModelConfig,
    trace: &EncoderTrace,
    src_ids: &[u32],
    dmemory: Vec<f64>,
) {
    let h = config.hidden_dim;
    let len = src_ids.len();
    let mut dx = dmemory;
    for (i, layer) in trace.layers.iter().enumerate().rev() {
        let dres2 = ln_bwd(p, g, &format!("enc{i}.ln2"), &layer.ln2, &dx, len, h);
        let mut df = dres2.clone();
        apply_mask(&mut df, &layer.drop_ffn);
        let mut dln1_out = dres2;
        let dffn_in = ffn_bwd(
            p,
            g,
            &format!("enc{i}.ffn"),
            &layer.ffn,
            &layer.ln1.out,
            &df,
            len,
            h,
            config.ffn_dim,
        );
        add_in_place(&mut dln1_out, &dffn_in);

        let dres1 = ln_bwd(p, g, &format!("enc{i}.ln1"), &layer.ln1, &dln1_out, len, h);
        let mut da = dres1.clone();
        apply_mask(&mut da, &layer.drop_attn);
        let (dq_side, dkv_side) = attention_bwd(
            p,
            g,
            &format!("enc{i}.attn"),
            &layer.attn,
            &layer.x_in,
            &layer.x_in,
            &da,
            len,
            len,
            h,
            config.heads,
            false,
        );
        let mut dnext = dres1;
        add_in_place(&mut dnext, &dq_side);
        add_in_place(&mut dnext, &dkv_side);
        dx = dnext;
    }
    embed_bwd(p, g, &trace.embed, src_ids, "pos_src", "ln_emb_src", h, dx);
}

struct DecLayerTrace {
    y_in: Vec<f64>,
    self_attn: AttnTrace,
    drop_self: Option<Vec<f64>>,
    ln1: LnTrace,
    cross: AttnTrace,
    drop_cross: Option<Vec<f64>>,
    ln2: LnTrace,
    ffn: FfnTrace,
    drop_ffn: Option<Vec<f64>>,
    ln3: LnTrace,
}

struct DecoderTrace {
    embed: EmbedTrace,
    layers: Vec<DecLayerTrace>,
    out: Vec<f64>,
}

fn decoder_fwd(
    p: &DenseParams,
    config: &ModelConfig,
    tgt_ids: &[u32],
    memory: &[f64],
    src_len: usize,
    dropout: &mut Option<Dropout<'_>>,
) -> DecoderTrace {
    let h = config.hidden_dim;
    let len = tgt_ids.len();
    let embed = embed_fwd(p, tgt_ids, "pos_tgt", "ln_emb_tgt", h, dropout);
    let mut y = embed.x.clone();
    let mut layers = Vec::with_capacity(config.decoder_layers);
    for i in 0..config.decoder_layers {
        let self_attn =
            attention_fwd(p, &format!("dec{i}.self"), &y, &y, len, len, h, config.heads, true);
        let mut a = self_attn.out.clone();
        let drop_self = maybe_dropout(dropout, &mut a);
        let mut res1 = y.clone();
        add_in_place(&mut res1, &a);
        let ln1 = ln_fwd(p, &format!("dec{i}.ln1"), &res1, len, h);

        let cross = attention_fwd(
            p,
            &format!("dec{i}.cross"),
            &ln1.out,
            memory,
            len,
            src_len,
            h,
            config.heads,
            false,
        );
        let mut c = cross.out.clone();
        let drop_cross = maybe_dropout(dropout, &mut c);
        let mut res2 = ln1.out.clone();
        add_in_place(&mut res2, &c);
        let ln2 = ln_fwd(p, &format!("dec{i}.ln2"), &res2, len, h);

        let ffn = ffn_fwd(p, &format!("dec{i}.ffn"), &ln2.out, len, h, config.ffn_dim);
        let mut f = ffn.out.clone();
        let drop_ffn = maybe_dropout(dropout, &mut f);
        let mut res3 = ln2.out.clone();
        add_in_place(&mut res3, &f);
        let ln3 = ln_fwd(p, &format!("dec{i}.ln3"), &res3, len, h);

        let next = ln3.out.clone();
        layers.push(DecLayerTrace {
            y_in: y,
            self_attn,
            drop_self,
            ln1,
            cross,
            drop_cross,
            ln2,
            ffn,
            drop_ffn,
            ln3,
        });
        y = next;
    }
    DecoderTrace {
        embed,
        layers,
        out: y,
    }
}

/// Returns the gradient flowing into the encoder memory.
#[allow(clippy::too_many_arguments)]
fn decoder_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    config: &ModelConfig,
    trace: &DecoderTrace,
    tgt_ids: &[u32],
    memory: &[f64],
    src_len: usize,
    dout: Vec<f64>,
) -> Vec<f64> {
    let h = config.hidden_dim;
    let len = tgt_ids.len();
    let mut dy = dout;
    let mut dmemory = vec![0.0; src_len * h];
    for (i, layer) in trace.layers.iter().enumerate().rev() {
        let dres3 = ln_bwd(p, g, &format!("dec{i}.ln3"), &layer.ln3, &dy, len, h);
        let mut df = dres3.clone();
        apply_mask(&mut df, &layer.drop_ffn);
        let mut dln2_out = dres3;
        let dffn_in = ffn_bwd(
            p,
            g,
            &format!("dec{i}.ffn"),
            &layer.ffn,
            &layer.ln2.out,
            &df,
            len,
            h,
            config.ffn_dim,
        );
        add_in_place(&mut dln2_out, &dffn_in);

        let dres2 = ln_bwd(p, g, &format!("dec{i}.ln2"), &layer.ln2, &dln2_out, len, h);
        let mut dc = dres2.clone();
        apply_mask(&mut dc, &layer.drop_cross);
        let mut dln1_out = dres2;
        let (dq_side, dmem_side) = attention_bwd(
            p,
            g,
            &format!("dec{i}.cross"),
            &layer.cross,
            &layer.ln1.out,
            memory,
            &dc,
            len,
            src_len,
            h,
            config.heads,
            false,
        );
        add_in_place(&mut dln1_out, &dq_side);
        add_in_place(&mut dmemory, &dmem_side);

        let dres1 = ln_bwd(p, g, &format!("dec{i}.ln1"), &layer.ln1, &dln1_out, len, h);
        let mut da = dres1.clone();
        apply_mask(&mut da, &layer.drop_self);
        let (dq_self, dkv_self) = attention_bwd(
            p,
            g,
            &format!("dec{i}.self"),
            &layer.self_attn,
            &layer.y_in,
            &layer.y_in,
            &da,
            len,
            len,
            h,
            config.heads,
            true,
        );
        let mut dnext = dres1;
        add_in_place(&mut dnext, &dq_self);
        add_in_place(&mut dnext, &dkv_self);
        dy = dnext;
    }
    embed_bwd(p, g, &trace.embed, tgt_ids, "pos_tgt", "ln_emb_tgt", h, dy);
    dmemory
}

/// Logits over the vocabulary via the tied embedding plus output bias.
fn output_logits(p: &DenseParams, y: &[f64], rows: usize, hidden: usize, vocab: usize) -> Vec<f64> {
    let mut logits = vec![0.0; rows * vocab];
    matmul_nt(&mut logits, y, p.get("tok_emb"), rows, hidden, vocab);
    add_bias(&mut logits, p.get("out_bias"));
    logits
}

fn output_bwd(
    p: &DenseParams,
    g: &mut Gradients,
    y: &[f64],
    dlogits: &[f64],
    rows: usize,
    hidden: usize,
    vocab: usize,
) -> Vec<f64> {
    let mut dy = vec![0.0; rows * hidden];
    matmul_nn(&mut dy, dlogits, p.get("tok_emb"), rows, vocab, hidden);
    matmul_tn(g.slice_mut("tok_emb"), dlogits, y, vocab, rows, hidden);
    bias_grad(g.slice_mut("out_bias"), dlogits);
    dy
}

// ---------------------------------------------------------------------------
// Batch-level entry points
// ---------------------------------------------------------------------------

/// Effective (unpadded) prefix lengths of an example; masks must be
/// contiguous prefixes of true values.
fn effective_lens(ex: &EncodedExample) -> Result<(usize, usize)> {
    let check = |ids: &[u32], mask: &[bool], side: &str| -> Result<usize> {
        if ids.len() != mask.len() {
            return Err(Error::Shape(format!(
                "{side} ids and mask lengths differ ({} vs {})",
                ids.len(),
                mask.len()
            )));
        }
        let len = mask.iter().take_while(|&&m| m).count();
        if mask[len..].iter().any(|&m| m) {
            return Err(Error::Shape(format!("{side} mask is not a contiguous prefix")));
        }
        if len == 0 {
            return Err(Error::Shape(format!("{side} has no unmasked tokens")));
        }
        Ok(len)
    };
    let src = check(&ex.source_ids, &ex.source_mask, "source")?;
    let tgt = check(&ex.target_ids, &ex.target_mask, "target")?;
    Ok((src, tgt))
}

fn check_ids(ex: &EncodedExample, config: &ModelConfig, src: usize, tgt: usize) -> Result<()> {
    if src > config.max_source_len || tgt > config.max_target_len {
        return Err(Error::Shape(format!(
            "example length {src}/{tgt} exceeds config {}/{}",
            config.max_source_len, config.max_target_len
        )));
    }
    for &id in ex.source_ids[..src].iter().chain(&ex.target_ids[..tgt]) {
        if id as usize >= config.vocab_size {
            return Err(Error::Shape(format!(
                "token id {id} out of range for vocab {}",
                config.vocab_size
            )));
        }
    }
    Ok(())
}

struct ExampleTrace {
    enc: EncoderTrace,
    dec: DecoderTrace,
    logits: Vec<f64>,
    src_ids: Vec<u32>,
    dec_in: Vec<u32>,
    labels: Vec<u32>,
}

fn forward_example(
    p: &DenseParams,
    config: &ModelConfig,
    ex: &EncodedExample,
    dropout: &mut Option<Dropout<'_>>,
) -> Result<Option<ExampleTrace>> {
    let (src_len, tgt_len) = effective_lens(ex)?;
    check_ids(ex, config, src_len, tgt_len)?;
    if tgt_len < 2 {
        return Ok(None); // nothing to predict
    }
    let src_ids = ex.source_ids[..src_len].to_vec();
    let dec_in = ex.target_ids[..tgt_len - 1].to_vec();
    let labels = ex.target_ids[1..tgt_len].to_vec();

    let enc = encoder_fwd(p, config, &src_ids, dropout);
    let dec = decoder_fwd(p, config, &dec_in, &enc.memory, src_len, dropout);
    let logits = output_logits(p, &dec.out, dec_in.len(), config.hidden_dim, config.vocab_size);
    Ok(Some(ExampleTrace {
        enc,
        dec,
        logits,
        src_ids,
        dec_in,
        labels,
    }))
}

/// Per-example, per-position log-distributions over the vocabulary. Row `t`
/// of an example is `log p(m_{t+1} | m_{<=t}, C)`.
pub fn forward(
    params: &ModelParameters,
    config: &ModelConfig,
    batch: &[EncodedExample],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let dense = params.dense();
    let mut out = Vec::with_capacity(batch.len());
    for ex in batch {
        let trace = forward_example(&dense, config, ex, &mut None)?;
        let mut rows = Vec::new();
        if let Some(trace) = trace {
            let v = config.vocab_size;
            for t in 0..trace.dec_in.len() {
                let mut logp = vec![0.0; v];
                log_softmax_row(&trace.logits[t * v..(t + 1) * v], &mut logp);
                rows.push(logp);
            }
        }
        out.push(rows);
    }
    Ok(out)
}

pub(crate) fn loss_sum_dense(
    dense: &DenseParams,
    config: &ModelConfig,
    batch: &[EncodedExample],
) -> Result<(f64, usize)> {
    let mut nll = 0.0;
    let mut tokens = 0usize;
    let v = config.vocab_size;
    for ex in batch {
        let Some(trace) = forward_example(dense, config, ex, &mut None)? else {
            continue;
        };
        let mut logp = vec![0.0; v];
        for (t, &label) in trace.labels.iter().enumerate() {
            log_softmax_row(&trace.logits[t * v..(t + 1) * v], &mut logp);
            nll -= logp[label as usize];
            tokens += 1;
        }
    }
    Ok((nll, tokens))
}

/// Total negative log-likelihood and non-pad token count for a batch.
pub fn loss_sum(
    params: &ModelParameters,
    config: &ModelConfig,
    batch: &[EncodedExample],
) -> Result<(f64, usize)> {
    loss_sum_dense(&params.dense(), config, batch)
}

/// Mean token-level negative log-likelihood over non-pad target positions.
pub fn loss(params: &ModelParameters, config: &ModelConfig, batch: &[EncodedExample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::data("loss of an empty batch"));
    }
    let (nll, tokens) = loss_sum(params, config, batch)?;
    if tokens == 0 {
        return Ok(0.0);
    }
    Ok(nll / tokens as f64)
}

pub(crate) fn loss_and_grad_dense(
    dense: &DenseParams,
    config: &ModelConfig,
    batch: &[EncodedExample],
    mut dropout: Option<Dropout<'_>>,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::data("loss of an empty batch"));
    }
    let mut grads = Gradients::zeros_like(dense);
    let v = config.vocab_size;
    let h = config.hidden_dim;

    // Two passes: token count first so each example's gradient carries the
    // final 1/N weight directly.
    let mut traces: Vec<ExampleTrace> = Vec::with_capacity(batch.len());
    for ex in batch {
        if let Some(trace) = forward_example(dense, config, ex, &mut dropout)? {
            traces.push(trace);
        }
    }
    let total_tokens: usize = traces.iter().map(|t| t.labels.len()).sum();
    if total_tokens == 0 {
        return Ok((0.0, grads));
    }
    let weight = 1.0 / total_tokens as f64;

    let mut nll = 0.0;
    for trace in &traces {
        let rows = trace.dec_in.len();
        let mut dlogits = vec![0.0; rows * v];
        let mut logp = vec![0.0; v];
        for (t, &label) in trace.labels.iter().enumerate() {
            let row = &trace.logits[t * v..(t + 1) * v];
            log_softmax_row(row, &mut logp);
            nll -= logp[label as usize];
            let drow = &mut dlogits[t * v..(t + 1) * v];
            for j in 0..v {
                drow[j] = logp[j].exp() * weight;
            }
            drow[label as usize] -= weight;
        }
        let dy = output_bwd(dense, &mut grads, &trace.dec.out, &dlogits, rows, h, v);
        let dmem = decoder_bwd(
            dense,
            &mut grads,
            config,
            &trace.dec,
            &trace.dec_in,
            &trace.enc.memory,
            trace.src_ids.len(),
            dy,
        );
        encoder_bwd(dense, &mut grads, config, &trace.enc, &trace.src_ids, dmem);
    }
    Ok((nll * weight, grads))
}

/// Mean loss and its gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &ModelParameters,
    config: &ModelConfig,
    batch: &[EncodedExample],
) -> Result<(f64, Gradients)> {
    loss_and_grad_dense(&params.dense(), config, batch, None)
}

pub(crate) fn loss_and_grad_train(
    params: &ModelParameters,
    config: &ModelConfig,
    batch: &[EncodedExample],
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Gradients)> {
    let dense = params.dense();
    let dropout = (config.dropout > 0.0).then_some(Dropout {
        rng,
        p: config.dropout,
    });
    loss_and_grad_dense(&dense, config, batch, dropout)
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

/// Encoder output cached once per source; decodes arbitrary prefixes.
pub struct InferenceSession<'c> {
    dense: DenseParams,
    config: &'c ModelConfig,
    memory: Vec<f64>,
    src_len: usize,
}

impl<'c> InferenceSession<'c> {
    pub fn new(
        params: &ModelParameters,
        config: &'c ModelConfig,
        source: &EncodedExample,
    ) -> Result<InferenceSession<'c>> {
        let dense = params.dense();
        let (src_len, _) = effective_lens(source)?;
        check_ids(source, config, src_len, 1)?;
        let enc = encoder_fwd(&dense, config, &source.source_ids[..src_len], &mut None);
        Ok(InferenceSession {
            dense,
            config,
            memory: enc.memory,
            src_len,
        })
    }

    pub fn max_target_len(&self) -> usize {
        self.config.max_target_len
    }

    pub fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    /// Log-distribution of the next token given the target prefix so far.
    pub fn next_token_logprobs(&self, prefix: &[u32]) -> Result<Vec<f64>> {
        if prefix.is_empty() || prefix.len() > self.config.max_target_len {
            return Err(Error::Shape(format!(
                "decode prefix length {} outside 1..={}",
                prefix.len(),
                self.config.max_target_len
            )));
        }
        let dec = decoder_fwd(
            &self.dense,
            self.config,
            prefix,
            &self.memory,
            self.src_len,
            &mut None,
        );
        let rows = prefix.len();
        let h = self.config.hidden_dim;
        let v = self.config.vocab_size;
        let logits = output_logits(
            &self.dense,
            &dec.out[(rows - 1) * h..rows * h],
            1,
            h,
            v,
        );
        let mut logp = vec![0.0; v];
        log_softmax_row(&logits, &mut logp);
        Ok(logp)
    }
}
