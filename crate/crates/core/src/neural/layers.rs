//! The layers the tagger is assembled from: GRU cells, width-3
//! character convolutions with residual connections, affine maps, and
//! the softmax cross-entropy criterion.
//!
//! Each layer exists once, as a tape composition; the standalone
//! functions (`gru_cell`, `char_resnet`, `linear`, ...) run the same
//! composition on a scratch tape.

use crate::embeddings::CharVocab;
use crate::error::{Error, Result};
use crate::neural::tape::{NodeRef, Tape};
use crate::neural::{ParameterStore, Tensor};
use crate::rng::ChaCha8Rng;

/// Words longer than this keep their first and last 16 characters.
pub const MAX_WORD_CHARS: usize = 32;

/// Owned parameters of one GRU direction.
///
/// Gate order is the standard reset-before-candidate formulation:
/// z = sigmoid(W_z x + U_z h + b_z), r = sigmoid(W_r x + U_r h + b_r),
/// h~ = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * h~.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

const GRU_FIELDS: [&str; 9] =
    ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GruParams {
            input_dim,
            hidden_dim,
            w_z: Tensor::zeros(vec![hidden_dim, input_dim]),
            w_r: Tensor::zeros(vec![hidden_dim, input_dim]),
            w_h: Tensor::zeros(vec![hidden_dim, input_dim]),
            u_z: Tensor::zeros(vec![hidden_dim, hidden_dim]),
            u_r: Tensor::zeros(vec![hidden_dim, hidden_dim]),
            u_h: Tensor::zeros(vec![hidden_dim, hidden_dim]),
            b_z: Tensor::zeros(vec![hidden_dim]),
            b_r: Tensor::zeros(vec![hidden_dim]),
            b_h: Tensor::zeros(vec![hidden_dim]),
        }
    }

    pub fn seeded(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        p.w_z = Tensor::xavier(vec![hidden_dim, input_dim], rng);
        p.w_r = Tensor::xavier(vec![hidden_dim, input_dim], rng);
        p.w_h = Tensor::xavier(vec![hidden_dim, input_dim], rng);
        p.u_z = Tensor::xavier(vec![hidden_dim, hidden_dim], rng);
        p.u_r = Tensor::xavier(vec![hidden_dim, hidden_dim], rng);
        p.u_h = Tensor::xavier(vec![hidden_dim, hidden_dim], rng);
        p
    }

    fn field(&self, name: &str) -> &Tensor {
        match name {
            "w_z" => &self.w_z,
            "w_r" => &self.w_r,
            "w_h" => &self.w_h,
            "u_z" => &self.u_z,
            "u_r" => &self.u_r,
            "u_h" => &self.u_h,
            "b_z" => &self.b_z,
            "b_r" => &self.b_r,
            "b_h" => &self.b_h,
            _ => unreachable!("unknown GRU field"),
        }
    }

    /// Insert clones of all nine tensors into `store` under
    /// `prefix.<name>`.
    pub fn register(&self, store: &mut ParameterStore, prefix: &str) -> Result<()> {
        for name in GRU_FIELDS {
            store.insert(format!("{prefix}.{name}"), self.field(name).clone())?;
        }
        Ok(())
    }

    /// Register freshly initialized GRU parameters directly in the
    /// store, using the store's per-path streams.
    pub fn register_seeded(
        store: &mut ParameterStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
    ) -> Result<()> {
        for name in ["w_z", "w_r", "w_h"] {
            store.register_xavier(&format!("{prefix}.{name}"), vec![hidden_dim, input_dim])?;
        }
        for name in ["u_z", "u_r", "u_h"] {
            store.register_xavier(&format!("{prefix}.{name}"), vec![hidden_dim, hidden_dim])?;
        }
        for name in ["b_z", "b_r", "b_h"] {
            store.register_zeros(&format!("{prefix}.{name}"), vec![hidden_dim])?;
        }
        Ok(())
    }
}

/// Tape handles for one GRU direction's parameters.
#[derive(Debug, Clone, Copy)]
pub struct GruBinding {
    pub w_z: NodeRef,
    pub w_r: NodeRef,
    pub w_h: NodeRef,
    pub u_z: NodeRef,
    pub u_r: NodeRef,
    pub u_h: NodeRef,
    pub b_z: NodeRef,
    pub b_r: NodeRef,
    pub b_h: NodeRef,
}

impl GruBinding {
    pub fn from_store(tape: &mut Tape, store: &ParameterStore, prefix: &str) -> Result<Self> {
        Ok(GruBinding {
            w_z: tape.param(store, &format!("{prefix}.w_z"))?,
            w_r: tape.param(store, &format!("{prefix}.w_r"))?,
            w_h: tape.param(store, &format!("{prefix}.w_h"))?,
            u_z: tape.param(store, &format!("{prefix}.u_z"))?,
            u_r: tape.param(store, &format!("{prefix}.u_r"))?,
            u_h: tape.param(store, &format!("{prefix}.u_h"))?,
            b_z: tape.param(store, &format!("{prefix}.b_z"))?,
            b_r: tape.param(store, &format!("{prefix}.b_r"))?,
            b_h: tape.param(store, &format!("{prefix}.b_h"))?,
        })
    }

    /// One GRU step on the tape.
    pub fn step(&self, tape: &mut Tape, x: NodeRef, h_prev: NodeRef) -> Result<NodeRef> {
        let zx = tape.matvec(self.w_z, x)?;
        let zh = tape.matvec(self.u_z, h_prev)?;
        let z_pre = tape.add(zx, zh)?;
        let z_pre = tape.add(z_pre, self.b_z)?;
        let z = tape.sigmoid(z_pre);

        let rx = tape.matvec(self.w_r, x)?;
        let rh = tape.matvec(self.u_r, h_prev)?;
        let r_pre = tape.add(rx, rh)?;
        let r_pre = tape.add(r_pre, self.b_r)?;
        let r = tape.sigmoid(r_pre);

        let gated = tape.mul(r, h_prev)?;
        let cx = tape.matvec(self.w_h, x)?;
        let ch = tape.matvec(self.u_h, gated)?;
        let c_pre = tape.add(cx, ch)?;
        let c_pre = tape.add(c_pre, self.b_h)?;
        let candidate = tape.tanh(c_pre);

        // (1 - z) * h_prev + z * candidate, written as
        // h_prev + z * (candidate - h_prev).
        let delta = tape.sub(candidate, h_prev)?;
        let scaled = tape.mul(z, delta)?;
        tape.add(h_prev, scaled)
    }
}

/// One GRU update as a plain function over vectors.
pub fn gru_cell(x: &[f64], h_prev: &[f64], params: &GruParams) -> Result<Vec<f64>> {
    if x.len() != params.input_dim || h_prev.len() != params.hidden_dim {
        return Err(Error::Shape(format!(
            "gru_cell expects input {} and hidden {}, got {} and {}",
            params.input_dim,
            params.hidden_dim,
            x.len(),
            h_prev.len()
        )));
    }
    let mut store = ParameterStore::new(0);
    params.register(&mut store, "gru")?;
    let mut tape = Tape::new();
    let binding = GruBinding::from_store(&mut tape, &store, "gru")?;
    let xn = tape.input(x);
    let hn = tape.input(h_prev);
    let out = binding.step(&mut tape, xn, hn)?;
    Ok(tape.value(out).to_vec())
}

/// Run forward and backward GRUs over a sequence of (already bound)
/// input nodes; position `i` carries the forward state after
/// `x_0..x_i` concatenated with the backward state after `x_n..x_i`.
pub fn bidirectional_on_tape(
    tape: &mut Tape,
    xs: &[NodeRef],
    fwd: &GruBinding,
    bwd: &GruBinding,
    hidden_dim: usize,
) -> Result<Vec<NodeRef>> {
    if xs.is_empty() {
        return Err(Error::Arity("bidirectional_encode needs a non-empty sequence".into()));
    }
    let zero = tape.input(&vec![0.0; hidden_dim]);
    let mut fwd_states = Vec::with_capacity(xs.len());
    let mut h = zero;
    for &x in xs {
        h = fwd.step(tape, x, h)?;
        fwd_states.push(h);
    }
    let mut bwd_states = vec![zero; xs.len()];
    let mut h = zero;
    for (i, &x) in xs.iter().enumerate().rev() {
        h = bwd.step(tape, x, h)?;
        bwd_states[i] = h;
    }
    fwd_states
        .into_iter()
        .zip(bwd_states)
        .map(|(f, b)| tape.concat(&[f, b]))
        .collect()
}

/// Bidirectional GRU encoding as a plain function over vectors.
pub fn bidirectional_encode(
    xs: &[Vec<f64>],
    fwd: &GruParams,
    bwd: &GruParams,
) -> Result<Vec<Vec<f64>>> {
    if fwd.hidden_dim != bwd.hidden_dim || fwd.input_dim != bwd.input_dim {
        return Err(Error::Shape("forward/backward GRU dimensions must agree".into()));
    }
    let mut store = ParameterStore::new(0);
    fwd.register(&mut store, "fwd")?;
    bwd.register(&mut store, "bwd")?;
    let mut tape = Tape::new();
    let fb = GruBinding::from_store(&mut tape, &store, "fwd")?;
    let bb = GruBinding::from_store(&mut tape, &store, "bwd")?;
    let nodes: Vec<NodeRef> = xs.iter().map(|x| tape.input(x)).collect();
    let out = bidirectional_on_tape(&mut tape, &nodes, &fb, &bb, fwd.hidden_dim)?;
    Ok(out.into_iter().map(|n| tape.value(n).to_vec()).collect())
}

/// Owned parameters of one residual convolution block: two width-3
/// kernels over the same channel count, so the residual addition is
/// well-defined.
#[derive(Debug, Clone, PartialEq)]
pub struct ResNetBlockParams {
    pub channels: usize,
    pub kernel1: Tensor,
    pub bias1: Tensor,
    pub kernel2: Tensor,
    pub bias2: Tensor,
}

impl ResNetBlockParams {
    pub fn zeros(channels: usize) -> Self {
        ResNetBlockParams {
            channels,
            kernel1: Tensor::zeros(vec![channels, channels, 3]),
            bias1: Tensor::zeros(vec![channels]),
            kernel2: Tensor::zeros(vec![channels, channels, 3]),
            bias2: Tensor::zeros(vec![channels]),
        }
    }

    pub fn seeded(channels: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(channels);
        p.kernel1 = Tensor::xavier(vec![channels, channels, 3], rng);
        p.kernel2 = Tensor::xavier(vec![channels, channels, 3], rng);
        p
    }

    pub fn register(&self, store: &mut ParameterStore, prefix: &str) -> Result<()> {
        store.insert(format!("{prefix}.conv1.kernel"), self.kernel1.clone())?;
        store.insert(format!("{prefix}.conv1.bias"), self.bias1.clone())?;
        store.insert(format!("{prefix}.conv2.kernel"), self.kernel2.clone())?;
        store.insert(format!("{prefix}.conv2.bias"), self.bias2.clone())?;
        Ok(())
    }

    pub fn register_seeded(store: &mut ParameterStore, prefix: &str, channels: usize) -> Result<()> {
        store.register_xavier(&format!("{prefix}.conv1.kernel"), vec![channels, channels, 3])?;
        store.register_zeros(&format!("{prefix}.conv1.bias"), vec![channels])?;
        store.register_xavier(&format!("{prefix}.conv2.kernel"), vec![channels, channels, 3])?;
        store.register_zeros(&format!("{prefix}.conv2.bias"), vec![channels])?;
        Ok(())
    }
}

/// Tape handles for one residual block.
#[derive(Debug, Clone, Copy)]
pub struct ResNetBlockBinding {
    pub kernel1: NodeRef,
    pub bias1: NodeRef,
    pub kernel2: NodeRef,
    pub bias2: NodeRef,
}

impl ResNetBlockBinding {
    pub fn from_store(tape: &mut Tape, store: &ParameterStore, prefix: &str) -> Result<Self> {
        Ok(ResNetBlockBinding {
            kernel1: tape.param(store, &format!("{prefix}.conv1.kernel"))?,
            bias1: tape.param(store, &format!("{prefix}.conv1.bias"))?,
            kernel2: tape.param(store, &format!("{prefix}.conv2.kernel"))?,
            bias2: tape.param(store, &format!("{prefix}.conv2.bias"))?,
        })
    }

    /// relu(conv1(x)) -> conv2 -> + x -> relu.
    pub fn apply(&self, tape: &mut Tape, x: NodeRef) -> Result<NodeRef> {
        let c1 = tape.conv1d_same(x, self.kernel1, self.bias1)?;
        let a1 = tape.relu(c1);
        let c2 = tape.conv1d_same(a1, self.kernel2, self.bias2)?;
        let res = tape.add(c2, x)?;
        Ok(tape.relu(res))
    }
}

/// Character indices for a word: boundary sentinels on each side, with
/// words longer than [`MAX_WORD_CHARS`] truncated centrally (first 16
/// and last 16 characters kept).
pub fn char_indices(word: &str, vocab: &CharVocab) -> Vec<usize> {
    let chars: Vec<char> = word.chars().collect();
    let kept: Vec<char> = if chars.len() > MAX_WORD_CHARS {
        let half = MAX_WORD_CHARS / 2;
        chars[..half]
            .iter()
            .chain(chars[chars.len() - half..].iter())
            .copied()
            .collect()
    } else {
        chars
    };
    let mut indices = Vec::with_capacity(kept.len() + 2);
    indices.push(vocab.bow_index());
    indices.extend(kept.iter().map(|&c| vocab.index_of(c)));
    indices.push(vocab.eow_index());
    indices
}

/// Character-level word vector on the tape: embed the characters to an
/// (L, c) matrix, apply the residual blocks, max-pool over positions.
pub fn char_word_vector_on_tape(
    tape: &mut Tape,
    word: &str,
    vocab: &CharVocab,
    char_emb: NodeRef,
    blocks: &[ResNetBlockBinding],
) -> Result<NodeRef> {
    let indices = char_indices(word, vocab);
    let mut x = tape.gather_rows(char_emb, &indices)?;
    for block in blocks {
        x = block.apply(tape, x)?;
    }
    tape.max_over_rows(x)
}

/// Character ResNet as a plain function: embeddings matrix is
/// `(vocab_len, channels)`.
pub fn char_resnet(
    word: &str,
    char_emb: &Tensor,
    vocab: &CharVocab,
    blocks: &[ResNetBlockParams],
) -> Result<Vec<f64>> {
    let mut store = ParameterStore::new(0);
    store.insert("char_emb", char_emb.clone())?;
    for (i, block) in blocks.iter().enumerate() {
        block.register(&mut store, &format!("resnet.{i}"))?;
    }
    let mut tape = Tape::new();
    let emb = tape.param(&store, "char_emb")?;
    let bindings: Vec<ResNetBlockBinding> = (0..blocks.len())
        .map(|i| ResNetBlockBinding::from_store(&mut tape, &store, &format!("resnet.{i}")))
        .collect::<Result<_>>()?;
    let out = char_word_vector_on_tape(&mut tape, word, vocab, emb, &bindings)?;
    Ok(tape.value(out).to_vec())
}

/// Affine map `W x + b` as a plain function.
pub fn linear(x: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    let mut store = ParameterStore::new(0);
    store.insert("w", w.clone())?;
    store.insert("b", b.clone())?;
    let mut tape = Tape::new();
    let wn = tape.param(&store, "w")?;
    let bn = tape.param(&store, "b")?;
    let xn = tape.input(x);
    let y = tape.matvec(wn, xn)?;
    let y = tape.add(y, bn)?;
    Ok(tape.value(y).to_vec())
}

/// Stable softmax cross-entropy. Returns the loss and the softmax
/// probabilities (the gradient is `probs - onehot(gold)`).
pub(crate) fn softmax_xent_forward(logits: &[f64], gold: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|&e| e / z).collect();
    let loss = z.ln() - (logits[gold] - max);
    (loss, probs)
}

/// Softmax cross-entropy loss and its gradient with respect to the
/// logits.
pub fn softmax_xent(logits: &[f64], gold: usize) -> Result<(f64, Vec<f64>)> {
    if gold >= logits.len() {
        return Err(Error::IndexOutOfRange { index: gold, len: logits.len() });
    }
    let (loss, mut probs) = softmax_xent_forward(logits, gold);
    probs[gold] -= 1.0;
    Ok((loss, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn gru_zero_params_zero_inputs_gives_zero() {
        let p = GruParams::zeros(3, 2);
        let h = gru_cell(&[0.0; 3], &[0.0; 2], &p).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn gru_zero_params_halves_hidden_state() {
        // z = sigmoid(0) = 1/2 and the candidate is 0, so h' = h/2.
        let p = GruParams::zeros(3, 2);
        let h = gru_cell(&[0.5, -0.25, 1.0], &[0.8, -0.4], &p).unwrap();
        assert_eq!(h, vec![0.4, -0.2]);
    }

    #[test]
    fn gru_shape_mismatch_errors() {
        let p = GruParams::zeros(3, 2);
        assert!(gru_cell(&[0.0; 4], &[0.0; 2], &p).is_err());
        assert!(gru_cell(&[0.0; 3], &[0.0; 3], &p).is_err());
    }

    #[test]
    fn gru_output_bounded_by_hidden_and_one() {
        let mut rng = rng_from_seed(2);
        let p = GruParams::seeded(4, 3, &mut rng);
        let h_prev = [0.3, -1.7, 0.9];
        let h = gru_cell(&[2.0, -3.0, 0.5, 1.0], &h_prev, &p).unwrap();
        for (hi, hp) in h.iter().zip(h_prev) {
            assert!(hi.abs() <= hp.abs().max(1.0) + 1e-12);
        }
    }

    #[test]
    fn bidirectional_length_one_is_both_cells() {
        let mut rng = rng_from_seed(3);
        let fwd = GruParams::seeded(3, 2, &mut rng);
        let bwd = GruParams::seeded(3, 2, &mut rng);
        let x = vec![0.4, -0.2, 0.9];
        let out = bidirectional_encode(&[x.clone()], &fwd, &bwd).unwrap();
        assert_eq!(out.len(), 1);
        let f = gru_cell(&x, &[0.0, 0.0], &fwd).unwrap();
        let b = gru_cell(&x, &[0.0, 0.0], &bwd).unwrap();
        let expected: Vec<f64> = f.into_iter().chain(b).collect();
        assert_eq!(out[0], expected);
    }

    #[test]
    fn bidirectional_reversal_swaps_and_reverses_halves() {
        let mut rng = rng_from_seed(5);
        let p = GruParams::seeded(3, 2, &mut rng);
        let q = GruParams::seeded(3, 2, &mut rng);
        let xs: Vec<Vec<f64>> = vec![
            vec![0.1, 0.2, -0.3],
            vec![-0.4, 0.5, 0.6],
            vec![0.7, -0.8, 0.9],
        ];
        let forward_run = bidirectional_encode(&xs, &p, &q).unwrap();
        let reversed: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let reversed_run = bidirectional_encode(&reversed, &q, &p).unwrap();
        let n = xs.len();
        for i in 0..n {
            let (f_half, b_half) = forward_run[n - 1 - i].split_at(2);
            let swapped: Vec<f64> = b_half.iter().chain(f_half.iter()).copied().collect();
            assert_eq!(reversed_run[i], swapped);
        }
    }

    #[test]
    fn bidirectional_empty_sequence_errors() {
        let p = GruParams::zeros(3, 2);
        assert!(matches!(
            bidirectional_encode(&[], &p, &p.clone()),
            Err(Error::Arity(_))
        ));
    }

    #[test]
    fn char_resnet_zero_kernels_is_relu_of_maxpool() {
        // With zero kernels each block is relu(x + 0) = relu(x), so the
        // output is the column max of relu(embeddings).
        let vocab = CharVocab::build(["ab"]);
        let c = 3;
        let mut rng = rng_from_seed(7);
        let emb = Tensor::xavier(vec![vocab.len(), c], &mut rng);
        let blocks = vec![ResNetBlockParams::zeros(c), ResNetBlockParams::zeros(c)];
        let out = char_resnet("ab", &emb, &vocab, &blocks).unwrap();

        let indices = char_indices("ab", &vocab);
        let mut expected = vec![0.0_f64; c];
        for j in 0..c {
            let best = indices
                .iter()
                .map(|&r| emb.data()[r * c + j].max(0.0))
                .fold(f64::NEG_INFINITY, f64::max);
            expected[j] = best;
        }
        assert_eq!(out, expected);
    }

    #[test]
    fn char_resnet_single_char_word_is_well_defined() {
        let vocab = CharVocab::build(["x"]);
        let mut rng = rng_from_seed(8);
        let emb = Tensor::xavier(vec![vocab.len(), 4], &mut rng);
        let blocks = vec![ResNetBlockParams::seeded(4, &mut rng)];
        let out = char_resnet("x", &emb, &vocab, &blocks).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn char_resnet_unknown_chars_fall_back_to_unk() {
        let vocab = CharVocab::build(["ab"]);
        let mut rng = rng_from_seed(9);
        let emb = Tensor::xavier(vec![vocab.len(), 3], &mut rng);
        let blocks = vec![ResNetBlockParams::seeded(3, &mut rng)];
        // Every unknown word of the same length maps to the same
        // index sequence, hence the same output.
        let a = char_resnet("ZZ", &emb, &vocab, &blocks).unwrap();
        let b = char_resnet("QQ", &emb, &vocab, &blocks).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn char_indices_truncates_centrally() {
        let vocab = CharVocab::build(["abcdefghijklmnopqrstuvwxyz0123456789"]);
        let long: String = "abcdefghijklmnopqrstuvwxyz0123456789".repeat(2);
        let idx = char_indices(&long, &vocab);
        assert_eq!(idx.len(), MAX_WORD_CHARS + 2);
        assert_eq!(idx[0], vocab.bow_index());
        assert_eq!(idx[idx.len() - 1], vocab.eow_index());
        // First 16 chars of the word survive after the BOW sentinel.
        assert_eq!(idx[1], vocab.index_of('a'));
        assert_eq!(idx[16], vocab.index_of('p'));
        // ...and the last 16 before the EOW sentinel.
        assert_eq!(idx[idx.len() - 2], vocab.index_of('9'));
    }

    #[test]
    fn linear_identity_and_bias() {
        let w = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = Tensor::vector(vec![0.0, 0.0]);
        assert_eq!(linear(&[3.0, -4.0], &w, &b).unwrap(), vec![3.0, -4.0]);

        let b = Tensor::vector(vec![0.5, -1.5]);
        assert_eq!(linear(&[0.0, 0.0], &w, &b).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn softmax_xent_uniform_logits_is_ln_k() {
        for k in [2usize, 3, 7] {
            let logits = vec![0.25; k];
            let (loss, _) = softmax_xent(&logits, 0).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_xent_grad_sums_to_zero() {
        let logits = [1.5, -0.5, 2.0, 0.0];
        let (_, grad) = softmax_xent(&logits, 2).unwrap();
        assert!(grad.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn softmax_xent_shift_invariance() {
        let logits = [0.3, -1.2, 4.0];
        let shifted: Vec<f64> = logits.iter().map(|l| l + 123.456).collect();
        let (a, _) = softmax_xent(&logits, 1).unwrap();
        let (b, _) = softmax_xent(&shifted, 1).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn softmax_xent_gold_out_of_range() {
        assert!(matches!(
            softmax_xent(&[1.0, 2.0], 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
