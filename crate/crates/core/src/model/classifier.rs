use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::context::Example;
use crate::error::{Error, Result};
use crate::ingest::tokenize;
use crate::nn::{
    attention_pool_backward, attention_pool_forward, softmax, AttnPoolCache, ConvCache,
    ConvFullWidth, Linear, ParamSet, TransformerCache, TransformerConfig, TransformerEncoder,
};

use super::embedder::{token_id, EmbeddingBackend, CLS_ID};
use super::ModelConfig;

/// Featurized example, ready for the forward pass.
#[derive(Debug, Clone)]
pub struct ModelInput {
    /// Full context embedding matrix (n × d), frozen.
    pub x_c: Array2<f64>,
    /// Context matrix padded/truncated to k1 rows.
    pub h_c: Array2<f64>,
    /// Triplet-element rows: mean embedding of person/time/location tokens.
    pub h_t: Array2<f64>,
    /// Transformer-branch token ids, CLS first.
    pub ids: Vec<usize>,
}

/// Per-example representations produced by one forward pass.
#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub h_cnn: Array1<f64>,
    pub h_bert: Array1<f64>,
    pub h_ce: Array1<f64>,
    pub h_scl: Array1<f64>,
    pub logits: Array1<f64>,
    /// Class probabilities (negative, positive); sums to 1.
    pub y_pred: [f64; 2],
}

impl ModelOutput {
    /// Positive iff the positive-class probability exceeds 0.5; exact ties
    /// go to the negative class.
    pub fn predicted_label(&self) -> u8 {
        u8::from(self.y_pred[1] > self.y_pred[0])
    }
}

/// Intermediate activations needed by the backward pass.
pub struct ForwardTrace {
    conv_caches: [ConvCache; 4],
    cnn_cat: Array1<f64>,
    h_cnn: Array1<f64>,
    h_bert: Array1<f64>,
    h_ce: Array1<f64>,
    transformer: TransformerCache,
    attn: AttnPoolCache,
}

/// Dual-branch classifier: convolutional context branch, trainable
/// transformer branch, fused softmax head, and an attention-pooled
/// unit-norm projection for the contrastive objective.
pub struct TripletClassifier {
    pub config: ModelConfig,
    conv_h2: ConvFullWidth,
    conv_h3: ConvFullWidth,
    conv_h4: ConvFullWidth,
    conv_t: ConvFullWidth,
    cnn_linear: Linear,
    transformer: TransformerEncoder,
    fuse_cnn: Linear,
    fuse_bert: Linear,
    head: Linear,
    proj_cnn: Linear,
    proj_bert: Linear,
}

impl TripletClassifier {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let transformer = TransformerEncoder::new(
            TransformerConfig {
                hidden: config.d,
                heads: config.transformer_heads,
                layers: config.transformer_layers,
                ff: config.transformer_ff,
                vocab: config.vocab,
                max_len: config.max_len,
            },
            config.seed,
        );
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let c = config.conv_channels;
        let lin_std = |fan_in: usize| (1.0 / fan_in as f64).sqrt();
        Ok(TripletClassifier {
            conv_h2: ConvFullWidth::new(c, 2, config.d, &mut rng),
            conv_h3: ConvFullWidth::new(c, 3, config.d, &mut rng),
            conv_h4: ConvFullWidth::new(c, 4, config.d, &mut rng),
            conv_t: ConvFullWidth::new(c, 3, config.d, &mut rng),
            cnn_linear: Linear::new(4 * c, config.cnn_out, lin_std(4 * c), &mut rng),
            fuse_cnn: Linear::new(config.cnn_out, config.k2, lin_std(config.cnn_out), &mut rng),
            fuse_bert: Linear::new(config.d, config.k2, lin_std(config.d), &mut rng),
            head: Linear::new(2 * config.k2, 2, lin_std(2 * config.k2), &mut rng),
            proj_cnn: Linear::new(config.cnn_out, config.k3, lin_std(config.cnn_out), &mut rng),
            proj_bert: Linear::new(config.d, config.k3, lin_std(config.d), &mut rng),
            transformer,
            config,
        })
    }

    /// Builds the model input for one example: frozen context embeddings,
    /// the padded context matrix, the triplet rows, and transformer ids.
    pub fn featurize(
        &self,
        example: &Example,
        embedder: &dyn EmbeddingBackend,
    ) -> Result<ModelInput> {
        featurize(example, embedder, &self.config)
    }

    pub fn forward(&self, input: &ModelInput) -> (ModelOutput, ForwardTrace) {
        let cfg = &self.config;
        assert_eq!(
            input.h_c.shape(),
            [cfg.k1, cfg.d],
            "H_c must be k1 x d"
        );
        assert_eq!(input.h_t.shape(), [3, cfg.d], "H_t must be 3 x d");

        let (p2, c2) = self.conv_h2.forward(&input.h_c);
        let (p3, c3) = self.conv_h3.forward(&input.h_c);
        let (p4, c4) = self.conv_h4.forward(&input.h_c);
        let (pt, ct) = self.conv_t.forward(&input.h_t);
        let mut cnn_cat = Array1::zeros(4 * cfg.conv_channels);
        for (i, part) in [&p2, &p3, &p4, &pt].iter().enumerate() {
            cnn_cat
                .slice_mut(ndarray::s![i * cfg.conv_channels..(i + 1) * cfg.conv_channels])
                .assign(part);
        }
        let h_cnn = self.cnn_linear.forward(&cnn_cat);

        let (h_bert, transformer_cache) = self.transformer.forward(&input.ids);
        assert_eq!(h_bert.len(), cfg.d, "h_bert must have the hidden width");

        let fused_cnn = self.fuse_cnn.forward(&h_cnn);
        let fused_bert = self.fuse_bert.forward(&h_bert);
        let mut h_ce = Array1::zeros(2 * cfg.k2);
        h_ce.slice_mut(ndarray::s![..cfg.k2]).assign(&fused_cnn);
        h_ce.slice_mut(ndarray::s![cfg.k2..]).assign(&fused_bert);
        let logits = self.head.forward(&h_ce);
        let probs = softmax(&logits);
        let y_pred = [probs[0], probs[1]];

        let proj_c = self.proj_cnn.forward(&h_cnn);
        let proj_b = self.proj_bert.forward(&h_bert);
        let mut proj_rows = Array2::zeros((2, cfg.k3));
        proj_rows.row_mut(0).assign(&proj_c);
        proj_rows.row_mut(1).assign(&proj_b);
        let (h_scl, attn_cache) = attention_pool_forward(&proj_rows);

        debug_assert!(y_pred.iter().all(|p| p.is_finite()));
        let output = ModelOutput {
            h_cnn: h_cnn.clone(),
            h_bert: h_bert.clone(),
            h_ce: h_ce.clone(),
            h_scl,
            logits,
            y_pred,
        };
        let trace = ForwardTrace {
            conv_caches: [c2, c3, c4, ct],
            cnn_cat,
            h_cnn,
            h_bert,
            h_ce,
            transformer: transformer_cache,
            attn: attn_cache,
        };
        (output, trace)
    }

    /// Accumulates parameter gradients from upstream gradients on the logits
    /// and (optionally) on the contrastive projection.
    pub fn backward(
        &mut self,
        input: &ModelInput,
        trace: &ForwardTrace,
        dlogits: &Array1<f64>,
        dh_scl: Option<&Array1<f64>>,
    ) {
        let k2 = self.config.k2;
        let dh_ce = self.head.backward(&trace.h_ce, dlogits);
        let mut dh_cnn = self
            .fuse_cnn
            .backward(&trace.h_cnn, &dh_ce.slice(ndarray::s![..k2]).to_owned());
        let mut dh_bert = self
            .fuse_bert
            .backward(&trace.h_bert, &dh_ce.slice(ndarray::s![k2..]).to_owned());

        if let Some(dh_scl) = dh_scl {
            let drows = attention_pool_backward(&trace.attn, dh_scl);
            dh_cnn += &self
                .proj_cnn
                .backward(&trace.h_cnn, &drows.row(0).to_owned());
            dh_bert += &self
                .proj_bert
                .backward(&trace.h_bert, &drows.row(1).to_owned());
        }

        let dcnn_cat = self.cnn_linear.backward(&trace.cnn_cat, &dh_cnn);
        let c = self.config.conv_channels;
        let slice = |i: usize| dcnn_cat.slice(ndarray::s![i * c..(i + 1) * c]).to_owned();
        // The embedding inputs are frozen, so the dx returns are dropped.
        self.conv_h2
            .backward(&input.h_c, &trace.conv_caches[0], &slice(0));
        self.conv_h3
            .backward(&input.h_c, &trace.conv_caches[1], &slice(1));
        self.conv_h4
            .backward(&input.h_c, &trace.conv_caches[2], &slice(2));
        self.conv_t
            .backward(&input.h_t, &trace.conv_caches[3], &slice(3));

        self.transformer.backward(&trace.transformer, &dh_bert);
    }
}

impl ParamSet for TripletClassifier {
    fn visit(&mut self, f: &mut dyn FnMut(&mut f64, &mut f64)) {
        self.conv_h2.visit(f);
        self.conv_h3.visit(f);
        self.conv_h4.visit(f);
        self.conv_t.visit(f);
        self.cnn_linear.visit(f);
        self.transformer.visit(f);
        self.fuse_cnn.visit(f);
        self.fuse_bert.visit(f);
        self.head.visit(f);
        self.proj_cnn.visit(f);
        self.proj_bert.visit(f);
    }
}

/// Locates a multi-token needle in the context (exact token match first,
/// then case-insensitive) and returns its row indices.
fn locate_tokens(context: &[String], needle: &[String]) -> Option<Vec<usize>> {
    if needle.is_empty() || needle.len() > context.len() {
        return None;
    }
    let find = |eq: &dyn Fn(&str, &str) -> bool| -> Option<Vec<usize>> {
        (0..=context.len() - needle.len()).find_map(|start| {
            needle
                .iter()
                .enumerate()
                .all(|(i, n)| eq(&context[start + i], n))
                .then(|| (start..start + needle.len()).collect())
        })
    };
    find(&|a, b| a == b).or_else(|| find(&|a, b| a.eq_ignore_ascii_case(b)))
}

pub(crate) fn featurize(
    example: &Example,
    embedder: &dyn EmbeddingBackend,
    config: &ModelConfig,
) -> Result<ModelInput> {
    if example.context.is_empty() {
        return Err(Error::Model("example has an empty context".into()));
    }
    if embedder.dim() != config.d {
        return Err(Error::Model(format!(
            "embedding dim {} does not match configured d = {}",
            embedder.dim(),
            config.d
        )));
    }
    let x_c = embedder.embed(&example.context);

    let mut h_t = Array2::zeros((3, config.d));
    let elements = [&example.person, &example.time, &example.location];
    for (row, element) in elements.iter().enumerate() {
        let needle = tokenize(element);
        let rows = locate_tokens(&example.context, &needle).ok_or_else(|| {
            Error::Model(format!(
                "triplet element {:?} not found in the context",
                element
            ))
        })?;
        let mut mean = Array1::zeros(config.d);
        for &r in &rows {
            mean += &x_c.row(r);
        }
        mean /= rows.len() as f64;
        h_t.row_mut(row).assign(&mean);
    }

    let mut h_c = Array2::zeros((config.k1, config.d));
    let keep = x_c.nrows().min(config.k1);
    h_c.slice_mut(ndarray::s![..keep, ..])
        .assign(&x_c.slice(ndarray::s![..keep, ..]));

    let seq = example.input_sequence();
    let mut ids = Vec::with_capacity(seq.len() + 1);
    ids.push(CLS_ID);
    for token in &seq {
        ids.push(token_id(token, config.vocab));
    }
    ids.truncate(config.max_len);

    Ok(ModelInput { x_c, h_c, h_t, ids })
}
