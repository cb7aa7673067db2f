//! Sobel edge maps and the fixed seeded feature extractor used for
//! distributional metrics. The extractor is a three-layer random-weight
//! convolutional network over the edge map with quadrant average pooling,
//! producing a 64-dimensional embedding that is deterministic in the seed.

use lddim_fvm::ScalarField2D;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MetricsError, Result};

/// Output dimension of [`embed`].
pub const EMBED_DIM: usize = 64;

const CHANNELS: [usize; 4] = [1, 8, 16, 16];
const POOL_GRID: usize = 2; // 16 channels x 2x2 pooled cells = 64

/// Fixed-dimension feature vector for one field.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEmbedding {
    pub features: Vec<f64>,
    pub extractor_seed: u64,
}

/// Magnitude of the 3x3 Sobel responses with replicate-padded borders,
/// min-max normalized to [0, 1] (all zeros for a constant field).
pub fn sobel_edges(field: &ScalarField2D) -> Result<ScalarField2D> {
    if field.nx < 3 || field.ny < 3 {
        return Err(MetricsError::InvalidParams(format!(
            "field {}x{} below the 3x3 stencil",
            field.nx, field.ny
        )));
    }
    let (nx, ny) = (field.nx as isize, field.ny as isize);
    let get = |i: isize, j: isize| field.at(i.clamp(0, nx - 1) as usize, j.clamp(0, ny - 1) as usize);
    let mut out = vec![0.0; field.len()];
    for j in 0..ny {
        for i in 0..nx {
            // paired differences cancel exactly on constant fields
            let gx = (get(i + 1, j - 1) - get(i - 1, j - 1))
                + 2.0 * (get(i + 1, j) - get(i - 1, j))
                + (get(i + 1, j + 1) - get(i - 1, j + 1));
            let gy = (get(i - 1, j + 1) - get(i - 1, j - 1))
                + 2.0 * (get(i, j + 1) - get(i, j - 1))
                + (get(i + 1, j + 1) - get(i + 1, j - 1));
            out[(j * nx + i) as usize] = gx.hypot(gy);
        }
    }
    let max = out.iter().cloned().fold(0.0_f64, f64::max);
    if max > 0.0 {
        for v in &mut out {
            *v /= max;
        }
    }
    ScalarField2D::new(field.nx, field.ny, field.dx, field.dy, out)
        .map_err(|e| MetricsError::Degenerate(e.to_string()))
}

struct ConvLayer {
    c_in: usize,
    c_out: usize,
    // [c_out][c_in][3*3]
    weights: Vec<f64>,
}

impl ConvLayer {
    fn new(c_in: usize, c_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / ((c_in * 9) as f64).sqrt();
        let weights = (0..c_out * c_in * 9)
            .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        ConvLayer { c_in, c_out, weights }
    }

    /// 3x3 convolution with replicate padding; input/output are
    /// channel-major [c][ny][nx] buffers of the same spatial extent.
    fn apply(&self, input: &[f64], nx: usize, ny: usize) -> Vec<f64> {
        let plane = nx * ny;
        let mut out = vec![0.0; self.c_out * plane];
        let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
        for co in 0..self.c_out {
            for ci in 0..self.c_in {
                let w = &self.weights[(co * self.c_in + ci) * 9..][..9];
                let src = &input[ci * plane..][..plane];
                let dst = &mut out[co * plane..][..plane];
                for j in 0..ny {
                    for i in 0..nx {
                        let mut acc = 0.0;
                        for (kidx, wv) in w.iter().enumerate() {
                            let di = (kidx % 3) as isize - 1;
                            let dj = (kidx / 3) as isize - 1;
                            let si = clamp(i as isize + di, nx);
                            let sj = clamp(j as isize + dj, ny);
                            acc += wv * src[sj * nx + si];
                        }
                        dst[j * nx + i] += acc;
                    }
                }
            }
        }
        out
    }
}

/// ψ(I): Sobel edge map passed through three fixed random conv layers
/// (tanh between layers) and averaged over a 2x2 grid of spatial cells.
pub fn embed(field: &ScalarField2D, extractor_seed: u64) -> Result<FeatureEmbedding> {
    let edges = sobel_edges(field)?;
    let (nx, ny) = (field.nx, field.ny);
    let mut rng = ChaCha8Rng::seed_from_u64(extractor_seed);
    let layers: Vec<ConvLayer> = (0..3)
        .map(|l| ConvLayer::new(CHANNELS[l], CHANNELS[l + 1], &mut rng))
        .collect();

    let mut act = edges.into_values();
    for (l, layer) in layers.iter().enumerate() {
        act = layer.apply(&act, nx, ny);
        if l + 1 < layers.len() {
            for v in &mut act {
                *v = v.tanh();
            }
        }
    }

    // quadrant averages keep coarse spatial layout in the embedding
    let plane = nx * ny;
    let mut features = vec![0.0; EMBED_DIM];
    let mut counts = vec![0usize; POOL_GRID * POOL_GRID];
    let mut cells = vec![0usize; plane];
    for j in 0..ny {
        for i in 0..nx {
            let ci = (i * POOL_GRID / nx).min(POOL_GRID - 1);
            let cj = (j * POOL_GRID / ny).min(POOL_GRID - 1);
            let cell = cj * POOL_GRID + ci;
            cells[j * nx + i] = cell;
            counts[cell] += 1;
        }
    }
    for c in 0..CHANNELS[3] {
        for (p, &cell) in cells.iter().enumerate() {
            features[c * POOL_GRID * POOL_GRID + cell] += act[c * plane + p];
        }
        for cell in 0..POOL_GRID * POOL_GRID {
            features[c * POOL_GRID * POOL_GRID + cell] /= counts[cell] as f64;
        }
    }
    Ok(FeatureEmbedding { features, extractor_seed })
}
