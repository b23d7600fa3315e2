//! Sparse binary features and hashed tile coding.
//!
//! A [`SparseFeatures`] value stands for a binary vector of length
//! `dimension` that is 1 exactly at `indices`. The [`TileCoder`] produces
//! these for states (`x_s`) and state-action pairs (`phi_{s,a}`) by laying
//! `num_tilings` offset grids over the normalised state box and hashing every
//! active tile into `hash_size` buckets. An optional bias feature that is
//! always 1 sits at index `hash_size`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Active indices of a high-dimensional binary vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseFeatures {
    indices: Vec<usize>,
    dimension: usize,
}

impl SparseFeatures {
    /// Builds a feature vector from strictly increasing indices below `dimension`.
    pub fn new(indices: Vec<usize>, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidFeatures("dimension must be positive".into()));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFeatures(format!(
                "indices must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= dimension {
                return Err(Error::InvalidFeatures(format!(
                    "index {last} out of range for dimension {dimension}"
                )));
            }
        }
        Ok(Self { indices, dimension })
    }

    /// Sorts and deduplicates `indices` before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, dimension: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, dimension)
    }

    /// One-hot vector with a single active index.
    pub fn one_hot(index: usize, dimension: usize) -> Result<Self> {
        Self::new(vec![index], dimension)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Unchecked dot product; callers guarantee `weights.len() == dimension`.
    #[inline]
    pub fn dot(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.dimension);
        self.indices.iter().map(|&i| weights[i]).sum()
    }

    /// Dense 0/1 expansion, mostly useful for small tabular problems.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &i in &self.indices {
            out[i] = 1.0;
        }
        out
    }
}

/// Sum of `weights` over the active indices of `features`.
pub fn sparse_dot(features: &SparseFeatures, weights: &[f64]) -> Result<f64> {
    if weights.len() != features.dimension {
        return Err(Error::DimensionMismatch {
            expected: features.dimension,
            actual: weights.len(),
        });
    }
    Ok(features.dot(weights))
}

/// `weights[i] += scale` for every active index `i`.
pub fn sparse_axpy(scale: f64, features: &SparseFeatures, weights: &mut [f64]) -> Result<()> {
    if weights.len() != features.dimension {
        return Err(Error::DimensionMismatch {
            expected: features.dimension,
            actual: weights.len(),
        });
    }
    for &i in &features.indices {
        weights[i] += scale;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TileCoderConfig {
    pub num_tilings: usize,
    pub tiles_per_dim: usize,
    pub hash_size: usize,
    pub state_lows: Vec<f64>,
    pub state_highs: Vec<f64>,
    pub include_bias: bool,
}

impl Default for TileCoderConfig {
    fn default() -> Self {
        Self {
            num_tilings: 10,
            tiles_per_dim: 10,
            hash_size: 1_000_000,
            state_lows: Vec::new(),
            state_highs: Vec::new(),
            include_bias: true,
        }
    }
}

impl TileCoderConfig {
    /// Default coder over the given state box.
    pub fn for_bounds(lows: Vec<f64>, highs: Vec<f64>) -> Self {
        Self {
            state_lows: lows,
            state_highs: highs,
            ..Self::default()
        }
    }

    /// Length of every encoded vector.
    pub fn dimension(&self) -> usize {
        self.hash_size + usize::from(self.include_bias)
    }

    /// Number of active indices in every encoding.
    pub fn active_features(&self) -> usize {
        self.num_tilings + usize::from(self.include_bias)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tilings == 0 || self.tiles_per_dim == 0 {
            return Err(Error::Config("num_tilings and tiles_per_dim must be positive".into()));
        }
        if self.hash_size < self.num_tilings {
            return Err(Error::Config(format!(
                "hash_size {} cannot hold {} tilings",
                self.hash_size, self.num_tilings
            )));
        }
        if self.state_lows.is_empty() || self.state_lows.len() != self.state_highs.len() {
            return Err(Error::Config(format!(
                "state bounds must be non-empty and equal length ({} lows, {} highs)",
                self.state_lows.len(),
                self.state_highs.len()
            )));
        }
        for (lo, hi) in self.state_lows.iter().zip(&self.state_highs) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("bad state interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

const HASH_SEED: u64 = 0x243F_6A88_85A3_08D3;
const NO_ACTION: u64 = u64::MAX;

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seedless hash of a word sequence: each word is folded in with an odd
/// multiplier and passed through the splitmix64 finalizer. Stable across
/// platforms and process restarts.
#[inline]
pub(crate) fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(HASH_SEED, |h, &w| fold_word(h, w))
}

#[inline]
fn fold_word(h: u64, w: u64) -> u64 {
    mix64(h ^ w.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Maps a 64-bit hash uniformly onto `0..n` by a widening multiply.
#[inline]
fn bucket(h: u64, n: usize) -> usize {
    ((u128::from(h) * n as u128) >> 64) as usize
}

/// Integer tile coordinates of one state in every tiling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TileCoordinates {
    dims: usize,
    coords: Vec<i64>,
    /// Per-tiling hash of `[k, coords...]`, shared by every action tag.
    keys: Vec<u64>,
}

impl TileCoordinates {
    pub fn num_tilings(&self) -> usize {
        self.coords.len() / self.dims
    }

    /// Coordinates of the active tile in tiling `k`.
    pub fn tiling(&self, k: usize) -> &[i64] {
        &self.coords[k * self.dims..(k + 1) * self.dims]
    }
}

/// Hashed tile coder. Tiling `k` is shifted by `k / num_tilings` of a tile
/// width along every dimension; states outside the configured box are
/// clipped onto it first.
#[derive(Debug, Clone)]
pub struct TileCoder {
    cfg: TileCoderConfig,
    scale: Vec<f64>,
}

impl TileCoder {
    pub fn new(cfg: TileCoderConfig) -> Result<Self> {
        cfg.validate()?;
        let scale = cfg
            .state_lows
            .iter()
            .zip(&cfg.state_highs)
            .map(|(lo, hi)| cfg.tiles_per_dim as f64 / (hi - lo))
            .collect();
        Ok(Self { cfg, scale })
    }

    pub fn config(&self) -> &TileCoderConfig {
        &self.cfg
    }

    pub fn dimension(&self) -> usize {
        self.cfg.dimension()
    }

    pub fn active_features(&self) -> usize {
        self.cfg.active_features()
    }

    pub fn bias_index(&self) -> Option<usize> {
        self.cfg.include_bias.then_some(self.cfg.hash_size)
    }

    /// Tile coordinates of `state` in every tiling.
    pub fn coordinates(&self, state: &[f64]) -> Result<TileCoordinates> {
        let mut out = TileCoordinates::default();
        self.coordinates_into(state, &mut out)?;
        Ok(out)
    }

    /// [`Self::coordinates`] reusing the buffers of `out`.
    pub fn coordinates_into(&self, state: &[f64], out: &mut TileCoordinates) -> Result<()> {
        let dims = self.cfg.state_lows.len();
        if state.len() != dims {
            return Err(Error::Config(format!(
                "state has {} dimensions, tile coder expects {dims}",
                state.len()
            )));
        }
        let n = self.cfg.num_tilings;
        out.dims = dims;
        out.coords.clear();
        out.keys.clear();
        for k in 0..n {
            let offset = k as f64 / n as f64;
            let mut h = hash_words(&[k as u64]);
            for (d, &x) in state.iter().enumerate() {
                let lo = self.cfg.state_lows[d];
                let hi = self.cfg.state_highs[d];
                let clipped = if x.is_nan() { lo } else { x.clamp(lo, hi) };
                let scaled = (clipped - lo) * self.scale[d];
                // Non-negative, so truncation is the floor.
                let c = (scaled + offset) as i64;
                out.coords.push(c);
                h = fold_word(h, c as u64);
            }
            out.keys.push(h);
        }
        Ok(())
    }

    /// Hashes precomputed coordinates, optionally tagged with an action id.
    pub fn encode_coordinates(&self, coords: &TileCoordinates, action: Option<usize>) -> SparseFeatures {
        let mut out = SparseFeatures { indices: Vec::with_capacity(coords.keys.len() + 1), dimension: 0 };
        self.encode_into(coords, action, &mut out);
        out
    }

    /// [`Self::encode_coordinates`] reusing the index buffer of `out`.
    pub fn encode_into(&self, coords: &TileCoordinates, action: Option<usize>, out: &mut SparseFeatures) {
        let hash_size = self.cfg.hash_size;
        let tag = action.map_or(NO_ACTION, |a| a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let indices = &mut out.indices;
        indices.clear();
        for &key in &coords.keys {
            let mut idx = bucket(mix64(key ^ tag), hash_size);
            // Linear probing keeps the arity fixed when two tilings of the
            // same encoding land in one bucket.
            while indices.contains(&idx) {
                idx = (idx + 1) % hash_size;
            }
            indices.push(idx);
        }
        if self.cfg.include_bias {
            indices.push(hash_size);
        }
        indices.sort_unstable();
        out.dimension = self.dimension();
    }

    /// State features `x_s`.
    pub fn encode_state(&self, state: &[f64]) -> Result<SparseFeatures> {
        Ok(self.encode_coordinates(&self.coordinates(state)?, None))
    }

    /// State-action features `phi_{s,a}`.
    pub fn encode_state_action(&self, state: &[f64], action: usize) -> Result<SparseFeatures> {
        Ok(self.encode_coordinates(&self.coordinates(state)?, Some(action)))
    }

    /// `phi_{s,a}` for every `a < num_actions`, sharing one coordinate pass.
    pub fn encode_all_actions(&self, state: &[f64], num_actions: usize) -> Result<Vec<SparseFeatures>> {
        let coords = self.coordinates(state)?;
        Ok((0..num_actions)
            .map(|a| self.encode_coordinates(&coords, Some(a)))
            .collect())
    }
}

/// Tile coding for a tabular problem: one-hot state and state-action vectors.
#[derive(Debug, Clone, Copy)]
pub struct TabularEncoding {
    pub num_states: usize,
    pub num_actions: usize,
}

impl TabularEncoding {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self { num_states, num_actions }
    }

    pub fn state(&self, s: usize) -> SparseFeatures {
        SparseFeatures::one_hot(s, self.num_states).expect("state id in range")
    }

    pub fn state_action(&self, s: usize, a: usize) -> SparseFeatures {
        SparseFeatures::one_hot(s * self.num_actions + a, self.num_states * self.num_actions)
            .expect("state-action id in range")
    }

    /// `x_s` for every state.
    pub fn state_table(&self) -> Vec<SparseFeatures> {
        (0..self.num_states).map(|s| self.state(s)).collect()
    }

    /// `phi_{s,a}` for every state and action.
    pub fn state_action_table(&self) -> Vec<Vec<SparseFeatures>> {
        (0..self.num_states)
            .map(|s| (0..self.num_actions).map(|a| self.state_action(s, a)).collect())
            .collect()
    }
}
