//! General linear-Gaussian state-space model over a longitudinal time grid.
//!
//! The model is
//!
//! ```text
//! y_t     = Z_t alpha_t + X_t beta + eps_t        eps_t ~ N(0, diag)
//! alpha_' = T alpha_t + eta_'                     eta_' ~ N(0, Q)
//! alpha_0 ~ partially diffuse
//! ```
//!
//! where the observation vector at each time may have a different length
//! (one scalar per replicate present at that time) and any element may be
//! missing. Missing elements are predicted by the smoother rather than
//! dropped. Regression coefficients `beta` are handled by state
//! augmentation: they are appended to the state with identity transition,
//! zero process noise, and a diffuse initial condition, so a single diffuse
//! mechanism covers both the diffuse initial state and `beta`.

mod series;
mod simulate;
mod validate;

pub use series::{DataRecord, Dataset, ObservationSeries, SeriesEntry, TimeGrid};
pub use simulate::{simulate, simulate_with_states};
pub use validate::{validate_model, ValidationReport};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// State-transition matrix in block form `T = blockdiag(leading, I)`.
///
/// Every model in this crate has a transition that acts on a small leading
/// block of the state and leaves the rest untouched (identity). Carrying
/// only the leading block keeps the filter's covariance propagation
/// O(k^2 m) instead of O(m^3).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    leading: DMatrix<f64>,
}

impl Transition {
    pub fn new(leading: DMatrix<f64>) -> Self {
        assert!(leading.is_square(), "transition leading block must be square");
        Self { leading }
    }

    pub fn identity() -> Self {
        Self { leading: DMatrix::zeros(0, 0) }
    }

    pub fn leading(&self) -> &DMatrix<f64> {
        &self.leading
    }

    pub fn order(&self) -> usize {
        self.leading.nrows()
    }

    /// Dense `m x m` representation.
    pub fn full(&self, m: usize) -> DMatrix<f64> {
        let k = self.order();
        assert!(k <= m);
        let mut t = DMatrix::identity(m, m);
        t.view_mut((0, 0), (k, k)).copy_from(&self.leading);
        t
    }

    /// `v <- T v` in place.
    pub(crate) fn apply_vec(&self, v: &mut DVector<f64>) {
        let k = self.order();
        if k == 0 {
            return;
        }
        let mut head = vec![0.0; k];
        for (i, h) in head.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..k {
                s += self.leading[(i, j)] * v[j];
            }
            *h = s;
        }
        for (i, h) in head.iter().enumerate() {
            v[i] = *h;
        }
    }

    /// `v <- T' v` in place.
    pub(crate) fn apply_vec_transposed(&self, v: &mut DVector<f64>) {
        let k = self.order();
        if k == 0 {
            return;
        }
        let mut head = vec![0.0; k];
        for (i, h) in head.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..k {
                s += self.leading[(j, i)] * v[j];
            }
            *h = s;
        }
        for (i, h) in head.iter().enumerate() {
            v[i] = *h;
        }
    }

    /// `P <- T P T'` in place.
    pub(crate) fn apply_cov(&self, p: &mut DMatrix<f64>) {
        self.apply_cov_impl(p, false);
    }

    /// `N <- T' N T` in place.
    pub(crate) fn apply_cov_transposed(&self, p: &mut DMatrix<f64>) {
        self.apply_cov_impl(p, true);
    }

    fn apply_cov_impl(&self, p: &mut DMatrix<f64>, transposed: bool) {
        let k = self.order();
        if k == 0 {
            return;
        }
        let m = p.nrows();
        let l = &self.leading;
        let at = |i: usize, j: usize| if transposed { l[(j, i)] } else { l[(i, j)] };
        // Rows: p[0..k, :] <- L p[0..k, :]
        let mut col = vec![0.0; k];
        for c in 0..m {
            for (i, ci) in col.iter_mut().enumerate() {
                let mut s = 0.0;
                for j in 0..k {
                    s += at(i, j) * p[(j, c)];
                }
                *ci = s;
            }
            for i in 0..k {
                p[(i, c)] = col[i];
            }
        }
        // Columns: p[:, 0..k] <- p[:, 0..k] L'
        let mut row = vec![0.0; k];
        for r in 0..m {
            for (j, rj) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..k {
                    s += p[(r, c)] * at(j, c);
                }
                *rj = s;
            }
            for j in 0..k {
                p[(r, j)] = row[j];
            }
        }
    }
}

/// Process-noise covariance in block form `Q = blockdiag(leading, diag(tail))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessNoise {
    leading: DMatrix<f64>,
    tail: DVector<f64>,
}

impl ProcessNoise {
    pub fn new(leading: DMatrix<f64>, tail: DVector<f64>) -> Self {
        assert!(leading.is_square(), "noise leading block must be square");
        Self { leading, tail }
    }

    pub fn zero(m: usize) -> Self {
        Self { leading: DMatrix::zeros(0, 0), tail: DVector::zeros(m) }
    }

    pub fn leading(&self) -> &DMatrix<f64> {
        &self.leading
    }

    pub fn tail(&self) -> &DVector<f64> {
        &self.tail
    }

    pub fn order(&self) -> usize {
        self.leading.nrows() + self.tail.len()
    }

    /// Dense `m x m` representation.
    pub fn full(&self, m: usize) -> DMatrix<f64> {
        let k = self.leading.nrows();
        assert!(self.order() <= m);
        let mut q = DMatrix::zeros(m, m);
        q.view_mut((0, 0), (k, k)).copy_from(&self.leading);
        for (i, v) in self.tail.iter().enumerate() {
            q[(k + i, k + i)] = *v;
        }
        q
    }

    /// `P += Q` in place (tail beyond `order()` is implicitly zero).
    pub(crate) fn add_to(&self, p: &mut DMatrix<f64>) {
        let k = self.leading.nrows();
        for i in 0..k {
            for j in 0..k {
                p[(i, j)] += self.leading[(i, j)];
            }
        }
        for (i, v) in self.tail.iter().enumerate() {
            p[(k + i, k + i)] += *v;
        }
    }
}

/// Per-step system matrices of a state-space model.
///
/// Implementations must be pure: repeated calls with equal arguments return
/// equal matrices, bitwise. Steps are indices into the grid of the
/// [`ObservationSeries`] the model was built for; `transition(j)` and
/// `process_noise(j)` describe the move from step `j` to step `j + 1`.
pub trait MatrixProvider: Send + Sync {
    /// `Z` row for observation `entry` at step `step`, as a column vector
    /// of length `state_dim`.
    fn obs_coeffs(&self, step: usize, entry: usize) -> DVector<f64>;

    /// Observation-noise variance for the given scalar.
    fn obs_variance(&self, step: usize, entry: usize) -> f64;

    fn transition(&self, step: usize) -> Transition;

    fn process_noise(&self, step: usize) -> ProcessNoise;
}

/// Linear-Gaussian state-space model with a partially diffuse initial state.
#[derive(Clone)]
pub struct StateSpaceModel {
    state_dim: usize,
    diffuse_indices: Vec<usize>,
    init_mean: DVector<f64>,
    init_cov: DMatrix<f64>,
    n_regressors: usize,
    provider: Arc<dyn MatrixProvider>,
}

impl StateSpaceModel {
    /// Build a model. `diffuse_indices` are 0-based positions of the
    /// initial-state elements with no prior information; `init_mean` and
    /// `init_cov` describe the remaining (finite) part and are ignored on
    /// the diffuse positions.
    pub fn new(
        state_dim: usize,
        diffuse_indices: Vec<usize>,
        init_mean: DVector<f64>,
        init_cov: DMatrix<f64>,
        n_regressors: usize,
        provider: Arc<dyn MatrixProvider>,
    ) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::InvalidModel("state dimension must be positive".into()));
        }
        if init_mean.len() != state_dim {
            return Err(Error::InvalidModel(format!(
                "initial mean has length {}, state dimension is {}",
                init_mean.len(),
                state_dim
            )));
        }
        if init_cov.nrows() != state_dim || init_cov.ncols() != state_dim {
            return Err(Error::InvalidModel(format!(
                "initial covariance is {}x{}, state dimension is {}",
                init_cov.nrows(),
                init_cov.ncols(),
                state_dim
            )));
        }
        if !linalg::is_symmetric(&init_cov, 1e-12) {
            return Err(Error::InvalidModel("initial covariance is not symmetric".into()));
        }
        let mut diffuse = diffuse_indices;
        diffuse.sort_unstable();
        diffuse.dedup();
        if diffuse.iter().any(|&i| i >= state_dim) {
            return Err(Error::InvalidModel("diffuse index out of range".into()));
        }
        let min_pivot = linalg::min_psd_pivot(&init_cov);
        if min_pivot < linalg::PSD_PIVOT_TOL {
            return Err(Error::NonPsdInit { min_pivot });
        }
        Ok(Self {
            state_dim,
            diffuse_indices: diffuse,
            init_mean,
            init_cov,
            n_regressors,
            provider,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn diffuse_indices(&self) -> &[usize] {
        &self.diffuse_indices
    }

    pub fn init_mean(&self) -> &DVector<f64> {
        &self.init_mean
    }

    pub fn init_cov(&self) -> &DMatrix<f64> {
        &self.init_cov
    }

    pub fn n_regressors(&self) -> usize {
        self.n_regressors
    }

    /// Total diffuse dimension `d`: diffuse initial-state elements plus
    /// regression coefficients.
    pub fn diffuse_count(&self) -> usize {
        self.diffuse_indices.len() + self.n_regressors
    }

    pub fn provider(&self) -> &dyn MatrixProvider {
        self.provider.as_ref()
    }

    /// State dimension after appending the regression coefficients.
    pub(crate) fn augmented_dim(&self) -> usize {
        self.state_dim + self.n_regressors
    }

    /// Initial mean in augmented coordinates with diffuse entries zeroed.
    pub(crate) fn augmented_init_mean(&self) -> DVector<f64> {
        let mut a = DVector::zeros(self.augmented_dim());
        for i in 0..self.state_dim {
            a[i] = self.init_mean[i];
        }
        for &i in &self.diffuse_indices {
            a[i] = 0.0;
        }
        a
    }

    /// Initial covariance in augmented coordinates with diffuse rows and
    /// columns zeroed.
    pub(crate) fn augmented_init_cov(&self) -> DMatrix<f64> {
        let md = self.augmented_dim();
        let mut p = DMatrix::zeros(md, md);
        p.view_mut((0, 0), (self.state_dim, self.state_dim)).copy_from(&self.init_cov);
        for &i in &self.diffuse_indices {
            for j in 0..md {
                p[(i, j)] = 0.0;
                p[(j, i)] = 0.0;
            }
        }
        p
    }

    /// Indicator matrix of the diffuse subspace in augmented coordinates.
    pub(crate) fn augmented_diffuse_cov(&self) -> DMatrix<f64> {
        let md = self.augmented_dim();
        let mut p = DMatrix::zeros(md, md);
        for &i in &self.diffuse_indices {
            p[(i, i)] = 1.0;
        }
        for i in self.state_dim..md {
            p[(i, i)] = 1.0;
        }
        p
    }

    /// Observation coefficients in augmented coordinates: the `Z` row
    /// followed by the regressor row (zeros when the entry has none).
    pub(crate) fn augmented_obs_coeffs(&self, series: &ObservationSeries, step: usize, entry: usize) -> DVector<f64> {
        let z = self.provider.obs_coeffs(step, entry);
        debug_assert_eq!(z.len(), self.state_dim);
        if self.n_regressors == 0 {
            return z;
        }
        let mut out = DVector::zeros(self.augmented_dim());
        for i in 0..self.state_dim {
            out[i] = z[i];
        }
        if let Some(x) = &series.steps()[step][entry].regressors {
            for (i, v) in x.iter().enumerate() {
                out[self.state_dim + i] = *v;
            }
        }
        out
    }
}

impl std::fmt::Debug for StateSpaceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StateSpaceModel")
            .field("state_dim", &self.state_dim)
            .field("diffuse_indices", &self.diffuse_indices)
            .field("n_regressors", &self.n_regressors)
            .finish()
    }
}
