use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{BOUNDS_LEN, INPUT_DIM};
use crate::scalar::Scalar;

/// Width of both hidden layers (one unit per counter).
pub const HIDDEN: usize = 18;

/// Fully connected layer, `weights` row-major `rows x cols` (one row per output unit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![T::zero(); rows * cols],
            biases: vec![T::zero(); rows],
        }
    }

    #[inline]
    pub fn w(&self, r: usize, c: usize) -> T {
        self.weights[r * self.cols + c]
    }

    #[inline]
    pub fn w_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.weights[r * self.cols + c]
    }

    /// Pre-activations `W x + b`.
    fn affine(&self, x: &[T], out: &mut [T]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let mut acc = self.biases[r];
            for (w, xi) in row.iter().zip(x) {
                acc += *w * *xi;
            }
            *o = acc;
        }
    }

    pub fn cast<U: Scalar>(&self) -> Dense<U> {
        Dense {
            rows: self.rows,
            cols: self.cols,
            weights: self.weights.iter().map(|v| U::lit(v.as_f64())).collect(),
            biases: self.biases.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub(crate) fn check(&self, field: &str, rows: usize, cols: usize) -> Result<()> {
        let dim = |expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::Dimension {
                    field: field.to_string(),
                    expected,
                    actual,
                })
            }
        };
        dim(rows, self.rows)?;
        dim(cols, self.cols)?;
        dim(rows * cols, self.weights.len())?;
        dim(rows, self.biases.len())?;
        if self.weights.iter().chain(&self.biases).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: field.to_string() });
        }
        Ok(())
    }
}

/// Model parameters together with the feature bounds used to normalize its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights<T = f64> {
    pub layer_1: Dense<T>,
    pub layer_2: Dense<T>,
    pub output: Dense<T>,
    pub feature_bounds: Vec<T>,
}

/// Gradients congruent to the three layers of [`NetworkWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T = f64> {
    pub layer_1: Dense<T>,
    pub layer_2: Dense<T>,
    pub output: Dense<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros() -> Self {
        Self {
            layer_1: Dense::zeros(HIDDEN, INPUT_DIM),
            layer_2: Dense::zeros(HIDDEN, HIDDEN),
            output: Dense::zeros(1, HIDDEN),
        }
    }

    /// Parameter slices in the same order as [`NetworkWeights::param_slices_mut`].
    pub fn param_slices(&self) -> [&[T]; 6] {
        [
            &self.layer_1.weights,
            &self.layer_1.biases,
            &self.layer_2.weights,
            &self.layer_2.biases,
            &self.output.weights,
            &self.output.biases,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample<T = f64> {
    pub input: [T; INPUT_DIM],
    pub target: T,
}

struct Trace<T> {
    z1: [T; HIDDEN],
    h1: [T; HIDDEN],
    z2: [T; HIDDEN],
    h2: [T; HIDDEN],
    z3: T,
}

#[inline]
fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// ReLU derivative with 0 at the kink.
#[inline]
fn relu_grad<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

impl<T: Scalar> NetworkWeights<T> {
    pub fn zeros() -> Self {
        Self {
            layer_1: Dense::zeros(HIDDEN, INPUT_DIM),
            layer_2: Dense::zeros(HIDDEN, HIDDEN),
            output: Dense::zeros(1, HIDDEN),
            feature_bounds: vec![T::one(); BOUNDS_LEN],
        }
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Scalar>(&self) -> NetworkWeights<U> {
        NetworkWeights {
            layer_1: self.layer_1.cast(),
            layer_2: self.layer_2.cast(),
            output: self.output.cast(),
            feature_bounds: self.feature_bounds.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.layer_1.check("layer_1", HIDDEN, INPUT_DIM)?;
        self.layer_2.check("layer_2", HIDDEN, HIDDEN)?;
        self.output.check("output", 1, HIDDEN)?;
        if self.feature_bounds.len() != BOUNDS_LEN {
            return Err(Error::Dimension {
                field: "feature_bounds".into(),
                expected: BOUNDS_LEN,
                actual: self.feature_bounds.len(),
            });
        }
        if self.feature_bounds.iter().any(|b| !b.is_finite() || *b <= T::zero()) {
            return Err(Error::NonFinite {
                field: "feature_bounds".into(),
            });
        }
        Ok(())
    }

    pub fn param_slices_mut(&mut self) -> [&mut [T]; 6] {
        [
            &mut self.layer_1.weights,
            &mut self.layer_1.biases,
            &mut self.layer_2.weights,
            &mut self.layer_2.biases,
            &mut self.output.weights,
            &mut self.output.biases,
        ]
    }

    pub fn param_count(&self) -> usize {
        HIDDEN * INPUT_DIM + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN + 1
    }

    fn trace(&self, x: &[T]) -> Trace<T> {
        let mut t = Trace {
            z1: [T::zero(); HIDDEN],
            h1: [T::zero(); HIDDEN],
            z2: [T::zero(); HIDDEN],
            h2: [T::zero(); HIDDEN],
            z3: T::zero(),
        };
        self.layer_1.affine(x, &mut t.z1);
        for (h, z) in t.h1.iter_mut().zip(&t.z1) {
            *h = relu(*z);
        }
        self.layer_2.affine(&t.h1, &mut t.z2);
        for (h, z) in t.h2.iter_mut().zip(&t.z2) {
            *h = relu(*z);
        }
        let mut out = [T::zero(); 1];
        self.output.affine(&t.h2, &mut out);
        t.z3 = out[0];
        t
    }

    /// `relu(out . relu(L2 . relu(L1 . x + b1) + b2) + b_out)`.
    pub fn forward(&self, input: &[T]) -> Result<T> {
        if input.len() != INPUT_DIM {
            return Err(Error::Dimension {
                field: "input".into(),
                expected: INPUT_DIM,
                actual: input.len(),
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: "input".into() });
        }
        Ok(relu(self.trace(input).z3))
    }

    /// Gradients of the batch mean squared error, and that error.
    pub fn backward(&self, batch: &[LabeledSample<T>]) -> Result<(Gradients<T>, T)> {
        if batch.is_empty() {
            return Err(Error::InvalidTraining("empty batch".into()));
        }
        let mut g = Gradients::zeros();
        let mut loss = T::zero();
        let scale = T::lit(2.0) / T::from_usize(batch.len()).expect("batch length fits scalar");

        for s in batch {
            let t = self.trace(&s.input);
            let y = relu(t.z3);
            let err = y - s.target;
            loss += err * err;

            let d3 = scale * err * relu_grad(t.z3);
            g.output.biases[0] += d3;
            let mut d2 = [T::zero(); HIDDEN];
            for k in 0..HIDDEN {
                g.output.weights[k] += d3 * t.h2[k];
                d2[k] = d3 * self.output.weights[k] * relu_grad(t.z2[k]);
            }

            let mut d1 = [T::zero(); HIDDEN];
            for (r, &d) in d2.iter().enumerate() {
                g.layer_2.biases[r] += d;
                for c in 0..HIDDEN {
                    *g.layer_2.w_mut(r, c) += d * t.h1[c];
                    d1[c] += d * self.layer_2.w(r, c);
                }
            }
            for (r, d) in d1.iter_mut().enumerate() {
                *d *= relu_grad(t.z1[r]);
                g.layer_1.biases[r] += *d;
                for c in 0..INPUT_DIM {
                    *g.layer_1.w_mut(r, c) += *d * s.input[c];
                }
            }
        }
        Ok((g, loss / T::from_usize(batch.len()).expect("batch length fits scalar")))
    }

    /// Plain SGD update `theta -= lr * grad`.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: T) {
        for (p, g) in self.param_slices_mut().into_iter().zip(grads.param_slices()) {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= lr * *gi;
            }
        }
    }

    pub fn mse(&self, samples: &[LabeledSample<T>]) -> Result<T> {
        if samples.is_empty() {
            return Ok(T::zero());
        }
        let mut acc = T::zero();
        for s in samples {
            let e = self.forward(&s.input)? - s.target;
            acc += e * e;
        }
        Ok(acc / T::from_usize(samples.len()).expect("sample count fits scalar"))
    }
}
