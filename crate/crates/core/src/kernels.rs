//! Kernel functions of `p x q` submatrices: the built-ins `h1`..`h6`,
//! symmetrization of arbitrary kernels, and a symmetry checker.
//!
//! `h1` is the same-row co-engagement product, `h2` the cross-row
//! diagonal-product average, `h3 = lift(h1) - h2` the row-heterogeneity
//! contrast, and `h6 = h4 - h5` the overdispersion contrast built from the
//! factorial-moment kernels `h4` and `h5`.

use crate::error::{Error, Result};
use crate::graph::permutations;
use crate::mat::Mat;
use crate::rng;
use std::fmt;
use std::sync::Arc;

type Evaluator = Arc<dyn Fn(&Mat) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    p: usize,
    q: usize,
    symmetric: bool,
    eval: Evaluator,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

pub const BUILTIN_NAMES: [&str; 6] = ["h1", "h2", "h3", "h4", "h5", "h6"];

impl KernelSpec {
    pub fn new(
        name: impl Into<String>,
        p: usize,
        q: usize,
        symmetric: bool,
        eval: impl Fn(&Mat) -> f64 + Send + Sync + 'static,
    ) -> Self {
        KernelSpec {
            name: name.into(),
            p,
            q,
            symmetric,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn evaluate(&self, sub: &Mat) -> Result<f64> {
        if sub.rows() != self.p || sub.cols() != self.q {
            return Err(Error::ShapeMismatch {
                p: self.p,
                q: self.q,
                rows: sub.rows(),
                cols: sub.cols(),
            });
        }
        Ok((self.eval)(sub))
    }

    /// Unchecked evaluation for hot loops; shape is the caller's contract.
    #[inline]
    pub fn eval_unchecked(&self, sub: &Mat) -> f64 {
        (self.eval)(sub)
    }

    /// Group average over `S_p x S_q`: `h^s(y) = (p!q!)^-1 sum h(permuted y)`.
    pub fn symmetrize(&self) -> KernelSpec {
        let (p, q) = (self.p, self.q);
        let inner = self.eval.clone();
        let order = (permutations(p).len() * permutations(q).len()) as f64;
        KernelSpec::new(
            format!("{}_sym", self.name),
            p,
            q,
            true,
            move |sub: &Mat| {
                let mut acc = 0.0;
                for s1 in permutations(p) {
                    for s2 in permutations(q) {
                        acc += inner(&sub.permuted(s1, s2));
                    }
                }
                acc / order
            },
        )
    }

    /// Draws `trials` standard-normal matrices and checks invariance under
    /// every permutation pair, within absolute tolerance 1e-12.
    pub fn check_symmetry(&self, trials: usize, seed: u64) -> bool {
        for t in 0..trials {
            let mut y = Mat::zeros(self.p, self.q);
            for i in 0..self.p {
                for j in 0..self.q {
                    let u = rng::uniform_at(
                        rng::mix(seed, t as u64),
                        rng::role::KERNEL_PROBE,
                        i as u64,
                        j as u64,
                    );
                    y.set(i, j, crate::stats::normal_quantile(u));
                }
            }
            let base = (self.eval)(&y);
            for s1 in permutations(self.p) {
                for s2 in permutations(self.q) {
                    if ((self.eval)(&y.permuted(s1, s2)) - base).abs() > 1e-12 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// The built-in kernels by name.
pub fn builtin(name: &str) -> Result<KernelSpec> {
    match name {
        "h1" => Ok(KernelSpec::new("h1", 1, 2, true, |y: &Mat| {
            y.get(0, 0) * y.get(0, 1)
        })),
        "h2" => Ok(KernelSpec::new("h2", 2, 2, true, |y: &Mat| {
            (y.get(0, 0) * y.get(1, 1) + y.get(0, 1) * y.get(1, 0)) / 2.0
        })),
        "h3" => Ok(KernelSpec::new("h3", 2, 2, true, |y: &Mat| {
            // Lift of h1 to both rows, minus h2.
            (y.get(0, 0) * y.get(0, 1) + y.get(1, 0) * y.get(1, 1)) / 2.0
                - (y.get(0, 0) * y.get(1, 1) + y.get(0, 1) * y.get(1, 0)) / 2.0
        })),
        "h4" => Ok(KernelSpec::new("h4", 2, 2, true, |y: &Mat| {
            let (a, b, c, d) = (y.get(0, 0), y.get(0, 1), y.get(1, 0), y.get(1, 1));
            (a * (a - 1.0) * d + b * (b - 1.0) * c + c * (c - 1.0) * b + d * (d - 1.0) * a) / 4.0
        })),
        "h5" => Ok(KernelSpec::new("h5", 2, 2, true, |y: &Mat| {
            let (a, b, c, d) = (y.get(0, 0), y.get(0, 1), y.get(1, 0), y.get(1, 1));
            (a * b * d + b * d * c + d * c * a + c * a * b) / 4.0
        })),
        "h6" => {
            let h4 = builtin("h4")?;
            let h5 = builtin("h5")?;
            Ok(KernelSpec::new("h6", 2, 2, true, move |y: &Mat| {
                h4.eval_unchecked(y) - h5.eval_unchecked(y)
            }))
        }
        other => Err(Error::UnknownKernel(other.into())),
    }
}
