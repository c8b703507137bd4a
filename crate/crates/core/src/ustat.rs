//! U-statistic evaluation: the exact subset enumerator, O(mn) closed-form
//! accumulators for the built-in kernels, and the ordered-tuple variant for
//! asymmetric kernels.

use crate::error::{Error, Result};
use crate::graph::permutations;
use crate::kernels::{builtin, KernelSpec};
use crate::mat::Mat;
use crate::stats::KahanSum;
use serde::Serialize;

const EXACT_TERM_BUDGET: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UStatPath {
    Exact,
    Fast,
    Ordered,
}

#[derive(Debug, Clone, Serialize)]
pub struct UStatResult {
    pub value: f64,
    pub kernel: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub path: UStatPath,
}

fn binom_f(n: usize, k: usize) -> f64 {
    let mut out = 1.0;
    for i in 0..k {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

fn check_dims(k: &KernelSpec, y: &Mat) -> Result<()> {
    if y.rows() < k.p() || y.cols() < k.q() {
        return Err(Error::DimensionShortfall {
            m: y.rows(),
            n: y.cols(),
            p: k.p(),
            q: k.q(),
        });
    }
    Ok(())
}

/// Visits all size-`k` subsets of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut ix: Vec<usize> = (0..k).collect();
    loop {
        f(&ix);
        // Advance the odometer.
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if ix[pos] != pos + n - k {
                ix[pos] += 1;
                for later in pos + 1..k {
                    ix[later] = ix[later - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
        if k == 0 {
            return;
        }
    }
}

/// Averages `h` over all C(m,p) C(n,q) unordered subset pairs.
pub fn u_exact(k: &KernelSpec, y: &Mat) -> Result<UStatResult> {
    check_dims(k, y)?;
    if !k.symmetric() {
        return Err(Error::AsymmetricKernel(k.name().into()));
    }
    let (m, n) = (y.rows(), y.cols());
    let terms = binom_f(m, k.p()) * binom_f(n, k.q());
    if terms > EXACT_TERM_BUDGET {
        return Err(Error::CombinatorialBudget {
            terms,
            limit: EXACT_TERM_BUDGET,
        });
    }
    let mut acc = KahanSum::new();
    let mut scratch = Mat::zeros(k.p(), k.q());
    for_each_subset(m, k.p(), |rows| {
        for_each_subset(n, k.q(), |cols| {
            y.gather_into(rows, cols, &mut scratch);
            acc.add(k.eval_unchecked(&scratch));
        });
    });
    Ok(UStatResult {
        value: acc.value() / terms,
        kernel: k.name().into(),
        m,
        n,
        p: k.p(),
        q: k.q(),
        path: UStatPath::Exact,
    })
}

/// Averages `h` over all ordered tuples without replacement; equals the
/// unordered U-statistic of the symmetrized kernel exactly.
pub fn u_ordered(k: &KernelSpec, y: &Mat) -> Result<UStatResult> {
    check_dims(k, y)?;
    let (m, n) = (y.rows(), y.cols());
    let (p, q) = (k.p(), k.q());
    let perms = (permutations(p).len() * permutations(q).len()) as f64;
    let terms = binom_f(m, p) * binom_f(n, q) * perms;
    if terms > EXACT_TERM_BUDGET {
        return Err(Error::CombinatorialBudget {
            terms,
            limit: EXACT_TERM_BUDGET,
        });
    }
    let mut acc = KahanSum::new();
    let mut scratch = Mat::zeros(p, q);
    let mut rows_perm = vec![0usize; p];
    let mut cols_perm = vec![0usize; q];
    for_each_subset(m, p, |rows| {
        for_each_subset(n, q, |cols| {
            for s1 in permutations(p) {
                for s2 in permutations(q) {
                    for (a, &s) in s1.iter().enumerate() {
                        rows_perm[a] = rows[s];
                    }
                    for (b, &s) in s2.iter().enumerate() {
                        cols_perm[b] = cols[s];
                    }
                    y.gather_into(&rows_perm, &cols_perm, &mut scratch);
                    acc.add(k.eval_unchecked(&scratch));
                }
            }
        });
    });
    Ok(UStatResult {
        value: acc.value() / terms,
        kernel: k.name().into(),
        m,
        n,
        p,
        q,
        path: UStatPath::Ordered,
    })
}

struct Margins {
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    grand: f64,
}

fn margins(y: &Mat) -> Margins {
    let (m, n) = (y.rows(), y.cols());
    let mut row_sums = vec![0.0; m];
    let mut col_sums = vec![0.0; n];
    let mut grand = KahanSum::new();
    for i in 0..m {
        let mut r = KahanSum::new();
        for j in 0..n {
            let v = y.get(i, j);
            r.add(v);
            col_sums[j] += v;
        }
        row_sums[i] = r.value();
        grand.add(row_sums[i]);
    }
    Margins {
        row_sums,
        col_sums,
        grand: grand.value(),
    }
}

fn fast_h1(y: &Mat) -> f64 {
    let (m, n) = (y.rows(), y.cols());
    let mg = margins(y);
    let mut acc = KahanSum::new();
    for i in 0..m {
        let mut sq = KahanSum::new();
        for j in 0..n {
            sq.add(y.get(i, j) * y.get(i, j));
        }
        acc.add(mg.row_sums[i] * mg.row_sums[i] - sq.value());
    }
    acc.value() / (m as f64 * n as f64 * (n as f64 - 1.0))
}

/// Sum over ordered pairs of cells in distinct rows and distinct columns of
/// `a[cell1] * b[cell2]`, by inclusion-exclusion on the margins.
fn cross_pair_sum(a: &Mat, b: &Mat) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    let ma = margins(a);
    let mb = margins(b);
    let mut acc = KahanSum::new();
    acc.add(ma.grand * mb.grand);
    for i in 0..m {
        acc.add(-ma.row_sums[i] * mb.row_sums[i]);
    }
    for j in 0..n {
        acc.add(-ma.col_sums[j] * mb.col_sums[j]);
    }
    let mut dot = KahanSum::new();
    for i in 0..m {
        for j in 0..n {
            dot.add(a.get(i, j) * b.get(i, j));
        }
    }
    acc.add(dot.value());
    acc.value()
}

fn fast_h2(y: &Mat) -> f64 {
    let (m, n) = (y.rows() as f64, y.cols() as f64);
    cross_pair_sum(y, y) / (m * (m - 1.0) * n * (n - 1.0))
}

fn fast_h4(y: &Mat) -> f64 {
    let (m, n) = (y.rows(), y.cols());
    let mut a = Mat::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let v = y.get(i, j);
            a.set(i, j, v * (v - 1.0));
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    cross_pair_sum(&a, y) / (mf * (mf - 1.0) * nf * (nf - 1.0))
}

fn fast_h5(y: &Mat) -> f64 {
    // Sum over ordered (i != i', j != j') of Y[i,j] Y[i,j'] Y[i',j'].
    let (m, n) = (y.rows(), y.cols());
    let mg = margins(y);
    let mut acc = KahanSum::new();
    for i in 0..m {
        let mut d = KahanSum::new(); // sum_j Y[i,j] * colsum[j]
        let mut sq = KahanSum::new(); // sum_j Y[i,j]^2
        for j in 0..n {
            let v = y.get(i, j);
            d.add(v * mg.col_sums[j]);
            sq.add(v * v);
        }
        acc.add(mg.row_sums[i] * (d.value() - sq.value()));
    }
    for j in 0..n {
        let mut colsq = KahanSum::new(); // sum_i Y[i,j]^2
        let mut cube = KahanSum::new(); // sum_i Y[i,j]^3
        for i in 0..m {
            let v = y.get(i, j);
            colsq.add(v * v);
            cube.add(v * v * v);
        }
        acc.add(-mg.col_sums[j] * colsq.value());
        acc.add(cube.value());
    }
    let (mf, nf) = (m as f64, n as f64);
    acc.value() / (mf * (mf - 1.0) * nf * (nf - 1.0))
}

/// O(mn) evaluation of a built-in kernel's U-statistic via algebraic
/// identities on the matrix margins.
pub fn u_fast(name: &str, y: &Mat) -> Result<UStatResult> {
    let k = builtin(name)?;
    check_dims(&k, y)?;
    let value = match name {
        "h1" => fast_h1(y),
        "h2" => fast_h2(y),
        "h3" => fast_h1(y) - fast_h2(y),
        "h4" => fast_h4(y),
        "h5" => fast_h5(y),
        "h6" => fast_h4(y) - fast_h5(y),
        _ => unreachable!("builtin() already validated the name"),
    };
    Ok(UStatResult {
        value,
        kernel: name.into(),
        m: y.rows(),
        n: y.cols(),
        p: k.p(),
        q: k.q(),
        path: UStatPath::Fast,
    })
}
