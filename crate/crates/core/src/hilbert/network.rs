//! Builders for unitaries on mode spaces: beam splitters, routing, phase
//! plates and operators on tensor factors.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::space::ModeSpace;
use super::wave::C64;

/// 50/50 beam splitter `(1/√2)[[1, i], [i, 1]]`.
pub fn beam_splitter() -> DMatrix<C64> {
    splitter(0.5)
}

/// Lossless splitter with reflectivity `r`: `[[√(1−r), i√r], [i√r, √(1−r)]]`.
pub fn splitter(r: f64) -> DMatrix<C64> {
    let t = (1.0 - r).sqrt();
    let s = r.sqrt();
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(t, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(t, 0.0)],
    )
}

pub fn hadamard_like() -> DMatrix<C64> {
    let s = FRAC_1_SQRT_2;
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)],
    )
}

/// Real rotation `[[c, −s], [s, c]]` sending the first basis vector to `(c, s)`.
pub fn rotation(angle: f64) -> DMatrix<C64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)],
    )
}

fn indices(space: &ModeSpace, labels: &[&str]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            space
                .index_of(l)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown mode `{l}`")))
        })
        .collect()
}

/// Acts as `w` on the span of `modes` (in the given order) and as the identity elsewhere.
pub fn mix(space: &ModeSpace, modes: &[&str], w: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let idx = indices(space, modes)?;
    if w.nrows() != idx.len() || w.ncols() != idx.len() {
        return Err(Error::LengthMismatch {
            expected: idx.len(),
            got: w.nrows(),
        });
    }
    let mut u = DMatrix::<C64>::identity(space.dimension(), space.dimension());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            u[(i, j)] = w[(a, b)];
        }
    }
    Ok(u)
}

/// Sends `|inputs_j⟩ → Σ_i w_ij |outputs_i⟩` and `|outputs⟩` back through `w†`,
/// which makes the full operator unitary whenever `w` is.
pub fn transfer(
    space: &ModeSpace,
    inputs: &[&str],
    outputs: &[&str],
    w: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let ins = indices(space, inputs)?;
    let outs = indices(space, outputs)?;
    if ins.iter().any(|i| outs.contains(i)) {
        return Err(Error::InvalidArgument(
            "transfer inputs and outputs must be disjoint".into(),
        ));
    }
    if w.nrows() != outs.len() || w.ncols() != ins.len() {
        return Err(Error::LengthMismatch {
            expected: outs.len() * ins.len(),
            got: w.len(),
        });
    }
    let n = space.dimension();
    let mut u = DMatrix::<C64>::identity(n, n);
    for &i in ins.iter().chain(&outs) {
        u[(i, i)] = C64::new(0.0, 0.0);
    }
    for (b, &j) in ins.iter().enumerate() {
        for (a, &i) in outs.iter().enumerate() {
            u[(i, j)] = w[(a, b)];
            u[(j, i)] = w[(a, b)].conj();
        }
    }
    Ok(u)
}

/// Moves the content of `from[k]` to `to[k]` (and back), a permutation.
pub fn route(space: &ModeSpace, from: &[&str], to: &[&str]) -> Result<DMatrix<C64>> {
    let w = DMatrix::<C64>::identity(to.len(), from.len());
    transfer(space, from, to, &w)
}

pub fn phase(space: &ModeSpace, mode: &str, angle: f64) -> Result<DMatrix<C64>> {
    let i = indices(space, &[mode])?[0];
    let mut u = DMatrix::<C64>::identity(space.dimension(), space.dimension());
    u[(i, i)] = C64::from_polar(1.0, angle);
    Ok(u)
}

/// Unitary built column by column: column `j` is the image of basis state `j`.
pub fn from_basis_map(dim: usize, image: impl Fn(usize) -> Vec<(usize, C64)>) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        for (i, a) in image(j) {
            u[(i, j)] += a;
        }
    }
    u
}

/// `1 ⊗ … ⊗ op ⊗ … ⊗ 1` with `op` on factor `k` of `dims`.
pub fn embed(dims: &[usize], k: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
    let left: usize = dims[..k].iter().product();
    let right: usize = dims[k + 1..].iter().product();
    let l = DMatrix::<C64>::identity(left, left);
    let r = DMatrix::<C64>::identity(right, right);
    l.kronecker(op).kronecker(&r)
}

/// A unitary whose first column is the unit vector `v` (Gram–Schmidt completion).
pub fn unitary_with_first_column(v: &[C64]) -> Result<DMatrix<C64>> {
    let n = v.len();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Unnormalized(norm * norm));
    }
    let mut cols: Vec<Vec<C64>> = vec![v.to_vec()];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut c = vec![C64::new(0.0, 0.0); n];
        c[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&c).map(|(a, b)| a.conj() * b).sum();
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= proj * qi;
                }
            }
        }
        let cn: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if cn > 1e-8 {
            c.iter_mut().for_each(|z| *z /= cn);
            cols.push(c);
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
}
