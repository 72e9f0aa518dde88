//! Closed-form convergence quantities: the per-leaf improvement factor, the
//! aggregated geometric rate, the block-separability constant `rho_min`, the
//! Lambert W function, the optimal leaf iteration count, and the exact block
//! sub-optimality gap for quadratic loss.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::engine::dual_value;
use crate::error::{Error, Result};
use crate::losses::{LossFamily, LossSpec};

/// Inputs of the aggregated geometric rate.
#[derive(Clone, Debug)]
pub struct BoundInputs {
    pub lambda: f64,
    pub m: usize,
    pub gamma: f64,
    pub thetas: Vec<f64>,
    pub betas: Vec<f64>,
    pub rho: f64,
    pub t: usize,
}

fn require_smooth(gamma: f64) -> Result<()> {
    if gamma <= 0.0 {
        return Err(Error::Domain(
            "rate analysis requires a smooth loss (gamma > 0)".into(),
        ));
    }
    Ok(())
}

/// Per-leaf improvement factor of LocalSDCA:
/// `Theta_p = (1 - (lambda m gamma / (1 + lambda m gamma)) / m_B)^{T_p}`.
pub fn theta_p(lambda: f64, m: usize, gamma: f64, m_b: usize, t_p: usize) -> Result<f64> {
    require_smooth(gamma)?;
    if m_b == 0 {
        return Err(Error::Domain("leaf size m_B must be >= 1".into()));
    }
    let lmg = lambda * m as f64 * gamma;
    let c1 = lmg / (1.0 + lmg);
    Ok((1.0 - c1 / m_b as f64).powi(t_p as i32))
}

/// Aggregated geometric rate at a tree node:
/// `( max_k (1 - (1 - Theta_k) beta_k) * lambda m gamma / (rho + lambda m gamma) )^T`.
pub fn convergence_bound(inputs: &BoundInputs) -> Result<f64> {
    require_smooth(inputs.gamma)?;
    if inputs.thetas.len() != inputs.betas.len() || inputs.thetas.is_empty() {
        return Err(Error::Config(
            "thetas and betas must be nonempty and the same length".into(),
        ));
    }
    if inputs.thetas.iter().any(|&t| !(0.0..1.0).contains(&t)) {
        return Err(Error::Domain("each Theta must lie in [0, 1)".into()));
    }
    let beta_sum: f64 = inputs.betas.iter().sum();
    if (beta_sum - 1.0).abs() > 1e-9 || inputs.betas.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
        return Err(Error::Config("betas must be in [0,1] and sum to 1".into()));
    }
    if inputs.rho < 0.0 {
        return Err(Error::Domain("rho must be nonnegative".into()));
    }
    if inputs.t == 0 {
        return Err(Error::Domain("T must be >= 1".into()));
    }
    let lmg = inputs.lambda * inputs.m as f64 * inputs.gamma;
    let c2 = lmg / (inputs.rho + lmg);
    let worst = inputs
        .thetas
        .iter()
        .zip(&inputs.betas)
        .map(|(&th, &b)| 1.0 - (1.0 - th) * b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((worst * c2).powi(inputs.t as i32))
}

/// Worst-case block-separability constant: the largest eigenvalue of
/// `lambda^2 m^2 (BlockDiag(Gram_k) - Gram_Q)`, found by shifted power
/// iteration on the matrix-free operator.
///
/// With columns `a_i = x_i / (lambda m)` the factor `lambda^2 m^2` cancels,
/// so the operator works directly on the unscaled Gram of the `x_i`.
pub fn rho_min(ds: &Dataset, _lambda: f64, blocks: &[Vec<usize>]) -> Result<f64> {
    if blocks.is_empty() || blocks.iter().any(Vec::is_empty) {
        return Err(Error::Config("blocks must be nonempty".into()));
    }
    let q: Vec<usize> = blocks.iter().flatten().cloned().collect();
    {
        let mut sorted = q.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != q.len() {
            return Err(Error::Config("blocks must be disjoint".into()));
        }
    }
    if blocks.len() == 1 {
        return Ok(0.0);
    }
    let n = q.len();
    let d = ds.d();
    // offsets of each block inside the concatenated vector
    let mut spans = Vec::with_capacity(blocks.len());
    let mut off = 0;
    for b in blocks {
        spans.push(off..off + b.len());
        off += b.len();
    }

    let apply = |v: &[f64], out: &mut [f64]| {
        // block part: sum_k Gram_k v_k
        let mut acc = vec![0.0; d];
        for (b, span) in blocks.iter().zip(&spans) {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (&i, &vi) in b.iter().zip(&v[span.clone()]) {
                if vi != 0.0 {
                    ds.axpy(i, vi, &mut acc);
                }
            }
            for (o, &i) in out[span.clone()].iter_mut().zip(b) {
                *o = ds.dot(i, &acc);
            }
        }
        // minus full Gram over Q
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (&i, &vi) in q.iter().zip(v) {
            if vi != 0.0 {
                ds.axpy(i, vi, &mut acc);
            }
        }
        for (o, &i) in out.iter_mut().zip(&q) {
            *o -= ds.dot(i, &acc);
        }
    };

    // spectral-radius bound for the shift, from column norms
    let shift: f64 = 2.0 * q.iter().map(|&i| ds.norm_sq(i)).sum::<f64>();
    if shift == 0.0 {
        return Ok(0.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);

    let cap = 1_000_000usize;
    let mut mv = vec![0.0; n];
    for iter in 0..cap {
        apply(&v, &mut mv);
        // shifted operator keeps the iteration aimed at the top of the spectrum
        for (m_i, &v_i) in mv.iter_mut().zip(&v) {
            *m_i += shift * v_i;
        }
        let lam: f64 = mv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let res: f64 = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lam * b) * (a - lam * b))
            .sum::<f64>()
            .sqrt();
        let nm = norm(&mv);
        if nm == 0.0 {
            return Ok(0.0);
        }
        for (v_i, &m_i) in v.iter_mut().zip(&mv) {
            *v_i = m_i / nm;
        }
        if res <= 1e-10 * shift {
            let _ = iter;
            return Ok((lam - shift).max(0.0));
        }
    }
    Err(Error::Convergence(cap))
}

/// Principal branch of the Lambert W function by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let min = -1.0 / std::f64::consts::E;
    if x < min {
        return Err(Error::Domain(format!(
            "lambert_w0 defined for x >= -1/e, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x > std::f64::consts::E {
        let l = x.ln();
        l - l.ln()
    } else if x > -0.25 {
        let l = (1.0 + x).ln();
        l * (1.0 - l / 2.4)
    } else {
        // near the branch point
        -1.0 + (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= 2e-16 * (1.0 + x.abs()) {
            return Ok(w);
        }
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    if (w * w.exp() - x).abs() <= 1e-12 * (1.0 + x.abs()) {
        Ok(w)
    } else {
        Err(Error::Convergence(100))
    }
}

fn check_tp_inputs(c1: f64, c2: f64, n_k: f64, n_q: f64, r: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c1) || !(0.0..1.0).contains(&c2) {
        return Err(Error::Domain("c1 and c2 must lie in [0, 1)".into()));
    }
    if n_k < 1.0 || n_q < n_k {
        return Err(Error::Domain("need 1 <= n_k <= n_Q".into()));
    }
    if c1 / n_k >= 1.0 || c2 * n_k / n_q >= 1.0 {
        return Err(Error::Domain("need c1/n_k < 1 and c2 n_k/n_Q < 1".into()));
    }
    if r < 0.0 {
        return Err(Error::Domain("delay severity r must be >= 0".into()));
    }
    Ok(())
}

/// Closed-form leaf iteration count:
/// `T_p = W((1 - c1/n_k)^r ln(1 - c2 n_k/n_Q)) / ln(1 - c1/n_k) - r`.
pub fn optimal_tp(c1: f64, c2: f64, n_k: f64, n_q: f64, r: f64) -> Result<f64> {
    check_tp_inputs(c1, c2, n_k, n_q, r)?;
    if c1 == 0.0 {
        return Err(Error::Domain("closed form needs c1 > 0".into()));
    }
    let a = 1.0 - c1 / n_k;
    let arg = a.powf(r) * (1.0 - c2 * n_k / n_q).ln();
    let w = lambert_w0(arg)?;
    Ok(w / a.ln() - r)
}

/// Brute-force integer minimizer of the bound-per-total-time objective
/// `(1 - (1 - (1 - c1/n_k)^T) c2 n_k/n_Q)^{t_total / (t_lp T + t_delay + t_cp)}`.
///
/// The minimizing T does not depend on `t_total` or on the absolute time
/// scale, only on `r = (t_delay + t_cp)/t_lp`.
pub fn optimal_tp_numeric(
    c1: f64,
    c2: f64,
    n_k: f64,
    n_q: f64,
    r: f64,
    t_max: usize,
) -> Result<usize> {
    check_tp_inputs(c1, c2, n_k, n_q, r)?;
    if t_max == 0 {
        return Err(Error::Domain("t_max must be >= 1".into()));
    }
    let a = 1.0 - c1 / n_k;
    let b = c2 * n_k / n_q;
    let mut best_t = 1usize;
    let mut best = f64::INFINITY;
    let mut a_pow = 1.0;
    for t in 1..=t_max {
        a_pow *= a;
        let base = 1.0 - (1.0 - a_pow) * b;
        let v = base.ln() / (t as f64 + r);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Exact block sub-optimality gap for SquaredError: the dual gain from
/// replacing the block by its exact maximizer (an unconstrained concave
/// quadratic, solved by Cholesky).
pub fn block_suboptimality_gap(
    ds: &Dataset,
    spec: LossSpec,
    lambda: f64,
    alpha: &[f64],
    block: &[usize],
) -> Result<f64> {
    if spec.family != LossFamily::SquaredError {
        return Err(Error::Unsupported(
            "exact block gap is only available for squared error".into(),
        ));
    }
    if block.is_empty() {
        return Ok(0.0);
    }
    let lm = lambda * ds.m() as f64;

    // w with the block's contribution removed
    let mut w_rest = vec![0.0; ds.d()];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 && !block.contains(&i) {
            ds.axpy(i, a / lm, &mut w_rest);
        }
    }

    // stationarity for i in block: sum_j alpha_j x_i.x_j/(lambda m) + alpha_i/2
    //                              = y_i - w_rest.x_i
    let k = block.len();
    let mut h = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &i in block {
        let mut dense = vec![0.0; ds.d()];
        ds.axpy(i, 1.0, &mut dense);
        cols.push(dense);
    }
    for (r_idx, &i) in block.iter().enumerate() {
        for (c_idx, col) in cols.iter().enumerate() {
            h[(r_idx, c_idx)] = ds.dot(i, col) / lm;
        }
        h[(r_idx, r_idx)] += 0.5;
        rhs[r_idx] = ds.label(i) - ds.dot(i, &w_rest);
    }
    let chol = Cholesky::new(h)
        .ok_or_else(|| Error::Domain("block system is not positive definite".into()))?;
    let sol = chol.solve(&rhs);

    let mut improved = alpha.to_vec();
    for (j, &i) in block.iter().enumerate() {
        improved[i] = sol[j];
    }
    let before = dual_value(ds, spec, lambda, alpha)?;
    let after = dual_value(ds, spec, lambda, &improved)?;
    Ok((after - before).max(0.0))
}
