//! The optimization core: stochastic dual coordinate ascent at leaves,
//! recursive weighted aggregation at internal nodes, and primal/dual
//! objective evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Dataset, Partition};
use crate::error::{Error, Result};
use crate::losses::{conjugate, coordinate_update, primal_loss, LossSpec};
use crate::topology::node_index_set;
use crate::topology::{IterationSchedule, Topology, WeightSchedule};

/// Update computed by a subtree: a dense delta over the node's sorted index
/// set plus the matching parameter delta `dw = A_Q * d_alpha`.
#[derive(Clone, Debug)]
pub struct UpdateDelta {
    pub delta_alpha: Vec<f64>,
    pub delta_w: Vec<f64>,
}

/// One per-outer-iteration observation at the root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub outer_iteration: usize,
    pub simulated_time: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// `P(w) = (lambda/2)||w||^2 + (1/m) sum_i l_i(w . x_i)`
pub fn primal_value(ds: &Dataset, spec: LossSpec, lambda: f64, w: &[f64]) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = (0..ds.m())
        .map(|i| primal_loss(spec, ds.dot(i, w), ds.label(i)))
        .sum();
    reg + loss / ds.m() as f64
}

/// `D(alpha) = -(lambda/2)||A alpha||^2 - (1/m) sum_i l*_i(-alpha_i)`
pub fn dual_value(ds: &Dataset, spec: LossSpec, lambda: f64, alpha: &[f64]) -> Result<f64> {
    let w = parameter_from_alpha(ds, lambda, alpha);
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let mut conj = 0.0;
    for (i, &a) in alpha.iter().enumerate() {
        conj += conjugate(spec, -a, ds.label(i))?;
    }
    Ok(-reg - conj / ds.m() as f64)
}

/// `w(alpha) = A alpha`, column i of A being `x_i / (lambda m)`.
pub fn parameter_from_alpha(ds: &Dataset, lambda: f64, alpha: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; ds.d()];
    let lm = lambda * ds.m() as f64;
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            ds.axpy(i, a / lm, &mut w);
        }
    }
    w
}

/// LocalSDCA: `t_p` single-coordinate ascent steps over `indices`, sampling
/// uniformly with replacement. The caller's state is untouched; the returned
/// deltas are relative to (`alpha_block`, `w`).
#[allow(clippy::too_many_arguments)]
pub fn local_sdca(
    ds: &Dataset,
    spec: LossSpec,
    lambda: f64,
    indices: &[usize],
    alpha_block: &[f64],
    w: &[f64],
    t_p: usize,
    rng: &mut impl Rng,
) -> Result<UpdateDelta> {
    debug_assert_eq!(indices.len(), alpha_block.len());
    let lm = lambda * ds.m() as f64;
    let mut w_local = w.to_vec();
    let mut alpha = alpha_block.to_vec();
    let mut delta_alpha = vec![0.0; indices.len()];
    let mut delta_w = vec![0.0; ds.d()];
    for _ in 0..t_p {
        let j = rng.gen_range(0..indices.len());
        let i = indices[j];
        let wx = ds.dot(i, &w_local);
        let da = coordinate_update(
            spec,
            wx,
            alpha[j],
            ds.norm_sq(i),
            lambda,
            ds.m(),
            ds.label(i),
        )?;
        if da != 0.0 {
            alpha[j] += da;
            delta_alpha[j] += da;
            let s = da / lm;
            ds.axpy(i, s, &mut w_local);
            ds.axpy(i, s, &mut delta_w);
        }
    }
    Ok(UpdateDelta {
        delta_alpha,
        delta_w,
    })
}

/// Tree solver: owns the per-node index layout and drives the recursive
/// aggregation.
pub struct Solver<'a> {
    ds: &'a Dataset,
    spec: LossSpec,
    lambda: f64,
    topology: &'a Topology,
    betas: &'a WeightSchedule,
    iterations: &'a IterationSchedule,
    parallel: bool,
    /// Sorted index set per node.
    indices: Vec<Vec<usize>>,
    /// For each internal node and child ordinal: positions of the child's
    /// indices inside the node's own sorted list.
    child_pos: Vec<Vec<Vec<usize>>>,
}

impl<'a> Solver<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ds: &'a Dataset,
        spec: LossSpec,
        lambda: f64,
        topology: &'a Topology,
        partition: &Partition,
        betas: &'a WeightSchedule,
        iterations: &'a IterationSchedule,
        parallel: bool,
    ) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::Config("lambda must be positive".into()));
        }
        if iterations.t.len() != topology.nodes.len() {
            return Err(Error::Config(
                "iteration schedule does not cover every node".into(),
            ));
        }
        let n = topology.nodes.len();
        let mut indices = Vec::with_capacity(n);
        for id in 0..n {
            indices.push(node_index_set(topology, partition, id)?);
        }
        let root_set = &indices[topology.root()];
        if root_set.len() != ds.m() || root_set.iter().enumerate().any(|(k, &i)| k != i) {
            return Err(Error::Config(
                "partition must cover every data index exactly once".into(),
            ));
        }
        let mut child_pos = vec![Vec::new(); n];
        for node in &topology.nodes {
            for &c in &node.children {
                let own = &indices[node.id];
                let pos = indices[c]
                    .iter()
                    .map(|i| own.binary_search(i).expect("child index in parent set"))
                    .collect();
                child_pos[node.id].push(pos);
            }
        }
        Ok(Solver {
            ds,
            spec,
            lambda,
            topology,
            betas,
            iterations,
            parallel,
            indices,
            child_pos,
        })
    }

    pub fn index_set(&self, node: usize) -> &[usize] {
        &self.indices[node]
    }

    /// One aggregation round at `node`: every child computes a delta against
    /// the iteration-start snapshot, then deltas are merged in child order
    /// with the node's `beta` weights.
    fn aggregate_step(
        &self,
        node: usize,
        alpha: &mut [f64],
        w: &mut [f64],
        ctx: u64,
        outer: usize,
    ) -> Result<()> {
        let children = &self.topology.nodes[node].children;
        let snapshot_w = w.to_vec();
        let run_child = |(k, &c): (usize, &usize)| -> Result<UpdateDelta> {
            let block: Vec<f64> = self.child_pos[node][k].iter().map(|&p| alpha[p]).collect();
            self.node_delta(
                c,
                &block,
                &snapshot_w,
                derive_stream(ctx, c as u64, outer as u64),
            )
        };
        let results: Vec<Result<UpdateDelta>> = if self.parallel {
            children.par_iter().enumerate().map(run_child).collect()
        } else {
            children.iter().enumerate().map(run_child).collect()
        };
        for (k, res) in results.into_iter().enumerate() {
            let delta = res?;
            let beta = self.betas.beta[node][k];
            for (j, &p) in self.child_pos[node][k].iter().enumerate() {
                alpha[p] += beta * delta.delta_alpha[j];
            }
            for (wi, dwi) in w.iter_mut().zip(&delta.delta_w) {
                *wi += beta * dwi;
            }
        }
        Ok(())
    }

    /// Delta computed by the subtree rooted at `node`, relative to the given
    /// (`alpha_block`, `w`) snapshot. Leaves run LocalSDCA; internal nodes run
    /// their `T_i` aggregation rounds.
    pub fn node_delta(
        &self,
        node: usize,
        alpha_block: &[f64],
        w: &[f64],
        ctx: u64,
    ) -> Result<UpdateDelta> {
        if self.topology.is_leaf(node) {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx);
            return local_sdca(
                self.ds,
                self.spec,
                self.lambda,
                &self.indices[node],
                alpha_block,
                w,
                self.iterations.t[node],
                &mut rng,
            );
        }
        let mut alpha = alpha_block.to_vec();
        let mut w_cur = w.to_vec();
        for t in 1..=self.iterations.t[node] {
            self.aggregate_step(node, &mut alpha, &mut w_cur, ctx, t)?;
        }
        let delta_alpha = alpha
            .iter()
            .zip(alpha_block)
            .map(|(a, a0)| a - a0)
            .collect();
        let delta_w = w_cur.iter().zip(w).map(|(a, a0)| a - a0).collect();
        Ok(UpdateDelta {
            delta_alpha,
            delta_w,
        })
    }

    /// Full run from `alpha = 0, w = 0`: the root performs its scheduled
    /// number of aggregation rounds and a trace record is taken before the
    /// first round and after each one. `time_per_outer` is the simulated
    /// duration of one root round.
    pub fn run(&self, seed: u64, time_per_outer: f64) -> Result<Vec<TraceRecord>> {
        let root = self.topology.root();
        let mut alpha = vec![0.0; self.ds.m()];
        let mut w = vec![0.0; self.ds.d()];
        let rounds = self.iterations.t[root];
        let mut trace = Vec::with_capacity(rounds + 1);
        trace.push(self.record(0, 0.0, &alpha, &w)?);
        for t in 1..=rounds {
            self.aggregate_step(root, &mut alpha, &mut w, seed, t)?;
            trace.push(self.record(t, t as f64 * time_per_outer, &alpha, &w)?);
        }
        Ok(trace)
    }

    fn record(&self, outer: usize, time: f64, alpha: &[f64], w: &[f64]) -> Result<TraceRecord> {
        let primal = primal_value(self.ds, self.spec, self.lambda, w);
        let dual = dual_value(self.ds, self.spec, self.lambda, alpha)?;
        Ok(TraceRecord {
            outer_iteration: outer,
            simulated_time: time,
            primal,
            dual,
            gap: primal - dual,
        })
    }
}

/// Deterministic per-(node, iteration) RNG stream derivation; splitmix64
/// mixing keeps streams independent of execution interleaving.
pub fn derive_stream(ctx: u64, a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(ctx ^ mix(a.wrapping_add(mix(b))))
}
