//! Back-and-forth error compensation and correction between two grids.
//!
//! Both boosters share the first two passes: a forward transfer `f* = P(f)`
//! from source to target and a backward transfer `f~ = Q(f*)` from target to
//! source. They differ in how the round-trip discrepancy `f - f~` is used:
//!
//! * BFECC compensates the source data, `f^ = f + (f - f~) / 2`, and transfers
//!   again: `f_new = P(f^)`.
//! * Modified MacCormack corrects the forward result directly. Viewing the
//!   transfer as one step of a semi-Lagrangian advection on the shared index
//!   lattice, the correction computed at source node `i` is added to target
//!   node `i`: `f_new[i] = f*[i] + (f[i] - f~[i]) / 2`. This needs source and
//!   target to share node counts.

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{Field, Grid};
use crate::interp::{weighted_sum, Method, Transfer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BfeccError {
    #[error("source grid is {source_dim}D but target grid is {target_dim}D")]
    DimMismatch { source_dim: usize, target_dim: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
}

/// How a target node's final value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    /// Every pass had complete stencils.
    Bfecc,
    /// Forward stencil valid, compensation chain incomplete; value is the
    /// plain forward interpolation.
    FallbackLinear,
    /// Target outside the source grid.
    Invalid,
}

#[derive(Debug, Clone)]
pub struct BfeccResult {
    /// Boosted values on the target grid.
    pub values: Field,
    /// Plain forward interpolation `f*`.
    pub forward: Field,
    pub mask: Vec<NodeStatus>,
}

impl BfeccResult {
    pub fn count(&self, status: NodeStatus) -> usize {
        self.mask.iter().filter(|&&s| s == status).count()
    }
}

/// Shared forward/backward passes.
struct RoundTrip {
    forward_transfer: Transfer,
    forward: Vec<f64>,
    forward_ok: Vec<bool>,
    /// `(f - f~) / 2` on the source where the backward chain is complete.
    correction: Vec<f64>,
    /// Backward value exists and drew only on valid forward values.
    backward_ok: Vec<bool>,
}

fn check_inputs(source: &Grid, f: &Field, target: &Grid) -> Result<(), BfeccError> {
    if source.dim() != target.dim() {
        return Err(BfeccError::DimMismatch {
            source_dim: source.dim(),
            target_dim: target.dim(),
        });
    }
    if f.grid() != source {
        return Err(BfeccError::GridMismatch("field does not live on the source grid"));
    }
    Ok(())
}

fn round_trip(source: &Grid, f: &Field, target: &Grid, method: Method) -> RoundTrip {
    let forward_transfer = Transfer::between(source, target, method);
    let (forward, forward_ok) = forward_transfer.apply_with_mask(f.values());

    let backward = Transfer::between(target, source, method);
    let fv = f.values();
    let (correction, backward_ok): (Vec<f64>, Vec<bool>) = (0..source.len())
        .into_par_iter()
        .map(|i| {
            let mut nodes = [0usize; 8];
            let mut w = [0.0; 8];
            let c = backward.stencil(i, &mut nodes, &mut w);
            let complete = c > 0
                && nodes[..c]
                    .iter()
                    .zip(&w[..c])
                    .all(|(&t, &wt)| wt == 0.0 || forward_ok[t]);
            if complete {
                let back = weighted_sum(&nodes[..c], &w[..c], &forward);
                (0.5 * (fv[i] - back), true)
            } else {
                (0.0, false)
            }
        })
        .unzip();

    RoundTrip {
        forward_transfer,
        forward,
        forward_ok,
        correction,
        backward_ok,
    }
}

fn into_result(target: &Grid, values: Vec<f64>, forward: Vec<f64>, mask: Vec<NodeStatus>) -> BfeccResult {
    BfeccResult {
        values: Field::new(target.clone(), values).expect("length matches target"),
        forward: Field::new(target.clone(), forward).expect("length matches target"),
        mask,
    }
}

/// Four-step BFECC interpolation of `f` from `source` onto the nodes of
/// `target`, using `method` for every pass.
pub fn bfecc_interpolate(
    source: &Grid,
    f: &Field,
    target: &Grid,
    method: Method,
) -> Result<BfeccResult, BfeccError> {
    check_inputs(source, f, target)?;
    let rt = round_trip(source, f, target, method);

    let fv = f.values();
    // compensated source data; equals f where the backward chain is incomplete
    let compensated: Vec<f64> = fv
        .par_iter()
        .zip(&rt.correction)
        .zip(&rt.backward_ok)
        .map(|((&v, &c), &ok)| if ok { v + c } else { v })
        .collect();

    let transfer = &rt.forward_transfer;
    let (values, mask): (Vec<f64>, Vec<NodeStatus>) = (0..target.len())
        .into_par_iter()
        .map(|t| {
            let mut nodes = [0usize; 8];
            let mut w = [0.0; 8];
            let c = transfer.stencil(t, &mut nodes, &mut w);
            if c == 0 {
                (f64::NAN, NodeStatus::Invalid)
            } else if nodes[..c]
                .iter()
                .zip(&w[..c])
                .all(|(&s, &ws)| ws == 0.0 || rt.backward_ok[s])
            {
                (weighted_sum(&nodes[..c], &w[..c], &compensated), NodeStatus::Bfecc)
            } else {
                (rt.forward[t], NodeStatus::FallbackLinear)
            }
        })
        .unzip();
    drop(compensated);
    Ok(into_result(target, values, rt.forward, mask))
}

/// Two-pass modified MacCormack interpolation. Requires `target` to have the
/// same node counts as `source`; the correction at source node `i` is applied
/// to target node `i`.
pub fn maccormack_interpolate(
    source: &Grid,
    f: &Field,
    target: &Grid,
    method: Method,
) -> Result<BfeccResult, BfeccError> {
    check_inputs(source, f, target)?;
    if source.counts() != target.counts() {
        return Err(BfeccError::GridMismatch(
            "MacCormack correction needs source and target with equal node counts",
        ));
    }
    let rt = round_trip(source, f, target, method);
    let (values, mask): (Vec<f64>, Vec<NodeStatus>) = (0..target.len())
        .into_par_iter()
        .map(|t| {
            if !rt.forward_ok[t] {
                (f64::NAN, NodeStatus::Invalid)
            } else if rt.backward_ok[t] {
                (rt.forward[t] + rt.correction[t], NodeStatus::Bfecc)
            } else {
                (rt.forward[t], NodeStatus::FallbackLinear)
            }
        })
        .unzip();
    Ok(into_result(target, values, rt.forward, mask))
}
