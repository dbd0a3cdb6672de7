//! Truncating a layered circuit to a window of the ring and blending two
//! truncations into a band, then splitting the circuit into two layers of
//! disjoint blocks.
//!
//! `A·B⁻¹` with every layer of `B` contained in the matching layer of `A`
//! is evaluated from the middle outwards: a gate shared by both layers
//! that misses everything kept so far commutes through and cancels. The
//! same bookkeeping prunes `W O W⁻¹` to the light cone of `O`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::linalg::ipow;
use crate::operator::LocalOperator;
use crate::pauli::{clock, shift};

use super::map::{compose_qca, qca_from_circuit, qca_from_gates, TRUNC_TOL};
use super::staircase::StaircaseCircuit;

const AGREE_TOL: f64 = 1e-9;
const BLOCK_GUARD: usize = 1 << 12;

fn in_window(n: usize, origin: usize, len: usize, s: usize) -> bool {
    (s + n - origin % n) % n < len
}

fn shifted(g: &LocalOperator, n: usize, t: usize) -> Result<LocalOperator> {
    LocalOperator::new(g.p(), g.support().iter().map(|s| (s + t) % n).collect(), g.matrix().clone())
}

/// Smallest proper period under which every layer maps onto itself.
pub fn translation_period(c: &Circuit) -> Option<usize> {
    let n = c.n();
    (1..n).filter(|t| n.is_multiple_of(*t)).find(|&t| {
        c.layers().iter().all(|layer| {
            layer.iter().all(|g| match shifted(g, n, t) {
                Ok(h) => layer
                    .iter()
                    .any(|k| k.support() == h.support() && crate::linalg::max_abs_diff(k.matrix(), h.matrix()) < 1e-12),
                Err(_) => false,
            })
        })
    })
}

/// Keeps the gates lying entirely in `[origin, origin + len)` on the ring,
/// layer by layer.
pub fn window_truncate(c: &Circuit, origin: usize, len: usize) -> Result<Circuit> {
    let n = c.n();
    let layers = c
        .layers()
        .iter()
        .map(|l| l.iter().filter(|g| g.support().iter().all(|&s| in_window(n, origin, len, s))).cloned().collect())
        .collect();
    Circuit::new(n, c.p(), layers)
}

/// Drops every gate touching `z >= c`, coordinates counted from site 0.
pub fn truncate_halfspace(ti: &Circuit, c: usize) -> Result<Circuit> {
    if c > ti.n() {
        return Err(Error::Range(format!("cut {c} beyond ring of {}", ti.n())));
    }
    window_truncate(ti, 0, c)
}

fn union_into(supp: &mut BTreeSet<usize>, gates: &[LocalOperator]) {
    for g in gates {
        supp.extend(g.support().iter().copied());
    }
}

fn touches(g: &LocalOperator, supp: &BTreeSet<usize>) -> bool {
    g.support().iter().any(|s| supp.contains(s))
}

/// Time-ordered gates of `U_A U_B⁻¹`.
fn prune_quotient(a: &Circuit, b: &Circuit) -> Result<Vec<LocalOperator>> {
    if a.depth() != b.depth() {
        return Err(Error::InternalConsistency("truncations of different depth".into()));
    }
    let mut supp = BTreeSet::new();
    let mut before: Vec<Vec<LocalOperator>> = Vec::new();
    let mut after: Vec<Vec<LocalOperator>> = Vec::new();
    for (t, (la, lb)) in a.layers().iter().zip(b.layers()).enumerate() {
        if lb.iter().any(|g| !la.iter().any(|h| h.support() == g.support())) {
            return Err(Error::InternalConsistency(format!("layer {t} of the inner truncation is not nested")));
        }
        let shared = |g: &LocalOperator| lb.iter().any(|h| h.support() == g.support());
        let keep_a: Vec<LocalOperator> =
            la.iter().filter(|g| !shared(g) || (t > 0 && touches(g, &supp))).cloned().collect();
        let keep_b: Vec<LocalOperator> =
            lb.iter().filter(|g| t > 0 && touches(g, &supp)).map(|g| g.adjoint()).collect();
        union_into(&mut supp, &keep_a);
        union_into(&mut supp, &keep_b);
        before.push(keep_b);
        after.push(keep_a);
    }
    Ok(before.into_iter().rev().flatten().chain(after.into_iter().flatten()).collect())
}

/// Time-ordered gates of `U_W O U_W⁻¹` for a gate list `O`.
fn prune_conjugation(w: &Circuit, inner: &[LocalOperator]) -> Vec<LocalOperator> {
    let mut supp = BTreeSet::new();
    union_into(&mut supp, inner);
    let mut kept: Vec<Vec<LocalOperator>> = Vec::new();
    for layer in w.layers() {
        let k: Vec<LocalOperator> = layer.iter().filter(|g| touches(g, &supp)).cloned().collect();
        union_into(&mut supp, &k);
        kept.push(k);
    }
    let undo = kept.iter().rev().flat_map(|l| l.iter().map(|g| g.adjoint()));
    undo.chain(inner.iter().cloned()).chain(kept.iter().flatten().cloned()).collect()
}

/// Circuit whose action is confined to the ring interval `[lo, hi)`.
#[derive(Clone, Debug)]
pub struct BandQCA {
    lo: usize,
    hi: usize,
    gates: StaircaseCircuit,
}

impl BandQCA {
    pub fn band(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn gates(&self) -> &StaircaseCircuit {
        &self.gates
    }
}

fn check_band(n: usize, origin: usize, lo: usize, hi: usize, gates: &[LocalOperator]) -> Result<()> {
    let start = (origin + lo) % n;
    if let Some(g) = gates.iter().find(|g| g.support().iter().any(|&s| !in_window(n, start, hi - lo, s))) {
        return Err(Error::InternalConsistency(format!("band gate on {:?} leaves [{lo}, {hi})", g.support())));
    }
    Ok(())
}

/// `ζ_{c'} ∘ ζ_c⁻¹`: identity below `c - r'` and from `c'` on, equal to
/// the full circuit on `[c, c' - r')`.
pub fn band_qca(ti: &Circuit, c: usize, c2: usize) -> Result<BandQCA> {
    let (n, p) = (ti.n(), ti.p());
    let r = ti.ring_radius();
    if c + 5 * r >= c2 {
        return Err(Error::Precondition(format!("band [{c}, {c2}) narrower than 5 r' = {}", 5 * r)));
    }
    if c2 > n {
        return Err(Error::Range(format!("cut {c2} beyond ring of {n}")));
    }
    let gates = prune_quotient(&truncate_halfspace(ti, c2)?, &truncate_halfspace(ti, c)?)?;
    let lo = c.saturating_sub(r);
    check_band(n, 0, lo, c2, &gates)?;
    for z in c.max(r)..c2 - r {
        for m in [shift(p), clock(p)] {
            let g = LocalOperator::single(p, z, m)?;
            let band = crate::circuit::conjugate_through(&gates, &g, TRUNC_TOL);
            if band.distance(&ti.conjugate(&g, TRUNC_TOL)) > AGREE_TOL {
                return Err(Error::InternalConsistency(format!("band differs from the circuit at z = {z}")));
            }
        }
    }
    Ok(BandQCA { lo, hi: c2, gates: StaircaseCircuit::new(n, p, gates)? })
}

/// Period and band width of the two-layer split, in units of `r'`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    /// Period `20 r'`, bands of `10 r'`.
    Wide,
    /// Period `6 r'`, bands of `3 r'`.
    #[default]
    Tight,
}

impl Spacing {
    pub fn constants(self, r: usize) -> (usize, usize) {
        match self {
            Spacing::Wide => (20 * r, 10 * r),
            Spacing::Tight => (6 * r, 3 * r),
        }
    }
}

/// Gates acting inside the ring interval `[start, start + len)`.
#[derive(Clone, Debug)]
pub struct Block {
    pub start: usize,
    pub len: usize,
    pub gates: Vec<LocalOperator>,
}

impl Block {
    pub fn region(&self, n: usize) -> Vec<usize> {
        let mut r: Vec<usize> = (0..self.len).map(|k| (self.start + k) % n).collect();
        r.sort_unstable();
        r
    }

    /// Sites actually touched by the gates.
    pub fn footprint(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        union_into(&mut s, &self.gates);
        s
    }

    /// The block as one dense unitary on the touched sites.
    pub fn unitary(&self, p: usize) -> Result<LocalOperator> {
        let sites: Vec<usize> = self.footprint().into_iter().collect();
        let d = ipow(p, sites.len())?;
        if d > BLOCK_GUARD {
            return Err(Error::DimensionGuard(format!("block of {} sites", sites.len())));
        }
        let mut u = LocalOperator::identity(p).widened(&sites)?;
        for g in &self.gates {
            u = g.mul(&u);
        }
        Ok(u)
    }
}

#[derive(Clone, Debug)]
pub struct TwoLayer {
    pub n: usize,
    pub p: usize,
    /// `r'` used for the spacing.
    pub radius: usize,
    pub spacing: Spacing,
    pub translation_invariant: bool,
    /// Applied second.
    pub mu1: Vec<Block>,
    /// Applied first.
    pub mu2: Vec<Block>,
}

impl TwoLayer {
    pub fn gate_count(&self) -> usize {
        self.mu1.iter().chain(&self.mu2).map(|b| b.gates.len()).sum()
    }

    fn layer(&self, blocks: &[Block]) -> Result<StaircaseCircuit> {
        StaircaseCircuit::new(self.n, self.p, blocks.iter().flat_map(|b| b.gates.iter().cloned()).collect())
    }

    pub fn mu1_circuit(&self) -> Result<StaircaseCircuit> {
        self.layer(&self.mu1)
    }

    pub fn mu2_circuit(&self) -> Result<StaircaseCircuit> {
        self.layer(&self.mu2)
    }

    /// `μ₂` gates followed by `μ₁` gates.
    pub fn staircase(&self) -> Result<StaircaseCircuit> {
        self.mu2_circuit()?.then(&self.mu1_circuit()?)
    }
}

fn disjoint(blocks: &[Block]) -> bool {
    let prints: Vec<BTreeSet<usize>> = blocks.iter().map(|b| b.footprint()).collect();
    prints.iter().enumerate().all(|(i, a)| prints[i + 1..].iter().all(|b| a.is_disjoint(b)))
}

/// Splits the circuit into `μ₁ ∘ μ₂`, each a product of blocks on disjoint
/// intervals. `μ₂` holds the bands `τ` on `[P j - r', P j + L)`, and `μ₁`
/// the remainder on `[P (j-1) + L - r', P j + r')`.
pub fn two_layer_decompose(ti: &Circuit, spacing: Spacing) -> Result<TwoLayer> {
    let (n, p) = (ti.n(), ti.p());
    let r = ti.ring_radius().max(1);
    let (period, width) = spacing.constants(r);
    if n < 2 * period || n % period != 0 {
        return Err(Error::Precondition(format!(
            "ring of {n} sites is not a multiple of at least two periods of {period}"
        )));
    }
    let blocks = n / period;
    let origin = |j: usize| (period * j + n - 2 * r) % n;
    let outer = |j: usize| window_truncate(ti, origin(j), 2 * r + width);
    let inner = |j: usize| window_truncate(ti, origin(j), 2 * r);

    let mut mu2 = Vec::with_capacity(blocks);
    for j in 0..blocks {
        let gates = prune_quotient(&outer(j)?, &inner(j)?)?;
        let block = Block { start: (period * j + n - r) % n, len: width + r, gates };
        check_band(n, block.start, 0, block.len, &block.gates)?;
        mu2.push(block);
    }

    // U_ζ = (Π F) U_{∪A}, and U_{μ₁} = (Π F) Π_j U_{A_j} U_{B_j} U_{A_j}⁻¹
    let inside_any = |g: &LocalOperator| {
        (0..blocks).any(|j| g.support().iter().all(|&s| in_window(n, origin(j), 2 * r + width, s)))
    };
    let all_a = Circuit::new(
        n,
        p,
        ti.layers().iter().map(|l| l.iter().filter(|g| inside_any(g)).cloned().collect()).collect(),
    )?;
    let rest = prune_quotient(ti, &all_a)?;
    let mut mu1: Vec<Block> = (0..blocks)
        .map(|j| {
            let inner_gates: Vec<LocalOperator> = inner(j)?.gates().cloned().collect();
            let gates = prune_conjugation(&outer(j)?, &inner_gates);
            let start = (period * (j + blocks - 1) + width + n - r) % n;
            Ok(Block { start, len: period - width + 2 * r, gates })
        })
        .collect::<Result<_>>()?;
    for g in rest {
        let home = mu1.iter_mut().find(|b| g.support().iter().all(|&s| in_window(n, b.start, b.len, s)));
        match home {
            Some(b) => b.gates.push(g),
            None => {
                return Err(Error::InternalConsistency(format!("gate on {:?} falls between blocks", g.support())))
            }
        }
    }
    for b in &mu1 {
        check_band(n, b.start, 0, b.len, &b.gates)?;
    }
    if !disjoint(&mu1) || !disjoint(&mu2) {
        return Err(Error::InternalConsistency("blocks within a layer overlap".into()));
    }
    let out = TwoLayer {
        n,
        p,
        radius: r,
        spacing,
        translation_invariant: translation_period(ti).is_some(),
        mu1,
        mu2,
    };
    let composed = compose_qca(&qca_from_gates(n, p, out.mu1_circuit()?.gates())?, &qca_from_gates(n, p, out.mu2_circuit()?.gates())?)?;
    let dist = composed.distance(&qca_from_circuit(ti)?);
    if dist > AGREE_TOL {
        return Err(Error::InternalConsistency(format!("two-layer product differs from the circuit by {dist:.2e}")));
    }
    Ok(out)
}
