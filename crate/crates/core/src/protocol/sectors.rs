//! Charge-sector structure of a region and block-diagonal symmetric unitaries.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::haar::HaarUnitary;
use crate::linalg::{apply_on_digits, digit_bases, digit_offsets, ipow, CMatrix, C64, ZERO};
use crate::operator::LocalOperator;
use crate::seed::child_rng;
use crate::state::{StateVector, MAX_STATE_DIM};

use super::charge::{level_key, ChargeOperator};

/// Sectors of a region in the product eigenbasis of its charged sites.
#[derive(Clone, Debug)]
pub struct SectorLayout {
    p: usize,
    region: Vec<usize>,
    charged: Vec<bool>,
    basis: CMatrix,
    rotate: bool,
    keys: Vec<i64>,
    members: Vec<Vec<usize>>,
}

impl SectorLayout {
    /// Sectors of the total charge `sum_j Q_j` over the charged region sites.
    pub fn additive(region: &[usize], charged: &[bool], charge: &ChargeOperator) -> Result<Self> {
        Self::build(
            charge.p(),
            region,
            charged,
            charge.levels().to_vec(),
            charge.basis().clone(),
            !charge.is_diagonal(),
            None,
        )
    }

    /// Sectors of a product of commuting unitaries `prod_j G_j` whose
    /// eigenvalues are `omega^k` on the `k`-th column of `basis`.
    pub fn multiplicative(p: usize, region: &[usize], charged: &[bool], basis: CMatrix) -> Result<Self> {
        Self::build(p, region, charged, (0..p).map(|k| k as f64).collect(), basis, true, Some(p as i64))
    }

    fn build(
        p: usize,
        region: &[usize],
        charged: &[bool],
        levels: Vec<f64>,
        basis: CMatrix,
        rotate: bool,
        modulus: Option<i64>,
    ) -> Result<Self> {
        if region.is_empty() {
            return Err(Error::EmptyRegion("symmetric region is empty".into()));
        }
        if charged.len() != region.len() {
            return Err(Error::InvalidDimension("charged mask length differs from region".into()));
        }
        let mut sorted = region.to_vec();
        sorted.sort_unstable();
        if sorted != region {
            return Err(Error::Config("region must be sorted".into()));
        }
        let d = ipow(p, region.len())?;
        if d > MAX_STATE_DIM {
            return Err(Error::DimensionGuard(format!("region dimension {d}")));
        }
        let mut map: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for idx in 0..d {
            let mut rest = idx;
            let mut total = 0.0;
            for &c in charged {
                let digit = rest % p;
                rest /= p;
                if c {
                    total += levels[digit];
                }
            }
            let mut key = level_key(total);
            if let Some(m) = modulus {
                key = (total.round() as i64).rem_euclid(m);
            }
            map.entry(key).or_default().push(idx);
        }
        let (keys, members) = map.into_iter().unzip();
        Ok(SectorLayout {
            p,
            region: region.to_vec(),
            charged: charged.to_vec(),
            basis,
            rotate,
            keys,
            members,
        })
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn sector_count(&self) -> usize {
        self.members.len()
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.len()).collect()
    }

    pub fn keys(&self) -> &[i64] {
        &self.keys
    }

    fn rotate_state(&self, state: &mut StateVector, inverse: bool) {
        if !self.rotate {
            return;
        }
        let m = if inverse { self.basis.adjoint() } else { self.basis.clone() };
        let (n, p) = (state.n(), state.p());
        for (j, &s) in self.region.iter().enumerate() {
            if self.charged[j] {
                apply_on_digits(state.amplitudes_mut(), p, n, &[s], &m);
            }
        }
    }

    /// Applies `f(sector, amplitudes)` to every sector slice of the state in
    /// the eigenbasis.
    fn for_each_slice<F>(&self, state: &mut StateVector, mut f: F) -> Result<()>
    where
        F: FnMut(usize, &mut [C64]) -> Result<()>,
    {
        if state.p() != self.p {
            return Err(Error::InvalidDimension("state local dimension differs".into()));
        }
        if self.region.last().is_some_and(|&s| s >= state.n()) {
            return Err(Error::SupportOutOfRange("region exceeds register".into()));
        }
        self.rotate_state(state, true);
        let off = digit_offsets(self.p, &self.region);
        let bases = digit_bases(self.p, state.n(), &self.region);
        let mut buf = Vec::new();
        for (sec, mem) in self.members.iter().enumerate() {
            for &b in &bases {
                buf.clear();
                buf.extend(mem.iter().map(|&l| state.amplitudes()[b + off[l]]));
                f(sec, &mut buf)?;
                let amps = state.amplitudes_mut();
                for (k, &l) in mem.iter().enumerate() {
                    amps[b + off[l]] = buf[k];
                }
            }
        }
        self.rotate_state(state, false);
        Ok(())
    }
}

/// Block-diagonal unitary with an independent Haar block in every sector.
#[derive(Clone, Debug)]
pub struct SymmetricUnitary {
    layout: Arc<SectorLayout>,
    blocks: Vec<HaarUnitary>,
}

impl SymmetricUnitary {
    pub fn sample<R: rand::Rng + ?Sized>(layout: Arc<SectorLayout>, rng: &mut R) -> Self {
        let blocks = layout.members.iter().map(|m| HaarUnitary::sample(m.len(), rng)).collect();
        SymmetricUnitary { layout, blocks }
    }

    pub fn layout(&self) -> &SectorLayout {
        &self.layout
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        self.layout.for_each_slice(state, |sec, v| {
            self.blocks[sec].apply(v);
            Ok(())
        })
    }

    /// Dense matrix on the region in the computational basis.
    pub fn to_operator(&self) -> Result<LocalOperator> {
        let lay = &self.layout;
        let d = ipow(lay.p, lay.region.len())?;
        if d > 1 << 12 {
            return Err(Error::DimensionGuard(format!("dense symmetric unitary of dimension {d}")));
        }
        let mut block = CMatrix::zeros(d, d);
        for (sec, mem) in lay.members.iter().enumerate() {
            let u = self.blocks[sec].to_matrix();
            for (a, &la) in mem.iter().enumerate() {
                for (b, &lb) in mem.iter().enumerate() {
                    block[(la, lb)] = u[(a, b)];
                }
            }
        }
        if lay.rotate {
            let factors: Vec<CMatrix> = lay
                .charged
                .iter()
                .map(|&c| if c { lay.basis.clone() } else { CMatrix::identity(lay.p, lay.p) })
                .collect();
            let v = crate::linalg::tensor_le(&factors);
            block = &v * block * v.adjoint();
        }
        LocalOperator::new(lay.p, lay.region.clone(), block)
    }
}

/// A fixed Haar-random symmetric unitary on a large region whose sector
/// blocks are drawn on first use from seeds derived from `seed` and the
/// sector index. Only sectors in which a state has weight are ever sampled.
#[derive(Clone, Debug)]
pub struct LazySymmetricHaar {
    layout: Arc<SectorLayout>,
    seed: u64,
}

impl LazySymmetricHaar {
    pub fn new(layout: Arc<SectorLayout>, seed: u64) -> Self {
        LazySymmetricHaar { layout, seed }
    }

    pub fn layout(&self) -> &SectorLayout {
        &self.layout
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        let seed = self.seed;
        self.layout.for_each_slice(state, |sec, v| {
            if v.iter().all(|z| *z == ZERO) {
                return Ok(());
            }
            let mut rng = child_rng(seed, sec as u64);
            HaarUnitary::sample(v.len(), &mut rng).apply(v);
            Ok(())
        })
    }
}

pub fn symmetric_haar<R: rand::Rng + ?Sized>(
    region: &[usize],
    charge: &ChargeOperator,
    rng: &mut R,
) -> Result<LocalOperator> {
    let layout = SectorLayout::additive(region, &vec![true; region.len()], charge)?;
    SymmetricUnitary::sample(Arc::new(layout), rng).to_operator()
}
