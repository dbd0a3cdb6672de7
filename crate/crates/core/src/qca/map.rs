//! Quantum cellular automata on a ring, stored as the images of the
//! single-site generators `X_i` and `Z_i`.

use serde::{Deserialize, Serialize};

use crate::circuit::{conjugate_through, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{apply_on_digits, c64, ipow, orthonormal_range, CMatrix, C64, ONE, ZERO};
use crate::operator::{GateRecord, LocalOperator};
use crate::par::{try_map_indexed, Execution};
use crate::pauli::{clock, generalized_pauli, omega, shift};

pub(crate) const TRUNC_TOL: f64 = 1e-12;
const CHECK_TOL: f64 = 1e-9;
const INVERT_GUARD: usize = 1 << 12;
const RANK_GUARD: usize = 1 << 12;

/// Site digit `x = a + p_a * b`, with `a` in the first factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorFactorization {
    pub pa: usize,
    pub pb: usize,
}

impl TensorFactorization {
    pub fn new(pa: usize, pb: usize) -> Result<Self> {
        if pa == 0 || pb == 0 || pa * pb < 2 {
            return Err(Error::InvalidDimension(format!("factorization {pa} x {pb}")));
        }
        Ok(TensorFactorization { pa, pb })
    }

    pub fn p(&self) -> usize {
        self.pa * self.pb
    }

    pub fn split(&self, x: usize) -> (usize, usize) {
        (x % self.pa, x / self.pa)
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        a + self.pa * b
    }
}

/// Which tensor factor of a site an operation moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct QCAMap {
    n: usize,
    p: usize,
    spread: usize,
    factor: Option<TensorFactorization>,
    images: Vec<(LocalOperator, LocalOperator)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ImagePair {
    pub site: usize,
    pub x: GateRecord,
    pub z: GateRecord,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QcaRecord {
    pub n: usize,
    pub p: usize,
    pub spread: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<TensorFactorization>,
    pub images: Vec<ImagePair>,
}

/// Distance between sites on a ring of `n`.
pub fn ring_distance(n: usize, a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Sites within `radius` of `i` on a ring, sorted.
pub(crate) fn ring_ball(n: usize, i: usize, radius: usize) -> Vec<usize> {
    (0..n).filter(|&s| ring_distance(n, s, i) <= radius).collect()
}

impl QCAMap {
    /// Table with the spread measured from the images.
    pub fn new(n: usize, p: usize, images: Vec<(LocalOperator, LocalOperator)>) -> Result<Self> {
        if images.len() != n {
            return Err(Error::InvalidDimension(format!("{} image pairs for {n} sites", images.len())));
        }
        for (x, z) in &images {
            if x.p() != p || z.p() != p {
                return Err(Error::InvalidDimension("image with wrong local dimension".into()));
            }
            x.check_range(n)?;
            z.check_range(n)?;
        }
        let mut map = QCAMap { n, p, spread: 0, factor: None, images };
        map.spread = map.measured_spread();
        Ok(map)
    }

    pub fn identity(n: usize, p: usize) -> Result<Self> {
        let images = (0..n)
            .map(|i| Ok((LocalOperator::single(p, i, shift(p))?, LocalOperator::single(p, i, clock(p))?)))
            .collect::<Result<Vec<_>>>()?;
        QCAMap::new(n, p, images)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Declared spread; supports are checked against it by [`verify_qca`].
    pub fn spread(&self) -> usize {
        self.spread
    }

    pub fn factor(&self) -> Option<TensorFactorization> {
        self.factor
    }

    pub fn with_factor(mut self, factor: TensorFactorization) -> Result<Self> {
        if factor.p() != self.p {
            return Err(Error::InvalidDimension(format!("{}x{} does not factor {}", factor.pa, factor.pb, self.p)));
        }
        self.factor = Some(factor);
        Ok(self)
    }

    pub fn with_spread(mut self, r: usize) -> Self {
        self.spread = r;
        self
    }

    pub fn images(&self) -> &[(LocalOperator, LocalOperator)] {
        &self.images
    }

    pub fn image_x(&self, i: usize) -> &LocalOperator {
        &self.images[i].0
    }

    pub fn image_z(&self, i: usize) -> &LocalOperator {
        &self.images[i].1
    }

    /// Largest ring distance between a site and the support of its images.
    pub fn measured_spread(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .flat_map(|(i, (x, z))| x.support().iter().chain(z.support()).map(move |&s| (i, s)))
            .map(|(i, s)| ring_distance(self.n, i, s))
            .max()
            .unwrap_or(0)
    }

    /// Largest entry-wise difference between corresponding images.
    pub fn distance(&self, other: &QCAMap) -> f64 {
        self.images
            .iter()
            .zip(&other.images)
            .map(|((a, b), (c, d))| a.distance(c).max(b.distance(d)))
            .fold(0.0, f64::max)
    }

    /// Images of the matrix units `|j><k|` at `site`, indexed `j * p + k`.
    fn units(&self, site: usize) -> Result<Vec<LocalOperator>> {
        let p = self.p;
        let (fx, fz) = &self.images[site];
        let mut xs = vec![LocalOperator::identity(p)];
        let mut zs = vec![LocalOperator::identity(p)];
        for _ in 1..p {
            xs.push(xs.last().expect("nonempty").mul(fx));
            zs.push(zs.last().expect("nonempty").mul(fz));
        }
        let mut out = Vec::with_capacity(p * p);
        for j in 0..p {
            for k in 0..p {
                let a = (j + p - k) % p;
                let mut acc = LocalOperator::scalar(p, ZERO);
                for (b, zb) in zs.iter().enumerate() {
                    let w = generalized_pauli(p, a as i64, b as i64)?[(j, k)].conj() / p as f64;
                    acc = acc.add(&xs[a].mul(zb).scale(w));
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// Splits `m` into a short sum of products across its first site, so
    /// only one operator product per term is needed.
    fn push(&self, units: &[Option<Vec<LocalOperator>>], sites: &[usize], m: &CMatrix) -> LocalOperator {
        let p = self.p;
        if sites.is_empty() {
            return LocalOperator::scalar(p, m[(0, 0)]);
        }
        let rest = m.nrows() / p;
        let u = units[sites[0]].as_ref().expect("units prepared for support");
        let rows = CMatrix::from_fn(rest * rest, p * p, |rc, jk| {
            m[((rc % rest) * p + jk / p, (rc / rest) * p + jk % p)]
        });
        let q = column_basis(rows.clone(), 1e-14);
        let coeffs = q.adjoint() * rows;
        let mut acc = LocalOperator::scalar(p, ZERO);
        for t in 0..q.ncols() {
            let mut left = LocalOperator::scalar(p, ZERO);
            for (jk, unit) in u.iter().enumerate() {
                let w = coeffs[(t, jk)];
                if w.norm() > 1e-16 {
                    left = left.add(&unit.scale(w));
                }
            }
            let b = CMatrix::from_fn(rest, rest, |r, c| q[(r + rest * c, t)]);
            acc = acc.add(&left.mul(&self.push(units, &sites[1..], &b)));
        }
        acc
    }

    /// Image of an arbitrary operator, expanded in matrix units site by site.
    pub fn apply(&self, op: &LocalOperator) -> Result<LocalOperator> {
        op.check_range(self.n)?;
        let mut units = vec![None; self.n];
        for &s in op.support() {
            units[s] = Some(self.units(s)?);
        }
        Ok(self.push(&units, op.support(), op.matrix()).truncate_support(TRUNC_TOL))
    }

    pub fn to_record(&self) -> QcaRecord {
        QcaRecord {
            n: self.n,
            p: self.p,
            spread: self.spread,
            factor: self.factor,
            images: self
                .images
                .iter()
                .enumerate()
                .map(|(site, (x, z))| ImagePair { site, x: x.to_record(), z: z.to_record() })
                .collect(),
        }
    }

    pub fn from_record(rec: &QcaRecord) -> Result<Self> {
        let mut pairs: Vec<&ImagePair> = rec.images.iter().collect();
        pairs.sort_by_key(|i| i.site);
        if pairs.iter().enumerate().any(|(i, im)| im.site != i) {
            return Err(Error::Config("need exactly one image pair per site".into()));
        }
        let images = pairs
            .iter()
            .map(|im| Ok((LocalOperator::from_record(rec.p, &im.x)?, LocalOperator::from_record(rec.p, &im.z)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut map = QCAMap::new(rec.n, rec.p, images)?.with_spread(rec.spread);
        if let Some(f) = rec.factor {
            map = map.with_factor(f)?;
        }
        Ok(map)
    }
}

/// Images of the generators under conjugation by a time-ordered gate list.
pub fn qca_from_gates(n: usize, p: usize, gates: &[LocalOperator]) -> Result<QCAMap> {
    let images = try_map_indexed(Execution::default(), n, |i| {
        let x = conjugate_through(gates, &LocalOperator::single(p, i, shift(p))?, TRUNC_TOL);
        let z = conjugate_through(gates, &LocalOperator::single(p, i, clock(p))?, TRUNC_TOL);
        Ok::<_, Error>((x, z))
    })?;
    QCAMap::new(n, p, images)
}

pub fn qca_from_circuit(circuit: &Circuit) -> Result<QCAMap> {
    let gates: Vec<LocalOperator> = circuit.gates().cloned().collect();
    qca_from_gates(circuit.n(), circuit.p(), &gates)
}

/// `X_i -> X_{i+e}`, `Z_i -> Z_{i+e}` with indices mod `n`.
pub fn shift_qca(n: usize, p: usize, e: i64) -> Result<QCAMap> {
    if n == 0 {
        return Err(Error::EmptyRegion("empty ring".into()));
    }
    let images = (0..n)
        .map(|i| {
            let j = (i as i64 + e).rem_euclid(n as i64) as usize;
            Ok((LocalOperator::single(p, j, shift(p))?, LocalOperator::single(p, j, clock(p))?))
        })
        .collect::<Result<Vec<_>>>()?;
    QCAMap::new(n, p, images)
}

/// Image of a single-site operator when only `part` of each site moves by
/// `e`: the moved factor lands on site `i + e`, the other stays at `i`.
fn relabel(f: &TensorFactorization, part: Part, n: usize, i: usize, e: i64, m: &CMatrix) -> Result<LocalOperator> {
    let p = f.p();
    let j = (i as i64 + e).rem_euclid(n as i64) as usize;
    if j == i {
        return LocalOperator::single(p, i, m.clone());
    }
    // digits: (kept factor at i, moved factor at j); spectators carry identity
    let (keep, mv) = match part {
        Part::B => (f.pa, f.pb),
        Part::A => (f.pb, f.pa),
    };
    let site = |kept: usize, moved: usize| match part {
        Part::B => f.join(kept, moved),
        Part::A => f.join(moved, kept),
    };
    let mut out = CMatrix::zeros(p * p, p * p);
    for row in 0..p {
        for col in 0..p {
            let z = m[(row, col)];
            if z == ZERO {
                continue;
            }
            let (ra, rb) = f.split(row);
            let (ca, cb) = f.split(col);
            let ((rk, rm), (ck, cm)) = match part {
                Part::B => ((ra, rb), (ca, cb)),
                Part::A => ((rb, ra), (cb, ca)),
            };
            // spectators: the moved factor at i and the kept factor at j
            for sm in 0..mv {
                for sk in 0..keep {
                    let r = site(rk, sm) + p * site(sk, rm);
                    let c = site(ck, sm) + p * site(sk, cm);
                    out[(r, c)] += z;
                }
            }
        }
    }
    LocalOperator::new(p, vec![i, j], out)
}

/// Moves one tensor factor of every site by `e`, fixing the other.
pub fn factor_shift_qca(n: usize, factor: TensorFactorization, part: Part, e: i64) -> Result<QCAMap> {
    let p = factor.p();
    let images = (0..n)
        .map(|i| {
            let x = relabel(&factor, part, n, i, e, &shift(p))?.truncate_support(TRUNC_TOL);
            let z = relabel(&factor, part, n, i, e, &clock(p))?.truncate_support(TRUNC_TOL);
            Ok((x, z))
        })
        .collect::<Result<Vec<_>>>()?;
    QCAMap::new(n, p, images)?.with_factor(factor)
}

fn same_register(f: &QCAMap, g: &QCAMap) -> Result<()> {
    if f.n != g.n || f.p != g.p {
        return Err(Error::InvalidDimension("maps act on different registers".into()));
    }
    Ok(())
}

/// `f ∘ g`: the images of `g` pushed through `f`.
pub fn compose_qca(f: &QCAMap, g: &QCAMap) -> Result<QCAMap> {
    same_register(f, g)?;
    let units = try_map_indexed(Execution::default(), f.n, |s| f.units(s).map(Some))?;
    let images = try_map_indexed(Execution::default(), f.n, |i| {
        let (x, z) = &g.images[i];
        let fx = f.push(&units, x.support(), x.matrix()).truncate_support(TRUNC_TOL);
        let fz = f.push(&units, z.support(), z.matrix()).truncate_support(TRUNC_TOL);
        Ok::<_, Error>((fx, fz))
    })?;
    let mut out = QCAMap::new(f.n, f.p, images)?;
    if f.factor == g.factor {
        out.factor = f.factor;
    }
    Ok(out)
}

/// Inverse by local reconstruction: on the ball of radius `2r` around a
/// site, the images of the generators within `r` define a unitary `V` with
/// `f(O ⊗ 1) = V (O ⊗ 1) V†`, and `V† X_i V` gives the inverse image.
pub fn invert_qca(f: &QCAMap) -> Result<QCAMap> {
    let (n, p) = (f.n, f.p);
    let r = f.measured_spread();
    let images = try_map_indexed(Execution::default(), n, |i| invert_site(f, i, r))?;
    let mut out = QCAMap::new(n, p, images)?;
    out.factor = f.factor;
    Ok(out)
}

fn apply_columns(m: &mut CMatrix, p: usize, sites: usize, positions: &[usize], op: &CMatrix) {
    let d = m.nrows();
    for col in m.as_mut_slice().chunks_mut(d) {
        apply_on_digits(col, p, sites, positions, op);
    }
}

/// Orthonormal basis of the column space, by Gram-Schmidt with column
/// pivoting, stopping once every residual is below `tol` times the largest
/// column norm.
fn column_basis(cols: CMatrix, tol: f64) -> CMatrix {
    let scale = cols.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    orthonormal_range(cols, tol * scale)
}

/// Orthonormal basis of the range of a projector of known rank.
fn range_basis(cols: CMatrix, rank: usize) -> Option<CMatrix> {
    let basis = column_basis(cols, 1e-7);
    (basis.ncols() == rank).then_some(basis)
}

/// Inverse images of `X_i`, `Z_i`. On the ball `R` of radius `2r`, the
/// images of the generators of the inner ball `Q` generate a full matrix
/// algebra, so `V |k, e> = f(X)^k ψ_e` over a basis `ψ_e` of the joint
/// `f(Z) = 1` space intertwines it with `M(Q) ⊗ 1`.
fn invert_site(f: &QCAMap, i: usize, r: usize) -> Result<(LocalOperator, LocalOperator)> {
    let (n, p) = (f.n, f.p);
    let region = ring_ball(n, i, 2 * r);
    let inner = ring_ball(n, i, r);
    let k = region.len();
    let d = ipow(p, k)?;
    if d > INVERT_GUARD {
        return Err(Error::DimensionGuard(format!("inverse patch of {k} sites exceeds {INVERT_GUARD} dimensions")));
    }
    let pos = |sites: &[usize]| -> Vec<usize> { sites.iter().map(|s| region.binary_search(s).expect("ball")).collect() };
    let pos_inner = pos(&inner);
    let pos_outer: Vec<usize> = (0..k).filter(|q| !pos_inner.contains(q)).collect();
    let d_in = ipow(p, inner.len())?;
    let m = d / d_in;

    let mut proj = CMatrix::identity(d, d);
    for &j in &inner {
        let z = &f.images[j].1;
        let mut acc = CMatrix::zeros(z.dim(), z.dim());
        let mut zb = CMatrix::identity(z.dim(), z.dim());
        for _ in 0..p {
            acc += &zb;
            zb = &zb * z.matrix();
        }
        apply_columns(&mut proj, p, k, &pos(z.support()), &(acc / c64(p as f64, 0.0)));
    }
    let fixed = range_basis(proj, m)
        .ok_or_else(|| Error::InternalConsistency(format!("fixed space at site {i} is not of dimension {m}")))?;

    // column index of |a, e>: a on the inner digits, e on the outer ones
    let spread_digits = |value: usize, places: &[usize]| -> usize {
        places.iter().enumerate().map(|(t, &q)| ((value / p.pow(t as u32)) % p) * p.pow(q as u32)).sum()
    };
    let col = |a: usize, e: usize| spread_digits(a, &pos_inner) + spread_digits(e, &pos_outer);

    let xs: Vec<(Vec<usize>, &CMatrix)> =
        inner.iter().map(|&j| (pos(f.images[j].0.support()), f.images[j].0.matrix())).collect();
    let mut v = CMatrix::zeros(d, d);
    for e in 0..m {
        for a in 0..d_in {
            let mut w: Vec<C64> = fixed.column(e).iter().cloned().collect();
            for (t, (sup, x)) in xs.iter().enumerate() {
                for _ in 0..(a / p.pow(t as u32)) % p {
                    apply_on_digits(&mut w, p, k, sup, x);
                }
            }
            v.column_mut(col(a, e)).copy_from_slice(&w);
        }
    }

    let site = region.binary_search(&i).expect("centre");
    let pull = |local: CMatrix| -> Result<LocalOperator> {
        let mut y = v.clone();
        apply_columns(&mut y, p, k, &[site], &local);
        let mut w = CMatrix::zeros(d_in, d_in);
        for a in 0..d_in {
            for b in 0..d_in {
                let s: C64 = (0..m).map(|e| v.column(col(a, e)).dotc(&y.column(col(b, e)))).sum();
                w[(a, b)] = s / c64(m as f64, 0.0);
            }
        }
        // X V = V (W ⊗ 1)
        let mut residual: f64 = 0.0;
        for e in 0..m {
            for b in 0..d_in {
                let mut expect = y.column(col(b, e)).into_owned();
                for a in 0..d_in {
                    expect.axpy(-w[(a, b)], &v.column(col(a, e)), ONE);
                }
                residual = residual.max(expect.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        if residual > 1e-8 {
            return Err(Error::InternalConsistency(format!("inverse image at site {i} leaves the ball")));
        }
        Ok(LocalOperator::new(p, inner.clone(), w)?.truncate_support(TRUNC_TOL))
    };
    Ok((pull(shift(p))?, pull(clock(p))?))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct QcaReport {
    pub failures: Vec<String>,
    /// Whether the generated algebra was checked to be the full algebra.
    pub rank_checked: bool,
}

impl QcaReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn normalized_trace(op: &LocalOperator) -> C64 {
    let d = op.dim() as f64;
    op.matrix().trace() / d
}

/// Weyl relations, locality and commutation of the images, and, for small
/// registers, that no nontrivial Pauli string maps to something with
/// nonzero trace (which makes the images span the full algebra).
pub fn verify_qca(f: &QCAMap) -> QcaReport {
    let (n, p) = (f.n, f.p);
    let mut failures = Vec::new();
    let id = LocalOperator::identity(p);
    let w = omega(p);
    for (i, (x, z)) in f.images.iter().enumerate() {
        for (name, op) in [("X", x), ("Z", z)] {
            let dev = op.unitarity_deviation();
            if dev > CHECK_TOL {
                failures.push(format!("site {i}: {name} image not unitary (deviation {dev:.2e})"));
            }
            let pw = op.pow(p).distance(&id);
            if pw > CHECK_TOL {
                failures.push(format!("site {i}: {name} image to the power {p} is not identity ({pw:.2e})"));
            }
            if let Some(&s) = op.support().iter().find(|&&s| ring_distance(n, i, s) > f.spread) {
                failures.push(format!("site {i}: {name} image reaches site {s} beyond spread {}", f.spread));
            }
        }
        let rel = z.mul(x).distance(&x.mul(z).scale(w));
        if rel > CHECK_TOL {
            failures.push(format!("site {i}: Z X != omega X Z ({rel:.2e})"));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&f.images[i], &f.images[j]);
            let near = [&a.0, &a.1].iter().any(|u| u.overlaps(b.0.support()) || u.overlaps(b.1.support()));
            if !near {
                continue;
            }
            for (u, v) in [(&a.0, &b.0), (&a.0, &b.1), (&a.1, &b.0), (&a.1, &b.1)] {
                let c = u.commutator_norm(v);
                if c > CHECK_TOL {
                    failures.push(format!("sites {i},{j}: images do not commute ({c:.2e})"));
                    break;
                }
            }
        }
    }
    let strings = ipow(p, 2 * n).unwrap_or(usize::MAX);
    let rank_checked = failures.is_empty() && strings <= RANK_GUARD;
    if rank_checked {
        let powers: Vec<(Vec<LocalOperator>, Vec<LocalOperator>)> = f
            .images
            .iter()
            .map(|(x, z)| {
                let mut xs = vec![id.clone()];
                let mut zs = vec![id.clone()];
                for _ in 1..p {
                    xs.push(xs.last().expect("nonempty").mul(x));
                    zs.push(zs.last().expect("nonempty").mul(z));
                }
                (xs, zs)
            })
            .collect();
        let mut worst = 0.0f64;
        let mut stack = vec![(0usize, id.clone(), true)];
        while let Some((site, prefix, trivial)) = stack.pop() {
            if site == n {
                if !trivial {
                    worst = worst.max(normalized_trace(&prefix).norm());
                }
                continue;
            }
            for a in 0..p {
                for b in 0..p {
                    let next = prefix.mul(&powers[site].0[a]).mul(&powers[site].1[b]);
                    stack.push((site + 1, next, trivial && a == 0 && b == 0));
                }
            }
        }
        if worst > CHECK_TOL {
            failures.push(format!("images do not generate the full algebra (trace {worst:.2e})"));
        }
    }
    QcaReport { failures, rank_checked }
}
