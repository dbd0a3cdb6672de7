//! Heisenberg images `U X_i U†`, `U Z_i U†` from local state tomography.
//!
//! A density `rho` is prepared on site `i` with the remaining sites in
//! computational basis states. After the oracle, the reduced state on the
//! ball `B_i` averaged over the environment equals `U (rho ⊗ I) U† / p^{n-1}`
//! restricted to `B_i`, so `U rho U† = p^{|B_i|-1} sigma` there. Only sites
//! within twice the spread of `i` can influence `B_i`; the simulation
//! enumerates their basis states exactly instead of drawing them at random.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::decompose::{operator_to_densities, WeightedDensity};
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_eigen, hermiticity_deviation, identity, ipow, max_abs_diff, trace, CMatrix, C64, ONE, ZERO};
use crate::operator::{GateRecord, LocalOperator};
use crate::par::{map_indexed, Execution};
use crate::pauli::{clock, shift};
use crate::seed::child_rng;
use crate::state::StateVector;

use super::oracle::OracleChannel;
use super::tomography::MubTomography;

/// Largest number of environment configurations enumerated per preparation.
const MAX_CONFIGS: usize = 1 << 22;
/// Largest ball dimension handled by the dense tomography.
const MAX_BALL_DIM: usize = 1 << 10;
const RUN_CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TomographyMode {
    /// Reduced density matrices read from the simulator.
    #[default]
    Exact,
    /// Product-basis shot measurements with linear inversion.
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TomographySettings {
    pub mode: TomographyMode,
    /// Shots per basis setting; `None` uses the accuracy schedule.
    #[serde(default)]
    pub shots: Option<u64>,
    /// Target operator-norm accuracy of the doubled circuit.
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl TomographySettings {
    pub fn exact() -> Self {
        TomographySettings {
            mode: TomographyMode::Exact,
            shots: None,
            epsilon: 1e-8,
            delta: 0.1,
            seed: 0,
            execution: Execution::default(),
        }
    }

    pub fn sampled(epsilon: f64, delta: f64, seed: u64) -> Self {
        TomographySettings {
            mode: TomographyMode::Sampled,
            shots: None,
            epsilon,
            delta,
            seed,
            execution: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.mode == TomographyMode::Sampled
            && !(self.epsilon > 0.0 && self.delta > 0.0 && self.delta < 1.0)
        {
            return Err(Error::Config("sampled tomography needs epsilon > 0 and 0 < delta < 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergImage {
    pub site: usize,
    pub image_x: LocalOperator,
    pub image_z: LocalOperator,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImageRecord {
    pub site: usize,
    pub image_x: GateRecord,
    pub image_z: GateRecord,
}

impl HeisenbergImage {
    /// Largest of `|| A A† - I ||` over the two images.
    pub fn unitarity_deviation(&self) -> f64 {
        self.image_x.unitarity_deviation().max(self.image_z.unitarity_deviation())
    }

    pub fn to_record(&self) -> ImageRecord {
        ImageRecord { site: self.site, image_x: self.image_x.to_record(), image_z: self.image_z.to_record() }
    }

    pub fn from_record(p: usize, rec: &ImageRecord) -> Result<Self> {
        Ok(HeisenbergImage {
            site: rec.site,
            image_x: LocalOperator::from_record(p, &rec.image_x)?,
            image_z: LocalOperator::from_record(p, &rec.image_z)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct LearnOutcome {
    pub images: Vec<HeisenbergImage>,
    pub groups: Vec<Vec<usize>>,
    /// Experiments run: preparations times basis settings times shots.
    pub queries: u64,
    /// Oracle applications made by the simulation.
    pub applications: u64,
    pub shots: Option<u64>,
}

/// Images of the generators computed directly from a known circuit.
pub fn exact_images(circuit: &Circuit) -> Result<Vec<HeisenbergImage>> {
    let p = circuit.p();
    (0..circuit.n())
        .map(|i| {
            Ok(HeisenbergImage {
                site: i,
                image_x: circuit.conjugate(&LocalOperator::single(p, i, shift(p))?, 1e-13),
                image_z: circuit.conjugate(&LocalOperator::single(p, i, clock(p))?, 1e-13),
            })
        })
        .collect()
}

/// Sites split into groups whose members are more than twice the spread
/// apart. On an open chain the groups are residues modulo `2r + 1`.
pub fn site_groups(oracle: &OracleChannel) -> Vec<Vec<usize>> {
    let n = oracle.n();
    let sep = 2 * oracle.spread() + 1;
    if !oracle.periodic() || n.is_multiple_of(sep) {
        return (0..sep.min(n)).map(|g| (g..n).step_by(sep).collect()).collect();
    }
    let mut colour = vec![usize::MAX; n];
    for i in 0..n {
        let used: Vec<usize> = (0..i).filter(|&j| oracle.distance(i, j) < sep).map(|j| colour[j]).collect();
        colour[i] = (0..).find(|c| !used.contains(c)).unwrap_or(0);
    }
    let k = colour.iter().max().map_or(0, |c| c + 1);
    (0..k).map(|c| (0..n).filter(|&i| colour[i] == c).collect()).collect()
}

/// `target = sum_j w_j rho_j + offset * I`.
struct DensityTerms {
    terms: Vec<WeightedDensity>,
    offset: C64,
}

fn density_terms(p: usize, target: &CMatrix) -> Result<DensityTerms> {
    let involution = p == 2
        && hermiticity_deviation(target) < 1e-12
        && max_abs_diff(&(target * target), &identity(2)) < 1e-12
        && trace(target).norm() < 1e-12;
    if involution {
        let rho = (identity(2) + target) * c64(0.5, 0.0);
        return Ok(DensityTerms { terms: vec![WeightedDensity { weight: c64(2.0, 0.0), density: rho }], offset: -ONE });
    }
    Ok(DensityTerms { terms: operator_to_densities(target)?, offset: ZERO })
}

/// Environment sites of a group coloured so that no two sites near the same
/// member share a colour.
struct Environment {
    sites: Vec<usize>,
    colour: Vec<usize>,
    colours: usize,
}

impl Environment {
    fn new(oracle: &OracleChannel, members: &[usize]) -> Result<Self> {
        let reach = 2 * oracle.spread();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if oracle.distance(i, j) <= reach {
                    return Err(Error::Precondition(format!(
                        "sites {i} and {j} are too close to be learned together"
                    )));
                }
            }
        }
        let near = |s: usize, i: usize| oracle.distance(s, i) <= reach;
        let sites: Vec<usize> = (0..oracle.n())
            .filter(|s| !members.contains(s) && members.iter().any(|&i| near(*s, i)))
            .collect();
        let mut colour: Vec<usize> = Vec::with_capacity(sites.len());
        for (k, &s) in sites.iter().enumerate() {
            let used: Vec<usize> = (0..k)
                .filter(|&l| members.iter().any(|&i| near(s, i) && near(sites[l], i)))
                .map(|l| colour[l])
                .collect();
            colour.push((0..).find(|c| !used.contains(c)).unwrap_or(0));
        }
        let colours = colour.iter().max().map_or(0, |c| c + 1);
        Ok(Environment { sites, colour, colours })
    }

    fn configs(&self, p: usize) -> Result<usize> {
        match ipow(p, self.colours) {
            Ok(c) if c <= MAX_CONFIGS => Ok(c),
            _ => Err(Error::DimensionGuard(format!(
                "{} environment colours at p = {p}",
                self.colours
            ))),
        }
    }
}

fn ball_of(oracle: &OracleChannel, site: usize) -> Result<Vec<usize>> {
    let ball = oracle.ball(site, oracle.spread())?;
    match ipow(oracle.p(), ball.len()) {
        Ok(d) if d <= MAX_BALL_DIM => Ok(ball),
        _ => Err(Error::DimensionGuard(format!("ball of {} sites", ball.len()))),
    }
}

/// Reduced states on every member's ball after the oracle, with `rho` on
/// each member and the environment averaged exactly.
fn evolved_reduced_states(
    oracle: &OracleChannel,
    members: &[usize],
    balls: &[Vec<usize>],
    env: &Environment,
    rho: &CMatrix,
    exec: Execution,
) -> Result<Vec<CMatrix>> {
    let p = oracle.p();
    let n = oracle.n();
    let configs = env.configs(p)?;
    let (vals, vecs) = hermitian_eigen(rho);
    let eig: Vec<usize> = (0..p).filter(|&k| vals[k] > 1e-14).collect();
    let runs = configs * eig.len();
    let basis = |d: usize| nalgebra::DVector::from_fn(p, |j, _| if j == d { ONE } else { ZERO });
    let run = |idx: usize| -> Result<Vec<CMatrix>> {
        let (cfg, k) = (idx / eig.len(), eig[idx % eig.len()]);
        let mut digits = vec![0usize; n];
        for (s, &c) in env.sites.iter().zip(&env.colour) {
            digits[*s] = (cfg / p.pow(c as u32)) % p;
        }
        let factors: Vec<_> = (0..n)
            .map(|s| if members.contains(&s) { vecs.column(k).into_owned() } else { basis(digits[s]) })
            .collect();
        let mut state = StateVector::product(p, &factors)?;
        oracle.apply(&mut state)?;
        let w = c64(vals[k] / configs as f64, 0.0);
        balls.iter().map(|b| Ok(state.reduced_density(b)?.matrix * w)).collect()
    };
    let chunks = runs.div_ceil(RUN_CHUNK);
    let partial = map_indexed(exec, chunks, |c| -> Result<Vec<CMatrix>> {
        let mut acc: Option<Vec<CMatrix>> = None;
        for idx in c * RUN_CHUNK..((c + 1) * RUN_CHUNK).min(runs) {
            let r = run(idx)?;
            acc = Some(match acc {
                None => r,
                Some(a) => a.into_iter().zip(r).map(|(x, y)| x + y).collect(),
            });
        }
        Ok(acc.unwrap_or_default())
    });
    let mut total: Option<Vec<CMatrix>> = None;
    for part in partial {
        let part = part?;
        total = Some(match total {
            None => part,
            Some(a) => a.into_iter().zip(part).map(|(x, y)| x + y).collect(),
        });
    }
    total.ok_or_else(|| Error::InternalConsistency("no preparation runs".into()))
}

/// Shots per setting needed for an `epsilon`-accurate doubled circuit with
/// probability `1 - delta`. Each of the `n` conjugated swaps may err by
/// `epsilon / (2n)`; a swap combines `p^2` Pauli images of total degree
/// below `p (p - 1)`, which fixes the per-image budget.
pub fn shot_schedule(oracle: &OracleChannel, settings: &TomographySettings) -> Result<u64> {
    let p = oracle.p();
    let n = oracle.n();
    let targets = [shift(p), clock(p)];
    let per_image = settings.epsilon / (2.0 * n as f64 * (p * (p - 1)) as f64);
    let terms: Vec<DensityTerms> = targets.iter().map(|t| density_terms(p, t)).collect::<Result<_>>()?;
    let estimates = n * terms.iter().map(|t| t.terms.len()).sum::<usize>();
    let mut shots = 1u64;
    for i in 0..n {
        let m = ball_of(oracle, i)?.len();
        let tomo = MubTomography::new(p, m)?;
        for t in &terms {
            let weight: f64 = t.terms.iter().map(|w| w.weight.norm()).sum();
            let tol = per_image / (p.pow(m as u32 - 1) as f64 * weight);
            shots = shots.max(tomo.required_shots(tol, estimates, settings.delta)?);
        }
    }
    Ok(shots)
}

struct GroupResult {
    images: Vec<Vec<LocalOperator>>,
    queries: u64,
}

fn learn_group(
    oracle: &OracleChannel,
    members: &[usize],
    targets: &[CMatrix],
    settings: &TomographySettings,
    shots: Option<u64>,
    stream: u64,
) -> Result<GroupResult> {
    let p = oracle.p();
    let balls: Vec<Vec<usize>> = members.iter().map(|&i| ball_of(oracle, i)).collect::<Result<_>>()?;
    let env = Environment::new(oracle, members)?;
    let tomos: Vec<Option<MubTomography>> = match shots {
        Some(_) => balls.iter().map(|b| MubTomography::new(p, b.len()).map(Some)).collect::<Result<_>>()?,
        None => vec![None; balls.len()],
    };
    let max_settings = balls.iter().map(|b| (p + 1).pow(b.len() as u32) as u64).max().unwrap_or(1);
    let mut queries = 0u64;
    let mut images: Vec<Vec<LocalOperator>> = vec![Vec::with_capacity(targets.len()); members.len()];
    for (t, target) in targets.iter().enumerate() {
        let dt = density_terms(p, target)?;
        let mut acc: Vec<CMatrix> = balls
            .iter()
            .map(|b| {
                let d = p.pow(b.len() as u32);
                identity(d) * dt.offset
            })
            .collect();
        for (j, term) in dt.terms.iter().enumerate() {
            let sigmas = evolved_reduced_states(oracle, members, &balls, &env, &term.density, settings.execution)?;
            queries += max_settings * shots.unwrap_or(1);
            for (m, sigma) in sigmas.into_iter().enumerate() {
                let est = match (&tomos[m], shots) {
                    (Some(tomo), Some(s)) => {
                        let key = (stream << 20) ^ ((t as u64) << 12) ^ ((j as u64) << 8) ^ m as u64;
                        tomo.estimate(&sigma, s, &mut child_rng(settings.seed, key))
                    }
                    _ => sigma,
                };
                let scale = p.pow(balls[m].len() as u32 - 1) as f64;
                acc[m] += est * (term.weight * scale);
            }
        }
        for (m, a) in acc.into_iter().enumerate() {
            images[m].push(LocalOperator::new(p, balls[m].clone(), a)?);
        }
    }
    Ok(GroupResult { images, queries })
}

fn resolve_shots(oracle: &OracleChannel, settings: &TomographySettings) -> Result<Option<u64>> {
    settings.validate()?;
    if settings.mode == TomographyMode::Exact {
        return Ok(None);
    }
    let need = shot_schedule(oracle, settings)?;
    match settings.shots {
        Some(s) if s < need => Err(Error::Config(format!(
            "{s} shots per setting is below the {need} needed for epsilon = {}, delta = {}",
            settings.epsilon, settings.delta
        ))),
        Some(s) => Ok(Some(s)),
        None => Ok(Some(need)),
    }
}

/// Image of an arbitrary single-site operator at `site`.
pub fn learn_image(
    oracle: &OracleChannel,
    site: usize,
    target: &CMatrix,
    settings: &TomographySettings,
) -> Result<LocalOperator> {
    let shots = resolve_shots(oracle, settings)?;
    let mut g = learn_group(oracle, &[site], std::slice::from_ref(target), settings, shots, site as u64)?;
    Ok(g.images.remove(0).remove(0))
}

pub fn learn_site_images(
    oracle: &OracleChannel,
    site: usize,
    settings: &TomographySettings,
) -> Result<HeisenbergImage> {
    let shots = resolve_shots(oracle, settings)?;
    let p = oracle.p();
    let g = learn_group(oracle, &[site], &[shift(p), clock(p)], settings, shots, site as u64)?;
    let mut it = g.images.into_iter().next().unwrap_or_default().into_iter();
    match (it.next(), it.next()) {
        (Some(image_x), Some(image_z)) => Ok(HeisenbergImage { site, image_x, image_z }),
        _ => Err(Error::InternalConsistency("missing image".into())),
    }
}

fn learn_groups(oracle: &OracleChannel, groups: Vec<Vec<usize>>, settings: &TomographySettings) -> Result<LearnOutcome> {
    let shots = resolve_shots(oracle, settings)?;
    let p = oracle.p();
    let before = oracle.applications();
    let mut slots: Vec<Option<HeisenbergImage>> = vec![None; oracle.n()];
    let mut queries = 0;
    for (g, members) in groups.iter().enumerate() {
        let res = learn_group(oracle, members, &[shift(p), clock(p)], settings, shots, g as u64)?;
        queries += res.queries;
        for (&site, imgs) in members.iter().zip(res.images) {
            let mut it = imgs.into_iter();
            if let (Some(image_x), Some(image_z)) = (it.next(), it.next()) {
                slots[site] = Some(HeisenbergImage { site, image_x, image_z });
            }
        }
    }
    let images = slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::InternalConsistency(format!("site {i} was not learned"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(LearnOutcome { images, groups, queries, applications: oracle.applications() - before, shots })
}

/// All images, learning well-separated sites in the same experiments.
pub fn batch_learn(oracle: &OracleChannel, settings: &TomographySettings) -> Result<LearnOutcome> {
    learn_groups(oracle, site_groups(oracle), settings)
}

/// All images, one site at a time.
pub fn sequential_learn(oracle: &OracleChannel, settings: &TomographySettings) -> Result<LearnOutcome> {
    learn_groups(oracle, (0..oracle.n()).map(|i| vec![i]).collect(), settings)
}
