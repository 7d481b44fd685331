//! Expected population sizes in a fixed environment, in three equivalent
//! ways — powers of the mean matrix on (type, site) states, brute-force
//! path sums, and local matrix entries — plus a stochastic simulator of
//! the particle system itself.

use crate::chain::SpatialChain;
use crate::environment::{sample_poisson, Environment};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::typegraph::TypeGraph;

/// Overflow guard for linear-domain accumulation; beyond this the power
/// iteration rescales and tracks the log.
const RESCALE_ABOVE: f64 = 1e300;

/// Default guard on the number of enumerated paths in the brute-force sum.
pub const PATH_GUARD: u128 = 10_000_000;

/// The nonnegative matrix `B` on (type, site) states whose entry
/// `((i,x),(j,y))` is `m_ij(x) P_xy 1{(i,j) edge}`; expected counts are its
/// powers.
#[derive(Debug, Clone)]
pub struct MeanMatrix {
    n_types: usize,
    n_sites: usize,
    b: Vec<f64>, // dense s x s, s = n_types * n_sites
}

impl MeanMatrix {
    pub fn new(env: &Environment, chain: &SpatialChain, g: &TypeGraph) -> Result<Self> {
        if env.n_types() != g.n_types() {
            return Err(Error::DimensionMismatch(format!(
                "environment has {} types, graph has {}",
                env.n_types(),
                g.n_types()
            )));
        }
        if env.n_sites() != chain.n_sites() {
            return Err(Error::DimensionMismatch(format!(
                "environment has {} sites, chain has {}",
                env.n_sites(),
                chain.n_sites()
            )));
        }
        let (t, s) = (g.n_types(), chain.n_sites());
        let dim = t * s;
        let mut b = vec![0.0; dim * dim];
        for i in 0..t {
            for x in 0..s {
                for j in 0..t {
                    if !g.has_edge(i, j) {
                        continue;
                    }
                    for y in 0..s {
                        b[(i * s + x) * dim + (j * s + y)] = env.mean(i, j, x) * chain.prob(x, y);
                    }
                }
            }
        }
        Ok(MeanMatrix {
            n_types: t,
            n_sites: s,
            b,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_types * self.n_sites
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn entry(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        let dim = self.dim();
        self.b[(from.0 * self.n_sites + from.1) * dim + (to.0 * self.n_sites + to.1)]
    }

    /// v ← B v, returning the new vector.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.b[r * dim..(r + 1) * dim];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `B^n v` with overflow-safe rescaling; returns the scaled vector and
    /// the accumulated log scale.
    fn power_apply(&self, v: Vec<f64>, n: usize) -> (Vec<f64>, f64) {
        let mut v = v;
        let mut log_scale = 0.0;
        for _ in 0..n {
            v = self.apply(&v);
            let m = v.iter().copied().fold(0.0, f64::max);
            if m > RESCALE_ABOVE {
                log_scale += m.ln();
                v.iter_mut().for_each(|x| *x /= m);
            }
        }
        (v, log_scale)
    }
}

/// Expected total population after `n` generations starting from one
/// particle at (i, x): the (i,x) row sum of `B^n`, computed by `n`
/// matrix-vector products against the all-ones vector. `n = 0` gives 1.
pub fn expected_population(b: &MeanMatrix, i: usize, x: usize, n: usize) -> f64 {
    let (v, log_scale) = b.power_apply(vec![1.0; b.dim()], n);
    v[i * b.n_sites() + x] * log_scale.exp()
}

/// `log` of [`expected_population`], safe for n far beyond f64 range.
pub fn log_expected_population(b: &MeanMatrix, i: usize, x: usize, n: usize) -> f64 {
    let (v, log_scale) = b.power_apply(vec![1.0; b.dim()], n);
    v[i * b.n_sites() + x].ln() + log_scale
}

/// Expected number of (j, y) particles after `n` generations from one
/// (i, x) particle: the entry `(B^n)_{(i,x),(j,y)}`. For `n = 1` this is
/// `m_ij(x) P_xy`.
pub fn expected_local_population(
    env: &Environment,
    chain: &SpatialChain,
    g: &TypeGraph,
    from: (usize, usize),
    to: (usize, usize),
    n: usize,
) -> Result<f64> {
    let b = MeanMatrix::new(env, chain, g)?;
    let mut v = vec![0.0; b.dim()];
    v[to.0 * b.n_sites() + to.1] = 1.0;
    let (v, log_scale) = b.power_apply(v, n);
    Ok(v[from.0 * b.n_sites() + from.1] * log_scale.exp())
}

/// Both brute-force forms of the expected population: the raw sum over all
/// (type, site) paths of `Π m·P`, and the same sum written as an
/// expectation over the uniform type chain with the outdegree factors made
/// explicit. They are equal by construction; both are exposed so tests can
/// assert it.
#[derive(Debug, Clone, Copy)]
pub struct PathSum {
    /// Σ over type strings and site paths of Π m_{t,t'}(x) P_{x,x'}.
    pub raw: f64,
    /// E over the product chain of Π m_{t,t'}(X) deg⁺(t).
    pub degree_weighted: f64,
}

impl PathSum {
    pub fn value(&self) -> f64 {
        self.raw
    }

    pub fn relative_gap(&self) -> f64 {
        (self.raw - self.degree_weighted).abs() / self.raw.abs().max(f64::MIN_POSITIVE)
    }
}

/// Brute-force expected population by explicit enumeration of all
/// `|T|^n |X|^n` paths. Guarded: errors out above `guard` paths
/// (default [`PATH_GUARD`]).
pub fn feynman_kac_path_sum(
    env: &Environment,
    chain: &SpatialChain,
    g: &TypeGraph,
    i: usize,
    x: usize,
    n: usize,
    guard: Option<u128>,
) -> Result<PathSum> {
    let guard = guard.unwrap_or(PATH_GUARD);
    let paths = (g.n_types() as u128)
        .checked_pow(n as u32)
        .and_then(|t| t.checked_mul((chain.n_sites() as u128).pow(n as u32)))
        .ok_or(Error::TooLarge {
            paths: u128::MAX,
            guard,
        })?;
    if paths > guard {
        return Err(Error::TooLarge { paths, guard });
    }
    let kernel = crate::chain::type_kernel(g);
    let mut raw = 0.0;
    let mut weighted = 0.0;
    // depth-first over (type, site) paths; weights accumulated on a stack
    struct Frame {
        t: usize,
        x: usize,
        depth: usize,
        raw_w: f64,
        chain_w: f64, // probability weight under p ⊗ P
        deg_w: f64,   // Π m · deg⁺ integrand
    }
    let mut stack = vec![Frame {
        t: i,
        x,
        depth: 0,
        raw_w: 1.0,
        chain_w: 1.0,
        deg_w: 1.0,
    }];
    while let Some(f) = stack.pop() {
        if f.depth == n {
            raw += f.raw_w;
            weighted += f.chain_w * f.deg_w;
            continue;
        }
        for j in g.successors(f.t) {
            let m = env.mean(f.t, j, f.x);
            let deg = g.outdeg(f.t) as f64;
            for y in 0..chain.n_sites() {
                let p = chain.prob(f.x, y);
                if p == 0.0 {
                    continue;
                }
                stack.push(Frame {
                    t: j,
                    x: y,
                    depth: f.depth + 1,
                    raw_w: f.raw_w * m * p,
                    chain_w: f.chain_w * kernel[f.t][j] * p,
                    deg_w: f.deg_w * m * deg,
                });
            }
        }
    }
    Ok(PathSum {
        raw,
        degree_weighted: weighted,
    })
}

/// Particle counts per (type, site) cell at one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationState {
    n_types: usize,
    n_sites: usize,
    counts: Vec<u64>,
    generation: usize,
}

impl PopulationState {
    pub fn new(n_types: usize, n_sites: usize) -> Self {
        PopulationState {
            n_types,
            n_sites,
            counts: vec![0; n_types * n_sites],
            generation: 0,
        }
    }

    /// One particle of type `i` at site `x`.
    pub fn single(n_types: usize, n_sites: usize, i: usize, x: usize) -> Self {
        let mut s = Self::new(n_types, n_sites);
        s.counts[i * n_sites + x] = 1;
        s
    }

    pub fn count(&self, i: usize, x: usize) -> u64 {
        self.counts[i * self.n_sites + x]
    }

    pub fn set_count(&mut self, i: usize, x: usize, c: u64) {
        self.counts[i * self.n_sites + x] = c;
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Global population |η|.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| ((k / self.n_sites, k % self.n_sites), c))
    }
}

/// Simulator output: the trajectory up to `n` generations, cut short with
/// `cap_exceeded` set if the population passed `cap`. When that happens
/// the last state holds the first `cap + 1` placements of the aborted
/// generation.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub trajectory: Vec<PopulationState>,
    pub cap_exceeded: bool,
}

/// Run the particle system for `n` generations. Each generation every
/// particle of type `i` at `x` draws, independently per outgoing edge
/// `(i,j)`, Poisson(`m_ij(x)`) type-j offspring at `x`; every newborn
/// immediately makes one P-step. Parents are replaced by their offspring,
/// so one-generation means are exactly `m_ij(x) P_xy`.
///
/// Offspring for a whole cell are drawn as one Poisson with the summed
/// mean, which has exactly the same law as per-particle draws.
pub fn simulate_branching(
    env: &Environment,
    chain: &SpatialChain,
    g: &TypeGraph,
    init: &PopulationState,
    n: usize,
    seed: u64,
    cap: u64,
) -> Result<SimulationResult> {
    if init.n_types != g.n_types() || init.n_sites != chain.n_sites() {
        return Err(Error::DimensionMismatch(
            "initial state does not match graph/chain".into(),
        ));
    }
    if init.total() > cap {
        return Err(Error::PreconditionViolated(format!(
            "initial population {} exceeds cap {cap}",
            init.total()
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let (t, s) = (g.n_types(), chain.n_sites());
    let mut current = init.clone();
    current.generation = 0;
    let mut trajectory = vec![current.clone()];
    for gen in 1..=n {
        let mut next = PopulationState::new(t, s);
        next.generation = gen;
        let mut born: u64 = 0;
        // The cap is checked as offspring are placed, not only at the end
        // of the generation: heavy-tailed means can make a single brood
        // arbitrarily large, and placement work must stay bounded by cap.
        'generation: for i in 0..t {
            for x in 0..s {
                let parents = current.count(i, x);
                if parents == 0 {
                    continue;
                }
                for j in g.successors(i) {
                    let m = env.mean(i, j, x);
                    let brood = sample_poisson(parents as f64 * m, &mut rng);
                    for _ in 0..brood {
                        let y = rng.next_categorical(chain.row(x));
                        next.counts[j * s + y] += 1;
                        born += 1;
                        if born > cap {
                            break 'generation;
                        }
                    }
                }
            }
        }
        let blown = born > cap;
        trajectory.push(next.clone());
        if blown {
            return Ok(SimulationResult {
                trajectory,
                cap_exceeded: true,
            });
        }
        current = next;
    }
    Ok(SimulationResult {
        trajectory,
        cap_exceeded: false,
    })
}
