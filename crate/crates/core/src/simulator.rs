//! Exact small-scale simulation backing the cost model: a statevector
//! Grover search and a Szegedy-quantized Johnson-graph walk hunting a
//! planted collision pair. Checking is a perfect phase oracle; the
//! walk register's query costs live in the cost model, not here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Statevector ceiling for the Grover simulator.
pub const MAX_GROVER_DIM: usize = 1 << 14;
/// Directed-edge-space ceiling for the walk simulator.
pub const MAX_EDGE_DIM: usize = 1 << 15;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("marked set must be non-empty")]
    EmptyMarkedSet,
    #[error("marked element {0} outside the search space")]
    MarkedOutOfRange(usize),
    #[error("dimension {dim} exceeds simulation ceiling {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Unit-norm complex state over the simulated subspace.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Uniform superposition over `dimension` basis states.
    pub fn uniform(dimension: usize) -> Self {
        let amp = Complex64::new(1.0 / (dimension as f64).sqrt(), 0.0);
        StateVector {
            amplitudes: vec![amp; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn squared_norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability mass on the given basis indices.
    pub fn mass_on<'a>(&self, indices: impl Iterator<Item = &'a usize>) -> f64 {
        indices.map(|&i| self.amplitudes[i].norm_sqr()).sum()
    }

    fn flip_phase(&mut self, flags: &[bool]) {
        for (a, &flagged) in self.amplitudes.iter_mut().zip(flags) {
            if flagged {
                *a = -*a;
            }
        }
    }

    /// Inversion about the mean amplitude.
    fn diffuse(&mut self) {
        let mean = self.amplitudes.iter().sum::<Complex64>() / self.amplitudes.len() as f64;
        for a in &mut self.amplitudes {
            *a = 2.0 * mean - *a;
        }
    }
}

/// What a simulation run measured.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub steps: usize,
    /// Marked mass after the final step.
    pub marked_probability: f64,
    /// Marked mass of the stationary (uniform) state.
    pub stationary_marked_mass: f64,
    /// f64 values held by the simulation (state plus operators).
    pub peak_classical_memory: usize,
    /// Marked mass after each step; index 0 is the initial state.
    pub marked_mass_by_step: Vec<f64>,
}

impl SimulationReport {
    pub fn peak_marked_mass(&self) -> f64 {
        self.marked_mass_by_step.iter().cloned().fold(0.0, f64::max)
    }
}

/// Closed-form Grover success probability sin^2((2k+1) asin sqrt(t/M)).
pub fn grover_closed_form(space_size: usize, marked: usize, iterations: usize) -> f64 {
    let theta = ((marked as f64) / (space_size as f64)).sqrt().asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

/// Runs `iterations` exact Grover steps over `[space_size]` with the
/// given marked set.
pub fn grover_simulate(
    space_size: usize,
    marked: &[usize],
    iterations: usize,
) -> Result<SimulationReport, SimError> {
    if space_size == 0 {
        return Err(SimError::Parameter("space must be non-empty".into()));
    }
    if space_size > MAX_GROVER_DIM {
        return Err(SimError::DimensionTooLarge {
            dim: space_size,
            cap: MAX_GROVER_DIM,
        });
    }
    if marked.is_empty() {
        return Err(SimError::EmptyMarkedSet);
    }
    let mut flags = vec![false; space_size];
    for &i in marked {
        if i >= space_size {
            return Err(SimError::MarkedOutOfRange(i));
        }
        flags[i] = true;
    }
    let marked_set: Vec<usize> = (0..space_size).filter(|&i| flags[i]).collect();

    let mut state = StateVector::uniform(space_size);
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(state.mass_on(marked_set.iter()));
    for _ in 0..iterations {
        state.flip_phase(&flags);
        state.diffuse();
        debug_assert!((state.squared_norm() - 1.0).abs() < 1e-9);
        trace.push(state.mass_on(marked_set.iter()));
    }
    Ok(SimulationReport {
        steps: iterations,
        marked_probability: *trace.last().unwrap(),
        stationary_marked_mass: marked_set.len() as f64 / space_size as f64,
        peak_classical_memory: 2 * space_size,
        marked_mass_by_step: trace,
    })
}

/// Szegedy double-reflection walk on the directed-edge space of a
/// Johnson graph J(N, r), with vertices marked when they contain both
/// halves of the planted collision pair.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    n_keys: usize,
    subset_size: usize,
    degree: usize,
    /// r-subsets of [N] as bitmasks, sorted; vertex id = position.
    vertices: Vec<u32>,
    /// Directed edges (left vertex, right vertex), grouped by left.
    edges: Vec<(u32, u32)>,
    marked_vertices: Vec<bool>,
    reflection_a: DMatrix<f64>,
    reflection_b: DMatrix<f64>,
}

impl WalkOperator {
    pub fn dimension(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_keys(&self) -> usize {
        self.n_keys
    }

    pub fn subset_size(&self) -> usize {
        self.subset_size
    }

    pub fn marked_vertex_count(&self) -> usize {
        self.marked_vertices.iter().filter(|&&m| m).count()
    }

    pub fn reflection_a(&self) -> &DMatrix<f64> {
        &self.reflection_a
    }

    pub fn reflection_b(&self) -> &DMatrix<f64> {
        &self.reflection_b
    }

    /// Stationary marked fraction of the vertex chain.
    pub fn stationary_marked_mass(&self) -> f64 {
        self.marked_vertex_count() as f64 / self.vertex_count() as f64
    }

    fn edge_is_marked(&self, edge: usize) -> bool {
        self.marked_vertices[self.edges[edge].0 as usize]
    }
}

/// All r-subsets of [n] as sorted bitmasks.
fn subsets_of(n: usize, r: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut current = (1u32 << r) - 1;
    let limit = 1u32 << n;
    while current < limit {
        out.push(current);
        // Gosper's hack: next subset of the same popcount
        let c = current & current.wrapping_neg();
        let rr = current + c;
        if rr >= limit || c == 0 {
            break;
        }
        current = (((rr ^ current) >> 2) / c) | rr;
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Builds the dense Szegedy reflections for J(n_keys, r) with the
/// vertices containing both of `collision_pair` marked. The directed
/// edge space must stay under [`MAX_EDGE_DIM`].
pub fn build_johnson_walk(
    n_keys: usize,
    subset_size: usize,
    collision_pair: (usize, usize),
) -> Result<WalkOperator, SimError> {
    let (n, r) = (n_keys, subset_size);
    if !(2..=12).contains(&n) || r < 2 || r >= n {
        return Err(SimError::Parameter(format!(
            "need 2 <= r < N <= 12, got N = {}, r = {}",
            n, r
        )));
    }
    let (i, j) = collision_pair;
    if i == j {
        return Err(SimError::Parameter("collision pair must be distinct".into()));
    }
    if i >= n || j >= n {
        return Err(SimError::Parameter("collision pair outside [N]".into()));
    }
    let degree = r * (n - r);
    let vertex_count = binomial(n, r);
    let edge_dim = vertex_count * degree;
    if edge_dim > MAX_EDGE_DIM {
        return Err(SimError::DimensionTooLarge {
            dim: edge_dim,
            cap: MAX_EDGE_DIM,
        });
    }

    let vertices = subsets_of(n, r);
    debug_assert_eq!(vertices.len(), vertex_count);
    let index_of = |mask: u32| vertices.binary_search(&mask).unwrap() as u32;

    let pair_mask = (1u32 << i) | (1u32 << j);
    let marked_vertices: Vec<bool> = vertices.iter().map(|&v| v & pair_mask == pair_mask).collect();

    // neighbors differ by swapping one element in for one out
    let mut edges = Vec::with_capacity(edge_dim);
    for &v in &vertices {
        for out_bit in 0..n {
            if v & (1 << out_bit) == 0 {
                continue;
            }
            for in_bit in 0..n {
                if v & (1 << in_bit) != 0 {
                    continue;
                }
                let u = (v & !(1 << out_bit)) | (1 << in_bit);
                edges.push((index_of(v), index_of(u)));
            }
        }
    }
    debug_assert_eq!(edges.len(), edge_dim);

    // R_A reflects about the span of |v> tensor |uniform over neighbors>;
    // block diagonal over the left endpoint: 2/d J - I per block.
    let d = degree as f64;
    let mut reflection_a = DMatrix::<f64>::zeros(edge_dim, edge_dim);
    for block in 0..vertex_count {
        let base = block * degree;
        for a in 0..degree {
            for b in 0..degree {
                let mut value = 2.0 / d;
                if a == b {
                    value -= 1.0;
                }
                reflection_a[(base + a, base + b)] = value;
            }
        }
    }

    // R_B groups edges by right endpoint.
    let mut by_right: Vec<Vec<usize>> = vec![Vec::with_capacity(degree); vertex_count];
    for (e, &(_, right)) in edges.iter().enumerate() {
        by_right[right as usize].push(e);
    }
    let mut reflection_b = DMatrix::<f64>::zeros(edge_dim, edge_dim);
    for group in &by_right {
        debug_assert_eq!(group.len(), degree);
        for &a in group {
            for &b in group {
                let mut value = 2.0 / d;
                if a == b {
                    value -= 1.0;
                }
                reflection_b[(a, b)] = value;
            }
        }
    }

    Ok(WalkOperator {
        n_keys: n,
        subset_size: r,
        degree,
        vertices,
        edges,
        marked_vertices,
        reflection_a,
        reflection_b,
    })
}

/// Iterates the walk from the stationary edge superposition, flipping
/// the phase of marked edges before each double reflection, and records
/// the marked mass after every step.
pub fn szegedy_walk_simulate(op: &WalkOperator, steps: usize) -> SimulationReport {
    let dim = op.dimension();
    let mut state = DVector::<f64>::from_element(dim, 1.0 / (dim as f64).sqrt());
    let marked_edges: Vec<usize> = (0..dim).filter(|&e| op.edge_is_marked(e)).collect();
    let mass = |s: &DVector<f64>| marked_edges.iter().map(|&e| s[e] * s[e]).sum::<f64>();

    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(mass(&state));
    for _ in 0..steps {
        for &e in &marked_edges {
            state[e] = -state[e];
        }
        state = &op.reflection_b * (&op.reflection_a * state);
        trace.push(mass(&state));
    }
    SimulationReport {
        steps,
        marked_probability: *trace.last().unwrap(),
        stationary_marked_mass: op.stationary_marked_mass(),
        peak_classical_memory: 2 * dim * dim + dim,
        marked_mass_by_step: trace,
    }
}

/// Squared norm of the walk state after `steps` steps; unitarity means
/// this stays at 1.
pub fn walk_norm_after(op: &WalkOperator, steps: usize) -> f64 {
    let dim = op.dimension();
    let mut state = DVector::<f64>::from_element(dim, 1.0 / (dim as f64).sqrt());
    let marked_edges: Vec<usize> = (0..dim).filter(|&e| op.edge_is_marked(e)).collect();
    for _ in 0..steps {
        for &e in &marked_edges {
            state[e] = -state[e];
        }
        state = &op.reflection_b * (&op.reflection_a * state);
    }
    state.iter().map(|a| a * a).sum()
}

/// Spectral gap of the classical Johnson chain J(n, r): one minus the
/// second-largest eigenvalue magnitude of the transition matrix,
/// computed by a dense symmetric eigensolve.
pub fn johnson_chain_spectral_gap(n_keys: usize, subset_size: usize) -> Result<f64, SimError> {
    let (n, r) = (n_keys, subset_size);
    if r < 1 || r >= n {
        return Err(SimError::Parameter(format!(
            "need 1 <= r < N, got N = {}, r = {}",
            n, r
        )));
    }
    let vertices = subsets_of(n, r);
    let count = vertices.len();
    if count * count > MAX_EDGE_DIM * 8 {
        return Err(SimError::DimensionTooLarge {
            dim: count * count,
            cap: MAX_EDGE_DIM * 8,
        });
    }
    let degree = (r * (n - r)) as f64;
    let mut transition = DMatrix::<f64>::zeros(count, count);
    for (a, &va) in vertices.iter().enumerate() {
        for (b, &vb) in vertices.iter().enumerate() {
            if (va ^ vb).count_ones() == 2 && a != b {
                transition[(a, b)] = 1.0 / degree;
            }
        }
    }
    let mut eigen: Vec<f64> = transition
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    eigen.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let second_magnitude = eigen
        .iter()
        .skip(1)
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    Ok(1.0 - second_magnitude)
}
