//! Numerical embodiment of the adversary-bound machinery at desk
//! scale: exhaustively enumerated decision claw-finding (d-CF) and
//! 2-key-extraction (d-KE2) inputs, spectral-norm evaluation of
//! adversary matrices, the projection lift from d-CF matrices to
//! d-KE2 matrices, and the query-set reduction via conjugation.
//!
//! The d-KE2 enumeration excludes inputs where some single key maps P
//! straight to C. On that sector every d-CF input in the projection
//! image is hit by exactly (M-2)!^N collections, so the fiber size D
//! is a constant and the lifted matrix is an exact tensor product
//! with the all-ones block J_{DxD}. Multi-solution inputs are
//! excluded separately (the uniqueness promise); both exclusion
//! counts are reported.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Raw-input ceiling for exhaustive enumerations.
pub const MAX_RAW_INPUTS: u64 = 1 << 16;
/// Input ceiling for the hill-climb optimizer.
pub const MAX_OPTIMIZER_INPUTS: usize = 64;

#[derive(Debug, Error)]
pub enum AdvError {
    #[error("enumeration of {0} raw inputs exceeds the 2^16 guard")]
    SizeGuard(u64),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("adversary value of the all-zero matrix is undefined")]
    UndefinedValue,
    #[error("adversary matrix has a nonzero entry between equal labels")]
    NonzeroOnEqualLabels,
    #[error("matrix dimension {got} does not match enumeration size {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("projection of input {0} missing from the d-CF enumeration")]
    ProjectionMissing(usize),
    #[error("projection of input {0} does not preserve its label")]
    LabelMismatch(usize),
    #[error("query invalid for this enumeration: {0}")]
    BadQuery(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Which black-box problem an enumeration ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// 2-bit OR, the textbook sanity case.
    Or2,
    /// Decision claw finding on function pairs [N] -> [M].
    DCf,
    /// Decision 2-key extraction on collections of N permutations of [M].
    DKe2,
}

/// One classical query against an enumerated input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskQuery {
    /// d-KE2 triplet (x, k, b): forward means F_k(x), else F_k^{-1}(x).
    Ke2 { point: u32, key: usize, forward: bool },
    /// d-CF pair (k, b): forward reads G_1(k), else G_2(k).
    Cf { key: usize, forward: bool },
    /// Bit position of a 2-bit OR input.
    Or2 { bit: usize },
}

/// Exhaustive list of promise-respecting inputs with output labels.
#[derive(Debug, Clone)]
pub struct InputEnumeration {
    pub problem: Problem,
    pub n_keys: usize,
    pub block_space: usize,
    pub plaintext: u32,
    pub ciphertext: u32,
    /// Truth tables: d-KE2 stores the N forward tables concatenated
    /// (N*M bytes), d-CF stores G_1 then G_2 (2N bytes), OR2 two bits.
    pub inputs: Vec<Vec<u8>>,
    /// true = yes-input (a unique solution / claw exists).
    pub labels: Vec<bool>,
    /// For d-KE2: index of each input's projection in the companion
    /// d-CF enumeration (same N, M, P, C).
    pub projection_keys: Option<Vec<usize>>,
    /// Inputs dropped by the uniqueness promise (two or more solutions).
    pub excluded_multi_solution: u64,
    /// Inputs dropped because a single key already maps P to C (for
    /// d-CF: function pairs outside the projection image).
    pub excluded_outside_sector: u64,
}

impl InputEnumeration {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn yes_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn no_count(&self) -> usize {
        self.len() - self.yes_count()
    }

    /// Classical answer of input `idx` to `query`.
    pub fn answer(&self, idx: usize, query: &MaskQuery) -> Result<u8, AdvError> {
        let table = &self.inputs[idx];
        match (self.problem, query) {
            (Problem::DKe2, MaskQuery::Ke2 { point, key, forward }) => {
                let m = self.block_space;
                if *key >= self.n_keys || *point as usize >= m {
                    return Err(AdvError::BadQuery(format!("({}, {})", point, key)));
                }
                let row = &table[key * m..(key + 1) * m];
                if *forward {
                    Ok(row[*point as usize])
                } else {
                    Ok(row.iter().position(|&v| v == *point as u8).unwrap() as u8)
                }
            }
            (Problem::DCf, MaskQuery::Cf { key, forward }) => {
                if *key >= self.n_keys {
                    return Err(AdvError::BadQuery(format!("key {}", key)));
                }
                if *forward {
                    Ok(table[*key])
                } else {
                    Ok(table[self.n_keys + *key])
                }
            }
            (Problem::Or2, MaskQuery::Or2 { bit }) => {
                if *bit >= 2 {
                    return Err(AdvError::BadQuery(format!("bit {}", bit)));
                }
                Ok(table[*bit])
            }
            _ => Err(AdvError::BadQuery("query/problem mismatch".into())),
        }
    }

    /// Every classical query against this problem.
    pub fn all_queries(&self) -> Vec<MaskQuery> {
        match self.problem {
            Problem::Or2 => vec![MaskQuery::Or2 { bit: 0 }, MaskQuery::Or2 { bit: 1 }],
            Problem::DCf => {
                let mut qs = Vec::with_capacity(2 * self.n_keys);
                for forward in [true, false] {
                    for key in 0..self.n_keys {
                        qs.push(MaskQuery::Cf { key, forward });
                    }
                }
                qs
            }
            Problem::DKe2 => {
                let mut qs = Vec::with_capacity(2 * self.n_keys * self.block_space);
                for forward in [true, false] {
                    for key in 0..self.n_keys {
                        for point in 0..self.block_space as u32 {
                            qs.push(MaskQuery::Ke2 { point, key, forward });
                        }
                    }
                }
                qs
            }
        }
    }

    /// The special d-KE2 query set: forward queries at P, inverse
    /// queries at C. These project onto d-CF queries.
    pub fn i_set_queries(&self) -> Vec<MaskQuery> {
        match self.problem {
            Problem::DKe2 => {
                let mut qs = Vec::with_capacity(2 * self.n_keys);
                for key in 0..self.n_keys {
                    qs.push(MaskQuery::Ke2 {
                        point: self.plaintext,
                        key,
                        forward: true,
                    });
                }
                for key in 0..self.n_keys {
                    qs.push(MaskQuery::Ke2 {
                        point: self.ciphertext,
                        key,
                        forward: false,
                    });
                }
                qs
            }
            _ => self.all_queries(),
        }
    }
}

/// 0/1 matrix marking the input pairs a query tells apart.
#[derive(Debug, Clone)]
pub struct DeltaMask {
    pub query: MaskQuery,
    pub mask: DMatrix<f64>,
}

/// Builds the mask for one query per the definition: 1 exactly where
/// the two inputs answer differently.
pub fn delta_mask(
    enumeration: &InputEnumeration,
    query: &MaskQuery,
) -> Result<DeltaMask, AdvError> {
    let n = enumeration.len();
    let answers: Vec<u8> = (0..n)
        .map(|i| enumeration.answer(i, query))
        .collect::<Result<_, _>>()?;
    let mut mask = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if answers[i] != answers[j] {
                mask[(i, j)] = 1.0;
                mask[(j, i)] = 1.0;
            }
        }
    }
    Ok(DeltaMask {
        query: *query,
        mask,
    })
}

/// Masks for every query of the enumeration, in `all_queries` order.
pub fn all_delta_masks(enumeration: &InputEnumeration) -> Result<Vec<DeltaMask>, AdvError> {
    enumeration
        .all_queries()
        .iter()
        .map(|q| delta_mask(enumeration, q))
        .collect()
}

// --- enumerations ---------------------------------------------------------

/// The 2-bit OR instance space.
pub fn enumerate_or2() -> InputEnumeration {
    InputEnumeration {
        problem: Problem::Or2,
        n_keys: 2,
        block_space: 2,
        plaintext: 0,
        ciphertext: 0,
        inputs: vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        labels: vec![false, true, true, true],
        projection_keys: None,
        excluded_multi_solution: 0,
        excluded_outside_sector: 0,
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// All permutations of [m] in lexicographic order.
fn all_permutations(m: usize) -> Vec<Vec<u8>> {
    let mut perms = Vec::with_capacity(factorial(m) as usize);
    let mut current: Vec<u8> = (0..m as u8).collect();
    loop {
        perms.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (0..m - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    perms
}

/// Projection of a d-KE2 input onto a d-CF input: G_1(k) = F_k(P),
/// G_2(k) = F_k^{-1}(C).
pub fn project_input(
    tables: &[u8],
    n_keys: usize,
    block_space: usize,
    p: u32,
    c: u32,
) -> (Vec<u8>, Vec<u8>) {
    let m = block_space;
    let mut g1 = Vec::with_capacity(n_keys);
    let mut g2 = Vec::with_capacity(n_keys);
    for k in 0..n_keys {
        let row = &tables[k * m..(k + 1) * m];
        g1.push(row[p as usize]);
        g2.push(row.iter().position(|&v| v == c as u8).unwrap() as u8);
    }
    (g1, g2)
}

fn count_claws(g1: &[u8], g2: &[u8]) -> usize {
    let mut claws = 0;
    for &a in g1 {
        for &b in g2 {
            if a == b {
                claws += 1;
            }
        }
    }
    claws
}

/// Exhaustively enumerates the promise-respecting inputs of `problem`
/// at parameters (N, M, P, C), labelling each by exhaustive search.
pub fn enumerate_inputs(
    problem: Problem,
    n_keys: usize,
    block_space: usize,
    p: u32,
    c: u32,
) -> Result<InputEnumeration, AdvError> {
    if problem == Problem::Or2 {
        return Ok(enumerate_or2());
    }
    let (n, m) = (n_keys, block_space);
    if n < 1 || m < 2 {
        return Err(AdvError::Parameter("need N >= 1 and M >= 2".into()));
    }
    if p as usize >= m || c as usize >= m {
        return Err(AdvError::Parameter("P and C must lie in [M]".into()));
    }
    match problem {
        Problem::DCf => enumerate_cf(n, m, p, c),
        Problem::DKe2 => enumerate_ke2(n, m, p, c),
        Problem::Or2 => unreachable!(),
    }
}

/// d-CF inputs in the projection image of d-KE2^{P,C}: pairs
/// (G_1, G_2) with G_1 avoiding C and G_2 avoiding P, keeping those
/// with at most one claw.
fn enumerate_cf(n: usize, m: usize, p: u32, c: u32) -> Result<InputEnumeration, AdvError> {
    let raw = (m as u64).pow(2 * n as u32);
    if raw > MAX_RAW_INPUTS {
        return Err(AdvError::SizeGuard(raw));
    }
    let g1_values: Vec<u8> = (0..m as u8).filter(|&v| v != c as u8).collect();
    let g2_values: Vec<u8> = (0..m as u8).filter(|&v| v != p as u8).collect();
    let sector = ((m - 1) as u64).pow(2 * n as u32);
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    let mut excluded_multi = 0u64;

    // odometer over the 2n positions (G_1 then G_2)
    let mut idx = vec![0usize; 2 * n];
    loop {
        let g1: Vec<u8> = idx[..n].iter().map(|&i| g1_values[i]).collect();
        let g2: Vec<u8> = idx[n..].iter().map(|&i| g2_values[i]).collect();
        let claws = count_claws(&g1, &g2);
        if claws <= 1 {
            let mut table = g1;
            table.extend_from_slice(&g2);
            inputs.push(table);
            labels.push(claws == 1);
        } else {
            excluded_multi += 1;
        }
        let mut pos = 2 * n;
        loop {
            if pos == 0 {
                return Ok(InputEnumeration {
                    problem: Problem::DCf,
                    n_keys: n,
                    block_space: m,
                    plaintext: p,
                    ciphertext: c,
                    inputs,
                    labels,
                    projection_keys: None,
                    excluded_multi_solution: excluded_multi,
                    excluded_outside_sector: raw - sector,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < m - 1 {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// d-KE2 inputs: all collections of N permutations of [M], minus the
/// direct-hit collections (some F_k(P) = C) and minus multi-solution
/// collections, labelled yes when exactly one (k_1, k_2) works.
fn enumerate_ke2(n: usize, m: usize, p: u32, c: u32) -> Result<InputEnumeration, AdvError> {
    let raw = factorial(m)
        .checked_pow(n as u32)
        .ok_or(AdvError::SizeGuard(u64::MAX))?;
    if raw > MAX_RAW_INPUTS {
        return Err(AdvError::SizeGuard(raw));
    }
    let companion = enumerate_cf(n, m, p, c)?;
    let mut cf_index = std::collections::HashMap::new();
    for (i, table) in companion.inputs.iter().enumerate() {
        cf_index.insert(table.clone(), i);
    }

    let perms = all_permutations(m);
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    let mut projection_keys = Vec::new();
    let mut excluded_multi = 0u64;
    let mut excluded_sector = 0u64;

    let mut idx = vec![0usize; n];
    loop {
        let direct_hit = idx.iter().any(|&i| perms[i][p as usize] == c as u8);
        if direct_hit {
            excluded_sector += 1;
        } else {
            let mut table = Vec::with_capacity(n * m);
            for &i in &idx {
                table.extend_from_slice(&perms[i]);
            }
            let (g1, g2) = project_input(&table, n, m, p, c);
            let claws = count_claws(&g1, &g2);
            if claws <= 1 {
                let mut proj = g1;
                proj.extend_from_slice(&g2);
                let key = *cf_index
                    .get(&proj)
                    .ok_or(AdvError::ProjectionMissing(inputs.len()))?;
                inputs.push(table);
                labels.push(claws == 1);
                projection_keys.push(key);
            } else {
                excluded_multi += 1;
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(InputEnumeration {
                    problem: Problem::DKe2,
                    n_keys: n,
                    block_space: m,
                    plaintext: p,
                    ciphertext: c,
                    inputs,
                    labels,
                    projection_keys: Some(projection_keys),
                    excluded_multi_solution: excluded_multi,
                    excluded_outside_sector: excluded_sector,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < perms.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exhaustive solution count of a d-KE2 input, used to cross-check
/// labels against the claw count of the projection.
pub fn count_solutions(tables: &[u8], n_keys: usize, block_space: usize, p: u32, c: u32) -> usize {
    let m = block_space;
    let mut count = 0;
    for k1 in 0..n_keys {
        let mid = tables[k1 * m + p as usize];
        for k2 in 0..n_keys {
            if tables[k2 * m + mid as usize] == c as u8 {
                count += 1;
            }
        }
    }
    count
}

// --- adversary matrices ---------------------------------------------------

/// Symmetric real matrix over an enumeration, zero between inputs
/// with equal labels.
#[derive(Debug, Clone)]
pub struct AdversaryMatrix {
    matrix: DMatrix<f64>,
    problem: Problem,
}

impl AdversaryMatrix {
    /// Validates the defining invariants against the enumeration.
    pub fn new(matrix: DMatrix<f64>, enumeration: &InputEnumeration) -> Result<Self, AdvError> {
        let n = enumeration.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(AdvError::DimensionMismatch {
                got: matrix.nrows(),
                expected: n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 {
                    return Err(AdvError::NotSymmetric);
                }
                if enumeration.labels[i] == enumeration.labels[j] && matrix[(i, j)] != 0.0 {
                    return Err(AdvError::NonzeroOnEqualLabels);
                }
            }
        }
        Ok(AdversaryMatrix {
            matrix,
            problem: enumeration.problem,
        })
    }

    /// Weight 1 between every yes/no pair: the canonical testbed.
    pub fn uniform(enumeration: &InputEnumeration) -> Self {
        let n = enumeration.len();
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if enumeration.labels[i] != enumeration.labels[j] {
                    matrix[(i, j)] = 1.0;
                }
            }
        }
        AdversaryMatrix {
            matrix,
            problem: enumeration.problem,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Largest absolute eigenvalue of a symmetric matrix by power
/// iteration on A^2 with seeded restarts guarding against a start
/// vector orthogonal to the top eigenspace.
pub fn spectral_norm(matrix: &DMatrix<f64>) -> Result<f64, AdvError> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(AdvError::NotSymmetric);
    }
    for i in 0..n {
        for j in 0..i {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 {
                return Err(AdvError::NotSymmetric);
            }
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    let frobenius = matrix.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frobenius == 0.0 {
        return Ok(0.0);
    }

    let mut best: f64 = 0.0;
    for restart in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xAD00 | restart);
        let mut v = nalgebra::DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        v /= norm;
        let mut estimate = 0.0f64;
        let mut stable = 0;
        for _ in 0..20_000 {
            // one application of A^2
            let w = matrix * (matrix * &v);
            let wnorm = w.norm();
            if wnorm < 1e-300 {
                estimate = 0.0;
                break;
            }
            let next = v.dot(&w).abs();
            v = w / wnorm;
            // the Rayleigh quotient floats on ~sqrt(n)*eps rounding
            // noise, so demand a few consecutive sub-tolerance steps
            // rather than one ulp-exact hit
            if (next - estimate).abs() <= 1e-12 * next.max(1.0) {
                stable += 1;
                if stable >= 3 {
                    estimate = next;
                    break;
                }
            } else {
                stable = 0;
            }
            estimate = next;
        }
        best = best.max(estimate.sqrt());
    }
    Ok(best)
}

/// min over queries of ||Gamma|| / ||Gamma o Delta_q||; queries whose
/// mask kills the matrix distinguish nothing and drop out of the min.
pub fn adv_value(gamma: &AdversaryMatrix, masks: &[DeltaMask]) -> Result<f64, AdvError> {
    let norm = spectral_norm(gamma.matrix())?;
    if norm == 0.0 {
        return Err(AdvError::UndefinedValue);
    }
    let mut value = f64::INFINITY;
    for mask in masks {
        let masked = spectral_norm(&gamma.matrix().component_mul(&mask.mask))?;
        if masked > 0.0 {
            value = value.min(norm / masked);
        }
    }
    if value.is_infinite() {
        return Err(AdvError::UndefinedValue);
    }
    Ok(value)
}

// --- the Lemma-1 lift -----------------------------------------------------

/// Copies Gamma_CF entries through the projection keys:
/// Gamma_KE2[u, v] = Gamma_CF[proj(u), proj(v)].
pub fn lift_cf_to_ke2(
    gamma_cf: &AdversaryMatrix,
    enum_cf: &InputEnumeration,
    enum_ke2: &InputEnumeration,
) -> Result<AdversaryMatrix, AdvError> {
    let keys = enum_ke2
        .projection_keys
        .as_ref()
        .ok_or_else(|| AdvError::Parameter("enumeration carries no projections".into()))?;
    if gamma_cf.dim() != enum_cf.len() {
        return Err(AdvError::DimensionMismatch {
            got: gamma_cf.dim(),
            expected: enum_cf.len(),
        });
    }
    for (i, &k) in keys.iter().enumerate() {
        if k >= enum_cf.len() {
            return Err(AdvError::ProjectionMissing(i));
        }
        if enum_cf.labels[k] != enum_ke2.labels[i] {
            return Err(AdvError::LabelMismatch(i));
        }
    }
    let n = enum_ke2.len();
    let matrix = DMatrix::<f64>::from_fn(n, n, |i, j| gamma_cf.matrix()[(keys[i], keys[j])]);
    AdversaryMatrix::new(matrix, enum_ke2)
}

/// Sizes of the projection fibers, indexed by d-CF input.
pub fn fiber_sizes(enum_ke2: &InputEnumeration, cf_len: usize) -> Result<Vec<usize>, AdvError> {
    let keys = enum_ke2
        .projection_keys
        .as_ref()
        .ok_or_else(|| AdvError::Parameter("enumeration carries no projections".into()))?;
    let mut sizes = vec![0usize; cf_len];
    for &k in keys {
        if k >= cf_len {
            return Err(AdvError::ProjectionMissing(k));
        }
        sizes[k] += 1;
    }
    Ok(sizes)
}

/// Orders the d-KE2 indices by projection key so fibers become
/// contiguous blocks.
pub fn projection_sorted_order(enum_ke2: &InputEnumeration) -> Result<Vec<usize>, AdvError> {
    let keys = enum_ke2
        .projection_keys
        .as_ref()
        .ok_or_else(|| AdvError::Parameter("enumeration carries no projections".into()))?;
    let mut order: Vec<usize> = (0..enum_ke2.len()).collect();
    order.sort_by_key(|&i| (keys[i], i));
    Ok(order)
}

fn permute(matrix: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(order.len(), order.len(), |i, j| {
        matrix[(order[i], order[j])]
    })
}

/// Verdict of the Lemma-1 structure checks on a lifted matrix.
#[derive(Debug, Clone)]
pub struct LiftReport {
    pub fiber_size: usize,
    pub fibers_constant: bool,
    pub norm_cf: f64,
    pub norm_ke2: f64,
    /// |norm_ke2 - D * norm_cf|
    pub norm_relation_dev: f64,
    /// max entry deviation between the sorted lift and Gamma_CF (x) J.
    pub tensor_max_dev: f64,
}

impl LiftReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.fibers_constant && self.norm_relation_dev <= tol && self.tensor_max_dev <= tol
    }
}

/// Checks fiber constancy, the norm relation |Gamma_KE2| = D |Gamma_CF|
/// and the entrywise tensor identity after projection-sorting.
pub fn verify_lift(
    gamma_cf: &AdversaryMatrix,
    enum_cf: &InputEnumeration,
    gamma_ke2: &AdversaryMatrix,
    enum_ke2: &InputEnumeration,
) -> Result<LiftReport, AdvError> {
    let sizes = fiber_sizes(enum_ke2, enum_cf.len())?;
    let d = sizes.first().copied().unwrap_or(0);
    let fibers_constant = d > 0 && sizes.iter().all(|&s| s == d);

    let norm_cf = spectral_norm(gamma_cf.matrix())?;
    let norm_ke2 = spectral_norm(gamma_ke2.matrix())?;
    let norm_relation_dev = (norm_ke2 - d as f64 * norm_cf).abs();

    let order = projection_sorted_order(enum_ke2)?;
    let sorted = permute(gamma_ke2.matrix(), &order);
    let ones = DMatrix::<f64>::from_element(d.max(1), d.max(1), 1.0);
    let expected = gamma_cf.matrix().kronecker(&ones);
    let tensor_max_dev = if fibers_constant && expected.nrows() == sorted.nrows() {
        (&sorted - &expected).abs().max()
    } else {
        f64::INFINITY
    };

    Ok(LiftReport {
        fiber_size: d,
        fibers_constant,
        norm_cf,
        norm_ke2,
        norm_relation_dev,
        tensor_max_dev,
    })
}

// --- query-set reduction via conjugation ----------------------------------

/// Outcome of the query-set claim verification.
#[derive(Debug, Clone)]
pub struct QueryReductionReport {
    /// max over all 2NM queries of ||Gamma_KE2 o Delta_q||.
    pub max_over_all: f64,
    /// max over the special set of 2N queries, before conjugation.
    pub max_over_i_set: f64,
    /// masked norm at the matching special query after conjugating
    /// each maximizer outside the set (equals max_over_all when every
    /// maximizer already sits inside).
    pub max_after_conjugation: f64,
    /// maximizers that needed a conjugation.
    pub conjugated_queries: usize,
    /// the conjugated matrix kept the Gamma_CF (x) J block structure.
    pub tensor_retained: bool,
    /// ||Gamma'|| drift under the row/column permutation.
    pub isometry_dev: f64,
}

impl QueryReductionReport {
    pub fn passes(&self, tol: f64) -> bool {
        (self.max_over_all - self.max_after_conjugation).abs() <= tol
            && self.tensor_retained
            && self.isometry_dev <= tol
    }
}

/// Applies the transposition (a b) to the point argument of every
/// forward table: (F_k o sigma)(x) = F_k(sigma(x)).
fn conjugate_tables(tables: &[u8], n: usize, m: usize, a: u32, b: u32) -> Vec<u8> {
    let swap = |x: usize| -> usize {
        if x == a as usize {
            b as usize
        } else if x == b as usize {
            a as usize
        } else {
            x
        }
    };
    let mut out = vec![0u8; tables.len()];
    for k in 0..n {
        for x in 0..m {
            out[k * m + x] = tables[k * m + swap(x)];
        }
    }
    out
}

/// Verifies the claim that masked norms are maximized inside the
/// special query set after conjugation: finds every maximizer outside
/// the set, transposes its point with P (forward) or C (inverse),
/// rebuilds the mask from the conjugated inputs' actual answers at the
/// matching special query, and compares norms and block structure.
pub fn verify_query_reduction(
    gamma_ke2: &AdversaryMatrix,
    enum_ke2: &InputEnumeration,
    gamma_cf: &AdversaryMatrix,
    enum_cf: &InputEnumeration,
) -> Result<QueryReductionReport, AdvError> {
    if enum_ke2.problem != Problem::DKe2 {
        return Err(AdvError::Parameter(
            "query reduction is a d-KE2 check".into(),
        ));
    }
    let (n, m) = (enum_ke2.n_keys, enum_ke2.block_space);
    let (p, c) = (enum_ke2.plaintext, enum_ke2.ciphertext);

    let mut max_over_all = 0.0f64;
    let mut maximizers: Vec<MaskQuery> = Vec::new();
    for q in enum_ke2.all_queries() {
        let masked = spectral_norm(
            &gamma_ke2
                .matrix()
                .component_mul(&delta_mask(enum_ke2, &q)?.mask),
        )?;
        if masked > max_over_all + 1e-9 {
            max_over_all = masked;
            maximizers = vec![q];
        } else if (masked - max_over_all).abs() <= 1e-9 {
            maximizers.push(q);
        }
    }

    let in_i_set = |q: &MaskQuery| match q {
        MaskQuery::Ke2 { point, forward, .. } => {
            (*forward && *point == p) || (!*forward && *point == c)
        }
        _ => false,
    };
    let mut max_over_i_set = 0.0f64;
    for q in enum_ke2.i_set_queries() {
        let masked = spectral_norm(
            &gamma_ke2
                .matrix()
                .component_mul(&delta_mask(enum_ke2, &q)?.mask),
        )?;
        max_over_i_set = max_over_i_set.max(masked);
    }

    let order = projection_sorted_order(enum_ke2)?;
    let sizes = fiber_sizes(enum_ke2, enum_cf.len())?;
    let d = sizes.first().copied().unwrap_or(0);
    let fibers_constant = d > 0 && sizes.iter().all(|&s| s == d);
    let ones = DMatrix::<f64>::from_element(d.max(1), d.max(1), 1.0);

    let mut max_after_conjugation = 0.0f64;
    let mut conjugated_queries = 0usize;
    let mut tensor_retained = true;
    let mut isometry_dev = 0.0f64;
    let norm_original = spectral_norm(gamma_ke2.matrix())?;

    for q in &maximizers {
        if in_i_set(q) {
            let masked = spectral_norm(
                &gamma_ke2
                    .matrix()
                    .component_mul(&delta_mask(enum_ke2, q)?.mask),
            )?;
            max_after_conjugation = max_after_conjugation.max(masked);
            continue;
        }
        let MaskQuery::Ke2 {
            point,
            key,
            forward,
        } = *q
        else {
            continue;
        };
        conjugated_queries += 1;
        // sigma transposes the maximizer's point with P (forward) or C
        // (inverse); conjugated inputs are materialized in the original
        // row order, so Gamma' carries the same entries.
        let anchor = if forward { p } else { c };
        let conjugated: Vec<Vec<u8>> = enum_ke2
            .inputs
            .iter()
            .map(|t| conjugate_tables(t, n, m, point, anchor))
            .collect();
        let answers: Vec<u8> = conjugated
            .iter()
            .map(|t| {
                let row = &t[key * m..(key + 1) * m];
                if forward {
                    row[anchor as usize]
                } else {
                    row.iter().position(|&v| v == anchor as u8).unwrap() as u8
                }
            })
            .collect();
        let dim = conjugated.len();
        let mut mask = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..i {
                if answers[i] != answers[j] {
                    mask[(i, j)] = 1.0;
                    mask[(j, i)] = 1.0;
                }
            }
        }
        let masked = spectral_norm(&gamma_ke2.matrix().component_mul(&mask))?;
        max_after_conjugation = max_after_conjugation.max(masked);

        // Gamma' keeps the tensor structure under the pulled-back keys
        let sorted = permute(gamma_ke2.matrix(), &order);
        let expected = gamma_cf.matrix().kronecker(&ones);
        if !fibers_constant || (&sorted - &expected).abs().max() > 1e-9 {
            tensor_retained = false;
        }
        isometry_dev = isometry_dev.max((spectral_norm(gamma_ke2.matrix())? - norm_original).abs());
    }
    if maximizers.iter().all(in_i_set) {
        max_after_conjugation = max_over_all;
    }

    Ok(QueryReductionReport {
        max_over_all,
        max_over_i_set,
        max_after_conjugation,
        conjugated_queries,
        tensor_retained,
        isometry_dev,
    })
}

// --- best-effort optimizer -------------------------------------------------

/// Seeded coordinate-ascent hill climb over the differing-label
/// entries, maximizing the adversary value from the uniform start. No
/// optimality claim.
pub fn optimize_adversary(
    enumeration: &InputEnumeration,
    iterations: usize,
    seed: u64,
) -> Result<AdversaryMatrix, AdvError> {
    if enumeration.len() > MAX_OPTIMIZER_INPUTS {
        return Err(AdvError::SizeGuard(enumeration.len() as u64));
    }
    let masks = all_delta_masks(enumeration)?;
    let pairs: Vec<(usize, usize)> = (0..enumeration.len())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .filter(|&(i, j)| enumeration.labels[i] != enumeration.labels[j])
        .collect();
    if pairs.is_empty() {
        return Err(AdvError::UndefinedValue);
    }

    let mut best = AdversaryMatrix::uniform(enumeration);
    let mut best_value = adv_value(&best, &masks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..iterations {
        let &(i, j) = &pairs[rng.gen_range(0..pairs.len())];
        let current = best.matrix()[(i, j)];
        let step = rng.gen_range(0.05..0.5);
        for candidate in [
            0.0,
            current * 0.5,
            current * 2.0,
            current + step,
            (current - step).max(0.0),
        ] {
            if candidate == current {
                continue;
            }
            let mut matrix = best.matrix().clone();
            matrix[(i, j)] = candidate;
            matrix[(j, i)] = candidate;
            let trial = AdversaryMatrix {
                matrix,
                problem: enumeration.problem,
            };
            if let Ok(value) = adv_value(&trial, &masks) {
                if value > best_value + 1e-12 {
                    best_value = value;
                    best = trial;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigensolve_norm(matrix: &DMatrix<f64>) -> f64 {
        matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn or2_star_matrix_value_is_sqrt2() {
        let enumeration = enumerate_or2();
        let mut star = DMatrix::<f64>::zeros(4, 4);
        star[(0, 1)] = 1.0;
        star[(1, 0)] = 1.0;
        star[(0, 2)] = 1.0;
        star[(2, 0)] = 1.0;
        let gamma = AdversaryMatrix::new(star.clone(), &enumeration).unwrap();
        let masks = all_delta_masks(&enumeration).unwrap();
        let value = adv_value(&gamma, &masks).unwrap();
        assert!((value - 2f64.sqrt()).abs() < 1e-6, "value {}", value);

        // oracle route: eigensolve of the star and both masked norms
        let full = eigensolve_norm(&star);
        let masked: Vec<f64> = masks
            .iter()
            .map(|m| eigensolve_norm(&star.component_mul(&m.mask)))
            .collect();
        let oracle = masked
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| full / v)
            .fold(f64::INFINITY, f64::min);
        assert!((value - oracle).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_eigensolve_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for trial in 0..50 {
            let n = rng.gen_range(2..20);
            let mut matrix = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.gen_range(-2.0..2.0);
                    matrix[(i, j)] = v;
                    matrix[(j, i)] = v;
                }
            }
            let power = spectral_norm(&matrix).unwrap();
            let oracle = eigensolve_norm(&matrix);
            assert!(
                (power - oracle).abs() < 1e-8 * oracle.max(1.0),
                "trial {}: {} vs {}",
                trial,
                power,
                oracle
            );
        }
    }

    #[test]
    fn spectral_norm_simple_cases() {
        let ones = DMatrix::<f64>::from_element(5, 5, 1.0);
        assert!((spectral_norm(&ones).unwrap() - 5.0).abs() < 1e-9);
        let diag =
            DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -7.0, 3.0]));
        assert!((spectral_norm(&diag).unwrap() - 7.0).abs() < 1e-9);
        let mut asym = DMatrix::<f64>::zeros(2, 2);
        asym[(0, 1)] = 1.0;
        assert!(spectral_norm(&asym).is_err());
    }

    #[test]
    fn adv_value_invariances() {
        let enumeration = enumerate_or2();
        let gamma = AdversaryMatrix::uniform(&enumeration);
        let masks = all_delta_masks(&enumeration).unwrap();
        let base = adv_value(&gamma, &masks).unwrap();
        let scaled = AdversaryMatrix::new(gamma.matrix() * 3.25, &enumeration).unwrap();
        assert!((adv_value(&scaled, &masks).unwrap() - base).abs() < 1e-9);

        let zero = AdversaryMatrix::new(DMatrix::zeros(4, 4), &enumeration).unwrap();
        assert!(matches!(
            adv_value(&zero, &masks),
            Err(AdvError::UndefinedValue)
        ));
    }

    #[test]
    fn enumeration_counts_at_n2_m3() {
        // P != C keeps yes-inputs inside the constant-fiber sector
        let ke2 = enumerate_inputs(Problem::DKe2, 2, 3, 0, 1).unwrap();
        let total = ke2.len() as u64 + ke2.excluded_multi_solution + ke2.excluded_outside_sector;
        assert_eq!(total, 36);
        assert!(ke2.yes_count() > 0);
        assert!(ke2.no_count() > 0);

        // every label matches the exhaustive solution count
        for (i, table) in ke2.inputs.iter().enumerate() {
            let solutions = count_solutions(table, 2, 3, 0, 1);
            assert!(solutions <= 1);
            assert_eq!(ke2.labels[i], solutions == 1);
        }
    }

    #[test]
    fn projection_is_label_preserving() {
        let cf = enumerate_inputs(Problem::DCf, 2, 3, 0, 1).unwrap();
        let ke2 = enumerate_inputs(Problem::DKe2, 2, 3, 0, 1).unwrap();
        let keys = ke2.projection_keys.as_ref().unwrap();
        for (i, &k) in keys.iter().enumerate() {
            assert_eq!(ke2.labels[i], cf.labels[k], "input {}", i);
        }
    }

    #[test]
    fn identity_family_projects_to_constant_claws() {
        // identity permutations with P = C: G_1 = G_2 = constant P, a
        // claw at every key pair; the uniqueness filter excludes it
        let m = 3;
        let n = 2;
        let mut tables = Vec::new();
        for _ in 0..n {
            tables.extend(0..m as u8);
        }
        let (g1, g2) = project_input(&tables, n, m, 1, 1);
        assert_eq!(g1, vec![1, 1]);
        assert_eq!(g2, vec![1, 1]);
        assert_eq!(count_claws(&g1, &g2), n * n);
        assert_eq!(count_solutions(&tables, n, m, 1, 1), n * n);
    }

    #[test]
    fn fibers_are_constant_within_the_sector() {
        for (n, m, p, c) in [(2usize, 3usize, 0u32, 1u32), (2, 4, 0, 1), (2, 4, 0, 0)] {
            let cf = enumerate_inputs(Problem::DCf, n, m, p, c).unwrap();
            let ke2 = enumerate_inputs(Problem::DKe2, n, m, p, c).unwrap();
            let sizes = fiber_sizes(&ke2, cf.len()).unwrap();
            let expected_d: usize = (factorial(m - 2) as usize).pow(n as u32);
            assert!(sizes.iter().all(|&s| s == expected_d), "{:?}", (n, m, p, c));
            assert_eq!(ke2.len(), cf.len() * expected_d);
        }
    }

    #[test]
    fn delta_masks_are_symmetric_zero_diagonal_and_cover_pairs() {
        let ke2 = enumerate_inputs(Problem::DKe2, 2, 3, 0, 1).unwrap();
        let queries = ke2.all_queries();
        assert_eq!(queries.len(), 12);
        let masks = all_delta_masks(&ke2).unwrap();
        let dim = ke2.len();
        for mask in &masks {
            for i in 0..dim {
                assert_eq!(mask.mask[(i, i)], 0.0);
                for j in 0..i {
                    assert_eq!(mask.mask[(i, j)], mask.mask[(j, i)]);
                }
            }
        }
        // distinct inputs differ somewhere
        for i in 0..dim {
            for j in 0..i {
                let covered: f64 = masks.iter().map(|m| m.mask[(i, j)]).sum();
                assert!(covered > 0.0, "pair ({}, {}) never distinguished", i, j);
            }
        }
    }

    #[test]
    fn lift_reproduces_lemma_structure_at_n2_m3() {
        let cf = enumerate_inputs(Problem::DCf, 2, 3, 0, 1).unwrap();
        let ke2 = enumerate_inputs(Problem::DKe2, 2, 3, 0, 1).unwrap();
        let gamma_cf = AdversaryMatrix::uniform(&cf);
        let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2).unwrap();
        let report = verify_lift(&gamma_cf, &cf, &gamma_ke2, &ke2).unwrap();
        assert!(report.fibers_constant);
        assert!(report.norm_relation_dev < 1e-6, "{:?}", report);
        assert!(report.tensor_max_dev < 1e-9, "{:?}", report);

        // eigensolve oracle for the norm relation
        let oracle_cf = eigensolve_norm(gamma_cf.matrix());
        let oracle_ke2 = eigensolve_norm(gamma_ke2.matrix());
        assert!((oracle_ke2 - report.fiber_size as f64 * oracle_cf).abs() < 1e-6);
    }

    #[test]
    fn lift_at_larger_case_has_nontrivial_fibers() {
        let cf = enumerate_inputs(Problem::DCf, 2, 4, 0, 1).unwrap();
        let ke2 = enumerate_inputs(Problem::DKe2, 2, 4, 0, 1).unwrap();
        assert_eq!(ke2.len(), 4 * cf.len());
        let gamma_cf = AdversaryMatrix::uniform(&cf);
        let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2).unwrap();
        let report = verify_lift(&gamma_cf, &cf, &gamma_ke2, &ke2).unwrap();
        assert_eq!(report.fiber_size, 4);
        assert!(report.passes(1e-6), "{:?}", report);
    }

    #[test]
    fn masked_blocks_match_projected_queries() {
        // for special queries q, sorting rows by projection turns
        // Gamma_KE2 o Delta_q into (Gamma_CF o Delta_qtilde) (x) J
        let cf = enumerate_inputs(Problem::DCf, 2, 3, 0, 1).unwrap();
        let ke2 = enumerate_inputs(Problem::DKe2, 2, 3, 0, 1).unwrap();
        let gamma_cf = AdversaryMatrix::uniform(&cf);
        let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2).unwrap();
        let order = projection_sorted_order(&ke2).unwrap();
        let d = fiber_sizes(&ke2, cf.len()).unwrap()[0];
        let ones = DMatrix::<f64>::from_element(d, d, 1.0);

        for (ke2_q, cf_q) in [
            (
                MaskQuery::Ke2 {
                    point: 0,
                    key: 0,
                    forward: true,
                },
                MaskQuery::Cf {
                    key: 0,
                    forward: true,
                },
            ),
            (
                MaskQuery::Ke2 {
                    point: 1,
                    key: 1,
                    forward: false,
                },
                MaskQuery::Cf {
                    key: 1,
                    forward: false,
                },
            ),
        ] {
            let masked = gamma_ke2
                .matrix()
                .component_mul(&delta_mask(&ke2, &ke2_q).unwrap().mask);
            let sorted = permute(&masked, &order);
            let cf_masked = gamma_cf
                .matrix()
                .component_mul(&delta_mask(&cf, &cf_q).unwrap().mask);
            let expected = cf_masked.kronecker(&ones);
            assert!((&sorted - &expected).abs().max() < 1e-12);
        }
    }

    #[test]
    fn query_reduction_reports_equality() {
        for (n, m) in [(2usize, 3usize), (2, 4)] {
            let cf = enumerate_inputs(Problem::DCf, n, m, 0, 1).unwrap();
            let ke2 = enumerate_inputs(Problem::DKe2, n, m, 0, 1).unwrap();
            let gamma_cf = AdversaryMatrix::uniform(&cf);
            let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2).unwrap();
            let report = verify_query_reduction(&gamma_ke2, &ke2, &gamma_cf, &cf).unwrap();
            assert!(report.passes(1e-6), "N = {}, M = {}: {:?}", n, m, report);
        }
    }

    #[test]
    fn optimizer_never_regresses_and_finds_or2_optimum() {
        let enumeration = enumerate_or2();
        let masks = all_delta_masks(&enumeration).unwrap();
        let uniform_value = adv_value(&AdversaryMatrix::uniform(&enumeration), &masks).unwrap();
        let optimized = optimize_adversary(&enumeration, 200, 7).unwrap();
        let value = adv_value(&optimized, &masks).unwrap();
        assert!(value >= uniform_value - 1e-12);
        assert!(value >= 2f64.sqrt() - 1e-3, "value {}", value);

        // deterministic under a fixed seed
        let again = optimize_adversary(&enumeration, 200, 7).unwrap();
        assert_eq!(optimized.matrix(), again.matrix());
    }

    #[test]
    fn size_guard_rejects_blowups() {
        assert!(matches!(
            enumerate_inputs(Problem::DKe2, 4, 5, 0, 1),
            Err(AdvError::SizeGuard(_))
        ));
    }
}
