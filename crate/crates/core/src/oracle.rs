//! Ideal-cipher oracle: a seeded family of random permutations with
//! query-counted forward/inverse access, instance planting, and the
//! conjugation/randomization transforms used by the attack harnesses.
//!
//! Keys and block values are 0-based internally (`0..N`, `0..M`).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard caps keeping explicit tables at desk scale.
pub const MAX_BLOCK_SPACE: usize = 1 << 22;
pub const MAX_TABLE_ENTRIES: usize = 1 << 24;

/// Magic prefix of the flat binary instance layout.
pub const MAGIC: &[u8; 6] = b"QMITM1";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("infeasible size: {0}")]
    InfeasibleSize(String),
    #[error("key {key} out of range (n_keys = {n_keys})")]
    KeyOutOfRange { key: usize, n_keys: usize },
    #[error("point {point} out of range (block_space = {block_space})")]
    PointOutOfRange { point: u32, block_space: usize },
    #[error("permutation is not a bijection of the block space")]
    NotABijection,
    #[error("expected {expected} keys for depth {depth}, got {got}")]
    WrongKeyCount {
        depth: usize,
        expected: usize,
        got: usize,
    },
    #[error("plaintexts must be distinct")]
    DuplicatePlaintext,
    #[error("depth must be 2 or 4, got {0}")]
    BadDepth(usize),
    #[error("depth 4 requires exactly 4 plaintexts, got {0}")]
    BadPairCount(usize),
    #[error("at least one plaintext required")]
    NoPairs,
    #[error("malformed instance data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Direction of an oracle query: `+1` forward, `-1` inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn sign(self) -> i8 {
        match self {
            Direction::Forward => 1,
            Direction::Inverse => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Direction::Forward),
            -1 => Some(Direction::Inverse),
            _ => None,
        }
    }
}

/// A single oracle query `(x, k, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Query {
    pub point: u32,
    pub key: usize,
    pub direction: Direction,
}

impl Query {
    pub fn forward(key: usize, point: u32) -> Self {
        Query {
            point,
            key,
            direction: Direction::Forward,
        }
    }

    pub fn inverse(key: usize, point: u32) -> Self {
        Query {
            point,
            key,
            direction: Direction::Inverse,
        }
    }
}

/// Resource counters for one attack run. Time is one unit per oracle
/// query plus one per associative-table insert or probe; memory counts
/// simultaneously stored table entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub forward_queries: u64,
    pub inverse_queries: u64,
    pub time_units: u64,
    pub peak_memory_units: u64,
    current_memory_units: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_queries(&self) -> u64 {
        self.forward_queries + self.inverse_queries
    }

    #[inline]
    fn count_query(&mut self, direction: Direction) {
        match direction {
            Direction::Forward => self.forward_queries += 1,
            Direction::Inverse => self.inverse_queries += 1,
        }
        self.time_units += 1;
    }

    /// One stored table entry: a time unit for the insert plus a live
    /// memory unit until released.
    #[inline]
    pub fn count_insert(&mut self) {
        self.time_units += 1;
        self.current_memory_units += 1;
        if self.current_memory_units > self.peak_memory_units {
            self.peak_memory_units = self.current_memory_units;
        }
    }

    /// One table lookup.
    #[inline]
    pub fn count_probe(&mut self) {
        self.time_units += 1;
    }

    /// Entries dropped when an associative index goes out of scope.
    #[inline]
    pub fn release(&mut self, entries: u64) {
        debug_assert!(entries <= self.current_memory_units);
        self.current_memory_units = self.current_memory_units.saturating_sub(entries);
    }

    pub fn current_memory_units(&self) -> u64 {
        self.current_memory_units
    }
}

/// A seeded collection of `n_keys` random permutations of `[block_space]`,
/// stored as explicit forward and inverse tables so both directions cost
/// one lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationFamily {
    n_keys: usize,
    block_space: usize,
    seed: u64,
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl PermutationFamily {
    pub fn n_keys(&self) -> usize {
        self.n_keys
    }

    pub fn block_space(&self) -> usize {
        self.block_space
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn forward(&self, key: usize, x: u32) -> u32 {
        self.forward[key * self.block_space + x as usize]
    }

    #[inline]
    pub fn inverse(&self, key: usize, x: u32) -> u32 {
        self.inverse[key * self.block_space + x as usize]
    }

    /// Forward table of one key as a slice.
    pub fn forward_table(&self, key: usize) -> &[u32] {
        &self.forward[key * self.block_space..(key + 1) * self.block_space]
    }

    fn from_forward_tables(
        n_keys: usize,
        block_space: usize,
        seed: u64,
        forward: Vec<u32>,
    ) -> Result<Self, OracleError> {
        assert_eq!(forward.len(), n_keys * block_space);
        let mut inverse = vec![u32::MAX; n_keys * block_space];
        for key in 0..n_keys {
            let base = key * block_space;
            for x in 0..block_space {
                let y = forward[base + x] as usize;
                if y >= block_space || inverse[base + y] != u32::MAX {
                    return Err(OracleError::NotABijection);
                }
                inverse[base + y] = x as u32;
            }
        }
        Ok(PermutationFamily {
            n_keys,
            block_space,
            seed,
            forward,
            inverse,
        })
    }
}

fn check_dimensions(n_keys: usize, block_space: usize) -> Result<(), OracleError> {
    if n_keys < 1 {
        return Err(OracleError::Parameter("n_keys must be >= 1".into()));
    }
    if block_space < 2 {
        return Err(OracleError::Parameter("block_space must be >= 2".into()));
    }
    if block_space > MAX_BLOCK_SPACE {
        return Err(OracleError::InfeasibleSize(format!(
            "block_space {} exceeds cap {}",
            block_space, MAX_BLOCK_SPACE
        )));
    }
    match n_keys.checked_mul(block_space) {
        Some(total) if total <= MAX_TABLE_ENTRIES => Ok(()),
        _ => Err(OracleError::InfeasibleSize(format!(
            "table of {} x {} entries exceeds cap {}",
            n_keys, block_space, MAX_TABLE_ENTRIES
        ))),
    }
}

/// Draws `n_keys` independent uniform permutations of `[block_space]`
/// from a seeded generator. Equal `(seed, n_keys, block_space)` yield
/// bit-identical tables.
pub fn generate_family(
    seed: u64,
    n_keys: usize,
    block_space: usize,
) -> Result<PermutationFamily, OracleError> {
    check_dimensions(n_keys, block_space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward = Vec::with_capacity(n_keys * block_space);
    let mut scratch: Vec<u32> = (0..block_space as u32).collect();
    for _ in 0..n_keys {
        scratch.shuffle(&mut rng);
        forward.extend_from_slice(&scratch);
        scratch.sort_unstable();
    }
    PermutationFamily::from_forward_tables(n_keys, block_space, seed, forward)
}

/// Uniform random permutation of `[len]` from `rng`.
fn random_permutation(len: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut sigma: Vec<u32> = (0..len as u32).collect();
    sigma.shuffle(rng);
    sigma
}

/// A planted key-extraction instance: the public family together with
/// the secret key chain and its plaintext/ciphertext pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    family: PermutationFamily,
    depth: usize,
    planted_keys: Vec<usize>,
    pairs: Vec<(u32, u32)>,
}

impl Instance {
    pub fn family(&self) -> &PermutationFamily {
        &self.family
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_keys(&self) -> usize {
        self.family.n_keys
    }

    pub fn block_space(&self) -> usize {
        self.family.block_space
    }

    pub fn planted_keys(&self) -> &[usize] {
        &self.planted_keys
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// Chains the forward permutations of `keys` over `x`, without
    /// touching any ledger. Setup-time evaluation, not an attack query.
    pub fn chain_forward(&self, keys: &[usize], x: u32) -> u32 {
        keys.iter().fold(x, |acc, &k| self.family.forward(k, acc))
    }

    fn check_chain_invariant(&self) -> Result<(), OracleError> {
        for &(p, c) in &self.pairs {
            if self.chain_forward(&self.planted_keys, p) != c {
                return Err(OracleError::Format(
                    "planted keys do not map plaintexts to ciphertexts".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Builds an instance by chaining the forward permutations of `keys`
/// over each plaintext.
pub fn plant_instance(
    family: PermutationFamily,
    depth: usize,
    keys: &[usize],
    plaintexts: &[u32],
) -> Result<Instance, OracleError> {
    if depth != 2 && depth != 4 {
        return Err(OracleError::BadDepth(depth));
    }
    if keys.len() != depth {
        return Err(OracleError::WrongKeyCount {
            depth,
            expected: depth,
            got: keys.len(),
        });
    }
    for &k in keys {
        if k >= family.n_keys {
            return Err(OracleError::KeyOutOfRange {
                key: k,
                n_keys: family.n_keys,
            });
        }
    }
    if plaintexts.is_empty() {
        return Err(OracleError::NoPairs);
    }
    if depth == 4 && plaintexts.len() != 4 {
        return Err(OracleError::BadPairCount(plaintexts.len()));
    }
    let mut seen = std::collections::HashSet::new();
    for &p in plaintexts {
        if p as usize >= family.block_space {
            return Err(OracleError::PointOutOfRange {
                point: p,
                block_space: family.block_space,
            });
        }
        if !seen.insert(p) {
            return Err(OracleError::DuplicatePlaintext);
        }
    }
    let pairs = plaintexts
        .iter()
        .map(|&p| {
            let c = keys.iter().fold(p, |acc, &k| family.forward(k, acc));
            (p, c)
        })
        .collect();
    Ok(Instance {
        family,
        depth,
        planted_keys: keys.to_vec(),
        pairs,
    })
}

/// Answers one oracle query and charges it to the ledger.
#[inline]
pub fn query(instance: &Instance, q: Query, ledger: &mut QueryLedger) -> Result<u32, OracleError> {
    let family = &instance.family;
    if q.key >= family.n_keys {
        return Err(OracleError::KeyOutOfRange {
            key: q.key,
            n_keys: family.n_keys,
        });
    }
    if q.point as usize >= family.block_space {
        return Err(OracleError::PointOutOfRange {
            point: q.point,
            block_space: family.block_space,
        });
    }
    ledger.count_query(q.direction);
    Ok(match q.direction {
        Direction::Forward => family.forward(q.key, q.point),
        Direction::Inverse => family.inverse(q.key, q.point),
    })
}

fn validate_sigma(sigma: &[u32], block_space: usize) -> Result<(), OracleError> {
    if sigma.len() != block_space {
        return Err(OracleError::NotABijection);
    }
    let mut seen = vec![false; block_space];
    for &v in sigma {
        let v = v as usize;
        if v >= block_space || seen[v] {
            return Err(OracleError::NotABijection);
        }
        seen[v] = true;
    }
    Ok(())
}

/// Replaces every permutation by its conjugate under `sigma` and maps
/// the pairs through `sigma`. The planted keys keep solving the
/// conjugated instance.
pub fn conjugate_instance(instance: &Instance, sigma: &[u32]) -> Result<Instance, OracleError> {
    let m = instance.block_space();
    validate_sigma(sigma, m)?;
    let mut sigma_inv = vec![0u32; m];
    for (x, &v) in sigma.iter().enumerate() {
        sigma_inv[v as usize] = x as u32;
    }
    let family = &instance.family;
    let mut forward = vec![0u32; family.n_keys * m];
    for key in 0..family.n_keys {
        let base = key * m;
        for x in 0..m {
            // sigma . F_k . sigma^{-1}
            forward[base + x] = sigma[family.forward(key, sigma_inv[x]) as usize];
        }
    }
    let conjugated =
        PermutationFamily::from_forward_tables(family.n_keys, m, family.seed, forward)?;
    let pairs = instance
        .pairs
        .iter()
        .map(|&(p, c)| (sigma[p as usize], sigma[c as usize]))
        .collect();
    let out = Instance {
        family: conjugated,
        depth: instance.depth,
        planted_keys: instance.planted_keys.clone(),
        pairs,
    };
    out.check_chain_invariant()?;
    Ok(out)
}

/// Left-composes every `F_k` with an independent uniform permutation
/// drawn from `seed`, then recomputes the ciphertexts so the planted
/// keys remain valid.
pub fn randomize_instance(instance: &Instance, seed: u64) -> Instance {
    let m = instance.block_space();
    let n = instance.n_keys();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward = vec![0u32; n * m];
    for key in 0..n {
        let sigma = random_permutation(m, &mut rng);
        let base = key * m;
        for x in 0..m {
            forward[base + x] = sigma[instance.family.forward(key, x as u32) as usize];
        }
    }
    let family = PermutationFamily::from_forward_tables(n, m, instance.family.seed, forward)
        .expect("composition of bijections is a bijection");
    let mut out = Instance {
        family,
        depth: instance.depth,
        planted_keys: instance.planted_keys.clone(),
        pairs: instance.pairs.clone(),
    };
    for pair in &mut out.pairs {
        pair.1 = out
            .planted_keys
            .iter()
            .fold(pair.0, |acc, &k| out.family.forward(k, acc));
    }
    out
}

// --- flat binary + JSON descriptor serialization -------------------------

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn read_u32(data: &[u8], off: &mut usize) -> Result<u32, OracleError> {
    let end = *off + 4;
    let bytes = data
        .get(*off..end)
        .ok_or_else(|| OracleError::Format("truncated".into()))?;
    *off = end;
    Ok(u32::from_le_bytes(bytes.try_into().unwrap()))
}

impl Instance {
    /// Flat binary layout: magic `QMITM1`, then little-endian 32-bit
    /// words: N, M, depth, the depth keys, pair count, the (P, C)
    /// pairs, and the N forward tables of M words each.
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.block_space();
        let n = self.n_keys();
        let mut buf = Vec::with_capacity(6 + 4 * (4 + self.depth + 2 * self.pairs.len() + n * m));
        buf.extend_from_slice(MAGIC);
        push_u32(&mut buf, n as u32);
        push_u32(&mut buf, m as u32);
        push_u32(&mut buf, self.depth as u32);
        for &k in &self.planted_keys {
            push_u32(&mut buf, k as u32);
        }
        push_u32(&mut buf, self.pairs.len() as u32);
        for &(p, c) in &self.pairs {
            push_u32(&mut buf, p);
            push_u32(&mut buf, c);
        }
        for &word in &self.family.forward {
            push_u32(&mut buf, word);
        }
        buf
    }

    /// Parses the flat binary layout and revalidates every invariant
    /// (bijections, chain consistency). The seed is descriptor
    /// metadata, not part of the binary; pass 0 when unknown.
    pub fn from_bytes(data: &[u8], seed: u64) -> Result<Instance, OracleError> {
        if data.len() < 6 || &data[..6] != MAGIC {
            return Err(OracleError::Format("bad magic".into()));
        }
        let mut off = 6;
        let n = read_u32(data, &mut off)? as usize;
        let m = read_u32(data, &mut off)? as usize;
        let depth = read_u32(data, &mut off)? as usize;
        if depth != 2 && depth != 4 {
            return Err(OracleError::BadDepth(depth));
        }
        check_dimensions(n, m)?;
        let mut planted_keys = Vec::with_capacity(depth);
        for _ in 0..depth {
            let k = read_u32(data, &mut off)? as usize;
            if k >= n {
                return Err(OracleError::KeyOutOfRange { key: k, n_keys: n });
            }
            planted_keys.push(k);
        }
        let n_pairs = read_u32(data, &mut off)? as usize;
        if n_pairs == 0 {
            return Err(OracleError::NoPairs);
        }
        if depth == 4 && n_pairs != 4 {
            return Err(OracleError::BadPairCount(n_pairs));
        }
        let mut pairs = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let p = read_u32(data, &mut off)?;
            let c = read_u32(data, &mut off)?;
            pairs.push((p, c));
        }
        let mut forward = Vec::with_capacity(n * m);
        for _ in 0..n * m {
            forward.push(read_u32(data, &mut off)?);
        }
        if off != data.len() {
            return Err(OracleError::Format("trailing bytes".into()));
        }
        let family = PermutationFamily::from_forward_tables(n, m, seed, forward)?;
        let out = Instance {
            family,
            depth,
            planted_keys,
            pairs,
        };
        out.check_chain_invariant()?;
        Ok(out)
    }
}

/// JSON descriptor written by the CLI next to the binary blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub format: String,
    pub seed: u64,
    pub n_keys: usize,
    pub block_space: usize,
    pub depth: usize,
    pub planted_keys: Vec<usize>,
    pub pairs: Vec<(u32, u32)>,
    pub binary_file: String,
}

impl InstanceDescriptor {
    pub fn describe(instance: &Instance, binary_file: &str) -> Self {
        InstanceDescriptor {
            format: String::from_utf8_lossy(MAGIC).into_owned(),
            seed: instance.family.seed,
            n_keys: instance.n_keys(),
            block_space: instance.block_space(),
            depth: instance.depth(),
            planted_keys: instance.planted_keys.clone(),
            pairs: instance.pairs.clone(),
            binary_file: binary_file.to_string(),
        }
    }
}
