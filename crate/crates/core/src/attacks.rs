//! Reference classical attacks with exact resource ledgers: exhaustive
//! search, 2-encryption meet-in-the-middle, composite-key 4-encryption
//! MITM, and the dissection attack.
//!
//! Every oracle access goes through [`crate::oracle::query`], so the
//! ledger counters are exact query counts; associative-index inserts and
//! probes each cost one time unit, stored entries one memory unit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{query, Instance, OracleError, Query, QueryLedger};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("no key tuple consistent with all pairs")]
    NoKeyFound,
    #[error("multiple key tuples consistent with all pairs (too few pairs)")]
    AmbiguousKey,
    #[error("attack requires depth {expected}, instance has depth {got}")]
    WrongDepth { expected: usize, got: usize },
    #[error("attack requires at least {expected} pairs, instance has {got}")]
    TooFewPairs { expected: usize, got: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Outcome of a key-recovery run: the tuple, the resource ledger, and
/// whether the tuple was re-checked against every pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackResult {
    pub recovered_keys: Vec<usize>,
    pub ledger: QueryLedger,
    pub verified: bool,
}

fn require_depth(instance: &Instance, expected: usize) -> Result<(), AttackError> {
    if instance.depth() != expected {
        return Err(AttackError::WrongDepth {
            expected,
            got: instance.depth(),
        });
    }
    Ok(())
}

const EMPTY: u32 = u32::MAX;

/// Associative index from a block value in `[M]` to the keys (or key
/// pairs) that produced it: chained buckets over the value space, with
/// ledger-charged inserts and probes. `clear` keeps the allocations so
/// a dissection scan can reuse one index across all `M` middle-value
/// guesses.
struct ValueIndex<V> {
    heads: Vec<u32>,
    next: Vec<u32>,
    values: Vec<V>,
    touched: Vec<u32>,
}

impl<V: Copy> ValueIndex<V> {
    fn new(block_space: usize) -> Self {
        ValueIndex {
            heads: vec![EMPTY; block_space],
            next: Vec::new(),
            values: Vec::new(),
            touched: Vec::new(),
        }
    }

    fn insert(&mut self, key: u32, value: V, ledger: &mut QueryLedger) {
        let slot = self.values.len() as u32;
        let head = &mut self.heads[key as usize];
        if *head == EMPTY {
            self.touched.push(key);
        }
        self.next.push(*head);
        self.values.push(value);
        *head = slot;
        ledger.count_insert();
    }

    fn probe(&self, key: u32, ledger: &mut QueryLedger, out: &mut Vec<V>) {
        ledger.count_probe();
        out.clear();
        let mut slot = self.heads[key as usize];
        while slot != EMPTY {
            out.push(self.values[slot as usize]);
            slot = self.next[slot as usize];
        }
    }

    /// Drops every entry (ledger memory released) but keeps capacity.
    fn clear(&mut self, ledger: &mut QueryLedger) {
        ledger.release(self.values.len() as u64);
        for &key in &self.touched {
            self.heads[key as usize] = EMPTY;
        }
        self.touched.clear();
        self.next.clear();
        self.values.clear();
    }
}

/// Checks one key tuple against every pair beyond the first, with
/// early exit on the first mismatch. Each chain link is a counted
/// forward query.
fn verify_remaining_pairs(
    instance: &Instance,
    keys: &[usize],
    ledger: &mut QueryLedger,
) -> Result<bool, AttackError> {
    for &(p, c) in &instance.pairs()[1..] {
        let mut v = p;
        for &k in keys {
            v = query(instance, Query::forward(k, v), ledger)?;
        }
        if v != c {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Re-derives the full verification flag for a survivor, checking the
/// first pair too.
fn verify_all_pairs(
    instance: &Instance,
    keys: &[usize],
    ledger: &mut QueryLedger,
) -> Result<bool, AttackError> {
    for &(p, c) in instance.pairs() {
        let mut v = p;
        for &k in keys {
            v = query(instance, Query::forward(k, v), ledger)?;
        }
        if v != c {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Iterates over all `N^depth` key tuples and returns the first one
/// consistent with every pair. Constant memory, `Theta(N^depth)` time.
pub fn exhaustive_search(instance: &Instance) -> Result<AttackResult, AttackError> {
    let depth = instance.depth();
    if depth != 2 && depth != 4 {
        return Err(AttackError::WrongDepth {
            expected: 2,
            got: depth,
        });
    }
    let n = instance.n_keys();
    let mut ledger = QueryLedger::new();
    let mut keys = vec![0usize; depth];
    loop {
        let mut consistent = true;
        for &(p, c) in instance.pairs() {
            let mut v = p;
            for &k in &keys {
                v = query(instance, Query::forward(k, v), &mut ledger)?;
            }
            if v != c {
                consistent = false;
                break;
            }
        }
        if consistent {
            return Ok(AttackResult {
                recovered_keys: keys,
                ledger,
                verified: true,
            });
        }
        // odometer increment over [N]^depth
        let mut pos = depth;
        loop {
            if pos == 0 {
                return Err(AttackError::NoKeyFound);
            }
            pos -= 1;
            keys[pos] += 1;
            if keys[pos] < n {
                break;
            }
            keys[pos] = 0;
        }
    }
}

fn settle_survivor(
    survivor: Option<Vec<usize>>,
    ledger: QueryLedger,
) -> Result<AttackResult, AttackError> {
    match survivor {
        Some(recovered_keys) => Ok(AttackResult {
            recovered_keys,
            ledger,
            verified: true,
        }),
        None => Err(AttackError::NoKeyFound),
    }
}

/// 2-encryption meet-in-the-middle: tabulate `F_k(P_1)` for all keys,
/// probe with `F_k'^{-1}(C_1)`, verify collisions against the
/// remaining pairs. `O(N)` time, `Theta(N)` memory.
pub fn mitm_2(instance: &Instance) -> Result<AttackResult, AttackError> {
    require_depth(instance, 2)?;
    let n = instance.n_keys();
    let (p1, c1) = instance.pairs()[0];
    let mut ledger = QueryLedger::new();

    let mut table: ValueIndex<u32> = ValueIndex::new(instance.block_space());
    for k in 0..n {
        let y = query(instance, Query::forward(k, p1), &mut ledger)?;
        table.insert(y, k as u32, &mut ledger);
    }

    let mut survivor: Option<Vec<usize>> = None;
    let mut candidates = Vec::new();
    for k2 in 0..n {
        let z = query(instance, Query::inverse(k2, c1), &mut ledger)?;
        table.probe(z, &mut ledger, &mut candidates);
        for &k1 in &candidates {
            let tuple = [k1 as usize, k2];
            if verify_remaining_pairs(instance, &tuple, &mut ledger)? {
                match &survivor {
                    Some(prev) if prev[..] != tuple[..] => {
                        table.clear(&mut ledger);
                        return Err(AttackError::AmbiguousKey);
                    }
                    _ => survivor = Some(tuple.to_vec()),
                }
            }
        }
    }
    table.clear(&mut ledger);
    settle_survivor(survivor, ledger)
}

/// 4-encryption MITM treating `(k_1, k_2)` and `(k_3, k_4)` as single
/// composite keys: `Theta(N^2)` time and memory.
pub fn mitm_4(instance: &Instance) -> Result<AttackResult, AttackError> {
    require_depth(instance, 4)?;
    let n = instance.n_keys();
    let (p1, c1) = instance.pairs()[0];
    let mut ledger = QueryLedger::new();

    let mut table: ValueIndex<(u32, u32)> = ValueIndex::new(instance.block_space());
    for k1 in 0..n {
        let y1 = query(instance, Query::forward(k1, p1), &mut ledger)?;
        for k2 in 0..n {
            let y2 = query(instance, Query::forward(k2, y1), &mut ledger)?;
            table.insert(y2, (k1 as u32, k2 as u32), &mut ledger);
        }
    }

    let mut survivor: Option<Vec<usize>> = None;
    let mut candidates = Vec::new();
    for k4 in 0..n {
        let z1 = query(instance, Query::inverse(k4, c1), &mut ledger)?;
        for k3 in 0..n {
            let z2 = query(instance, Query::inverse(k3, z1), &mut ledger)?;
            table.probe(z2, &mut ledger, &mut candidates);
            for &(k1, k2) in &candidates {
                let tuple = [k1 as usize, k2 as usize, k3, k4];
                if verify_remaining_pairs(instance, &tuple, &mut ledger)? {
                    match &survivor {
                        Some(prev) if prev[..] != tuple[..] => {
                            table.clear(&mut ledger);
                            return Err(AttackError::AmbiguousKey);
                        }
                        _ => survivor = Some(tuple.to_vec()),
                    }
                }
            }
        }
    }
    table.clear(&mut ledger);
    settle_survivor(survivor, ledger)
}

/// Which half of the 4-chain a middle-value check solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// Pairs `(k_a, k_b)` with `F_kb(F_ka(P_1)) = X`.
    Lower,
    /// Pairs `(k_a, k_b)` with `F_kb(F_ka(X)) = C_1`.
    Upper,
}

/// Two-table MITM for one half of the 4-chain, reusing the caller's
/// scratch index; results are appended to `out` as (k_a, k_b).
fn middle_check_into(
    instance: &Instance,
    x: u32,
    half: Half,
    ledger: &mut QueryLedger,
    table: &mut ValueIndex<u32>,
    hits: &mut Vec<u32>,
    out: &mut Vec<(usize, usize)>,
) -> Result<(), AttackError> {
    let n = instance.n_keys();
    let (p1, c1) = instance.pairs()[0];
    let (start, target) = match half {
        Half::Lower => (p1, x),
        Half::Upper => (x, c1),
    };
    out.clear();
    for ka in 0..n {
        let y = query(instance, Query::forward(ka, start), ledger)?;
        table.insert(y, ka as u32, ledger);
    }
    for kb in 0..n {
        let z = query(instance, Query::inverse(kb, target), ledger)?;
        table.probe(z, ledger, hits);
        for &ka in hits.iter() {
            out.push((ka as usize, kb));
        }
    }
    table.clear(ledger);
    Ok(())
}

/// Lists all key pairs mapping `P_1 -> X` (lower) or `X -> C_1`
/// (upper) by a two-table MITM in `O(N)` time and memory. An empty
/// list is a valid answer.
pub fn middle_check(
    instance: &Instance,
    x: u32,
    half: Half,
    ledger: &mut QueryLedger,
) -> Result<Vec<(usize, usize)>, AttackError> {
    require_depth(instance, 4)?;
    let mut table = ValueIndex::new(instance.block_space());
    let mut hits = Vec::new();
    let mut out = Vec::new();
    middle_check_into(instance, x, half, ledger, &mut table, &mut hits, &mut out)?;
    Ok(out)
}

/// Dissection attack on 4-encryption: exhaust the middle value `X` of
/// `P_1`, solve both halves by MITM, join candidates on the middle
/// value induced for `P_2`, verify against the remaining pairs.
/// `O(M*N)` time but only `Theta(N)` memory.
pub fn dissect_4(instance: &Instance) -> Result<AttackResult, AttackError> {
    require_depth(instance, 4)?;
    if instance.pairs().len() < 2 {
        return Err(AttackError::TooFewPairs {
            expected: 2,
            got: instance.pairs().len(),
        });
    }
    let m = instance.block_space();
    let p2 = instance.pairs()[1].0;
    let c2 = instance.pairs()[1].1;
    let mut ledger = QueryLedger::new();
    let mut survivor: Option<Vec<usize>> = None;

    // scratch reused across all M middle-value guesses
    let mut half_table: ValueIndex<u32> = ValueIndex::new(m);
    let mut mid_index: ValueIndex<(u32, u32)> = ValueIndex::new(m);
    let mut hits = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut joined = Vec::new();

    for x in 0..m as u32 {
        middle_check_into(
            instance,
            x,
            Half::Lower,
            &mut ledger,
            &mut half_table,
            &mut hits,
            &mut lower,
        )?;
        if lower.is_empty() {
            continue;
        }
        // index lower candidates by the middle value they induce for P_2
        for &(k1, k2) in &lower {
            let y1 = query(instance, Query::forward(k1, p2), &mut ledger)?;
            let y2 = query(instance, Query::forward(k2, y1), &mut ledger)?;
            mid_index.insert(y2, (k1 as u32, k2 as u32), &mut ledger);
        }

        middle_check_into(
            instance,
            x,
            Half::Upper,
            &mut ledger,
            &mut half_table,
            &mut hits,
            &mut upper,
        )?;
        for &(k3, k4) in &upper {
            // middle value the upper pair needs for P_2
            let z1 = query(instance, Query::inverse(k4, c2), &mut ledger)?;
            let z2 = query(instance, Query::inverse(k3, z1), &mut ledger)?;
            mid_index.probe(z2, &mut ledger, &mut joined);
            for &(k1, k2) in &joined {
                let tuple = [k1 as usize, k2 as usize, k3, k4];
                // pairs 1 and 2 already hold by construction; check the rest
                let mut ok = true;
                for &(p, c) in &instance.pairs()[2..] {
                    let mut v = p;
                    for &k in &tuple {
                        v = query(instance, Query::forward(k, v), &mut ledger)?;
                    }
                    if v != c {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    match &survivor {
                        Some(prev) if prev[..] != tuple[..] => {
                            mid_index.clear(&mut ledger);
                            return Err(AttackError::AmbiguousKey);
                        }
                        _ => survivor = Some(tuple.to_vec()),
                    }
                }
            }
        }
        mid_index.clear(&mut ledger);
    }
    settle_survivor(survivor, ledger)
}

/// Runs a named attack, then re-checks the recovered tuple against
/// every pair; the final check is query-counted like everything else.
pub fn run_attack(instance: &Instance, algo: Algorithm) -> Result<AttackResult, AttackError> {
    let mut result = match algo {
        Algorithm::Exhaustive => exhaustive_search(instance),
        Algorithm::Mitm2 => mitm_2(instance),
        Algorithm::Mitm4 => mitm_4(instance),
        Algorithm::Dissect4 => dissect_4(instance),
    }?;
    let mut check_ledger = result.ledger.clone();
    result.verified = verify_all_pairs(instance, &result.recovered_keys, &mut check_ledger)?;
    result.ledger = check_ledger;
    Ok(result)
}

/// Attack selector used by the CLI and the scaling harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Exhaustive,
    Mitm2,
    Mitm4,
    Dissect4,
}

impl Algorithm {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "exhaustive" => Some(Algorithm::Exhaustive),
            "mitm2" => Some(Algorithm::Mitm2),
            "mitm4" => Some(Algorithm::Mitm4),
            "dissect4" => Some(Algorithm::Dissect4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::Mitm2 => "mitm2",
            Algorithm::Mitm4 => "mitm4",
            Algorithm::Dissect4 => "dissect4",
        }
    }

    pub fn depth(self) -> usize {
        match self {
            Algorithm::Exhaustive => 2,
            Algorithm::Mitm2 => 2,
            Algorithm::Mitm4 => 4,
            Algorithm::Dissect4 => 4,
        }
    }
}
