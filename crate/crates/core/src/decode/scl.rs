//! Successive cancellation list decoding with exact path metrics.
//!
//! Every path owns one LLR buffer and one partial-sum buffer per tree depth.
//! Buffers are reference counted and copied only when a path that shares a
//! buffer with another path writes to it, so forking costs `O(log n)` index
//! copies instead of `O(n)` data copies.

use super::kernels::{bit_node, check_node, decision_penalty};
use crate::channels::ChannelObservation;
use crate::error::{invalid, Result};
use crate::polar::PolarCode;

/// One decoding path: the decisions `u^i` taken so far and its metric
/// `pm = −ln P(u^i | y^n)` for uniformly distributed inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderPath {
    pub decisions: Vec<u8>,
    pub pm: f64,
}

impl DecoderPath {
    /// A path stays alive while its posterior probability is non-zero.
    pub fn alive(&self) -> bool {
        self.pm.is_finite()
    }
}

/// Result of a list decode.
#[derive(Debug, Clone)]
pub struct SclOutput {
    /// Surviving paths after the last bit, in list order.
    pub paths: Vec<DecoderPath>,
    /// Index into `paths` of the smallest metric (first one on ties).
    pub best: usize,
    /// The full list right after the last frozen bit `u_s`.
    pub at_last_frozen: Vec<DecoderPath>,
    /// Whether any path was discarded before `u_s` was processed.
    pub pruned_before_last_frozen: bool,
}

impl SclOutput {
    pub fn best_path(&self) -> &DecoderPath {
        &self.paths[self.best]
    }
}

#[derive(Debug, Clone)]
struct Pool<T> {
    len: usize,
    data: Vec<T>,
    refs: Vec<u32>,
    free: Vec<u32>,
}

impl<T: Copy + Default> Pool<T> {
    fn new(len: usize) -> Self {
        Self { len, data: Vec::new(), refs: Vec::new(), free: Vec::new() }
    }

    fn reset(&mut self) {
        self.refs.iter_mut().for_each(|r| *r = 0);
        self.free.clear();
        self.free.extend((0..self.refs.len() as u32).rev());
    }

    fn alloc(&mut self) -> u32 {
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.data.resize(self.data.len() + self.len, T::default());
                self.refs.push(0);
                (self.refs.len() - 1) as u32
            }
        };
        self.refs[id as usize] = 1;
        id
    }

    #[inline]
    fn retain(&mut self, id: u32) {
        self.refs[id as usize] += 1;
    }

    #[inline]
    fn release(&mut self, id: u32) {
        let r = &mut self.refs[id as usize];
        *r -= 1;
        if *r == 0 {
            self.free.push(id);
        }
    }

    /// Returns a buffer owned by the caller alone, copying the contents when
    /// `keep` is set and the buffer was shared.
    fn unique(&mut self, id: u32, keep: bool) -> u32 {
        if self.refs[id as usize] == 1 {
            return id;
        }
        let fresh = self.alloc();
        if keep {
            let (src, dst) = (id as usize * self.len, fresh as usize * self.len);
            self.data.copy_within(src..src + self.len, dst);
        }
        self.release(id);
        fresh
    }

    #[inline]
    fn get(&self, id: u32) -> &[T] {
        let at = id as usize * self.len;
        &self.data[at..at + self.len]
    }

    #[inline]
    fn get_mut(&mut self, id: u32) -> &mut [T] {
        let at = id as usize * self.len;
        &mut self.data[at..at + self.len]
    }
}

/// Reusable SCL decoder for one code and list size.
#[derive(Debug, Clone)]
pub struct SclDecoder {
    n: usize,
    m: usize,
    list_size: usize,
    frozen: Vec<Option<u8>>,
    last_frozen: usize,
    /// Depth 0 holds the channel LLRs, depth d the LLRs of a node of size n >> d.
    alpha: Vec<Pool<f64>>,
    /// Depth d holds the partial sums of a node of size n >> d.
    beta: Vec<Pool<u8>>,
    /// Per path, `m` alpha ids followed by `m` beta ids.
    refs: Vec<u32>,
    next_refs: Vec<u32>,
    pms: Vec<f64>,
    next_pms: Vec<f64>,
    leaf: Vec<f64>,
    candidates: Vec<(f64, u32)>,
    children: Vec<u8>,
    /// Per decoded position, `hist_start[i]..hist_start[i+1]` indexes the
    /// (parent, bit) of every path alive after that position.
    hist_parent: Vec<u32>,
    hist_bit: Vec<u8>,
    hist_start: Vec<usize>,
}

impl SclDecoder {
    pub fn new(code: &PolarCode, list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return invalid("list size must be at least 1");
        }
        let (n, m) = (code.n(), code.m() as usize);
        let frozen = (0..n).map(|i| code.is_frozen_at(i).then(|| code.frozen_value_at(i))).collect();
        Ok(Self {
            n,
            m,
            list_size,
            frozen,
            last_frozen: code.last_frozen(),
            alpha: (0..m).map(|d| Pool::new(n >> d)).collect(),
            beta: (0..m).map(|d| Pool::new(n >> d)).collect(),
            refs: Vec::new(),
            next_refs: Vec::new(),
            pms: Vec::new(),
            next_pms: Vec::new(),
            leaf: Vec::new(),
            candidates: Vec::new(),
            children: Vec::new(),
            hist_parent: Vec::new(),
            hist_bit: Vec::new(),
            hist_start: Vec::new(),
        })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    /// Runs the decoder and returns the final list together with the list
    /// snapshot at the last frozen bit.
    pub fn decode(&mut self, obs: &ChannelObservation) -> Result<SclOutput> {
        let run = self.run(obs)?;
        let paths = (0..run.final_pms.len())
            .map(|j| DecoderPath { decisions: self.decisions(self.n, j), pm: run.final_pms[j] })
            .collect();
        let at_last_frozen = run
            .snapshot_pms
            .iter()
            .enumerate()
            .map(|(j, &pm)| DecoderPath { decisions: self.decisions(self.last_frozen, j), pm })
            .collect();
        Ok(SclOutput {
            paths,
            best: run.best,
            at_last_frozen,
            pruned_before_last_frozen: run.pruned_before_last_frozen,
        })
    }

    /// Decision prefix of length `len` for the path that sat at list index
    /// `index` right after position `len` of the most recent decode.
    pub(crate) fn decisions(&self, len: usize, mut index: usize) -> Vec<u8> {
        let mut u = vec![0u8; len];
        for pos in (0..len).rev() {
            let at = self.hist_start[pos] + index;
            u[pos] = self.hist_bit[at];
            index = self.hist_parent[at] as usize;
        }
        u
    }

    pub(crate) fn run(&mut self, obs: &ChannelObservation) -> Result<SclRun> {
        if obs.n() != self.n {
            return invalid(format!("observation has length {}, code has length {}", obs.n(), self.n));
        }
        let (n, m) = (self.n, self.m);
        for pool in &mut self.alpha {
            pool.reset();
        }
        for pool in &mut self.beta {
            pool.reset();
        }
        self.refs.clear();
        self.pms.clear();
        self.pms.push(0.0);
        self.hist_parent.clear();
        self.hist_bit.clear();
        self.hist_start.clear();
        if m > 0 {
            let channel = self.alpha[0].alloc();
            self.alpha[0].get_mut(channel).copy_from_slice(obs.llrs());
            self.refs.push(channel);
            for d in 1..m {
                let id = self.alpha[d].alloc();
                self.refs.push(id);
            }
            for d in 0..m {
                let id = self.beta[d].alloc();
                self.refs.push(id);
            }
        }

        let mut snapshot_pms = if self.last_frozen == 0 { Some(vec![0.0]) } else { None };
        let mut pruned_before_last_frozen = false;

        for pos in 0..n {
            self.leaf.clear();
            let paths = self.pms.len();
            if m == 0 {
                self.leaf.push(obs.llrs()[0]);
            } else {
                let start = if pos == 0 { 1 } else { m - pos.trailing_zeros() as usize };
                for p in 0..paths {
                    let llr = self.update_path_llrs(p, pos, start);
                    self.leaf.push(llr);
                }
            }

            match self.frozen[pos] {
                Some(bit) => {
                    self.hist_start.push(self.hist_parent.len());
                    for p in 0..paths {
                        self.pms[p] += decision_penalty(self.leaf[p], bit);
                        self.hist_parent.push(p as u32);
                        self.hist_bit.push(bit);
                    }
                }
                None => {
                    if self.branch(pos) && pos < self.last_frozen {
                        pruned_before_last_frozen = true;
                    }
                }
            }

            if m > 0 {
                self.store_decisions(pos);
            }
            if pos + 1 == self.last_frozen {
                snapshot_pms = Some(self.pms.clone());
            }
        }

        let best = self.pms.iter().enumerate().fold(0, |best, (j, &pm)| if pm < self.pms[best] { j } else { best });
        Ok(SclRun {
            final_pms: self.pms.clone(),
            best,
            snapshot_pms: snapshot_pms.expect("last frozen position is visited"),
            pruned_before_last_frozen,
        })
    }

    /// Recomputes the LLRs of path `p` from depth `start` down to the leaf at
    /// position `pos` and returns the leaf LLR.
    fn update_path_llrs(&mut self, p: usize, pos: usize, start: usize) -> f64 {
        let m = self.m;
        let base = p * 2 * m;
        for d in start..m {
            let size = self.n >> d;
            let right = (pos >> (m - d)) & 1 == 1;
            let id = self.alpha[d].unique(self.refs[base + d], false);
            self.refs[base + d] = id;
            let (upper, lower) = self.alpha.split_at_mut(d);
            let parent = upper[d - 1].get(self.refs[base + d - 1]);
            let out = lower[0].get_mut(id);
            let (a, b) = parent.split_at(size);
            if right {
                let left = &self.beta[d - 1].get(self.refs[base + m + d - 1])[..size];
                for j in 0..size {
                    out[j] = bit_node(a[j], b[j], left[j]);
                }
            } else {
                for j in 0..size {
                    out[j] = check_node(a[j], b[j]);
                }
            }
        }
        let parent = self.alpha[m - 1].get(self.refs[base + m - 1]);
        if pos & 1 == 1 {
            let left = self.beta[m - 1].get(self.refs[base + 2 * m - 1])[0];
            bit_node(parent[0], parent[1], left)
        } else {
            check_node(parent[0], parent[1])
        }
    }

    /// Forks every path on an information bit and keeps the `L` best by
    /// metric. Returns whether any candidate was dropped.
    fn branch(&mut self, _pos: usize) -> bool {
        let paths = self.pms.len();
        self.candidates.clear();
        for p in 0..paths {
            let pm = self.pms[p];
            let llr = self.leaf[p];
            self.candidates.push((pm + decision_penalty(llr, 0), (2 * p) as u32));
            self.candidates.push((pm + decision_penalty(llr, 1), (2 * p + 1) as u32));
        }
        let pruned = self.candidates.len() > self.list_size;
        if pruned {
            let cmp = |x: &(f64, u32), y: &(f64, u32)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
            self.candidates.select_nth_unstable_by(self.list_size - 1, cmp);
            self.candidates.truncate(self.list_size);
            self.candidates.sort_unstable_by_key(|c| c.1);
        }

        let width = 2 * self.m;
        self.next_refs.clear();
        self.next_pms.clear();
        self.children.clear();
        self.children.resize(paths, 0);
        self.hist_start.push(self.hist_parent.len());
        for &(pm, tag) in &self.candidates {
            let parent = (tag / 2) as usize;
            self.children[parent] += 1;
            self.next_pms.push(pm);
            self.hist_parent.push(parent as u32);
            self.hist_bit.push((tag & 1) as u8);
            self.next_refs.extend_from_slice(&self.refs[parent * width..(parent + 1) * width]);
        }
        // A parent's buffers were held once; adjust to its number of children.
        for p in 0..paths {
            let slots = &self.refs[p * width..(p + 1) * width];
            match self.children[p] {
                0 => {
                    for (slot, &id) in slots.iter().enumerate() {
                        if slot < self.m {
                            self.alpha[slot].release(id);
                        } else {
                            self.beta[slot - self.m].release(id);
                        }
                    }
                }
                2 => {
                    for (slot, &id) in slots.iter().enumerate() {
                        if slot < self.m {
                            self.alpha[slot].retain(id);
                        } else {
                            self.beta[slot - self.m].retain(id);
                        }
                    }
                }
                _ => {}
            }
        }
        std::mem::swap(&mut self.refs, &mut self.next_refs);
        std::mem::swap(&mut self.pms, &mut self.next_pms);
        pruned
    }

    /// Writes the decision at `pos` of every path into its partial sums and
    /// folds finished subtrees upwards.
    fn store_decisions(&mut self, pos: usize) {
        let m = self.m;
        let width = 2 * m;
        let start = self.hist_start[pos];
        for p in 0..self.pms.len() {
            let bit = self.hist_bit[start + p];
            let slot = p * width + m + (m - 1);
            let id = self.beta[m - 1].unique(self.refs[slot], true);
            self.refs[slot] = id;
            self.beta[m - 1].get_mut(id)[pos & 1] = bit;

            let mut d = m - 1;
            let mut node = pos >> 1;
            loop {
                let span = m - d;
                let mask = (1usize << span) - 1;
                if pos & mask != mask || d == 0 {
                    break;
                }
                let size = self.n >> d;
                let id = self.refs[p * width + m + d];
                {
                    let buf = self.beta[d].get_mut(id);
                    let (lo, hi) = buf.split_at_mut(size / 2);
                    for (a, b) in lo.iter_mut().zip(hi.iter()) {
                        *a ^= *b;
                    }
                }
                let pslot = p * width + m + d - 1;
                let pid = self.beta[d - 1].unique(self.refs[pslot], true);
                self.refs[pslot] = pid;
                let offset = (node & 1) * size;
                let (upper, lower) = self.beta.split_at_mut(d);
                upper[d - 1].get_mut(pid)[offset..offset + size].copy_from_slice(lower[0].get(id));
                d -= 1;
                node >>= 1;
            }
        }
    }
}

pub(crate) struct SclRun {
    pub final_pms: Vec<f64>,
    pub best: usize,
    pub snapshot_pms: Vec<f64>,
    pub pruned_before_last_frozen: bool,
}

/// One-shot SCL decode; returns the final list and the index of its best
/// path.
pub fn scl_decode(obs: &ChannelObservation, code: &PolarCode, list_size: usize) -> Result<(Vec<DecoderPath>, usize)> {
    let out = SclDecoder::new(code, list_size)?.decode(obs)?;
    Ok((out.paths, out.best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::biawgn_observe;
    use crate::decode::sc::{path_metric_from_scratch, sc_decode};
    use crate::polar::encode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_code(rng: &mut impl Rng, n: usize) -> PolarCode {
        let frozen: Vec<usize> = (1..=n).filter(|_| rng.random_bool(0.4)).collect();
        PolarCode::new(n, frozen).unwrap()
    }

    #[test]
    fn list_of_one_is_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = 1 << rng.random_range(0..7);
            let code = random_code(&mut rng, n);
            let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
            let x = encode(&info, &code).unwrap();
            let obs = biawgn_observe(&x, 1.0, &mut rng).unwrap();
            let (paths, best) = scl_decode(&obs, &code, 1).unwrap();
            assert_eq!(paths.len(), 1);
            assert_eq!(paths[best].decisions, sc_decode(&obs, &code).unwrap());
        }
    }

    #[test]
    fn metrics_match_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let n = 1 << rng.random_range(1..7);
            let code = random_code(&mut rng, n);
            let x = encode(&vec![0; code.k()], &code).unwrap();
            let obs = biawgn_observe(&x, 0.9, &mut rng).unwrap();
            let list = 1 << rng.random_range(0..5);
            let out = SclDecoder::new(&code, list).unwrap().decode(&obs).unwrap();
            assert!(out.paths.len() <= list);
            for path in out.paths.iter().chain(&out.at_last_frozen) {
                let again = path_metric_from_scratch(obs.llrs(), &path.decisions).unwrap();
                assert!((again - path.pm).abs() < 1e-10, "{again} vs {}", path.pm);
                assert!(code.respects_frozen(&path.decisions) || path.decisions.len() < code.last_frozen());
            }
        }
    }

    #[test]
    fn snapshot_holds_every_prefix_with_ml_list() {
        let code = PolarCode::new(8, [1, 2, 4, 6]).unwrap();
        assert_eq!(code.mixing_factor(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = encode(&[0, 1, 1, 0], &code).unwrap();
        let obs = biawgn_observe(&x, 0.8, &mut rng).unwrap();
        let out = SclDecoder::new(&code, 4).unwrap().decode(&obs).unwrap();
        assert!(!out.pruned_before_last_frozen);
        let mut prefixes: Vec<Vec<u8>> = out.at_last_frozen.iter().map(|p| p.decisions.clone()).collect();
        prefixes.sort();
        let mut expected = crate::polar::valid_prefixes(&code).unwrap();
        expected.sort();
        assert_eq!(prefixes, expected);
        let small = SclDecoder::new(&code, 2).unwrap().decode(&obs).unwrap();
        assert!(small.pruned_before_last_frozen);
    }

    #[test]
    fn rejects_bad_arguments() {
        let code = PolarCode::new(4, [1]).unwrap();
        assert!(SclDecoder::new(&code, 0).is_err());
        let obs = ChannelObservation::from_llrs(&[1.0; 8]).unwrap();
        assert!(scl_decode(&obs, &code, 2).is_err());
    }

    #[test]
    fn single_symbol_code() {
        let code = PolarCode::new(1, []).unwrap();
        let obs = ChannelObservation::from_llrs(&[-0.5]).unwrap();
        let (paths, best) = scl_decode(&obs, &code, 4).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[best].decisions, vec![1]);
    }
}
