//! Polar transform and code definitions.
//!
//! The transform is the plain Kronecker power `G_n = G_2^{⊗m}` with
//! `G_2 = [[1, 0], [1, 1]]`, applied to row vectors (`x = u·G_n`). No
//! bit-reversal permutation is applied anywhere in this crate.
//!
//! Indices in the public code definition (frozen sets, the last frozen index
//! `s`) are 1-based. Bit vectors are plain `u8` slices holding 0 or 1 and are
//! indexed from 0, so bit `u_i` lives at `u[i - 1]`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Maximum block length accepted by [`partition_subset`].
pub const PARTITION_MAX_N: usize = 24;
/// Maximum dimension accepted by [`enumerate_codebook`].
pub const ENUMERATE_MAX_K: usize = 20;

fn check_bits(bits: &[u8], what: &str) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => invalid(format!("{what}[{i}] = {} is not a bit", bits[i])),
        None => Ok(()),
    }
}

/// Computes `x = u·G_n` over GF(2).
pub fn polar_transform(u: &[u8]) -> Result<Vec<u8>> {
    if !u.len().is_power_of_two() {
        return invalid(format!("transform length {} is not a power of two", u.len()));
    }
    check_bits(u, "u")?;
    let mut x = u.to_vec();
    polar_transform_in_place(&mut x);
    Ok(x)
}

/// In-place butterfly form of [`polar_transform`]. The length must be a
/// power of two.
pub fn polar_transform_in_place(x: &mut [u8]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in x.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// An `(n, k)` polar code: block length, frozen set and frozen values.
///
/// Derived quantities (`s`, `γ`, `L = 2^γ`) are computed once on
/// construction. A code is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeFile", into = "CodeFile")]
pub struct PolarCode {
    n: usize,
    m: u32,
    k: usize,
    /// 1-based, sorted.
    frozen: Vec<usize>,
    /// 0-based membership mask.
    frozen_mask: Vec<bool>,
    /// Value of every input position that is frozen (0 elsewhere), 0-based.
    frozen_fill: Vec<u8>,
    last_frozen: usize,
    gamma: usize,
}

impl PolarCode {
    /// Builds a code with all frozen bits set to zero.
    pub fn new(n: usize, frozen: impl IntoIterator<Item = usize>) -> Result<Self> {
        let frozen: Vec<usize> = frozen.into_iter().collect();
        let zeros = vec![0; frozen.len()];
        Self::with_frozen_values(n, frozen, zeros)
    }

    /// Builds a code with explicit frozen values; `values[j]` belongs to the
    /// `j`-th entry of `frozen` as given.
    pub fn with_frozen_values(n: usize, frozen: Vec<usize>, values: Vec<u8>) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return invalid(format!("block length {n} is not a power of two"));
        }
        if values.len() != frozen.len() {
            return invalid(format!("{} frozen values given for {} frozen indices", values.len(), frozen.len()));
        }
        check_bits(&values, "frozen_values")?;
        let mut frozen_mask = vec![false; n];
        let mut frozen_fill = vec![0u8; n];
        for (&i, &v) in frozen.iter().zip(values.iter()) {
            if i == 0 || i > n {
                return invalid(format!("frozen index {i} outside [1, {n}]"));
            }
            if frozen_mask[i - 1] {
                return invalid(format!("frozen index {i} repeated"));
            }
            frozen_mask[i - 1] = true;
            frozen_fill[i - 1] = v;
        }
        let sorted: Vec<usize> = frozen.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let k = n - sorted.len();
        let last_frozen = sorted.last().copied().unwrap_or(0);
        let gamma = frozen_mask[..last_frozen].iter().filter(|f| !**f).count();
        Ok(Self { n, m: n.trailing_zeros(), k, frozen: sorted, frozen_mask, frozen_fill, last_frozen, gamma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `log2(n)`.
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Sorted 1-based frozen indices.
    pub fn frozen(&self) -> &[usize] {
        &self.frozen
    }

    /// Frozen values in the order of [`PolarCode::frozen`].
    pub fn frozen_values(&self) -> Vec<u8> {
        self.frozen.iter().map(|&i| self.frozen_fill[i - 1]).collect()
    }

    /// Sorted 1-based information indices.
    pub fn info_indices(&self) -> Vec<usize> {
        (1..=self.n).filter(|&i| !self.frozen_mask[i - 1]).collect()
    }

    /// Frozen membership, 0-based.
    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen_mask
    }

    /// Whether the 0-based input position is frozen.
    #[inline]
    pub fn is_frozen_at(&self, pos: usize) -> bool {
        self.frozen_mask[pos]
    }

    /// Frozen value at a 0-based position (0 for information positions).
    #[inline]
    pub fn frozen_value_at(&self, pos: usize) -> u8 {
        self.frozen_fill[pos]
    }

    /// `s = max(frozen)`, or 0 for the rate-1 code.
    pub fn last_frozen(&self) -> usize {
        self.last_frozen
    }

    /// Mixing factor `γ`: the number of information bits preceding `s`.
    pub fn mixing_factor(&self) -> usize {
        self.gamma
    }

    /// `L = 2^γ`, or `None` when it does not fit in a `usize`.
    pub fn list_size_ml(&self) -> Option<usize> {
        u32::try_from(self.gamma).ok().and_then(|g| 1usize.checked_shl(g))
    }

    /// Places the information bits into the non-frozen positions and the
    /// frozen values everywhere else.
    pub fn input_vector(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return invalid(format!("information word has length {}, expected {}", info.len(), self.k));
        }
        check_bits(info, "info")?;
        let mut u = self.frozen_fill.clone();
        let mut bits = info.iter();
        for (slot, &frozen) in u.iter_mut().zip(&self.frozen_mask) {
            if !frozen {
                *slot = *bits.next().expect("k information positions");
            }
        }
        Ok(u)
    }

    /// Extracts the information bits from an input vector.
    pub fn info_bits(&self, u: &[u8]) -> Vec<u8> {
        u.iter().zip(&self.frozen_mask).filter(|(_, f)| !**f).map(|(b, _)| *b).collect()
    }

    /// Whether `u` matches every frozen value.
    pub fn respects_frozen(&self, u: &[u8]) -> bool {
        u.len() >= self.last_frozen
            && u.iter().enumerate().all(|(i, &b)| !self.frozen_mask[i] || self.frozen_fill[i] == b)
    }

    pub fn to_file(&self) -> CodeFile {
        CodeFile {
            n: self.n,
            k: self.k,
            frozen: self.frozen.clone(),
            frozen_values: if self.frozen_fill.iter().any(|&b| b != 0) { Some(self.frozen_values()) } else { None },
            s: Some(self.last_frozen),
            gamma: Some(self.gamma),
            list_size: self.list_size_ml(),
            metadata: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CodeFile = serde_json::from_str(text)?;
        file.into_code()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl TryFrom<CodeFile> for PolarCode {
    type Error = Error;

    fn try_from(file: CodeFile) -> Result<Self> {
        file.into_code()
    }
}

impl From<PolarCode> for CodeFile {
    fn from(code: PolarCode) -> Self {
        code.to_file()
    }
}

/// Mixing factor, see [`PolarCode::mixing_factor`].
pub fn mixing_factor(code: &PolarCode) -> usize {
    code.mixing_factor()
}

/// `x = encode(info)`: scatter into `u`, then transform.
pub fn encode(info: &[u8], code: &PolarCode) -> Result<Vec<u8>> {
    let mut u = code.input_vector(info)?;
    polar_transform_in_place(&mut u);
    Ok(u)
}

/// On-disk JSON form of a code.
///
/// `s`, `gamma` and `list_size` are written for readers' convenience; when
/// present on input they must agree with the values derived from the frozen
/// set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub n: usize,
    pub k: usize,
    pub frozen: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_values: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl CodeFile {
    pub fn into_code(self) -> Result<PolarCode> {
        let values = self.frozen_values.unwrap_or_else(|| vec![0; self.frozen.len()]);
        let code = PolarCode::with_frozen_values(self.n, self.frozen, values)?;
        if code.k() != self.k {
            return invalid(format!("k = {} but the frozen set leaves {} information bits", self.k, code.k()));
        }
        let derived = [
            ("s", self.s, Some(code.last_frozen())),
            ("gamma", self.gamma, Some(code.mixing_factor())),
            ("list_size", self.list_size, code.list_size_ml()),
        ];
        for (name, given, actual) in derived {
            if given.is_some() && given != actual {
                return invalid(format!("{name} = {given:?} disagrees with derived value {actual:?}"));
            }
        }
        Ok(code)
    }
}

/// All `2^γ` prefixes `u^s` compatible with the frozen values, in increasing
/// binary order of the information bits they contain.
pub fn valid_prefixes(code: &PolarCode) -> Result<Vec<Vec<u8>>> {
    let gamma = code.mixing_factor();
    if gamma > ENUMERATE_MAX_K {
        return Err(Error::Capacity(format!("2^{gamma} prefixes is too many to enumerate")));
    }
    let s = code.last_frozen();
    let positions: Vec<usize> = (0..s).filter(|&i| !code.is_frozen_at(i)).collect();
    Ok((0..1usize << gamma)
        .map(|j| {
            let mut prefix: Vec<u8> = (0..s).map(|i| code.frozen_value_at(i)).collect();
            for (t, &pos) in positions.iter().enumerate() {
                prefix[pos] = ((j >> (gamma - 1 - t)) & 1) as u8;
            }
            prefix
        })
        .collect())
}

/// The partition block `C_l = { u·G_n : u^s = prefix }` for one valid prefix.
pub fn partition_subset(code: &PolarCode, prefix: &[u8]) -> Result<Vec<Vec<u8>>> {
    let (n, s) = (code.n(), code.last_frozen());
    if n > PARTITION_MAX_N {
        return Err(Error::Capacity(format!("partition enumeration limited to n <= {PARTITION_MAX_N}")));
    }
    if prefix.len() != s {
        return invalid(format!("prefix has length {}, expected s = {s}", prefix.len()));
    }
    check_bits(prefix, "prefix")?;
    if !code.respects_frozen(prefix) {
        return invalid("prefix disagrees with the frozen values");
    }
    let free = n - s;
    Ok((0..1usize << free)
        .map(|j| {
            let mut u = prefix.to_vec();
            u.extend((0..free).map(|t| ((j >> (free - 1 - t)) & 1) as u8));
            polar_transform_in_place(&mut u);
            u
        })
        .collect())
}

/// Iterator over every codeword, in increasing binary order of the
/// information word.
pub fn enumerate_codebook(code: &PolarCode) -> Result<Codebook<'_>> {
    if code.k() > ENUMERATE_MAX_K {
        return Err(Error::Capacity(format!("codebook enumeration limited to k <= {ENUMERATE_MAX_K}")));
    }
    Ok(Codebook { code, next: 0, end: 1u64 << code.k() })
}

pub struct Codebook<'a> {
    code: &'a PolarCode,
    next: u64,
    end: u64,
}

impl Iterator for Codebook<'_> {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        if self.next == self.end {
            return None;
        }
        let k = self.code.k();
        let info: Vec<u8> = (0..k).map(|t| ((self.next >> (k - 1 - t)) & 1) as u8).collect();
        self.next += 1;
        Some(encode(&info, self.code).expect("info length is k"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Codebook<'_> {}
