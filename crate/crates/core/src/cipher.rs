//! Permutation-diffusion cipher for grayscale mosaics.
//!
//! Encryption flattens the plane row-major, shuffles pixel positions by the
//! argsort of a hyperchaotic sequence, then XORs the shuffled bytes with a
//! keystream assembled from two 8-cell CA m-sequences. Decryption undoes the
//! XOR and applies the inverse shuffle.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::ca::{self, CaRuleVector, CaState, MSequence};
use crate::error::{Error, Result};
use crate::hyperchaos::{self, HyperchaosKey};
use crate::plane::GrayPlane;

/// Length of one m-sequence period for an 8-cell register.
pub const PERIOD: usize = 255;

/// How the x, y, z, w chaotic sequences are merged into one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CombineScheme {
    /// `x1, y1, z1, w1, x2, ...`
    #[default]
    Interleave,
    /// `x1..xn, y1..yn, z1..zn, w1..wn`
    Concatenate,
}

impl CombineScheme {
    pub fn name(self) -> &'static str {
        match self {
            CombineScheme::Interleave => "interleave",
            CombineScheme::Concatenate => "concatenate",
        }
    }
}

impl FromStr for CombineScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleave" => Ok(CombineScheme::Interleave),
            "concatenate" => Ok(CombineScheme::Concatenate),
            other => Err(Error::parse(format!("unknown combine scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CipherKey {
    pub chaos: HyperchaosKey,
    pub fx_rules: CaRuleVector,
    pub fy_rules: CaRuleVector,
    pub fx_seed: CaState,
    pub fy_seed: CaState,
    pub combine: CombineScheme,
    /// Index into one period of `f_y` where seed selection starts.
    pub selection_offset: usize,
}

impl Default for CipherKey {
    fn default() -> Self {
        CipherKey {
            chaos: HyperchaosKey::default(),
            fx_rules: "150,150,90,150,90,150,90,150".parse().expect("valid rules"),
            fy_rules: "150,90,150,90,90,90,150,90".parse().expect("valid rules"),
            fx_seed: CaState::from_byte(0b1010_0101),
            fy_seed: CaState::from_byte(0b0011_1001),
            combine: CombineScheme::Interleave,
            selection_offset: 0,
        }
    }
}

#[derive(Deserialize)]
struct KeyFileCa {
    fx_rules: String,
    fy_rules: String,
    fx_seed: String,
    fy_seed: String,
}

#[derive(Deserialize)]
struct KeyFile {
    version: u32,
    combine_scheme: String,
    selection_offset: usize,
    chaos: HyperchaosKey,
    ca: KeyFileCa,
}

pub const KEY_FILE_VERSION: u32 = 1;

impl CipherKey {
    pub fn validate(&self) -> Result<()> {
        self.chaos.validate()?;
        for (rules, seed) in [(&self.fx_rules, &self.fx_seed), (&self.fy_rules, &self.fy_seed)] {
            if rules.len() != 8 || seed.len() != 8 {
                return Err(Error::dim("CA registers must have 8 cells"));
            }
            if seed.is_zero() {
                return Err(Error::DegenerateSeed);
            }
            if !ca::is_maximal(rules)? {
                return Err(Error::NonMaximal(rules.to_string()));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "version = {KEY_FILE_VERSION}\ncombine_scheme = \"{}\"\nselection_offset = {}\n\n[chaos]\n{}\n[ca]\nfx_rules = \"{}\"\nfy_rules = \"{}\"\nfx_seed = \"{}\"\nfy_seed = \"{}\"\n",
            self.combine.name(),
            self.selection_offset,
            self.chaos.to_text(),
            self.fx_rules,
            self.fy_rules,
            self.fx_seed,
            self.fy_seed,
        )
    }

    /// Parse a key file. Only the syntax is checked here; call
    /// [`CipherKey::validate`] before encrypting.
    pub fn from_text(text: &str) -> Result<Self> {
        let raw: KeyFile = toml::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        if raw.version != KEY_FILE_VERSION {
            return Err(Error::parse(format!("unsupported key file version {}", raw.version)));
        }
        Ok(CipherKey {
            chaos: raw.chaos,
            fx_rules: raw.ca.fx_rules.parse()?,
            fy_rules: raw.ca.fy_rules.parse()?,
            fx_seed: raw.ca.fx_seed.parse()?,
            fy_seed: raw.ca.fy_seed.parse()?,
            combine: raw.combine_scheme.parse()?,
            selection_offset: raw.selection_offset,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Zero-based shuffle order: output position `j` takes input `order[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationKey {
    order: Vec<u32>,
}

impl PermutationKey {
    pub fn from_order(order: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            match seen.get_mut(i as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::dim("order is not a permutation")),
            }
        }
        Ok(PermutationKey { order })
    }

    pub fn identity(len: usize) -> Self {
        PermutationKey {
            order: (0..len as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// One-based indices, as the sequence `I_S` is usually written.
    pub fn one_based(&self) -> Vec<usize> {
        self.order.iter().map(|&i| i as usize + 1).collect()
    }
}

/// Operation tallies gathered by [`encrypt_counted`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Plaintext/ciphertext byte reads and writes.
    pub byte_touches: u64,
    /// Comparisons made while sorting the chaotic sequence.
    pub comparisons: u64,
    /// Hyperchaos integration steps.
    pub chaos_steps: u64,
    /// CA register updates.
    pub ca_steps: u64,
}

/// Merge the four sequences into one of length `len`.
pub fn combine(seqs: &[Vec<f64>; 4], len: usize, scheme: CombineScheme) -> Vec<f64> {
    let mut s = Vec::with_capacity(4 * seqs[0].len());
    match scheme {
        CombineScheme::Interleave => {
            for t in 0..seqs[0].len() {
                s.extend(seqs.iter().map(|q| q[t]));
            }
        }
        CombineScheme::Concatenate => {
            for q in seqs {
                s.extend_from_slice(q);
            }
        }
    }
    s.truncate(len);
    s
}

/// Ascending argsort; equal values keep their original order.
pub fn argsort(values: &[f64]) -> PermutationKey {
    argsort_counted(values, &mut 0)
}

fn argsort_counted(values: &[f64], comparisons: &mut u64) -> PermutationKey {
    let mut keyed: Vec<(f64, u32)> = values.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    keyed.sort_unstable_by(|a, b| {
        *comparisons += 1;
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    });
    PermutationKey {
        order: keyed.into_iter().map(|(_, i)| i).collect(),
    }
}

pub fn permutation_key(chaos: &HyperchaosKey, len: usize, scheme: CombineScheme) -> Result<PermutationKey> {
    permutation_key_counted(chaos, len, scheme, &mut OpCounts::default())
}

fn permutation_key_counted(
    chaos: &HyperchaosKey,
    len: usize,
    scheme: CombineScheme,
    counts: &mut OpCounts,
) -> Result<PermutationKey> {
    if len == 0 {
        return Err(Error::dim("cannot permute an empty sequence"));
    }
    let per = len.div_ceil(4);
    let seqs = hyperchaos::key_sequences(chaos, 4 * per)?;
    counts.chaos_steps += (chaos.burn_in + per) as u64;
    Ok(argsort_counted(&combine(&seqs, len, scheme), &mut counts.comparisons))
}

pub fn permute(plain: &[u8], key: &PermutationKey) -> Result<Vec<u8>> {
    if plain.len() != key.len() {
        return Err(Error::dim(format!(
            "{} bytes against a permutation of length {}",
            plain.len(),
            key.len()
        )));
    }
    Ok(key.order.iter().map(|&i| plain[i as usize]).collect())
}

pub fn inverse_permute(shuffled: &[u8], key: &PermutationKey) -> Result<Vec<u8>> {
    if shuffled.len() != key.len() {
        return Err(Error::dim(format!(
            "{} bytes against a permutation of length {}",
            shuffled.len(),
            key.len()
        )));
    }
    let mut out = vec![0u8; shuffled.len()];
    for (&i, &v) in key.order.iter().zip(shuffled) {
        out[i as usize] = v;
    }
    Ok(out)
}

// One period from an 8-cell hybrid register, without maximality checks.
fn period_from(rules: &CaRuleVector, seed: u8) -> Result<[u8; PERIOD]> {
    if rules.len() != 8 || !rules.is_hybrid() {
        return Err(Error::dim("keystream registers must be 8-cell hybrid 90/150"));
    }
    let mut out = [0u8; PERIOD];
    for (slot, b) in out.iter_mut().zip(MSequence::new_unchecked(rules, seed)) {
        *slot = b;
    }
    Ok(out)
}

fn keystream_counted(key: &CipherKey, len: usize, counts: &mut OpCounts) -> Result<Vec<u8>> {
    let k = len.div_ceil(PERIOD);
    let fx = period_from(&key.fx_rules, key.fx_seed.to_u64() as u8)?;
    let fy = period_from(&key.fy_rules, key.fy_seed.to_u64() as u8)?;
    counts.ca_steps += 2 * PERIOD as u64;
    let mut z = Vec::with_capacity(k * PERIOD);
    for i in 0..k {
        let seed = fy[(key.selection_offset + i) % PERIOD];
        let fyi = period_from(&key.fy_rules, seed)?;
        counts.ca_steps += PERIOD as u64;
        z.extend(fx.iter().zip(&fyi).map(|(a, b)| a ^ b));
    }
    z.truncate(len);
    Ok(z)
}

/// Diffusion keystream `Z' = Z_1 || ... || Z_k` truncated to `len`, with
/// `Z_i = f_x XOR f_y(i)` and `k = ceil(len / 255)`.
pub fn keystream(key: &CipherKey, len: usize) -> Result<Vec<u8>> {
    key.validate()?;
    keystream_counted(key, len, &mut OpCounts::default())
}

/// Permutation and keystream for one key and length, reusable across
/// images of the same size.
#[derive(Clone, Debug)]
pub struct KeySchedule {
    pub permutation: PermutationKey,
    pub keystream: Vec<u8>,
}

impl KeySchedule {
    pub fn new(key: &CipherKey, len: usize) -> Result<Self> {
        key.validate()?;
        Self::new_unvalidated(key, len)
    }

    /// Schedule for a key that may violate the key invariants (e.g. a
    /// non-maximal rule set). Only useful for simulating wrong-key
    /// decryption; never encrypt with it.
    pub fn new_unvalidated(key: &CipherKey, len: usize) -> Result<Self> {
        let mut counts = OpCounts::default();
        Self::build(key, len, &mut counts)
    }

    fn build(key: &CipherKey, len: usize, counts: &mut OpCounts) -> Result<Self> {
        Ok(KeySchedule {
            permutation: permutation_key_counted(&key.chaos, len, key.combine, counts)?,
            keystream: keystream_counted(key, len, counts)?,
        })
    }

    pub fn len(&self) -> usize {
        self.keystream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keystream.is_empty()
    }

    pub fn encrypt(&self, plain: &GrayPlane) -> Result<CipherText> {
        let mut bytes = permute(plain.as_bytes(), &self.permutation)?;
        xor_in_place(&mut bytes, &self.keystream);
        Ok(CipherText {
            width: plain.width(),
            height: plain.height(),
            bytes,
        })
    }

    pub fn decrypt(&self, cipher: &CipherText) -> Result<GrayPlane> {
        if cipher.bytes.len() != self.len() || cipher.width * cipher.height != self.len() {
            return Err(Error::dim("ciphertext size does not match the key schedule"));
        }
        let mut shuffled = cipher.bytes.clone();
        xor_in_place(&mut shuffled, &self.keystream);
        GrayPlane::from_vec(cipher.width, cipher.height, inverse_permute(&shuffled, &self.permutation)?)
    }
}

fn xor_in_place(bytes: &mut [u8], keystream: &[u8]) {
    for (b, z) in bytes.iter_mut().zip(keystream) {
        *b ^= z;
    }
}

/// Encrypted mosaic; `width * height` bytes, row-major shuffled order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherText {
    pub width: usize,
    pub height: usize,
    pub bytes: Vec<u8>,
}

pub const CIPHER_MAGIC: &[u8; 8] = b"MONOSEAL";

impl CipherText {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// The ciphertext bytes viewed as a plane (for statistics).
    pub fn as_plane(&self) -> GrayPlane {
        GrayPlane::from_vec(self.width, self.height, self.bytes.clone()).expect("consistent size")
    }

    /// Magic, width and height as big-endian `u32`, then the raw bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.bytes.len());
        out.extend_from_slice(CIPHER_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_be_bytes());
        out.extend_from_slice(&(self.height as u32).to_be_bytes());
        out.extend_from_slice(&self.bytes);
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < 16 || &data[..8] != CIPHER_MAGIC {
            return Err(Error::parse("not a ciphertext file"));
        }
        let width = u32::from_be_bytes(data[8..12].try_into().expect("4 bytes")) as usize;
        let height = u32::from_be_bytes(data[12..16].try_into().expect("4 bytes")) as usize;
        let bytes = data[16..].to_vec();
        if bytes.len() != width * height {
            return Err(Error::dim(format!(
                "ciphertext holds {} bytes, header says {width}x{height}",
                bytes.len()
            )));
        }
        Ok(CipherText { width, height, bytes })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

pub fn encrypt(plain: &GrayPlane, key: &CipherKey) -> Result<CipherText> {
    KeySchedule::new(key, plain.len())?.encrypt(plain)
}

pub fn decrypt(cipher: &CipherText, key: &CipherKey) -> Result<GrayPlane> {
    KeySchedule::new(key, cipher.len())?.decrypt(cipher)
}

/// [`encrypt`] with operation tallies, for complexity checks.
pub fn encrypt_counted(plain: &GrayPlane, key: &CipherKey) -> Result<(CipherText, OpCounts)> {
    key.validate()?;
    let mut counts = OpCounts::default();
    let schedule = KeySchedule::build(key, plain.len(), &mut counts)?;
    let cipher = schedule.encrypt(plain)?;
    // permute reads L and writes L; the XOR pass reads and writes L
    counts.byte_touches += 4 * plain.len() as u64;
    Ok((cipher, counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_argsort(values: &[f64]) -> Vec<u32> {
        // selection sort over indices, ties resolved by original position
        let mut used = vec![false; values.len()];
        let mut out = Vec::new();
        for _ in 0..values.len() {
            let mut best: Option<usize> = None;
            for i in 0..values.len() {
                if !used[i] && best.is_none_or(|b| values[i] < values[b]) {
                    best = Some(i);
                }
            }
            let b = best.unwrap();
            used[b] = true;
            out.push(b as u32);
        }
        out
    }

    #[test]
    fn argsort_of_sorted_is_identity_and_reversal_reverses() {
        assert_eq!(argsort(&[1.0, 2.0, 2.0, 5.0]), PermutationKey::identity(4));
        assert_eq!(argsort(&[4.0, 3.0, 2.0, 1.0]).one_based(), vec![4, 3, 2, 1]);
        assert_eq!(argsort(&[0.5, 0.5, 0.5]).order(), &[0, 1, 2]);
    }

    #[test]
    fn permutation_key_matches_selection_sort() {
        let key = HyperchaosKey::default();
        let per = 4;
        let seqs = hyperchaos::key_sequences(&key, 4 * per).unwrap();
        let s = combine(&seqs, 16, CombineScheme::Interleave);
        assert_eq!(s[1], seqs[1][0]);
        assert_eq!(s[4], seqs[0][1]);
        let pk = permutation_key(&key, 16, CombineScheme::Interleave).unwrap();
        assert_eq!(pk.order(), naive_argsort(&s).as_slice());
    }

    #[test]
    fn combine_schemes_and_truncation() {
        let seqs = [vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0]];
        assert_eq!(combine(&seqs, 7, CombineScheme::Interleave), vec![1.0, 3.0, 5.0, 7.0, 2.0, 4.0, 6.0]);
        assert_eq!(combine(&seqs, 5, CombineScheme::Concatenate), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn permute_follows_index_sequence() {
        let key = PermutationKey::from_order(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(permute(&[10, 20, 30, 40], &key).unwrap(), vec![40, 30, 20, 10]);
        assert_eq!(permute(&[1, 2, 3], &PermutationKey::identity(3)).unwrap(), vec![1, 2, 3]);
        assert!(permute(&[1, 2, 3], &key).is_err());
        assert!(PermutationKey::from_order(vec![0, 0, 1]).is_err());
        assert!(PermutationKey::from_order(vec![0, 3]).is_err());
    }

    #[test]
    fn keystream_self_cancels_when_registers_coincide() {
        let mut key = CipherKey::default();
        key.fy_rules = key.fx_rules.clone();
        key.fy_seed = key.fx_seed.clone();
        let z = keystream(&key, 300).unwrap();
        assert!(z[..255].iter().all(|&b| b == 0));
        assert!(z[255..].iter().any(|&b| b != 0));
    }

    #[test]
    fn keystream_length_and_block_count() {
        let key = CipherKey::default();
        assert_eq!(keystream(&key, 255).unwrap().len(), 255);
        assert_eq!(keystream(&key, 1).unwrap().len(), 1);
    }

    #[test]
    fn keystream_matches_straight_line_construction() {
        let key = CipherKey {
            selection_offset: 17,
            ..CipherKey::default()
        };
        let fx = ca::m_sequence(&key.fx_rules, &key.fx_seed, 255).unwrap();
        let fy = ca::m_sequence(&key.fy_rules, &key.fy_seed, 255).unwrap();
        let mut expected = Vec::new();
        for i in 0..3 {
            let seed = CaState::from_byte(fy[17 + i]);
            let fyi = ca::m_sequence(&key.fy_rules, &seed, 255).unwrap();
            expected.extend((0..255).map(|j| fx[j] ^ fyi[j]));
        }
        expected.truncate(600);
        assert_eq!(keystream(&key, 600).unwrap(), expected);
    }

    #[test]
    fn invalid_keys_rejected() {
        let mut key = CipherKey::default();
        key.fx_seed = CaState::zeros(8);
        assert!(matches!(key.validate(), Err(Error::DegenerateSeed)));
        let mut key = CipherKey::default();
        key.fy_rules = "90,90,90,90,90,90,90,90".parse().unwrap();
        assert!(matches!(key.validate(), Err(Error::NonMaximal(_))));
        assert!(encrypt(&GrayPlane::new(2, 2), &key).is_err());
    }

    #[test]
    fn round_trip_and_histogram_of_shuffle() {
        let key = CipherKey::default();
        let plain = GrayPlane::from_fn(13, 7, |r, c| (r * 31 + c * 7) as u8);
        let schedule = KeySchedule::new(&key, plain.len()).unwrap();
        let shuffled = permute(plain.as_bytes(), &schedule.permutation).unwrap();
        let mut a = shuffled.clone();
        let mut b = plain.as_bytes().to_vec();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        let c = schedule.encrypt(&plain).unwrap();
        assert_eq!(schedule.decrypt(&c).unwrap(), plain);
        assert_eq!(decrypt(&encrypt(&plain, &key).unwrap(), &key).unwrap(), plain);
    }

    #[test]
    fn single_pixel_round_trip() {
        let key = CipherKey::default();
        let p = GrayPlane::filled(1, 1, 77);
        assert_eq!(decrypt(&encrypt(&p, &key).unwrap(), &key).unwrap(), p);
    }

    #[test]
    fn ciphertext_file_format() {
        let c = CipherText {
            width: 3,
            height: 1,
            bytes: vec![1, 2, 3],
        };
        let raw = c.to_bytes();
        assert_eq!(&raw[..8], b"MONOSEAL");
        assert_eq!(&raw[8..16], &[0, 0, 0, 3, 0, 0, 0, 1]);
        assert_eq!(CipherText::from_bytes(&raw).unwrap(), c);
        assert!(CipherText::from_bytes(&raw[..18]).is_err());
        assert!(CipherText::from_bytes(b"NOTMAGIC\0\0\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn key_file_round_trip() {
        let key = CipherKey {
            combine: CombineScheme::Concatenate,
            selection_offset: 42,
            chaos: HyperchaosKey {
                x0: 0.123_456_789_012_345_68,
                ..HyperchaosKey::default()
            },
            ..CipherKey::default()
        };
        let text = key.to_text();
        assert_eq!(CipherKey::from_text(&text).unwrap(), key);
        assert!(CipherKey::from_text(&text.replace("version = 1", "version = 9")).is_err());
    }

    #[test]
    fn counted_encrypt_agrees() {
        let key = CipherKey::default();
        let plain = GrayPlane::from_fn(20, 10, |r, c| (r ^ c) as u8);
        let (c, counts) = encrypt_counted(&plain, &key).unwrap();
        assert_eq!(c, encrypt(&plain, &key).unwrap());
        assert_eq!(counts.byte_touches, 800);
        assert!(counts.comparisons > 0);
        assert_eq!(counts.chaos_steps, 150 + 50);
    }
}
