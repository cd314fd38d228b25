//! Dense bit matrices over F_2 and kernel computation.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Row-major bit matrix, 64 columns per word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

pub fn get_bit(v: &[u64], i: usize) -> bool {
    (v[i / 64] >> (i % 64)) & 1 == 1
}

pub fn set_bit(v: &mut [u64], i: usize, b: bool) {
    if b {
        v[i / 64] |= 1 << (i % 64);
    } else {
        v[i / 64] &= !(1 << (i % 64));
    }
}

pub fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

pub fn weight(v: &[u64]) -> u32 {
    v.iter().map(|w| w.count_ones()).sum()
}

pub fn ones(v: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &w) in v.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            out.push(i * 64 + w.trailing_zeros() as usize);
            w &= w - 1;
        }
    }
    out
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = words_for(cols);
        BitMatrix { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        rng.fill(&mut m.data[..]);
        m.clear_padding();
        m
    }

    fn clear_padding(&mut self) {
        if self.cols % 64 != 0 {
            let mask = (1u64 << (self.cols % 64)) - 1;
            for i in 0..self.rows {
                self.data[i * self.words + self.words - 1] &= mask;
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.words..(i + 1) * self.words]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        get_bit(self.row(i), j)
    }

    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        set_bit(self.row_mut(i), j, b)
    }

    /// Packed words, row-major.
    pub fn as_words(&self) -> &[u64] {
        &self.data
    }

    pub fn from_words(rows: usize, cols: usize, data: Vec<u64>) -> Option<Self> {
        let words = words_for(cols);
        if data.len() != rows * words {
            return None;
        }
        let mut m = BitMatrix { rows, cols, words, data };
        let before = m.data.clone();
        m.clear_padding();
        (m.data == before).then_some(m)
    }

    /// `self` on top of `other`.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "dimension mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        BitMatrix { rows: self.rows + other.rows, cols: self.cols, words: self.words, data }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in ones(self.row(i)) {
                t.set(j, i, true);
            }
        }
        t
    }

    /// self · other.
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in ones(self.row(i)) {
                let src = other.row(j).to_vec();
                xor_into(out.row_mut(i), &src);
            }
        }
        out
    }

    /// self · v for a packed column vector of length `cols`.
    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; words_for(self.rows)];
        for i in 0..self.rows {
            let p = self.row(i).iter().zip(v).map(|(a, b)| (a & b).count_ones()).sum::<u32>() & 1;
            set_bit(&mut out, i, p == 1);
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..rows.len()).find(|&i| get_bit(&rows[i], col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && get_bit(row, col) {
                    xor_into(row, &pivot);
                }
            }
            rank += 1;
        }
        rank
    }
}

/// JSON form: dimensions plus the entries packed row-major, bit i·cols + j
/// at position (i·cols + j) mod 8 of byte (i·cols + j) / 8, base64 encoded.
#[derive(Serialize, Deserialize)]
struct PackedJson {
    rows: usize,
    cols: usize,
    bits: String,
}

impl BitMatrix {
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; (self.rows * self.cols).div_ceil(8)];
        for i in 0..self.rows {
            for j in ones(self.row(i)) {
                let t = i * self.cols + j;
                out[t / 8] |= 1 << (t % 8);
            }
        }
        out
    }

    pub fn from_packed_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Option<Self> {
        let n = rows * cols;
        if bytes.len() != n.div_ceil(8) || (n % 8 != 0 && bytes[n / 8] >> (n % 8) != 0) {
            return None;
        }
        let mut m = Self::zeros(rows, cols);
        for t in 0..n {
            if (bytes[t / 8] >> (t % 8)) & 1 == 1 {
                m.set(t / cols, t % cols, true);
            }
        }
        Some(m)
    }
}

impl Serialize for BitMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PackedJson { rows: self.rows, cols: self.cols, bits: B64.encode(self.to_packed_bytes()) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PackedJson::deserialize(d)?;
        let bytes = B64.decode(raw.bits.as_bytes()).map_err(D::Error::custom)?;
        BitMatrix::from_packed_bytes(raw.rows, raw.cols, &bytes)
            .ok_or_else(|| D::Error::custom("packed bit payload does not match the dimensions"))
    }
}

/// Basis of the dependencies among `columns` (each a packed vector of the
/// same length). Each basis vector is a packed bitmask over column
/// positions whose columns XOR to zero.
pub fn kernel_basis(columns: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let n = columns.len();
    let cw = words_for(n);
    // reduced vector, its combination, its pivot bit
    let mut basis: Vec<(Vec<u64>, Vec<u64>, usize)> = Vec::new();
    let mut kernel = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let mut v = col.clone();
        let mut combo = vec![0u64; cw];
        set_bit(&mut combo, j, true);
        for (b, c, p) in &basis {
            if get_bit(&v, *p) {
                xor_into(&mut v, b);
                xor_into(&mut combo, c);
            }
        }
        match ones(&v).first() {
            Some(&p) => basis.push((v, combo, p)),
            None => kernel.push(combo),
        }
    }
    kernel
}
