//! Group ensembles: Z_{2^m}, Z_q^m and F_2^m, with element arithmetic and
//! density bookkeeping.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest bit length supported by the modular family.
pub const MAX_MODULAR_BITS: u32 = 127;
/// Largest modulus supported by the vector family (digits are `u16`).
pub const MAX_VECTOR_Q: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupFamily {
    Modular2m,
    VectorModQ,
    Xor,
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupFamily::Modular2m => "modular",
            GroupFamily::VectorModQ => "vector",
            GroupFamily::Xor => "xor",
        })
    }
}

impl FromStr for GroupFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "modular" | "modular2m" | "mod" => Ok(GroupFamily::Modular2m),
            "vector" | "vectormodq" | "vec" => Ok(GroupFamily::VectorModQ),
            "xor" => Ok(GroupFamily::Xor),
            other => Err(Error::InvalidParam(format!("unknown group family {other:?}"))),
        }
    }
}

/// A group element. The variant always matches the family of the spec it
/// was produced by.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Residue modulo 2^m.
    Modular(u128),
    /// Bit vector, bit `i` is bit `i % 64` of limb `i / 64`.
    Xor(SmallVec<[u64; 2]>),
    /// Digits over Z_q, coordinate 0 first.
    Vector(SmallVec<[u16; 16]>),
}

#[derive(Deserialize)]
struct RawSpec {
    family: GroupFamily,
    m: u32,
    #[serde(default = "two")]
    q: u32,
}

fn two() -> u32 {
    2
}

impl TryFrom<RawSpec> for GroupSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        GroupSpec::new(raw.family, raw.m, raw.q)
    }
}

/// A concrete group. Serializes as `{family, m, q}`; `q` is 2 for the
/// modular and XOR families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct GroupSpec {
    pub family: GroupFamily,
    pub m: u32,
    pub q: u32,
}

impl GroupSpec {
    pub fn new(family: GroupFamily, m: u32, q: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParam("m must be at least 1".into()));
        }
        let q = match family {
            GroupFamily::Modular2m => {
                if m > MAX_MODULAR_BITS {
                    return Err(Error::Overflow(format!(
                        "modular family needs m = {m} > {MAX_MODULAR_BITS} bits"
                    )));
                }
                2
            }
            GroupFamily::Xor => 2,
            GroupFamily::VectorModQ => {
                if !(2..=MAX_VECTOR_Q).contains(&q) {
                    return Err(Error::InvalidParam(format!(
                        "vector modulus q = {q} outside [2, {MAX_VECTOR_Q}]"
                    )));
                }
                q
            }
        };
        Ok(GroupSpec { family, m, q })
    }

    pub fn modular(m: u32) -> Result<Self> {
        Self::new(GroupFamily::Modular2m, m, 2)
    }

    pub fn xor(m: u32) -> Result<Self> {
        Self::new(GroupFamily::Xor, m, 2)
    }

    pub fn vector(q: u32, m: u32) -> Result<Self> {
        Self::new(GroupFamily::VectorModQ, m, q)
    }

    /// Bits needed to store one element.
    pub fn element_bits(&self) -> u32 {
        match self.family {
            GroupFamily::VectorModQ => self.m * ceil_log2(self.q),
            _ => self.m,
        }
    }

    /// log2 |G|.
    pub fn log2_order(&self) -> f64 {
        self.m as f64 * (self.q as f64).log2()
    }

    /// |G| when it fits in a `u128`.
    pub fn order(&self) -> Option<u128> {
        (self.q as u128).checked_pow(self.m)
    }

    /// Density k·log r / log|G| realized by this group for instances of size r.
    pub fn density(&self, r: usize, k: usize) -> f64 {
        k as f64 * (r as f64).log2() / self.log2_order()
    }

    fn xor_limbs(&self) -> usize {
        self.m.div_ceil(64) as usize
    }

    fn top_mask(&self) -> u64 {
        match self.m % 64 {
            0 => u64::MAX,
            b => (1u64 << b) - 1,
        }
    }

    fn modular_mask(&self) -> u128 {
        if self.m == 128 {
            u128::MAX
        } else {
            (1u128 << self.m) - 1
        }
    }

    pub fn identity(&self) -> Element {
        match self.family {
            GroupFamily::Modular2m => Element::Modular(0),
            GroupFamily::Xor => Element::Xor(SmallVec::from_elem(0, self.xor_limbs())),
            GroupFamily::VectorModQ => Element::Vector(SmallVec::from_elem(0, self.m as usize)),
        }
    }

    pub fn is_identity(&self, a: &Element) -> bool {
        match a {
            Element::Modular(v) => *v == 0,
            Element::Xor(l) => l.iter().all(|&w| w == 0),
            Element::Vector(d) => d.iter().all(|&x| x == 0),
        }
    }

    pub fn is_valid(&self, a: &Element) -> bool {
        match (self.family, a) {
            (GroupFamily::Modular2m, Element::Modular(v)) => *v <= self.modular_mask(),
            (GroupFamily::Xor, Element::Xor(l)) => {
                l.len() == self.xor_limbs() && l.last().is_some_and(|&w| w & !self.top_mask() == 0)
            }
            (GroupFamily::VectorModQ, Element::Vector(d)) => {
                d.len() == self.m as usize && d.iter().all(|&x| (x as u32) < self.q)
            }
            _ => false,
        }
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        match self.family {
            GroupFamily::Modular2m => Element::Modular(rng.random::<u128>() & self.modular_mask()),
            GroupFamily::Xor => {
                let mut l: SmallVec<[u64; 2]> = (0..self.xor_limbs()).map(|_| rng.random()).collect();
                *l.last_mut().unwrap() &= self.top_mask();
                Element::Xor(l)
            }
            GroupFamily::VectorModQ => Element::Vector(
                (0..self.m).map(|_| rng.random_range(0..self.q) as u16).collect(),
            ),
        }
    }

    pub fn add(&self, a: &Element, b: &Element) -> Element {
        let mut out = a.clone();
        self.add_assign(&mut out, b);
        out
    }

    pub fn add_assign(&self, a: &mut Element, b: &Element) {
        match (a, b) {
            (Element::Modular(x), Element::Modular(y)) => {
                *x = x.wrapping_add(*y) & self.modular_mask();
            }
            (Element::Xor(x), Element::Xor(y)) => {
                for (u, v) in x.iter_mut().zip(y) {
                    *u ^= v;
                }
            }
            (Element::Vector(x), Element::Vector(y)) => {
                let q = self.q;
                for (u, &v) in x.iter_mut().zip(y) {
                    let s = *u as u32 + v as u32;
                    *u = if s >= q { s - q } else { s } as u16;
                }
            }
            _ => panic!("element variants do not match"),
        }
    }

    pub fn neg(&self, a: &Element) -> Element {
        match a {
            Element::Modular(x) => Element::Modular(x.wrapping_neg() & self.modular_mask()),
            Element::Xor(_) => a.clone(),
            Element::Vector(d) => Element::Vector(
                d.iter()
                    .map(|&x| if x == 0 { 0 } else { (self.q - x as u32) as u16 })
                    .collect(),
            ),
        }
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Element {
        self.add(a, &self.neg(b))
    }

    /// Sum of `elems[i]` over `indices`.
    pub fn sum_at(&self, elems: &[Element], indices: &[usize]) -> Element {
        let mut acc = self.identity();
        for &i in indices {
            self.add_assign(&mut acc, &elems[i]);
        }
        acc
    }

    /// Dense index of an element in `[0, |G|)`, for enumerable groups.
    pub fn index_of(&self, a: &Element) -> u64 {
        match a {
            Element::Modular(v) => *v as u64,
            Element::Xor(l) => l[0],
            Element::Vector(d) => d.iter().rev().fold(0u64, |acc, &x| acc * self.q as u64 + x as u64),
        }
    }

    /// Inverse of [`GroupSpec::index_of`].
    pub fn element_at(&self, mut idx: u64) -> Element {
        match self.family {
            GroupFamily::Modular2m => Element::Modular(idx as u128),
            GroupFamily::Xor => {
                let mut l = SmallVec::from_elem(0, self.xor_limbs());
                l[0] = idx;
                Element::Xor(l)
            }
            GroupFamily::VectorModQ => Element::Vector(
                (0..self.m)
                    .map(|_| {
                        let d = idx % self.q as u64;
                        idx /= self.q as u64;
                        d as u16
                    })
                    .collect(),
            ),
        }
    }

    /// Hex encoding, most significant part first, fixed width per spec.
    pub fn to_hex(&self, a: &Element) -> String {
        match a {
            Element::Modular(v) => format!("{:0w$x}", v, w = self.m.div_ceil(4) as usize),
            Element::Xor(l) => {
                let mut s: String = l.iter().rev().map(|w| format!("{w:016x}")).collect();
                let width = self.m.div_ceil(4) as usize;
                s.drain(..s.len() - width);
                s
            }
            Element::Vector(d) => {
                let w = ceil_log2(self.q).div_ceil(4).max(1) as usize;
                d.iter().rev().map(|x| format!("{x:0w$x}")).collect()
            }
        }
    }

    pub fn from_hex(&self, s: &str) -> Result<Element> {
        let bad = || Error::InvalidParam(format!("malformed element hex {s:?} for {self}"));
        let e = match self.family {
            GroupFamily::Modular2m => {
                Element::Modular(u128::from_str_radix(s, 16).map_err(|_| bad())?)
            }
            GroupFamily::Xor => {
                let n = self.xor_limbs();
                let padded = format!("{:0>w$}", s, w = 16 * n);
                if padded.len() != 16 * n {
                    return Err(bad());
                }
                let mut l = SmallVec::with_capacity(n);
                for i in (0..n).rev() {
                    let chunk = &padded[16 * i..16 * (i + 1)];
                    l.push(u64::from_str_radix(chunk, 16).map_err(|_| bad())?);
                }
                Element::Xor(l)
            }
            GroupFamily::VectorModQ => {
                let w = ceil_log2(self.q).div_ceil(4).max(1) as usize;
                if s.len() != w * self.m as usize {
                    return Err(bad());
                }
                let mut d: SmallVec<[u16; 16]> = SmallVec::with_capacity(self.m as usize);
                for i in (0..self.m as usize).rev() {
                    let x = u32::from_str_radix(&s[w * i..w * (i + 1)], 16).map_err(|_| bad())?;
                    d.push(u16::try_from(x).map_err(|_| bad())?);
                }
                Element::Vector(d)
            }
        };
        if self.is_valid(&e) {
            Ok(e)
        } else {
            Err(bad())
        }
    }

    /// Bit `j` of an XOR element.
    pub fn xor_bit(a: &Element, j: usize) -> bool {
        match a {
            Element::Xor(l) => (l[j / 64] >> (j % 64)) & 1 == 1,
            _ => panic!("not an F_2^m element"),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            GroupFamily::Modular2m => write!(f, "Z_2^{}", self.m),
            GroupFamily::Xor => write!(f, "F_2^{}", self.m),
            GroupFamily::VectorModQ => write!(f, "Z_{}^{}", self.q, self.m),
        }
    }
}

/// Instance size, solution size and target density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityParams {
    pub r: usize,
    pub k: usize,
    pub delta: Ratio<u64>,
}

impl DensityParams {
    pub fn new(r: usize, k: usize, delta: Ratio<u64>) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParam(format!("k = {k} must be at least 3")));
        }
        if r < k {
            return Err(Error::InvalidParam(format!("r = {r} is smaller than k = {k}")));
        }
        if *delta.numer() == 0 {
            return Err(Error::InvalidParam("density must be positive".into()));
        }
        Ok(DensityParams { r, k, delta })
    }

    /// m = ⌈k·log2 r / (Δ·log2 q)⌉.
    pub fn dimension(&self, q: u32) -> u32 {
        let x = self.k as f64 * (self.r as f64).log2() * *self.delta.denom() as f64
            / (*self.delta.numer() as f64 * (q as f64).log2());
        ceil_tol(x).max(1.0) as u32
    }

    pub fn spec(&self, family: GroupFamily, q: u32) -> Result<GroupSpec> {
        let q = if family == GroupFamily::VectorModQ { q } else { 2 };
        GroupSpec::new(family, self.dimension(q), q)
    }

    /// Relative density error |Δ_real − Δ|/Δ of `spec`.
    pub fn relative_error(&self, spec: &GroupSpec) -> f64 {
        let target = *self.delta.numer() as f64 / *self.delta.denom() as f64;
        (spec.density(self.r, self.k) - target).abs() / target
    }

    /// Whether the relative density error is at most 1/log2|G|. Always true
    /// for q = 2; for larger q the ceiling can overshoot, which is reported
    /// here rather than rejected.
    pub fn admissible(&self, spec: &GroupSpec) -> bool {
        self.relative_error(spec) <= 1.0 / spec.log2_order() + 1e-12
    }
}

/// Builds the group for `(r, k, Δ)` in the given family.
pub fn make_spec(r: usize, k: usize, delta: Ratio<u64>, family: GroupFamily, q: u32) -> Result<GroupSpec> {
    DensityParams::new(r, k, delta)?.spec(family, q)
}

/// Parses a density written as `3/4`, `0.7` or `1`.
pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let bad = || Error::InvalidParam(format!("cannot parse {s:?} as a rational"));
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        let den = 10u64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        return Ok(Ratio::new(int * den + frac, den));
    }
    Ratio::from_str(s).map_err(|_| bad())
}

/// ⌈x⌉ that ignores float noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

pub(crate) fn ceil_log2(q: u32) -> u32 {
    32 - (q - 1).leading_zeros()
}
