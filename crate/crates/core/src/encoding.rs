//! Input temporal bit-slicing.
//!
//! An integer input vector is streamed one bit per pulse, least significant
//! bit first. Signed inputs use two's complement; the last plane is the sign
//! plane and carries weight `−2^(B_in−1)` when results are recombined.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signedness {
    Unsigned,
    Signed,
}

impl Signedness {
    pub fn range(&self, bits: u32) -> (i64, i64) {
        match self {
            Signedness::Unsigned => (0, (1i64 << bits) - 1),
            Signedness::Signed => (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulseTrain {
    /// `planes[p][j]` is bit `p` of input `j`.
    pub planes: Vec<Vec<bool>>,
    pub input_bits: u32,
    pub signedness: Signedness,
}

impl PulseTrain {
    pub fn pulses(&self) -> usize {
        self.planes.len()
    }

    pub fn len(&self) -> usize {
        self.planes.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the negatively weighted plane, if any.
    pub fn sign_plane(&self) -> Option<usize> {
        match self.signedness {
            Signedness::Signed => Some(self.input_bits as usize - 1),
            Signedness::Unsigned => None,
        }
    }

    /// Place value of plane `p` in the shift-add recombination.
    pub fn plane_weight(&self, p: usize) -> i64 {
        if Some(p) == self.sign_plane() {
            -(1i64 << p)
        } else {
            1i64 << p
        }
    }

    pub fn active_count(&self, p: usize) -> usize {
        self.planes[p].iter().filter(|&&b| b).count()
    }
}

pub fn encode_inputs(v: &[i64], input_bits: u32, signedness: Signedness) -> Result<PulseTrain> {
    if !(1..=16).contains(&input_bits) {
        return Err(Error::domain(format!("input bits must be in 1..=16, got {input_bits}")));
    }
    let (lo, hi) = signedness.range(input_bits);
    if let Some(bad) = v.iter().find(|&&x| x < lo || x > hi) {
        return Err(Error::domain(format!(
            "input {bad} not representable as {input_bits}-bit {signedness:?} [{lo}, {hi}]"
        )));
    }
    let planes = (0..input_bits)
        .map(|p| v.iter().map(|&x| (x >> p) & 1 == 1).collect())
        .collect();
    Ok(PulseTrain {
        planes,
        input_bits,
        signedness,
    })
}

/// Shift-add recombination of per-plane results: `Σ_p weight(p)·r_p`.
pub fn decode_accumulate(per_plane: &[Vec<i64>], train: &PulseTrain) -> Result<Vec<i64>> {
    if per_plane.len() != train.pulses() {
        return Err(Error::domain(format!(
            "{} plane results for a {}-pulse train",
            per_plane.len(),
            train.pulses()
        )));
    }
    let width = per_plane.first().map_or(0, Vec::len);
    if per_plane.iter().any(|r| r.len() != width) {
        return Err(Error::dim("plane results have differing lengths"));
    }
    let mut out = vec![0i64; width];
    for (p, r) in per_plane.iter().enumerate() {
        let w = train.plane_weight(p);
        for (o, &x) in out.iter_mut().zip(r) {
            *o += w * x;
        }
    }
    Ok(out)
}
