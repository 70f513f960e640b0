//! Number-theoretic classification of wavenumber triples and the amplitude
//! regions on which the local solution set is known to be a smooth family.
//!
//! A triple is first reduced by its common divisor, then relabelled as
//! `(m1, m2, m3)` so that the case conditions read in a fixed form:
//!
//! | case | coprime pairs | labelling |
//! |------|---------------|-----------|
//! | I    | none          | identity |
//! | II   | `(m1, m2)`    | `m1 | m3` whenever exactly one entry divides `m3` |
//! | III  | all but `(m2, m3)` | `m2 | m3` whenever one of them divides the other |
//! | IV   | all           | `m1 = 1` when some entry is 1 |

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    I,
    IIa,
    IIb,
    IIc,
    IIIa,
    IIIb,
    IIIc,
    IIId,
    IVa,
    IVb,
}

impl Case {
    pub const ALL: [Case; 10] = [
        Case::I,
        Case::IIa,
        Case::IIb,
        Case::IIc,
        Case::IIIa,
        Case::IIIb,
        Case::IIIc,
        Case::IIId,
        Case::IVa,
        Case::IVb,
    ];

    /// Region inequality in the relabelled amplitudes.
    pub fn region_formula(self) -> &'static str {
        match self {
            Case::I => "all t",
            Case::IIa => "|t3| >= d|t|",
            Case::IIb => "|t3| >= d|t1|",
            Case::IIc => "|t3| >= d min(|t1|, |t2|)",
            Case::IIIa => "|t3| >= d|t2| >= d^2|t1|",
            Case::IIIb => "min(|t2|, |t3|) >= d|t1|",
            Case::IIIc => "|t3| >= d|t2| >= d^2 min(|t1|, |t3|)",
            Case::IIId => "min(|t2|, |t3|) >= d min(|t1|, max(|t2|, |t3|))",
            Case::IVa => "min(|t2|, |t3|) >= d|t1| >= d^2 min(|t2|, |t3|)",
            Case::IVb => "|tj| >= d min_{i!=j} |ti|, tj the smallest",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalClass {
    pub case: Case,
    /// Entries after division by `divisor`, in relabelled order `(m1, m2, m3)`.
    pub reduced: [u64; 3],
    pub divisor: u64,
    /// `reduced[i]` came from input position `relabel[i]`.
    pub relabel: [usize; 3],
}

impl ModalClass {
    pub fn region(&self, delta: f64) -> RegionPredicate {
        RegionPredicate { case: self.case, delta, relabel: self.relabel }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn divides(a: u64, b: u64) -> bool {
    b % a == 0
}

pub fn classify(m: [u64; 3]) -> Result<ModalClass> {
    if m.contains(&0) {
        return Err(Error::InvalidWavenumbers(format!("wavenumbers must be positive, got {m:?}")));
    }
    let g = gcd(gcd(m[0], m[1]), m[2]);
    let r = m.map(|x| x / g);
    if r[0] == r[1] || r[0] == r[2] || r[1] == r[2] {
        return Err(Error::DegenerateTriple(m));
    }
    let shares = |i: usize, j: usize| gcd(r[i], r[j]) > 1;
    // pairs indexed by the position they exclude
    let pair_of = |excluded: usize| match excluded {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let sharing: Vec<usize> = (0..3).filter(|&x| {
        let (i, j) = pair_of(x);
        shares(i, j)
    }).collect();

    let (case, relabel) = match sharing.len() {
        3 => (Case::I, [0, 1, 2]),
        2 => {
            // m3 shares with both others; (m1, m2) is the coprime pair
            let coprime = (0..3).find(|x| !sharing.contains(x)).unwrap();
            let (mut i, mut j) = pair_of(coprime);
            let k = coprime;
            let (di, dj) = (divides(r[i], r[k]), divides(r[j], r[k]));
            let case = match (di, dj) {
                (true, true) => Case::IIa,
                (false, false) => Case::IIc,
                _ => {
                    if dj {
                        (i, j) = (j, i);
                    }
                    Case::IIb
                }
            };
            (case, [i, j, k])
        }
        1 => {
            let one = sharing[0];
            let (mut j, mut k) = pair_of(one);
            if divides(r[k], r[j]) {
                (j, k) = (k, j);
            }
            let m2_divides = divides(r[j], r[k]);
            let case = match (r[one] == 1, m2_divides) {
                (true, true) => Case::IIIa,
                (true, false) => Case::IIIb,
                (false, true) => Case::IIIc,
                (false, false) => Case::IIId,
            };
            (case, [one, j, k])
        }
        _ => match (0..3).find(|&x| r[x] == 1) {
            Some(i) => {
                let (j, k) = pair_of(i);
                (Case::IVa, [i, j, k])
            }
            None => (Case::IVb, [0, 1, 2]),
        },
    };
    Ok(ModalClass { case, reduced: relabel.map(|i| r[i]), divisor: g, relabel })
}

/// The amplitude cone attached to a case, in the caller's ordering of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPredicate {
    pub case: Case,
    pub delta: f64,
    /// Relabelled amplitude `i` is `t[relabel[i]]`.
    pub relabel: [usize; 3],
}

impl RegionPredicate {
    /// A predicate whose amplitudes are already in relabelled order.
    pub fn new(case: Case, delta: f64) -> Self {
        RegionPredicate { case, delta, relabel: [0, 1, 2] }
    }
}

pub fn region_contains(pred: &RegionPredicate, t: [f64; 3]) -> bool {
    let d = pred.delta;
    let [a1, a2, a3] = pred.relabel.map(|i| t[i].abs());
    let norm = (a1 * a1 + a2 * a2 + a3 * a3).sqrt();
    match pred.case {
        Case::I => true,
        Case::IIa => a3 >= d * norm,
        Case::IIb => a3 >= d * a1,
        Case::IIc => a3 >= d * a1.min(a2),
        Case::IIIa => a3 >= d * a2 && a2 >= d * a1,
        Case::IIIb => a2.min(a3) >= d * a1,
        Case::IIIc => a3 >= d * a2 && a2 >= d * a1.min(a3),
        Case::IIId => a2.min(a3) >= d * a1.min(a2.max(a3)),
        Case::IVa => {
            let m = a2.min(a3);
            m >= d * a1 && a1 >= d * m
        }
        Case::IVb => {
            let a = [a1, a2, a3];
            let mut j = 0;
            for i in 1..3 {
                if a[i] < a[j] {
                    j = i;
                }
            }
            let others = (0..3).filter(|&i| i != j).map(|i| a[i]).fold(f64::INFINITY, f64::min);
            a[j] >= d * others
        }
    }
}

/// Minimal period `2 pi / divisor` of a combination of the active modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedPeriod {
    pub divisor: u64,
}

impl ReducedPeriod {
    pub fn radians(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.divisor as f64
    }
}

impl fmt::Display for ReducedPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2pi/{}", self.divisor)
    }
}

/// `None` when no mode is active.
pub fn reduced_period_check(m: [u64; 3], active: [bool; 3]) -> Option<ReducedPeriod> {
    let divisor = m.iter().zip(active).filter(|(_, a)| *a).fold(0, |g, (&k, _)| gcd(g, k));
    (divisor > 0).then_some(ReducedPeriod { divisor })
}
