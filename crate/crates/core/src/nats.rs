//! Information quantities in nats, with a tagged infinity.

use serde::{Deserialize, Serialize};

/// What certifies an infinite value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    /// A vector (real and imaginary parts) in the offending support.
    Vector { re: Vec<f64>, im: Vec<f64> },
    /// A basis index / symbol carrying mass under the first argument only.
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Nats {
    Finite(f64),
    Infinite(Witness),
}

impl Nats {
    pub fn is_finite(&self) -> bool {
        matches!(self, Nats::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Nats::Finite(v) => Some(*v),
            Nats::Infinite(_) => None,
        }
    }

    /// Lossy view for arithmetic and ordering; infinities map to `f64::INFINITY`.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Nats::Infinite(w) => Some(w),
            Nats::Finite(_) => None,
        }
    }

    pub fn from_vector(v: &crate::tensor::CVector) -> Nats {
        Nats::Infinite(Witness::Vector {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        })
    }
}

impl std::fmt::Display for Nats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nats::Finite(v) => write!(f, "{v}"),
            Nats::Infinite(_) => write!(f, "inf"),
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Binary entropy in nats.
pub fn h2(x: f64) -> f64 {
    let t = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    t(x) + t(1.0 - x)
}
