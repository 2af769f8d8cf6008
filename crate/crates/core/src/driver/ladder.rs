//! Geometric ladders of scales between M^(1/k) and M^delta.

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{ceil_dyadic, q_pow, q_to_string, qi, to_f64, Q, DYADIC_BITS};

/// Scales s_0 > s_1 > ... > s_l with s_0 = M^(1/k), s_l = M^delta,
/// s_(n-1) / s_n <= s_l and l = ceil(1/(k delta)) - 1 < 1/(k delta).
/// Every power is the least multiple of 2^-20 that is >= the exact power
/// (checked in rationals); later scales are raised when needed to keep the
/// ratio condition exact.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleLadder {
    #[serde(serialize_with = "ser_qs")]
    pub scales: Vec<Q>,
    pub k: usize,
    #[serde(serialize_with = "ser_q")]
    pub delta: Q,
    #[serde(serialize_with = "ser_q")]
    pub mass: Q,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q_to_string(q))
}

fn ser_qs<S: serde::Serializer>(qs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(qs.iter().map(q_to_string))
}

fn step() -> Q {
    Q::new(1.into(), num_bigint::BigInt::one() << DYADIC_BITS)
}

/// Least multiple of 2^-20 that is >= m^e for rational e >= 0.
pub fn power_above(m: &Q, e: &Q) -> Q {
    let mut s = ceil_dyadic(to_f64(m).powf(to_f64(e)));
    if let (Some(p), Some(q)) = (e.numer().to_u32(), e.denom().to_u32()) {
        if q <= 64 && p <= 64 {
            let target = q_pow(m, p);
            while q_pow(&s, q) < target {
                s += step();
            }
            // lower it while the previous multiple still dominates
            while s > step() && q_pow(&(&s - step()), q) >= target {
                s -= step();
            }
        }
    }
    s
}

impl ScaleLadder {
    pub fn new(mass: &Q, k: usize, delta: &Q) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("ladder needs k >= 1"));
        }
        let inv_k = Q::new(1.into(), (k as i64).into());
        if !delta.is_positive() || delta >= &inv_k {
            return Err(Error::invalid(format!("delta {} must lie in (0, 1/{k})", q_to_string(delta))));
        }
        if mass <= &Q::one() {
            return Err(Error::invalid("ladder needs mass above one"));
        }
        let ratio = &inv_k / delta;
        let l = ratio.ceil().to_integer().to_usize().expect("small ladder") - 1;
        let l = l.max(1);
        let gap = (&inv_k - delta) / qi(l as i64);
        let top = power_above(mass, delta);
        let mut scales: Vec<Q> = (0..=l)
            .map(|n| {
                if n == l {
                    top.clone()
                } else {
                    power_above(mass, &(&inv_k - &gap * qi(n as i64)))
                }
            })
            .collect();
        for n in 1..l {
            let need = &scales[n - 1] / &top;
            if scales[n] < need {
                scales[n] = (need / step()).ceil() * step();
            }
        }
        while scales[l - 1] > &scales[l] * &scales[l] {
            scales[l] += step();
        }
        let ladder = ScaleLadder {
            scales,
            k,
            delta: delta.clone(),
            mass: mass.clone(),
        };
        ladder.check()?;
        Ok(ladder)
    }

    pub fn len(&self) -> usize {
        self.scales.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Verifies ordering, the ratio bound and the length bound exactly.
    pub fn check(&self) -> Result<()> {
        let l = self.len();
        let top = &self.scales[l];
        for n in 1..=l {
            if self.scales[n] >= self.scales[n - 1] {
                return Err(Error::verification(format!("ladder not decreasing at rung {n}")));
            }
            if self.scales[n - 1] > &self.scales[n] * top {
                return Err(Error::verification(format!("ladder ratio too large at rung {n}")));
            }
        }
        if qi(l as i64) * qi(self.k as i64) * &self.delta >= Q::one() && l > 1 {
            return Err(Error::verification("ladder too long"));
        }
        if self.scales.iter().any(|s| s.is_zero()) {
            return Err(Error::verification("zero scale"));
        }
        Ok(())
    }
}
