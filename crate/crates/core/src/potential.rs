use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Even, 1-periodic potential stored as a finite cosine series
/// `V(x) = sum_m V_m cos(2*pi*m*x)` over positive integer modes.
///
/// Potentials supporting a Dirac point carry even modes only (the series is
/// then 1/2-periodic); odd modes are representable so that gap-opening
/// perturbations can be probed.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicPotential<T> {
    modes: BTreeMap<u32, T>,
}

impl<T: Real> PeriodicPotential<T> {
    pub fn zero() -> Self {
        Self {
            modes: BTreeMap::new(),
        }
    }

    pub fn from_modes(modes: impl IntoIterator<Item = (u32, T)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (m, amp) in modes {
            if m == 0 {
                return Err(Error::invalid("potential modes must be positive integers"));
            }
            if map.insert(m, amp).is_some() {
                return Err(Error::invalid(format!("duplicate potential mode {m}")));
            }
        }
        map.retain(|_, amp: &mut T| *amp != T::zero());
        Ok(Self { modes: map })
    }

    pub fn single_mode(mode: u32, amplitude: T) -> Result<Self> {
        Self::from_modes([(mode, amplitude)])
    }

    /// `V(x) = sum_m V_m cos(2*pi*m*x)`.
    pub fn eval(&self, x: T) -> T {
        self.modes
            .iter()
            .map(|(&m, &amp)| amp * num_traits::Float::cos(T::TAU() * T::of(f64::from(m)) * x))
            .sum()
    }

    /// Cosine half-amplitude entering the Hill matrix: `V_|d|/2` for stored
    /// modes, zero otherwise.
    pub fn half_coefficient(&self, delta: i64) -> T {
        let d = delta.unsigned_abs();
        u32::try_from(d)
            .ok()
            .and_then(|d| self.modes.get(&d))
            .map_or(T::zero(), |&amp| amp / T::of(2.0))
    }

    pub fn max_mode(&self) -> u32 {
        self.modes.keys().next_back().copied().unwrap_or(0)
    }

    /// True when every stored mode is even, i.e. the potential has period 1/2
    /// and the band structure folds into an exact degeneracy at k = pi.
    pub fn is_half_periodic(&self) -> bool {
        self.modes.keys().all(|m| m % 2 == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> impl Iterator<Item = (u32, T)> + '_ {
        self.modes.iter().map(|(&m, &a)| (m, a))
    }
}

impl<T: Real> fmt::Display for PeriodicPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.modes.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&m, &a) in &self.modes {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{m}:{a}")?;
            first = false;
        }
        Ok(())
    }
}

/// Parses `"2:5.0,4:-1.25"` (mode:amplitude pairs); `"0"` or empty means the
/// zero potential.
impl<T: Real> FromStr for PeriodicPotential<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "0" {
            return Ok(Self::zero());
        }
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (m, a) = part.split_once(':').ok_or_else(|| {
                Error::invalid(format!("bad potential term '{part}', want mode:amp"))
            })?;
            let mode: u32 = m
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad potential mode '{m}'")))?;
            let amp: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad potential amplitude '{a}'")))?;
            pairs.push((mode, T::of(amp)));
        }
        Self::from_modes(pairs)
    }
}
