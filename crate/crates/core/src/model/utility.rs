use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Builtin utility forms. All are nondecreasing and concave with `U(0) = 0`
/// and a finite slope at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    /// `scale * ln(1 + r / offset)`.
    Log {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: f64,
    },
    /// `scale * (1 - exp(-rate * r))`.
    Saturating { scale: f64, rate: f64 },
    /// Identically zero; the node may relay but gains nothing from admitting.
    Zero,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl Utility {
    pub fn log() -> Self {
        Utility::Log {
            scale: 1.0,
            offset: 1.0,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Utility::Log { scale, offset } => scale * (r / offset).ln_1p(),
            Utility::Saturating { scale, rate } => -scale * (-rate * r).exp_m1(),
            Utility::Zero => 0.0,
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            Utility::Log { scale, offset } => scale / (offset + r),
            Utility::Saturating { scale, rate } => scale * rate * (-rate * r).exp(),
            Utility::Zero => 0.0,
        }
    }

    /// Value with a domain check against `[0, r_max]`.
    pub fn checked_value(&self, r: f64, r_max: f64) -> Result<f64> {
        check_rate(r, r_max)?;
        Ok(self.value(r))
    }

    pub fn checked_derivative(&self, r: f64, r_max: f64) -> Result<f64> {
        check_rate(r, r_max)?;
        Ok(self.derivative(r))
    }

    /// Slope at zero, which is also the maximum slope.
    pub fn beta(&self) -> f64 {
        self.derivative(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Utility::Zero)
    }

    /// Checks parameters and the shape requirements on a grid over `[0, r_max]`.
    pub fn validate(&self, field: &str, r_max: f64) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("{field}.{name}"),
                    format!("must be finite and positive, got {x}"),
                ))
            }
        };
        match *self {
            Utility::Log { scale, offset } => {
                positive("scale", scale)?;
                positive("offset", offset)?;
            }
            Utility::Saturating { scale, rate } => {
                positive("scale", scale)?;
                positive("rate", rate)?;
            }
            Utility::Zero => return Ok(()),
        }
        if self.value(0.0) != 0.0 {
            return Err(Error::config(field, "utility must vanish at zero"));
        }
        const STEPS: usize = 256;
        let h = r_max / STEPS as f64;
        let mut prev_inc = f64::INFINITY;
        for i in 0..STEPS {
            let a = i as f64 * h;
            let inc = self.value(a + h) - self.value(a);
            if inc <= 0.0 {
                return Err(Error::config(field, format!("utility not increasing near r={a}")));
            }
            if inc >= prev_inc {
                return Err(Error::config(
                    field,
                    format!("utility not strictly concave near r={a}"),
                ));
            }
            prev_inc = inc;
        }
        Ok(())
    }
}

fn check_rate(r: f64, r_max: f64) -> Result<()> {
    if (0.0..=r_max).contains(&r) {
        Ok(())
    } else {
        Err(Error::argument("r", format!("rate {r} outside [0, {r_max}]")))
    }
}
