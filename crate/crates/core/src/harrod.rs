//! Growth-model renditions built on the saving share `m` and the
//! capital/income ratio `n`: the classical exponential form, the corrected
//! rational-growth form with a finite forecast horizon, and the discrete
//! geometric-progression form, together with the discrepancy ratio between
//! the exponential and geometric discrete solutions.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter `{field}` invalid: {message}")]
    InvalidParameters { field: &'static str, message: String },
    #[error("time {t} reaches the forecast horizon {horizon}; the corrected income loses meaning there")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Validated growth-model parameters.
///
/// `m` is the dimensionless share of income saved, `n` the number of years
/// during which the income counterbalances the capital, `y0` the initial
/// income flow intensity, `k0` the initial capital. The derived ratio
/// `a = m/n` must stay below one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrodParams {
    m: f64,
    n: f64,
    y0: f64,
    k0: f64,
}

impl HarrodParams {
    pub fn new(m: f64, n: f64, y0: f64, k0: f64) -> Result<Self, Error> {
        let check = |field: &'static str, ok: bool, message: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameters { field, message })
            }
        };
        check("m", m.is_finite() && m > 0.0 && m <= 1.0, format!("must satisfy 0 < m <= 1, got {m}"))?;
        check("n", n.is_finite() && n > 0.0, format!("must be positive, got {n}"))?;
        check("y0", y0.is_finite() && y0 > 0.0, format!("must be positive, got {y0}"))?;
        check("k0", k0.is_finite() && k0 >= 0.0, format!("must be nonnegative, got {k0}"))?;
        check(
            "n",
            m / n < 1.0,
            format!("the ratio a = m/n must stay below one, got {}", m / n),
        )?;
        Ok(HarrodParams { m, n, y0, k0 })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Growth ratio `a = m/n`, shared by the corrected and discrete forms.
    pub fn a(&self) -> f64 {
        self.m / self.n
    }

    /// Initial income of the discrete model, `K0 / n`.
    pub fn discrete_y0(&self) -> f64 {
        self.k0 / self.n
    }

    /// The discrete model pins its initial income to `K0 / n`; when that
    /// disagrees with the continuous `Y0` input, the caller should surface
    /// this warning.
    pub fn discrete_y0_mismatch(&self) -> Option<String> {
        let yd = self.discrete_y0();
        if (yd - self.y0).abs() > 1e-12 * self.y0.abs().max(yd.abs()) {
            Some(format!(
                "discrete model uses Y_c0 = K0/n = {yd}, which differs from the Y0 input {}",
                self.y0
            ))
        } else {
            None
        }
    }
}

/// Classical exponential income `Y0 * exp(m t / n)`.
pub fn income_exponential(params: &HarrodParams, t: f64) -> Result<f64, Error> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(params.y0 * (params.m * t / params.n).exp())
}

/// Corrected income `Y0 / (1 - s t)^2` with `s = m/n`, valid strictly
/// before the forecast horizon `n/m`.
pub fn income_corrected(params: &HarrodParams, t: f64) -> Result<f64, Error> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    let horizon = forecast_horizon(params);
    if t >= horizon {
        return Err(Error::HorizonExceeded { t, horizon });
    }
    let s = params.a();
    Ok(params.y0 / ((1.0 - s * t) * (1.0 - s * t)))
}

/// The horizon `n/m` beyond which the corrected income loses meaning.
pub fn forecast_horizon(params: &HarrodParams) -> f64 {
    params.n / params.m
}

/// Discrete income after the given number of steps, by the closed
/// geometric-progression form `Y_c0 (1 - a^{steps+1}) / (1 - a)`.
pub fn income_discrete(params: &HarrodParams, steps: u32) -> f64 {
    let a = params.a();
    params.discrete_y0() * (1.0 - a.powi(steps as i32 + 1)) / (1.0 - a)
}

/// Ratio of the exponential discrete solution to the geometric one,
/// `e^{a n} (1 - a) / (1 - a^{n+1})` at `n = steps`. Grows without bound,
/// which is what refutes the exponential reading of the discrete model.
pub fn exponential_discrepancy(params: &HarrodParams, steps: u32) -> f64 {
    let a = params.a();
    (a * steps as f64).exp() * (1.0 - a) / (1.0 - a.powi(steps as i32 + 1))
}
