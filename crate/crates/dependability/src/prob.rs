//! Products of many probabilities evaluated in log space.

/// `∏ p_i`, summed as logarithms so long chains do not underflow early.
pub(crate) fn all_of(probs: impl IntoIterator<Item = f64>) -> f64 {
    let mut log_sum = 0.0;
    for p in probs {
        if p <= 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    log_sum.exp()
}

/// `1 − ∏ (1 − p_i)`.
pub(crate) fn any_of(probs: impl IntoIterator<Item = f64>) -> f64 {
    let mut log_none = 0.0;
    for p in probs {
        if p >= 1.0 {
            return 1.0;
        }
        log_none += (-p).ln_1p();
    }
    -log_none.exp_m1()
}

pub(crate) fn check_probability(id: &str, value: f64) -> crate::Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(crate::DependabilityError::ProbabilityOutOfRange { id: id.to_string(), value })
    }
}
