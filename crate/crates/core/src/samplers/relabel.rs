use super::PosteriorSample;

/// Impose `β₁,intercept ≥ β₂,intercept` on every draw by exchanging the class
/// labels of offending draws (and their stored class indicators).
pub fn relabel(sample: PosteriorSample) -> PosteriorSample {
    let mut out = sample;
    let mut swapped = 0usize;
    for (g, draw) in out.draws.iter_mut().enumerate() {
        if draw.beta[0][0] < draw.beta[1][0] {
            *draw = draw.swapped();
            swapped += 1;
            if let Some(us) = out.u_draws.as_mut() {
                for s in us[g].iter_mut() {
                    *s = 3 - *s;
                }
            }
        }
    }
    let fraction = if out.draws.is_empty() { 0.0 } else { swapped as f64 / out.draws.len() as f64 };
    out.swap_fraction = Some(fraction);
    out.relabeled = true;
    out
}
