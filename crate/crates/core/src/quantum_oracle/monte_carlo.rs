use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, require_non_negative, Result};
use crate::kerr_model::{validate_time_grid, ExcitationConvention, HoppingTrace, TraceSource};

use super::unitary::evolve_single_phonon;

/// Draw a stretch-mode occupation from the geometric law by inverting its CDF.
///
/// P(n ≥ k) = q^k with q = n̄/(n̄+1), so n = ⌊ln U / ln q⌋ for U uniform on (0, 1].
pub fn sample_occupation<R: Rng + ?Sized>(mean_n: f64, rng: &mut R) -> u64 {
    let q = mean_n / (mean_n + 1.0);
    if q == 0.0 {
        return 0;
    }
    let u = 1.0 - rng.random::<f64>();
    (u.ln() / q.ln()).floor() as u64
}

/// Thermal average of the single-phonon hopping probability estimated from
/// `samples` i.i.d. occupation draws.
///
/// The stream is ChaCha8 seeded with `seed` via `seed_from_u64`, so the trace
/// is reproducible bit for bit across platforms. Each distinct draw is
/// evolved once and weighted by its multiplicity.
pub fn monte_carlo_signal(
    kappa: f64,
    chi: f64,
    mean_n: f64,
    times: &[f64],
    samples: u64,
    seed: u64,
) -> Result<HoppingTrace> {
    if samples < 1 {
        return Err(domain("samples must be at least 1"));
    }
    require_non_negative("mean_n", mean_n)?;
    validate_time_grid(times)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..samples {
        *counts.entry(sample_occupation(mean_n, &mut rng)).or_insert(0) += 1;
    }

    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let mut total = 0.0;
        for (&n, &count) in &counts {
            let n = i64::try_from(n).map_err(|_| domain("sampled occupation overflows"))?;
            total += (count as f64 / samples as f64) * evolve_single_phonon(kappa, chi, n, t)?;
        }
        values.push(total);
    }
    Ok(HoppingTrace {
        times: times.to_vec(),
        values,
        source: TraceSource::MonteCarlo { kappa, chi, mean_n, samples, seed },
        convention: ExcitationConvention::LeftIon1,
    })
}
