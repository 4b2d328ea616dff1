//! Parallel replicate driver.

use gsforest_core::rng::{replicate_rng, SimRng};
use rayon::prelude::*;

/// A replicate failed; carries its index so it can be rerun in isolation.
#[derive(Debug, thiserror::Error)]
#[error("replicate {index} failed: {source}")]
pub struct McError<E: std::error::Error + 'static> {
    pub index: u64,
    #[source]
    pub source: E,
}

/// Run replicates `first..first + reps` on `workers` threads.
///
/// Replicate `i` always sees `replicate_rng(seed, i)`, and results come back
/// in index order, so the output does not depend on `workers`. The reported
/// error is the one with the lowest index.
pub fn run_mc<T, E, F>(
    reps: usize,
    seed: u64,
    first: u64,
    workers: usize,
    f: F,
) -> Result<Vec<T>, McError<E>>
where
    T: Send,
    E: std::error::Error + Send + 'static,
    F: Fn(u64, &mut SimRng) -> Result<T, E> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<T, E>> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|i| {
                let index = first + i;
                let mut rng = replicate_rng(seed, index);
                f(index, &mut rng)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(reps);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(source) => {
                return Err(McError {
                    index: first + i as u64,
                    source,
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsforest_core::Error;
    use rand::Rng;

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let f = |_: u64, rng: &mut SimRng| -> Result<f64, Error> { Ok(rng.random()) };
        let a = run_mc(200, 9, 0, 1, f).unwrap();
        let b = run_mc(200, 9, 0, 4, f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_replicate_is_identified() {
        let err = run_mc(50, 1, 0, 3, |i, _rng| {
            if i == 17 || i == 30 {
                Err(Error::IncompletePath)
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
        assert_eq!(err.index, 17);
    }
}
