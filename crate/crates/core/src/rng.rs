//! Seedable RNG streams and deterministic sampled reductions.
//!
//! Sampled estimators partition their draw budget into fixed chunks; chunk
//! `c` uses the ChaCha stream `(seed, c)`, draws sequentially within the
//! chunk, and chunk statistics are merged in chunk order. The estimate is
//! therefore a pure function of `(seed, count)`, independent of thread count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::numeric::NeumaierSum;

/// Draws per RNG chunk.
pub const SAMPLE_CHUNK: u64 = 1 << 12;

/// The RNG for chunk `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean and standard error of `count` draws of `eval`, reduced
/// deterministically. `eval` receives the chunk RNG and must draw from it
/// sequentially.
pub fn par_sample_stats<F>(count: u64, seed: u64, eval: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    assert!(count > 0, "sample count must be positive");
    let n_chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let in_chunk = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
            let mut sum = NeumaierSum::new();
            let mut sumsq = NeumaierSum::new();
            for _ in 0..in_chunk {
                let v = eval(&mut rng);
                sum.add(v);
                sumsq.add(v * v);
            }
            (sum.total(), sumsq.total())
        })
        .collect();
    let mut sum = NeumaierSum::new();
    let mut sumsq = NeumaierSum::new();
    for (s, ss) in parts {
        sum.add(s);
        sumsq.add(ss);
    }
    finish_stats(sum.total(), sumsq.total(), count)
}

/// Complex variant of [`par_sample_stats`]: componentwise means and a single
/// standard error per component, returned as `(mean, (stderr_re, stderr_im))`.
pub fn par_sample_stats_complex<F>(count: u64, seed: u64, eval: F) -> (Complex64, (f64, f64))
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    assert!(count > 0, "sample count must be positive");
    let n_chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<[f64; 4]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let in_chunk = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            let mut re2 = NeumaierSum::new();
            let mut im2 = NeumaierSum::new();
            for _ in 0..in_chunk {
                let z = eval(&mut rng);
                re.add(z.re);
                im.add(z.im);
                re2.add(z.re * z.re);
                im2.add(z.im * z.im);
            }
            [re.total(), im.total(), re2.total(), im2.total()]
        })
        .collect();
    let mut acc = [NeumaierSum::new(); 4];
    for part in parts {
        for (a, v) in acc.iter_mut().zip(part) {
            a.add(v);
        }
    }
    let (mean_re, se_re) = finish_stats(acc[0].total(), acc[2].total(), count);
    let (mean_im, se_im) = finish_stats(acc[1].total(), acc[3].total(), count);
    (Complex64::new(mean_re, mean_im), (se_re, se_im))
}

/// Mean and standard error of the mean from raw first and second moments.
fn finish_stats(sum: f64, sumsq: f64, count: u64) -> (f64, f64) {
    let n = count as f64;
    let mean = sum / n;
    if count < 2 {
        return (mean, 0.0);
    }
    // Sample variance; clamp the cancellation residue at zero.
    let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn stats_independent_of_thread_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| par_sample_stats(10_000, 42, |rng| rng.random::<f64>()))
        };
        let (m1, s1) = run(1);
        let (m2, s2) = run(8);
        assert_eq!(m1.to_bits(), m2.to_bits());
        assert_eq!(s1.to_bits(), s2.to_bits());
    }

    #[test]
    fn uniform_mean_near_half() {
        let (mean, se) = par_sample_stats(100_000, 7, |rng| rng.random::<f64>());
        assert!((mean - 0.5).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = stream_rng(1, 0);
        let mut b = stream_rng(1, 1);
        let xa: u64 = a.random();
        let xb: u64 = b.random();
        assert_ne!(xa, xb);
    }
}
