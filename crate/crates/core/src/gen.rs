//! Seeded test-function generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{DomainSpec, GridFunction, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    /// Every cell equals the amplitude.
    Constant,
    /// The first cell carries all the mass; the mean equals the amplitude.
    Spike,
    /// `+a` on the lower half along the first axis, `-a` on the upper half.
    Step,
    /// Noise mixed with a polynomial trend and a few spikes.
    Random,
    /// A random combination of Haar wavelets.
    HaarSum,
    /// `-a ln(|x - x0| / side)` at cell centres for a random `x0`.
    LogSample,
}

impl GenKind {
    pub const ALL: [GenKind; 6] =
        [GenKind::Constant, GenKind::Spike, GenKind::Step, GenKind::Random, GenKind::HaarSum, GenKind::LogSample];

    pub fn name(&self) -> &'static str {
        match self {
            GenKind::Constant => "constant",
            GenKind::Spike => "spike",
            GenKind::Step => "step",
            GenKind::Random => "random",
            GenKind::HaarSum => "haar-sum",
            GenKind::LogSample => "log-sample",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GenKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown generator kind '{s}'")))
    }
}

pub fn generate(domain: DomainSpec, kind: GenKind, amplitude: f64, seed: u64) -> Result<GridFunction> {
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter("amplitude must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GenKind::Constant => Ok(GridFunction::constant(domain, amplitude)),
        GenKind::Spike => {
            let mut v = vec![0.0; domain.cell_count()];
            v[0] = amplitude * domain.cell_count() as f64;
            GridFunction::new(domain, v)
        }
        GenKind::Step => {
            let half = domain.cells_per_axis() / 2;
            let v = (0..domain.cell_count())
                .map(|i| {
                    let c = domain.cell_coords(i)[0] as usize;
                    if domain.depth() == 0 || c < half {
                        amplitude
                    } else {
                        -amplitude
                    }
                })
                .collect();
            GridFunction::new(domain, v)
        }
        GenKind::Random => GridFunction::new(domain, random_values(&domain, amplitude, &mut rng)),
        GenKind::HaarSum => GridFunction::new(domain, haar_values(&domain, amplitude, &mut rng)),
        GenKind::LogSample => {
            let n = domain.dim();
            let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * domain.side()).collect();
            let floor = domain.cell_side() / 4.0;
            GridFunction::from_fn(domain, |x| {
                let d = (0..n).map(|i| (x[i] - x0[i]).powi(2)).sum::<f64>().sqrt().max(floor);
                -amplitude * (d / domain.side()).ln()
            })
        }
    }
}

/// A random function of the mixed family with a seeded generator, used by the verification suites.
pub fn random_function(domain: DomainSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let amplitude = 0.5 + 2.0 * rng.gen::<f64>();
    let v = match rng.gen_range(0..4) {
        0 => random_values(&domain, amplitude, rng),
        1 => haar_values(&domain, amplitude, rng),
        2 => {
            let mut v = random_values(&domain, amplitude, rng);
            let h = haar_values(&domain, amplitude, rng);
            v.iter_mut().zip(h).for_each(|(a, b)| *a += b);
            v
        }
        _ => (0..domain.cell_count()).map(|_| amplitude * (2.0 * rng.gen::<f64>() - 1.0)).collect(),
    };
    GridFunction::new(domain, v).expect("finite samples")
}

fn random_values(domain: &DomainSpec, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = domain.dim();
    let mut trend = [0.0; MAX_DIM + 1];
    for t in trend.iter_mut().take(n + 1) {
        *t = 2.0 * rng.gen::<f64>() - 1.0;
    }
    let noise = rng.gen::<f64>();
    let mut v: Vec<f64> = (0..domain.cell_count())
        .map(|i| {
            let c = domain.cell_coords(i);
            let mut x = trend[n];
            for a in 0..n {
                let u = (c[a] as f64 + 0.5) / domain.cells_per_axis() as f64;
                x += trend[a] * u * u;
            }
            amplitude * (x + noise * (2.0 * rng.gen::<f64>() - 1.0))
        })
        .collect();
    let spikes = rng.gen_range(0..3);
    for _ in 0..spikes {
        let i = rng.gen_range(0..v.len());
        v[i] += amplitude * 4.0 * (2.0 * rng.gen::<f64>() - 1.0);
    }
    v
}

fn haar_values(domain: &DomainSpec, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = domain.dim();
    let mut v = vec![0.0; domain.cell_count()];
    if domain.depth() == 0 {
        v[0] = amplitude;
        return v;
    }
    let terms = 1 + rng.gen_range(0..6);
    for _ in 0..terms {
        let level = rng.gen_range(0..domain.depth());
        let width = domain.cells_per_axis() >> level;
        let mut origin = [0usize; MAX_DIM];
        for o in origin.iter_mut().take(n) {
            *o = rng.gen_range(0..1usize << level) * width;
        }
        let axis = rng.gen_range(0..n);
        let c = amplitude * (2.0 * rng.gen::<f64>() - 1.0) * (1.0 + level as f64);
        for (i, slot) in v.iter_mut().enumerate() {
            let coords = domain.cell_coords(i);
            let inside = (0..n).all(|a| {
                let x = coords[a] as usize;
                x >= origin[a] && x < origin[a] + width
            });
            if inside {
                let lower = (coords[axis] as usize - origin[axis]) < width / 2;
                *slot += if lower { c } else { -c };
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let d = DomainSpec::new(1, 0, 2).unwrap();
        assert_eq!(generate(d, GenKind::Constant, 3.0, 0).unwrap().values(), &[3.0; 4]);
        assert_eq!(generate(d, GenKind::Spike, 1.0, 0).unwrap().values(), &[4.0, 0.0, 0.0, 0.0]);
        assert_eq!(generate(d, GenKind::Step, 1.0, 0).unwrap().values(), &[1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn seeded_and_parsable() {
        let d = DomainSpec::new(2, 0, 3).unwrap();
        for kind in GenKind::ALL {
            let a = generate(d, kind, 1.5, 7).unwrap();
            let b = generate(d, kind, 1.5, 7).unwrap();
            assert_eq!(a, b);
            assert_eq!(kind.name().parse::<GenKind>().unwrap(), kind);
        }
        assert!("wavelet".parse::<GenKind>().is_err());
        let h = generate(d, GenKind::HaarSum, 1.0, 1).unwrap();
        assert!(h.mean().abs() < 1e-12);
        assert!(h.max_abs() > 0.0);
    }
}
