//! Sampled configurations and pointwise ergodic averages along an
//! integer direction.
//!
//! The orbit evaluator re-applies `T^m` per step and reads the indicator
//! cells through the accumulated shift, so memory stays at two rows.
//! Binary alphabets run bit-packed.

use crate::cylinder::{cylinder_measure, Cylinder};
use crate::error::{Error, Result};
use crate::packed::PackedStepper;
use crate::rng::{derive_seed, SplitMix64};
use crate::rule::LocalRule;
use crate::types::{ActionIndex, Interval, Modulus};
use crate::window::WindowConfig;

/// I.i.d. uniform symbols on an interval from the documented
/// deterministic generator.
pub fn sample_config(seed: u64, interval: Interval, modulus: Modulus) -> WindowConfig {
    let mut rng = SplitMix64::new(seed);
    let symbols = rng.symbols(modulus.get(), interval.len());
    WindowConfig::new(interval.lo, symbols, modulus).expect("symbols in range")
}

/// Window needed to evaluate `n_terms` orbit points of direction `dir`
/// against an indicator on `b_interval`.
pub fn orbit_window_requirement(
    dir: ActionIndex,
    b_interval: Interval,
    n_terms: u64,
    rule: &LocalRule,
) -> Interval {
    let last = n_terms.saturating_sub(1) as i64;
    let lo_rate = dir.n + dir.m as i64 * rule.min_dep();
    let hi_rate = dir.n + dir.m as i64 * rule.max_dep();
    Interval::new(
        b_interval.lo + (last * lo_rate).min(0),
        b_interval.hi + (last * hi_rate).max(0),
    )
}

/// Running ergodic averages of a cylinder indicator along one orbit.
#[derive(Debug, Clone)]
pub struct OrbitStats {
    pub seed: Option<u64>,
    pub direction: ActionIndex,
    pub horizon: u64,
    /// Number of orbit points inside the cylinder.
    pub hits: u64,
    pub final_average: f64,
    /// `A_t` for `t = 1 ..= horizon`.
    pub running: Vec<f64>,
}

/// `A_t = (1/t) sum_{k<t} 1_B(Phi^{(km,kn)} x)` for `t <= n_terms`.
pub fn birkhoff_average(
    x: &WindowConfig,
    dir: ActionIndex,
    b: &Cylinder,
    n_terms: u64,
    rule: &LocalRule,
) -> Result<OrbitStats> {
    let (hits, running) = orbit_scan(x, dir, b, n_terms, rule, true)?;
    let running = running.expect("recording requested");
    Ok(OrbitStats {
        seed: None,
        direction: dir,
        horizon: n_terms,
        hits,
        final_average: hits as f64 / n_terms as f64,
        running,
    })
}

fn orbit_scan(
    x: &WindowConfig,
    dir: ActionIndex,
    b: &Cylinder,
    n_terms: u64,
    rule: &LocalRule,
    record_running: bool,
) -> Result<(u64, Option<Vec<f64>>)> {
    if n_terms == 0 {
        return Err(Error::Parse("orbit needs at least one term".into()));
    }
    let need = orbit_window_requirement(dir, b.interval(), n_terms, rule);
    let have = x
        .interval()
        .ok_or(Error::WindowTooSmall {
            have: Interval::new(x.lo(), x.lo()),
            need,
        })?;
    if !have.contains_interval(need) {
        return Err(Error::WindowTooSmall { have, need });
    }

    let binary = rule.modulus().get() == 2;
    let mut hits = 0u64;
    let mut running = record_running.then(|| Vec::with_capacity(n_terms as usize));

    if binary {
        let offsets = rule.odd_offsets();
        let mut stepper = PackedStepper::new(x.symbols(), &offsets);
        // cells above this index stop being meaningful as the row
        // advances; shrinking the stepped prefix accordingly halves the
        // total word work over the horizon
        let mut active = x.len() as i64;
        let shrink = rule.max_dep().max(0);
        for k in 0..n_terms {
            let shift = k as i64 * dir.n;
            let inside = b.interval().iter().zip(b.symbols()).all(|(i, &want)| {
                let j = (i + shift - x.lo()) as usize;
                stepper.get(j) == want
            });
            if inside {
                hits += 1;
            }
            if let Some(r) = running.as_mut() {
                r.push(hits as f64 / (k + 1) as f64);
            }
            if k + 1 < n_terms {
                for _ in 0..dir.m {
                    active -= shrink;
                    stepper.step_prefix(active.max(0) as usize);
                }
            }
        }
    } else {
        let a = rule.modulus().get();
        let coeffs = rule.dep_coeffs().to_vec();
        let min_dep = rule.min_dep();
        let len = x.len() as i64;
        let mut cur = x.symbols().to_vec();
        let mut next = vec![0u8; x.len()];
        for k in 0..n_terms {
            let shift = k as i64 * dir.n;
            let inside = b.interval().iter().zip(b.symbols()).all(|(i, &want)| {
                cur[(i + shift - x.lo()) as usize] == want
            });
            if inside {
                hits += 1;
            }
            if let Some(r) = running.as_mut() {
                r.push(hits as f64 / (k + 1) as f64);
            }
            if k + 1 < n_terms {
                for _ in 0..dir.m {
                    for j in 0..len {
                        let mut acc = 0u32;
                        for (t, &c) in coeffs.iter().enumerate() {
                            let i = j + min_dep + t as i64;
                            if i >= 0 && i < len {
                                acc += c as u32 * cur[i as usize] as u32;
                            }
                        }
                        next[j as usize] = (acc % a) as u8;
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
            }
        }
    }
    Ok((hits, running))
}

/// One seed's contribution to a frequency report.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub final_average: f64,
    pub deviation: f64,
}

/// Aggregate of per-seed final deviations `|A_N - mu(B)|`.
#[derive(Debug, Clone)]
pub struct FrequencyAggregate {
    pub direction: ActionIndex,
    pub horizon: u64,
    pub expected: f64,
    pub tolerance: f64,
    pub outcomes: Vec<SeedOutcome>,
    pub within_tolerance: usize,
}

impl FrequencyAggregate {
    pub fn pass_fraction(&self) -> f64 {
        self.within_tolerance as f64 / self.outcomes.len() as f64
    }
}

/// Evaluate the orbit average for many seeds; seeds are derived from the
/// master seed with the `"orbit"` experiment label.
pub fn orbit_frequency_report(
    master_seed: u64,
    seed_count: u64,
    dir: ActionIndex,
    b: &Cylinder,
    n_terms: u64,
    rule: &LocalRule,
    tolerance: f64,
) -> Result<FrequencyAggregate> {
    let expected = cylinder_measure(b, rule.modulus()).to_f64();
    let window = orbit_window_requirement(dir, b.interval(), n_terms, rule);
    let seeds: Vec<u64> = (0..seed_count)
        .map(|i| derive_seed(master_seed, "orbit", i))
        .collect();

    let run_one = |&seed: &u64| -> Result<SeedOutcome> {
        let x = sample_config(seed, window, rule.modulus());
        let (hits, _) = orbit_scan(&x, dir, b, n_terms, rule, false)?;
        let final_average = hits as f64 / n_terms as f64;
        Ok(SeedOutcome {
            seed,
            final_average,
            deviation: (final_average - expected).abs(),
        })
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<SeedOutcome> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run_one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<SeedOutcome> = seeds.iter().map(run_one).collect::<Result<_>>()?;

    let within_tolerance = outcomes.iter().filter(|o| o.deviation < tolerance).count();
    Ok(FrequencyAggregate {
        direction: dir,
        horizon: n_terms,
        expected,
        tolerance,
        outcomes,
        within_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> Modulus {
        Modulus::new(2).unwrap()
    }

    fn rule90() -> LocalRule {
        LocalRule::new(2, &[1, 0, 1]).unwrap()
    }

    fn right_pair() -> LocalRule {
        LocalRule::new(2, &[0, 1, 1]).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let iv = Interval::new(-5, 20);
        let a = sample_config(99, iv, m2());
        let b = sample_config(99, iv, m2());
        assert_eq!(a, b);
        let c = sample_config(100, iv, m2());
        assert_ne!(a, c);
    }

    #[test]
    fn zero_configuration_always_hits_zero_cylinder() {
        let dir = ActionIndex::new(1, 1);
        let b = Cylinder::new(0, vec![0], m2()).unwrap();
        let need = orbit_window_requirement(dir, b.interval(), 50, &rule90());
        let x = WindowConfig::new(need.lo, vec![0; need.len()], m2()).unwrap();
        let stats = birkhoff_average(&x, dir, &b, 50, &rule90()).unwrap();
        assert_eq!(stats.hits, 50);
        assert!(stats.running.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn alternating_configuration_under_pure_shift() {
        let dir = ActionIndex::new(0, 1);
        let b = Cylinder::new(0, vec![0], m2()).unwrap();
        let need = orbit_window_requirement(dir, b.interval(), 40, &rule90());
        let symbols: Vec<u8> = (0..need.len()).map(|i| (i % 2) as u8).collect();
        // x[0] = 0 at even offsets from need.lo iff need.lo is even; force
        // a window starting at 0 instead
        let x = WindowConfig::new(0, symbols, m2()).unwrap();
        let stats = birkhoff_average(&x, dir, &b, 40, &rule90()).unwrap();
        for (t, &avg) in stats.running.iter().enumerate() {
            let t = t + 1;
            if t % 2 == 0 {
                assert_eq!(avg, 0.5, "t = {t}");
            }
        }
    }

    #[test]
    fn packed_and_generic_orbits_agree() {
        // force the generic path with an equivalent mod-3 rule that only
        // uses binary symbols? simpler: compare the packed run against a
        // direct evaluation through eval_coordinate
        let dir = ActionIndex::new(1, 1);
        let b = Cylinder::new(0, vec![0], m2()).unwrap();
        let n_terms = 12;
        let need = orbit_window_requirement(dir, b.interval(), n_terms, &right_pair());
        let x = sample_config(7, need, m2());
        let stats = birkhoff_average(&x, dir, &b, n_terms, &right_pair()).unwrap();
        let mut hits = 0;
        for k in 0..n_terms {
            let act = ActionIndex::new(dir.m * k, dir.n * k as i64);
            let v = crate::window::eval_coordinate(&x, act, &right_pair(), 0).unwrap();
            if v == 0 {
                hits += 1;
            }
        }
        assert_eq!(stats.hits, hits);
    }

    #[test]
    fn window_requirement_is_enforced() {
        let dir = ActionIndex::new(1, 1);
        let b = Cylinder::new(0, vec![0], m2()).unwrap();
        let x = WindowConfig::new(0, vec![0; 10], m2()).unwrap();
        let err = birkhoff_average(&x, dir, &b, 50, &right_pair()).unwrap_err();
        match err {
            Error::WindowTooSmall { need, .. } => {
                assert_eq!(need, Interval::new(0, 98));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn averages_stay_in_unit_interval_and_counts_are_integral() {
        let dir = ActionIndex::new(1, 0);
        let b = Cylinder::new(0, vec![1, 0], m2()).unwrap();
        let need = orbit_window_requirement(dir, b.interval(), 30, &rule90());
        let x = sample_config(11, need, m2());
        let stats = birkhoff_average(&x, dir, &b, 30, &rule90()).unwrap();
        for (t, &avg) in stats.running.iter().enumerate() {
            assert!((0.0..=1.0).contains(&avg));
            let count = avg * (t as f64 + 1.0);
            assert!((count - count.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_seed_aggregate_degenerates_to_one_orbit() {
        let dir = ActionIndex::new(1, 1);
        let b = Cylinder::new(0, vec![0], m2()).unwrap();
        let agg = orbit_frequency_report(41, 1, dir, &b, 800, &right_pair(), 0.05).unwrap();
        let seed = crate::rng::derive_seed(41, "orbit", 0);
        let window = orbit_window_requirement(dir, b.interval(), 800, &right_pair());
        let x = sample_config(seed, window, m2());
        let stats = birkhoff_average(&x, dir, &b, 800, &right_pair()).unwrap();
        assert_eq!(agg.outcomes[0].final_average, stats.final_average);
    }

    #[test]
    fn frequency_report_runs_and_aggregates() {
        let dir = ActionIndex::new(1, 1);
        let b = Cylinder::new(0, vec![0], m2()).unwrap();
        let agg =
            orbit_frequency_report(5, 8, dir, &b, 2000, &right_pair(), 0.05).unwrap();
        assert_eq!(agg.outcomes.len(), 8);
        assert!(agg.within_tolerance >= 6, "{agg:?}");
        // deterministic across calls
        let again =
            orbit_frequency_report(5, 8, dir, &b, 2000, &right_pair(), 0.05).unwrap();
        assert_eq!(agg.outcomes, again.outcomes);
    }
}
