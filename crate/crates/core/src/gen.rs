//! Random instance generation with an optionally planted optimum.
//!
//! A solvable instance carries one deliberately planted advancing chain of
//! the requested length plus density-controlled decoy transitions whose
//! jumps are capped so no shorter route can exist. The generator verifies
//! the resulting optimum before returning and retries deterministically if
//! a decoy combination undercut the plant, so identical parameters always
//! produce identical files.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    shortest_success_path, Instance, ResponseTable, TransitionTable,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator params: {0}")]
    InvalidParams(String),
    #[error("could not plant an optimum of length {requested} in {attempts} attempts")]
    CannotPlant { requested: u32, attempts: u32 },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub strategies: u32,
    pub threshold: u32,
    pub seed: u64,
    /// Plant a guaranteed-reachable goal.
    pub solvable: bool,
    /// Requested optimum length when planting; defaults to the threshold.
    pub opt_len: u32,
    /// Probability that a decoy transition advances.
    pub density: f64,
    pub monotone: bool,
}

impl GenParams {
    pub fn new(strategies: u32, threshold: u32, seed: u64) -> Self {
        Self {
            strategies,
            threshold,
            seed,
            solvable: false,
            opt_len: threshold,
            density: 0.3,
            monotone: true,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidParams(msg));
        if self.strategies < 1 {
            return bad("strategies must be >= 1".into());
        }
        if self.threshold < 1 {
            return bad("threshold must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad(format!("density {} outside [0,1]", self.density));
        }
        if self.solvable {
            if self.opt_len < 1 || self.opt_len > self.threshold {
                return bad(format!(
                    "opt_len {} must be in 1..=threshold ({})",
                    self.opt_len, self.threshold
                ));
            }
            if self.opt_len > self.strategies {
                return bad(format!(
                    "opt_len {} needs at least that many strategies (have {})",
                    self.opt_len, self.strategies
                ));
            }
        }
        Ok(())
    }
}

/// Sidecar record describing what was planted and what the instance's true
/// optimum verified to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedOptimum {
    pub params: GenParams,
    pub planted_steps: Option<Vec<u32>>,
    pub verified_optimum: Option<u32>,
}

fn response_level(s: u32, a: u32) -> u8 {
    if s == a {
        5
    } else if s == 0 {
        1
    } else {
        (1 + (3 * s + a - 1) / a).clamp(2, 4) as u8
    }
}

pub fn generate_instance(params: &GenParams) -> Result<(Instance, PlantedOptimum), GenError> {
    params.validate()?;
    let n = params.strategies;
    let a = params.threshold;
    let jump_cap = if params.solvable {
        a.div_ceil(params.opt_len)
    } else {
        1
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    const MAX_ATTEMPTS: u32 = 50;
    for _attempt in 0..MAX_ATTEMPTS {
        // Decoy layer: each sub-threshold transition advances with the
        // configured density, by a jump the cap keeps honest.
        let mut raws = vec![0u32; (n as usize + 1) * (a as usize + 1) * n as usize];
        let mut idx = 0;
        for _v in 0..=n {
            for s in 0..=a {
                for _u in 0..n {
                    let advance = s < a && rng.random::<f64>() < params.density;
                    raws[idx] = if advance {
                        s + rng.random_range(1..=jump_cap)
                    } else {
                        s
                    };
                    idx += 1;
                }
            }
        }
        let cell = |v: u32, s: u32, u: u32| {
            ((v as usize * (a as usize + 1)) + s as usize) * n as usize + u as usize
        };

        let planted_steps = if params.solvable {
            // Plant a chain of distinct strategies whose increments sum to
            // the threshold, none exceeding the decoy jump cap.
            let k = params.opt_len;
            let picks = rand::seq::index::sample(&mut rng, n as usize, k as usize);
            let steps: Vec<u32> = picks.iter().map(|i| i as u32).collect();
            let base = a / k;
            let rem = a % k;
            let mut level = 0u32;
            let mut prev = n; // origin row
            for (i, &w) in steps.iter().enumerate() {
                let inc = if (i as u32) < rem { base + 1 } else { base };
                raws[cell(prev, level, w)] = level + inc;
                level += inc;
                prev = w;
            }
            debug_assert_eq!(level, a);
            Some(steps)
        } else {
            None
        };

        let mut entries = Vec::with_capacity(raws.len());
        for v in 0..=n {
            for s in 0..=a {
                for u in 0..n {
                    entries.push((v, s, u, raws[cell(v, s, u)]));
                }
            }
        }
        let table = TransitionTable::from_entries(n, a, &entries)?;
        let mut resp = Vec::new();
        for v in 0..n {
            for s in 0..=a {
                resp.push((v, s, response_level(s, a)));
            }
        }
        let instance = Instance {
            strategy_count: n,
            threshold: a,
            monotone: params.monotone,
            table,
            responses: Some(ResponseTable::from_entries(n, a, &resp)?),
        };

        let verified = shortest_success_path(&instance.graph()?).map(|p| p.len() as u32);
        if params.solvable {
            if verified == Some(params.opt_len) {
                return Ok((
                    instance,
                    PlantedOptimum {
                        params: params.clone(),
                        planted_steps,
                        verified_optimum: verified,
                    },
                ));
            }
            // A decoy combination beat the plant; redraw everything from the
            // continuing stream.
            continue;
        }
        return Ok((
            instance,
            PlantedOptimum {
                params: params.clone(),
                planted_steps: None,
                verified_optimum: verified,
            },
        ));
    }
    Err(GenError::CannotPlant {
        requested: params.opt_len,
        attempts: MAX_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::bfs_search;
    use crate::oracle::{OracleBudget, TabularOracle};
    use crate::trace::SearchStatus;

    #[test]
    fn planted_optimum_matches_bfs() {
        let mut params = GenParams::new(4, 3, 7);
        params.solvable = true;
        params.opt_len = 3;
        let (instance, sidecar) = generate_instance(&params).unwrap();
        assert_eq!(sidecar.verified_optimum, Some(3));
        let result = bfs_search(&instance.graph().unwrap(), &OracleBudget::new(100_000));
        assert_eq!(result.status, SearchStatus::Success);
        assert_eq!(result.path.unwrap().len(), 3);
    }

    #[test]
    fn generation_is_deterministic() {
        let mut params = GenParams::new(5, 4, 99);
        params.solvable = true;
        params.density = 0.5;
        params.opt_len = 4;
        let (i1, s1) = generate_instance(&params).unwrap();
        let (i2, s2) = generate_instance(&params).unwrap();
        assert_eq!(i1.to_canonical_string(), i2.to_canonical_string());
        assert_eq!(s1, s2);
    }

    #[test]
    fn generated_files_are_valid_oracles() {
        for seed in 0..10u64 {
            let mut params = GenParams::new(6, 4, seed);
            params.solvable = true;
            params.opt_len = 4;
            params.density = 0.5;
            let (instance, _) = generate_instance(&params).unwrap();
            let text = instance.to_canonical_string();
            let reparsed = Instance::parse(&text).unwrap();
            TabularOracle::new(&reparsed).unwrap();
            assert_eq!(reparsed.to_canonical_string(), text);
        }
    }

    #[test]
    fn short_plants_respect_requested_length() {
        // opt_len 2 with threshold 4 forces jumps of 2; the verify loop must
        // still deliver an exact optimum.
        let mut params = GenParams::new(6, 4, 3);
        params.solvable = true;
        params.opt_len = 2;
        params.density = 0.2;
        let (instance, sidecar) = generate_instance(&params).unwrap();
        assert_eq!(sidecar.verified_optimum, Some(2));
        let result = bfs_search(&instance.graph().unwrap(), &OracleBudget::new(100_000));
        assert_eq!(result.path.unwrap().len(), 2);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(matches!(
            generate_instance(&GenParams::new(0, 3, 0)),
            Err(GenError::InvalidParams(_))
        ));
        assert!(matches!(
            generate_instance(&GenParams::new(3, 0, 0)),
            Err(GenError::InvalidParams(_))
        ));
        let mut params = GenParams::new(3, 4, 0);
        params.solvable = true;
        params.opt_len = 5;
        assert!(matches!(
            generate_instance(&params),
            Err(GenError::InvalidParams(_))
        ));
    }
}
