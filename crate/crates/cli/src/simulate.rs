//! Monte Carlo play of a mechanism.
//!
//! Samples are split over [`SHARDS`] ChaCha8 streams that share the seed and
//! differ in stream number, so the estimate depends only on `(samples, seed)`
//! and not on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use riskauction_core::virtual_value::allocation_classes;
use riskauction_core::{DirectMechanism, Instance, Mechanism, MenuOption, Result};
use serde::Serialize;

pub const SHARDS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * w,
        }
    }
}

/// How one sampled profile is played.
enum Player<'a> {
    /// Value index -> menu option, for single-buyer mechanisms.
    Options(Vec<MenuOption>),
    LoserPay {
        classes: Vec<Option<usize>>,
        q: &'a [f64],
    },
    /// Per-buyer outcome lotteries drawn from the table marginals.
    Table(&'a DirectMechanism),
}

fn player<'a>(mech: &'a Mechanism, inst: &Instance) -> Result<Player<'a>> {
    // Validates the mechanism against the instance.
    mech.to_direct(inst)?;
    Ok(match mech {
        Mechanism::PostedPrice(m) => Player::Options(
            (0..inst.k())
                .map(|k| {
                    if k >= m.v_star_index {
                        MenuOption { x: 1.0, w1: m.p_high, w0: 0.0 }
                    } else {
                        MenuOption::NULL
                    }
                })
                .collect(),
        ),
        Mechanism::Menu(m) => Player::Options((0..inst.k()).map(|k| m.chosen(k)).collect()),
        Mechanism::LoserPay(m) => Player::LoserPay {
            classes: allocation_classes(&m.phi_ironed, m.reserve_index),
            q: &m.q,
        },
        Mechanism::Direct(d) => Player::Table(d),
    })
}

fn draw_value(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl Player<'_> {
    fn play(&self, inst: &Instance, profile: &[usize], rng: &mut ChaCha8Rng) -> f64 {
        let z = inst.z_max();
        match self {
            Player::Options(opts) => {
                let o = opts[profile[0]];
                let pay = if rng.gen::<f64>() < o.x { o.w1 } else { o.w0 };
                if rng.gen::<f64>() < pay {
                    z
                } else {
                    0.0
                }
            }
            Player::LoserPay { classes, q } => {
                let best = profile.iter().filter_map(|&k| classes[k]).max();
                let winner = best.map(|b| {
                    let tied: Vec<usize> = (0..profile.len()).filter(|&i| classes[profile[i]] == Some(b)).collect();
                    tied[rng.gen_range(0..tied.len())]
                });
                let mut revenue = 0.0;
                for (i, &k) in profile.iter().enumerate() {
                    if Some(i) != winner && rng.gen::<f64>() < q[k] {
                        revenue += z;
                    }
                }
                revenue
            }
            Player::Table(d) => {
                let profiles = inst.profiles();
                let p = profiles.encode(profile);
                let mut revenue = 0.0;
                for i in 0..inst.n() {
                    let mut u: f64 = rng.gen();
                    for j in 0..inst.m() {
                        let mass = d.y1[i][j][p] + d.y0[i][j][p];
                        if u < mass {
                            revenue += inst.payments()[j];
                            break;
                        }
                        u -= mass;
                    }
                }
                revenue
            }
        }
    }
}

/// Mean revenue of `mech` over `samples` value profiles drawn from the
/// instance prior, with its standard error.
pub fn simulate(inst: &Instance, mech: &Mechanism, samples: u64, seed: u64) -> Result<Estimate> {
    let player = player(mech, inst)?;
    let mut cdf: Vec<f64> = inst
        .pmf()
        .iter()
        .scan(0.0, |acc, &f| {
            *acc += f;
            Some(*acc)
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = f64::INFINITY;
    }
    let shards: Vec<Moments> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let count = samples / SHARDS + u64::from(s < samples % SHARDS);
            let mut profile = vec![0; inst.n()];
            let mut acc = Moments::default();
            for _ in 0..count {
                for k in profile.iter_mut() {
                    *k = draw_value(&cdf, &mut rng);
                }
                acc.push(player.play(inst, &profile, &mut rng));
            }
            acc
        })
        .collect();
    let total = shards.into_iter().fold(Moments::default(), Moments::merge);
    let variance = if total.count > 1 { total.m2 / (total.count - 1) as f64 } else { 0.0 };
    Ok(Estimate {
        samples,
        seed,
        mean: total.mean,
        std_error: (variance / total.count.max(1) as f64).sqrt(),
    })
}
