//! DistributeThree sums over latent triples.
//!
//! A DistributeThree rule couples all lines through one shared triple `T`:
//!
//! ```text
//! score = Σ_T perm(line1, T) · perm(line2, T) · pairs(partial, T)
//! ```
//!
//! where `perm` sums the probabilities of the six orderings of `T` along a
//! complete line and `pairs` sums the six ordered distinct pairs of `T` on the
//! partial line. Expanding the permanents turns the sum over unordered triples
//! into 36 sums over ordered distinct triples of a product `f(x) g(y) h(z)`,
//! each evaluated in O(M) by inclusion–exclusion. Small spaces enumerate the
//! triples directly instead, which avoids the cancellation in the subtraction.

use crate::logspace::{log_sum_exp, LogAccumulator};

/// Spaces up to this size enumerate triples explicitly.
pub(crate) const ENUMERATION_LIMIT: usize = 64;

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Enumerate,
    Factored,
}

/// A log distribution rescaled so its maximum is 1, plus the log of the scale.
struct Scaled {
    values: Vec<f64>,
    log_scale: f64,
}

impl Scaled {
    fn new(log_probs: &[f64]) -> Self {
        let max = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Scaled {
                values: vec![0.0; log_probs.len()],
                log_scale: f64::NEG_INFINITY,
            };
        }
        Scaled {
            values: log_probs.iter().map(|&l| (l - max).exp()).collect(),
            log_scale: max,
        }
    }
}

/// `Σ_{x,y,z pairwise distinct} f(x) g(y) h(z)`, clamped at zero.
fn distinct_triple_sum(f: &[f64], g: &[f64], h: &[f64]) -> f64 {
    let (mut sf, mut sg, mut sh) = (0.0, 0.0, 0.0);
    let (mut sfg, mut sfh, mut sgh, mut sfgh) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..f.len() {
        let (a, b, c) = (f[i], g[i], h[i]);
        sf += a;
        sg += b;
        sh += c;
        sfg += a * b;
        sfh += a * c;
        sgh += b * c;
        sfgh += a * b * c;
    }
    let v = sf * sg * sh - sfg * sh - sfh * sg - sgh * sf + 2.0 * sfgh;
    v.max(0.0)
}

fn product(parts: &[&[f64]], len: usize) -> Vec<f64> {
    let mut out = vec![1.0; len];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p.iter()) {
            *o *= v;
        }
    }
    out
}

/// Log of the DistributeThree score.
pub fn log_score(
    lines: [[&[f64]; 3]; 2],
    partial: [&[f64]; 2],
    strategy: Strategy,
) -> f64 {
    let m = partial[0].len();
    if m < 3 {
        return f64::NEG_INFINITY;
    }
    let enumerate = match strategy {
        Strategy::Auto => m <= ENUMERATION_LIMIT,
        Strategy::Enumerate => true,
        Strategy::Factored => false,
    };
    if enumerate {
        let mut acc = LogAccumulator::new();
        for_each_triple(m, |t| {
            acc.add(log_perm(lines[0], t) + log_perm(lines[1], t) + log_pairs(partial, t));
        });
        return acc.value();
    }
    let a: Vec<Scaled> = lines[0].iter().map(|d| Scaled::new(d)).collect();
    let b: Vec<Scaled> = lines[1].iter().map(|d| Scaled::new(d)).collect();
    let q: Vec<Scaled> = partial.iter().map(|d| Scaled::new(d)).collect();
    let offset: f64 = a.iter().chain(&b).chain(&q).map(|s| s.log_scale).sum();
    if offset == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // element k of the ordered triple sits in column k of line 1, column
    // sigma[k] of line 2, and fills partial position i / j
    let mut total = 0.0;
    for sigma in PERMS {
        let base: Vec<Vec<f64>> = (0..3)
            .map(|k| product(&[&a[k].values, &b[sigma[k]].values], m))
            .collect();
        for (i, j) in PAIRS {
            let phi: Vec<Vec<f64>> = (0..3)
                .map(|k| {
                    if k == i {
                        product(&[&base[k], &q[0].values], m)
                    } else if k == j {
                        product(&[&base[k], &q[1].values], m)
                    } else {
                        base[k].clone()
                    }
                })
                .collect();
            total += distinct_triple_sum(&phi[0], &phi[1], &phi[2]);
        }
    }
    total.ln() + offset
}

fn for_each_triple(m: usize, mut visit: impl FnMut([usize; 3])) {
    for x in 0..m {
        for y in x + 1..m {
            for z in y + 1..m {
                visit([x, y, z]);
            }
        }
    }
}

/// Log-sum over the six orderings of `t` along a complete line.
fn log_perm(line: [&[f64]; 3], t: [usize; 3]) -> f64 {
    let terms = PERMS.map(|p| line[0][t[p[0]]] + line[1][t[p[1]]] + line[2][t[p[2]]]);
    log_sum_exp(&terms)
}

fn log_pairs(partial: [&[f64]; 2], t: [usize; 3]) -> f64 {
    let terms = PAIRS.map(|(i, j)| partial[0][t[i]] + partial[1][t[j]]);
    log_sum_exp(&terms)
}

/// Posterior over latent triples given the two complete lines:
/// `π(T) ∝ perm(line1, T) · perm(line2, T)`.
///
/// Stored in factored form (the six line distributions); weights are
/// evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct TriplePosterior {
    lines: [[Vec<f64>; 3]; 2],
}

impl TriplePosterior {
    pub fn new(lines: [[Vec<f64>; 3]; 2]) -> Self {
        TriplePosterior { lines }
    }

    pub fn space_len(&self) -> usize {
        self.lines[0][0].len()
    }

    fn line(&self, l: usize) -> [&[f64]; 3] {
        [&self.lines[l][0], &self.lines[l][1], &self.lines[l][2]]
    }

    /// Unnormalized log weight of the triple with the given value indices.
    pub fn log_weight(&self, t: [usize; 3]) -> f64 {
        log_perm(self.line(0), t) + log_perm(self.line(1), t)
    }

    /// Log of `Σ_T perm(line1, T) · perm(line2, T)`.
    pub fn log_normalizer(&self) -> f64 {
        let m = self.space_len();
        if m < 3 {
            return f64::NEG_INFINITY;
        }
        if m <= ENUMERATION_LIMIT {
            let mut acc = LogAccumulator::new();
            for_each_triple(m, |t| acc.add(self.log_weight(t)));
            return acc.value();
        }
        let a: Vec<Scaled> = self.lines[0].iter().map(|d| Scaled::new(d)).collect();
        let b: Vec<Scaled> = self.lines[1].iter().map(|d| Scaled::new(d)).collect();
        let offset: f64 = a.iter().chain(&b).map(|s| s.log_scale).sum();
        if offset == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let total: f64 = PERMS
            .iter()
            .map(|sigma| {
                let phi: Vec<Vec<f64>> = (0..3)
                    .map(|k| product(&[&a[k].values, &b[sigma[k]].values], m))
                    .collect();
                distinct_triple_sum(&phi[0], &phi[1], &phi[2])
            })
            .sum();
        total.ln() + offset
    }

    /// Unnormalized log mass on each completing value of the partial line,
    /// `Σ_T π(T) Σ_{(u,v) ⊂ T, w = T \ {u,v}} q1(u) q2(v)`, with π normalized.
    pub fn complete(&self, q1: &[f64], q2: &[f64], strategy: Strategy) -> Vec<f64> {
        let m = self.space_len();
        let z = self.log_normalizer();
        if z == f64::NEG_INFINITY {
            return vec![f64::NEG_INFINITY; m];
        }
        let enumerate = match strategy {
            Strategy::Auto => m <= ENUMERATION_LIMIT,
            Strategy::Enumerate => true,
            Strategy::Factored => false,
        };
        if enumerate {
            let mut acc = vec![LogAccumulator::new(); m];
            for_each_triple(m, |t| {
                let w = self.log_weight(t) - z;
                if w == f64::NEG_INFINITY {
                    return;
                }
                for (i, j) in PAIRS {
                    let rest = 3 - i - j;
                    acc[t[rest]].add(w + q1[t[i]] + q2[t[j]]);
                }
            });
            return acc.iter().map(|a| a.value()).collect();
        }
        let a: Vec<Scaled> = self.lines[0].iter().map(|d| Scaled::new(d)).collect();
        let b: Vec<Scaled> = self.lines[1].iter().map(|d| Scaled::new(d)).collect();
        let q = [Scaled::new(q1), Scaled::new(q2)];
        let offset: f64 = a.iter().chain(&b).chain(&q).map(|s| s.log_scale).sum::<f64>() - z;
        if offset == f64::NEG_INFINITY {
            return vec![f64::NEG_INFINITY; m];
        }
        let mut out = vec![0.0; m];
        // element 0 fills partial column 0, element 1 partial column 1,
        // element 2 is the completion; rho/sigma place them on the full lines
        for rho in PERMS {
            for sigma in PERMS {
                let f = product(&[&q[0].values, &a[rho[0]].values, &b[sigma[0]].values], m);
                let g = product(&[&q[1].values, &a[rho[1]].values, &b[sigma[1]].values], m);
                let h = product(&[&a[rho[2]].values, &b[sigma[2]].values], m);
                let (sf, sg): (f64, f64) = (f.iter().sum(), g.iter().sum());
                let sfg: f64 = f.iter().zip(&g).map(|(x, y)| x * y).sum();
                for w in 0..m {
                    if h[w] == 0.0 {
                        continue;
                    }
                    let pairs = (sf - f[w]) * (sg - g[w]) - (sfg - f[w] * g[w]);
                    out[w] += h[w] * pairs.max(0.0);
                }
            }
        }
        out.iter().map(|&v| v.ln() + offset).collect()
    }
}
