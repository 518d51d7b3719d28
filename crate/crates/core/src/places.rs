//! Finite-place combinatorics: the place set S' of primes below 1/mu, the
//! multiplicative monoid N_S, Mobius weights, the varpi weight of a rational,
//! and the truncated (k, l) frequency lattices through which every adelic
//! integral is reduced to weighted real-line integrals.
//!
//! Weights are kept as exact small rationals until the final conversion.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::{self, Write};

/// Exact rational with i128 intermediates; the varpi table is tiny so this
/// never strains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rat {
    pub num: i64,
    pub den: i64,
}

impl Rat {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1);
        let sign = if (num < 0) ^ (den < 0) { -1 } else { 1 };
        Rat {
            num: sign * (num.unsigned_abs() / g) as i64,
            den: (den.unsigned_abs() / g) as i64,
        }
    }

    pub fn zero() -> Self {
        Rat { num: 0, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn mul(self, other: Rat) -> Self {
        Rat::new(self.num * other.num, self.den * other.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaceSet {
    pub mu: f64,
    /// S': sorted primes p < 1/mu.
    pub primes: Vec<u64>,
    /// rho_S = prod (1 - 1/p), rounded from the exact rational.
    pub rho: f64,
}

/// Sieve of Eratosthenes up to `n` inclusive.
fn sieve_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut is_comp = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if !is_comp[p] {
            out.push(p as u64);
            let mut q = p * p;
            while q <= n {
                is_comp[q] = true;
                q += p;
            }
        }
    }
    out
}

pub fn compute_place_set(mu: f64) -> Result<PlaceSet> {
    if !(0.0 < mu && mu < 1.0) {
        return Err(Error::InvalidMu(mu));
    }
    if mu < 1.0 / 102.0 {
        return Err(Error::MuTooSmall(mu));
    }
    // primes strictly below 1/mu
    let cutoff = (1.0 / mu).ceil() as u64 - 1;
    let primes = sieve_primes(cutoff);
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for &p in &primes {
        num *= (p - 1) as i128;
        den *= p as i128;
    }
    Ok(PlaceSet {
        mu,
        primes,
        rho: num as f64 / den as f64,
    })
}

/// All n <= bound whose prime factors all lie in `primes`, ascending.
/// Always contains 1.
pub fn enumerate_ns(primes: &[u64], bound: u64) -> Vec<u64> {
    let mut v: Vec<u64> = vec![1];
    for &p in primes {
        let mut next = v.clone();
        for &x in &v {
            let mut m = x;
            while let Some(prod) = m.checked_mul(p) {
                if prod > bound {
                    break;
                }
                next.push(prod);
                m = prod;
            }
        }
        v = next;
    }
    v.sort_unstable();
    v
}

/// N_S over u128, for far tail enumeration.
pub fn enumerate_ns_u128(primes: &[u64], bound: u128) -> Vec<u128> {
    let mut v: Vec<u128> = vec![1];
    for &p in primes {
        let p = p as u128;
        let mut next = v.clone();
        for &x in &v {
            let mut m = x;
            while let Some(prod) = m.checked_mul(p) {
                if prod > bound {
                    break;
                }
                next.push(prod);
                m = prod;
            }
        }
        v = next;
    }
    v.sort_unstable();
    v
}

/// Sum of 1/l over l in N_S with lo < l <= hi.
pub fn ns_harmonic_between(primes: &[u64], lo: u128, hi: u128) -> f64 {
    enumerate_ns_u128(primes, hi)
        .into_iter()
        .filter(|&l| l > lo)
        .map(|l| 1.0 / l as f64)
        .sum()
}

/// varpi weight of a nonzero rational gamma = num/den (not necessarily in
/// lowest terms): per place p in S', factor (1 - 1/p) when |gamma|_p <= 1,
/// (-1/p) when |gamma|_p = p, and 0 when |gamma|_p > p. The prime support of
/// gamma must lie inside S'.
pub fn varpi_weight(place_set: &PlaceSet, num: i64, den: u64) -> Result<Rat> {
    assert!(num != 0 && den != 0, "gamma must be a nonzero rational");
    let mut n = num.unsigned_abs();
    let mut d = den;
    let g = gcd(n, d).max(1);
    n /= g;
    d /= g;
    let mut w = Rat::new(1, 1);
    for &p in &place_set.primes {
        let mut vd = 0u32;
        while d % p == 0 {
            d /= p;
            vd += 1;
        }
        while n % p == 0 {
            n /= p;
        }
        w = match vd {
            0 => w.mul(Rat::new(p as i64 - 1, p as i64)),
            1 => w.mul(Rat::new(-1, p as i64)),
            _ => return Ok(Rat::zero()),
        };
    }
    if n != 1 || d != 1 {
        return Err(Error::GammaOutsidePlaces(num, den));
    }
    Ok(w)
}

/// One Mobius-weighted frequency pair: the cosine frequency is 2 pi l / k.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticePair {
    pub k: u64,
    pub l: u64,
    pub weight: f64,
}

/// Truncated frequency lattice over N_S.
///
/// In coprime mode the pairs are (k squarefree, l) with gcd(k, l) = 1 and
/// weight mu(k) / prod_{p|k} (p - 1); sums carry an extra rho_S factor per
/// reduction. In free mode the pairs range over all l in N_S with weight
/// mu(k) / k and no coprimality constraint; equal-l truncation then cancels
/// the leading 1/l tails exactly because sum_k mu(k) = 0 once S' is nonempty.
#[derive(Debug, Clone, Serialize)]
pub struct NsLattice {
    pub primes: Vec<u64>,
    pub rho: f64,
    pub coprime: bool,
    pub bound: u64,
    pub pairs: Vec<LatticePair>,
    /// h-independent factor of the truncation tail: the by-parts bound
    /// |int_1^inf h(u) cos(2 pi l v / k) du| <= C_h k / (2 pi l) summed over
    /// the dropped l > bound; multiply by C_h = |h(1)| + int |h'|.
    pub tail_factor: f64,
}

/// Squarefree elements of N_S with their Mobius sign and prod (p-1).
fn squarefree_parts(primes: &[u64]) -> Vec<(u64, i64, u64)> {
    let mut out = vec![(1u64, 1i64, 1u64)];
    for &p in primes {
        let mut next = out.clone();
        for &(k, m, t) in &out {
            next.push((k * p, -m, t * (p - 1)));
        }
        out = next;
    }
    out.sort_unstable();
    out
}

pub fn build_lattice(place_set: &PlaceSet, coprime: bool, bound: u64) -> NsLattice {
    assert!(bound >= 1);
    let ls = enumerate_ns(&place_set.primes, bound);
    let ks = squarefree_parts(&place_set.primes);
    let mut pairs = Vec::new();
    for &(k, mob, tot) in &ks {
        for &l in &ls {
            if coprime && gcd(k, l) != 1 {
                continue;
            }
            let weight = if coprime {
                Rat::new(mob, tot as i64)
            } else {
                Rat::new(mob, k as i64)
            };
            pairs.push(LatticePair {
                k,
                l,
                weight: weight.to_f64(),
            });
        }
    }
    pairs.sort_by(|a, b| (a.k, a.l).cmp(&(b.k, b.l)));

    // far-tail harmonic sum over N_S; the remainder beyond the enumeration
    // window decays geometrically and is majorized by twice the last octave
    let far = (bound as u128) << 40;
    let mut s_tail = ns_harmonic_between(&place_set.primes, bound as u128, far);
    let last_octave = ns_harmonic_between(&place_set.primes, far >> 1, far);
    s_tail += 2.0 * last_octave;
    let tail_factor: f64 = ks
        .iter()
        .map(|&(k, _m, tot)| {
            let w = if coprime {
                1.0 / tot as f64
            } else {
                1.0 / k as f64
            };
            w * k as f64 / std::f64::consts::TAU * s_tail
        })
        .sum();

    NsLattice {
        primes: place_set.primes.clone(),
        rho: place_set.rho,
        coprime,
        bound,
        pairs,
        tail_factor,
    }
}

impl NsLattice {
    /// Prefactor carried by every reduced double sum: 4 in free mode,
    /// 4 rho_S^2 in coprime mode.
    pub fn double_sum_prefactor(&self) -> f64 {
        if self.coprime {
            4.0 * self.rho * self.rho
        } else {
            4.0
        }
    }

    /// The trivial lattice {(1,1,1)}: S' = empty, archimedean place only.
    pub fn trivial() -> Self {
        NsLattice {
            primes: Vec::new(),
            rho: 1.0,
            coprime: false,
            bound: 1,
            pairs: vec![LatticePair {
                k: 1,
                l: 1,
                weight: 1.0,
            }],
            tail_factor: 0.0,
        }
    }

    /// Pairs added when the l-truncation grows from `self.bound` to `hi`.
    pub fn extension_pairs(&self, hi: u64) -> Vec<LatticePair> {
        let ls: Vec<u64> = enumerate_ns(&self.primes, hi)
            .into_iter()
            .filter(|&l| l > self.bound)
            .collect();
        let ks = squarefree_parts(&self.primes);
        let mut pairs = Vec::new();
        for &(k, mob, tot) in &ks {
            for &l in &ls {
                if self.coprime && gcd(k, l) != 1 {
                    continue;
                }
                let weight = if self.coprime {
                    Rat::new(mob, tot as i64)
                } else {
                    Rat::new(mob, k as i64)
                };
                pairs.push(LatticePair {
                    k,
                    l,
                    weight: weight.to_f64(),
                });
            }
        }
        pairs.sort_by(|a, b| (a.k, a.l).cmp(&(b.k, b.l)));
        pairs
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "k,l,weight")?;
        for p in &self.pairs {
            writeln!(w, "{},{},{}", p.k, p.l, p.weight)?;
        }
        Ok(())
    }

    /// prefactor * sum over pair pairs of w1 w2 f(k1, l1, k2, l2), evaluated
    /// in lexicographic order with a deterministic pairwise reduction; the
    /// rayon map preserves order, so the result is thread-count independent.
    pub fn weighted_double_sum<F>(&self, f: &F) -> f64
    where
        F: Fn(u64, u64, u64, u64) -> f64 + Sync,
    {
        Self::cross_sum(&self.pairs, &self.pairs, f) * self.double_sum_prefactor()
    }

    fn cross_sum<F>(a: &[LatticePair], b: &[LatticePair], f: &F) -> f64
    where
        F: Fn(u64, u64, u64, u64) -> f64 + Sync,
    {
        use rayon::prelude::*;
        let terms: Vec<f64> = a
            .par_iter()
            .map(|pa| {
                let row: Vec<f64> = b
                    .iter()
                    .map(|pb| pa.weight * pb.weight * f(pa.k, pa.l, pb.k, pb.l))
                    .collect();
                crate::quad::pairwise_sum(&row)
            })
            .collect();
        crate::quad::pairwise_sum(&terms)
    }

    /// Double sum at the lattice's own truncation plus a tail estimate read
    /// off the last octave: the same per-term values are accumulated once in
    /// full and once restricted to l <= bound/2, and twice their difference
    /// majorizes the dropped tail as long as octave contributions keep
    /// decaying at least geometrically (they decay like 1/bound here once the
    /// leading 1/l parts cancel, and faster on the trace side).
    /// Returns (value at the stated bound, tail estimate).
    pub fn weighted_double_sum_with_tail<F>(&self, f: &F) -> (f64, f64)
    where
        F: Fn(u64, u64, u64, u64) -> f64 + Sync,
    {
        use rayon::prelude::*;
        let pref = self.double_sum_prefactor();
        let half = self.bound / 2;
        let rows: Vec<(f64, f64)> = self
            .pairs
            .par_iter()
            .map(|pa| {
                let mut full = Vec::with_capacity(self.pairs.len());
                let mut sub = Vec::with_capacity(self.pairs.len());
                for pb in &self.pairs {
                    let t = pa.weight * pb.weight * f(pa.k, pa.l, pb.k, pb.l);
                    full.push(t);
                    if pa.l <= half && pb.l <= half {
                        sub.push(t);
                    }
                }
                (crate::quad::pairwise_sum(&full), crate::quad::pairwise_sum(&sub))
            })
            .collect();
        let fulls: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let subs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let value = crate::quad::pairwise_sum(&fulls) * pref;
        if self.primes.is_empty() {
            return (value, 0.0);
        }
        let sub_value = crate::quad::pairwise_sum(&subs) * pref;
        (value, 2.0 * (value - sub_value).abs() + 1e-15 * value.abs())
    }
}

/// Euler product prod_{p in S'} (1 - p^(z-1)) / (1 - p^(-z)).
pub fn euler_product(primes: &[u64], z: f64) -> f64 {
    primes
        .iter()
        .map(|&p| {
            let pf = p as f64;
            (1.0 - pf.powf(z - 1.0)) / (1.0 - pf.powf(-z))
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn place_set_examples() {
        let a = compute_place_set(0.6).unwrap();
        assert!(a.primes.is_empty());
        assert_eq!(a.rho, 1.0);
        let b = compute_place_set(0.4493).unwrap();
        assert_eq!(b.primes, vec![2]);
        assert_eq!(b.rho, 0.5);
        let c = compute_place_set(0.3).unwrap();
        assert_eq!(c.primes, vec![2, 3]);
        assert!((c.rho - 1.0 / 3.0).abs() < 1e-15);
        assert!(compute_place_set(0.0).is_err());
        assert!(compute_place_set(1.0).is_err());
        assert!(compute_place_set(1e-4).is_err());
    }

    #[test]
    fn ns_enumeration_examples() {
        assert_eq!(enumerate_ns(&[2, 3], 10), vec![1, 2, 3, 4, 6, 8, 9]);
        assert_eq!(enumerate_ns(&[], 1000), vec![1]);
        assert_eq!(enumerate_ns(&[2], 9), vec![1, 2, 4, 8]);
    }

    #[test]
    fn ns_closed_under_divisors() {
        let v = enumerate_ns(&[2, 3, 5], 400);
        for &n in &v {
            for d in 1..=n {
                if n % d == 0 {
                    assert!(v.binary_search(&d).is_ok(), "divisor {d} of {n} missing");
                }
            }
        }
    }

    #[test]
    fn varpi_examples_and_symmetry() {
        let ps = compute_place_set(0.3).unwrap(); // S' = {2,3}
        assert_eq!(varpi_weight(&ps, 1, 1).unwrap(), Rat::new(1, 3));
        assert_eq!(varpi_weight(&ps, 1, 2).unwrap(), Rat::new(-1, 3));
        assert_eq!(varpi_weight(&ps, 1, 4).unwrap(), Rat::zero());
        // varpi(gamma) = varpi(-gamma)
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let n = 1 + (rng.next_u64() % 24) as i64;
            let d = 1 + (rng.next_u64() % 24);
            if let Ok(w) = varpi_weight(&ps, n, d) {
                assert_eq!(w, varpi_weight(&ps, -n, d).unwrap());
            }
        }
        // support outside S'
        assert!(varpi_weight(&ps, 5, 1).is_err());
        assert!(varpi_weight(&ps, 1, 10).is_err());
    }

    #[test]
    fn varpi_matches_mobius_closed_form() {
        // varpi(l/k) = rho_S mu(k) / prod_{p|k}(p-1) for squarefree k,
        // gcd(l,k)=1; zero when k is not squarefree
        let ps = compute_place_set(0.18).unwrap(); // S' = {2,3,5}
        let w = varpi_weight(&ps, 5, 6).unwrap();
        // rho = (1/2)(2/3)(4/5) = 4/15; mu(6)/((2-1)(3-1)) = 1/2
        assert_eq!(w, Rat::new(4, 15).mul(Rat::new(1, 2)));
        assert_eq!(varpi_weight(&ps, 1, 12).unwrap(), Rat::zero());
    }

    #[test]
    fn lattice_trivial_and_weights() {
        let ps = compute_place_set(0.6).unwrap();
        for mode in [false, true] {
            let lat = build_lattice(&ps, mode, 64);
            assert_eq!(lat.pairs.len(), 1);
            assert_eq!(lat.pairs[0].k, 1);
            assert_eq!(lat.pairs[0].l, 1);
            assert_eq!(lat.pairs[0].weight, 1.0);
        }
        // coprime weight example: k = 6, l = 5 with S' = {2,3,5}
        let ps = compute_place_set(0.18).unwrap();
        let lat = build_lattice(&ps, true, 8);
        let pair = lat
            .pairs
            .iter()
            .find(|p| p.k == 6 && p.l == 5)
            .expect("pair (6,5) present");
        assert_eq!(pair.weight, 0.5);
    }

    #[test]
    fn tail_factor_decreases_with_bound() {
        let ps = compute_place_set(0.3).unwrap();
        let t1 = build_lattice(&ps, false, 128).tail_factor;
        let t2 = build_lattice(&ps, false, 256).tail_factor;
        let t3 = build_lattice(&ps, false, 512).tail_factor;
        assert!(t1 > t2 && t2 > t3);
        assert!(t3 > 0.0);
    }

    #[test]
    fn dirichlet_sum_equivalence_with_euler_product() {
        // rho_S sum_coprime w (k/l)^z and sum_free mu(k)/k (k/l)^z both equal
        // prod (1 - p^(z-1))/(1 - p^(-z)); far-enumerate the l tail so the
        // slowly convergent l-sum reaches the 1e-3 comparison window
        let ps = compute_place_set(0.3).unwrap();
        let far = 1u128 << 80;
        let ls = enumerate_ns_u128(&ps.primes, far);
        let ks = [(1u64, 1.0f64, 1u64), (2, -1.0, 1), (3, -1.0, 2), (6, 1.0, 2)];
        let z = 0.3;
        let mut coprime_sum = 0.0;
        let mut free_sum = 0.0;
        for &(k, mob, tot) in &ks {
            for &l in &ls {
                let lk = l as f64;
                let term = (k as f64 / lk).powf(z);
                if l % (k as u128) != 0 || k == 1 {
                    // gcd test only matters for k sharing factors with l
                }
                if gcd_u128(k as u128, l) == 1 {
                    coprime_sum += mob / tot as f64 * term;
                }
                free_sum += mob / k as f64 * term;
            }
        }
        let target = euler_product(&ps.primes, z);
        assert!(
            (ps.rho * coprime_sum - target).abs() < 1e-3,
            "coprime {} vs {target}",
            ps.rho * coprime_sum
        );
        assert!(
            (free_sum - target).abs() < 1e-3,
            "free {free_sum} vs {target}"
        );
        // five random exponents in (0, 1/2), consistency between the two
        // conventions within the truncation tail of the l-sum: lattice points
        // with log l > log X contribute about
        // e^(-z log X) (log X / z + 1/z^2) / (log 2 log 3)
        let mut rng = SplitMix64::new(11);
        let lx = 80.0 * 2.0f64.ln();
        for _ in 0..5 {
            let z = 0.05 + 0.4 * rng.next_f64();
            let tail = (-z * lx).exp() * (lx / z + 1.0 / (z * z)) / (2.0f64.ln() * 3.0f64.ln());
            let mut cs = 0.0;
            let mut fs = 0.0;
            for &(k, mob, tot) in &ks {
                for &l in &ls {
                    let term = (k as f64 / l as f64).powf(z);
                    if gcd_u128(k as u128, l) == 1 {
                        cs += mob / tot as f64 * term;
                    }
                    fs += mob / k as f64 * term;
                }
            }
            let tol = 6.0 * tail + 1e-10;
            assert!(
                (ps.rho * cs - fs).abs() < tol,
                "z={z}: {} vs {fs} (tol {tol:e})",
                ps.rho * cs
            );
        }
    }

    fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
}
