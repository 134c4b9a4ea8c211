//! One-parameter families `y^2 = f(x, t)` over the rationals and their
//! reductions modulo good primes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poly::{discriminant, Poly};
use crate::primes::{inv_mod, is_prime, mul_mod, reduce_i64, sub_mod, PrimeFieldCtx};

/// Largest supported x-degree.
pub const MAX_DEGREE: usize = 6;

/// Built-in families, by name, as config text.
pub const CORPUS: &[(&str, &str)] = &[
    (
        "legendre",
        "# y^2 = x(x - 1)(x - t)\n\
         name = legendre\n\
         degree_x = 3\n\
         coeff.0 = 0\n\
         coeff.1 = 0, 1\n\
         coeff.2 = -1, -1\n\
         coeff.3 = 1\n",
    ),
    (
        "f1",
        "# y^2 = x^3 + x + t^2, section (0, t)\n\
         name = f1\n\
         degree_x = 3\n\
         coeff.0 = 0, 0, 1\n\
         coeff.1 = 1\n\
         coeff.2 = 0\n\
         coeff.3 = 1\n",
    ),
    (
        "g2s",
        "# y^2 = x^5 + t x + 1\n\
         name = g2s\n\
         degree_x = 5\n\
         coeff.0 = 1\n\
         coeff.1 = 0, 1\n\
         coeff.2 = 0\n\
         coeff.3 = 0\n\
         coeff.4 = 0\n\
         coeff.5 = 1\n",
    ),
];

pub fn corpus_names() -> impl Iterator<Item = &'static str> {
    CORPUS.iter().map(|(name, _)| *name)
}

pub fn corpus_text(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn corpus_family(name: &str) -> Option<HyperellipticFamily> {
    corpus_text(name).map(|text| parse_family(text).expect("built-in corpus parses"))
}

/// `y^2 = sum_j c_j(t) x^j` with integer coefficient polynomials `c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperellipticFamily {
    pub name: String,
    /// `coeffs[j]` lists the coefficients of `c_j(t)` in ascending powers of `t`.
    pub coeffs: Vec<Vec<i64>>,
    pub degree_x: usize,
    pub genus: u32,
    pub trace_trivial_asserted: bool,
    pub ns_ak_rank_asserted: u32,
    /// Coefficients in `s = 1/t` for the chart containing `t = infinity`.
    pub second_chart: Option<Vec<Vec<i64>>>,
    disc: Poly<BigInt>,
}

fn int_poly(c: &[i64]) -> Poly<BigInt> {
    Poly::new(c.iter().map(|&v| BigInt::from(v)).collect())
}

fn trim(mut v: Vec<i64>) -> Vec<i64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn parse_coeff_list(key: &str, value: &str) -> Result<Vec<i64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim().parse::<i64>().map_err(|_| {
                Error::MalformedConfig(format!("`{key}`: `{}` is not an integer", s.trim()))
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(trim)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::MalformedConfig(format!("`{key}`: expected a boolean, got `{other}`"))),
    }
}

fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::MalformedConfig(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::MalformedConfig(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

/// Parses and validates an INI-style family description.
pub fn parse_family(config_text: &str) -> Result<HyperellipticFamily> {
    let mut kv = parse_key_values(config_text)?;
    let name = kv
        .remove("name")
        .filter(|n| !n.is_empty())
        .ok_or_else(|| Error::MalformedConfig("missing key `name`".into()))?;
    let degree_x: usize = kv
        .remove("degree_x")
        .ok_or_else(|| Error::MalformedConfig("missing key `degree_x`".into()))?
        .parse()
        .map_err(|_| Error::MalformedConfig("`degree_x` must be an integer".into()))?;
    if !(3..=MAX_DEGREE).contains(&degree_x) {
        return Err(Error::MalformedConfig(format!("`degree_x` = {degree_x} is outside 3..=6")));
    }
    let mut coeffs = Vec::with_capacity(degree_x + 1);
    for j in 0..=degree_x {
        let key = format!("coeff.{j}");
        let value = kv
            .remove(&key)
            .ok_or_else(|| Error::MalformedConfig(format!("missing key `{key}`")))?;
        coeffs.push(parse_coeff_list(&key, &value)?);
    }
    let trace_trivial_asserted = match kv.remove("trace_trivial") {
        Some(v) => parse_bool("trace_trivial", &v)?,
        None => true,
    };
    let ns_ak_rank_asserted = match kv.remove("ns_ak_rank") {
        Some(v) => v
            .parse()
            .map_err(|_| Error::MalformedConfig("`ns_ak_rank` must be a non-negative integer".into()))?,
        None => 1,
    };
    let mut chart2: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    let keys: Vec<String> = kv.keys().cloned().collect();
    for key in keys {
        if let Some(j) = key.strip_prefix("chart2.coeff.") {
            let j: usize = j
                .parse()
                .ok()
                .filter(|&j| j <= degree_x)
                .ok_or_else(|| Error::MalformedConfig(format!("bad chart key `{key}`")))?;
            let value = kv.remove(&key).unwrap_or_default();
            chart2.insert(j, parse_coeff_list(&key, &value)?);
        } else {
            return Err(Error::MalformedConfig(format!("unknown key `{key}`")));
        }
    }
    let second_chart = (!chart2.is_empty()).then(|| {
        (0..=degree_x)
            .map(|j| chart2.remove(&j).unwrap_or_default())
            .collect()
    });
    HyperellipticFamily::new(name, coeffs, trace_trivial_asserted, ns_ak_rank_asserted, second_chart)
}

impl HyperellipticFamily {
    pub fn new(
        name: String,
        coeffs: Vec<Vec<i64>>,
        trace_trivial_asserted: bool,
        ns_ak_rank_asserted: u32,
        second_chart: Option<Vec<Vec<i64>>>,
    ) -> Result<Self> {
        let coeffs: Vec<Vec<i64>> = coeffs.into_iter().map(trim).collect();
        let degree_x = coeffs.len().saturating_sub(1);
        if !(3..=MAX_DEGREE).contains(&degree_x) {
            return Err(Error::MalformedConfig(format!("x-degree {degree_x} is outside 3..=6")));
        }
        if coeffs[degree_x].is_empty() {
            return Err(Error::DegenerateFamily(format!(
                "leading coefficient c_{degree_x}(t) is identically zero"
            )));
        }
        let bivariate: Poly<Poly<BigInt>> = Poly::new(coeffs.iter().map(|c| int_poly(c)).collect());
        let disc = discriminant(&bivariate);
        if disc.is_zero() {
            return Err(Error::DegenerateFamily(format!(
                "f(x, t) of `{name}` is not squarefree in x over Q(t)"
            )));
        }
        Ok(Self {
            name,
            genus: ((degree_x - 1) / 2) as u32,
            coeffs,
            degree_x,
            trace_trivial_asserted,
            ns_ak_rank_asserted,
            second_chart,
            disc,
        })
    }

    /// `f(x, t)` as a polynomial in `x` over `Z[t]`.
    pub fn bivariate(&self) -> Poly<Poly<BigInt>> {
        Poly::new(self.coeffs.iter().map(|c| int_poly(c)).collect())
    }

    /// `disc_x f(x, t)` as an element of `Z[t]`.
    pub fn discriminant_poly(&self) -> &Poly<BigInt> {
        &self.disc
    }

    /// Degree in `t` of the leading x-coefficient.
    pub fn leading_t_degree(&self) -> usize {
        self.coeffs[self.degree_x].len() - 1
    }

    pub fn max_t_degree(&self) -> usize {
        self.coeffs.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Whether `p` is excluded from every per-prime computation.
    pub fn is_bad_prime(&self, p: u64) -> bool {
        if p <= 3 || !is_prime(p) {
            return true;
        }
        let big_p = BigInt::from(p);
        let divides = |c: &BigInt| (c % &big_p).is_zero();
        let lead = &self.coeffs[self.degree_x];
        if lead.iter().all(|&c| c % p as i64 == 0) {
            return true;
        }
        if self.disc.coeffs().iter().all(divides) {
            return true;
        }
        divides(&self.disc.leading())
    }

    /// The excluded primes `<= x_max`; always contains 2 and 3.
    pub fn bad_primes(&self, x_max: u64) -> BTreeSet<u64> {
        let mut out: BTreeSet<u64> = [2, 3].into_iter().collect();
        out.extend(
            crate::primes::sieve_primes(x_max)
                .into_iter()
                .filter(|&p| self.is_bad_prime(p)),
        );
        out
    }

    pub fn reduce_mod_p(&self, p: u64) -> Result<FamilyModP> {
        if self.is_bad_prime(p) {
            return Err(Error::BadPrime(p));
        }
        FamilyModP::new(self, PrimeFieldCtx::new(p)?)
    }

    /// Reduces at any odd prime, bypassing the bad-prime set. Fibers are
    /// still classified, so single-fiber arithmetic stays valid at e.g. `p = 3`.
    pub fn reduce_mod_p_unchecked(&self, p: u64) -> Result<FamilyModP> {
        FamilyModP::new(self, PrimeFieldCtx::new(p)?)
    }

    /// Canonical config text: sorted keys, defaults made explicit.
    pub fn canonical_text(&self) -> String {
        let mut kv = BTreeMap::new();
        let join = |c: &[i64]| {
            if c.is_empty() {
                "0".to_string()
            } else {
                c.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
            }
        };
        kv.insert("name".to_string(), self.name.clone());
        kv.insert("degree_x".to_string(), self.degree_x.to_string());
        for (j, c) in self.coeffs.iter().enumerate() {
            kv.insert(format!("coeff.{j}"), join(c));
        }
        kv.insert("trace_trivial".to_string(), self.trace_trivial_asserted.to_string());
        kv.insert("ns_ak_rank".to_string(), self.ns_ak_rank_asserted.to_string());
        if let Some(chart) = &self.second_chart {
            for (j, c) in chart.iter().enumerate() {
                kv.insert(format!("chart2.coeff.{j}"), join(c));
            }
        }
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

/// Coefficients of one fiber, `f(x) = sum_{j<=D} c[j] x^j`, reduced mod p.
pub type FiberCoeffs = [u32; MAX_DEGREE + 1];

/// A family reduced modulo a good prime with its singular base points.
#[derive(Debug, Clone)]
pub struct FamilyModP {
    ctx: PrimeFieldCtx,
    degree_x: usize,
    genus: u32,
    /// `t_coeffs[j]` are the coefficients of `c_j(t) mod p`, ascending.
    t_coeffs: Vec<Vec<u32>>,
    infinity_fiber: Option<FiberCoeffs>,
    singular: Vec<bool>,
    delta_roots: Vec<u32>,
}

impl FamilyModP {
    fn new(family: &HyperellipticFamily, ctx: PrimeFieldCtx) -> Result<Self> {
        let p = ctx.p();
        let t_coeffs: Vec<Vec<u32>> = family
            .coeffs
            .iter()
            .map(|c| c.iter().map(|&v| reduce_i64(v, p)).collect())
            .collect();
        let infinity_fiber = family.second_chart.as_ref().map(|chart| {
            let mut f = [0u32; MAX_DEGREE + 1];
            for (j, c) in chart.iter().enumerate() {
                f[j] = c.first().map_or(0, |&v| reduce_i64(v, p));
            }
            f
        });
        let mut fam = Self {
            ctx,
            degree_x: family.degree_x,
            genus: family.genus,
            t_coeffs,
            infinity_fiber,
            singular: Vec::new(),
            delta_roots: Vec::new(),
        };
        let n = fam.num_base_points();
        fam.singular = (0..n)
            .map(|t| fiber_is_singular(&fam.fiber_coeffs(t), fam.degree_x, p))
            .collect();
        fam.delta_roots = (0..p).filter(|&t| fam.singular[t as usize]).collect();
        Ok(fam)
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.ctx.p()
    }

    pub fn ctx(&self) -> &PrimeFieldCtx {
        &self.ctx
    }

    pub fn degree_x(&self) -> usize {
        self.degree_x
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// `p` affine base points, plus one for `t = infinity` when a second chart is present.
    pub fn num_base_points(&self) -> u32 {
        self.p() + self.infinity_fiber.is_some() as u32
    }

    /// The point index used for `t = infinity`, if any.
    pub fn infinity_point(&self) -> Option<u32> {
        self.infinity_fiber.map(|_| self.p())
    }

    pub fn t_coeffs(&self) -> &[Vec<u32>] {
        &self.t_coeffs
    }

    /// Fiber coefficients at base point `t` (`t == p` means infinity).
    pub fn fiber_coeffs(&self, t: u32) -> FiberCoeffs {
        let p = self.p();
        if t == p {
            if let Some(f) = self.infinity_fiber {
                return f;
            }
        }
        let mut f = [0u32; MAX_DEGREE + 1];
        for (j, c) in self.t_coeffs.iter().enumerate() {
            f[j] = c
                .iter()
                .rev()
                .fold(0u32, |acc, &a| ((acc as u64 * t as u64 + a as u64) % p as u64) as u32);
        }
        f
    }

    #[inline]
    pub fn is_singular(&self, t: u32) -> bool {
        self.singular[t as usize]
    }

    /// Affine singular base points, ascending.
    pub fn delta_roots(&self) -> &[u32] {
        &self.delta_roots
    }

    /// Number of singular base points, including infinity when present.
    pub fn n_delta(&self) -> u32 {
        self.singular.iter().filter(|&&s| s).count() as u32
    }

    pub fn n_ns(&self) -> u32 {
        self.num_base_points() - self.n_delta()
    }
}

/// Degree drop, or a repeated factor detected by `gcd(f, f') != 1` in `F_p[x]`.
pub fn fiber_is_singular(f: &FiberCoeffs, degree: usize, p: u32) -> bool {
    if f[degree] == 0 {
        return true;
    }
    let poly: Vec<u32> = f[..=degree].to_vec();
    let deriv: Vec<u32> = (1..=degree)
        .map(|j| mul_mod(f[j], (j as u64 % p as u64) as u32, p))
        .collect();
    gcd_degree(poly, deriv, p) > 0
}

fn strip(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

/// Degree of `gcd(a, b)` in `F_p[x]`; `gcd(a, 0) = a`.
fn gcd_degree(mut a: Vec<u32>, mut b: Vec<u32>, p: u32) -> usize {
    strip(&mut a);
    strip(&mut b);
    while !b.is_empty() {
        let r = poly_rem(a, &b, p);
        a = b;
        b = r;
    }
    a.len().saturating_sub(1)
}

fn poly_rem(mut a: Vec<u32>, b: &[u32], p: u32) -> Vec<u32> {
    let db = b.len() - 1;
    let inv = inv_mod(b[db], p);
    while a.len() > db {
        let da = a.len() - 1;
        let q = mul_mod(a[da], inv, p);
        if q != 0 {
            for (i, &c) in b.iter().enumerate() {
                a[da - db + i] = sub_mod(a[da - db + i], mul_mod(q, c, p), p);
            }
        }
        a.pop();
        strip(&mut a);
    }
    a
}

/// `Delta(t) mod p` evaluated at `t`, used to cross-check the per-fiber test.
pub fn discriminant_mod_p_at(family: &HyperellipticFamily, p: u32, t: u32) -> u32 {
    let pb = BigInt::from(p);
    family
        .discriminant_poly()
        .coeffs()
        .iter()
        .rev()
        .fold(0u32, |acc, c| {
            let c = (c % &pb + &pb) % &pb;
            let c = c.to_u32().expect("reduced residue fits");
            ((acc as u64 * t as u64 + c as u64) % p as u64) as u32
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::sieve_primes;
    use proptest::prelude::*;

    fn ip(c: &[i64]) -> Poly<BigInt> {
        int_poly(c)
    }

    #[test]
    fn corpus_parses_with_expected_shape() {
        let legendre = corpus_family("legendre").unwrap();
        assert_eq!((legendre.genus, legendre.degree_x), (1, 3));
        assert_eq!(legendre.coeffs, vec![vec![], vec![0, 1], vec![-1, -1], vec![1]]);
        let f1 = corpus_family("f1").unwrap();
        assert_eq!((f1.genus, f1.degree_x), (1, 3));
        // (0, t) lies on y^2 = f(0, t) = t^2
        assert_eq!(f1.coeffs[0], vec![0, 0, 1]);
        let g2s = corpus_family("g2s").unwrap();
        assert_eq!((g2s.genus, g2s.degree_x), (2, 5));
        assert!(g2s.trace_trivial_asserted);
        assert_eq!(g2s.ns_ak_rank_asserted, 1);
        assert_eq!(corpus_names().collect::<Vec<_>>(), vec!["legendre", "f1", "g2s"]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_family("degree_x = 3"), Err(Error::MalformedConfig(_))));
        let missing = "name = a\ndegree_x = 3\ncoeff.0 = 1\ncoeff.1 = 1\ncoeff.3 = 1\n";
        assert!(matches!(parse_family(missing), Err(Error::MalformedConfig(_))));
        let non_int = "name = a\ndegree_x = 3\ncoeff.0 = 1.5\ncoeff.1 = 1\ncoeff.2 = 0\ncoeff.3 = 1\n";
        assert!(matches!(parse_family(non_int), Err(Error::MalformedConfig(_))));
        let bad_deg = "name = a\ndegree_x = 7\n";
        assert!(matches!(parse_family(bad_deg), Err(Error::MalformedConfig(_))));
        // (x - t)^2 (x + 1) is never squarefree
        let square = "name = sq\ndegree_x = 3\ncoeff.0 = 0,0,1\ncoeff.1 = 0,-2,1\ncoeff.2 = 1,-2\ncoeff.3 = 1\n";
        assert!(matches!(parse_family(square), Err(Error::DegenerateFamily(_))));
        let zero_lead = "name = z\ndegree_x = 3\ncoeff.0 = 1\ncoeff.1 = 1\ncoeff.2 = 0\ncoeff.3 = 0\n";
        assert!(matches!(parse_family(zero_lead), Err(Error::DegenerateFamily(_))));
    }

    #[test]
    fn optional_keys() {
        let text = "name = q\ndegree_x = 4\ncoeff.0 = 1\ncoeff.1 = 0,1\ncoeff.2 = 0\ncoeff.3 = 0\ncoeff.4 = 1\n\
                    trace_trivial = false\nns_ak_rank = 2\nchart2.coeff.4 = 1\nchart2.coeff.1 = 1\n";
        let fam = parse_family(text).unwrap();
        assert!(!fam.trace_trivial_asserted);
        assert_eq!(fam.ns_ak_rank_asserted, 2);
        assert_eq!(fam.genus, 1);
        let chart = fam.second_chart.as_ref().unwrap();
        assert_eq!(chart.len(), 5);
        assert_eq!(chart[4], vec![1]);
        assert!(chart[2].is_empty());
    }

    #[test]
    fn fingerprint_ignores_key_order_and_comments() {
        let a = corpus_text("f1").unwrap();
        let mut lines: Vec<&str> = a.lines().collect();
        lines.reverse();
        let b = format!("; reordered\n{}\n", lines.join("\n"));
        let fa = parse_family(a).unwrap();
        let fb = parse_family(&b).unwrap();
        assert_eq!(fa.fingerprint(), fb.fingerprint());
        assert_ne!(fa.fingerprint(), corpus_family("legendre").unwrap().fingerprint());
        assert_eq!(parse_family(&fa.canonical_text()).unwrap(), fa);
    }

    #[test]
    fn discriminants() {
        assert_eq!(corpus_family("legendre").unwrap().discriminant_poly(), &ip(&[0, 0, 1, -2, 1]));
        assert_eq!(corpus_family("f1").unwrap().discriminant_poly(), &ip(&[-4, 0, 0, 0, -27]));
        // x^5 + t x + 1: 5^5 + 4^4 t^5
        assert_eq!(
            corpus_family("g2s").unwrap().discriminant_poly(),
            &ip(&[3125, 0, 0, 0, 0, 256])
        );
        let constant = HyperellipticFamily::new("c".into(), vec![vec![1], vec![1], vec![], vec![1]], true, 1, None)
            .unwrap();
        assert_eq!(constant.discriminant_poly(), &ip(&[-31]));
    }

    #[test]
    fn bad_prime_sets() {
        let expected: BTreeSet<u64> = [2, 3].into_iter().collect();
        assert_eq!(corpus_family("legendre").unwrap().bad_primes(1000), expected);
        assert_eq!(corpus_family("f1").unwrap().bad_primes(1000), expected);
        assert_eq!(corpus_family("g2s").unwrap().bad_primes(1000), expected);
        // x^3 + 5x + 5t reduces to x^3 mod 5, singular in every fiber
        let fam = HyperellipticFamily::new("c5".into(), vec![vec![0, 5], vec![5], vec![], vec![1]], true, 1, None)
            .unwrap();
        assert!(fam.is_bad_prime(5));
        assert!(!fam.is_bad_prime(7));
        assert!(matches!(fam.reduce_mod_p(5), Err(Error::BadPrime(5))));
        // leading coefficient 7 t + 7 vanishes identically mod 7
        let fam = HyperellipticFamily::new("l7".into(), vec![vec![1], vec![0, 1], vec![], vec![7, 7]], true, 1, None)
            .unwrap();
        assert!(fam.bad_primes(50).contains(&7));
    }

    #[test]
    fn delta_roots_examples() {
        let legendre = corpus_family("legendre").unwrap().reduce_mod_p(5).unwrap();
        assert_eq!(legendre.delta_roots(), &[0, 1]);
        assert_eq!(legendre.n_delta(), 2);
        let f1 = corpus_family("f1").unwrap().reduce_mod_p(5).unwrap();
        assert_eq!(f1.n_delta(), 0);
        let g2s = corpus_family("g2s").unwrap().reduce_mod_p(5).unwrap();
        // in characteristic 5, x^5 + t x + 1 is separable iff t != 0
        assert_eq!(g2s.delta_roots(), &[0]);
    }

    fn brute_force_repeated_root(f: &FiberCoeffs, d: usize, p: u32) -> bool {
        // Euclid on i64 vectors, independent of the u32 implementation
        let poly: Vec<i64> = f[..=d].iter().map(|&c| c as i64).collect();
        let deriv: Vec<i64> = (1..=d).map(|j| (j as i64 * poly[j]) % p as i64).collect();
        let mut a: Vec<i64> = poly;
        let mut b: Vec<i64> = deriv;
        let trim = |v: &mut Vec<i64>| {
            while v.last() == Some(&0) {
                v.pop();
            }
        };
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let inv = crate::primes::pow_mod(*b.last().unwrap() as u32, p as u64 - 2, p) as i64;
            while a.len() >= b.len() {
                let q = a.last().unwrap() * inv % p as i64;
                let off = a.len() - b.len();
                for (i, &c) in b.iter().enumerate() {
                    a[off + i] = (a[off + i] - q * c).rem_euclid(p as i64);
                }
                a.pop();
                trim(&mut a);
            }
            std::mem::swap(&mut a, &mut b);
        }
        a.len() > 1
    }

    #[test]
    fn singularity_detectors_agree() {
        for name in ["legendre", "f1", "g2s"] {
            let fam = corpus_family(name).unwrap();
            let bound = fam.discriminant_poly().degree().unwrap_or(0) + fam.leading_t_degree();
            for p in sieve_primes(50) {
                if fam.is_bad_prime(p) {
                    continue;
                }
                let fp = fam.reduce_mod_p(p).unwrap();
                let p32 = p as u32;
                for t in 0..p32 {
                    let by_disc = discriminant_mod_p_at(&fam, p32, t) == 0;
                    let f = fp.fiber_coeffs(t);
                    assert_eq!(fp.is_singular(t), by_disc, "{name} p={p} t={t}");
                    assert_eq!(
                        fp.is_singular(t),
                        brute_force_repeated_root(&f, fam.degree_x, p32),
                        "{name} p={p} t={t}"
                    );
                }
                assert!(fp.n_delta() as usize <= bound);
            }
        }
    }

    #[test]
    fn infinity_fiber_from_second_chart() {
        // y^2 = x^3 + x + t^2; near infinity use s = 1/t with the fiber at s = 0 given explicitly
        let text = format!("{}chart2.coeff.0 = 1\nchart2.coeff.1 = 1\nchart2.coeff.3 = 1\n", corpus_text("f1").unwrap());
        let fam = parse_family(&text).unwrap();
        let fp = fam.reduce_mod_p(5).unwrap();
        assert_eq!(fp.num_base_points(), 6);
        assert_eq!(fp.infinity_point(), Some(5));
        assert_eq!(&fp.fiber_coeffs(5)[..4], &[1, 1, 0, 1]);
        assert!(!fp.is_singular(5));
    }

    proptest! {
        // shifting t -> t + c over Z then reducing gives the same fibers as reducing then shifting
        #[test]
        fn reduction_commutes_with_shift(c in -20i64..20, idx in 2usize..12, which in 0usize..3) {
            let name = ["legendre", "f1", "g2s"][which];
            let fam = corpus_family(name).unwrap();
            let shifted_coeffs: Vec<Vec<i64>> = fam
                .coeffs
                .iter()
                .map(|cj| {
                    // compose c_j(t + c) by Horner over Z[t]
                    let tpc = Poly::new(vec![BigInt::from(c), BigInt::from(1)]);
                    let composed = cj.iter().rev().fold(Poly::<BigInt>::zero(), |acc, &a| {
                        acc * tpc.clone() + Poly::constant(BigInt::from(a))
                    });
                    composed.coeffs().iter().map(|v| v.to_i64().unwrap()).collect()
                })
                .collect();
            let shifted = HyperellipticFamily::new("s".into(), shifted_coeffs, true, 1, None).unwrap();
            let p = sieve_primes(60)[idx];
            prop_assume!(!fam.is_bad_prime(p) && !shifted.is_bad_prime(p));
            let a = fam.reduce_mod_p(p).unwrap();
            let b = shifted.reduce_mod_p(p).unwrap();
            let p32 = p as u32;
            for t in 0..p32 {
                let moved = reduce_i64(t as i64 + c, p32);
                prop_assert_eq!(b.fiber_coeffs(t), a.fiber_coeffs(moved));
                prop_assert_eq!(b.is_singular(t), a.is_singular(moved));
            }
        }
    }
}
