use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::cache;
use super::factorial::{sum_terms, PrimeExponents, SignedTerm};
use super::ssr::SignedSqrtRational;
use crate::error::{Error, Result};
use crate::precision::Fixed;

/// Arguments of a 3j symbol `(l1 l2 l3; m1 m2 m3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ThreeJArgs {
    pub l1: u32,
    pub l2: u32,
    pub l3: u32,
    pub m1: i32,
    pub m2: i32,
    pub m3: i32,
}

impl ThreeJArgs {
    pub fn new(l: [u32; 3], m: [i32; 3]) -> Self {
        ThreeJArgs {
            l1: l[0],
            l2: l[1],
            l3: l[2],
            m1: m[0],
            m2: m[1],
            m3: m[2],
        }
    }

    pub fn ls(&self) -> [u32; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn ms(&self) -> [i32; 3] {
        [self.m1, self.m2, self.m3]
    }

    fn validate(&self) -> Result<()> {
        for (i, (l, m)) in self.ls().into_iter().zip(self.ms()).enumerate() {
            if m.unsigned_abs() > l {
                return Err(Error::Domain { index: i + 1, l, m });
            }
        }
        Ok(())
    }

    /// True when the selection rules force the symbol to vanish.
    fn vanishes(&self) -> bool {
        let [l1, l2, l3] = self.ls();
        let [m1, m2, m3] = self.ms();
        m1 + m2 + m3 != 0
            || !triangle(l1, l2, l3)
            || (m1 == 0 && m2 == 0 && m3 == 0 && (l1 + l2 + l3) % 2 == 1)
    }
}

pub fn triangle(a: u32, b: u32, c: u32) -> bool {
    c <= a + b && a <= b + c && b <= a + c
}

/// Racah single-sum formula in doubled units; the caller guarantees the
/// triangle rule, `Σm = 0` and `|m_i| ≤ j_i`.
pub(crate) fn racah_3j_doubled(tj: [i64; 3], tm: [i64; 3]) -> SignedSqrtRational {
    let half = |x: i64| -> u32 {
        debug_assert!(x >= 0 && x % 2 == 0, "invalid doubled argument {x}");
        (x / 2) as u32
    };
    let [j1, j2, j3] = tj;
    let [m1, m2, m3] = tm;

    let mut prefactor = PrimeExponents::one();
    prefactor
        .mul_factorial(half(j1 + j2 - j3))
        .mul_factorial(half(j1 - j2 + j3))
        .mul_factorial(half(-j1 + j2 + j3))
        .div_factorial(half(j1 + j2 + j3 + 2))
        .mul_factorial(half(j1 + m1))
        .mul_factorial(half(j1 - m1))
        .mul_factorial(half(j2 + m2))
        .mul_factorial(half(j2 - m2))
        .mul_factorial(half(j3 + m3))
        .mul_factorial(half(j3 - m3));

    // k runs over integers keeping every factorial argument nonnegative.
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut terms = Vec::new();
    let mut k2 = k_min;
    while k2 <= k_max {
        let mut e = PrimeExponents::one();
        e.div_factorial(half(k2))
            .div_factorial(half(j3 - j2 + k2 + m1))
            .div_factorial(half(j3 - j1 + k2 - m2))
            .div_factorial(half(j1 + j2 - j3 - k2))
            .div_factorial(half(j1 - k2 - m1))
            .div_factorial(half(j2 - k2 + m2));
        terms.push(SignedTerm {
            negative: (k2 / 2) % 2 == 1,
            exps: e,
        });
        k2 += 2;
    }
    let (base, total) = sum_terms(&terms);
    if total.is_zero() {
        return SignedSqrtRational::zero();
    }

    let phase_exp = (j1 - j2 - m3) / 2;
    let mut sign = if phase_exp.rem_euclid(2) == 0 { 1 } else { -1 };
    if total.is_negative() {
        sign = -sign;
    }

    // value² = prefactor · base² · total²; the even part of the prefactor
    // is pulled out of the root before the radicand is assembled.
    let radicand = prefactor.add(&base.scale(2));
    let (half_part, rest) = radicand.split_square();
    let (rest_num, rest_den) = rest.to_ratio();
    let (half_num, half_den) = half_part.to_ratio();
    let total_abs = total.magnitude();
    let outer = &half_num * total_abs;
    let num = rest_num * &outer * &outer;
    let den = rest_den * &half_den * &half_den;
    SignedSqrtRational::new(sign, num, den)
}

/// Exact Wigner 3j symbol, memoized on the Regge-canonical argument order.
pub fn wigner3j(args: ThreeJArgs) -> Result<SignedSqrtRational> {
    args.validate()?;
    if args.vanishes() {
        return Ok(SignedSqrtRational::zero());
    }
    let (key, phase) = cache::canonical(&args);
    let value = match cache::lookup(&key) {
        Some(v) => v,
        None => {
            let (tj, tm) = cache::doubled_from_key(&key);
            let v = racah_3j_doubled(tj, tm);
            cache::insert(key, v.clone());
            v
        }
    };
    Ok(if phase < 0 { flip(value) } else { value })
}

/// Exact Wigner 3j symbol evaluated directly, bypassing the memo table.
pub fn wigner3j_uncached(args: ThreeJArgs) -> Result<SignedSqrtRational> {
    args.validate()?;
    if args.vanishes() {
        return Ok(SignedSqrtRational::zero());
    }
    let tj = args.ls().map(|l| 2 * l as i64);
    let tm = args.ms().map(|m| 2 * m as i64);
    Ok(racah_3j_doubled(tj, tm))
}

fn flip(v: SignedSqrtRational) -> SignedSqrtRational {
    SignedSqrtRational::new(
        -v.sign(),
        v.radicand_num().clone(),
        v.radicand_den().clone(),
    )
}

/// Clebsch-Gordan coefficient `⟨l1 m1; l2 m2 | l m⟩`
/// `= (-1)^{l1-l2+m} √(2l+1) (l1 l2 l; m1 m2 -m)`.
pub fn clebsch_gordan(l1: u32, m1: i32, l2: u32, m2: i32, l: u32, m: i32) -> Result<SignedSqrtRational> {
    if m.unsigned_abs() > l {
        return Err(Error::Domain { index: 3, l, m });
    }
    let three_j = wigner3j(ThreeJArgs::new([l1, l2, l], [m1, m2, -m]))?;
    if three_j.is_zero() {
        return Ok(three_j);
    }
    let phase = (l1 as i64 - l2 as i64 + m as i64).rem_euclid(2);
    let scale = SignedSqrtRational::new(
        if phase == 0 { 1 } else { -1 },
        BigUint::from(2 * l + 1),
        BigUint::from(1u32),
    );
    Ok(&scale * &three_j)
}

/// Algebraic part of the Gaunt integral; the true value is this times
/// `1/√(4π)`, which is kept symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GauntValue {
    pub algebraic: SignedSqrtRational,
    /// Always true: marks the omitted `1/√(4π)` factor.
    pub inv_sqrt_4pi: bool,
}

impl GauntValue {
    pub fn to_f64(&self) -> f64 {
        self.algebraic.to_f64() / (4.0 * std::f64::consts::PI).sqrt()
    }
}

pub fn gaunt(l1: u32, l2: u32, l3: u32, m1: i32, m2: i32, m3: i32) -> Result<GauntValue> {
    let args = ThreeJArgs::new([l1, l2, l3], [m1, m2, m3]);
    let with_m = wigner3j(args)?;
    let zero_m = wigner3j(ThreeJArgs::new([l1, l2, l3], [0, 0, 0]))?;
    let dims = SignedSqrtRational::new(
        1,
        BigUint::from((2 * l1 + 1) as u64 * (2 * l2 + 1) as u64 * (2 * l3 + 1) as u64),
        BigUint::from(1u32),
    );
    Ok(GauntValue {
        algebraic: &(&dims * &zero_m) * &with_m,
        inv_sqrt_4pi: true,
    })
}

/// Chained coupling coefficient
/// `Σ_{μ_1..μ_{p-2}} C^{λ1 μ1}_{l1 m1 l2 m2} C^{λ2 μ2}_{λ1 μ1 l3 m3} ⋯ C^{λ_{p-1} μ}_{λ_{p-2} μ_{p-2} lp mp}`
/// accumulated in fixed point from exact factors.
pub fn cg_chain_coefficient(ls: &[u32], ms: &[i32], lambdas: &[u32], mu: i32) -> Result<Fixed> {
    let p = ls.len();
    if p < 2 || ms.len() != p || lambdas.len() != p - 1 {
        return Err(Error::InvalidArgument(format!(
            "chain needs p >= 2 multipoles, p projections and p-1 couplings (got {}, {}, {})",
            ls.len(),
            ms.len(),
            lambdas.len()
        )));
    }
    for (i, (&l, &m)) in ls.iter().zip(ms).enumerate() {
        if m.unsigned_abs() > l {
            return Err(Error::Domain { index: i + 1, l, m });
        }
    }
    let last = lambdas[p - 2];
    if mu.unsigned_abs() > last {
        return Err(Error::Domain { index: p, l: last, m: mu });
    }
    // Step 0 couples (l1, l2) into λ1; step j couples (λ_j, l_{j+2}) into λ_{j+1}.
    for step in 0..p - 1 {
        let a = if step == 0 { ls[0] } else { lambdas[step - 1] };
        let b = ls[step + 1];
        let c = lambdas[step];
        if !triangle(a, b, c) {
            return Err(Error::InfeasibleCoupling { step, a, b, c });
        }
    }

    let mut total = Fixed::zero();
    let mut intermediate = vec![0i32; p.saturating_sub(2)];
    chain_sum(ls, ms, lambdas, mu, 0, &mut intermediate, &mut total)?;
    Ok(total)
}

fn chain_sum(
    ls: &[u32],
    ms: &[i32],
    lambdas: &[u32],
    mu: i32,
    depth: usize,
    intermediate: &mut Vec<i32>,
    total: &mut Fixed,
) -> Result<()> {
    if depth == intermediate.len() {
        let mut product = SignedSqrtRational::one();
        for step in 0..lambdas.len() {
            let (a, ma) = if step == 0 {
                (ls[0], ms[0])
            } else {
                (lambdas[step - 1], intermediate[step - 1])
            };
            let mc = if step + 1 == lambdas.len() { mu } else { intermediate[step] };
            let c = clebsch_gordan(a, ma, ls[step + 1], ms[step + 1], lambdas[step], mc)?;
            if c.is_zero() {
                return Ok(());
            }
            product = &product * &c;
        }
        *total += product.to_fixed();
        return Ok(());
    }
    let lam = lambdas[depth] as i32;
    for m in -lam..=lam {
        intermediate[depth] = m;
        chain_sum(ls, ms, lambdas, mu, depth + 1, intermediate, total)?;
    }
    Ok(())
}

/// Exact `Σ_{m} (l1 l2 l3; m1 m2 m3)²` over all projections.
pub fn orthogonality_sum(l1: u32, l2: u32, l3: u32) -> Result<BigRational> {
    let mut acc = BigRational::zero();
    for m1 in -(l1 as i32)..=(l1 as i32) {
        for m2 in -(l2 as i32)..=(l2 as i32) {
            let m3 = -m1 - m2;
            if m3.unsigned_abs() > l3 {
                continue;
            }
            acc += wigner3j(ThreeJArgs::new([l1, l2, l3], [m1, m2, m3]))?.square();
        }
    }
    Ok(acc)
}
