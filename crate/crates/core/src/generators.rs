//! Seeded random generators for maps, matrices and the structured families
//! used by the test suite and the fuzz commands. Everything takes an explicit
//! `Rng` so a fixed seed reproduces the exact same stream everywhere.

use rand::Rng;

use crate::field::{FieldCtx, FieldElem, FieldKind};
use crate::maps::{conjugate, PolyMap};
use crate::matpoly::{rank_kx, ConstMatrix};
use crate::poly::{Monomial, Poly};

/// Uniform element of a finite field; over ℚ a small integer in −3..=3.
pub fn random_elem<R: Rng>(ctx: &FieldCtx, rng: &mut R) -> FieldElem {
    match ctx.kind() {
        FieldKind::Rationals => ctx.from_i64(rng.gen_range(-3..=3)),
        _ => {
            let card = ctx.cardinality().expect("finite field has a cardinality");
            ctx.element_from_index(rng.gen_range(0..card))
        }
    }
}

pub fn random_nonzero_elem<R: Rng>(ctx: &FieldCtx, rng: &mut R) -> FieldElem {
    loop {
        let e = random_elem(ctx, rng);
        if !e.is_zero() {
            return e;
        }
    }
}

/// Random quadratic homogeneous polynomial; each monomial xᵢxⱼ (i ≤ j) gets a
/// coefficient that is nonzero with probability ~1/2.
pub fn random_quadratic_form<R: Rng>(ctx: &FieldCtx, nvars: usize, rng: &mut R) -> Poly {
    let mut terms = Vec::new();
    for i in 0..nvars {
        for j in i..nvars {
            if rng.gen_bool(0.5) {
                let c = random_nonzero_elem(ctx, rng);
                let m = Monomial::var(nvars, i).mul(&Monomial::var(nvars, j));
                terms.push((m, c));
            }
        }
    }
    Poly::from_terms(ctx, nvars, terms)
}

/// Random quadratic homogeneous map with m components over n variables.
pub fn random_quadratic_map<R: Rng>(ctx: &FieldCtx, n: usize, m: usize, rng: &mut R) -> PolyMap {
    let comps = (0..m).map(|_| random_quadratic_form(ctx, n, rng)).collect();
    PolyMap::new(ctx, n, comps).expect("well-formed map")
}

/// Random invertible constant matrix, built as P·L·U with unit-triangular
/// L, U, a random permutation P and random nonzero diagonal scalings.
pub fn random_invertible<R: Rng>(ctx: &FieldCtx, n: usize, rng: &mut R) -> ConstMatrix {
    let mut l = ConstMatrix::identity(ctx, n);
    let mut u = ConstMatrix::identity(ctx, n);
    for i in 0..n {
        u.set(i, i, random_nonzero_elem(ctx, rng));
        for j in 0..i {
            if rng.gen_bool(0.5) {
                l.set(i, j, random_elem(ctx, rng));
            }
            if rng.gen_bool(0.5) {
                u.set(j, i, random_elem(ctx, rng));
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    ConstMatrix::permutation(ctx, &perm).mul(&l).mul(&u)
}

/// Random quadratic homogeneous map whose Jacobian has rank over K(x)
/// exactly `r`: an m×r constant matrix of full column rank applied to r
/// random quadratics, with rejection until the rank is exact.
pub fn random_map_of_rank<R: Rng>(
    ctx: &FieldCtx,
    n: usize,
    m: usize,
    r: usize,
    rng: &mut R,
) -> PolyMap {
    assert!(r <= m && r <= n, "rank bound exceeds shape");
    if r == 0 {
        return PolyMap::zero(ctx, n, m);
    }
    loop {
        let mix = loop {
            let cand = ConstMatrix::from_fn(ctx, m, r, |_, _| random_elem(ctx, rng));
            if cand.rank() == r {
                break cand;
            }
        };
        let gens: Vec<Poly> = (0..r).map(|_| random_quadratic_form(ctx, n, rng)).collect();
        let comps: Vec<Poly> = (0..m)
            .map(|i| {
                (0..r).fold(Poly::zero(ctx, n), |acc, k| {
                    acc.add(&gens[k].scale(mix.get(i, k)))
                })
            })
            .collect();
        let h = PolyMap::new(ctx, n, comps).expect("well-formed map");
        if rank_kx(&crate::maps::jacobian(&h)) == r {
            return h;
        }
    }
}

/// Conjugate `h` by fresh random invertible S (m×m) and T (n×n); returns
/// (S·h(T·x), S, T).
pub fn random_conjugate<R: Rng>(
    h: &PolyMap,
    rng: &mut R,
) -> (PolyMap, ConstMatrix, ConstMatrix) {
    let ctx = h.ctx().clone();
    let s = random_invertible(&ctx, h.m(), rng);
    let t = random_invertible(&ctx, h.n(), rng);
    let g = conjugate(h, &s, &t).expect("random conjugation");
    (g, s, t)
}

/// The one-parameter rank-3 family on 4 variables, characteristic ≠ 2:
/// (x₁x₃ + c·x₂x₄, x₂x₃ − x₁x₄, ½x₃² + (c/2)x₄², ½x₁² + (c/2)x₂²), c ≠ 0.
pub fn quartet_family(ctx: &FieldCtx, c: &FieldElem) -> PolyMap {
    assert_ne!(ctx.characteristic(), 2, "family needs characteristic ≠ 2");
    assert!(!c.is_zero(), "family parameter must be nonzero");
    let half = ctx.from_i64(2).inv();
    let ch = c.mul(&half);
    let v = |i: usize| Poly::var(ctx, 4, i);
    let comps = vec![
        v(0).mul(&v(2)).add(&v(1).mul(&v(3)).scale(c)),
        v(1).mul(&v(2)).sub(&v(0).mul(&v(3))),
        v(2).mul(&v(2)).scale(&half).add(&v(3).mul(&v(3)).scale(&ch)),
        v(0).mul(&v(0)).scale(&half).add(&v(1).mul(&v(1)).scale(&ch)),
    ];
    PolyMap::new(ctx, 4, comps).expect("family map")
}

/// Random strictly triangular quadratic map: component i draws from the
/// variables after i only, and at most `max_nonzero` components are nonzero
/// (which caps the Jacobian rank at that number).
pub fn random_triangular_quadratic<R: Rng>(
    ctx: &FieldCtx,
    n: usize,
    max_nonzero: usize,
    rng: &mut R,
) -> PolyMap {
    let mut slots: Vec<usize> = (0..n.saturating_sub(1)).collect();
    for i in (1..slots.len()).rev() {
        slots.swap(i, rng.gen_range(0..=i));
    }
    slots.truncate(max_nonzero);
    let mut comps = vec![Poly::zero(ctx, n); n];
    for &i in &slots {
        // quadratic in x_{i+2}..x_n only (1-based: after coordinate i+1)
        let tail = random_quadratic_form(ctx, n - i - 1, rng);
        comps[i] = lift_tail(ctx, n, i + 1, &tail);
    }
    PolyMap::new(ctx, n, comps).expect("triangular map")
}

// Re-embed a polynomial in variables x_{shift+1}..x_n into n variables.
fn lift_tail(ctx: &FieldCtx, n: usize, shift: usize, p: &Poly) -> Poly {
    let terms: Vec<_> = p
        .terms()
        .map(|(m, c)| {
            let mut e = vec![0u32; n];
            e[shift..(shift + m.nvars())].copy_from_slice(m.exponents());
            (Monomial::from_exponents(e), c.clone())
        })
        .collect();
    Poly::from_terms(ctx, n, terms)
}

/// The rank-3 tame family on n ≥ 5 variables:
/// (x₂x₅ + u₁, x₁x₄ − x₃x₅ + u₂, x₂x₄ + u₃, 0, …) with uᵢ ∈ K[x₄..x_n].
pub fn wing_family<R: Rng>(ctx: &FieldCtx, n: usize, rng: &mut R, with_u: bool) -> PolyMap {
    assert!(n >= 5, "family needs at least 5 variables");
    let v = |i: usize| Poly::var(ctx, n, i);
    let mut u = |on: bool| {
        if on && with_u {
            lift_tail(ctx, n, 3, &random_quadratic_form(ctx, n - 3, rng))
        } else {
            Poly::zero(ctx, n)
        }
    };
    let mut comps = vec![Poly::zero(ctx, n); n];
    comps[0] = v(1).mul(&v(4)).add(&u(true));
    comps[1] = v(0).mul(&v(3)).sub(&v(2).mul(&v(4))).add(&u(true));
    comps[2] = v(1).mul(&v(3)).add(&u(true));
    PolyMap::new(ctx, n, comps).expect("family map")
}

/// The characteristic-2 rank-3 tame family on n ≥ 6 variables:
/// (x₂x₆, x₁x₅ + x₃x₆ + a·x₄x₅ + b·x₄x₆ + u₂, x₂x₅, x₅x₆, 0, …) with
/// u₂ ∈ K[x₄, x₇..x_n].
pub fn hexad_family<R: Rng>(ctx: &FieldCtx, n: usize, rng: &mut R, with_u: bool) -> PolyMap {
    assert_eq!(ctx.characteristic(), 2, "family needs characteristic 2");
    assert!(n >= 6, "family needs at least 6 variables");
    let v = |i: usize| Poly::var(ctx, n, i);
    let a = random_elem(ctx, rng);
    let b = random_elem(ctx, rng);
    let mut u2 = Poly::zero(ctx, n);
    if with_u {
        // admissible monomials: x₄², x₄x_j and x_ix_j for i, j ≥ 7
        let mut pool: Vec<usize> = vec![3];
        pool.extend(6..n);
        for (ai, &i) in pool.iter().enumerate() {
            for &j in &pool[ai..] {
                if rng.gen_bool(0.4) {
                    let m = Monomial::var(n, i).mul(&Monomial::var(n, j));
                    u2 = u2.add(&Poly::from_terms(
                        ctx,
                        n,
                        vec![(m, random_nonzero_elem(ctx, rng))],
                    ));
                }
            }
        }
    }
    let mut comps = vec![Poly::zero(ctx, n); n];
    comps[0] = v(1).mul(&v(5));
    comps[1] = v(0)
        .mul(&v(4))
        .add(&v(2).mul(&v(5)))
        .add(&v(3).mul(&v(4)).scale(&a))
        .add(&v(3).mul(&v(5)).scale(&b))
        .add(&u2);
    comps[2] = v(1).mul(&v(4));
    comps[3] = v(4).mul(&v(5));
    PolyMap::new(ctx, n, comps).expect("family map")
}

/// Random symmetric matrix with zero diagonal.
pub fn random_symmetric_zero_diag<R: Rng>(ctx: &FieldCtx, n: usize, rng: &mut R) -> ConstMatrix {
    let mut m = ConstMatrix::zero(ctx, n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.6) {
                let c = random_nonzero_elem(ctx, rng);
                m.set(i, j, c.clone());
                m.set(j, i, c);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::maps::jacobian;
    use crate::matpoly::is_nilpotent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn invertible_really_is() {
        for spec in ["Q", "GF(2)", "GF(5)", "GF(2,2)"] {
            let ctx = make_field(spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for n in 1..=6 {
                for _ in 0..10 {
                    assert!(random_invertible(&ctx, n, &mut rng).is_invertible());
                }
            }
        }
    }

    #[test]
    fn rank_generator_hits_target() {
        let ctx = make_field("GF(5)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in 0..=3 {
            let h = random_map_of_rank(&ctx, 5, 4, r, &mut rng);
            assert_eq!(rank_kx(&jacobian(&h)), r);
            assert!(h.is_quadratic_homogeneous() || h.is_zero());
        }
    }

    #[test]
    fn seeded_streams_reproduce() {
        let ctx = make_field("Q").unwrap();
        let a = random_quadratic_map(&ctx, 4, 4, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_quadratic_map(&ctx, 4, 4, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn triangular_maps_have_nilpotent_jacobian() {
        let ctx = make_field("Q").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let h = random_triangular_quadratic(&ctx, 6, 3, &mut rng);
            assert!(is_nilpotent(&jacobian(&h)).unwrap());
            assert!(rank_kx(&jacobian(&h)) <= 3);
        }
    }

    #[test]
    fn family_jacobians_are_nilpotent_of_rank_3() {
        let ctx = make_field("Q").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let w = wing_family(&ctx, 6, &mut rng, true);
        assert!(is_nilpotent(&jacobian(&w)).unwrap());
        assert_eq!(rank_kx(&jacobian(&w)), 3);

        let ctx2 = make_field("GF(2)").unwrap();
        let h = hexad_family(&ctx2, 7, &mut rng, true);
        assert!(is_nilpotent(&jacobian(&h)).unwrap());
        assert_eq!(rank_kx(&jacobian(&h)), 3);
    }

    #[test]
    fn quartet_family_matches_its_defining_relation() {
        // H₁² + c·H₂² − 4·H₃H₄ = 0 for every parameter value
        let ctx = make_field("Q").unwrap();
        for cval in [1i64, 2, -1, 3] {
            let c = ctx.from_i64(cval);
            let h = quartet_family(&ctx, &c);
            let rel = h
                .comp(0)
                .mul(h.comp(0))
                .add(&h.comp(1).mul(h.comp(1)).scale(&c))
                .sub(&h.comp(2).mul(h.comp(3)).scale(&ctx.from_i64(4)));
            assert!(rel.is_zero());
            assert_eq!(rank_kx(&jacobian(&h)), 3);
        }
    }
}
