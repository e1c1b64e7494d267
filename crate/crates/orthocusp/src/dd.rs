//! Double description: generators of {y : aᵢ·y ≥ 0} from the inequalities.
//!
//! Motzkin's incremental method with the combinatorial adjacency test.  The
//! lineality space is carried separately, so inputs need not be pointed.
//! All arithmetic is exact; rays are kept as primitive integer vectors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::linalg::{saturate, zq, ZVec};
use crate::rat::{primitive_int, qi, Q};

/// Extreme rays modulo the lineality space, plus a basis of the lineality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generators {
    pub rays: Vec<ZVec>,
    pub lineality: Vec<ZVec>,
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn primitive(v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() || g.is_one() {
        v
    } else {
        v.into_iter().map(|x| x / &g).collect()
    }
}

struct Ray {
    v: ZVec,
    zero: Vec<bool>,
}

/// Generators of the cone {y ∈ ℝⁿ : row·y ≥ 0 for every row}.
pub fn cone_from_inequalities(rows: &[Vec<Q>], n: usize) -> Generators {
    let rows: Vec<ZVec> = rows.iter().map(|r| primitive_int(r)).collect();
    let m = rows.len();
    let mut lin: Vec<ZVec> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut rays: Vec<Ray> = Vec::new();
    for (ci, a) in rows.iter().enumerate() {
        if a.iter().all(|x| x.is_zero()) {
            for r in rays.iter_mut() {
                r.zero[ci] = true;
            }
            continue;
        }
        if let Some(p) = lin.iter().position(|l| !dot(a, l).is_zero()) {
            // a cuts the lineality space: l0 becomes a ray, everything else is
            // pushed into a^⊥ along l0
            let mut l0 = lin.swap_remove(p);
            let mut al0 = dot(a, &l0);
            if al0.is_negative() {
                l0 = l0.into_iter().map(|x| -x).collect();
                al0 = -al0;
            }
            let shift = |v: &ZVec| -> ZVec {
                let av = dot(a, v);
                primitive(v.iter().zip(&l0).map(|(x, y)| x * &al0 - y * &av).collect())
            };
            lin = lin.iter().map(shift).collect();
            for r in rays.iter_mut() {
                r.v = shift(&r.v);
                r.zero[ci] = true;
            }
            let mut zero = vec![true; m];
            zero[ci] = false;
            // l0 was tight on the earlier constraints; later ones are filled in when processed
            for z in zero.iter_mut().skip(ci + 1) {
                *z = false;
            }
            rays.push(Ray { v: l0, zero });
            continue;
        }
        let vals: Vec<BigInt> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let mut fresh: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common: Vec<bool> = (0..ci).map(|k| rays[p].zero[k] && rays[q].zero[k]).collect();
                let blocked = (0..rays.len()).any(|r| {
                    r != p && r != q && (0..ci).all(|k| !common[k] || rays[r].zero[k])
                });
                if blocked {
                    continue;
                }
                let v: ZVec = rays[q]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(x, y)| x * &vals[p] - y * &vals[q])
                    .collect();
                let mut zero = vec![false; m];
                zero[..ci].copy_from_slice(&common);
                zero[ci] = true;
                fresh.push(Ray { v: primitive(v), zero });
            }
        }
        let mut next: Vec<Ray> = Vec::new();
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i].is_negative() {
                continue;
            }
            r.zero[ci] = vals[i].is_zero();
            next.push(r);
        }
        next.extend(fresh);
        rays = next;
    }
    let mut out: Vec<ZVec> = rays.into_iter().map(|r| r.v).collect();
    out.sort();
    out.dedup();
    let lineality = if lin.is_empty() {
        Vec::new()
    } else {
        let lq: Vec<Vec<Q>> = lin.iter().map(|v| zq(v)).collect();
        saturate(&lq, n)
    };
    Generators { rays: out, lineality }
}

/// Generators of cone(gens) + span(lin), canonicalized: extreme rays of the
/// pointed part (as primitive vectors) and a saturated lineality basis.
/// Also returns the facet normals and the equations of the span.
pub fn canonical_cone(gens: &[ZVec], lin: &[ZVec], n: usize) -> (Generators, Generators) {
    let mut rows: Vec<Vec<Q>> = gens.iter().map(|g| zq(g)).collect();
    for l in lin {
        rows.push(zq(l));
        rows.push(l.iter().map(|x| -qi(x)).collect());
    }
    let dual = cone_from_inequalities(&rows, n);
    let mut drows: Vec<Vec<Q>> = dual.rays.iter().map(|g| zq(g)).collect();
    for l in &dual.lineality {
        drows.push(zq(l));
        drows.push(l.iter().map(|x| -qi(x)).collect());
    }
    let primal = cone_from_inequalities(&drows, n);
    (primal, dual)
}
