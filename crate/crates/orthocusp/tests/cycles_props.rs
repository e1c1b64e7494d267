//! Isometry enumeration, fixed sublattices and ramification classes.

mod common;

use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use orthocusp::cycles::*;
use orthocusp::linalg::{zq, QMat, ZVec};
use orthocusp::qform::QuadraticLattice;
use orthocusp::rat::{qr, to_f64, Q};
use orthocusp::Error;
use rand::Rng;

/// Every integral 2×2 matrix with entries in [−b, b] that is an isometry.
fn brute_force_2x2(l: &QuadraticLattice, b: i64) -> Vec<QMat> {
    let mut out = Vec::new();
    for a in -b..=b {
        for c in -b..=b {
            for d in -b..=b {
                for e in -b..=b {
                    let m = QMat::from_i64(&[&[a, c], &[d, e]]);
                    if m.transpose().mul(l.gram()).mul(&m) == *l.gram() {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

fn a2() -> QuadraticLattice {
    QuadraticLattice::from_i64(&[&[2, 1], &[1, 2]])
}

#[test]
fn enumeration_against_full_scan() {
    for (l, want) in [(QuadraticLattice::diagonal(&[1, 1]), 8usize), (a2(), 12)] {
        for bound in 1..=2u32 {
            let els = enumerate_isometries(&l, bound).unwrap();
            assert_eq!(els.len(), want);
            let brute = brute_force_2x2(&l, bound as i64);
            assert_eq!(brute.len(), want);
            assert!(brute.iter().all(|m| els.iter().any(|e| e.mat == *m)));
            // a group: closed under products
            for x in &els {
                for y in &els {
                    let p = x.mat.mul(&y.mat);
                    assert!(els.iter().any(|e| e.mat == p));
                }
            }
            let orders: Vec<u32> = els.iter().map(|e| e.order.unwrap()).collect();
            assert!(orders.iter().all(|o| want as u32 % o == 0));
        }
    }
    for l in [QuadraticLattice::diagonal(&[1, 1, -1]), QuadraticLattice::diagonal(&[1, 1, -1, -1]), QuadraticLattice::diagonal(&[2, 3, -5])] {
        let n = l.rank();
        let els = enumerate_isometries(&l, 1).unwrap();
        let id = QMat::identity(n);
        let neg = id.scale(&Q::from_integer((-1).into()));
        assert!(els.iter().any(|e| e.mat == id) && els.iter().any(|e| e.mat == neg));
        assert!(els.iter().all(|e| e.mat.transpose().mul(l.gram()).mul(&e.mat) == *l.gram()));
    }
    // ⟨2,3,−5⟩ with entries in {0,±1}: only the 8 sign changes
    assert_eq!(enumerate_isometries(&QuadraticLattice::diagonal(&[2, 3, -5]), 1).unwrap().len(), 8);
    assert!(enumerate_isometries(&QuadraticLattice::diagonal(&[1; 7]), 1).is_err());
}

/// λ by floating-point eigenspaces: the unique eigenvalue θ, Im θ ≥ 0, whose
/// eigenspace carries a positive vector of b(x, x̄) (two, if θ is real).
fn lambda_oracle(g: &QMat, gram: &QMat, order: u32) -> Option<(u32, u32)> {
    let n = g.rows();
    let gf = DMatrix::from_fn(n, n, |i, j| Complex::new(to_f64(&g[(i, j)]), 0.0));
    let bf = DMatrix::from_fn(n, n, |i, j| Complex::new(to_f64(&gram[(i, j)]), 0.0));
    let mut hits = Vec::new();
    for k in 0..=order / 2 {
        let t = 2.0 * std::f64::consts::PI * k as f64 / order as f64;
        let theta = Complex::new(t.cos(), t.sin());
        let m = &gf - DMatrix::identity(n, n) * theta;
        let svd = m.svd(false, true);
        let vt = svd.v_t.unwrap();
        let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] < 1e-8).collect();
        if null.is_empty() {
            continue;
        }
        // columns spanning the eigenspace
        let w = DMatrix::from_fn(n, null.len(), |i, j| vt[(null[j], i)].conj());
        let h = w.transpose() * &bf * w.map(|z| z.conj());
        let h = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
        let pos = h.symmetric_eigen().eigenvalues.iter().filter(|&&e| e > 1e-9).count();
        let real = 2 * k == order || k == 0;
        if (real && pos >= 2) || (!real && pos >= 1) {
            hits.push((k, order));
        }
    }
    if hits.len() == 1 {
        Some(hits[0])
    } else {
        None
    }
}

fn negative_definite(basis: &[ZVec], l: &QuadraticLattice) -> bool {
    if basis.is_empty() {
        return true;
    }
    let qb: Vec<Vec<Q>> = basis.iter().map(|v| zq(v)).collect();
    let m = QMat::from_rows(qb.iter().map(|x| qb.iter().map(|y| l.b(x, y)).collect()).collect()).unwrap();
    QuadraticLattice::new(m).unwrap().signature().unwrap() == (0, basis.len())
}

fn test_lattices() -> Vec<(QuadraticLattice, u32)> {
    vec![
        (QuadraticLattice::diagonal(&[1, 1]), 1),
        (a2(), 1),
        (QuadraticLattice::diagonal(&[1, 1, -1]), 1),
        (QuadraticLattice::diagonal(&[1, 1, -2]), 2),
        (QuadraticLattice::diagonal(&[1, 1, -1, -1]), 1),
        (QuadraticLattice::from_i64(&[&[2, 1, 0], &[1, 2, 0], &[0, 0, -2]]), 1),
        (QuadraticLattice::from_i64(&[&[2, 1, 0, 0], &[1, 2, 0, 0], &[0, 0, -2, 1], &[0, 0, 1, -2]]), 1),
    ]
}

#[test]
fn every_enumerated_element() {
    let mut checked = 0;
    for (l, bound) in test_lattices() {
        for g in enumerate_isometries(&l, bound).unwrap() {
            let Some(order) = g.order else {
                assert_eq!(chi_order_at(&g, &l), Err(Error::NotRootOfUnity));
                continue;
            };
            let oracle = lambda_oracle(&g.mat, l.gram(), order);
            let rep = match classify_ramification(&g, &l) {
                Err(Error::NoPositiveEigenplane) => {
                    assert!(oracle.is_none(), "{:?}", g.mat);
                    continue;
                }
                other => other.unwrap(),
            };
            let (k, d) = oracle.expect("oracle finds the eigenvalue");
            assert_eq!(rep.lambda, RootOfUnity::new(k as i64, d));
            assert_eq!(rep.chi_order, rep.lambda.order());
            // kernel criterion, literally on basis vectors
            assert!(kernel_criterion_holds(&g, &rep));
            if rep.lambda == RootOfUnity::one() {
                for s in &rep.s {
                    let x = zq(s);
                    assert_eq!(g.mat.mul_vec(&x), x);
                }
            }
            // double perp
            let pp = orthogonal_complement(&rep.s_perp, &l);
            assert!(same_sublattice(&pp, &rep.s));
            let ppp = orthogonal_complement(&pp, &l);
            assert!(same_sublattice(&ppp, &rep.s_perp) || (ppp.is_empty() && rep.s_perp.is_empty()));
            assert!(negative_definite(&rep.s_perp, &l));
            // certificate
            let cert = rep.certificate.as_ref().unwrap();
            assert_eq!(cert.r, rep.chi_order);
            assert_eq!(cert.d * cert.phi_r as usize, rep.s.len());
            assert!(cert.verify(&g.mat, &l));
            checked += 1;
        }
    }
    assert!(checked > 50, "only {checked} elements classified");
}

#[test]
fn named_examples() {
    let l4 = QuadraticLattice::diagonal(&[1, 1, -1, -1]);
    let jj = IsometryElement::from_i64(&[&[0, -1, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, -1], &[0, 0, 1, 0]], &l4).unwrap();
    assert_eq!(chi_order_at(&jj, &l4).unwrap(), (RootOfUnity::new(1, 4), 4));
    let rep = classify_ramification(&jj, &l4).unwrap();
    assert_eq!(rep.classification.name(), "special_cycle(Q(i))");
    assert_eq!(rep.s.len(), 4);
    let cert = rep.certificate.unwrap();
    assert_eq!((cert.r, cert.phi_r, cert.d), (4, 2, 2));

    let id = IsometryElement::new(QMat::identity(4), &l4).unwrap();
    assert_eq!(chi_order_at(&id, &l4).unwrap(), (RootOfUnity::one(), 1));
    let rep = classify_ramification(&id, &l4).unwrap();
    assert_eq!(rep.classification, Classification::InteriorUnramified);
    assert_eq!((rep.s.len(), rep.s_perp.len()), (4, 0));

    let minus = IsometryElement::new(QMat::identity(4).scale(&qr(-1, 1)), &l4).unwrap();
    assert_eq!(chi_order_at(&minus, &l4).unwrap(), (RootOfUnity::new(1, 2), 2));
    let rep = classify_ramification(&minus, &l4).unwrap();
    assert_eq!(rep.classification, Classification::MinusIdentity);
    assert_eq!(rep.s.len(), 4);

    // reflection in a negative vector: S = v^⊥ of corank 1, a Heegner divisor
    let l3 = QuadraticLattice::diagonal(&[1, 1, -2]);
    let refl = IsometryElement::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -1]], &l3).unwrap();
    let rep = classify_ramification(&refl, &l3).unwrap();
    assert_eq!(rep.classification, Classification::HeegnerReflectionType { codim: 1 });
    assert_eq!(rep.d_equations, vec![vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)]]);
    // reflection in v = (1,0,1,1), a norm −1 vector mixing both signs
    let l = QuadraticLattice::diagonal(&[1, 1, -1, -1]);
    let v = [1i64, 0, 1, 1];
    let gram = [1i64, 1, -1, -1];
    let mut rows = vec![vec![0i64; 4]; 4];
    // q(v) = −1, so σ_v(x) = x − 2b(x,v)/q(v)·v = x + 2b(x,v)v
    for j in 0..4 {
        for i in 0..4 {
            rows[i][j] = if i == j { 1 } else { 0 } + 2 * gram[j] * v[j] * v[i];
        }
    }
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    let sigma = IsometryElement::from_i64(&refs, &l).unwrap();
    let rep = classify_ramification(&sigma, &l).unwrap();
    assert_eq!(rep.classification, Classification::HeegnerReflectionType { codim: 1 });
    assert!(same_sublattice(&rep.s_perp, &[v.iter().map(|&x| BigInt::from(x)).collect()]));

    // J on the plane: φ₄ once; order-3 rotation of A₂: φ₃ once
    let l2 = QuadraticLattice::diagonal(&[1, 1]);
    let j = IsometryElement::from_i64(&[&[0, -1], &[1, 0]], &l2).unwrap();
    let cert = cyclotomic_decomposition(&j.mat, &classify_ramification(&j, &l2).unwrap().s, &l2).unwrap();
    assert_eq!((cert.r, cert.d), (4, 1));
    let rho = enumerate_isometries(&a2(), 1).unwrap().into_iter().find(|e| e.order == Some(3)).unwrap();
    let rep = classify_ramification(&rho, &a2()).unwrap();
    assert_eq!(rep.lambda, RootOfUnity::new(1, 3));
    assert_eq!(rep.classification.name(), "special_cycle(Q(sqrt(-3)))");
    let cert = rep.certificate.unwrap();
    assert_eq!((cert.r, cert.phi_r, cert.d), (3, 2, 1));
}

#[test]
fn error_cases() {
    let l2 = QuadraticLattice::diagonal(&[1, 1]);
    assert_eq!(IsometryElement::from_i64(&[&[1, 1], &[0, 1]], &l2), Err(Error::NotIsometry));
    // a reflection in a positive vector moves the positive plane
    let r = IsometryElement::from_i64(&[&[1, 0], &[0, -1]], &l2).unwrap();
    assert!(matches!(fixed_sublattice(&r, &l2), Err(Error::NoPositiveEigenplane)));
    // the μ₂-action of a reflection fixes vectors
    let full: Vec<ZVec> = vec![vec![1.into(), 0.into()], vec![0.into(), 1.into()]];
    assert!(matches!(cyclotomic_decomposition(&r.mat, &full, &l2), Err(Error::FixedVectorPresent)));
    // an infinite-order Lorentz transformation of x² + y² − z²
    let l3 = QuadraticLattice::diagonal(&[1, 1, -1]);
    let b = IsometryElement::from_i64(&[&[1, -2, 2], &[2, -1, 2], &[2, -2, 3]], &l3).unwrap();
    assert_eq!(b.order, None);
    assert_eq!(chi_order_at(&b, &l3), Err(Error::NotRootOfUnity));
    let l13 = QuadraticLattice::diagonal(&[1, -1, -1]);
    assert!(matches!(fixed_sublattice(&IsometryElement::new(QMat::identity(3), &l13).unwrap(), &l13), Err(Error::WrongSignature(1, 2))));
}

#[test]
fn conjugation_invariance() {
    let mut rng = common::rng(0xc1c1e5);
    for (l, bound) in test_lattices() {
        let els = enumerate_isometries(&l, bound).unwrap();
        let finite: Vec<&IsometryElement> = els.iter().filter(|e| e.order.is_some()).collect();
        for _ in 0..20 {
            let g = finite[rng.gen_range(0..finite.len())];
            let h = &els[rng.gen_range(0..els.len())];
            let c = g.conjugate_by(&h.mat).unwrap();
            match (classify_ramification(g, &l), classify_ramification(&c, &l)) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.classification, b.classification);
                    assert_eq!(a.lambda, b.lambda);
                    let moved: Vec<ZVec> = a.s.iter().map(|v| orthocusp::rat::primitive_int(&h.mat.mul_vec(&zq(v)))).collect();
                    assert!(same_sublattice(&moved, &b.s));
                }
                (Err(x), Err(y)) => assert_eq!(x, y),
                (a, b) => panic!("{:?} vs {:?}", a.map(|r| r.classification), b.map(|r| r.classification)),
            }
        }
    }
}

#[test]
fn stabilizers_of_a_split_sublattice() {
    // S = ⟨e1, e2⟩ ⊂ ⟨1,1,−1⟩: Γ_S = D₄ × {±1}
    let l = QuadraticLattice::diagonal(&[1, 1, -1]);
    let group = enumerate_isometries(&l, 1).unwrap();
    let refl = IsometryElement::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -1]], &l).unwrap();
    let rep = fixed_sublattice(&refl, &l).unwrap();
    let o = stabilizer_orders(&group, &rep.s, &rep.s_perp).unwrap();
    assert_eq!(o, StabilizerOrders { gamma_s: 16, tilde_s: 8, bar_s: 8, tilde_s_perp: 2, bar_s_perp: 2 });
}

#[test]
fn tangent_actions() {
    let l3 = QuadraticLattice::diagonal(&[1, 1, -2]);
    let refl = IsometryElement::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -1]], &l3).unwrap();
    let a = tangent_angles(&refl, &l3).unwrap();
    assert_eq!(a, vec![qr(1, 2)]);
    assert_eq!(reid_tai_sum(&a), qr(1, 2));
    let minus = IsometryElement::new(QMat::identity(3).scale(&qr(-1, 1)), &l3).unwrap();
    assert_eq!(reid_tai_sum(&tangent_angles(&minus, &l3).unwrap()), qr(0, 1));
    let l4 = QuadraticLattice::diagonal(&[1, 1, -1, -1]);
    let jj = IsometryElement::from_i64(&[&[0, -1, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, -1], &[0, 0, 1, 0]], &l4).unwrap();
    assert_eq!(tangent_angles(&jj, &l4).unwrap(), vec![qr(0, 1), qr(1, 2)]);
    // the tangent space has dimension n
    for (l, bound) in test_lattices() {
        for g in enumerate_isometries(&l, bound).unwrap().iter().filter(|g| g.order.is_some()) {
            if let Ok(t) = tangent_angles(g, &l) {
                assert_eq!(t.len(), l.rank() - 2);
                assert!(t.iter().all(|x| *x >= qr(0, 1) && *x < qr(1, 1)));
            }
        }
    }
    assert_eq!(reid_tai_sum(&[qr(3, 2), qr(1, 3)]), qr(5, 6));
}

#[test]
fn reports_are_deterministic() {
    let l = QuadraticLattice::diagonal(&[1, 1, -1, -1]);
    let a: Vec<String> = enumerate_isometries(&l, 1).unwrap().iter().map(|e| e.to_json().to_string()).collect();
    let b: Vec<String> = enumerate_isometries(&l, 1).unwrap().iter().map(|e| e.to_json().to_string()).collect();
    assert_eq!(a, b);
}
