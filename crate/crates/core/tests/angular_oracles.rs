//! Wigner 6-j symbols against an independent contraction of four 3-j symbols,
//! and against the tetrahedral symmetry group.

use atomnet::angular::wigner6j;
use proptest::prelude::*;

fn fact(n: i64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// 3-j symbol from the Racah formula; all arguments doubled.
fn three_j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 || (j1 + j2 + j3) % 2 != 0 {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return 0.0;
        }
    }
    let h = |x: i64| x / 2;
    let delta = fact(h(j1 + j2 - j3)) * fact(h(j1 - j2 + j3)) * fact(h(-j1 + j2 + j3)) / fact(h(j1 + j2 + j3) + 1);
    let norm =
        fact(h(j1 + m1)) * fact(h(j1 - m1)) * fact(h(j2 + m2)) * fact(h(j2 - m2)) * fact(h(j3 + m3)) * fact(h(j3 - m3));
    let mut sum = 0.0;
    for k in 0..=h(j1 + j2 + j3) {
        let args = [k, h(j3 - j2 + m1) + k, h(j3 - j1 - m2) + k, h(j1 + j2 - j3) - k, h(j1 - m1) - k, h(j2 + m2) - k];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / args.iter().map(|&a| fact(a)).product::<f64>();
    }
    let phase = h(j1 - j2 - m3);
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * (delta * norm).sqrt() * sum
}

/// 6-j symbol as a sum over magnetic quantum numbers; doubled arguments.
fn six_j_by_contraction(j: [i64; 6]) -> f64 {
    let [j1, j2, j3, j4, j5, j6] = j;
    let ms = |jj: i64| (-jj..=jj).step_by(2);
    let mut total = 0.0;
    for m1 in ms(j1) {
        for m2 in ms(j2) {
            for m4 in ms(j4) {
                for m5 in ms(j5) {
                    let m3 = -m1 - m2;
                    let m6 = m5 - m1;
                    let t = three_j(j1, j2, j3, -m1, -m2, -m3)
                        * three_j(j1, j5, j6, m1, -m5, m6)
                        * three_j(j4, j2, j6, m4, m2, -m6)
                        * three_j(j4, j5, j3, -m4, m5, m3);
                    if t == 0.0 {
                        continue;
                    }
                    let s: i64 = j.iter().sum::<i64>() - (m1 + m2 + m3 + m4 + m5 + m6);
                    total += if (s / 2).rem_euclid(2) == 0 { t } else { -t };
                }
            }
        }
    }
    total
}

fn halves(j: [i64; 6]) -> [f64; 6] {
    j.map(|x| x as f64 / 2.0)
}

#[test]
fn three_j_oracle_known_values() {
    // (1 1 0; 0 0 0) = -1/sqrt(3), (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
    assert!((three_j(2, 2, 0, 0, 0, 0) + 1.0 / 3f64.sqrt()).abs() < 1e-14);
    assert!((three_j(1, 1, 2, 1, -1, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-14);
}

#[test]
fn line_coefficient_matches_contraction() {
    let j = [2, 4, 2, 3, 1, 1];
    let expected = six_j_by_contraction(j);
    assert!((expected - 1.0 / 12f64.sqrt()).abs() < 1e-12);
    assert!((wigner6j(halves(j)).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn exhaustive_small_arguments_match_contraction() {
    let mut checked = 0;
    for code in 0..5i64.pow(6) {
        let mut c = code;
        let j: [i64; 6] = std::array::from_fn(|_| {
            let d = c % 5;
            c /= 5;
            d
        });
        let Ok(value) = wigner6j(halves(j)) else { continue };
        let oracle = six_j_by_contraction(j);
        assert!((value - oracle).abs() < 1e-12, "{j:?}: {value} vs {oracle}");
        checked += usize::from(oracle != 0.0);
    }
    assert!(checked > 100);
}

/// The 24 tetrahedral symmetries: column permutations times upper/lower swaps in pairs of columns.
fn symmetries(j: [i64; 6]) -> Vec<[i64; 6]> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let swaps: [[bool; 3]; 4] = [[false; 3], [true, true, false], [true, false, true], [false, true, true]];
    let mut out = Vec::new();
    for p in perms {
        for s in swaps {
            let mut k = [0; 6];
            for col in 0..3 {
                let (up, down) = (j[p[col]], j[p[col] + 3]);
                let (up, down) = if s[col] { (down, up) } else { (up, down) };
                k[col] = up;
                k[col + 3] = down;
            }
            out.push(k);
        }
    }
    out
}

proptest! {
    #[test]
    fn tetrahedral_symmetry(j in proptest::array::uniform6(0i64..=9)) {
        let base = wigner6j(halves(j)).ok();
        for k in symmetries(j) {
            let v = wigner6j(halves(k)).ok();
            match (base, v) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", j, k),
                (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
            }
        }
    }
}

#[test]
fn orthogonality() {
    // Σ_j3 (2 j3 + 1)(2 j6 + 1) {j1 j2 j3; j4 j5 j6}{j1 j2 j3; j4 j5 j6'} = δ(j6, j6')
    let admissible = |a: i64, b: i64, c: i64| c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0;
    let mut checked = 0;
    for code in 0..5i64.pow(6) {
        let mut c = code;
        let [j1, j2, j4, j5, j6, j6p]: [i64; 6] = std::array::from_fn(|_| {
            let d = c % 5;
            c /= 5;
            d
        });
        if !(admissible(j1, j5, j6) && admissible(j4, j2, j6) && admissible(j1, j5, j6p) && admissible(j4, j2, j6p)) {
            continue;
        }
        let mut s = 0.0;
        for j3 in 0..=8 {
            let a = wigner6j(halves([j1, j2, j3, j4, j5, j6])).unwrap_or(0.0);
            let b = wigner6j(halves([j1, j2, j3, j4, j5, j6p])).unwrap_or(0.0);
            s += (j3 as f64 + 1.0) * (j6 as f64 + 1.0) * a * b;
        }
        let expected = if j6 == j6p { 1.0 } else { 0.0 };
        assert!((s - expected).abs() < 1e-12, "{:?}: {s}", [j1, j2, j4, j5, j6, j6p]);
        checked += 1;
    }
    assert!(checked > 100);
}
