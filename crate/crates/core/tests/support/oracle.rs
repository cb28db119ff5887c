//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the library under test.

#![allow(dead_code, clippy::excessive_precision, clippy::too_many_arguments, clippy::needless_range_loop)]

/// Lanczos approximation (g = 7, 9 terms) of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// Two-sided Student t tail probability by direct quadrature of the density.
/// Intended for `df >= 1`.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    let at = t.abs();
    let log_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = move |x: f64| (log_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    if at <= 3.0 {
        1.0 - 2.0 * integrate(&density, 0.0, at, 1e-15)
    } else {
        // tail integral with x = 1/u
        let g = move |u: f64| if u == 0.0 { 0.0 } else { density(1.0 / u) / (u * u) };
        2.0 * integrate(&g, 0.0, 1.0 / at, 1e-17)
    }
}

pub struct YuenOracle {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean1: f64,
    pub mean2: f64,
}

/// (trimmed mean, d, h) by sorting, Winsorizing element by element and
/// evaluating the textbook formulas.
fn yuen_group(ys: &[f64], gamma: f64) -> (f64, f64, f64) {
    let n = ys.len();
    let mut s = ys.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let g = (gamma * n as f64).floor() as usize;
    let h = n - 2 * g;
    let mut tsum = 0.0;
    for i in g..(n - g) {
        tsum += s[i];
    }
    let tmean = tsum / h as f64;
    let lo = s[g];
    let hi = s[n - g - 1];
    let mut w = Vec::with_capacity(n);
    for &y in ys {
        if y <= lo {
            w.push(lo);
        } else if y >= hi {
            w.push(hi);
        } else {
            w.push(y);
        }
    }
    let wbar = w.iter().sum::<f64>() / n as f64;
    let sw2 = w.iter().map(|v| (v - wbar) * (v - wbar)).sum::<f64>() / (n as f64 - 1.0);
    let d = (n as f64 - 1.0) * sw2 / (h as f64 * (h as f64 - 1.0));
    (tmean, d, h as f64)
}

pub fn yuen(a: &[f64], b: &[f64], gamma: f64) -> YuenOracle {
    let (m1, d1, h1) = yuen_group(a, gamma);
    let (m2, d2, h2) = yuen_group(b, gamma);
    let t = (m1 - m2) / (d1 + d2).sqrt();
    let df = (d1 + d2).powi(2) / (d1 * d1 / (h1 - 1.0) + d2 * d2 / (h2 - 1.0));
    YuenOracle { t, df, p: t_two_sided(t, df), mean1: m1, mean2: m2 }
}

/// Welch's unequal-variance t statistic and degrees of freedom.
pub fn welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v / n, n)
    };
    let (m1, s1, n1) = stats(a);
    let (m2, s2, n2) = stats(b);
    let t = (m1 - m2) / (s1 + s2).sqrt();
    let df = (s1 + s2).powi(2) / (s1 * s1 / (n1 - 1.0) + s2 * s2 / (n2 - 1.0));
    (t, df)
}

/// Step-up procedure evaluated literally: walk from the largest p-value
/// down, and at the first m with m-th smallest p <= alpha / (K - m + 1)
/// reject every hypothesis whose p-value is at most that value.
pub fn hochberg(p: &[f64], alpha: f64) -> Vec<bool> {
    let k = p.len();
    for m in (1..=k).rev() {
        // m-th smallest by counting
        let vm = p
            .iter()
            .copied()
            .find(|&v| {
                let below = p.iter().filter(|&&u| u < v).count();
                let at_most = p.iter().filter(|&&u| u <= v).count();
                below < m && m <= at_most
            })
            .unwrap();
        if vm <= alpha / (k - m + 1) as f64 {
            return p.iter().map(|&v| v <= vm).collect();
        }
    }
    vec![false; k]
}

fn ideal_fourths(x: &[f64]) -> (f64, f64) {
    let mut y = x.to_vec();
    y.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = y.len();
    let j = (n as f64 / 4.0 + 5.0 / 12.0).floor() as usize;
    let g = n as f64 / 4.0 - j as f64 + 5.0 / 12.0;
    let ql = (1.0 - g) * y[j - 1] + g * y[j];
    let k = n - j + 1;
    let qu = (1.0 - g) * y[k - 1] + g * y[k - 2];
    (ql, qu)
}

fn column_median(rows: &[[f64; 2]], c: usize) -> f64 {
    let mut v: Vec<f64> = rows.iter().map(|r| r[c]).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Matrix of `D_ij = || T_ij ||` (row i = direction) built from the explicit
/// vector `T_ij = (V_ij / C_i) U_i`; `None` rows for `C_i = 0`.
pub fn projected_lengths(rows: &[[f64; 2]]) -> Vec<Option<Vec<f64>>> {
    let tau = [column_median(rows, 0), column_median(rows, 1)];
    let u: Vec<[f64; 2]> = rows.iter().map(|r| [r[0] - tau[0], r[1] - tau[1]]).collect();
    u.iter()
        .map(|ui| {
            let c = ui[0] * ui[0] + ui[1] * ui[1];
            if c == 0.0 {
                return None;
            }
            Some(
                u.iter()
                    .map(|uj| {
                        let v = ui[0] * uj[0] + ui[1] * uj[1];
                        let t = [v / c * ui[0], v / c * ui[1]];
                        (t[0] * t[0] + t[1] * t[1]).sqrt()
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Projection distances `p_d` of every row.
pub fn projection_distances(rows: &[[f64; 2]]) -> Vec<f64> {
    let mut pd = vec![0.0_f64; rows.len()];
    for d in projected_lengths(rows).into_iter().flatten() {
        let (q1, q2) = ideal_fourths(&d);
        if q2 - q1 <= 0.0 {
            continue;
        }
        for (j, v) in d.iter().enumerate() {
            pd[j] = pd[j].max(v / (q2 - q1));
        }
    }
    pd
}

/// Squared Mahalanobis distance with an explicit 2x2 inverse.
pub fn mahalanobis2(a: [f64; 2], b: [f64; 2], cov: [[f64; 2]; 2]) -> f64 {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
    let d = [a[0] - b[0], a[1] - b[1]];
    d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1])
}
