//! Clebsch-Gordan coefficients for integer angular momenta.

fn factorial(n: i32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `⟨j1 m1; j2 m2 | j m⟩` by the Racah formula.
///
/// Returns 0 when a selection rule is violated.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m
        || m1.abs() > j1
        || m2.abs() > j2
        || m.abs() > j
        || j < (j1 - j2).abs()
        || j > j1 + j2
        || j1 < 0
        || j2 < 0
    {
        return 0.0;
    }
    let prefactor = ((2 * j + 1) as f64 * factorial(j + j1 - j2) * factorial(j - j1 + j2) * factorial(j1 + j2 - j)
        / factorial(j1 + j2 + j + 1))
    .sqrt();
    let norm = (factorial(j + m)
        * factorial(j - m)
        * factorial(j1 - m1)
        * factorial(j1 + m1)
        * factorial(j2 - m2)
        * factorial(j2 + m2))
    .sqrt();
    let k_min = 0.max(j2 - j - m1).max(j1 + m2 - j);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(j1 + j2 - j - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j - j2 + m1 + k)
            * factorial(j - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    prefactor * norm * sum
}

/// Dipole coupling weight `⟨F mF; 1 q | F' mF'⟩` for a transition driven by
/// polarisation `q ∈ {−1, 0, +1}`.
pub fn cg_coefficient(f: i32, mf: i32, q: i32, fp: i32, mfp: i32) -> f64 {
    if !(-1..=1).contains(&q) {
        return 0.0;
    }
    clebsch_gordan(f, mf, 1, q, fp, mfp)
}

/// Probability that `|F', mF'⟩` decays with polarisation `q` into the `F`
/// manifold, normalised over all polarisations.
pub fn branching_ratio(fp: i32, mfp: i32, f: i32, q: i32) -> f64 {
    let total: f64 = (-1..=1).map(|p| cg_coefficient(f, mfp - p, p, fp, mfp).powi(2)).sum();
    if total == 0.0 {
        return 0.0;
    }
    cg_coefficient(f, mfp - q, q, fp, mfp).powi(2) / total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((cg_coefficient(2, 0, 0, 3, 0).powi(2) - 0.6).abs() < 1e-14);
        assert!((cg_coefficient(2, 2, 1, 3, 3) - 1.0).abs() < 1e-14);
        // ⟨1 1; 1 −1 | 0 0⟩ = 1/√3
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        // ⟨1 0; 1 0 | 1 0⟩ vanishes
        assert!(clebsch_gordan(1, 0, 1, 0, 1, 0).abs() < 1e-15);
        // ⟨1 1; 1 −1 | 1 0⟩ = 1/√2
        assert!((clebsch_gordan(1, 1, 1, -1, 1, 0) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(cg_coefficient(2, 0, 1, 3, 0), 0.0);
        assert_eq!(cg_coefficient(2, 3, 0, 3, 3), 0.0);
        assert_eq!(cg_coefficient(2, 0, 2, 3, 2), 0.0);
        assert_eq!(cg_coefficient(2, 0, 0, 4, 0), 0.0);
    }

    #[test]
    fn branching_from_centre() {
        assert!((branching_ratio(3, 0, 2, 0) - 0.6).abs() < 1e-14);
        assert!((branching_ratio(3, 0, 2, 1) - 0.2).abs() < 1e-14);
        assert!((branching_ratio(3, 0, 2, -1) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn orthogonality() {
        for (j1, j2) in [(2i32, 1i32), (1, 1), (3, 2)] {
            for ja in (j1 - j2).abs()..=j1 + j2 {
                for jb in (j1 - j2).abs()..=j1 + j2 {
                    for m in -ja.min(jb)..=ja.min(jb) {
                        let mut s = 0.0;
                        for m1 in -j1..=j1 {
                            let m2 = m - m1;
                            s += clebsch_gordan(j1, m1, j2, m2, ja, m) * clebsch_gordan(j1, m1, j2, m2, jb, m);
                        }
                        let expected = if ja == jb { 1.0 } else { 0.0 };
                        assert!((s - expected).abs() < 1e-12, "{j1} {j2} {ja} {jb} {m}");
                    }
                }
            }
        }
    }
}
