use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ChshSettings;
use crate::csvio::Count;
use crate::error::{Error, Result};

/// Polarizer angle in degrees, reduced mod 180 and quantized to 1e-9°, so
/// that `0`, `180` and `-180` (or `67.5` and `67.500000000001`) name the same
/// analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AngleKey(i64);

const QUANTA_PER_DEG: f64 = 1e9;
const HALF_TURN: i64 = 180_000_000_000;

impl AngleKey {
    pub fn from_degrees(deg: f64) -> Self {
        let q = (deg * QUANTA_PER_DEG).round() as i64;
        Self(q.rem_euclid(HALF_TURN))
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 / QUANTA_PER_DEG
    }

    pub fn orthogonal(self) -> Self {
        Self((self.0 + HALF_TURN / 2).rem_euclid(HALF_TURN))
    }
}

/// Coincidence counts keyed by joint polarizer setting, plus the dwell time
/// spent at each setting. Counts are stored as `f64` so that exact expected
/// values can be fed through the same estimator as sampled data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountsTable {
    entries: BTreeMap<(AngleKey, AngleKey), f64>,
    /// Seconds per joint setting.
    pub duration: f64,
}

#[derive(Deserialize)]
struct CsvRow {
    theta1_deg: f64,
    theta2_deg: f64,
    counts: f64,
}

#[derive(Serialize)]
struct OutRow {
    theta1_deg: f64,
    theta2_deg: f64,
    counts: Count,
}

impl CountsTable {
    pub fn new(duration: f64) -> Self {
        Self {
            entries: BTreeMap::new(),
            duration,
        }
    }

    pub fn insert(&mut self, theta1_deg: f64, theta2_deg: f64, counts: f64) -> Result<()> {
        if !(counts.is_finite() && counts >= 0.0) {
            return Err(Error::Domain(format!(
                "counts at ({theta1_deg}°, {theta2_deg}°) must be finite and nonnegative, got {counts}"
            )));
        }
        self.entries.insert(
            (AngleKey::from_degrees(theta1_deg), AngleKey::from_degrees(theta2_deg)),
            counts,
        );
        Ok(())
    }

    pub fn get(&self, theta1_deg: f64, theta2_deg: f64) -> Option<f64> {
        self.get_key(AngleKey::from_degrees(theta1_deg), AngleKey::from_degrees(theta2_deg))
    }

    fn get_key(&self, a: AngleKey, b: AngleKey) -> Option<f64> {
        self.entries.get(&(a, b)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(θ₁°, θ₂°, counts)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.entries.iter().map(|((a, b), n)| (a.degrees(), b.degrees(), *n))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// All counts multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|(key, n)| (*key, n * k)).collect(),
            duration: self.duration,
        }
    }

    /// Reads `theta1_deg,theta2_deg,counts`. Parse failures carry the 1-based
    /// file line number.
    pub fn read_csv<R: Read>(reader: R, duration: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::format(Some(1), e.to_string()))?
            .clone();
        let want = ["theta1_deg", "theta2_deg", "counts"];
        if headers.iter().collect::<Vec<_>>() != want {
            return Err(Error::format(
                Some(1),
                format!(
                    "expected header `{}`, found `{}`",
                    want.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut table = Self::new(duration);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize);
                Error::format(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line() as usize);
            let row: CsvRow = rec
                .deserialize(Some(&headers))
                .map_err(|e| Error::format(line, e.to_string()))?;
            table
                .insert(row.theta1_deg, row.theta2_deg, row.counts)
                .map_err(|e| Error::format(line, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (theta1_deg, theta2_deg, counts) in self.iter() {
            w.serialize(OutRow {
                theta1_deg,
                theta2_deg,
                counts: Count(counts),
            })
            .map_err(crate::csvio::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The four polarizer angles (degrees) of a CHSH run: `θ₁, θ₁′` at site 1
/// and `θ₂, θ₂′` at site 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePlan {
    pub theta1: f64,
    pub theta1p: f64,
    pub theta2: f64,
    pub theta2p: f64,
}

impl AnglePlan {
    /// `θ₁ = 0°, θ₁′ = 45°, θ₂ = 22.5°, θ₂′ = 67.5°`.
    pub fn standard() -> Self {
        Self {
            theta1: 0.0,
            theta1p: 45.0,
            theta2: 22.5,
            theta2p: 67.5,
        }
    }

    /// Base pairs with their sign in `S`.
    pub fn base_pairs(&self) -> [(f64, f64, f64); 4] {
        [
            (self.theta1, self.theta2, 1.0),
            (self.theta1, self.theta2p, -1.0),
            (self.theta1p, self.theta2, 1.0),
            (self.theta1p, self.theta2p, 1.0),
        ]
    }

    /// The 16 joint settings a run must visit: each base pair with either
    /// analyzer optionally rotated by 90°.
    pub fn joint_settings(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(16);
        for (a, b, _) in self.base_pairs() {
            for da in [0.0, 90.0] {
                for db in [0.0, 90.0] {
                    out.push((a + da, b + db));
                }
            }
        }
        out
    }

    /// The same plan as Bloch-sphere settings.
    pub fn settings(&self) -> ChshSettings {
        let r = f64::to_radians;
        ChshSettings::linear(r(self.theta1), r(self.theta1p), r(self.theta2), r(self.theta2p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub s: f64,
    pub abs_s: f64,
    pub sigma_s: f64,
    /// `(|S| - 2) / σ_S`.
    pub violation_sigmas: f64,
}

/// `S` from coincidence counts, each `P(θ₁,θ₂)` being
/// `(C(θ₁,θ₂) + C(θ₁⊥,θ₂⊥) - C(θ₁,θ₂⊥) - C(θ₁⊥,θ₂)) / ΣC`. The uncertainty is
/// first-order Poisson propagation, each count contributing variance equal
/// to itself.
pub fn chsh_from_counts(counts: &CountsTable, plan: &AnglePlan) -> Result<ChshEstimate> {
    // Keyed gradient so a count shared by two base pairs is propagated once.
    let mut grad: BTreeMap<(AngleKey, AngleKey), (f64, f64)> = BTreeMap::new();
    let mut s = 0.0;
    for (t1, t2, sign) in plan.base_pairs() {
        let a = AngleKey::from_degrees(t1);
        let b = AngleKey::from_degrees(t2);
        let keys = [
            ((a, b), 1.0),
            ((a.orthogonal(), b.orthogonal()), 1.0),
            ((a, b.orthogonal()), -1.0),
            ((a.orthogonal(), b), -1.0),
        ];
        let mut n = [0.0; 4];
        for (slot, ((ka, kb), _)) in n.iter_mut().zip(keys.iter()) {
            *slot = counts
                .get_key(*ka, *kb)
                .ok_or_else(|| Error::Domain(format!("missing counts for ({}°, {}°)", ka.degrees(), kb.degrees())))?;
        }
        let plus = n[0] + n[1];
        let minus = n[2] + n[3];
        let total = plus + minus;
        if total <= 0.0 {
            return Err(Error::Domain(format!("no coincidences at base pair ({t1}°, {t2}°)")));
        }
        s += sign * (plus - minus) / total;
        let d_plus = 2.0 * minus / (total * total);
        let d_minus = -2.0 * plus / (total * total);
        for (i, (key, parity)) in keys.iter().enumerate() {
            let d = if *parity > 0.0 { d_plus } else { d_minus };
            let e = grad.entry(*key).or_insert((0.0, n[i]));
            e.0 += sign * d;
        }
    }
    let var: f64 = grad.values().map(|(d, n)| d * d * n).sum();
    let sigma_s = var.sqrt();
    Ok(ChshEstimate {
        s,
        abs_s: s.abs(),
        sigma_s,
        violation_sigmas: (s.abs() - 2.0) / sigma_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh, TSIRELSON};
    use crate::linalg::{kron, Ket2, Mat2};
    use crate::qstate::{self, DensityMatrix};

    fn linear_ket(deg: f64) -> Ket2 {
        let t = deg.to_radians();
        Ket2::new(t.cos().into(), t.sin().into())
    }

    fn proj(v: &Ket2) -> Mat2 {
        v * v.adjoint()
    }

    fn expected_table(rho: &DensityMatrix, plan: &AnglePlan, n: f64) -> CountsTable {
        let mut t = CountsTable::new(1.0);
        for (a, b) in plan.joint_settings() {
            let pi = kron(&proj(&linear_ket(a)), &proj(&linear_ket(b)));
            t.insert(a, b, n * rho.expectation(&pi)).unwrap();
        }
        t
    }

    #[test]
    fn angle_keys_wrap() {
        assert_eq!(AngleKey::from_degrees(0.0), AngleKey::from_degrees(180.0));
        assert_eq!(AngleKey::from_degrees(-22.5), AngleKey::from_degrees(157.5));
        assert_eq!(AngleKey::from_degrees(67.5).orthogonal(), AngleKey::from_degrees(157.5));
        assert_eq!(AngleKey::from_degrees(135.0).orthogonal(), AngleKey::from_degrees(45.0));
    }

    #[test]
    fn singlet_at_standard_angles() {
        let plan = AnglePlan::standard();
        let t = expected_table(&qstate::singlet_projector(), &plan, 1e4);
        let est = chsh_from_counts(&t, &plan).unwrap();
        assert!((est.abs_s - TSIRELSON).abs() < 1e-12);
        assert!(est.s < 0.0);
    }

    #[test]
    fn noiseless_counts_match_state_value() {
        let plan = AnglePlan {
            theta1: 10.0,
            theta1p: 57.0,
            theta2: -31.0,
            theta2p: 100.0,
        };
        let rho = qstate::tune_entanglement(0.85, 0.7).unwrap();
        let est = chsh_from_counts(&expected_table(&rho, &plan, 3e5), &plan).unwrap();
        assert!((est.s - chsh(&rho, &plan.settings())).abs() < 1e-12);
    }

    #[test]
    fn flat_table_gives_zero() {
        let plan = AnglePlan::standard();
        let mut t = CountsTable::new(1.0);
        for (a, b) in plan.joint_settings() {
            t.insert(a, b, 250.0).unwrap();
        }
        assert_eq!(chsh_from_counts(&t, &plan).unwrap().s, 0.0);
    }

    #[test]
    fn scaling_counts() {
        let plan = AnglePlan::standard();
        let t = expected_table(&qstate::werner(0.9).unwrap(), &plan, 1e4);
        let a = chsh_from_counts(&t, &plan).unwrap();
        let b = chsh_from_counts(&t.scaled(9.0), &plan).unwrap();
        assert!((a.s - b.s).abs() < 1e-12);
        assert!((b.sigma_s - a.sigma_s / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_matches_finite_difference_propagation() {
        let plan = AnglePlan::standard();
        let t = expected_table(&qstate::werner(0.8).unwrap(), &plan, 2e3);
        let est = chsh_from_counts(&t, &plan).unwrap();
        let mut var = 0.0;
        for (a, b, n) in t.iter() {
            let h = 1e-3;
            let mut up = t.clone();
            up.insert(a, b, n + h).unwrap();
            let mut dn = t.clone();
            dn.insert(a, b, n - h).unwrap();
            let d = (chsh_from_counts(&up, &plan).unwrap().s - chsh_from_counts(&dn, &plan).unwrap().s) / (2.0 * h);
            var += d * d * n;
        }
        assert!((var.sqrt() - est.sigma_s).abs() < 1e-9 * est.sigma_s.max(1.0));
    }

    #[test]
    fn missing_and_empty_entries_are_errors() {
        let plan = AnglePlan::standard();
        let mut t = expected_table(&qstate::singlet_projector(), &plan, 100.0);
        let mut hole = CountsTable::new(1.0);
        for (a, b, n) in t.iter().skip(1) {
            hole.insert(a, b, n).unwrap();
        }
        assert!(chsh_from_counts(&hole, &plan).is_err());
        for (a, b) in plan.joint_settings().into_iter().take(4) {
            t.insert(a, b, 0.0).unwrap();
        }
        assert!(chsh_from_counts(&t, &plan).is_err());
        assert!(t.insert(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let plan = AnglePlan::standard();
        let t = expected_table(&qstate::werner(0.5).unwrap(), &plan, 1e3);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta1_deg,theta2_deg,counts\n"));
        let back = CountsTable::read_csv(text.as_bytes(), 1.0).unwrap();
        assert_eq!(back.len(), 16);
        for (a, b, n) in t.iter() {
            assert!((back.get(a, b).unwrap() - n).abs() <= 1e-12 * n.max(1.0));
        }

        let bad = "theta1_deg,theta2_deg,counts\n0,0,10\n0,22.5,abc\n";
        match CountsTable::read_csv(bad.as_bytes(), 1.0) {
            Err(Error::Format { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
        let wrong_header = "a,b,c\n0,0,1\n";
        assert!(matches!(
            CountsTable::read_csv(wrong_header.as_bytes(), 1.0),
            Err(Error::Format { line: Some(1), .. })
        ));
    }
}
