use super::FockCutoff;
use crate::detector::{DetectorModel, Outcome};
use crate::error::Result;

/// A POVM element diagonal in the Fock basis: weight per photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    weights: Vec<f64>,
}

impl Povm {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    /// The identity on the truncated space (used to trace a mode out).
    pub fn identity(cutoff: FockCutoff) -> Self {
        Self {
            weights: vec![1.0; cutoff.dim()],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights.get(k).copied().unwrap_or(0.0)
    }
}

/// The POVM element for `outcome` of `det`, diagonal in the Fock basis up to `cutoff`.
pub fn make_povm(det: &DetectorModel, outcome: Outcome, cutoff: FockCutoff) -> Result<Povm> {
    let weights = (0..cutoff.dim())
        .map(|k| det.response(outcome, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm { weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut() -> FockCutoff {
        FockCutoff::new(12)
    }

    #[test]
    fn ideal_off_is_vacuum_projector() {
        let p = make_povm(&DetectorModel::on_off(), Outcome::Off, cut()).unwrap();
        assert_eq!(p.weight(0), 1.0);
        assert!(p.weights()[1..].iter().all(|&w| w == 0.0));
    }

    #[test]
    fn ideal_pnr_resolves_one_count() {
        let p = make_povm(&DetectorModel::pnr(2).unwrap(), Outcome::Count(2), cut()).unwrap();
        for (k, &w) in p.weights().iter().enumerate() {
            assert_eq!(w, if k == 2 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn threshold_one_is_on_off() {
        let t = DetectorModel::threshold(1).unwrap();
        let o = DetectorModel::on_off();
        for label in [Outcome::Off, Outcome::On] {
            assert_eq!(
                make_povm(&t, label, cut()).unwrap(),
                make_povm(&o, label, cut()).unwrap()
            );
        }
    }

    #[test]
    fn labels_are_complete() {
        let dets = [
            DetectorModel::on_off(),
            DetectorModel::on_off().with_efficiency(0.6).unwrap(),
            DetectorModel::pnr(1).unwrap().with_efficiency(0.8).unwrap(),
            DetectorModel::threshold(3)
                .unwrap()
                .with_efficiency(0.7)
                .unwrap(),
        ];
        for d in dets {
            let mut sum = vec![0.0; cut().dim()];
            for label in d.outcomes(cut().n_max()) {
                let p = make_povm(&d, label, cut()).unwrap();
                for (s, w) in sum.iter_mut().zip(p.weights()) {
                    assert!(*w >= 0.0);
                    *s += w;
                }
            }
            assert!(sum.iter().all(|s| (s - 1.0).abs() < 1e-12), "{d}: {sum:?}");
        }
    }

    #[test]
    fn invalid_label_is_rejected() {
        assert!(make_povm(&DetectorModel::on_off(), Outcome::Count(0), cut()).is_err());
    }
}
