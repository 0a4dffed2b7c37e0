use cvdistill::blocks::{block_family, FamilyOptions};
use cvdistill::detector::{DetectorModel, Scenario};
use cvdistill::fock::{run_oracle, FockCutoff, OracleConfig};
use cvdistill::params::ProtocolParams;

fn compare(p: ProtocolParams, s: Scenario, kmax: usize) -> f64 {
    let fam = block_family(&p, &s, &FamilyOptions::default()).unwrap();
    let cfg = OracleConfig::new(FockCutoff::new(30));
    let oracle = run_oracle(&p, &s, &cfg).unwrap();
    let mut worst = 0.0f64;
    for k in 0..=kmax {
        let a = fam.block(k).unwrap();
        let b = oracle.blocks.block(k).unwrap();
        worst = worst.max((a - b).amax());
    }
    worst
}

#[test]
fn before_blocks_match_oracle() {
    let p = ProtocolParams::before(0.5, 0.5).unwrap();
    let d = compare(p, Scenario::Before, 6);
    assert!(d < 1e-10, "{d:e}");
}

#[test]
fn onoff_blocks_match_oracle() {
    for eta in [0.5, 1.0] {
        let p = ProtocolParams::new(0.5, eta, 0.9).unwrap();
        let d = compare(p, Scenario::Distilled(DetectorModel::on_off()), 6);
        assert!(d < 1e-10, "η = {eta}: {d:e}");
    }
}

#[test]
fn pnr_blocks_match_oracle() {
    for l in [1, 2] {
        for eta in [0.5, 1.0] {
            let p = ProtocolParams::new(0.5, eta, 0.9).unwrap();
            let d = compare(p, Scenario::Distilled(DetectorModel::pnr(l).unwrap()), 6);
            assert!(d < 1e-10, "ℓ = {l}, η = {eta}: {d:e}");
        }
    }
}
