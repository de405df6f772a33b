use qfid_bench::{hermitian, pair, params};
use qfid_core::estimate_fidelity;
use qfid_core::SimLevel;

#[test]
fn fixtures_build() {
    let h = hermitian(3, 1).unwrap();
    assert_eq!(h.rows(), 8);
    assert!(h.hermiticity_defect() < 1e-12);
    let (pr, ps) = pair(1, 1, 2, 0).unwrap();
    let r = estimate_fidelity(&pr, &ps, &params(SimLevel::IdealSpectral).unwrap()).unwrap();
    assert!(r.abs_error.is_finite());
}
