mod common;

use common::{bpr_only, check_contrastive, check_joint, check_transe, toy, TOL};
use kgcl::losses::{joint_loss, LossConfig, NegativeScope};

#[test]
fn bpr_gradient() {
    let err = check_joint(bpr_only(), 1);
    assert!(err < TOL, "max relative error {err:e}");
}

#[test]
fn joint_gradient() {
    let err = check_joint(LossConfig::default(), 2);
    assert!(err < TOL, "max relative error {err:e}");
}

#[test]
fn joint_gradient_variants() {
    let variants = [
        LossConfig {
            scope: NegativeScope::Full,
            ..LossConfig::default()
        },
        LossConfig {
            mixed_negatives: true,
            lambda1: 0.5,
            ..LossConfig::default()
        },
        LossConfig {
            include_positive_in_denominator: true,
            mixed_negatives: true,
            scope: NegativeScope::Full,
            ..LossConfig::default()
        },
    ];
    for (k, cfg) in variants.into_iter().enumerate() {
        let err = check_joint(cfg, 10 + k as u64);
        assert!(err < TOL, "variant {k}: max relative error {err:e}");
    }
}

#[test]
fn contrastive_gradient_and_additivity() {
    let err = check_contrastive(3);
    assert!(err < TOL, "max relative error {err:e}");
}

#[test]
fn transe_gradient() {
    let err = check_transe(4);
    assert!(err < TOL, "max relative error {err:e}");
}

#[test]
fn switched_off_terms_leave_bpr() {
    let t = toy(5);
    let mut s = t.store.clone();
    let b = joint_loss(&mut s, &t.graph, &t.kg, &t.prepared, &t.batch, &bpr_only()).unwrap();
    assert_eq!(b.total, b.bpr);
}
