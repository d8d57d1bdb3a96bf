//! Staircase tables on the integer line against the enumeration reference.

mod common;

use proptest::prelude::*;
use rigidtop::certificate::{verify_replay_with, CertificateFile};
use rigidtop::group::GroupElement;
use rigidtop::quotient::FiniteQuotient;
use rigidtop::staircase::{lipschitz_defect, phi_table, psi_from_phi, StageParams};
use rigidtop::topology::{certify, rigidity_defect_global};
use rigidtop::{Construction, GroupSpec, Policy, Profile, StepRule};

use common::{defect, phi_values, psi_values, table_values, BruteForceLine};

fn int_values(set: &[GroupElement]) -> Vec<i64> {
    set.iter()
        .map(|g| match g {
            GroupElement::Int(t) => *t,
            _ => unreachable!(),
        })
        .collect()
}

fn check_tower(profile: Profile, stages: usize) {
    let c = Construction::build(GroupSpec::integer_line(), profile, Policy::Default { count: 2 }, stages).unwrap();
    let mut prev_psi: Option<Vec<_>> = None;
    for stage in &c.stages {
        let m = stage.quotient().modulus();
        assert!(m <= 2000, "modulus {m} is outside the oracle range");
        let set = int_values(&stage.params.set);
        let phi = phi_values(stage.n(), &set, stage.params.steps, m);
        let psi = psi_values(&phi, prev_psi.as_deref());
        assert_eq!(table_values(&stage.phi), phi, "phi at stage {}", stage.n());
        assert_eq!(table_values(&stage.psi), psi, "psi at stage {}", stage.n());
        for s in &stage.params.set {
            let t = int_values(std::slice::from_ref(s))[0];
            assert_eq!(rigidity_defect_global(stage, s).unwrap(), defect(&psi, t), "psi defect of {t}");
            assert_eq!(lipschitz_defect(&stage.phi, s).unwrap(), defect(&phi, t), "phi defect of {t}");
        }
        prev_psi = Some(psi);
    }
}

#[test]
fn paper_profile_two_stages() {
    check_tower(Profile::paper(), 2);
}

#[test]
fn desk_profile_two_stages() {
    check_tower(Profile::desk(), 2);
}

#[test]
fn custom_profile_two_stages() {
    check_tower(Profile::new(StepRule::Custom(vec![1, 4, 20])), 2);
}

#[test]
fn replay_through_reference_backend() {
    let c = Construction::build(GroupSpec::integer_line(), Profile::desk(), Policy::Default { count: 2 }, 2).unwrap();
    let file = CertificateFile::new(&c, certify(&c, 2).unwrap()).unwrap();
    let report = verify_replay_with(&file, &BruteForceLine).unwrap();
    assert!(report.clean(), "{:?}", report.mismatches());
}

fn stage_strategy() -> impl Strategy<Value = (Vec<i64>, u64, u64, bool)> {
    (prop::collection::btree_set(1i64..12, 1..4), 1u64..8, 2u64..2000, any::<bool>()).prop_map(
        |(gens, steps, modulus, first)| {
            let mut set = vec![0];
            for g in gens {
                set.push(g);
                set.push(-g);
            }
            (set, steps, modulus, first)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bfs_tables_match_enumeration((set, steps, modulus, first) in stage_strategy()) {
        let spec = GroupSpec::integer_line();
        let n = if first { 1 } else { 2 };
        let p = StageParams {
            n,
            steps,
            set: set.iter().map(|&x| GroupElement::Int(x)).collect(),
            quotient: FiniteQuotient::new(&spec, modulus, n, 1).unwrap(),
            f_prev: vec![],
        };
        let phi = phi_table(&p, 1_000_000).unwrap();
        let expected = phi_values(n, &set, steps, modulus);
        prop_assert_eq!(table_values(&phi), expected.clone());
        for &s in &set {
            prop_assert_eq!(lipschitz_defect(&phi, &GroupElement::Int(s)).unwrap(), defect(&expected, s));
        }
    }

    #[test]
    fn psi_matches_enumeration(
        (set, steps, child, _) in stage_strategy(),
        parent in 2u64..40,
    ) {
        let spec = GroupSpec::integer_line();
        let modulus = parent * (child % 50 + 1);
        let p1 = StageParams {
            n: 1,
            steps: 1,
            set: set.iter().map(|&x| GroupElement::Int(x)).collect(),
            quotient: FiniteQuotient::new(&spec, parent, 1, 1).unwrap(),
            f_prev: vec![],
        };
        let p2 = StageParams { n: 2, steps, quotient: FiniteQuotient::new(&spec, modulus, 2, parent).unwrap(), ..p1.clone() };
        let psi1 = psi_from_phi(&phi_table(&p1, 1_000_000).unwrap(), None).unwrap();
        let psi2 = psi_from_phi(&phi_table(&p2, 1_000_000).unwrap(), Some(&psi1)).unwrap();
        let expected1 = phi_values(1, &set, 1, parent);
        let expected2 = psi_values(&phi_values(2, &set, steps, modulus), Some(&expected1));
        prop_assert_eq!(table_values(&psi2), expected2.clone());
        for &s in &set {
            prop_assert_eq!(lipschitz_defect(&psi2, &GroupElement::Int(s)).unwrap(), defect(&expected2, s));
        }
    }
}
