use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lilrs::channel::{
    min_gamma_delta, pull_back, push_forward, sum_subspace_distance, transmit, AllocationSampler, ChannelSpec,
};
use lilrs::code::{lift, CodeParams, MessageTuple};
use lilrs::decoder::{decode, region_list, region_unique, DecodeMode};
use lilrs::harness::{trial_seed, wilson_interval};
use lilrs::{ExtField, Field, FieldElement, SkewPolynomial};

fn f27() -> &'static Arc<ExtField> {
    static FIELD: OnceLock<Arc<ExtField>> = OnceLock::new();
    FIELD.get_or_init(|| Arc::new(ExtField::new(3, 3, None).unwrap()))
}

fn f27_code() -> &'static CodeParams {
    static PARAMS: OnceLock<CodeParams> = OnceLock::new();
    PARAMS.get_or_init(|| CodeParams::new(f27().clone(), 3, vec![3, 3], 3).unwrap())
}

fn poly() -> impl Strategy<Value = SkewPolynomial> {
    prop::collection::vec(0u32..27, 0..6)
        .prop_map(|c| SkewPolynomial::from_coeffs(c.into_iter().map(|i| f27().element(i).unwrap()).collect()))
}

fn elem() -> impl Strategy<Value = FieldElement> {
    (0u32..27).prop_map(|i| f27().element(i).unwrap())
}

/// Candidate `(γ, δ, seed)`; infeasible pairs are skipped by the tests.
fn channel() -> impl Strategy<Value = (usize, usize, u64)> {
    (0usize..=12, 0usize..=6, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ring_laws(a in poly(), b in poly(), c in poly()) {
        let f = f27();
        prop_assert_eq!(a.mul(f, &b).mul(f, &c), a.mul(f, &b.mul(f, &c)));
        prop_assert_eq!(a.mul(f, &b.add(f, &c)), a.mul(f, &b).add(f, &a.mul(f, &c)));
        prop_assert_eq!(a.sub(f, &a), SkewPolynomial::zero());
        if let (Some(da), Some(db)) = (a.degree(), b.degree()) {
            prop_assert_eq!(a.mul(f, &b).degree(), Some(da + db));
        } else {
            prop_assert!(a.mul(f, &b).is_zero());
        }
    }

    #[test]
    fn evaluation_is_linear_and_multiplicative(a in poly(), b in poly(), x in elem(), y in elem(), cls in elem()) {
        let f = f27();
        let sum = a.op_evaluate(f, f.add(x, y), cls);
        prop_assert_eq!(sum, f.add(a.op_evaluate(f, x, cls), a.op_evaluate(f, y, cls)));
        prop_assert_eq!(a.mul(f, &b).op_evaluate(f, x, cls), a.op_evaluate(f, b.op_evaluate(f, x, cls), cls));
    }

    #[test]
    fn lift_survives_pull_back(seed in any::<u64>()) {
        let p = f27_code();
        let msg = MessageTuple::random(p, &mut ChaCha8Rng::seed_from_u64(seed));
        let v = lift(p, &msg).unwrap();
        prop_assert_eq!(v.dims(), vec![3, 3]);
        let back = push_forward(p, &pull_back(p, &v).unwrap()).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn channel_realizes_requested_distance((gamma, delta, seed) in channel()) {
        let p = f27_code();
        let Ok(sampler) = AllocationSampler::for_code(p, gamma, delta) else {
            return Ok(());
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = lift(p, &MessageTuple::random(p, &mut rng)).unwrap();
        let spec = sampler.sample(&mut rng);
        prop_assert_eq!((spec.gamma(), spec.delta()), (gamma, delta));
        let u = transmit(p, &v, &spec, &mut rng).unwrap();
        prop_assert_eq!(u.total_dim(), 6 + gamma - delta);
        let reach = min_gamma_delta(p.field().base(), &u, &v).unwrap();
        prop_assert_eq!((reach.gamma, reach.delta), (gamma, delta));
        prop_assert_eq!(sum_subspace_distance(p.field().base(), &u, &v).unwrap(), gamma + delta);
    }

    #[test]
    fn noiseless_decoding_recovers(seed in any::<u64>()) {
        let p = f27_code();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msg = MessageTuple::random(p, &mut rng);
        let u = transmit(p, &lift(p, &msg).unwrap(), &ChannelSpec::identity(2), &mut rng).unwrap();
        for mode in [DecodeMode::Unique, DecodeMode::List] {
            prop_assert_eq!(&decode(p, &u, mode).unwrap().messages, &vec![msg.clone()]);
        }
    }

    #[test]
    fn allocation_weights_sum_to_total(gamma in 0usize..=8, delta in 0usize..=4) {
        let Ok(sampler) = AllocationSampler::for_code(f27_code(), gamma, delta) else {
            return Ok(());
        };
        let sum: BigUint = sampler.allocations().into_iter().map(|(_, w)| w).sum();
        prop_assert_eq!(&sum, sampler.total());
    }

    #[test]
    fn unique_region_inside_list_region(gamma in 0usize..30, delta in 0usize..8, s in 1usize..5) {
        let p = CodeParams::new(f27().clone(), s, vec![3, 3], 3).unwrap();
        if region_unique(&p, gamma, delta) {
            prop_assert!(region_list(&p, gamma, delta));
        }
        prop_assert_eq!(region_list(&p, gamma + s, delta), region_list(&p, gamma, delta + 1));
    }

    #[test]
    fn wilson_brackets_observed(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let failures = ((trials as f64) * frac) as u64;
        let (lo, hi) = wilson_interval(failures, trials);
        let rate = failures as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= rate + 1e-12 && rate <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn trial_seeds_separate_indices(master in any::<u64>(), point in 0usize..64, trial in 0u64..1 << 40) {
        let s = trial_seed(master, point, trial);
        prop_assert_eq!(s, trial_seed(master, point, trial));
        prop_assert_ne!(s, trial_seed(master, point, trial + 1));
        prop_assert_ne!(s, trial_seed(master, point + 1, trial));
    }
}
