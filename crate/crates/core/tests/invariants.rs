use std::sync::{Arc, OnceLock};

use growthlab::gf::FieldCtx;
use growthlab::growth::{cayley_diameter, epsilon, naive_diameter, random_generating_set, random_set};
use growthlab::sl2::{GroupTable, Mode, Sl2};
use growthlab::spectral::{lambda2_dense, lambda2_estimate, within, ProbVec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(q: u32) -> Arc<GroupTable> {
    static T: OnceLock<Vec<Arc<GroupTable>>> = OnceLock::new();
    let all = T.get_or_init(|| {
        [(2, 1), (3, 1), (2, 2), (5, 1)]
            .iter()
            .map(|&(p, n)| {
                let f = Arc::new(FieldCtx::new(p, n).unwrap());
                Arc::new(GroupTable::new(Sl2::new(f, Mode::Sl)).unwrap())
            })
            .collect()
    });
    let k = match q {
        2 => 0,
        3 => 1,
        4 => 2,
        _ => 3,
    };
    all[k].clone()
}

fn q_strategy() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![2u32, 3, 4, 5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn support_of_convolution_is_product_set(q in q_strategy(), seed: u64, a in 1usize..10, b in 1usize..10) {
        let t = table(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sa = random_set(&t, a, &mut rng);
        let sb = random_set(&t, b, &mut rng);
        let c = ProbVec::uniform_on(&sa).convolve(&ProbVec::uniform_on(&sb)).unwrap();
        prop_assert_eq!(c.support(), sa.product(&sb).unwrap().indices().to_vec());
        let total: f64 = c.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolution_contracts_towards_uniform(q in q_strategy(), seed: u64, a in 1usize..20, b in 1usize..20) {
        let t = table(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ProbVec::random(&t, a.min(t.len()), &mut rng);
        let y = ProbVec::random(&t, b.min(t.len()), &mut rng);
        let lam = lambda2_estimate(&x).unwrap().value;
        let xy = x.convolve(&y).unwrap();
        prop_assert!(within(xy.dist_uniform(), lam * y.dist_uniform()));
        prop_assert!(within(xy.dist_uniform(), x.dist_uniform()));
        prop_assert!(within(xy.linf(), x.l2() * y.l2()));
    }

    #[test]
    fn iterative_lambda2_matches_dense(q in q_strategy(), seed: u64, a in 1usize..30) {
        let t = table(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ProbVec::random(&t, a.min(t.len()), &mut rng);
        let est = lambda2_estimate(&x).unwrap().value;
        let dense = lambda2_dense(&x).unwrap();
        prop_assert!((est - dense).abs() <= 1e-8, "{} vs {}", est, dense);
        prop_assert!(dense <= 1.0 + 1e-12);
    }

    #[test]
    fn diameter_bounds(q in q_strategy(), seed: u64, size in 2usize..4) {
        let t = table(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_generating_set(&t, size, &mut rng).unwrap();
        let d = cayley_diameter(&s).unwrap();
        prop_assert_eq!(d.diam, naive_diameter(&s).unwrap());
        prop_assert!(d.diam <= d.diam_plus);
        prop_assert!(d.diam_plus <= 2 * d.diam + 1);
        prop_assert_eq!(*d.profile.last().unwrap(), t.len());
        prop_assert!(d.profile.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tripling_never_shrinks(q in q_strategy(), seed: u64, size in 1usize..12) {
        let t = table(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_set(&t, size, &mut rng);
        let a3 = a.power_product(3);
        prop_assert!(a3.len() >= a.len());
        if let Some(e) = epsilon(a.len(), a3.len()) {
            prop_assert!(e >= 0.0);
        }
    }
}
