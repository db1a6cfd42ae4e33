use polyik::kinematics::*;
use polyik::poly::write_system;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "kuka".into());
    let lim = JointLimits::symmetric([2.9; 7]).unwrap();
    let dh = if which == "kuka" {
        DhParams::new(vec![
            DhRow { a: 0.0, alpha: -PI / 2.0, d: 340.0, theta_offset: 0.0 },
            DhRow { a: 0.0, alpha: PI / 2.0, d: 0.0, theta_offset: 0.0 },
            DhRow { a: 0.0, alpha: PI / 2.0, d: 400.0, theta_offset: 0.0 },
            DhRow { a: 0.0, alpha: -PI / 2.0, d: 0.0, theta_offset: 0.0 },
            DhRow { a: 0.0, alpha: -PI / 2.0, d: 400.0, theta_offset: 0.0 },
            DhRow { a: 0.0, alpha: PI / 2.0, d: 0.0, theta_offset: 0.0 },
            DhRow { a: 0.0, alpha: 0.0, d: 126.0, theta_offset: 0.0 },
        ])
        .unwrap()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        DhParams::new(
            (0..7)
                .map(|_| DhRow {
                    a: rng.gen_range(50.0..300.0),
                    alpha: rng.gen_range(-PI..PI),
                    d: rng.gen_range(50.0..300.0),
                    theta_offset: rng.gen_range(-PI..PI),
                })
                .collect(),
        )
        .unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let theta = random_angles(&lim, &mut rng);
    let pose = forward_kinematics(&dh, &theta);
    let sys = build_constraints(&dh, &pose, &JointAngles::zero(), &Weights::equal(), &lim);
    let all: Vec<_> = sys.p.iter().chain(sys.q.iter()).cloned().collect();
    println!("{}", write_system(14, &all, Some(&format!("{which} sanitized system"))));
}
