// Draw from each observation-noise family and compare sample statistics with
// their closed forms.

use gsp_hqc::noise::{
    mixture_abs_moment, seeded_rng, theta_moment, AlphaStableParams, BernoulliGaussianParams,
    LaplaceParams, NoiseModel,
};

fn main() -> gsp_hqc::Result<()> {
    let n = 200_000;
    let mut rng = seeded_rng(1);

    let bg = BernoulliGaussianParams { pr: 0.1, var_eta: 0.01, var_gamma: 100.0 };
    let w = NoiseModel::BernoulliGaussian(bg).sample(n, &mut rng)?;
    println!(
        "Bernoulli-Gaussian: mean square {:.4}, E|w|^2 mixture moment {:.4}",
        w.norm_squared() / n as f64,
        mixture_abs_moment(&bg, 2)
    );
    for k in 1..=4 {
        println!("  theta({k}) = E|Z|^{k} = {:.6}", theta_moment(k));
    }

    let cauchy = NoiseModel::AlphaStable(AlphaStableParams::cauchy(1.0));
    let mut c: Vec<f64> = cauchy.sample(n, &mut rng)?.iter().copied().collect();
    c.sort_by(f64::total_cmp);
    println!(
        "Cauchy(gamma = 1): median {:.3}, quartiles {:.3} / {:.3}, largest |w| {:.1e}",
        c[n / 2],
        c[n / 4],
        c[3 * n / 4],
        c[0].abs().max(c[n - 1].abs())
    );

    let laplace = LaplaceParams { mu_loc: 0.0, b: 1.0 };
    let l = NoiseModel::Laplace(laplace).sample(n, &mut rng)?;
    println!("Laplace(b = 1): variance {:.3} (expected 2)", l.norm_squared() / n as f64);

    let json = serde_json::to_string(&NoiseModel::BernoulliGaussian(bg))?;
    println!("config form: {json}");
    Ok(())
}
