//! Train an SVM by solving its QUBO, then score it on a fresh draw.

use qsplit_toolkit::samplers::{Sampler, SamplerParams};
use qsplit_toolkit::svm::{default_lambda, f1_score, synthetic_axis_dataset, train, KernelSpec, TrainSolver};

fn main() -> qsplit_toolkit::Result<()> {
    let solver = TrainSolver::Sampler { sampler: Sampler::annealing(SamplerParams::default()), seed: 1 };
    let test = synthetic_axis_dataset(40, 0.3, 0.0, 2)?;

    for (name, kernel, noise) in [("linear", KernelSpec::Linear, 0.0), ("rbf", KernelSpec::rbf(1.0)?, 0.1)] {
        let data = synthetic_axis_dataset(40, 0.3, noise, 1)?;
        let lambda = default_lambda(&data, &kernel);
        let model = train(&data, &kernel, 3, lambda, &solver, 3)?;
        let train_f1 = f1_score(&model.predict_all(data.points())?, data.labels())?;
        let test_f1 = f1_score(&model.predict_all(test.points())?, test.labels())?;
        let support = model.members[0].alphas.iter().filter(|&&a| a > 0).count();
        println!(
            "{name:6} noise {noise:.1}: {} members, {support} support vectors, bias {:.3}, train F1 {train_f1:.3}, test F1 {test_f1:.3}",
            model.members.len(),
            model.members[0].bias
        );
    }
    Ok(())
}
