//! Loading a configuration file and hashing it.

use fiberuq::cli::RunConfig;
use fiberuq::FiberProblem;

const TEXT: &str = r#"
[fom]
model = "iard"

[domain]
temperature = [555.0, 575.0]

[fit]
n0 = 16

[stats]
thresholds = [0.95, 0.953]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let run = RunConfig::from_toml(TEXT)?;
    let problem = FiberProblem::new(run.problem)?;
    println!("{}", run.problem.to_toml());
    println!("fit options: n0 = {}, safety = {}", run.fit.n0, run.fit.safety);
    println!("thresholds: {:?}", run.stats.thresholds);
    println!("fingerprint {}", problem.config().fingerprint());
    println!("Q(565, 0.38) = {:.8}", problem.exact_response(&[565.0, 0.38])?);
    Ok(())
}
