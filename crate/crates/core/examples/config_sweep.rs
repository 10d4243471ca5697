//! Programmatic use of the batch runner: a TOML sweep written as CSV.

use atomnet::run::{parse_config, run, Command, Overrides, RunSpec};

const CONFIG: &str = r#"
seed = 42

[link]
length_km = [25.0, 50.0, 100.0]
n_atoms = [10, 100]
trials = 500
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = RunSpec {
        command: Command::Link,
        config: parse_config(CONFIG)?,
        overrides: Overrides::default(),
        jobs: Some(2),
    };
    let report = run(&spec)?;
    report.write_csv_body(std::io::stdout().lock())?;
    Ok(())
}
