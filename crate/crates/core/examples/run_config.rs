//! Driving an experiment from a config without the binary.
use ringtoa::cli::{run, validate, RunOptions};

fn main() -> ringtoa::Result<()> {
    let dir = std::env::temp_dir().join("ringtoa-example");
    std::fs::create_dir_all(&dir)?;
    let cfg = dir.join("noise.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "noise", "params": {"a": [1.0, 2.0], "omega_d_r": {"start": 0, "stop": 0.9, "n": 10}}}"#,
    )?;
    for d in &validate(&cfg)?.0 {
        println!("{d}");
    }
    let m = run(&cfg, &RunOptions { out_dir: dir.join("out"), gnuplot_stub: true })?;
    println!("wrote {} files to {}:", m.files.len(), dir.join("out").display());
    for f in &m.files {
        println!("  {f}");
    }
    Ok(())
}
