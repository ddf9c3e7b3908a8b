// Drive the command-line front end in-process: generate a model file, then
// solve it and read the result document.

use std::error::Error;

use subspace_tbr::cli::{run, ResultDocument};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("subtbr-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let model = dir.join("erlang.ctmdp");
    let model = model.to_str().ok_or("non-utf8 temp dir")?;

    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        ["subtbr", "generate", "erlang", "--k", "200", "--r", "10", "--out", model],
        &mut out,
        &mut err,
    );
    print!("{}", String::from_utf8_lossy(&out));
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));

    out.clear();
    let code = run(
        [
            "subtbr", "solve", "--model", model, "--time-bound", "2", "--epsilon", "0.01",
            "--nsim", "100", "--seed", "4",
        ],
        &mut out,
        &mut err,
    );
    let doc: ResultDocument = serde_json::from_slice(&out)?;
    println!(
        "exit {code}: [{:.5}, {:.5}] from {} of {} states",
        doc.lower, doc.upper, doc.explored, doc.num_states
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
