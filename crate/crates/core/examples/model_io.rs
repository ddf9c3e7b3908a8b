// Write a generated polling model in the text format, read it back, and
// show how parse errors are located.

use std::error::Error;

use subspace_tbr::generators::{gen_polling, PollingGoal, PollingParams};
use subspace_tbr::{parse_model, serialize_model, ModelDraft};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let model = gen_polling(PollingParams::new(2, 2, PollingGoal::One))?;
    let text = serialize_model(&model);
    println!("{}", text.lines().take(6).collect::<Vec<_>>().join("\n"));
    let back = parse_model(&text)?;
    assert_eq!(back, model);
    println!("round trip ok: {} states, {} transitions", back.num_states(), back.num_transitions());

    let broken = "ctmdp\nstates 2\ninitial 0\ngoal 1\ntransition 0 go 1 -3\n";
    match parse_model(broken) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => return Err("negative rate accepted".into()),
    }

    let mut draft = ModelDraft::new(2, 0);
    draft.goal(1).transition(0, "go", 1, 1.5);
    match draft.build() {
        Err(e) => println!("rejected draft: {e}"),
        Ok(_) => return Err("state without actions accepted".into()),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
