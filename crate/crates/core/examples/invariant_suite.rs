//! Run the built-in invariant suite and print each check.

use tvopt::check::check_builtin;

fn main() -> tvopt::Result<()> {
    let report = check_builtin(200)?;
    for item in &report.items {
        println!("{item}");
    }
    println!(
        "{}",
        if report.passed() {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
    Ok(())
}
