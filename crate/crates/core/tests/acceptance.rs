use std::process::ExitCode;
use std::time::Instant;

use jnspace::verify::{run_suite, Criterion, Suite};

const SEED: u64 = 42;

fn line(c: &Criterion) -> String {
    let (trials, failures) = c.counts();
    let mut s = format!(
        "{} criterion {:>2} {:<28} checks={trials} failures={failures} worst_slack={:.3e}",
        if c.pass() { "PASS" } else { "FAIL" },
        c.id,
        c.title,
        c.worst_slack()
    );
    for t in c.tallies.iter().filter(|t| !t.pass()) {
        if let Some(w) = &t.worst {
            s.push_str(&format!("\n     {}: lhs={:e} rhs={:e} slack={:e}", w.name, w.lhs, w.rhs, w.slack));
        }
    }
    s
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut criteria = Vec::new();
    let mut extras_ok = true;
    for suite in Suite::ALL {
        let t = Instant::now();
        match run_suite(suite, SEED, None) {
            Ok(out) => {
                for tally in out.extra.iter().filter(|t| !t.pass()) {
                    extras_ok = false;
                    println!("FAIL property {} ({} of {} failed): {:?}", tally.name, tally.failures, tally.trials, tally.worst);
                }
                for (k, v) in &out.reported {
                    println!("info {suite}.{k} = {v:e}");
                }
                criteria.extend(out.criteria);
            }
            Err(e) => {
                println!("FAIL suite {suite}: {e}");
                extras_ok = false;
            }
        }
        println!("info suite {suite} took {:.2}s", t.elapsed().as_secs_f64());
    }
    criteria.sort_by_key(|c| c.id);
    let mut ok = extras_ok;
    for c in &criteria {
        println!("{}", line(c));
        ok &= c.pass();
    }
    if criteria.len() != 10 {
        println!("FAIL expected 10 criteria, found {}", criteria.len());
        ok = false;
    }
    println!("acceptance {} in {:.2}s", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
