//! Window counts for a short history, from the scanning counter and the
//! incremental table.

use memtutor::model::{count_windows, InteractionRecord, ItemBank, TimeWindows, WindowCounterTable};

fn main() -> memtutor::Result<()> {
    let bank = ItemBank::round_robin(4, 2)?;
    let windows = TimeWindows::default();
    let history = [
        (0, 0, true),
        (1, 3_000, false),
        (2, 90_000, true),
        (0, 600_000, true),
        (2, 601_000, false),
    ]
    .map(|(item, timestamp, correct)| InteractionRecord {
        learner: 0,
        item,
        timestamp,
        correct,
    });
    let table = WindowCounterTable::from_history(&history, &bank)?;
    let now = 605_000;
    println!("windows (s): {:?}", windows.tau());
    for skill in 0..bank.n_skills() {
        let scanned = count_windows(&history, &bank, 0, skill, now, &windows)?;
        let indexed = table.query(0, skill, now, &windows);
        assert_eq!(scanned, indexed);
        let cells: Vec<String> = indexed.iter().map(|c| format!("{}/{}", c.c, c.n)).collect();
        println!("skill {skill}: correct/attempts {}", cells.join("  "));
    }
    Ok(())
}
