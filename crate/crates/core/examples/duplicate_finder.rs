//! Finding a duplicate in a stream of n items from {1..n-1}, in a few passes.
//!
//!     cargo run --release --example duplicate_finder [n] [fixture]
//!
//! With a fixture path the stream is read from it (one item per line).

use adaptive_sparse::duplicates::{find_duplicate, meter_passes, MultiPassStream};
use adaptive_sparse::harness::{generate_stream, Model};
use adaptive_sparse::{Constants, Seeds};

fn main() -> adaptive_sparse::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1 << 14);
    let streams: Vec<(String, MultiPassStream)> = match args.next() {
        Some(path) => {
            let file = std::fs::File::open(&path)?;
            vec![(
                path,
                MultiPassStream::read_text(std::io::BufReader::new(file))?,
            )]
        }
        None => [Model::Shuffled, Model::AllSame]
            .into_iter()
            .map(|m| Ok((m.to_string(), generate_stream(m, n, Seeds::new(3))?)))
            .collect::<adaptive_sparse::Result<_>>()?,
    };
    for (name, mut stream) in streams {
        let x = stream.frequencies();
        let run = find_duplicate(&mut stream, 0.25, &Constants::default(), Seeds::new(9))?;
        let (passes, words) = meter_passes(&run);
        match run.found {
            Some(i) => println!("{name}: item {i} occurs {} times", x[i - 1] + 1),
            None => println!("{name}: no duplicate found"),
        }
        println!(
            "  {passes} passes, {} repetitions x {} parts, {} candidates, peak state {words} words ({} with bookkeeping)",
            run.repetitions, run.parts_per_repetition, run.candidates, run.max_total_words
        );
    }
    Ok(())
}
