//! Benchmark on a CSV file: `cargo run --example real_data -- data.csv target`.
//! Without arguments a small synthetic table is used.

use std::fmt::Write as _;

use schatten::cv::{benchmark_datasets, CvConfig};
use schatten::io::TabularDataset;

fn main() -> schatten::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let table = match args.as_slice() {
        [path, target] => TabularDataset::from_path(path.as_ref(), target)?,
        _ => {
            let mut text = String::from("x1,x2,x3,x4,y\n");
            for i in 0..200 {
                let t = i as f64;
                let row = [
                    (t * 0.37).sin(),
                    (t * 0.11).cos(),
                    (t * 0.73).sin() * 3.0,
                    (i % 5) as f64,
                ];
                let y = row[0] - 0.5 * row[1] + 0.2 * row[2] + 0.3 * (t * 1.7).sin();
                writeln!(text, "{},{},{},{},{y}", row[0], row[1], row[2], row[3]).unwrap();
            }
            TabularDataset::from_reader(text.as_bytes(), "y")?
        }
    };
    let train = table.n_rows() * 2 / 3;
    let cfg = CvConfig {
        n_datasets: 20,
        ..CvConfig::default()
    };
    let report = benchmark_datasets(|_, seed| table.split(train, true, seed), &cfg)?;
    report.write_summary_csv(std::io::stdout())
}
