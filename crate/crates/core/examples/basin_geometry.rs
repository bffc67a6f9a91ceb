//! Depth and curvature of each estimator's error basin relative to Ridge.

use schatten::basin::{geometry_table, LogGrid};
use schatten::theory::ErrorModel;
use schatten::SchattenIndex;

fn main() -> schatten::Result<()> {
    let models: Vec<ErrorModel> = [0.5, 1.0, 2.0]
        .into_iter()
        .flat_map(|sigma| [0.1, 0.5, 0.9].map(|lambda| ErrorModel::spherical(lambda, 1.0, sigma)))
        .collect();
    let table = geometry_table(&models, &SchattenIndex::ALL, &LogGrid::default())?;
    table.write_layout_csv(std::io::stdout())
}
