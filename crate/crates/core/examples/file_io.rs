//! Coordinate files and factor export round trips.
//!
//! cargo run --example file_io

use sparse_parafac2::io::{
    coordinate_to_string, parse_coordinate_file, read_factors, write_coordinate_file, write_factors,
};
use sparse_parafac2::{fit_parafac2, SolverConfig};

fn main() -> sparse_parafac2::Result<()> {
    let dir = std::env::temp_dir().join("sparse_parafac2_file_io");
    std::fs::create_dir_all(&dir).expect("temp dir");

    // duplicates are summed and the empty row 1 of subject 0 is dropped
    let text = "# two subjects, four variables\n2 4\n0 0 1 1.5\n0 2 3 -0.5\n0 0 1 0.5\n0 2 0 1.0\n1 0 2 3.0\n1 1 1 2.0\n1 2 0 0.25\n";
    let path = dir.join("tensor.txt");
    std::fs::write(&path, text).expect("write input");
    let loaded = parse_coordinate_file(&path)?;
    println!("removed {} all-zero rows", loaded.removed_rows);
    print!("canonical form:\n{}", coordinate_to_string(&loaded.tensor));

    let copy = dir.join("copy.txt");
    write_coordinate_file(&loaded.tensor, &copy)?;
    let again = parse_coordinate_file(&copy)?.tensor;
    println!("round trip equal: {}", again == loaded.tensor);

    let (factors, _) = fit_parafac2(&loaded.tensor, &SolverConfig::new(2))?;
    let out = dir.join("factors");
    let manifest = write_factors(&factors, None, &out)?;
    println!(
        "wrote {} U files to {}",
        manifest.u_files.len(),
        out.display()
    );
    let back = read_factors(&out)?;
    println!(
        "V and S read back bit-exact: {}",
        back.v == factors.v && back.s == factors.s
    );
    Ok(())
}
