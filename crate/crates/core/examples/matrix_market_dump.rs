//! Assembles one stabilized system, writes the matrix and right-hand side in
//! MatrixMarket format, reads them back and solves the reloaded system.
//!
//! ```text
//! cargo run --release --example matrix_market_dump -- [out_dir] [n] [degree]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use stfem::assembly::{assemble, AssemblyOptions};
use stfem::driver::builtin_problem;
use stfem::fespace::DofMap;
use stfem::linalg::{
    gmres, read_matrix_market, read_vector_market, write_matrix_market, write_vector_market,
    GmresOptions, Preconditioner,
};
use stfem::mesh::SpaceTimeMesh;

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("system-dump"));
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let degree: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2);
    std::fs::create_dir_all(&out)?;

    let mesh = SpaceTimeMesh::build_box_mesh(2, n, 1.0)?;
    let dofs = DofMap::build(&mesh, degree)?;
    let sys = assemble(
        &mesh,
        &dofs,
        &builtin_problem("oscillatory", 2)?,
        &AssemblyOptions::default(),
    )?;
    let (k_path, f_path) = (out.join("K.mtx"), out.join("f.mtx"));
    write_matrix_market(&sys.matrix, BufWriter::new(File::create(&k_path)?))?;
    write_vector_market(&sys.rhs, BufWriter::new(File::create(&f_path)?))?;
    println!(
        "{} x {} with {} nonzeros -> {}",
        sys.matrix.n_rows(),
        sys.matrix.n_rows(),
        sys.matrix.nnz(),
        k_path.display()
    );

    let k = read_matrix_market(BufReader::new(File::open(&k_path)?))?;
    let f = read_vector_market(BufReader::new(File::open(&f_path)?))?;
    assert!(
        k == sys.matrix && f == sys.rhs,
        "round trip changed the system"
    );

    let opts = GmresOptions::default();
    let pc = Preconditioner::new(opts.preconditioner, &k)?;
    let (x, stats) = gmres(&k, &f, &pc, &opts)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!(
        "reloaded system solved in {} iterations, relative residual {:.2e}, |x| = {norm:.6}",
        stats.iterations, stats.relative_residual
    );
    Ok(())
}
