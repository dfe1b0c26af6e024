//! Iteration counts of restarted GMRES with each preconditioner on the
//! assembled stabilized systems, for growing meshes.
//!
//! ```text
//! cargo run --release --example gmres_preconditioners -- [problem] [dim] [degree]
//! ```

use stfem::assembly::{assemble, AssemblyOptions};
use stfem::driver::builtin_problem;
use stfem::fespace::DofMap;
use stfem::linalg::{gmres, GmresOptions, Preconditioner, PreconditionerKind};
use stfem::mesh::SpaceTimeMesh;

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let problem = args.get(1).map(String::as_str).unwrap_or("peak");
    let dim: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let degree: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2);
    let spec = builtin_problem(problem, dim)?;

    println!("{problem}, d = {dim}, p = {degree}, restart 50, rtol 1e-8");
    println!(
        "{:>8} {:>16} {:>16} {:>16}",
        "dofs", "identity", "jacobi", "gauss-seidel"
    );
    for n in [4, 8, 16, 32] {
        let mesh = SpaceTimeMesh::build_box_mesh(dim, n, 1.0)?;
        let dofs = DofMap::build(&mesh, degree)?;
        if dofs.n_dofs() > 100_000 {
            break;
        }
        let sys = assemble(&mesh, &dofs, &spec, &AssemblyOptions::default())?;
        let mut cells = Vec::new();
        for kind in [
            PreconditionerKind::Identity,
            PreconditionerKind::Jacobi,
            PreconditionerKind::GaussSeidel,
        ] {
            let opts = GmresOptions {
                preconditioner: kind,
                max_iter: 20_000,
                ..GmresOptions::default()
            };
            let pc = Preconditioner::new(kind, &sys.matrix)?;
            let (_, stats) = gmres(&sys.matrix, &sys.rhs, &pc, &opts)?;
            cells.push(if stats.converged {
                format!("{} ({:.2}s)", stats.iterations, stats.wall_time)
            } else {
                "no conv.".to_string()
            });
        }
        println!(
            "{:>8} {:>16} {:>16} {:>16}",
            dofs.n_dofs(),
            cells[0],
            cells[1],
            cells[2]
        );
    }
    Ok(())
}
