//! Local bisection towards a point of the space-time box, written out as
//! stmesh and legacy VTK with the element generation as cell data.
//!
//! ```text
//! cargo run --release --example refine_and_export -- [dim] [rounds] [out_dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use stfem::mesh::{write_stmesh, write_vtk, SpaceTimeMesh, VtkField};

fn main() -> stfem::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let dim: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let rounds: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(12);
    let out = PathBuf::from(args.get(3).map(String::as_str).unwrap_or("refined-mesh"));
    std::fs::create_dir_all(&out)?;

    // refine every element touching a ball around the space-time corner (0, .., 0)
    let mut mesh = SpaceTimeMesh::build_box_mesh(dim, 2, 1.0)?;
    let mut generation = vec![0.0; mesh.n_elements()];
    let radius = 0.25;
    for round in 0..rounds {
        let marked: Vec<usize> = (0..mesh.n_elements())
            .filter(|&k| {
                mesh.element_points(k)
                    .iter()
                    .any(|p| p[..=dim].iter().map(|x| x * x).sum::<f64>().sqrt() < radius)
            })
            .collect();
        let refined = mesh.refine(&marked)?;
        let split: Vec<bool> = refined
            .children(mesh.n_elements())
            .iter()
            .map(|c| c.len() > 1)
            .collect();
        generation = refined
            .parent
            .iter()
            .map(|&p| generation[p] + if split[p] { 1.0 } else { 0.0 })
            .collect();
        mesh = refined.mesh;
        println!(
            "round {:>2}: {:>3} marked -> {:>6} elements, {:>6} vertices, h_max {:.4}, volume {:.15}",
            round + 1,
            marked.len(),
            mesh.n_elements(),
            mesh.n_vertices(),
            mesh.h_max(),
            mesh.total_volume()
        );
    }

    let smallest = (0..mesh.n_elements())
        .map(|k| mesh.element_size(k))
        .fold(f64::INFINITY, f64::min);
    println!("smallest element diameter {smallest:.3e}");

    write_stmesh(
        &mesh,
        BufWriter::new(File::create(out.join("mesh.stmesh"))?),
    )?;
    let sizes: Vec<f64> = (0..mesh.n_elements())
        .map(|k| mesh.element_size(k))
        .collect();
    write_vtk(
        &mesh,
        &[],
        &[
            VtkField {
                name: "generation",
                values: &generation,
            },
            VtkField {
                name: "h",
                values: &sizes,
            },
        ],
        BufWriter::new(File::create(out.join("mesh.vtk"))?),
    )?;
    println!("wrote {}/mesh.stmesh and mesh.vtk", out.display());
    Ok(())
}
