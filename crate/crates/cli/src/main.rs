//! Command-line front end: generate silhouette targets from a mesh, fit a
//! scene of convex polyhedra to them, render or evaluate a scene, and
//! convert `.cvx` scenes to OBJ.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cvxfit::io::{
    document_to_polyhedra, gen_views, parse_camera_manifest, parse_config, parse_cvx, parse_obj,
    polyhedra_to_document, read_pgm, write_camera_manifest, write_cvx, write_obj, write_pgm,
    FitConfig,
};
use cvxfit::metrics::{chamfer, normal_consistency, sample_surface};
use cvxfit::optimize::{fit, init_scene, FitObserver, Scene};
use cvxfit::polytope::{build_mesh, intersect_halfspaces, Mesh};
use cvxfit::render::{raster_hard, raster_soft, RenderTarget, SoftRasterConfig};

const USAGE: &str = "\
usage: cvxfit <command> [args]

commands:
  gen-views <mesh.obj> [--views N] [--res WxH] [--seed S] [--out DIR]
      render hard silhouette targets of a mesh plus a camera manifest
  fit <targets-dir> [--convexes N] [--planes K] [--steps T] [--seed S]
                    [--config FILE] [--out scene.cvx]
      fit convex polyhedra to the silhouettes in targets-dir
  render <scene.cvx> <camera-manifest> [--soft] [--sigma S] [--out DIR]
      render a scene from manifest cameras (hard by default)
  eval <scene.cvx> <mesh.obj> [--samples N]
      print chamfer-L1, chamfer-L2 (x1000) and normal consistency
  convert <scene.cvx> --obj <out.obj>
      tessellate a scene into a Wavefront OBJ
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            if e.usage {
                eprint!("{USAGE}");
            }
            ExitCode::from(if e.usage { 1 } else { 2 })
        }
    }
}

struct CliError {
    message: String,
    usage: bool,
}

fn usage_err(msg: impl Display) -> CliError {
    CliError {
        message: msg.to_string(),
        usage: true,
    }
}

fn data_err(msg: impl Display) -> CliError {
    CliError {
        message: msg.to_string(),
        usage: false,
    }
}

fn run(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        return Err(usage_err("missing command"));
    };
    let rest = &args[1..];
    match command.as_str() {
        "gen-views" => cmd_gen_views(rest),
        "fit" => cmd_fit(rest),
        "render" => cmd_render(rest),
        "eval" => cmd_eval(rest),
        "convert" => cmd_convert(rest),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(usage_err(format!("unknown command '{other}'"))),
    }
}

/// Splits positional arguments from --flag value pairs.
fn split_flags(args: &[String]) -> Result<(Vec<&str>, Vec<(&str, &str)>), CliError> {
    let mut positional = Vec::new();
    let mut flags = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = args[i].as_str();
        if let Some(name) = a.strip_prefix("--") {
            if name == "soft" {
                flags.push((name, "true"));
                i += 1;
                continue;
            }
            let value = args
                .get(i + 1)
                .ok_or_else(|| usage_err(format!("flag --{name} needs a value")))?;
            flags.push((name, value.as_str()));
            i += 2;
        } else {
            positional.push(a);
            i += 1;
        }
    }
    Ok((positional, flags))
}

fn flag<'a>(flags: &[(&'a str, &'a str)], name: &str) -> Option<&'a str> {
    flags.iter().rev().find(|(n, _)| *n == name).map(|(_, v)| *v)
}

fn parse_flag<T: std::str::FromStr>(
    flags: &[(&str, &str)],
    name: &str,
    default: T,
) -> Result<T, CliError> {
    match flag(flags, name) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| usage_err(format!("bad value '{v}' for --{name}"))),
    }
}

fn read_to_string(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| data_err(format!("{path}: {e}")))
}

fn load_scene_meshes(path: &str) -> Result<Vec<Mesh>, CliError> {
    let text = read_to_string(path)?;
    let doc = parse_cvx(&text).map_err(|e| data_err(format!("{path}: {e}")))?;
    for w in &doc.warnings {
        eprintln!("warning: {path}: {w}");
    }
    let polys = document_to_polyhedra(&doc);
    let mut meshes = Vec::with_capacity(polys.len());
    for p in &polys {
        let topo = intersect_halfspaces(&p.planes, cvxfit::hull::DEFAULT_TOLERANCE)
            .map_err(|e| data_err(format!("{path}: convex {}: {e}", p.id)))?;
        meshes.push(build_mesh(p, &topo).map_err(|e| data_err(format!("{path}: {e}")))?);
    }
    Ok(meshes)
}

fn cmd_gen_views(args: &[String]) -> Result<(), CliError> {
    let (pos, flags) = split_flags(args)?;
    let [mesh_path] = pos[..] else {
        return Err(usage_err("gen-views needs exactly one mesh path"));
    };
    let views: usize = parse_flag(&flags, "views", 16)?;
    let seed: u64 = parse_flag(&flags, "seed", 0)?;
    let out_dir = PathBuf::from(flag(&flags, "out").unwrap_or("targets"));
    let (width, height) = parse_res(flag(&flags, "res").unwrap_or("256x256"))?;

    let mesh = parse_obj(&read_to_string(mesh_path)?)
        .map_err(|e| data_err(format!("{mesh_path}: {e}")))?;
    if mesh.triangles.is_empty() {
        return Err(data_err(format!("{mesh_path}: no faces")));
    }
    let (cameras, images) = gen_views(&mesh, views, width, height, seed);
    std::fs::create_dir_all(&out_dir).map_err(data_err)?;
    std::fs::write(out_dir.join("cameras.txt"), write_camera_manifest(&cameras))
        .map_err(data_err)?;
    for (i, img) in images.iter().enumerate() {
        let path = out_dir.join(format!("view_{i:03}.pgm"));
        std::fs::write(path, write_pgm(img, true)).map_err(data_err)?;
    }
    println!("wrote {} views to {}", images.len(), out_dir.display());
    Ok(())
}

fn parse_res(s: &str) -> Result<(usize, usize), CliError> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage_err(format!("bad --res '{s}', expected WxH")))?;
    let w = w
        .parse()
        .map_err(|_| usage_err(format!("bad width '{w}'")))?;
    let h = h
        .parse()
        .map_err(|_| usage_err(format!("bad height '{h}'")))?;
    Ok((w, h))
}

struct Progress {
    every: usize,
}

impl FitObserver for Progress {
    fn on_step(&mut self, step: usize, loss: f64, scene: &Scene) {
        if self.every != 0 && (step + 1) % self.every == 0 {
            eprintln!(
                "step {:>6}  loss {loss:.6}  convexes {}",
                step + 1,
                scene.convexes.len()
            );
        }
    }
}

fn load_targets(dir: &Path) -> Result<Vec<RenderTarget>, CliError> {
    let manifest_path = dir.join("cameras.txt");
    let cameras = parse_camera_manifest(
        &std::fs::read_to_string(&manifest_path)
            .map_err(|e| data_err(format!("{}: {e}", manifest_path.display())))?,
    )
    .map_err(|e| data_err(format!("{}: {e}", manifest_path.display())))?;
    let mut targets = Vec::with_capacity(cameras.len());
    for (i, camera) in cameras.into_iter().enumerate() {
        let img_path = dir.join(format!("view_{i:03}.pgm"));
        let bytes =
            std::fs::read(&img_path).map_err(|e| data_err(format!("{}: {e}", img_path.display())))?;
        let silhouette =
            read_pgm(&bytes).map_err(|e| data_err(format!("{}: {e}", img_path.display())))?;
        if silhouette.width != camera.width || silhouette.height != camera.height {
            return Err(data_err(format!(
                "{}: image is {}x{} but camera expects {}x{}",
                img_path.display(),
                silhouette.width,
                silhouette.height,
                camera.width,
                camera.height
            )));
        }
        targets.push(RenderTarget { camera, silhouette });
    }
    Ok(targets)
}

fn cmd_fit(args: &[String]) -> Result<(), CliError> {
    let (pos, flags) = split_flags(args)?;
    let [targets_dir] = pos[..] else {
        return Err(usage_err("fit needs exactly one targets directory"));
    };
    let mut config = match flag(&flags, "config") {
        Some(path) => parse_config(&read_to_string(path)?)
            .map_err(|e| data_err(format!("{path}: {e}")))?,
        None => FitConfig::default(),
    };
    config.convexes = parse_flag(&flags, "convexes", config.convexes)?;
    config.planes = parse_flag(&flags, "planes", config.planes)?;
    config.steps = parse_flag(&flags, "steps", config.steps)?;
    config.seed = parse_flag(&flags, "seed", config.seed)?;
    let out_path = flag(&flags, "out").unwrap_or("scene.cvx");

    let targets = load_targets(Path::new(targets_dir))?;
    let scene = init_scene(config.convexes, config.planes, config.seed, config.region())
        .map_err(data_err)?;
    let schedule = config.schedule();
    let progress_every = (config.steps / 20).max(1);
    let result = fit(
        scene,
        &targets,
        &schedule,
        &mut Progress {
            every: progress_every,
        },
    )
    .map_err(data_err)?;
    let doc = polyhedra_to_document(&result.scene.convexes);
    std::fs::write(out_path, write_cvx(&doc)).map_err(data_err)?;
    let final_loss = result.loss_history.last().copied().unwrap_or(f64::NAN);
    println!(
        "fit {} convexes in {} steps, final loss {final_loss:.6}, wrote {out_path}",
        result.scene.convexes.len(),
        result.loss_history.len()
    );
    Ok(())
}

fn cmd_render(args: &[String]) -> Result<(), CliError> {
    let (pos, flags) = split_flags(args)?;
    let [scene_path, manifest_path] = pos[..] else {
        return Err(usage_err("render needs a scene and a camera manifest"));
    };
    let soft = flag(&flags, "soft").is_some();
    let sigma: f64 = parse_flag(&flags, "sigma", 0.25)?;
    let out_dir = PathBuf::from(flag(&flags, "out").unwrap_or("renders"));

    let meshes = load_scene_meshes(scene_path)?;
    let cameras = parse_camera_manifest(&read_to_string(manifest_path)?)
        .map_err(|e| data_err(format!("{manifest_path}: {e}")))?;
    std::fs::create_dir_all(&out_dir).map_err(data_err)?;
    for (i, camera) in cameras.iter().enumerate() {
        let img = if soft {
            raster_soft(&meshes, camera, &SoftRasterConfig::with_sigma(sigma))
        } else {
            raster_hard(&meshes, camera).0
        };
        let path = out_dir.join(format!("view_{i:03}.pgm"));
        std::fs::write(path, write_pgm(&img, true)).map_err(data_err)?;
    }
    println!("rendered {} views to {}", cameras.len(), out_dir.display());
    Ok(())
}

fn cmd_eval(args: &[String]) -> Result<(), CliError> {
    let (pos, flags) = split_flags(args)?;
    let [scene_path, mesh_path] = pos[..] else {
        return Err(usage_err("eval needs a scene and a reference mesh"));
    };
    let samples: usize = parse_flag(&flags, "samples", 100_000)?;

    let scene_meshes = load_scene_meshes(scene_path)?;
    let reference = parse_obj(&read_to_string(mesh_path)?)
        .map_err(|e| data_err(format!("{mesh_path}: {e}")))?;
    let a = sample_surface(&scene_meshes, samples, 1).map_err(data_err)?;
    let b = sample_surface(std::slice::from_ref(&reference), samples, 2)
        .map_err(data_err)?;
    let l1 = chamfer(&a, &b, 1).map_err(data_err)?;
    let l2 = chamfer(&a, &b, 2).map_err(data_err)?;
    let nc = normal_consistency(&a, &b).map_err(data_err)?;
    println!("chamfer_l1 {l1:.6}");
    println!("chamfer_l2_x1000 {:.6}", l2 * 1000.0);
    println!("normal_consistency {nc:.6}");
    Ok(())
}

fn cmd_convert(args: &[String]) -> Result<(), CliError> {
    let (pos, flags) = split_flags(args)?;
    let [scene_path] = pos[..] else {
        return Err(usage_err("convert needs exactly one scene path"));
    };
    let Some(obj_path) = flag(&flags, "obj") else {
        return Err(usage_err("convert needs --obj <out.obj>"));
    };
    let meshes = load_scene_meshes(scene_path)?;
    std::fs::write(obj_path, write_obj(&meshes)).map_err(data_err)?;
    let verts: usize = meshes.iter().map(|m| m.vertices.len()).sum();
    let tris: usize = meshes.iter().map(|m| m.triangles.len()).sum();
    println!("wrote {obj_path}: {verts} vertices, {tris} triangles");
    Ok(())
}
