//! Wavefront OBJ subset: `v` and `f` records only.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{TriMesh, Vec3};

use super::AssetError;

pub fn load_obj_mesh(path: impl AsRef<Path>) -> Result<TriMesh, AssetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AssetError::Io(path.display().to_string(), e.to_string()))?;
    parse_obj(&text)
}

/// Parses `v x y z [w]` and `f a b c ...` lines. Face entries may carry
/// `/vt/vn` suffixes (ignored), use 1-based or negative (relative) indices,
/// and polygons are fan-triangulated around their first vertex.
pub fn parse_obj(text: &str) -> Result<TriMesh, AssetError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| obj_err(line_no, "vertex coordinate is not a number"))?;
                if coords.len() < 3 || coords.len() > 4 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(obj_err(line_no, "vertex needs 3 finite coordinates"));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for entry in parts {
                    let head = entry.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| obj_err(line_no, "face index is not an integer"))?;
                    let resolved = match i {
                        0 => return Err(obj_err(line_no, "face index 0 is invalid")),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(AssetError::ObjIndex { line: line_no, index: i });
                    }
                    face.push(resolved as usize);
                }
                if face.len() < 3 {
                    return Err(obj_err(line_no, "face needs at least 3 vertices"));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| AssetError::Obj { line: 0, message: e.to_string() })
}

fn obj_err(line: usize, message: &str) -> AssetError {
    AssetError::Obj { line, message: message.to_string() }
}

/// Serializes a mesh as `v`/`f` records with 1-based indices.
pub fn write_obj_mesh(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
vn 0 0 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
";

    #[test]
    fn single_triangle() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn quad_fans_from_first_vertex() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_and_slashed_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3/1/1 -2//2 -1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn unit_cube_area() {
        let m = parse_obj(CUBE).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
        // independent area sum: six unit squares
        let area: f64 = m
            .triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
                let (ab, ac) = (b - a, c - a);
                let cx = ab.y * ac.z - ab.z * ac.y;
                let cy = ab.z * ac.x - ab.x * ac.z;
                let cz = ab.x * ac.y - ab.y * ac.x;
                0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
            })
            .sum();
        assert!((area - 6.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse_obj("v 0 0 0\nv 1 zero 0\n") {
            Err(AssetError::Obj { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n") {
            Err(AssetError::ObjIndex { line, index }) => assert_eq!((line, index), (4, 9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_load_preserves_structure() {
        let m = parse_obj(CUBE).unwrap();
        let back = parse_obj(&write_obj_mesh(&m)).unwrap();
        assert_eq!(back, m);
    }
}
