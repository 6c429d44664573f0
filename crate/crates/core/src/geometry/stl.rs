//! Binary STL: 80-byte header, little-endian u32 facet count, then per facet
//! a normal, three vertices (all f32 LE) and a u16 attribute word.

use std::collections::HashMap;

use thiserror::Error;

use super::mesh::TriangleMesh;

const HEADER: &[u8] = b"pipediff binary STL";
const HEADER_LEN: usize = 80;
const FACET_LEN: usize = 50;

#[derive(Debug, Error)]
pub enum StlError {
    #[error("mesh is not watertight; boundary edges: {}", format_edges(.edges))]
    NotWatertight { edges: Vec<(u32, u32)> },
    #[error("STL truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("STL has trailing bytes: expected {expected}, found {found}")]
    TrailingBytes { expected: usize, found: usize },
}

fn format_edges(edges: &[(u32, u32)]) -> String {
    const SHOWN: usize = 20;
    let mut s = edges
        .iter()
        .take(SHOWN)
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ");
    if edges.len() > SHOWN {
        s.push_str(&format!(" and {} more", edges.len() - SHOWN));
    }
    s
}

/// Serialize a closed mesh. Open meshes are refused with their boundary edges.
pub fn export_stl(mesh: &TriangleMesh) -> Result<Vec<u8>, StlError> {
    let edges = mesh.boundary_edges();
    if !edges.is_empty() {
        return Err(StlError::NotWatertight { edges });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + FACET_LEN * mesh.triangles.len());
    out.extend_from_slice(HEADER);
    out.resize(HEADER_LEN, 0);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for (i, tri) in mesh.triangles.iter().enumerate() {
        for c in mesh.unit_normal(i) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for &v in tri {
            for c in mesh.vertices[v as usize] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

fn read_f32(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

/// Parse binary STL. Vertices with identical bit patterns are merged.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, StlError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(StlError::Truncated {
            expected: HEADER_LEN + 4,
            found: bytes.len(),
        });
    }
    let count = u32::from_le_bytes(
        bytes[HEADER_LEN..HEADER_LEN + 4]
            .try_into()
            .expect("4 bytes"),
    ) as usize;
    let expected = HEADER_LEN + 4 + FACET_LEN * count;
    if bytes.len() < expected {
        return Err(StlError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(StlError::TrailingBytes {
            expected,
            found: bytes.len(),
        });
    }

    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(count);
    for f in 0..count {
        let base = HEADER_LEN + 4 + f * FACET_LEN + 12;
        let mut tri = [0u32; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let at = base + 12 * k;
            let v = [
                read_f32(bytes, at),
                read_f32(bytes, at + 4),
                read_f32(bytes, at + 8),
            ];
            let key = v.map(f32::to_bits);
            *slot = *index.entry(key).or_insert_with(|| {
                vertices.push(v);
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(tri);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
    })
}
