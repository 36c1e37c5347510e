//! Versioned binary checkpoints: magic `MGPP`, a header, a shape table and
//! little-endian f64 weights.

use super::net::{LearnError, NetConfig, PolicyParams};
use crate::sim::ActionSpaceKind;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"MGPP";
const VERSION: u32 = 1;

fn kind_tag(kind: ActionSpaceKind) -> u32 {
    match kind {
        ActionSpaceKind::Continuous => 0,
        ActionSpaceKind::Waypoint => 1,
        ActionSpaceKind::Macro => 2,
    }
}

fn kind_from_tag(tag: u32) -> Option<ActionSpaceKind> {
    match tag {
        0 => Some(ActionSpaceKind::Continuous),
        1 => Some(ActionSpaceKind::Waypoint),
        2 => Some(ActionSpaceKind::Macro),
        _ => None,
    }
}

/// Tensor shapes in serialization order; the flat parameter vector is their
/// concatenation.
fn shape_table(cfg: &NetConfig) -> Vec<Vec<u32>> {
    let input = cfg.input_dim() as u32;
    let hidden = cfg.hidden as u32;
    let actions = cfg.actions as u32;
    vec![
        vec![input, hidden],
        vec![hidden],
        vec![hidden, hidden],
        vec![hidden],
        vec![actions, hidden],
        vec![actions],
        vec![hidden],
        vec![1],
    ]
}

pub fn save_checkpoint<W: Write>(
    mut w: W,
    params: &PolicyParams,
    kind: ActionSpaceKind,
) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&kind_tag(kind).to_le_bytes())?;
    for field in [
        params.cfg.grid_cells as u32,
        params.cfg.ego_features as u32,
        params.cfg.hidden as u32,
        params.cfg.actions as u32,
    ] {
        w.write_all(&field.to_le_bytes())?;
    }
    let shapes = shape_table(&params.cfg);
    w.write_all(&(shapes.len() as u32).to_le_bytes())?;
    for shape in &shapes {
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for d in shape {
            w.write_all(&d.to_le_bytes())?;
        }
    }
    for v in &params.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut r: R) -> Result<(PolicyParams, ActionSpaceKind), LearnError> {
    let bad = |m: &str| LearnError::BadCheckpoint(m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut R| -> Result<u32, LearnError> {
        r.read_exact(&mut u32buf)
            .map_err(|_| LearnError::BadCheckpoint("truncated header".to_string()))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let kind = kind_from_tag(read_u32(&mut r)?).ok_or_else(|| bad("unknown action-space tag"))?;
    let grid_cells = read_u32(&mut r)? as usize;
    let ego_features = read_u32(&mut r)? as usize;
    let hidden = read_u32(&mut r)? as usize;
    let actions = read_u32(&mut r)? as usize;
    let cfg = NetConfig {
        grid_cells,
        ego_features,
        hidden,
        actions,
    };

    let n_tensors = read_u32(&mut r)? as usize;
    let expected = shape_table(&cfg);
    if n_tensors != expected.len() {
        return Err(bad("unexpected tensor count"));
    }
    for shape in &expected {
        let ndims = read_u32(&mut r)? as usize;
        if ndims != shape.len() {
            return Err(bad("shape rank mismatch"));
        }
        for d in shape {
            if read_u32(&mut r)? != *d {
                return Err(bad("shape dimension mismatch"));
            }
        }
    }

    let mut params = PolicyParams::zeros(cfg);
    let mut f64buf = [0u8; 8];
    for slot in params.data.iter_mut() {
        r.read_exact(&mut f64buf)
            .map_err(|_| LearnError::BadCheckpoint("truncated weights".to_string()))?;
        *slot = f64::from_le_bytes(f64buf);
    }
    let mut tail = [0u8; 1];
    match r.read(&mut tail) {
        Ok(0) => Ok((params, kind)),
        _ => Err(bad("trailing bytes after weights")),
    }
}
