//! JSON formats for targets, schedules, walk states and cost reports.
//!
//! Floats are written with 17 significant digits so that every value reads
//! back bit-for-bit. Output is compact JSON followed by a newline.
//!
//! Target: `{"c", "d", "amplitudes": [{"index": [..], "re", "im"}]}`, with
//! omitted entries zero. Schedule: `{"c", "d", "steps": [{"shift_power",
//! "blocks": [{"pos": [..], "matrix": [[[re, im], ..], ..]}]}],
//! "final_blocks": [..], "meta": {..}}`, matrices row-major. `final_blocks`
//! (the trailing coin) and `meta` may be omitted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::state::{Position, TargetState, WalkState};
use crate::unitary::UnitaryBlock;
use crate::walk::{CoinBlocks, CoinStep, Schedule};

/// Free-form metadata carried alongside a schedule (seed, scheme, ...).
pub type Meta = BTreeMap<String, Value>;

struct ExactFloats;

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes `value` as compact JSON with round-trip exact floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

type RawMatrix = Vec<Vec<[f64; 2]>>;

fn raw_matrix(block: &UnitaryBlock) -> RawMatrix {
    block.rows().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn block_from_raw(matrix: &RawMatrix) -> Result<UnitaryBlock> {
    let dim = matrix.len();
    if matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch(format!("matrix with {dim} rows is not square")));
    }
    let data = matrix.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    UnitaryBlock::new(dim, data)
}

impl Serialize for UnitaryBlock {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for row in raw_matrix(self) {
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

#[derive(Serialize, Deserialize)]
struct AmplitudeEntry {
    index: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TargetFile {
    c: usize,
    d: usize,
    amplitudes: Vec<AmplitudeEntry>,
}

pub fn target_to_json(target: &TargetState) -> Result<String> {
    let amplitudes = target
        .iter()
        .filter(|(_, a)| *a != Complex64::new(0.0, 0.0))
        .map(|(pos, a)| AmplitudeEntry {
            index: pos.coords().to_vec(),
            re: a.re,
            im: a.im,
        })
        .collect();
    to_json(&TargetFile {
        c: target.party_count(),
        d: target.dimension(),
        amplitudes,
    })
}

pub fn target_from_json(text: &str) -> Result<TargetState> {
    let file: TargetFile = serde_json::from_str(text)?;
    if file.c == 0 || file.d == 0 {
        return Err(Error::InvalidState("c and d must be positive".into()));
    }
    let entries = file
        .amplitudes
        .into_iter()
        .map(|e| (e.index, Complex64::new(e.re, e.im)));
    TargetState::from_sparse(file.c, file.d, entries)
}

pub fn read_target(path: impl AsRef<Path>) -> Result<TargetState> {
    target_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    pos: Vec<usize>,
    matrix: RawMatrix,
}

#[derive(Serialize, Deserialize)]
struct StepEntry {
    shift_power: usize,
    blocks: Vec<BlockEntry>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    c: usize,
    d: usize,
    steps: Vec<StepEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    final_blocks: Vec<BlockEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: Meta,
}

fn block_entries(blocks: &CoinBlocks) -> Vec<BlockEntry> {
    blocks
        .iter()
        .map(|(pos, b)| BlockEntry {
            pos: pos.coords().to_vec(),
            matrix: raw_matrix(b),
        })
        .collect()
}

fn coin_blocks(entries: &[BlockEntry]) -> Result<CoinBlocks> {
    let mut blocks = CoinBlocks::new();
    for e in entries {
        let pos = Position::new(e.pos.clone());
        let block = block_from_raw(&e.matrix)?;
        if blocks.insert(pos, block).is_some() {
            return Err(Error::InvalidSchedule(format!("two blocks at {:?} in one step", e.pos)));
        }
    }
    Ok(blocks)
}

pub fn schedule_to_json(schedule: &Schedule, meta: &Meta) -> Result<String> {
    to_json(&ScheduleFile {
        c: schedule.party_count,
        d: schedule.dimension,
        steps: schedule
            .steps
            .iter()
            .map(|s| StepEntry {
                shift_power: s.shift_power,
                blocks: block_entries(&s.blocks),
            })
            .collect(),
        final_blocks: block_entries(&schedule.final_coin),
        meta: meta.clone(),
    })
}

/// Parses and validates a schedule file, returning it with its metadata.
pub fn schedule_from_json(text: &str) -> Result<(Schedule, Meta)> {
    let file: ScheduleFile = serde_json::from_str(text)?;
    let steps = file
        .steps
        .iter()
        .map(|s| Ok(CoinStep::new(coin_blocks(&s.blocks)?, s.shift_power)))
        .collect::<Result<Vec<_>>>()?;
    let schedule = Schedule {
        party_count: file.c,
        dimension: file.d,
        steps,
        final_coin: coin_blocks(&file.final_blocks)?,
    };
    schedule.validate()?;
    Ok((schedule, file.meta))
}

pub fn read_schedule(path: impl AsRef<Path>) -> Result<(Schedule, Meta)> {
    schedule_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize)]
struct StateEntry {
    pos: Vec<usize>,
    coin: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct StateFile {
    c: usize,
    d: usize,
    amplitudes: Vec<StateEntry>,
}

/// Nonzero amplitudes of a walk state, keyed by position and coin index.
pub fn walk_state_to_json(state: &WalkState) -> Result<String> {
    let amplitudes = state
        .iter()
        .filter(|(_, _, a)| *a != Complex64::new(0.0, 0.0))
        .map(|(pos, coin, a)| StateEntry {
            pos: pos.coords().to_vec(),
            coin: coin.index(),
            re: a.re,
            im: a.im,
        })
        .collect();
    to_json(&StateFile {
        c: state.party_count(),
        d: state.dimension(),
        amplitudes,
    })
}

/// Human-readable listing of every non-identity block with its step and
/// position.
pub fn dump_blocks(schedule: &Schedule) -> String {
    let mut out = String::new();
    for (k, pos, block) in schedule.blocks() {
        if block.is_identity() {
            continue;
        }
        let tag = if k == schedule.steps.len() { "final".to_string() } else { k.to_string() };
        let _ = writeln!(out, "step {tag} at {:?}", pos.coords());
        for row in block.rows() {
            let cells: Vec<String> = row.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
            let _ = writeln!(out, "  [{}]", cells.join("  "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_coins, bell_target, BellParams};
    use crate::stepwise::synthesize_scheme1;
    use crate::walk::run;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn floats_keep_seventeen_digits() {
        let text = to_json(&[0.1f64, -2.0, 1.0 / 3.0]).unwrap();
        assert_eq!(text, "[1.0000000000000001e-1,-2.0000000000000000e0,3.3333333333333331e-1]\n");
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![0.1, -2.0, 1.0 / 3.0]);
    }

    #[test]
    fn target_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = TargetState::random(3, 3, &mut rng);
        let back = target_from_json(&target_to_json(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn sparse_target_file() {
        let text = r#"{"c":2,"d":2,"amplitudes":[{"index":[0,0],"re":0.7071067811865476,"im":0},{"index":[1,1],"re":0.7071067811865476,"im":0}]}"#;
        let t = target_from_json(text).unwrap();
        let bell = bell_target(BellParams::new(2, 0, 0).unwrap());
        for (a, b) in t.amplitudes().iter().zip(bell.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(target_from_json(r#"{"c":2,"d":2,"amplitudes":[{"index":[0,0],"re":0.5,"im":0}]}"#).is_err());
        assert!(target_from_json(r#"{"c":2,"d":2,"amplitudes":[{"index":[2,0],"re":1,"im":0}]}"#).is_err());
    }

    #[test]
    fn schedule_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = synthesize_scheme1(&TargetState::random(2, 4, &mut rng)).unwrap();
        let mut meta = Meta::new();
        meta.insert("seed".into(), Value::from(2));
        let text = schedule_to_json(&s, &meta).unwrap();
        let (back, back_meta) = schedule_from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back_meta, meta);
        assert_eq!(schedule_to_json(&back, &back_meta).unwrap(), text);
    }

    #[test]
    fn final_blocks_are_optional() {
        let text = r#"{"c":2,"d":2,"steps":[{"shift_power":1,"blocks":[]}]}"#;
        let (s, meta) = schedule_from_json(text).unwrap();
        assert_eq!(s.total_shift(), 1);
        assert!(s.final_coin.is_empty() && meta.is_empty());
    }

    #[test]
    fn corrupted_blocks_are_rejected() {
        let s = bell_coins(BellParams::new(2, 0, 0).unwrap()).unwrap();
        let text = schedule_to_json(&s, &Meta::new()).unwrap();
        let broken = text.replacen("7.0710678118654746e-1", "9.0000000000000000e-1", 1);
        assert_ne!(broken, text);
        assert!(matches!(schedule_from_json(&broken), Err(Error::NonUnitary { .. })));
        let off_grid = r#"{"c":2,"d":2,"steps":[{"shift_power":1,"blocks":[{"pos":[2,0],"matrix":[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[1,0],[0,0],[0,0]],[[0,0],[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0],[1,0]]]}]}]}"#;
        assert!(matches!(schedule_from_json(off_grid), Err(Error::InvalidSchedule(_))));
        let ragged = r#"{"c":1,"d":2,"steps":[{"shift_power":1,"blocks":[{"pos":[0],"matrix":[[[1,0]],[[0,0],[1,0]]]}]}]}"#;
        assert!(matches!(schedule_from_json(ragged), Err(Error::DimensionMismatch(_))));
        assert!(matches!(schedule_from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn walk_state_listing() {
        let s = bell_coins(BellParams::new(2, 1, 0).unwrap()).unwrap();
        let text = walk_state_to_json(&run(&s).unwrap()).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["amplitudes"].as_array().unwrap().len(), 2);
        assert_eq!(v["amplitudes"][1]["pos"], serde_json::json!([1, 1]));
    }

    #[test]
    fn dump_tags_steps() {
        let s = bell_coins(BellParams::new(2, 0, 0).unwrap()).unwrap();
        let text = dump_blocks(&s);
        assert!(text.starts_with("step 0 at [0, 0]"));
        assert!(text.contains("step final at [1, 1]"));
    }
}
