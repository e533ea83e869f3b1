//! Binary model format.
//!
//! ```text
//! "TMPM"  version:u16
//! num_clauses:u32 feature_count:u32 T:f64 s:f64 ta_state_bits:u32 flags:u8 seed:u64
//! per clause: polarity:i8 weight:u32 ta_states:[u32; 2F]
//! bank:u8 (0 = none)
//!   ia_state_bits:u32 d:f64 prune_mode:u8 cells:u32
//!   per cell: clause:u32 literal:u32 state:u32 phase:u8
//! ```
//!
//! All integers and floats little-endian. `flags` bit 0 = weighted, bit 1 =
//! boost true positive. `phase` bit 0 = awaiting Step 2, bit 1 = held.

use std::io::{Read, Write};

use super::{Polarity, TmConfig, TmError, TmModel};
use crate::csia::{CsiaBank, CsiaCell, CsiaConfig, Phase, PruneMode};

pub const MAGIC: &[u8; 4] = b"TMPM";
pub const VERSION: u16 = 1;

pub fn save(model: &TmModel, bank: Option<&CsiaBank>) -> Vec<u8> {
    let mut out = Vec::new();
    write_to(&mut out, model, bank).expect("writing to a Vec cannot fail");
    out
}

pub fn write_to<W: Write>(w: &mut W, model: &TmModel, bank: Option<&CsiaBank>) -> std::io::Result<()> {
    let c = &model.config;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(c.num_clauses as u32).to_le_bytes())?;
    w.write_all(&(model.feature_count as u32).to_le_bytes())?;
    w.write_all(&c.threshold.to_le_bytes())?;
    w.write_all(&c.specificity.to_le_bytes())?;
    w.write_all(&c.ta_state_bits.to_le_bytes())?;
    let flags = u8::from(c.weighted) | (u8::from(c.boost_true_positive) << 1);
    w.write_all(&[flags])?;
    w.write_all(&c.seed.to_le_bytes())?;
    for clause in &model.clauses {
        w.write_all(&clause.polarity.sign().to_le_bytes())?;
        w.write_all(&clause.weight.to_le_bytes())?;
        for s in &clause.ta_states {
            w.write_all(&s.to_le_bytes())?;
        }
    }
    match bank {
        None => w.write_all(&[0])?,
        Some(bank) => {
            let bc = bank.config();
            w.write_all(&[1])?;
            w.write_all(&bc.ia_state_bits.to_le_bytes())?;
            w.write_all(&bc.d.to_le_bytes())?;
            w.write_all(&[match bc.prune_mode {
                PruneMode::Reset => 0,
                PruneMode::Hold => 1,
            }])?;
            w.write_all(&(bank.len() as u32).to_le_bytes())?;
            for ((j, lit), cell, held) in bank.iter() {
                w.write_all(&(j as u32).to_le_bytes())?;
                w.write_all(&(lit as u32).to_le_bytes())?;
                w.write_all(&cell.state.to_le_bytes())?;
                let phase = u8::from(cell.phase == Phase::AwaitStep2) | (u8::from(held) << 1);
                w.write_all(&[phase])?;
            }
        }
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], TmError> {
        if self.buf.len() < N {
            return Err(TmError::Format(format!("truncated while reading {what}")));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &str) -> Result<u8, TmError> {
        Ok(self.take::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, TmError> {
        Ok(u16::from_le_bytes(self.take(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32, TmError> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, TmError> {
        Ok(u64::from_le_bytes(self.take(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64, TmError> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }
}

pub fn read_from<R: Read>(r: &mut R) -> Result<(TmModel, Option<CsiaBank>), TmError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    load(&buf)
}

pub fn load(bytes: &[u8]) -> Result<(TmModel, Option<CsiaBank>), TmError> {
    let mut r = Reader { buf: bytes };
    if &r.take::<4>("magic")? != MAGIC {
        return Err(TmError::Format("bad magic bytes".into()));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(TmError::Format(format!("unsupported version {version}")));
    }
    let num_clauses = r.u32("num_clauses")? as usize;
    let feature_count = r.u32("feature_count")? as usize;
    let threshold = r.f64("threshold")?;
    let specificity = r.f64("specificity")?;
    let ta_state_bits = r.u32("ta_state_bits")?;
    let flags = r.u8("flags")?;
    let seed = r.u64("seed")?;
    let config = TmConfig {
        num_clauses,
        threshold,
        specificity,
        ta_state_bits,
        weighted: flags & 1 == 1,
        boost_true_positive: flags & 2 == 2,
        seed,
    };
    let mut model = TmModel::new(config, feature_count)?;
    let max = model.config.max_state();
    let boundary = model.config.boundary();
    let mut positives = 0;
    for clause in &mut model.clauses {
        clause.polarity = match r.u8("polarity")? as i8 {
            1 => Polarity::Positive,
            -1 => Polarity::Negative,
            p => return Err(TmError::Format(format!("bad polarity {p}"))),
        };
        positives += usize::from(clause.polarity == Polarity::Positive);
        clause.weight = r.u32("weight")?;
        if clause.weight == 0 {
            return Err(TmError::Format("clause weight 0".into()));
        }
        for lit in 0..2 * feature_count {
            let s = r.u32("ta state")?;
            if s == 0 || s > max {
                return Err(TmError::Format(format!("TA state {s} outside [1, {max}]")));
            }
            clause.set_state(lit, s, boundary);
        }
    }
    if 2 * positives != num_clauses {
        return Err(TmError::Format("clause polarities are not balanced".into()));
    }
    let bank = match r.u8("bank flag")? {
        0 => None,
        1 => {
            let ia_state_bits = r.u32("ia_state_bits")?;
            let d = r.f64("d")?;
            let prune_mode = match r.u8("prune mode")? {
                0 => PruneMode::Reset,
                1 => PruneMode::Hold,
                m => return Err(TmError::Format(format!("bad prune mode {m}"))),
            };
            let config = CsiaConfig {
                ia_state_bits,
                d,
                prune_mode,
            };
            let count = r.u32("cell count")? as usize;
            let mut cells = Vec::with_capacity(count.min(1 << 20));
            for _ in 0..count {
                let j = r.u32("cell clause")? as usize;
                let lit = r.u32("cell literal")? as usize;
                let state = r.u32("cell state")?;
                let phase = r.u8("cell phase")?;
                if phase > 3 {
                    return Err(TmError::Format(format!("bad phase byte {phase}")));
                }
                let cell = CsiaCell {
                    state,
                    phase: if phase & 1 == 1 { Phase::AwaitStep2 } else { Phase::AwaitStep1 },
                };
                cells.push(((j, lit), cell, phase & 2 == 2));
            }
            Some(CsiaBank::from_cells(&model, config, cells)?)
        }
        b => return Err(TmError::Format(format!("bad bank flag {b}"))),
    };
    if !r.buf.is_empty() {
        return Err(TmError::Format(format!("{} trailing bytes", r.buf.len())));
    }
    Ok((model, bank))
}
