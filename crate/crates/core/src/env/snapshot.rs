use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{EnvConfig, BAY_COUNT};
use super::game::{Action, Frog, GameState};
use super::EnvError;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"FRG1";
pub const SNAPSHOT_VERSION: u16 = 1;

pub(crate) trait ByteSink {
    fn put(&mut self, bytes: &[u8]);
}

impl ByteSink for Vec<u8> {
    fn put(&mut self, bytes: &[u8]) {
        self.extend_from_slice(bytes);
    }
}

pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub(crate) fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

impl ByteSink for Fnv64 {
    fn put(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

/// Canonical little-endian encoding of the dynamic state. Shared by snapshots
/// and hashing so both see exactly the same fields.
pub(crate) fn encode_state<S: ByteSink>(s: &GameState, out: &mut S, with_prev_action: bool) {
    out.put(&s.frog.x.to_bits().to_le_bytes());
    out.put(&(s.frog.row as u32).to_le_bytes());
    out.put(&[s.frog.alive as u8]);
    out.put(&(s.lanes.len() as u32).to_le_bytes());
    for lane in &s.lanes {
        out.put(&(lane.len() as u32).to_le_bytes());
        for x in lane {
            out.put(&x.to_bits().to_le_bytes());
        }
    }
    for b in s.bays_filled {
        out.put(&[b as u8]);
    }
    out.put(&s.lives_left.to_le_bytes());
    out.put(&s.timer_remaining.to_le_bytes());
    out.put(&s.score.to_bits().to_le_bytes());
    out.put(&(s.max_row_this_life as u32).to_le_bytes());
    out.put(&s.level.to_le_bytes());
    out.put(&s.tick.to_le_bytes());
    out.put(&s.rng.get_seed());
    out.put(&s.rng.get_stream().to_le_bytes());
    out.put(&s.rng.get_word_pos().to_le_bytes());
    if with_prev_action {
        out.put(&[s.prev_action.code()]);
    }
}

/// Versioned binary image of a game state together with its configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    bytes: Vec<u8>,
}

impl Snapshot {
    pub fn capture(state: &GameState) -> Self {
        let config = serde_json::to_vec(&*state.config).expect("config serializes");
        let mut bytes = Vec::with_capacity(64 + config.len());
        bytes.extend_from_slice(SNAPSHOT_MAGIC);
        bytes.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        bytes.extend_from_slice(&(config.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&config);
        encode_state(state, &mut bytes, true);
        Snapshot { bytes }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, EnvError> {
        let snap = Snapshot { bytes };
        snap.restore()?;
        Ok(snap)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn restore(&self) -> Result<GameState, EnvError> {
        let mut r = Reader { buf: &self.bytes, pos: 0 };
        if r.take(4)? != SNAPSHOT_MAGIC {
            return Err(EnvError::Snapshot("bad magic".into()));
        }
        let version = r.u16()?;
        if version != SNAPSHOT_VERSION {
            return Err(EnvError::Snapshot(format!("unsupported version {version}")));
        }
        let cfg_len = r.u32()? as usize;
        let config: EnvConfig = serde_json::from_slice(r.take(cfg_len)?)
            .map_err(|e| EnvError::Snapshot(format!("config: {e}")))?;
        config
            .validate()
            .map_err(|e| EnvError::Snapshot(format!("config: {e}")))?;

        let frog = Frog { x: r.f64()?, row: r.u32()? as usize, alive: r.u8()? != 0 };
        if frog.row >= config.lane_y_table.len() {
            return Err(EnvError::Snapshot(format!("frog row {} out of range", frog.row)));
        }
        let lane_count = r.u32()? as usize;
        if lane_count != config.lanes.len() {
            return Err(EnvError::Snapshot("lane count does not match config".into()));
        }
        let mut lanes = Vec::with_capacity(lane_count);
        for spec in &config.lanes {
            let n = r.u32()? as usize;
            if n != spec.object_widths.len() {
                return Err(EnvError::Snapshot("object count does not match config".into()));
            }
            lanes.push((0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?);
        }
        let mut bays_filled = [false; BAY_COUNT];
        for b in &mut bays_filled {
            *b = r.u8()? != 0;
        }
        let lives_left = r.u32()?;
        let timer_remaining = r.u32()?;
        let score = r.f64()?;
        let max_row_this_life = r.u32()? as usize;
        let level = r.u32()?;
        let tick = r.u64()?;
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        let prev_code = r.u8()?;
        let prev_action = Action::from_code(prev_code)
            .ok_or_else(|| EnvError::Snapshot(format!("bad action code {prev_code}")))?;
        if r.pos != self.bytes.len() {
            return Err(EnvError::Snapshot("trailing bytes".into()));
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(GameState {
            config: Arc::new(config),
            frog,
            lanes,
            bays_filled,
            lives_left,
            timer_remaining,
            score,
            max_row_this_life,
            level,
            tick,
            rng,
            prev_action,
        })
    }
}

impl GameState {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(self)
    }

    pub fn restore(snapshot: &Snapshot) -> Result<GameState, EnvError> {
        snapshot.restore()
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EnvError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            EnvError::Snapshot(format!("truncated at byte {} (need {n} more)", self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, EnvError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, EnvError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, EnvError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, EnvError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, EnvError> {
        Ok(f64::from_bits(self.u64()?))
    }
}
