//! Byte-mode QR symbols, versions 1–4: encoding with penalty-based mask
//! selection, and a decoder for clean module grids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gf256;

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 4;
const FORMAT_GENERATOR: u32 = 0x537;
const FORMAT_MASK: u32 = 0x5412;
const MODE_BYTE: u32 = 0b0100;

const PENALTY_N1: u32 = 3;
const PENALTY_N2: u32 = 3;
const PENALTY_N3: u32 = 40;
const PENALTY_N4: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcLevel {
    L,
    M,
    Q,
    H,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H];

    fn ordinal(self) -> usize {
        self as usize
    }

    /// Two-bit field of the format information.
    fn format_bits(self) -> u32 {
        match self {
            EcLevel::L => 0b01,
            EcLevel::M => 0b00,
            EcLevel::Q => 0b11,
            EcLevel::H => 0b10,
        }
    }
}

// Indexed by [ec ordinal][version - 1].
const ECC_PER_BLOCK: [[usize; 4]; 4] = [[7, 10, 15, 20], [10, 16, 26, 18], [13, 22, 18, 26], [17, 28, 22, 16]];
const BLOCK_COUNT: [[usize; 4]; 4] = [[1, 1, 1, 1], [1, 1, 1, 2], [1, 1, 2, 2], [1, 1, 2, 4]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskChoice {
    Auto,
    Fixed(u8),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QrError {
    #[error("payload of {len} bytes exceeds the {capacity}-byte capacity of version 4-{ec:?}")]
    PayloadTooLarge { len: usize, capacity: usize, ec: EcLevel },
    #[error("mask pattern {0} is not in 0..=7")]
    InvalidMask(u8),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("finder patterns not found at the expected positions")]
    NotATag,
    #[error("format information is unreadable")]
    FormatInfo,
    #[error("Reed-Solomon block {block} has nonzero syndromes")]
    Checksum { block: usize },
    #[error("unsupported segment mode {0:#06b}")]
    Mode(u32),
    #[error("segment runs past the end of the data codewords")]
    Truncated,
}

pub fn side_for_version(version: u8) -> usize {
    17 + 4 * version as usize
}

fn raw_codewords(version: u8) -> usize {
    let v = version as usize;
    let mut modules = (16 * v + 128) * v + 64;
    if v >= 2 {
        let align = v / 7 + 2;
        modules -= (25 * align - 10) * align - 55;
    }
    modules / 8
}

/// Data codewords available after error correction.
pub fn data_codewords(version: u8, ec: EcLevel) -> usize {
    let (e, v) = (ec.ordinal(), version as usize - 1);
    raw_codewords(version) - ECC_PER_BLOCK[e][v] * BLOCK_COUNT[e][v]
}

/// Byte-mode payload capacity: 4 mode bits and an 8-bit count precede the data.
pub fn byte_capacity(version: u8, ec: EcLevel) -> usize {
    (data_codewords(version, ec) * 8 - 12) / 8
}

/// Block sizes as `(data, ecc)` pairs in interleaving order.
fn block_layout(version: u8, ec: EcLevel) -> Vec<(usize, usize)> {
    let (e, v) = (ec.ordinal(), version as usize - 1);
    let blocks = BLOCK_COUNT[e][v];
    let ecc = ECC_PER_BLOCK[e][v];
    let raw = raw_codewords(version);
    let short_len = raw / blocks;
    let short_count = blocks - raw % blocks;
    (0..blocks)
        .map(|i| {
            let len = short_len + usize::from(i >= short_count);
            (len - ecc, ecc)
        })
        .collect()
}

/// Encoded QR symbol. `modules[row][col]` is `true` for dark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrSymbol {
    version: u8,
    ec_level: EcLevel,
    mask: u8,
    payload: Vec<u8>,
    modules: Vec<Vec<bool>>,
    blocks: Vec<Vec<u8>>,
}

impl QrSymbol {
    pub fn version(&self) -> u8 {
        self.version
    }

    pub fn ec_level(&self) -> EcLevel {
        self.ec_level
    }

    pub fn mask(&self) -> u8 {
        self.mask
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn side(&self) -> usize {
        self.modules.len()
    }

    pub fn modules(&self) -> &[Vec<bool>] {
        &self.modules
    }

    pub fn is_dark(&self, row: usize, col: usize) -> bool {
        self.modules[row][col]
    }

    /// Full codewords (data then check symbols) of each Reed–Solomon block.
    pub fn blocks(&self) -> &[Vec<u8>] {
        &self.blocks
    }

    /// Number of check symbols per block.
    pub fn ecc_per_block(&self) -> usize {
        ECC_PER_BLOCK[self.ec_level.ordinal()][self.version as usize - 1]
    }

    pub fn penalty(&self) -> u32 {
        penalty(&self.modules)
    }
}

struct BitBuffer(Vec<bool>);

impl BitBuffer {
    fn push(&mut self, value: u32, len: usize) {
        for i in (0..len).rev() {
            self.0.push((value >> i) & 1 == 1);
        }
    }
}

pub fn encode_qr(payload: &[u8], ec: EcLevel, mask: MaskChoice) -> Result<QrSymbol, QrError> {
    if let MaskChoice::Fixed(m) = mask {
        if m > 7 {
            return Err(QrError::InvalidMask(m));
        }
    }
    let version = (MIN_VERSION..=MAX_VERSION)
        .find(|&v| payload.len() <= byte_capacity(v, ec))
        .ok_or(QrError::PayloadTooLarge {
            len: payload.len(),
            capacity: byte_capacity(MAX_VERSION, ec),
            ec,
        })?;

    let capacity_bits = data_codewords(version, ec) * 8;
    let mut bits = BitBuffer(Vec::with_capacity(capacity_bits));
    bits.push(MODE_BYTE, 4);
    bits.push(payload.len() as u32, 8);
    for &b in payload {
        bits.push(u32::from(b), 8);
    }
    let terminator = (capacity_bits - bits.0.len()).min(4);
    bits.push(0, terminator);
    let pad = (8 - bits.0.len() % 8) % 8;
    bits.push(0, pad);
    for pad_byte in [0xEC, 0x11].into_iter().cycle() {
        if bits.0.len() >= capacity_bits {
            break;
        }
        bits.push(pad_byte, 8);
    }
    let data: Vec<u8> = bits
        .0
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
        .collect();

    let layout = block_layout(version, ec);
    let generator = gf256::generator(layout[0].1);
    let mut blocks = Vec::with_capacity(layout.len());
    let mut offset = 0;
    for &(len, _) in &layout {
        let mut block = data[offset..offset + len].to_vec();
        block.extend(gf256::remainder(&block, &generator));
        offset += len;
        blocks.push(block);
    }
    let codewords = interleave(&blocks, &layout);

    let mut grid = Grid::new(version);
    grid.draw_function_patterns();
    grid.draw_codewords(&codewords);

    let chosen = match mask {
        MaskChoice::Fixed(m) => m,
        MaskChoice::Auto => (0..8u8)
            .min_by_key(|&m| {
                let mut trial = grid.clone();
                trial.apply_mask(m);
                trial.draw_format(ec, m);
                penalty(&trial.dark)
            })
            .expect("eight masks"),
    };
    grid.apply_mask(chosen);
    grid.draw_format(ec, chosen);

    Ok(QrSymbol {
        version,
        ec_level: ec,
        mask: chosen,
        payload: payload.to_vec(),
        modules: grid.dark,
        blocks,
    })
}

fn interleave(blocks: &[Vec<u8>], layout: &[(usize, usize)]) -> Vec<u8> {
    let max_data = layout.iter().map(|l| l.0).max().unwrap_or(0);
    let ecc = layout[0].1;
    let mut out = Vec::new();
    for i in 0..max_data {
        for (b, &(len, _)) in blocks.iter().zip(layout) {
            if i < len {
                out.push(b[i]);
            }
        }
    }
    for i in 0..ecc {
        for (b, &(len, _)) in blocks.iter().zip(layout) {
            out.push(b[len + i]);
        }
    }
    out
}

fn deinterleave(codewords: &[u8], layout: &[(usize, usize)]) -> Vec<Vec<u8>> {
    let mut blocks: Vec<Vec<u8>> = layout.iter().map(|&(d, e)| Vec::with_capacity(d + e)).collect();
    let max_data = layout.iter().map(|l| l.0).max().unwrap_or(0);
    let mut it = codewords.iter().copied();
    for i in 0..max_data {
        for (b, &(len, _)) in blocks.iter_mut().zip(layout) {
            if i < len {
                b.push(it.next().expect("codeword count matches layout"));
            }
        }
    }
    for _ in 0..layout[0].1 {
        for b in blocks.iter_mut() {
            b.push(it.next().expect("codeword count matches layout"));
        }
    }
    blocks
}

fn mask_bit(mask: u8, row: usize, col: usize) -> bool {
    let (x, y) = (col, row);
    match mask {
        0 => (x + y) % 2 == 0,
        1 => y % 2 == 0,
        2 => x % 3 == 0,
        3 => (x + y) % 3 == 0,
        4 => (x / 3 + y / 2) % 2 == 0,
        5 => x * y % 2 + x * y % 3 == 0,
        6 => (x * y % 2 + x * y % 3) % 2 == 0,
        7 => ((x + y) % 2 + x * y % 3) % 2 == 0,
        _ => unreachable!("mask validated"),
    }
}

fn format_word(ec: EcLevel, mask: u8) -> u32 {
    let data = (ec.format_bits() << 3) | u32::from(mask);
    let mut rem = data;
    for _ in 0..10 {
        rem = (rem << 1) ^ ((rem >> 9) * FORMAT_GENERATOR);
    }
    ((data << 10) | rem) ^ FORMAT_MASK
}

/// Module coordinates `(row, col)` of format bit `i` in both copies.
fn format_positions(side: usize, i: usize) -> [(usize, usize); 2] {
    let first = match i {
        0..=5 => (i, 8),
        6 => (7, 8),
        7 => (8, 8),
        8 => (8, 7),
        _ => (8, 14 - i),
    };
    let second = if i < 8 { (8, side - 1 - i) } else { (side - 15 + i, 8) };
    [first, second]
}

fn alignment_center(version: u8) -> Option<usize> {
    (version >= 2).then(|| side_for_version(version) - 7)
}

#[derive(Debug, Clone)]
struct Grid {
    version: u8,
    side: usize,
    dark: Vec<Vec<bool>>,
    function: Vec<Vec<bool>>,
}

impl Grid {
    fn new(version: u8) -> Self {
        let side = side_for_version(version);
        Self {
            version,
            side,
            dark: vec![vec![false; side]; side],
            function: vec![vec![false; side]; side],
        }
    }

    fn set_function(&mut self, row: usize, col: usize, dark: bool) {
        self.dark[row][col] = dark;
        self.function[row][col] = true;
    }

    fn draw_function_patterns(&mut self) {
        let side = self.side;
        for i in 0..side {
            self.set_function(6, i, i % 2 == 0);
            self.set_function(i, 6, i % 2 == 0);
        }
        for (r, c) in [(3, 3), (3, side - 4), (side - 4, 3)] {
            self.draw_finder(r, c);
        }
        if let Some(c) = alignment_center(self.version) {
            for dr in -2i32..=2 {
                for dc in -2i32..=2 {
                    let ring = dr.abs().max(dc.abs());
                    self.set_function((c as i32 + dr) as usize, (c as i32 + dc) as usize, ring != 1);
                }
            }
        }
        // Reserve format areas; the real bits are drawn after masking.
        self.draw_format(EcLevel::L, 0);
    }

    /// Finder with separator centred at `(row, col)`.
    fn draw_finder(&mut self, row: usize, col: usize) {
        for dr in -4i32..=4 {
            for dc in -4i32..=4 {
                let (r, c) = (row as i32 + dr, col as i32 + dc);
                if r < 0 || c < 0 || r >= self.side as i32 || c >= self.side as i32 {
                    continue;
                }
                let ring = dr.abs().max(dc.abs());
                self.set_function(r as usize, c as usize, ring != 2 && ring != 4);
            }
        }
    }

    fn draw_format(&mut self, ec: EcLevel, mask: u8) {
        let word = format_word(ec, mask);
        for i in 0..15 {
            let bit = (word >> i) & 1 == 1;
            for (r, c) in format_positions(self.side, i) {
                self.set_function(r, c, bit);
            }
        }
        self.set_function(self.side - 8, 8, true);
    }

    /// Data module coordinates in placement order.
    fn data_positions(&self) -> Vec<(usize, usize)> {
        let side = self.side;
        let mut out = Vec::new();
        let mut right = side as i32 - 1;
        while right >= 1 {
            if right == 6 {
                right = 5;
            }
            let upward = ((right + 1) & 2) == 0;
            for vert in 0..side {
                for j in 0..2 {
                    let col = (right - j) as usize;
                    let row = if upward { side - 1 - vert } else { vert };
                    if !self.function[row][col] {
                        out.push((row, col));
                    }
                }
            }
            right -= 2;
        }
        out
    }

    fn draw_codewords(&mut self, codewords: &[u8]) {
        let total_bits = codewords.len() * 8;
        for (i, (r, c)) in self.data_positions().into_iter().enumerate() {
            // Remainder bits past the last codeword stay light.
            self.dark[r][c] = i < total_bits && (codewords[i / 8] >> (7 - i % 8)) & 1 == 1;
        }
    }

    fn apply_mask(&mut self, mask: u8) {
        for r in 0..self.side {
            for c in 0..self.side {
                if !self.function[r][c] && mask_bit(mask, r, c) {
                    self.dark[r][c] ^= true;
                }
            }
        }
    }
}

/// Standard four-rule mask penalty.
pub fn penalty(modules: &[Vec<bool>]) -> u32 {
    let side = modules.len();
    let rows: Vec<Vec<bool>> = modules.to_vec();
    let cols: Vec<Vec<bool>> = (0..side).map(|c| (0..side).map(|r| modules[r][c]).collect()).collect();
    let mut score = 0;
    for line in rows.iter().chain(&cols) {
        score += run_penalty(line) + finder_like_penalty(line);
    }
    for r in 0..side - 1 {
        for c in 0..side - 1 {
            let v = modules[r][c];
            if modules[r][c + 1] == v && modules[r + 1][c] == v && modules[r + 1][c + 1] == v {
                score += PENALTY_N2;
            }
        }
    }
    let dark = modules.iter().flatten().filter(|&&d| d).count() as u32;
    let total = (side * side) as u32;
    let k = ((dark * 20).abs_diff(total * 10)).div_ceil(total).saturating_sub(1);
    score + k * PENALTY_N4
}

fn run_penalty(line: &[bool]) -> u32 {
    let mut score = 0;
    let mut run = 1;
    for i in 1..=line.len() {
        if i < line.len() && line[i] == line[i - 1] {
            run += 1;
        } else {
            if run >= 5 {
                score += PENALTY_N1 + (run - 5);
            }
            run = 1;
        }
    }
    score
}

/// Counts 1:1:3:1:1 dark-light patterns with four light modules on either
/// side; the area outside the symbol counts as light.
fn finder_like_penalty(line: &[bool]) -> u32 {
    const CORE: [bool; 7] = [true, false, true, true, true, false, true];
    let mut padded = vec![false; 4];
    padded.extend_from_slice(line);
    padded.extend([false; 4]);
    let mut count = 0;
    for start in 4..=padded.len() - 11 {
        if padded[start..start + 7] != CORE {
            continue;
        }
        let before = padded[start - 4..start].iter().all(|&d| !d);
        let after = padded[start + 7..start + 11].iter().all(|&d| !d);
        if before || after {
            count += 1;
        }
    }
    count * PENALTY_N3
}

fn finder_matches(modules: &[Vec<bool>], row: usize, col: usize) -> bool {
    (0..7).all(|dr| {
        (0..7).all(|dc| {
            let ring = (dr as i32 - 3).abs().max((dc as i32 - 3).abs());
            modules[row + dr][col + dc] == (ring != 2)
        })
    })
}

/// Checks the three finder patterns of a `side × side` module grid.
pub fn has_finders(modules: &[Vec<bool>]) -> bool {
    let side = modules.len();
    side >= 21
        && modules.iter().all(|r| r.len() == side)
        && finder_matches(modules, 0, 0)
        && finder_matches(modules, 0, side - 7)
        && finder_matches(modules, side - 7, 0)
}

/// Decodes a clean module grid: format information, unmasking,
/// deinterleaving, a syndrome check of every block and the byte segment.
pub fn decode(modules: &[Vec<bool>]) -> Result<Vec<u8>, DecodeError> {
    let side = modules.len();
    if !has_finders(modules) || side % 4 != 1 {
        return Err(DecodeError::NotATag);
    }
    let version = ((side - 17) / 4) as u8;
    if !(MIN_VERSION..=MAX_VERSION).contains(&version) {
        return Err(DecodeError::NotATag);
    }

    let copies: [u32; 2] = [0, 1].map(|k| {
        (0..15).fold(0u32, |acc, i| {
            let (r, c) = format_positions(side, i)[k];
            acc | (u32::from(modules[r][c]) << i)
        })
    });
    let (ec, mask) = EcLevel::ALL
        .iter()
        .flat_map(|&ec| (0..8u8).map(move |m| (ec, m)))
        .map(|(ec, m)| {
            let w = format_word(ec, m);
            let dist = copies.iter().map(|c| (c ^ w).count_ones()).min().expect("two copies");
            (dist, ec, m)
        })
        .min_by_key(|&(d, _, _)| d)
        .filter(|&(d, _, _)| d <= 3)
        .map(|(_, ec, m)| (ec, m))
        .ok_or(DecodeError::FormatInfo)?;

    let mut grid = Grid::new(version);
    grid.draw_function_patterns();
    let positions = grid.data_positions();
    let raw = raw_codewords(version);
    let mut codewords = vec![0u8; raw];
    for (i, &(r, c)) in positions.iter().take(raw * 8).enumerate() {
        let bit = modules[r][c] ^ mask_bit(mask, r, c);
        codewords[i / 8] |= u8::from(bit) << (7 - i % 8);
    }

    let layout = block_layout(version, ec);
    let blocks = deinterleave(&codewords, &layout);
    let mut data = Vec::new();
    for (i, (block, &(len, ecc))) in blocks.iter().zip(&layout).enumerate() {
        if gf256::syndromes(block, ecc).iter().any(|&s| s != 0) {
            return Err(DecodeError::Checksum { block: i });
        }
        data.extend_from_slice(&block[..len]);
    }
    parse_byte_segment(&data)
}

fn parse_byte_segment(data: &[u8]) -> Result<Vec<u8>, DecodeError> {
    let bit = |i: usize| (data[i / 8] >> (7 - i % 8)) & 1;
    let read = |start: usize, len: usize| -> Result<u32, DecodeError> {
        if start + len > data.len() * 8 {
            return Err(DecodeError::Truncated);
        }
        Ok((start..start + len).fold(0u32, |acc, i| (acc << 1) | u32::from(bit(i))))
    };
    let mode = read(0, 4)?;
    if mode != MODE_BYTE {
        return Err(DecodeError::Mode(mode));
    }
    let len = read(4, 8)? as usize;
    (0..len).map(|k| read(12 + 8 * k, 8).map(|b| b as u8)).collect()
}
