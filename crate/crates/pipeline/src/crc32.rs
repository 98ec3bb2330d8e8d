//! CRC-32 (IEEE 802.3 polynomial), used to seal dataset bundles.

const POLYNOMIAL: u32 = 0xEDB8_8320;

fn table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ POLYNOMIAL
            } else {
                crc >> 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();

/// Running CRC-32 over a byte stream.
#[derive(Clone)]
pub struct Crc32 {
    state: u32,
}

impl Crc32 {
    pub fn new() -> Self {
        Crc32 { state: !0 }
    }

    pub fn update(&mut self, bytes: &[u8]) {
        let table = TABLE.get_or_init(table);
        for &b in bytes {
            let index = (self.state ^ b as u32) & 0xFF;
            self.state = (self.state >> 8) ^ table[index as usize];
        }
    }

    pub fn finish(&self) -> u32 {
        !self.state
    }
}

impl Default for Crc32 {
    fn default() -> Self {
        Self::new()
    }
}

/// CRC-32 of a complete buffer.
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = Crc32::new();
    crc.update(bytes);
    crc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_the_standard_check_value() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn empty_input_gives_zero() {
        assert_eq!(crc32(b""), 0);
    }

    #[test]
    fn incremental_updates_equal_one_shot() {
        let data = b"spatial temporal graph";
        let mut crc = Crc32::new();
        for chunk in data.chunks(5) {
            crc.update(chunk);
        }
        assert_eq!(crc.finish(), crc32(data));
    }

    #[test]
    fn single_bit_flip_changes_the_checksum() {
        let mut data = b"123456789".to_vec();
        let clean = crc32(&data);
        data[4] ^= 0x01;
        assert_ne!(crc32(&data), clean);
    }
}
