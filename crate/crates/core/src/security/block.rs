use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockEncrypt, KeyInit};

pub const BLOCK_LEN: usize = 16;

/// Keyed 128-bit permutation, forward direction only (every mode used here
/// needs encryption alone).
pub trait BlockCipher {
    fn encrypt_block(&self, block: &mut [u8; BLOCK_LEN]);
}

#[derive(Clone)]
pub struct Aes128Block(aes::Aes128);

impl Aes128Block {
    pub fn new(key: &[u8; 16]) -> Self {
        Aes128Block(aes::Aes128::new(GenericArray::from_slice(key)))
    }
}

impl BlockCipher for Aes128Block {
    fn encrypt_block(&self, block: &mut [u8; BLOCK_LEN]) {
        self.0.encrypt_block(GenericArray::from_mut_slice(block));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(key: [u8; 16], pt: [u8; 16]) -> [u8; 16] {
        let mut b = pt;
        Aes128Block::new(&key).encrypt_block(&mut b);
        b
    }

    #[test]
    fn fips197_appendix_c1() {
        let key: [u8; 16] = core::array::from_fn(|i| i as u8);
        let pt = [
            0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff,
        ];
        let ct = [
            0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a,
        ];
        assert_eq!(run(key, pt), ct);
    }

    #[test]
    fn fips197_appendix_b() {
        let key = [
            0x2b, 0x7e, 0x15, 0x16, 0x28, 0xae, 0xd2, 0xa6, 0xab, 0xf7, 0x15, 0x88, 0x09, 0xcf, 0x4f, 0x3c,
        ];
        let pt = [
            0x32, 0x43, 0xf6, 0xa8, 0x88, 0x5a, 0x30, 0x8d, 0x31, 0x31, 0x98, 0xa2, 0xe0, 0x37, 0x07, 0x34,
        ];
        let ct = [
            0x39, 0x25, 0x84, 0x1d, 0x02, 0xdc, 0x09, 0xfb, 0xdc, 0x11, 0x85, 0x97, 0x19, 0x6a, 0x0b, 0x32,
        ];
        assert_eq!(run(key, pt), ct);
    }
}
