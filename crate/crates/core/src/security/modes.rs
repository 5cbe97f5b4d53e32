//! Counter mode, CBC-MAC and CCM over a 128-bit block cipher.
//!
//! All three share the 13-octet nonce and a 2-octet length field (L = 2).
//! Counter blocks are `0x01 || nonce || i`. CCM follows RFC 3610: the tag
//! length is encoded in the first MAC block and the tag is encrypted with
//! counter block 0. The MAC-only construction leaves the tag-length bits at
//! zero and does not encrypt the tag, so its shorter tags are prefixes of the
//! 16-octet tag.

use super::block::{BlockCipher, BLOCK_LEN};

pub const NONCE_LEN: usize = 13;
pub const MAX_MESSAGE_LEN: usize = 0xFFFF;
const L_FIELD: u8 = 1; // L - 1

pub type Nonce = [u8; NONCE_LEN];

fn counter_block(nonce: &Nonce, i: u16) -> [u8; BLOCK_LEN] {
    let mut a = [0u8; BLOCK_LEN];
    a[0] = L_FIELD;
    a[1..14].copy_from_slice(nonce);
    a[14..].copy_from_slice(&i.to_be_bytes());
    a
}

/// XORs the keystream starting at counter `first` into `data`.
fn ctr_xor<C: BlockCipher>(cipher: &C, nonce: &Nonce, first: u16, data: &mut [u8]) {
    for (k, chunk) in data.chunks_mut(BLOCK_LEN).enumerate() {
        let mut s = counter_block(nonce, first.wrapping_add(k as u16));
        cipher.encrypt_block(&mut s);
        for (d, ks) in chunk.iter_mut().zip(s.iter()) {
            *d ^= ks;
        }
    }
}

/// Counter-mode encryption (and decryption) with counters from 1.
pub fn ctr_apply<C: BlockCipher>(cipher: &C, nonce: &Nonce, data: &mut [u8]) {
    ctr_xor(cipher, nonce, 1, data);
}

fn cbc_absorb<C: BlockCipher>(cipher: &C, x: &mut [u8; BLOCK_LEN], data: &[u8]) {
    for chunk in data.chunks(BLOCK_LEN) {
        for (xi, di) in x.iter_mut().zip(chunk) {
            *xi ^= di;
        }
        cipher.encrypt_block(x);
    }
}

fn raw_mac<C: BlockCipher>(cipher: &C, flags: u8, nonce: &Nonce, aad: &[u8], msg: &[u8]) -> [u8; BLOCK_LEN] {
    assert!(aad.len() < 0xFF00 && msg.len() <= MAX_MESSAGE_LEN);
    let mut b0 = [0u8; BLOCK_LEN];
    b0[0] = flags | if aad.is_empty() { 0 } else { 0x40 };
    b0[1..14].copy_from_slice(nonce);
    b0[14..].copy_from_slice(&(msg.len() as u16).to_be_bytes());
    let mut x = [0u8; BLOCK_LEN];
    cbc_absorb(cipher, &mut x, &b0);
    if !aad.is_empty() {
        let mut a = Vec::with_capacity(aad.len() + 2 + BLOCK_LEN);
        a.extend_from_slice(&(aad.len() as u16).to_be_bytes());
        a.extend_from_slice(aad);
        a.resize(a.len().div_ceil(BLOCK_LEN) * BLOCK_LEN, 0);
        cbc_absorb(cipher, &mut x, &a);
    }
    // A short final chunk is implicitly zero padded by cbc_absorb.
    cbc_absorb(cipher, &mut x, msg);
    x
}

/// Authentication-only tag: the leading `tag_len` octets of the CBC-MAC.
pub fn cbc_mac<C: BlockCipher>(cipher: &C, nonce: &Nonce, aad: &[u8], msg: &[u8], tag_len: usize) -> Vec<u8> {
    assert!(tag_len <= BLOCK_LEN);
    raw_mac(cipher, L_FIELD, nonce, aad, msg)[..tag_len].to_vec()
}

fn ccm_flags(tag_len: usize) -> u8 {
    assert!(
        (4..=16).contains(&tag_len) && tag_len.is_multiple_of(2),
        "CCM tag length {tag_len}"
    );
    (((tag_len as u8 - 2) / 2) << 3) | L_FIELD
}

fn ccm_tag<C: BlockCipher>(cipher: &C, nonce: &Nonce, aad: &[u8], pt: &[u8], tag_len: usize) -> Vec<u8> {
    let t = raw_mac(cipher, ccm_flags(tag_len), nonce, aad, pt);
    let mut s0 = counter_block(nonce, 0);
    cipher.encrypt_block(&mut s0);
    t.iter().zip(s0.iter()).take(tag_len).map(|(a, b)| a ^ b).collect()
}

/// Returns `(ciphertext, tag)`.
pub fn ccm_encrypt<C: BlockCipher>(
    cipher: &C,
    nonce: &Nonce,
    aad: &[u8],
    plaintext: &[u8],
    tag_len: usize,
) -> (Vec<u8>, Vec<u8>) {
    let tag = ccm_tag(cipher, nonce, aad, plaintext, tag_len);
    let mut ct = plaintext.to_vec();
    ctr_xor(cipher, nonce, 1, &mut ct);
    (ct, tag)
}

/// `None` when the tag does not verify.
pub fn ccm_decrypt<C: BlockCipher>(
    cipher: &C,
    nonce: &Nonce,
    aad: &[u8],
    ciphertext: &[u8],
    tag: &[u8],
) -> Option<Vec<u8>> {
    let mut pt = ciphertext.to_vec();
    ctr_xor(cipher, nonce, 1, &mut pt);
    let expected = ccm_tag(cipher, nonce, aad, &pt, tag.len());
    ct_eq(&expected, tag).then_some(pt)
}

/// Constant-time comparison.
pub fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}
