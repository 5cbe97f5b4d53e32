//! Vector files produced by an independent implementation
//! (`scripts/gen_vectors.py`).

use wbansim::security::block::Aes128Block;
use wbansim::security::modes::{cbc_mac, ccm_decrypt, ccm_encrypt, ctr_apply, Nonce};

pub struct Vector {
    key: [u8; 16],
    nonce: Nonce,
    plaintext: Vec<u8>,
    aad: Vec<u8>,
    ciphertext: Vec<u8>,
    tag: Vec<u8>,
}

pub fn load(name: &str) -> Vec<Vector> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    let out: Vec<Vector> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let f: Vec<Vec<u8>> = line.split(',').map(|h| hex::decode(h.trim()).unwrap()).collect();
            assert_eq!(f.len(), 6, "{line}");
            Vector {
                key: f[0].clone().try_into().unwrap(),
                nonce: f[1].clone().try_into().unwrap(),
                plaintext: f[2].clone(),
                aad: f[3].clone(),
                ciphertext: f[4].clone(),
                tag: f[5].clone(),
            }
        })
        .collect();
    assert!(out.len() >= 40, "{name}: only {} vectors", out.len());
    out
}

pub fn ccm_vectors() {
    for (i, v) in load("ccm_vectors.txt").iter().enumerate() {
        let c = Aes128Block::new(&v.key);
        let (ct, tag) = ccm_encrypt(&c, &v.nonce, &v.aad, &v.plaintext, v.tag.len());
        assert_eq!(ct, v.ciphertext, "vector {i}");
        assert_eq!(tag, v.tag, "vector {i}");
        assert_eq!(
            ccm_decrypt(&c, &v.nonce, &v.aad, &ct, &tag).as_ref(),
            Some(&v.plaintext)
        );
    }
}

pub fn ctr_vectors() {
    for (i, v) in load("ctr_vectors.txt").iter().enumerate() {
        let c = Aes128Block::new(&v.key);
        let mut data = v.plaintext.clone();
        ctr_apply(&c, &v.nonce, &mut data);
        assert_eq!(data, v.ciphertext, "vector {i}");
        assert!(v.tag.is_empty());
    }
}

pub fn cbc_mac_vectors() {
    for (i, v) in load("cbcmac_vectors.txt").iter().enumerate() {
        let c = Aes128Block::new(&v.key);
        assert_eq!(v.ciphertext, v.plaintext, "vector {i}");
        assert_eq!(
            cbc_mac(&c, &v.nonce, &v.aad, &v.plaintext, v.tag.len()),
            v.tag,
            "vector {i}"
        );
    }
}
