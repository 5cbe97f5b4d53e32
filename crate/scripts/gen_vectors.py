#!/usr/bin/env python3
"""Generate frame-security test vectors with the `cryptography` package.

Output files (one record per line, comma-separated hex fields
key,nonce,plaintext,associated-data,ciphertext,tag; empty fields allowed):

  ccm_vectors.txt     AES-CCM, L=2, 13-octet nonce, tag 4/8/16 octets
  ctr_vectors.txt     counter mode with blocks 0x01 || nonce || i (i from 1)
  cbcmac_vectors.txt  CBC-MAC with a tag-length-free first block

These are produced independently of the Rust code and checked in.
"""
import os
import random
import sys

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESCCM


def aes_ecb(key, block):
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def ctr(key, nonce, pt):
    a1 = bytes([0x01]) + nonce + (1).to_bytes(2, "big")
    enc = Cipher(algorithms.AES(key), modes.CTR(a1)).encryptor()
    return enc.update(pt) + enc.finalize()


def pad16(b):
    return b + bytes((-len(b)) % 16)


def cbc_mac(key, nonce, ad, pt):
    flags = (0x40 if ad else 0x00) | 0x01
    b0 = bytes([flags]) + nonce + len(pt).to_bytes(2, "big")
    data = b0
    if ad:
        data += pad16(len(ad).to_bytes(2, "big") + ad)
    data += pad16(pt)
    x = bytes(16)
    for i in range(0, len(data), 16):
        x = aes_ecb(key, bytes(a ^ b for a, b in zip(x, data[i:i + 16])))
    return x


def main(outdir):
    # Sanity: FIPS-197 appendix C.1 and RFC 3610 packet vector #1.
    assert aes_ecb(bytes(range(16)), bytes.fromhex("00112233445566778899aabbccddeeff")).hex() \
        == "69c4e0d86a7b0430d8cdb78070b4c55a"
    rfc = AESCCM(bytes(range(0xC0, 0xD0)), tag_length=8).encrypt(
        bytes.fromhex("00000003020100a0a1a2a3a4a5"), bytes(range(8, 0x1F)), bytes(range(8)))
    assert rfc.hex() == "588c979a61c663d2f066d0c2c0f989806d5f6b61dac38417e8d12cfdf926e0"

    rng = random.Random(0x802154)
    ccm, ctrv, cbc = [], [], []
    for i in range(48):
        key = bytes(rng.getrandbits(8) for _ in range(16))
        nonce = bytes(rng.getrandbits(8) for _ in range(13))
        pt = bytes(rng.getrandbits(8) for _ in range(rng.choice([0, 1, 8, 15, 16, 17, 33, 102])))
        ad = bytes(rng.getrandbits(8) for _ in range(rng.choice([0, 1, 14, 16, 31])))
        m = [4, 8, 16][i % 3]
        out = AESCCM(key, tag_length=m).encrypt(nonce, pt, ad or None)
        ccm.append((key, nonce, pt, ad, out[:-m], out[-m:]))
        ctrv.append((key, nonce, pt, b"", ctr(key, nonce, pt), b""))
        cbc.append((key, nonce, pt, ad, pt, cbc_mac(key, nonce, ad, pt)[:m]))

    header = "# key,nonce,plaintext,associated-data,ciphertext,tag (hex)\n"
    for name, rows in (("ccm_vectors.txt", ccm), ("ctr_vectors.txt", ctrv),
                       ("cbcmac_vectors.txt", cbc)):
        with open(os.path.join(outdir, name), "w") as f:
            f.write(header)
            for r in rows:
                f.write(",".join(x.hex() for x in r) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
