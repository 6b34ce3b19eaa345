use proptest::prelude::*;
use vidseal_core::extended_frame::{block_layout, TileSize};
use vidseal_core::hash_store::*;
use vidseal_core::robust_hash::{HashValue, HASH_BYTES};
use vidseal_core::Error;

fn arb_record() -> impl Strategy<Value = HashRecord> {
    (2u16..12, 8u32..400, 8u32..400, 1u32..600).prop_flat_map(|(n, w, h, frames)| {
        let (blocks, pad) = block_layout(frames as usize, n as usize);
        prop::collection::vec(any::<([u8; HASH_BYTES], [u8; HASH_BYTES])>(), blocks).prop_map(
            move |hashes| HashRecord {
                n,
                tile: TileSize { width: w, height: h },
                frame_count: frames,
                pad_count: pad as u16,
                blocks: hashes
                    .into_iter()
                    .map(|(p, c)| BlockHashes {
                        primary: HashValue::from_bytes(p),
                        corner: HashValue::from_bytes(c),
                    })
                    .collect(),
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn read_write_identity(record in arb_record()) {
        let bytes = record.to_bytes().unwrap();
        prop_assert_eq!(bytes.len(), 20 + 30 * record.blocks.len());
        prop_assert_eq!(HashRecord::from_bytes(&bytes).unwrap(), record);
    }
}

#[test]
fn handmade_single_block_fixture() {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"VHR1");
    bytes.extend_from_slice(&[8, 0, 96, 0, 54, 0]);
    bytes.extend_from_slice(&[64, 0, 0, 0]);
    bytes.extend_from_slice(&[0, 0]);
    bytes.extend_from_slice(&[1, 0, 0, 0]);
    bytes.extend((0..15u8).map(|i| i + 1));
    bytes.extend((0..15u8).map(|i| 0xf0 - i));
    assert_eq!(bytes.len(), 50);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.vhr");
    std::fs::write(&path, &bytes).unwrap();
    let record = read_record(&path).unwrap();
    assert_eq!(record.n, 8);
    assert_eq!(record.tile, TileSize::DEFAULT);
    assert_eq!(record.frame_count, 64);
    assert_eq!(record.blocks.len(), 1);
    assert_eq!(record.blocks[0].primary.to_hex(), "0102030405060708090a0b0c0d0e0f");
    assert_eq!(record.blocks[0].corner.as_bytes()[0], 0xf0);

    let copy = dir.path().join("copy.vhr");
    write_record(&record, &copy).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), bytes);
}

#[test]
fn read_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        read_record(dir.path().join("absent.vhr")),
        Err(Error::FileNotFound(_))
    ));
    let bad = dir.path().join("bad.vhr");
    std::fs::write(&bad, b"XXXX\x08\x00\x60\x00\x36\x00\x40\x00\x00\x00\x00\x00\x01\x00\x00\x00").unwrap();
    assert!(matches!(read_record(&bad), Err(Error::BadMagic(_))));
}
