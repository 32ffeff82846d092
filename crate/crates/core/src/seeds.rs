/// SplitMix64 finaliser; decorrelates seeds derived from one master seed.
pub(crate) fn mix(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Stream identifiers for the independent random choices of one run.
pub(crate) const STREAM_DATA: u64 = 1;
pub(crate) const STREAM_GRID: u64 = 2;
pub(crate) const STREAM_FOLDS: u64 = 3;
