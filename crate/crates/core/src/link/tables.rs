//! Pinned 3GPP link-adaptation tables and the transport block size procedure.

use std::sync::OnceLock;

/// Resource elements per RB available for data. 38.214 caps the per-RB
/// value at 156; 144 leaves room for DMRS and control overhead.
pub const N_RE_PER_RB: u64 = 144;

/// 38.214 Table 5.1.3.1-1 (64QAM MCS table): modulation order Qm and target
/// code rate R x 1024, indexed by MCS 0..=28.
pub const MCS_TABLE: [(u8, u16); 29] = [
    (2, 120),
    (2, 157),
    (2, 193),
    (2, 251),
    (2, 308),
    (2, 379),
    (2, 449),
    (2, 526),
    (2, 602),
    (2, 679),
    (4, 340),
    (4, 378),
    (4, 434),
    (4, 490),
    (4, 553),
    (4, 616),
    (4, 658),
    (6, 438),
    (6, 466),
    (6, 517),
    (6, 567),
    (6, 616),
    (6, 666),
    (6, 719),
    (6, 772),
    (6, 822),
    (6, 873),
    (6, 910),
    (6, 948),
];

/// 38.214 Table 5.2.2.1-2 (4-bit CQI table): modulation order and code rate
/// x 1024 for CQI 1..=15.
pub const CQI_TABLE: [(u8, u16); 15] = [
    (2, 78),
    (2, 120),
    (2, 193),
    (2, 308),
    (2, 449),
    (2, 602),
    (4, 378),
    (4, 490),
    (4, 616),
    (6, 466),
    (6, 567),
    (6, 666),
    (6, 772),
    (6, 873),
    (6, 948),
];

/// MCS reported for CQI 1..=15: the highest MCS whose spectral efficiency
/// does not exceed the CQI's, with CQI 1 (below MCS 0) floored to MCS 0.
pub const CQI_TO_MCS: [u8; 15] = [0, 0, 2, 4, 6, 8, 11, 13, 15, 18, 20, 22, 24, 26, 28];

/// 38.214 Table 5.1.3.2-1: TBS for N_info <= 3824.
pub const TBS_TABLE: [u32; 93] = [
    24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128, 136, 144, 152, 160, 168, 176, 184,
    192, 208, 224, 240, 256, 272, 288, 304, 320, 336, 352, 368, 384, 408, 432, 456, 480, 504, 528,
    552, 576, 608, 640, 672, 704, 736, 768, 808, 848, 888, 928, 984, 1032, 1064, 1128, 1160, 1192,
    1224, 1256, 1288, 1320, 1352, 1416, 1480, 1544, 1608, 1672, 1736, 1800, 1864, 1928, 2024, 2088,
    2152, 2216, 2280, 2408, 2472, 2536, 2600, 2664, 2728, 2792, 2856, 2976, 3104, 3240, 3368, 3496,
    3624, 3752, 3824,
];

fn floor_log2(x: u128) -> u32 {
    127 - x.leading_zeros()
}

/// Transport block size in bits for a single-layer PUSCH.
///
/// `N_info` is carried as the exact rational `num / 1024`.
pub fn tbs_bits(mcs: u8, n_rb: u32) -> u32 {
    if n_rb == 0 {
        return 0;
    }
    let (qm, r) = MCS_TABLE[mcs as usize];
    let n_re = N_RE_PER_RB.min(156) * n_rb as u64;
    let num = n_re as u128 * r as u128 * qm as u128;
    const SCALE: u128 = 1024;

    if num <= 3824 * SCALE {
        let n = (floor_log2(num) as i64 - 10 - 6).max(3) as u32;
        let step = SCALE << n;
        let n_info = ((num / step) << n).max(24) as u32;
        return *TBS_TABLE
            .iter()
            .find(|&&t| t >= n_info)
            .expect("quantized N_info never exceeds 3824");
    }

    let x = num - 24 * SCALE;
    let n = floor_log2(x) - 10 - 5;
    let step = SCALE << n;
    let rounded = (2 * x + step) / (2 * step);
    let n_info = ((rounded << n) as u64).max(3840);
    let ceil = |a: u64, b: u64| a.div_ceil(b);
    let bits = if (r as u32) * 4 <= 1024 {
        let c = ceil(n_info + 24, 3816);
        8 * c * ceil(n_info + 24, 8 * c) - 24
    } else if n_info > 8424 {
        let c = ceil(n_info + 24, 8424);
        8 * c * ceil(n_info + 24, 8 * c) - 24
    } else {
        8 * ceil(n_info + 24, 8) - 24
    };
    bits as u32
}

/// Largest RB count covered by the precomputed table (the NR maximum).
pub const TBS_CACHE_RBS: u32 = 275;

fn cache() -> &'static [[u32; TBS_CACHE_RBS as usize + 1]; 29] {
    static CACHE: OnceLock<Box<[[u32; TBS_CACHE_RBS as usize + 1]; 29]>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut t = Box::new([[0u32; TBS_CACHE_RBS as usize + 1]; 29]);
        for (m, row) in t.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = tbs_bits(m as u8, k as u32) / 8;
            }
        }
        t
    })
}

/// Transport block size in bytes.
pub fn tbs_bytes(mcs: u8, n_rb: u32) -> u32 {
    if n_rb <= TBS_CACHE_RBS {
        cache()[mcs as usize][n_rb as usize]
    } else {
        tbs_bits(mcs, n_rb) / 8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        assert_eq!(TBS_TABLE.len(), 93);
        assert!(TBS_TABLE.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cqi_map_matches_spectral_efficiency() {
        for (i, &(cq, cr)) in CQI_TABLE.iter().enumerate() {
            let eff = cq as u32 * cr as u32;
            let best = MCS_TABLE
                .iter()
                .rposition(|&(q, r)| q as u32 * r as u32 <= eff)
                .unwrap_or(0);
            assert_eq!(CQI_TO_MCS[i] as usize, best, "cqi {}", i + 1);
        }
    }

    #[test]
    fn both_branches_are_exercised() {
        // 0 RB, tiny, table branch, low-rate and high-rate formula branches.
        assert_eq!(tbs_bits(0, 0), 0);
        assert_eq!(tbs_bits(0, 1), 32);
        assert_eq!(tbs_bytes(5, 4), 54);
        assert_eq!(tbs_bytes(0, 106), 453);
        assert_eq!(tbs_bytes(28, 106), 10497);
        assert_eq!(tbs_bytes(27, 50), 4737);
    }

    #[test]
    fn cache_agrees_with_direct_computation() {
        for m in 0..29u8 {
            for k in [0, 1, 17, 106, 275] {
                assert_eq!(tbs_bytes(m, k), tbs_bits(m, k) / 8);
            }
        }
        assert_eq!(tbs_bytes(10, 300), tbs_bits(10, 300) / 8);
    }
}
