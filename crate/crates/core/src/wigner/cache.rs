//! Regge-symmetry canonicalization and the shared 3j memo table.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use lru::LruCache;
use parking_lot::Mutex;

use super::ssr::SignedSqrtRational;
use super::threej::ThreeJArgs;

pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

/// Flattened 3×3 Regge square.
pub(crate) type ReggeKey = [u32; 9];

struct Memo {
    enabled: bool,
    table: LruCache<ReggeKey, SignedSqrtRational>,
}

fn memo() -> &'static Mutex<Memo> {
    static MEMO: OnceLock<Mutex<Memo>> = OnceLock::new();
    MEMO.get_or_init(|| {
        Mutex::new(Memo {
            enabled: true,
            table: LruCache::new(NonZeroUsize::new(DEFAULT_CACHE_CAPACITY).unwrap()),
        })
    })
}

/// Resizes the memo table; `0` disables memoization.
pub fn set_cache_capacity(capacity: usize) {
    let mut m = memo().lock();
    match NonZeroUsize::new(capacity) {
        Some(cap) => {
            m.enabled = true;
            m.table.resize(cap);
        }
        None => {
            m.enabled = false;
            m.table.clear();
        }
    }
}

pub fn clear_cache() {
    memo().lock().table.clear();
}

pub fn cache_len() -> usize {
    memo().lock().table.len()
}

pub(crate) fn lookup(key: &ReggeKey) -> Option<SignedSqrtRational> {
    let mut m = memo().lock();
    if !m.enabled {
        return None;
    }
    m.table.get(key).cloned()
}

pub(crate) fn insert(key: ReggeKey, value: SignedSqrtRational) {
    let mut m = memo().lock();
    if m.enabled {
        m.table.put(key, value);
    }
}

const PERMS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([0, 2, 1], true),
    ([2, 1, 0], true),
    ([1, 0, 2], true),
];

/// Lexicographically smallest of the 72 Regge-equivalent squares of a
/// triangle-valid, m-conserving 3j symbol, with the phase relating them.
///
/// Odd row or column permutations contribute `(-1)^J`; transposition none.
pub(crate) fn canonical(args: &ThreeJArgs) -> (ReggeKey, i32) {
    let l = [args.l1 as i64, args.l2 as i64, args.l3 as i64];
    let m = [args.m1 as i64, args.m2 as i64, args.m3 as i64];
    let big_j: i64 = l.iter().sum();
    let mut square = [[0u32; 3]; 3];
    for i in 0..3 {
        square[0][i] = (big_j - 2 * l[i]) as u32;
        square[1][i] = (l[i] - m[i]) as u32;
        square[2][i] = (l[i] + m[i]) as u32;
    }
    let odd_phase = if big_j % 2 == 0 { 1 } else { -1 };

    let mut best: Option<(ReggeKey, i32)> = None;
    for transpose in [false, true] {
        for (rows, rows_odd) in PERMS {
            for (cols, cols_odd) in PERMS {
                let mut key = [0u32; 9];
                for r in 0..3 {
                    for c in 0..3 {
                        let (sr, sc) = if transpose { (cols[c], rows[r]) } else { (rows[r], cols[c]) };
                        key[3 * r + c] = square[sr][sc];
                    }
                }
                let mut phase = 1;
                if rows_odd {
                    phase *= odd_phase;
                }
                if cols_odd {
                    phase *= odd_phase;
                }
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, phase));
                }
            }
        }
    }
    best.unwrap()
}

/// Doubled `(2j, 2m)` columns of the 3j symbol whose Regge square is `key`.
///
/// Regge transformations can map integer symbols onto half-integer ones,
/// so the canonical representative is read back in doubled units.
pub(crate) fn doubled_from_key(key: &ReggeKey) -> ([i64; 3], [i64; 3]) {
    let mut tj = [0i64; 3];
    let mut tm = [0i64; 3];
    for i in 0..3 {
        let minus = key[3 + i] as i64;
        let plus = key[6 + i] as i64;
        tj[i] = minus + plus;
        tm[i] = plus - minus;
    }
    (tj, tm)
}
