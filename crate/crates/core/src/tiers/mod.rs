//! Compressed memory tiers: codec + pool allocator + backing media.

mod pool;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use pool::{class_size, AllocatorKind, CHUNK};
use pool::{Pool, Slot};

use crate::codecs::Codec;
use crate::{Error, Result, PAGE_SIZE};

/// Compressed outputs larger than this are kept as raw pages.
pub const RAW_THRESHOLD: usize = PAGE_SIZE - CHUNK;

const BYTES_PER_GB: f64 = (1u64 << 30) as f64;

/// 1-based tier index; tier 1 is the fastest compressed tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TierId(pub u16);

impl TierId {
    /// Zero-based position in a tier list.
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn from_index(index: usize) -> Self {
        TierId(index as u16 + 1)
    }
}

impl fmt::Display for TierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediaKind {
    Dram,
    OptaneLike,
}

impl MediaKind {
    pub fn tag(self) -> &'static str {
        match self {
            MediaKind::Dram => "DR",
            MediaKind::OptaneLike => "OP",
        }
    }
}

/// Physical memory backing a pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Media {
    pub kind: MediaKind,
    /// Extra latency per 4 KiB read, on top of decompression.
    pub read_latency_ns: u64,
    pub cost_per_gb: f64,
}

impl Media {
    pub const DEFAULT_DRAM_COST_PER_GB: f64 = 3.0;

    pub fn dram() -> Self {
        Self {
            kind: MediaKind::Dram,
            read_latency_ns: 0,
            cost_per_gb: Self::DEFAULT_DRAM_COST_PER_GB,
        }
    }

    /// Byte-addressable persistent memory at a third of the DRAM price.
    pub fn optane_like() -> Self {
        Self {
            kind: MediaKind::OptaneLike,
            read_latency_ns: 1000,
            cost_per_gb: Self::DEFAULT_DRAM_COST_PER_GB / 3.0,
        }
    }

    pub fn cost_per_page(&self) -> f64 {
        self.cost_per_gb * PAGE_SIZE as f64 / BYTES_PER_GB
    }
}

/// Static description of a compressed tier, before calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierDesc {
    pub name: String,
    pub codec: Codec,
    pub allocator: AllocatorKind,
    pub media: Media,
}

impl TierDesc {
    /// Builds a tier named in the `ZS-LO-DR` style.
    pub fn standard(allocator: AllocatorKind, codec: Codec, media: Media) -> Self {
        let name = format!(
            "{}-{}-{}",
            allocator.tag(),
            codec.kind.tag(),
            media.kind.tag()
        );
        Self {
            name,
            codec,
            allocator,
            media,
        }
    }
}

/// The twelve characterization tiers: {zbud, zsmalloc} x {lz4, lzo,
/// deflate} x {DRAM, Optane-like}, codec-major.
pub fn characterization_set() -> Vec<TierDesc> {
    let mut out = Vec::with_capacity(12);
    for codec in [Codec::lz4(), Codec::lzo(), Codec::deflate()] {
        for allocator in [AllocatorKind::Zbud, AllocatorKind::Zsmalloc] {
            for media in [Media::dram(), Media::optane_like()] {
                out.push(TierDesc::standard(allocator, codec, media));
            }
        }
    }
    out
}

/// DRAM plus one zsmalloc/lzo tier in DRAM.
pub fn standard_two_tier() -> Vec<TierDesc> {
    vec![TierDesc::standard(
        AllocatorKind::Zsmalloc,
        Codec::lzo(),
        Media::dram(),
    )]
}

/// DRAM plus five tiers, fastest first.
pub fn standard_six_tier() -> Vec<TierDesc> {
    vec![
        TierDesc::standard(AllocatorKind::Zbud, Codec::lz4(), Media::dram()),
        TierDesc::standard(AllocatorKind::Zbud, Codec::lz4(), Media::optane_like()),
        TierDesc::standard(AllocatorKind::Zsmalloc, Codec::lz4(), Media::optane_like()),
        TierDesc::standard(AllocatorKind::Zsmalloc, Codec::lzo(), Media::dram()),
        TierDesc::standard(
            AllocatorKind::Zsmalloc,
            Codec::deflate(),
            Media::optane_like(),
        ),
    ]
}

/// A calibrated tier ready to be used in a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSpec {
    pub id: TierId,
    pub desc: TierDesc,
    /// Time to serve one fault (decompression + media + lookup).
    pub access_latency_ns: u64,
    /// Time to compress one page into this tier.
    pub compress_latency_ns: u64,
}

impl TierSpec {
    pub fn codec(&self) -> Codec {
        self.desc.codec
    }

    pub fn name(&self) -> &str {
        &self.desc.name
    }
}

/// Checks that ids are dense from 1 and that tier 1 / tier N hold the
/// minimum / maximum access latency.
pub fn validate_tier_order(specs: &[TierSpec]) -> Result<()> {
    for (i, s) in specs.iter().enumerate() {
        if s.id != TierId::from_index(i) {
            return Err(Error::Config(format!(
                "tier ids must be dense from 1; found {} at position {}",
                s.id,
                i + 1
            )));
        }
        if s.access_latency_ns == 0 {
            return Err(Error::Config(format!(
                "tier {} has zero access latency",
                s.id
            )));
        }
    }
    if let (Some(first), Some(last)) = (specs.first(), specs.last()) {
        let min = specs.iter().map(|s| s.access_latency_ns).min().unwrap_or(0);
        let max = specs.iter().map(|s| s.access_latency_ns).max().unwrap_or(0);
        if first.access_latency_ns != min {
            return Err(Error::Config(format!(
                "tier 1 ({}) must have the lowest access latency ({} ns > {} ns)",
                first.name(),
                first.access_latency_ns,
                min
            )));
        }
        if last.access_latency_ns != max {
            return Err(Error::Config(format!(
                "tier {} ({}) must have the highest access latency ({} ns < {} ns)",
                last.id,
                last.name(),
                last.access_latency_ns,
                max
            )));
        }
    }
    Ok(())
}

/// Compressed bytes plus the information needed to restore them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedObject {
    pub data: Arc<[u8]>,
    pub codec: Codec,
    /// Stored uncompressed because the codec output was too large.
    pub raw: bool,
}

impl CompressedObject {
    /// Compresses `page` with `codec`, falling back to raw storage.
    pub fn compress(codec: Codec, page: &[u8]) -> Result<Self> {
        let out = crate::codecs::compress_page(codec, page)?;
        if out.len() > RAW_THRESHOLD {
            Ok(Self {
                data: page.into(),
                codec,
                raw: true,
            })
        } else {
            Ok(Self {
                data: out.into(),
                codec,
                raw: false,
            })
        }
    }

    pub fn stored_len(&self) -> usize {
        self.data.len()
    }

    pub fn decompress(&self) -> Result<Vec<u8>> {
        if self.raw {
            Ok(self.data.to_vec())
        } else {
            crate::codecs::decompress_page(self.codec, &self.data)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StoreReceipt {
    pub compressed_bytes: usize,
    pub pool_delta: i64,
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MigrationReceipt {
    pub pages: u64,
    /// Uncompressed bytes relocated.
    pub bytes_moved: u64,
    pub cost_ns: u64,
    /// False when source and destination share a codec.
    pub recompressed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TierStats {
    pub pages: u64,
    pub pool_bytes: u64,
    pub faults: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
struct Entry {
    object: CompressedObject,
    slot: Slot,
}

/// Runtime state of one compressed pool.
#[derive(Debug, Clone)]
pub struct CompressedTier {
    spec: TierSpec,
    pool: Pool,
    objects: HashMap<u64, Entry>,
    faults: u64,
    stored_original_bytes: u64,
}

impl CompressedTier {
    pub fn new(spec: TierSpec) -> Self {
        let pool = Pool::new(spec.desc.allocator);
        Self {
            spec,
            pool,
            objects: HashMap::new(),
            faults: 0,
            stored_original_bytes: 0,
        }
    }

    pub fn spec(&self) -> &TierSpec {
        &self.spec
    }

    pub fn id(&self) -> TierId {
        self.spec.id
    }

    pub fn contains(&self, page_id: u64) -> bool {
        self.objects.contains_key(&page_id)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn pool_bytes(&self) -> u64 {
        self.pool.bytes()
    }

    pub fn faults(&self) -> u64 {
        self.faults
    }

    pub fn stored_original_bytes(&self) -> u64 {
        self.stored_original_bytes
    }

    /// Original bytes over pool bytes; 1.0 for an empty tier.
    pub fn compression_ratio(&self) -> f64 {
        let pool = self.pool.bytes();
        if pool == 0 {
            1.0
        } else {
            self.stored_original_bytes as f64 / pool as f64
        }
    }

    pub fn stats(&self) -> TierStats {
        TierStats {
            pages: self.objects.len() as u64,
            pool_bytes: self.pool.bytes(),
            faults: self.faults,
            ratio: self.compression_ratio(),
        }
    }

    /// Compresses and stores one page.
    pub fn store(&mut self, page_id: u64, page: &[u8]) -> Result<StoreReceipt> {
        if self.contains(page_id) {
            return Err(Error::DuplicatePage {
                tier: self.spec.id,
                page: page_id,
            });
        }
        let object = CompressedObject::compress(self.spec.desc.codec, page)?;
        self.insert(page_id, object)
    }

    /// Stores an object that was already compressed with this tier's codec.
    pub fn insert(&mut self, page_id: u64, object: CompressedObject) -> Result<StoreReceipt> {
        if self.contains(page_id) {
            return Err(Error::DuplicatePage {
                tier: self.spec.id,
                page: page_id,
            });
        }
        debug_assert_eq!(object.codec, self.spec.desc.codec);
        let before = self.pool.bytes();
        let size = object.stored_len();
        let slot = self.pool.alloc(size);
        self.stored_original_bytes += PAGE_SIZE as u64;
        let raw = object.raw;
        self.objects.insert(page_id, Entry { object, slot });
        Ok(StoreReceipt {
            compressed_bytes: size,
            pool_delta: self.pool.bytes() as i64 - before as i64,
            raw,
        })
    }

    /// Serves a fault: decompresses the page, removes it from the pool and
    /// counts the fault.
    pub fn load(&mut self, page_id: u64) -> Result<(Vec<u8>, u64)> {
        let object = self.take(page_id)?;
        self.faults += 1;
        Ok((object.decompress()?, self.spec.access_latency_ns))
    }

    /// Removes an object without counting a fault (used by migrations).
    pub fn take(&mut self, page_id: u64) -> Result<CompressedObject> {
        let entry = self.objects.remove(&page_id).ok_or(Error::MissingPage {
            tier: self.spec.id,
            page: page_id,
        })?;
        self.pool.free(entry.slot, entry.object.stored_len());
        self.stored_original_bytes -= PAGE_SIZE as u64;
        Ok(entry.object)
    }

    pub fn object(&self, page_id: u64) -> Option<&CompressedObject> {
        self.objects.get(&page_id).map(|e| &e.object)
    }

    /// Serves a fault for a page whose bytes the caller can rebuild itself:
    /// removes it from the pool, counts the fault and returns the access
    /// latency, skipping the decompression.
    pub fn fault(&mut self, page_id: u64) -> Result<u64> {
        self.take(page_id)?;
        self.faults += 1;
        Ok(self.spec.access_latency_ns)
    }
}

/// Moves pages between tiers by decompressing from `src` and compressing
/// into `dst`.
pub fn migrate(
    src: &mut CompressedTier,
    dst: &mut CompressedTier,
    page_ids: &[u64],
) -> Result<MigrationReceipt> {
    let codec = dst.spec.desc.codec;
    migrate_with(src, dst, page_ids, |_, obj| {
        if obj.codec == codec {
            Ok(obj.clone())
        } else {
            CompressedObject::compress(codec, &obj.decompress()?)
        }
    })
}

/// Like [`migrate`], with the recompression step supplied by the caller
/// (e.g. a memoizing compressor). The batch is validated up front and
/// applied atomically.
pub fn migrate_with<F>(
    src: &mut CompressedTier,
    dst: &mut CompressedTier,
    page_ids: &[u64],
    mut recompress: F,
) -> Result<MigrationReceipt>
where
    F: FnMut(u64, &CompressedObject) -> Result<CompressedObject>,
{
    if let Some(&missing) = page_ids.iter().find(|id| !src.contains(**id)) {
        return Err(Error::MissingPage {
            tier: src.spec.id,
            page: missing,
        });
    }
    if let Some(&dup) = page_ids.iter().find(|id| dst.contains(**id)) {
        return Err(Error::DuplicatePage {
            tier: dst.spec.id,
            page: dup,
        });
    }
    let same_codec = src.spec.desc.codec == dst.spec.desc.codec;
    // Recompress everything before mutating either tier.
    let moved = page_ids
        .iter()
        .map(|&id| recompress(id, &src.objects[&id].object).map(|o| (id, o)))
        .collect::<Result<Vec<_>>>()?;
    for (id, object) in moved {
        src.take(id)?;
        dst.insert(id, object)?;
    }
    let per_page = if same_codec {
        src.spec.access_latency_ns
    } else {
        src.spec.access_latency_ns + dst.spec.compress_latency_ns
    };
    let pages = page_ids.len() as u64;
    Ok(MigrationReceipt {
        pages,
        bytes_moved: pages * PAGE_SIZE as u64,
        cost_ns: pages * per_page,
        recompressed: !same_codec && pages > 0,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn spec(
        id: u16,
        allocator: AllocatorKind,
        codec: Codec,
        media: Media,
        lat: u64,
    ) -> TierSpec {
        TierSpec {
            id: TierId(id),
            desc: TierDesc::standard(allocator, codec, media),
            access_latency_ns: lat,
            compress_latency_ns: lat / 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::spec;
    use super::*;
    use crate::codecs::{generate_pages, DataProfile};

    fn tier(alloc: AllocatorKind, codec: Codec) -> CompressedTier {
        CompressedTier::new(spec(1, alloc, codec, Media::dram(), 2000))
    }

    fn text_pages(n: usize) -> Vec<Vec<u8>> {
        generate_pages(&DataProfile::text_like(3.0, 3), n).unwrap()
    }

    #[test]
    fn empty_tier_stats() {
        let t = tier(AllocatorKind::Zbud, Codec::lz4());
        assert_eq!(
            t.stats(),
            TierStats {
                pages: 0,
                pool_bytes: 0,
                faults: 0,
                ratio: 1.0
            }
        );
    }

    #[test]
    fn store_then_load_round_trips_and_counts() {
        let mut t = tier(AllocatorKind::Zsmalloc, Codec::lzo());
        let pages = text_pages(3);
        for (i, p) in pages.iter().enumerate() {
            t.store(i as u64, p).unwrap();
        }
        let (back, lat) = t.load(1).unwrap();
        assert_eq!(back, pages[1]);
        assert_eq!(lat, 2000);
        assert_eq!(t.faults(), 1);
        assert!(matches!(t.load(1), Err(Error::MissingPage { page: 1, .. })));
        assert_eq!(t.faults(), 1);
        t.load(0).unwrap();
        assert_eq!(t.stats().faults, 2);
    }

    #[test]
    fn duplicate_store_is_rejected() {
        let mut t = tier(AllocatorKind::Zbud, Codec::lz4());
        let p = vec![0u8; PAGE_SIZE];
        t.store(7, &p).unwrap();
        assert!(matches!(
            t.store(7, &p),
            Err(Error::DuplicatePage { page: 7, .. })
        ));
    }

    #[test]
    fn zero_pages_under_deflate_compress_well() {
        let mut t = tier(AllocatorKind::Zsmalloc, Codec::deflate());
        let z = vec![0u8; PAGE_SIZE];
        for i in 0..100 {
            t.store(i, &z).unwrap();
        }
        assert!(t.stats().ratio > 10.0, "{:?}", t.stats());
    }

    #[test]
    fn random_pages_are_stored_raw() {
        let mut t = tier(AllocatorKind::Zsmalloc, Codec::lz4());
        let p = generate_pages(&DataProfile::random(1), 1)
            .unwrap()
            .pop()
            .unwrap();
        let r = t.store(0, &p).unwrap();
        assert!(r.raw);
        assert_eq!(r.pool_delta, PAGE_SIZE as i64);
        assert_eq!(t.load(0).unwrap().0, p);
    }

    #[test]
    fn zbud_load_both_buddies_restores_pool() {
        let mut t = tier(AllocatorKind::Zbud, Codec::lz4());
        let z = vec![0u8; PAGE_SIZE];
        t.store(100, &z).unwrap();
        let before = t.pool_bytes();
        t.store(1, &z).unwrap();
        t.store(2, &z).unwrap();
        t.load(1).unwrap();
        t.load(2).unwrap();
        assert_eq!(t.pool_bytes(), before);
    }

    #[test]
    fn migrate_same_codec_skips_recompression_cost() {
        let mut a = CompressedTier::new(spec(
            1,
            AllocatorKind::Zbud,
            Codec::lz4(),
            Media::dram(),
            1000,
        ));
        let mut b = CompressedTier::new(spec(
            2,
            AllocatorKind::Zbud,
            Codec::lz4(),
            Media::optane_like(),
            2000,
        ));
        let pages = text_pages(10);
        for (i, p) in pages.iter().enumerate() {
            a.store(i as u64, p).unwrap();
        }
        let ids: Vec<u64> = (0..10).collect();
        let r = migrate(&mut a, &mut b, &ids).unwrap();
        assert_eq!(r.pages, 10);
        assert!(!r.recompressed);
        assert_eq!(r.cost_ns, 10 * 1000);
        assert!(a.is_empty());
        assert_eq!(b.len(), 10);
    }

    #[test]
    fn migrate_empty_is_noop() {
        let mut a = tier(AllocatorKind::Zbud, Codec::lz4());
        let mut b = CompressedTier::new(spec(
            2,
            AllocatorKind::Zsmalloc,
            Codec::deflate(),
            Media::dram(),
            9000,
        ));
        let r = migrate(&mut a, &mut b, &[]).unwrap();
        assert_eq!(r, MigrationReceipt::default());
    }

    #[test]
    fn migrate_across_codecs_recompresses() {
        let mut a = CompressedTier::new(spec(
            1,
            AllocatorKind::Zbud,
            Codec::lz4(),
            Media::dram(),
            1000,
        ));
        let mut b = CompressedTier::new(spec(
            5,
            AllocatorKind::Zsmalloc,
            Codec::deflate(),
            Media::optane_like(),
            9000,
        ));
        let pages = text_pages(6);
        for (i, p) in pages.iter().enumerate() {
            a.store(i as u64, p).unwrap();
        }
        let ids: Vec<u64> = (0..6).collect();
        let r = migrate(&mut a, &mut b, &ids).unwrap();
        assert!(r.recompressed);
        assert_eq!(r.cost_ns, 6 * (1000 + 4500));
        for (i, p) in pages.iter().enumerate() {
            let fresh = crate::codecs::compress_page(Codec::deflate(), p).unwrap();
            assert_eq!(b.object(i as u64).unwrap().stored_len(), fresh.len());
            assert_eq!(b.load(i as u64).unwrap().0, *p);
        }
    }

    #[test]
    fn migrate_missing_id_is_atomic() {
        let mut a = tier(AllocatorKind::Zbud, Codec::lz4());
        let mut b = CompressedTier::new(spec(
            2,
            AllocatorKind::Zbud,
            Codec::lzo(),
            Media::dram(),
            3000,
        ));
        let z = vec![0u8; PAGE_SIZE];
        a.store(1, &z).unwrap();
        let pool = a.pool_bytes();
        assert!(matches!(
            migrate(&mut a, &mut b, &[1, 2]),
            Err(Error::MissingPage { page: 2, .. })
        ));
        assert!(a.contains(1));
        assert_eq!(a.pool_bytes(), pool);
        assert!(b.is_empty());
    }

    #[test]
    fn tier_order_validation() {
        let ok = vec![
            spec(1, AllocatorKind::Zbud, Codec::lz4(), Media::dram(), 100),
            spec(2, AllocatorKind::Zbud, Codec::lz4(), Media::dram(), 300),
            spec(3, AllocatorKind::Zbud, Codec::lz4(), Media::dram(), 200),
            spec(4, AllocatorKind::Zbud, Codec::lz4(), Media::dram(), 400),
        ];
        validate_tier_order(&ok).unwrap();
        let mut bad = ok.clone();
        bad[0].access_latency_ns = 350;
        assert!(validate_tier_order(&bad).is_err());
        let mut gap = ok;
        gap[1].id = TierId(7);
        assert!(validate_tier_order(&gap).is_err());
    }
}
