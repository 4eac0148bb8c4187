//! Footprint models for the compressed-object pool allocators.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::PAGE_SIZE;

/// Allocation granularity inside a pool page.
pub const CHUNK: usize = 64;

/// Pool allocator policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocatorKind {
    /// At most two objects per 4 KiB pool page.
    Zbud,
    /// At most three objects per 4 KiB pool page.
    Z3fold,
    /// Dense packing into 64-byte size classes.
    Zsmalloc,
}

impl AllocatorKind {
    pub fn tag(self) -> &'static str {
        match self {
            AllocatorKind::Zbud => "ZB",
            AllocatorKind::Z3fold => "Z3",
            AllocatorKind::Zsmalloc => "ZS",
        }
    }

    /// Modeled handle lookup + mapping cost added to every decompression.
    pub fn lookup_overhead_ns(self) -> u64 {
        match self {
            AllocatorKind::Zbud => 100,
            AllocatorKind::Z3fold => 150,
            AllocatorKind::Zsmalloc => 250,
        }
    }

    fn slots(self) -> Option<u8> {
        match self {
            AllocatorKind::Zbud => Some(2),
            AllocatorKind::Z3fold => Some(3),
            AllocatorKind::Zsmalloc => None,
        }
    }
}

impl std::str::FromStr for AllocatorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zbud" => Ok(AllocatorKind::Zbud),
            "z3fold" => Ok(AllocatorKind::Z3fold),
            "zsmalloc" => Ok(AllocatorKind::Zsmalloc),
            other => Err(crate::Error::Config(format!("unknown allocator `{other}`"))),
        }
    }
}

/// Bytes an object of `size` occupies once rounded to the chunk grid.
pub fn class_size(size: usize) -> usize {
    size.div_ceil(CHUNK).max(1) * CHUNK
}

/// Where an object landed; needed to release it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Page(u32),
    Class,
}

#[derive(Debug, Clone, Default)]
struct PoolPage {
    used: u32,
    objects: u8,
}

#[derive(Debug, Clone)]
pub(crate) enum Pool {
    Buddy(BuddyPool),
    Dense { bytes: u64 },
}

impl Pool {
    pub fn new(kind: AllocatorKind) -> Self {
        match kind.slots() {
            Some(slots) => Pool::Buddy(BuddyPool::new(slots)),
            None => Pool::Dense { bytes: 0 },
        }
    }

    /// Places an object of `size` bytes (already capped at a page) and
    /// returns its slot.
    pub fn alloc(&mut self, size: usize) -> Slot {
        let size = class_size(size.min(PAGE_SIZE));
        match self {
            Pool::Buddy(b) => Slot::Page(b.alloc(size as u32)),
            Pool::Dense { bytes } => {
                *bytes += size as u64;
                Slot::Class
            }
        }
    }

    pub fn free(&mut self, slot: Slot, size: usize) {
        let size = class_size(size.min(PAGE_SIZE));
        match (self, slot) {
            (Pool::Buddy(b), Slot::Page(idx)) => b.free(idx, size as u32),
            (Pool::Dense { bytes }, Slot::Class) => *bytes -= size as u64,
            _ => unreachable!("slot kind does not match pool kind"),
        }
    }

    pub fn bytes(&self) -> u64 {
        match self {
            Pool::Buddy(b) => b.live_pages * PAGE_SIZE as u64,
            Pool::Dense { bytes } => *bytes,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BuddyPool {
    slots: u8,
    pages: Vec<PoolPage>,
    recycled: Vec<u32>,
    /// Pages with a free slot, keyed by free bytes.
    open: BTreeSet<(u32, u32)>,
    live_pages: u64,
}

impl BuddyPool {
    fn new(slots: u8) -> Self {
        Self {
            slots,
            pages: Vec::new(),
            recycled: Vec::new(),
            open: BTreeSet::new(),
            live_pages: 0,
        }
    }

    fn free_bytes(page: &PoolPage) -> u32 {
        PAGE_SIZE as u32 - page.used
    }

    fn alloc(&mut self, size: u32) -> u32 {
        // First fit on the page with the largest free remainder.
        if let Some(&(free, idx)) = self.open.last() {
            if free >= size {
                self.open.remove(&(free, idx));
                let page = &mut self.pages[idx as usize];
                page.used += size;
                page.objects += 1;
                if page.objects < self.slots && page.used < PAGE_SIZE as u32 {
                    self.open.insert((Self::free_bytes(page), idx));
                }
                return idx;
            }
        }
        let idx = match self.recycled.pop() {
            Some(idx) => idx,
            None => {
                self.pages.push(PoolPage::default());
                (self.pages.len() - 1) as u32
            }
        };
        self.live_pages += 1;
        let page = &mut self.pages[idx as usize];
        *page = PoolPage {
            used: size,
            objects: 1,
        };
        if page.objects < self.slots && page.used < PAGE_SIZE as u32 {
            self.open.insert((Self::free_bytes(page), idx));
        }
        idx
    }

    fn free(&mut self, idx: u32, size: u32) {
        let page = &mut self.pages[idx as usize];
        self.open.remove(&(Self::free_bytes(page), idx));
        page.used -= size;
        page.objects -= 1;
        if page.objects == 0 {
            self.live_pages -= 1;
            self.recycled.push(idx);
        } else {
            self.open.insert((Self::free_bytes(page), idx));
        }
    }
}
