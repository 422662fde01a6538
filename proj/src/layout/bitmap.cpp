#include "eraid/layout/bitmap.hpp"

#include <zlib.h>

#include <cstring>

#include "eraid/error.hpp"
#include "eraid/layout/geometry.hpp"

namespace eraid {

LevelBitmap::LevelBitmap(std::uint64_t segments)
    : segments_(segments), word_count_((segments + 63) / 64) {
  words_ = std::make_unique<std::atomic<std::uint64_t>[]>(word_count_ == 0 ? 1 : word_count_);
  for (std::size_t i = 0; i < word_count_; ++i) words_[i].store(0);
}

Level LevelBitmap::get(std::uint64_t seg) const {
  const std::uint64_t w = words_[seg / 64].load(std::memory_order_acquire);
  return ((w >> (seg % 64)) & 1) != 0 ? Level::r10 : Level::r5;
}

void LevelBitmap::set(std::uint64_t seg, Level level) {
  const std::uint64_t mask = std::uint64_t{1} << (seg % 64);
  std::uint64_t prev;
  if (level == Level::r10) {
    prev = words_[seg / 64].fetch_or(mask, std::memory_order_acq_rel);
    if ((prev & mask) == 0) r10_.fetch_add(1);
  } else {
    prev = words_[seg / 64].fetch_and(~mask, std::memory_order_acq_rel);
    if ((prev & mask) != 0) r10_.fetch_sub(1);
  }
}

std::vector<std::uint8_t> LevelBitmap::to_bytes() const {
  std::vector<std::uint8_t> out((segments_ + 7) / 8, 0);
  for (std::uint64_t s = 0; s < segments_; ++s) {
    if (get(s) == Level::r10) out[s / 8] |= static_cast<std::uint8_t>(1u << (s % 8));
  }
  return out;
}

void LevelBitmap::assign_bytes(const std::vector<std::uint8_t>& bytes) {
  for (std::uint64_t s = 0; s < segments_; ++s) {
    const bool bit = s / 8 < bytes.size() && ((bytes[s / 8] >> (s % 8)) & 1) != 0;
    set(s, bit ? Level::r10 : Level::r5);
  }
}

std::uint64_t bitmap_record_blocks(std::uint64_t segments) {
  const std::uint64_t bytes = kBitmapHeader + (segments + 7) / 8;
  return (bytes + kBlockSize - 1) / kBlockSize;
}

namespace {

void put32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t bits_crc(std::uint64_t seq, const std::uint8_t* bits, std::size_t len) {
  std::uint8_t seqb[8];
  put64(seqb, seq);
  uLong c = crc32(0L, Z_NULL, 0);
  c = crc32(c, seqb, 8);
  c = crc32(c, bits, static_cast<uInt>(len));
  return static_cast<std::uint32_t>(c);
}

}  // namespace

void persist_bitmap(const std::vector<DevicePtr>& devices, const ArrayGeometry& g,
                    const LevelBitmap& bm, std::uint64_t seq) {
  const std::vector<std::uint8_t> bits = bm.to_bytes();
  std::vector<std::uint8_t> rec(g.bitmap_blocks() * kBlockSize, 0);
  put32(&rec[0], kBitmapMagic);
  put32(&rec[4], kBitmapVersion);
  put64(&rec[8], seq);
  put64(&rec[16], bm.size());
  std::memcpy(&rec[kBitmapHeader], bits.data(), bits.size());
  put32(&rec[24], bits_crc(seq, bits.data(), bits.size()));

  const std::uint64_t base = g.bitmap_lba(static_cast<int>(seq % 2));
  WriteOptions opt;
  opt.io_class = IoClass::maintenance;
  opt.hint = SizeHint::of_ratio(1.0);
  std::size_t written = 0;
  for (const auto& dev : devices) {
    if (!dev->online()) continue;
    try {
      for (std::uint64_t b = 0; b < g.bitmap_blocks(); ++b) {
        dev->write(base + b, ConstBlockSpan(rec.data() + b * kBlockSize, kBlockSize), opt);
      }
      ++written;
    } catch (const Error& e) {
      // A device that drops out mid-update just misses this replica.
      if (e.code() != Errc::device_offline) throw;
    }
  }
  if (written == 0) raise(Errc::device_offline, "no device accepted the level bitmap");
}

std::optional<BitmapImage> load_bitmap(const std::vector<DevicePtr>& devices,
                                       const ArrayGeometry& g) {
  std::optional<BitmapImage> best;
  std::vector<std::uint8_t> rec(g.bitmap_blocks() * kBlockSize);
  const std::size_t nbytes = (g.segment_count() + 7) / 8;
  for (const auto& dev : devices) {
    if (!dev->online()) continue;
    for (int slot = 0; slot < 2; ++slot) {
      const std::uint64_t base = g.bitmap_lba(slot);
      for (std::uint64_t b = 0; b < g.bitmap_blocks(); ++b) {
        dev->read_into(base + b, BlockSpan(rec.data() + b * kBlockSize, kBlockSize),
                       IoClass::maintenance);
      }
      if (get32(&rec[0]) != kBitmapMagic || get32(&rec[4]) != kBitmapVersion) continue;
      if (get64(&rec[16]) != g.segment_count()) continue;
      const std::uint64_t seq = get64(&rec[8]);
      if (bits_crc(seq, &rec[kBitmapHeader], nbytes) != get32(&rec[24])) continue;
      if (best && best->seq >= seq) continue;
      best = BitmapImage{seq, std::vector<std::uint8_t>(rec.begin() + kBitmapHeader,
                                                         rec.begin() + kBitmapHeader + nbytes)};
    }
  }
  return best;
}

}  // namespace eraid
