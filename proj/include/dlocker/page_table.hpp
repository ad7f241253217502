#pragma once

#include <cstdint>
#include <vector>

#include "dlocker/dram.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

// PTE wire format: 32-bit little-endian word,
// bit 0 = valid, bits 1..9 reserved, bits 10..31 = 22-bit frame field.
// The frame packs (bank, subarray, row) as bank:5 | subarray:7 | row:10.
struct Pte {
  bool valid = false;
  RowAddress frame;

  static constexpr std::uint32_t kFrameShift = 10;

  std::uint32_t pack() const {
    const std::uint32_t f = ((frame.bank & 0x1F) << 17) |
                            ((frame.subarray & 0x7F) << 10) |
                            (frame.row & 0x3FF);
    return (f << kFrameShift) | (valid ? 1u : 0u);
  }

  static Pte unpack(std::uint32_t word) {
    Pte p;
    p.valid = (word & 1u) != 0;
    const std::uint32_t f = word >> kFrameShift;
    p.frame = {(f >> 17) & 0x1F, (f >> 10) & 0x7F, f & 0x3FF};
    return p;
  }
};

// Page table stored in designated DRAM rows; the DRAM bytes are
// authoritative, so attacker flips show up in translation immediately.
// PTE for vpn v lives at byte offset 4*v across the pte_rows in order.
class PageTable {
 public:
  PageTable(std::vector<RowAddress> pte_rows, std::uint32_t row_size)
      : pte_rows_(std::move(pte_rows)), row_size_(row_size) {}

  const std::vector<RowAddress>& pte_rows() const { return pte_rows_; }
  std::size_t capacity() const { return pte_rows_.size() * (row_size_ / 4); }

  void set_entry(DramState& dram, std::uint32_t vpn, const Pte& pte) const {
    auto [row, off] = slot(vpn);
    std::vector<std::uint8_t> bytes = dram.row_data(row);
    const std::uint32_t w = pte.pack();
    for (int i = 0; i < 4; ++i)
      bytes[off + i] = static_cast<std::uint8_t>(w >> (8 * i));
    dram.write_row(row, bytes);
  }

  Pte entry(DramState& dram, std::uint32_t vpn) const {
    auto [row, off] = slot(vpn);
    const std::vector<std::uint8_t>& bytes = dram.row_data(row);
    std::uint32_t w = 0;
    for (int i = 3; i >= 0; --i) w = (w << 8) | bytes[off + i];
    return Pte::unpack(w);
  }

  RowAddress translate(DramState& dram, std::uint32_t vpn) const {
    Pte p = entry(dram, vpn);
    if (!p.valid) throw page_fault("no valid PTE for vpn " + std::to_string(vpn));
    dram.check_bounds(p.frame);
    return p.frame;
  }

  // Absolute bit position of `bit` within vpn's PTE, within its row.
  std::pair<RowAddress, std::uint32_t> bit_position(std::uint32_t vpn,
                                                    std::uint8_t bit) const {
    if (bit >= 32) throw encoding_error("PTE bit index must be < 32");
    auto [row, off] = slot(vpn);
    return {row, off * 8 + bit};
  }

 private:
  std::pair<RowAddress, std::uint32_t> slot(std::uint32_t vpn) const {
    const std::uint32_t per_row = row_size_ / 4;
    const std::uint32_t ri = vpn / per_row;
    if (ri >= pte_rows_.size())
      throw page_fault("vpn outside the page table: " + std::to_string(vpn));
    return {pte_rows_[ri], (vpn % per_row) * 4};
  }

  std::vector<RowAddress> pte_rows_;
  std::uint32_t row_size_;
};

}  // namespace dlocker
