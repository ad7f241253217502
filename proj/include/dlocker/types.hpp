#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dlocker {

using ns_t = std::uint64_t;

// Error hierarchy. Every failure mode named by the contracts maps to one
// of these; callers catch sim_error for blanket handling.
struct sim_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct address_error : sim_error { using sim_error::sim_error; };
struct size_error : sim_error { using sim_error::sim_error; };
struct subarray_mismatch : sim_error { using sim_error::sim_error; };
struct degenerate_copy : sim_error { using sim_error::sim_error; };
struct capacity_exceeded : sim_error { using sim_error::sim_error; };
struct not_locked : sim_error { using sim_error::sim_error; };
struct degenerate_swap : sim_error { using sim_error::sim_error; };
struct invalid_payload : sim_error { using sim_error::sim_error; };
struct type_confusion : sim_error { using sim_error::sim_error; };
struct nontermination : sim_error { using sim_error::sim_error; };
struct format_error : sim_error { using sim_error::sim_error; };
struct range_error : sim_error { using sim_error::sim_error; };
struct placement_error : sim_error { using sim_error::sim_error; };
struct page_fault : sim_error { using sim_error::sim_error; };
struct encoding_error : sim_error { using sim_error::sim_error; };
struct resource_exhausted : sim_error { using sim_error::sim_error; };
struct empty_candidate_set : sim_error { using sim_error::sim_error; };
struct io_error : sim_error { using sim_error::sim_error; };
struct config_error : sim_error { using sim_error::sim_error; };

// Physical row coordinate. Ordering is (bank, subarray, row); adjacency
// means |row_a - row_b| == 1 within the same subarray.
struct RowAddress {
  std::uint32_t bank = 0;
  std::uint32_t subarray = 0;
  std::uint32_t row = 0;

  auto operator<=>(const RowAddress&) const = default;

  bool same_subarray(const RowAddress& o) const {
    return bank == o.bank && subarray == o.subarray;
  }

  std::string str() const {
    return std::to_string(bank) + ":" + std::to_string(subarray) + ":" +
           std::to_string(row);
  }
};

inline std::uint64_t flat_key(const RowAddress& a) {
  return (std::uint64_t{a.bank} << 42) | (std::uint64_t{a.subarray} << 21) |
         std::uint64_t{a.row};
}

}  // namespace dlocker

template <>
struct std::hash<dlocker::RowAddress> {
  std::size_t operator()(const dlocker::RowAddress& a) const noexcept {
    return std::hash<std::uint64_t>{}(dlocker::flat_key(a));
  }
};
