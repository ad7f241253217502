#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "dlocker/dram.hpp"
#include "dlocker/lock.hpp"
#include "dlocker/model.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

enum class PlacementPolicy { Scatter, Sequential };

// Location of a single weight bit in DRAM.
struct BitLocation {
  RowAddress row;
  std::uint32_t byte_offset = 0;
  std::uint8_t bit = 0;
};

struct TargetBit {
  std::uint32_t layer = 0;
  std::uint32_t weight_index = 0;  // flat index within the layer
  std::uint8_t bit = 0;            // 0..7, 7 = sign/MSB

  auto operator<=>(const TargetBit&) const = default;
};

// Invertible placement of the flattened weight byte stream onto rows.
// Chunk i covers flat bytes [flat_start, flat_start + length) at the head
// of its row.
class WeightMap {
 public:
  struct Chunk {
    std::size_t flat_start = 0;
    std::size_t length = 0;
    RowAddress row;
  };

  std::vector<Chunk> chunks;
  std::vector<std::size_t> layer_starts;  // flat offset of each layer
  std::uint32_t row_size = 0;

  std::vector<RowAddress> rows() const {
    std::vector<RowAddress> out;
    for (const Chunk& c : chunks) out.push_back(c.row);
    return out;
  }

  BitLocation locate(const TargetBit& t) const {
    const std::size_t flat = layer_starts.at(t.layer) + t.weight_index;
    for (const Chunk& c : chunks) {
      if (flat >= c.flat_start && flat < c.flat_start + c.length)
        return {c.row, static_cast<std::uint32_t>(flat - c.flat_start), t.bit};
    }
    throw placement_error("weight index not covered by the map");
  }

  TargetBit invert(const BitLocation& loc) const {
    for (const Chunk& c : chunks) {
      if (c.row == loc.row && loc.byte_offset < c.length) {
        const std::size_t flat = c.flat_start + loc.byte_offset;
        // layer_starts is ascending; find the owning layer
        std::size_t layer = 0;
        while (layer + 1 < layer_starts.size() && flat >= layer_starts[layer + 1])
          ++layer;
        return {static_cast<std::uint32_t>(layer),
                static_cast<std::uint32_t>(flat - layer_starts[layer]), loc.bit};
      }
    }
    throw placement_error("location not covered by the map");
  }
};

// Scatters weight rows across subarrays (seeded) or packs them
// sequentially. Reserved buffer/free rows are never used.
inline WeightMap map_weights_to_rows(const QuantizedModel& model,
                                     const DramConfig& geometry,
                                     const LockController& controller,
                                     PlacementPolicy policy,
                                     std::uint64_t seed,
                                     const std::vector<RowAddress>& exclude = {}) {
  WeightMap map;
  map.row_size = geometry.row_size;
  std::size_t flat = 0;
  for (const Layer& l : model.layers) {
    map.layer_starts.push_back(flat);
    flat += l.weights.size();
  }
  const std::size_t total = flat;
  const std::size_t rows_needed = (total + geometry.row_size - 1) / geometry.row_size;

  std::vector<RowAddress> candidates;
  for (std::uint32_t b = 0; b < geometry.banks; ++b)
    for (std::uint32_t s = 0; s < geometry.subarrays_per_bank; ++s)
      for (std::uint32_t r = 0; r < geometry.rows_per_subarray; ++r) {
        RowAddress a{b, s, r};
        // keep one row of slack on each side for neighbors/locks
        if (r == 0) continue;
        if (controller.is_reserved({b, s, r + 1}) || controller.is_reserved(a))
          continue;
        bool excluded = false;
        for (const RowAddress& x : exclude)
          if (x.same_subarray(a) &&
              (x.row == a.row || x.row + 1 == a.row || a.row + 1 == x.row))
            excluded = true;
        if (excluded) continue;
        candidates.push_back(a);
      }
  if (rows_needed > candidates.size())
    throw placement_error("model does not fit in non-reserved rows");

  std::vector<RowAddress> chosen;
  if (policy == PlacementPolicy::Sequential) {
    chosen.assign(candidates.begin(), candidates.begin() + rows_needed);
  } else {
    Rng rng(seed, /*stream=*/0x5CA7);
    for (std::size_t i = 0; i < rows_needed; ++i) {
      std::size_t j = i + rng.next_below(candidates.size() - i);
      std::swap(candidates[i], candidates[j]);
      chosen.push_back(candidates[i]);
    }
  }
  std::size_t off = 0;
  for (const RowAddress& row : chosen) {
    const std::size_t len = std::min<std::size_t>(geometry.row_size, total - off);
    map.chunks.push_back({off, len, row});
    off += len;
  }
  return map;
}

// Writes the model's weight bytes into their mapped rows.
inline void store_model_to_dram(const QuantizedModel& model,
                                const WeightMap& map, DramState& dram) {
  std::vector<std::uint8_t> flatbytes;
  for (const Layer& l : model.layers)
    for (std::int8_t w : l.weights)
      flatbytes.push_back(static_cast<std::uint8_t>(w));
  for (const WeightMap::Chunk& c : map.chunks) {
    std::vector<std::uint8_t> row(dram.config().row_size, 0);
    std::copy_n(flatbytes.begin() + c.flat_start, c.length, row.begin());
    dram.write_row(c.row, row);
  }
}

// Reads every mapped row back and reconstructs the weights, so DRAM bit
// state (including RowHammer flips) is what inference sees.
inline QuantizedModel sync_model_from_dram(const QuantizedModel& model,
                                           const WeightMap& map,
                                           DramState& dram) {
  std::vector<std::uint8_t> flatbytes(model.total_weight_bytes());
  for (const WeightMap::Chunk& c : map.chunks) {
    const std::vector<std::uint8_t>& row = dram.row_data(c.row);
    std::copy_n(row.begin(), c.length, flatbytes.begin() + c.flat_start);
  }
  QuantizedModel out = model;
  std::size_t off = 0;
  for (Layer& l : out.layers)
    for (std::int8_t& w : l.weights)
      w = static_cast<std::int8_t>(flatbytes[off++]);
  return out;
}

}  // namespace dlocker
