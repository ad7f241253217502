#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dlocker/rng.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

struct Timing {
  ns_t t_act_pre = 45;  // ACT + PRE pair
  ns_t t_rd = 15;
  ns_t t_wr = 15;
  ns_t t_rowclone = 90;  // per in-subarray row copy, stays under 100ns
};

struct DramConfig {
  std::uint32_t banks = 2;
  std::uint32_t subarrays_per_bank = 16;
  std::uint32_t rows_per_subarray = 128;
  std::uint32_t row_size = 8192;  // bytes
  std::uint64_t t_rh = 10000;    // activations per refresh window
  ns_t t_ref = 64'000'000;       // 64ms refresh window
  Timing timing;
  double copy_error_rate = 0.0;
  bool repeat_flips = false;  // re-apply flip_mask at every t_rh multiple

  void validate() const {
    if (t_rh == 0) throw config_error("t_rh must be > 0");
    if (t_ref == 0) throw config_error("t_ref must be > 0");
    if (timing.t_act_pre == 0 || timing.t_rd == 0 || timing.t_wr == 0 ||
        timing.t_rowclone == 0)
      throw config_error("all timing values must be > 0");
    if (copy_error_rate < 0.0 || copy_error_rate > 1.0)
      throw config_error("copy_error_rate must lie in [0,1]");
    if (row_size == 0) throw config_error("row_size must be positive");
    if (banks == 0 || subarrays_per_bank == 0 || rows_per_subarray == 0)
      throw config_error("geometry counts must be positive");
  }

  std::uint64_t total_rows() const {
    return std::uint64_t{banks} * subarrays_per_bank * rows_per_subarray;
  }
};

// RowHammer threshold presets (activations per refresh window).
inline std::uint64_t trh_preset(const std::string& name) {
  if (name == "ddr3-old") return 139000;
  if (name == "ddr3-new") return 22400;
  if (name == "ddr4-old") return 17500;
  if (name == "ddr4-new") return 10000;
  if (name == "lpddr4-old") return 16800;
  if (name == "lpddr4-new") return 4800;  // low end of the 4.8K-9K range
  throw config_error("unknown t_rh preset: " + name);
}

// SWAP error-rate presets for 0% / ±10% / ±20% process variation.
inline double copy_error_preset(const std::string& name) {
  if (name == "var0") return 0.0;
  if (name == "var10") return 0.0014;
  if (name == "var20") return 0.096;
  throw config_error("unknown copy_error preset: " + name);
}

struct RowState {
  std::vector<std::uint8_t> data;
  std::uint64_t activations_in_window = 0;
  ns_t window_start = 0;
  bool flip_applied_in_window = false;  // victim-side marker
  std::vector<std::uint32_t> flip_mask;  // bit positions, < row_size*8
};

struct ActivationOutcome {
  std::vector<std::pair<RowAddress, std::vector<std::uint32_t>>> flips_applied;
  ns_t latency = 0;
};

struct AccessResult {
  std::optional<std::vector<std::uint8_t>> data;
  ns_t latency = 0;
  ActivationOutcome implicit_activate;  // flips from an implied ACT
};

struct CopyResult {
  bool success = false;
  ns_t latency = 0;
};

enum class AccessOp { Read, Write };

// Row-granular DRAM state machine: activation counting per refresh window,
// deterministic flip injection at t_rh, and RowClone copies with an
// injectable failure rate. Rows materialize lazily (zero-filled).
class DramState {
 public:
  explicit DramState(DramConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    open_row_.assign(cfg_.banks, std::nullopt);
  }

  const DramConfig& config() const { return cfg_; }

  void check_bounds(const RowAddress& a) const {
    if (a.bank >= cfg_.banks || a.subarray >= cfg_.subarrays_per_bank ||
        a.row >= cfg_.rows_per_subarray)
      throw address_error("row address out of bounds: " + a.str());
  }

  ActivationOutcome activate(const RowAddress& row, ns_t now) {
    check_bounds(row);
    ActivationOutcome out;
    out.latency = cfg_.timing.t_act_pre;
    RowState& rs = materialize(row);
    rs.activations_in_window += 1;
    open_row_[row.bank] = row;
    if (rs.activations_in_window % cfg_.t_rh == 0) {
      for (const RowAddress& victim : neighbors(row)) {
        RowState& vs = materialize(victim);
        if (vs.flip_mask.empty()) continue;
        if (vs.flip_applied_in_window && !cfg_.repeat_flips) continue;
        apply_mask(vs);
        vs.flip_applied_in_window = true;
        out.flips_applied.emplace_back(victim, vs.flip_mask);
      }
    }
    (void)now;
    return out;
  }

  AccessResult access(const RowAddress& row, AccessOp op,
                      const std::vector<std::uint8_t>* payload, ns_t now) {
    check_bounds(row);
    AccessResult res;
    if (open_row_[row.bank] != row) {
      res.implicit_activate = activate(row, now);
      res.latency += res.implicit_activate.latency;
    }
    RowState& rs = materialize(row);
    if (op == AccessOp::Read) {
      res.data = rs.data;
      res.latency += cfg_.timing.t_rd;
    } else {
      if (!payload || payload->size() != cfg_.row_size)
        throw size_error("write payload length must equal row_size");
      rs.data = *payload;
      res.latency += cfg_.timing.t_wr;
    }
    return res;
  }

  CopyResult row_clone(const RowAddress& src, const RowAddress& dst,
                       Rng& rng) {
    check_bounds(src);
    check_bounds(dst);
    if (!src.same_subarray(dst))
      throw subarray_mismatch("row_clone source and destination must share a subarray");
    if (src == dst) throw degenerate_copy("row_clone src == dst");
    CopyResult res;
    res.latency = cfg_.timing.t_rowclone;
    res.success = !rng.bernoulli(cfg_.copy_error_rate);
    if (res.success) {
      const RowState& s = materialize(src);
      materialize(dst).data = s.data;
    }
    return res;
  }

  // Resets the window of every row whose window began >= t_ref ago.
  std::size_t refresh_tick(ns_t now) {
    std::size_t reset = 0;
    for (auto& [key, rs] : rows_) {
      if (now >= rs.window_start + cfg_.t_ref &&
          (rs.activations_in_window > 0 || rs.flip_applied_in_window)) {
        rs.activations_in_window = 0;
        rs.flip_applied_in_window = false;
        rs.window_start = now;
        ++reset;
      } else if (now >= rs.window_start + cfg_.t_ref) {
        rs.window_start = now;
      }
    }
    return reset;
  }

  const std::vector<std::uint8_t>& row_data(const RowAddress& a) {
    check_bounds(a);
    return materialize(a).data;
  }

  void write_row(const RowAddress& a, const std::vector<std::uint8_t>& bytes) {
    check_bounds(a);
    if (bytes.size() != cfg_.row_size)
      throw size_error("row image length must equal row_size");
    materialize(a).data = bytes;
  }

  std::uint64_t activation_count(const RowAddress& a) const {
    auto it = rows_.find(flat_key(a));
    return it == rows_.end() ? 0 : it->second.activations_in_window;
  }

  void set_flip_mask(const RowAddress& a, std::vector<std::uint32_t> bits) {
    check_bounds(a);
    for (std::uint32_t b : bits)
      if (b >= std::uint64_t{cfg_.row_size} * 8)
        throw address_error("flip_mask bit position out of row");
    RowState& rs = materialize(a);
    rs.flip_mask = std::move(bits);
    // A fresh mask is a fresh disturbance pattern; the once-per-window
    // marker only guards against the same mask XOR-cancelling itself.
    rs.flip_applied_in_window = false;
  }

  void clear_flip_mask(const RowAddress& a) { materialize(a).flip_mask.clear(); }

  std::vector<RowAddress> neighbors(const RowAddress& a) const {
    std::vector<RowAddress> out;
    if (a.row > 0) out.push_back({a.bank, a.subarray, a.row - 1});
    if (a.row + 1 < cfg_.rows_per_subarray)
      out.push_back({a.bank, a.subarray, a.row + 1});
    return out;
  }

  // Bulk initialization from a raw row-major byte image, starting at `at`.
  void load_image(const RowAddress& at, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open image file: " + path);
    std::vector<std::uint8_t> buf(cfg_.row_size);
    RowAddress cur = at;
    while (in.read(reinterpret_cast<char*>(buf.data()), buf.size()) ||
           in.gcount() > 0) {
      std::fill(buf.begin() + in.gcount(), buf.end(), 0);
      write_row(cur, buf);
      if (in.gcount() < static_cast<std::streamsize>(buf.size())) break;
      cur.row += 1;
      if (cur.row >= cfg_.rows_per_subarray)
        throw address_error("image spills past the subarray");
    }
  }

 private:
  RowState& materialize(const RowAddress& a) {
    RowState& rs = rows_[flat_key(a)];
    if (rs.data.empty()) rs.data.assign(cfg_.row_size, 0);
    return rs;
  }

  void apply_mask(RowState& rs) {
    for (std::uint32_t bit : rs.flip_mask)
      rs.data[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  }

  DramConfig cfg_;
  std::unordered_map<std::uint64_t, RowState> rows_;
  std::vector<std::optional<RowAddress>> open_row_;  // one open row per bank
};

}  // namespace dlocker
