#include <fstream>

#include "doctest.h"

#include "dlocker/model.hpp"
#include "dlocker/page_table.hpp"
#include "dlocker/victim_runtime.hpp"
#include "dlocker/weight_map.hpp"

using namespace dlocker;

namespace {

const char* kModelPath = "fixtures/mlp_digits.qmodel";
const char* kDatasetPath = "fixtures/digits_test.bin";

DramConfig desk_geometry() {
  DramConfig c;
  c.banks = 2;
  c.subarrays_per_bank = 16;
  c.rows_per_subarray = 128;
  c.row_size = 8192;
  return c;
}

QuantizedModel tiny_model() {
  QuantizedModel m;
  m.input_dim = 2;
  m.output_classes = 2;
  Layer l;
  l.out_dim = 2;
  l.in_dim = 2;
  l.scale = 0.5;
  l.activation = Activation::Identity;
  l.weights = {10, -3, 2, 7};
  m.layers.push_back(l);
  return m;
}

}  // namespace

TEST_CASE("bundled fixture loads and clears 0.90 accuracy") {
  QuantizedModel m = load_model(kModelPath);
  CHECK(m.input_dim == 64);
  CHECK(m.output_classes == 10);
  REQUIRE(m.layers.size() == 3);
  CHECK(m.layers[0].out_dim == 32);
  CHECK(m.layers[1].out_dim == 16);
  CHECK(m.layers[2].out_dim == 10);
  Dataset d = load_dataset(kDatasetPath, m.input_dim);
  const double acc = evaluate(m, d, 128, 1);
  CHECK(acc >= 0.90);
}

TEST_CASE("model format errors") {
  CHECK_THROWS_AS(load_model("fixtures/digits_test.bin"), format_error);
  CHECK_THROWS_AS(load_model("no/such/file"), format_error);
  // truncate a copy mid-weights
  {
    std::ifstream in(kModelPath, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    std::ofstream out("build/truncated.qmodel", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_model("build/truncated.qmodel"), format_error);
}

TEST_CASE("model with zero layers is rejected") {
  QuantizedModel m;
  m.input_dim = 4;
  m.output_classes = 2;
  save_model(m, "build/empty.qmodel");
  CHECK_THROWS_AS(load_model("build/empty.qmodel"), format_error);
}

TEST_CASE("out-of-range weight byte is a range error") {
  QuantizedModel m = tiny_model();
  m.layers[0].weights[1] = -128;  // outside the symmetric int8 range
  save_model(m, "build/oor.qmodel");
  CHECK_THROWS_AS(load_model("build/oor.qmodel"), dlocker::range_error);
}

TEST_CASE("save/load round-trips the model bit-for-bit") {
  QuantizedModel m = load_model(kModelPath);
  save_model(m, "build/roundtrip.qmodel");
  QuantizedModel m2 = load_model("build/roundtrip.qmodel");
  REQUIRE(m2.layers.size() == m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CHECK(m2.layers[i].weights == m.layers[i].weights);
    CHECK(m2.layers[i].scale == m.layers[i].scale);
  }
}

TEST_CASE("evaluate is deterministic per seed and uses the 128 default") {
  QuantizedModel m = load_model(kModelPath);
  Dataset d = load_dataset(kDatasetPath, m.input_dim);
  CHECK(evaluate(m, d, 128, 9) == evaluate(m, d, 128, 9));
  CHECK_THROWS_AS(evaluate(m, d, d.samples.size() + 1, 1), dlocker::range_error);
}

TEST_CASE("all-zero model scores in the chance band") {
  QuantizedModel m = load_model(kModelPath);
  for (Layer& l : m.layers) std::fill(l.weights.begin(), l.weights.end(), 0);
  Dataset d = load_dataset(kDatasetPath, m.input_dim);
  const double acc = evaluate(m, d, 128, 1);
  CHECK(acc >= 0.0);
  CHECK(acc <= 0.2);
}

TEST_CASE("fixture fits one 8KB row and the map inverts everywhere") {
  QuantizedModel m = load_model(kModelPath);
  CHECK(m.total_weight_bytes() < 4096);
  DramConfig g = desk_geometry();
  DramState dram(g);
  LockController probe(dram, LockTable{}, {PolicyKind::None, 0}, {}, 1);
  WeightMap map =
      map_weights_to_rows(m, g, probe, PlacementPolicy::Scatter, 1);
  CHECK(map.chunks.size() == 1);
  for (std::uint32_t li = 0; li < m.layers.size(); ++li) {
    const auto n = static_cast<std::uint32_t>(m.layers[li].weights.size());
    for (std::uint32_t wi = 0; wi < n; wi += 97) {
      TargetBit t{li, wi, 7};
      CHECK(map.invert(map.locate(t)) == t);
    }
  }
  // the documented example bit inverts exactly
  TargetBit t0{0, 0, 7};
  CHECK(map.invert(map.locate(t0)) == t0);
}

TEST_CASE("weight map bijection across placement seeds") {
  QuantizedModel m = load_model(kModelPath);
  DramConfig g = desk_geometry();
  g.row_size = 512;  // forces a multi-row scatter
  DramState dram(g);
  LockController probe(dram, LockTable{}, {PolicyKind::None, 0}, {}, 1);
  for (std::uint64_t seed : {1ULL, 2ULL, 17ULL, 99ULL}) {
    WeightMap map =
        map_weights_to_rows(m, g, probe, PlacementPolicy::Scatter, seed);
    CHECK(map.chunks.size() == 6);  // 2720 bytes over 512B rows
    for (std::uint32_t li = 0; li < m.layers.size(); ++li) {
      const auto n = static_cast<std::uint32_t>(m.layers[li].weights.size());
      for (std::uint32_t wi = 0; wi < n; wi += 13)
        for (std::uint8_t b : {0, 7}) {
          TargetBit t{li, wi, b};
          CHECK(map.invert(map.locate(t)) == t);
        }
    }
  }
}

TEST_CASE("scatter leaves at least one subarray empty at the default seed") {
  QuantizedModel m = load_model(kModelPath);
  DramConfig g = desk_geometry();
  g.row_size = 256;  // 11 rows over 32 subarrays
  DramState dram(g);
  LockController probe(dram, LockTable{}, {PolicyKind::None, 0}, {}, 1);
  WeightMap map = map_weights_to_rows(m, g, probe, PlacementPolicy::Scatter, 1);
  std::set<std::pair<std::uint32_t, std::uint32_t>> used;
  for (const auto& c : map.chunks) used.insert({c.row.bank, c.row.subarray});
  CHECK(used.size() < g.banks * g.subarrays_per_bank);
}

TEST_CASE("placement fails when the model cannot fit") {
  QuantizedModel m = load_model(kModelPath);
  DramConfig g;
  g.banks = 1;
  g.subarrays_per_bank = 1;
  g.rows_per_subarray = 8;
  g.row_size = 64;
  DramState dram(g);
  LockController probe(dram, LockTable{}, {PolicyKind::None, 0}, {}, 1);
  CHECK_THROWS_AS(
      map_weights_to_rows(m, g, probe, PlacementPolicy::Scatter, 1),
      placement_error);
}

TEST_CASE("sync_model_from_dram reflects DRAM bit state") {
  QuantizedModel m = load_model(kModelPath);
  DramConfig g = desk_geometry();
  DramState dram(g);
  LockController probe(dram, LockTable{}, {PolicyKind::None, 0}, {}, 1);
  WeightMap map = map_weights_to_rows(m, g, probe, PlacementPolicy::Scatter, 1);
  store_model_to_dram(m, map, dram);

  SUBCASE("no flips: identical weights") {
    QuantizedModel synced = sync_model_from_dram(m, map, dram);
    for (std::size_t i = 0; i < m.layers.size(); ++i)
      CHECK(synced.layers[i].weights == m.layers[i].weights);
  }
  SUBCASE("one MSB flip moves exactly one weight by 128 steps") {
    TargetBit t{0, 5, 7};
    BitLocation loc = map.locate(t);
    std::vector<std::uint8_t> row = dram.row_data(loc.row);
    row[loc.byte_offset] ^= 0x80;
    dram.write_row(loc.row, row);
    QuantizedModel synced = sync_model_from_dram(m, map, dram);
    int changed = 0;
    for (std::size_t li = 0; li < m.layers.size(); ++li)
      for (std::size_t wi = 0; wi < m.layers[li].weights.size(); ++wi)
        if (synced.layers[li].weights[wi] != m.layers[li].weights[wi]) {
          ++changed;
          const int delta = int(synced.layers[li].weights[wi]) -
                            int(m.layers[li].weights[wi]);
          CHECK(std::abs(delta) == 128);
        }
    CHECK(changed == 1);
    // flip back restores the original bit-for-bit
    row[loc.byte_offset] ^= 0x80;
    dram.write_row(loc.row, row);
    QuantizedModel restored = sync_model_from_dram(m, map, dram);
    for (std::size_t i = 0; i < m.layers.size(); ++i)
      CHECK(restored.layers[i].weights == m.layers[i].weights);
  }
}

TEST_CASE("pte pack/unpack round-trips and expresses adjacent-frame flips") {
  Pte p;
  p.valid = true;
  p.frame = {1, 3, 200};
  CHECK(Pte::unpack(p.pack()).frame == p.frame);
  CHECK(Pte::unpack(p.pack()).valid);
  // flipping the lowest frame bit points at the adjacent row
  Pte q = Pte::unpack(p.pack() ^ (1u << Pte::kFrameShift));
  CHECK(q.frame == RowAddress{1, 3, 201});
}

TEST_CASE("page table translate follows the authoritative DRAM bytes") {
  DramConfig g = desk_geometry();
  DramState dram(g);
  PageTable pt({{0, 0, 1}}, g.row_size);
  Pte p;
  p.valid = true;
  p.frame = {0, 4, 6};
  pt.set_entry(dram, 7, p);

  CHECK(pt.translate(dram, 7) == RowAddress{0, 4, 6});
  CHECK_THROWS_AS(pt.translate(dram, 8), page_fault);

  SUBCASE("frame-bit flip in DRAM redirects translation") {
    auto [row, bitpos] = pt.bit_position(7, Pte::kFrameShift);
    std::vector<std::uint8_t> bytes = dram.row_data(row);
    bytes[bitpos / 8] ^= static_cast<std::uint8_t>(1u << (bitpos % 8));
    dram.write_row(row, bytes);
    CHECK(pt.translate(dram, 7) == RowAddress{0, 4, 7});
  }
  SUBCASE("valid-bit flip faults on the next translate") {
    auto [row, bitpos] = pt.bit_position(7, 0);
    std::vector<std::uint8_t> bytes = dram.row_data(row);
    bytes[bitpos / 8] ^= static_cast<std::uint8_t>(1u << (bitpos % 8));
    dram.write_row(row, bytes);
    CHECK_THROWS_AS(pt.translate(dram, 7), page_fault);
  }
}

TEST_CASE("pte bit index outside the encoding is rejected") {
  PageTable pt({{0, 0, 1}}, 8192);
  CHECK_THROWS_AS(pt.bit_position(0, 32), encoding_error);
}
