#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "dlocker/rng.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

enum class Activation : std::uint8_t { Relu = 0, Identity = 1 };

struct Layer {
  std::uint32_t out_dim = 0;
  std::uint32_t in_dim = 0;
  double scale = 1.0;
  Activation activation = Activation::Relu;
  std::vector<std::int8_t> weights;  // row-major, out_dim x in_dim
};

// 8-bit quantized MLP; real weight = int8 * per-layer scale.
struct QuantizedModel {
  static constexpr std::uint32_t kMagic = 0x504C4D51;  // "QMLP"

  std::uint32_t input_dim = 0;
  std::uint32_t output_classes = 0;
  std::vector<Layer> layers;

  std::size_t total_weight_bytes() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weights.size();
    return n;
  }

  std::vector<double> forward(const std::vector<double>& x) const {
    std::vector<double> h = x;
    for (const Layer& l : layers) {
      std::vector<double> out(l.out_dim, 0.0);
      for (std::uint32_t j = 0; j < l.out_dim; ++j) {
        const std::int8_t* wrow = &l.weights[std::size_t{j} * l.in_dim];
        double acc = 0.0;
        for (std::uint32_t i = 0; i < l.in_dim; ++i)
          acc += static_cast<double>(wrow[i]) * h[i];
        out[j] = acc * l.scale;
        if (l.activation == Activation::Relu && out[j] < 0.0) out[j] = 0.0;
      }
      h = std::move(out);
    }
    return h;
  }

  std::uint32_t predict(const std::vector<double>& x) const {
    std::vector<double> logits = forward(x);
    return static_cast<std::uint32_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
};

struct Sample {
  std::uint8_t label = 0;
  std::vector<std::uint8_t> pixels;
};

struct Dataset {
  std::vector<Sample> samples;

  std::vector<double> as_input(std::size_t i) const {
    std::vector<double> x(samples[i].pixels.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      x[k] = static_cast<double>(samples[i].pixels[k]);
    return x;
  }
};

inline QuantizedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open model file: " + path);
  auto read_u32 = [&] {
    std::uint8_t b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
      throw format_error("truncated model header");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
           (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
  };
  auto read_f64 = [&] {
    std::uint64_t v = 0;
    std::uint8_t b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
      throw format_error("truncated model header");
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  };
  if (read_u32() != QuantizedModel::kMagic)
    throw format_error("not a QMLP model file: " + path);
  QuantizedModel m;
  const std::uint32_t layer_count = read_u32();
  m.input_dim = read_u32();
  m.output_classes = read_u32();
  if (layer_count == 0) throw format_error("model has no layers");
  std::uint32_t expect_in = m.input_dim;
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    Layer l;
    l.out_dim = read_u32();
    l.in_dim = read_u32();
    l.scale = read_f64();
    std::uint8_t act;
    if (!in.read(reinterpret_cast<char*>(&act), 1))
      throw format_error("truncated layer header");
    if (act > 1) throw format_error("unknown activation code");
    l.activation = static_cast<Activation>(act);
    if (l.in_dim != expect_in) throw format_error("layer dims do not chain");
    if (!(l.scale > 0.0) || !std::isfinite(l.scale))
      throw range_error("layer scale must be positive and finite");
    l.weights.resize(std::size_t{l.out_dim} * l.in_dim);
    if (!in.read(reinterpret_cast<char*>(l.weights.data()), l.weights.size()))
      throw format_error("truncated weight block");
    for (std::int8_t w : l.weights)
      if (w == -128) throw range_error("weight outside int8 symmetric range");
    expect_in = l.out_dim;
    m.layers.push_back(std::move(l));
  }
  if (m.layers.back().out_dim != m.output_classes)
    throw format_error("output layer width does not match class count");
  return m;
}

inline void save_model(const QuantizedModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open output model file: " + path);
  auto write_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  write_u32(QuantizedModel::kMagic);
  write_u32(static_cast<std::uint32_t>(m.layers.size()));
  write_u32(m.input_dim);
  write_u32(m.output_classes);
  for (const Layer& l : m.layers) {
    write_u32(l.out_dim);
    write_u32(l.in_dim);
    std::uint64_t v;
    std::memcpy(&v, &l.scale, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out.write(b, 8);
    char act = static_cast<char>(l.activation);
    out.write(&act, 1);
    out.write(reinterpret_cast<const char*>(l.weights.data()),
              l.weights.size());
  }
}

inline Dataset load_dataset(const std::string& path, std::uint32_t input_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open dataset file: " + path);
  Dataset d;
  std::vector<char> block(1 + input_dim);
  while (in.read(block.data(), block.size())) {
    Sample s;
    s.label = static_cast<std::uint8_t>(block[0]);
    s.pixels.assign(block.begin() + 1, block.end());
    d.samples.push_back(std::move(s));
  }
  if (in.gcount() != 0) throw format_error("dataset file has a partial record");
  if (d.samples.empty()) throw format_error("dataset is empty");
  return d;
}

// Accuracy over a seeded random sample (without replacement) of the set.
inline double evaluate(const QuantizedModel& m, const Dataset& d,
                       std::size_t sample_size, std::uint64_t seed) {
  if (sample_size > d.samples.size())
    throw range_error("sample_size exceeds dataset size");
  std::vector<std::size_t> idx(d.samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, /*stream=*/0xE7A1);
  for (std::size_t i = 0; i < sample_size; ++i) {
    std::size_t j = i + rng.next_below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < sample_size; ++i)
    if (m.predict(d.as_input(idx[i])) == d.samples[idx[i]].label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(sample_size);
}

// Mean cross-entropy on a seeded batch; the bit-ranking probe's objective.
inline double batch_loss(const QuantizedModel& m, const Dataset& d,
                         std::size_t batch, std::uint64_t seed) {
  if (batch > d.samples.size()) batch = d.samples.size();
  std::vector<std::size_t> idx(d.samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, /*stream=*/0xE7A2);
  for (std::size_t i = 0; i < batch; ++i) {
    std::size_t j = i + rng.next_below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<double> logits = m.forward(d.as_input(idx[i]));
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    loss += std::log(z) - (logits[d.samples[idx[i]].label] - mx);
  }
  return loss / static_cast<double>(batch);
}

}  // namespace dlocker
