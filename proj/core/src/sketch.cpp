#include "fedsketch/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "fedsketch/rng.hpp"

namespace fedsketch {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'K', 'F', 'D'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 32;

// Seed-derivation tags for the per-row hash pair.
constexpr std::uint64_t kBucketTag = 0x6275636b6574ull;  // "bucket"
constexpr std::uint64_t kSignTag = 0x7369676eull;        // "sign"

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t offset) {
  return static_cast<std::uint16_t>(in[offset] | (in[offset + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[offset + i];
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[offset + i];
  return v;
}

std::vector<HashSpec> make_rows(const SketchConfig& config) {
  std::vector<HashSpec> rows;
  rows.reserve(config.rows);
  for (std::uint32_t j = 0; j < config.rows; ++j) {
    rows.push_back(HashSpec::for_row(config.seed, j));
  }
  return rows;
}

// Median of the scratch buffer, in place. Even lengths use the midpoint of
// the two middle elements.
double median_inplace(std::vector<double>& values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(values.begin(), mid);
  return lo + (hi - lo) / 2.0;
}

void check_index(const SketchConfig& config, std::uint64_t index) {
  if (index >= config.domain_size) {
    throw DomainError("sketch index " + std::to_string(index) +
                      " out of domain [0, " + std::to_string(config.domain_size) + ")");
  }
}

void check_value(double value) {
  if (!std::isfinite(value)) throw InputError("sketch insert value is not finite");
}

void check_vector_length(const SketchConfig& config, std::size_t got) {
  if (got != config.domain_size) {
    throw DomainError("vector length " + std::to_string(got) +
                      " does not match sketch domain " + std::to_string(config.domain_size));
  }
}

}  // namespace

void SketchConfig::validate() const {
  if (rows == 0) throw ConfigError("sketch rows must be >= 1");
  if (width == 0) throw ConfigError("sketch width must be >= 1");
  if (domain_size == 0) throw ConfigError("sketch domain_size must be >= 1");
}

double compression_ratio(const SketchConfig& config) {
  config.validate();
  return static_cast<double>(config.domain_size) /
         static_cast<double>(config.counter_count());
}

HashSpec HashSpec::for_row(std::uint64_t sketch_seed, std::uint32_t row) {
  return HashSpec{rng::derive(sketch_seed, kBucketTag, row),
                  rng::derive(sketch_seed, kSignTag, row)};
}

std::uint32_t HashSpec::bucket(std::uint64_t index, std::uint32_t width) const {
  const std::uint64_t h = rng::mix64(bucket_seed ^ (index + rng::kGolden));
  return static_cast<std::uint32_t>((h >> 32) % width);
}

double HashSpec::sign(std::uint64_t index) const {
  const std::uint64_t h = rng::mix64(sign_seed ^ (index + rng::kGolden));
  return (std::popcount(h) & 1) ? -1.0 : 1.0;
}

CountSketch::CountSketch(const SketchConfig& config)
    : config_(config), rows_(), counters_() {
  config_.validate();
  rows_ = make_rows(config_);
  counters_.assign(config_.counter_count(), 0.0);
}

void CountSketch::insert(std::uint64_t index, double value) {
  check_index(config_, index);
  check_value(value);
  for (std::uint32_t j = 0; j < config_.rows; ++j) {
    counter(j, rows_[j].bucket(index, config_.width)) += rows_[j].sign(index) * value;
  }
}

void CountSketch::insert(std::span<const double> values) {
  check_vector_length(config_, values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0.0) continue;
    insert(i, values[i]);
  }
}

double CountSketch::query(std::uint64_t index) const {
  check_index(config_, index);
  std::vector<double> estimates(config_.rows);
  for (std::uint32_t j = 0; j < config_.rows; ++j) {
    estimates[j] = rows_[j].sign(index) * counter(j, rows_[j].bucket(index, config_.width));
  }
  return median_inplace(estimates);
}

std::vector<double> CountSketch::query_vector() const {
  std::vector<double> out(config_.domain_size);
  std::vector<double> estimates(config_.rows);
  for (std::uint64_t i = 0; i < config_.domain_size; ++i) {
    for (std::uint32_t j = 0; j < config_.rows; ++j) {
      estimates[j] = rows_[j].sign(i) * counter(j, rows_[j].bucket(i, config_.width));
    }
    out[i] = median_inplace(estimates);
  }
  return out;
}

std::vector<double> CountSketch::top_fraction(double fraction) const {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw InputError("top_fraction requires fraction in (0, 1]");
  }
  std::vector<double> estimates = query_vector();
  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(config_.domain_size)));
  if (keep >= estimates.size()) return estimates;

  std::vector<std::uint64_t> order(estimates.size());
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                   order.end(), [&](std::uint64_t a, std::uint64_t b) {
                     const double fa = std::abs(estimates[a]);
                     const double fb = std::abs(estimates[b]);
                     if (fa != fb) return fa > fb;
                     return a < b;
                   });
  std::vector<double> out(estimates.size(), 0.0);
  for (std::size_t r = 0; r < keep; ++r) out[order[r]] = estimates[order[r]];
  return out;
}

std::size_t CountSketch::payload_bytes() const {
  return kHeaderBytes + sizeof(double) * config_.counter_count();
}

std::vector<std::uint8_t> CountSketch::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(payload_bytes());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u16(out, kVersion);
  put_u16(out, 0);  // reserved
  put_u32(out, config_.rows);
  put_u32(out, config_.width);
  put_u64(out, config_.domain_size);
  put_u64(out, config_.seed);
  for (double c : counters_) put_u64(out, std::bit_cast<std::uint64_t>(c));
  return out;
}

CountSketch CountSketch::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw SerializationError("truncated sketch header at offset " +
                             std::to_string(bytes.size()) + ": need " +
                             std::to_string(kHeaderBytes) + " bytes");
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw SerializationError("bad magic at offset 0: expected \"SKFD\"");
  }
  const std::uint16_t version = get_u16(bytes, 4);
  if (version != kVersion) {
    throw SerializationError("unsupported version " + std::to_string(version) +
                             " at offset 4");
  }
  SketchConfig config;
  config.rows = get_u32(bytes, 8);
  config.width = get_u32(bytes, 12);
  config.domain_size = get_u64(bytes, 16);
  config.seed = get_u64(bytes, 24);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw SerializationError(std::string("invalid geometry at offset 8: ") + e.what());
  }
  CountSketch sketch(config);
  const std::size_t expected = sketch.payload_bytes();
  if (bytes.size() != expected) {
    throw SerializationError("payload length " + std::to_string(bytes.size()) +
                             " does not match expected " + std::to_string(expected) +
                             " at offset " + std::to_string(kHeaderBytes));
  }
  for (std::size_t i = 0; i < sketch.counters_.size(); ++i) {
    sketch.counters_[i] =
        std::bit_cast<double>(get_u64(bytes, kHeaderBytes + 8 * i));
  }
  return sketch;
}

CountSketch merge(const CountSketch& a, const CountSketch& b) {
  if (a.config_ != b.config_) {
    throw IncompatibleSketchError("cannot merge sketches with different config");
  }
  CountSketch out = a;
  for (std::size_t i = 0; i < out.counters_.size(); ++i) {
    out.counters_[i] += b.counters_[i];
  }
  return out;
}

CountSketch scale(const CountSketch& sketch, double factor) {
  if (!std::isfinite(factor)) throw InputError("scale factor is not finite");
  CountSketch out = sketch;
  for (double& c : out.counters_) c *= factor;
  return out;
}

CountMinSketch::CountMinSketch(const SketchConfig& config)
    : config_(config), rows_(), counters_() {
  config_.validate();
  rows_ = make_rows(config_);
  counters_.assign(config_.counter_count(), 0.0);
}

void CountMinSketch::insert(std::uint64_t index, double value) {
  check_index(config_, index);
  check_value(value);
  for (std::uint32_t j = 0; j < config_.rows; ++j) {
    counters_[static_cast<std::size_t>(j) * config_.width +
              rows_[j].bucket(index, config_.width)] += value;
  }
}

void CountMinSketch::insert(std::span<const double> values) {
  check_vector_length(config_, values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0.0) continue;
    insert(i, values[i]);
  }
}

double CountMinSketch::query(std::uint64_t index) const {
  check_index(config_, index);
  double best = counters_[rows_[0].bucket(index, config_.width)];
  for (std::uint32_t j = 1; j < config_.rows; ++j) {
    best = std::min(best, counters_[static_cast<std::size_t>(j) * config_.width +
                                    rows_[j].bucket(index, config_.width)]);
  }
  return best;
}

std::vector<double> CountMinSketch::query_vector() const {
  std::vector<double> out(config_.domain_size);
  for (std::uint64_t i = 0; i < config_.domain_size; ++i) out[i] = query(i);
  return out;
}

}  // namespace fedsketch
