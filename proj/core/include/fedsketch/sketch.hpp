#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsketch/errors.hpp"

namespace fedsketch {

/// Geometry and seeding of a sketch: `rows` independent counter arrays of
/// `width` counters each, over a domain of `domain_size` coordinates.
///
/// `rows` should be odd so the median estimate is a single element; even
/// values are accepted and use the mean of the two middle elements.
struct SketchConfig {
  std::uint32_t rows = 5;
  std::uint32_t width = 0;
  std::uint64_t seed = 0;
  std::uint64_t domain_size = 0;

  /// Throws ConfigError on degenerate geometry.
  void validate() const;

  std::size_t counter_count() const {
    return static_cast<std::size_t>(rows) * width;
  }

  friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

/// Dense-update size over sketch size: domain_size / (rows * width).
double compression_ratio(const SketchConfig& config);

/// One row's hash pair. Bucket position and +/-1 sign are deterministic
/// functions of (sketch seed, row index, item index); the two use
/// independently derived seeds.
struct HashSpec {
  std::uint64_t bucket_seed = 0;
  std::uint64_t sign_seed = 0;

  static HashSpec for_row(std::uint64_t sketch_seed, std::uint32_t row);

  std::uint32_t bucket(std::uint64_t index, std::uint32_t width) const;
  double sign(std::uint64_t index) const;  // -1.0 or +1.0
};

/// Count Sketch over real-valued coordinates: linear, mergeable, with an
/// unbiased median point estimate. A sketch is single-writer; concurrent
/// reads are safe once writes cease.
class CountSketch {
 public:
  explicit CountSketch(const SketchConfig& config);

  const SketchConfig& config() const { return config_; }
  std::span<const double> counters() const { return counters_; }

  /// Adds `value` at `index`: counters[j][h_j(index)] += s_j(index) * value.
  void insert(std::uint64_t index, double value);

  /// Sketches a full dense vector (length must equal domain_size).
  /// Zero entries are skipped; the result is identical either way.
  void insert(std::span<const double> values);

  /// Median over rows of the sign-corrected counters for `index`.
  double query(std::uint64_t index) const;

  /// query(i) for every coordinate of the domain.
  std::vector<double> query_vector() const;

  /// Keeps the ceil(fraction * domain_size) coordinates of largest absolute
  /// estimate and zeroes the rest. Ties break toward the lower index.
  std::vector<double> top_fraction(double fraction) const;

  /// Serialized size in bytes: 32-byte header + 8 per counter.
  std::size_t payload_bytes() const;

  /// Little-endian layout: magic "SKFD", version u16, reserved u16,
  /// rows u32, width u32, domain_size u64, seed u64, then row-major
  /// counters as 64-bit floats.
  std::vector<std::uint8_t> serialize() const;
  static CountSketch deserialize(std::span<const std::uint8_t> bytes);

 private:
  double& counter(std::uint32_t row, std::uint32_t col) {
    return counters_[static_cast<std::size_t>(row) * config_.width + col];
  }
  double counter(std::uint32_t row, std::uint32_t col) const {
    return counters_[static_cast<std::size_t>(row) * config_.width + col];
  }

  SketchConfig config_;
  std::vector<HashSpec> rows_;
  std::vector<double> counters_;

  friend CountSketch merge(const CountSketch&, const CountSketch&);
  friend CountSketch scale(const CountSketch&, double factor);
};

/// Counter-wise sum of two sketches with identical config (geometry and
/// seed). Throws IncompatibleSketchError otherwise.
CountSketch merge(const CountSketch& a, const CountSketch& b);

/// Every counter multiplied by `factor`; query results scale accordingly.
CountSketch scale(const CountSketch& sketch, double factor);

/// Count-Min variant: no signs, point query is the row minimum. With
/// non-negative inserts every estimate dominates the true value.
class CountMinSketch {
 public:
  explicit CountMinSketch(const SketchConfig& config);

  const SketchConfig& config() const { return config_; }
  std::span<const double> counters() const { return counters_; }

  void insert(std::uint64_t index, double value);
  void insert(std::span<const double> values);
  double query(std::uint64_t index) const;
  std::vector<double> query_vector() const;

 private:
  SketchConfig config_;
  std::vector<HashSpec> rows_;
  std::vector<double> counters_;
};

}  // namespace fedsketch
