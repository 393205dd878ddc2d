#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autohas/rng.hpp"
#include "autohas/tensor.hpp"
#include "autohas/trainstep.hpp"

namespace autohas {

struct Dataset {
  Tensor features;  // (N x d)
  Tensor labels;    // (N x classes), one-hot
  std::string name;
  std::vector<std::string> class_names;

  std::size_t size() const { return features.rows(); }
  std::size_t width() const { return features.cols(); }
  std::size_t classes() const { return labels.cols(); }
  // Throws ValidationError unless row counts match and labels are one-hot.
  void validate() const;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // population standard deviation, 1 if constant
};

// Rescales every feature column to zero mean and unit variance in place.
Standardization standardize(Dataset& data);

// Two interleaving half circles, n/2 points each, with Gaussian noise;
// features standardized. Requires n >= 2 and even.
Dataset two_moons(std::size_t n, double noise_sd, std::uint64_t seed);
Dataset two_moons_raw(std::size_t n, double noise_sd, std::uint64_t seed);
// Two interleaved Archimedean spirals making `turns` revolutions.
Dataset spirals(std::size_t n, double turns, double noise_sd, std::uint64_t seed);

// Header row names the columns; the column called "label" (or the last
// column when none is called that) holds class symbols, encoded one-hot in
// order of first appearance.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text, const std::string& name = "csv");

struct DataSplit {
  Dataset train;
  Dataset val;
  Dataset test;
  // Source row of every example, per part.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  std::vector<std::size_t> test_rows;
};

// Seeded shuffle, then consecutive train/val/test blocks. The first two
// sizes are round(n * fraction); test takes the remainder.
DataSplit split(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed);

Dataset subset(const Dataset& data, std::span<const std::size_t> rows);
Dataset concat(const Dataset& a, const Dataset& b);

Batch as_batch(const Dataset& data);
// `size` distinct rows drawn without replacement; the whole set in its
// stored order when size >= data.size().
Batch sample_batch(const Dataset& data, std::size_t size, RngStream& rng);

}  // namespace autohas
