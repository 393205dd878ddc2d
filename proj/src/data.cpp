#include "autohas/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "autohas/error.hpp"

namespace autohas {

namespace {

Dataset from_rows(std::vector<double> features, std::size_t width, const std::vector<std::size_t>& labels,
                  std::size_t classes, std::string name, std::vector<std::string> class_names) {
  const std::size_t n = labels.size();
  std::vector<double> onehot(n * classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) onehot[i * classes + labels[i]] = 1.0;
  return Dataset{Tensor({n, width}, std::move(features)), Tensor({n, classes}, std::move(onehot)), std::move(name),
                 std::move(class_names)};
}

void check_generator_size(std::size_t n) {
  if (n < 2 || n % 2 != 0) throw ValidationError("generator needs an even n >= 2, got " + std::to_string(n));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void Dataset::validate() const {
  if (features.rank() != 2 || labels.rank() != 2) throw ValidationError("dataset tensors must be matrices");
  if (features.rows() != labels.rows()) throw ValidationError("dataset feature and label row counts differ");
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < labels.cols(); ++c) {
      const double v = labels.at(r, c);
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw ValidationError("dataset label row " + std::to_string(r) + " is not one-hot");
    }
    if (ones != 1) throw ValidationError("dataset label row " + std::to_string(r) + " is not one-hot");
  }
}

Standardization standardize(Dataset& data) {
  const std::size_t n = data.size(), d = data.width();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  auto x = data.features.mutable_values();
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x[r * d + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x[r * d + c] - mean) * (x[r * d + c] - mean);
    var /= static_cast<double>(n);
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
    for (std::size_t r = 0; r < n; ++r) x[r * d + c] = (x[r * d + c] - mean) / scale;
    s.mean[c] = mean;
    s.scale[c] = scale;
  }
  return s;
}

Dataset two_moons_raw(std::size_t n, double noise_sd, std::uint64_t seed) {
  check_generator_size(n);
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be >= 0");
  const std::size_t half = n / 2;
  RngStream rng(seed, "two_moons");
  std::vector<double> x;
  std::vector<std::size_t> y;
  x.reserve(2 * n);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < half; ++i) {
      const double t = half == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1);
      double px = k == 0 ? std::cos(t) : 1.0 - std::cos(t);
      double py = k == 0 ? std::sin(t) : 0.5 - std::sin(t);
      if (noise_sd > 0.0) {
        px += noise_sd * rng.normal();
        py += noise_sd * rng.normal();
      }
      x.push_back(px);
      x.push_back(py);
      y.push_back(k);
    }
  }
  return from_rows(std::move(x), 2, y, 2, "two_moons", {"0", "1"});
}

Dataset two_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
  Dataset d = two_moons_raw(n, noise_sd, seed);
  standardize(d);
  return d;
}

Dataset spirals(std::size_t n, double turns, double noise_sd, std::uint64_t seed) {
  check_generator_size(n);
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be >= 0");
  if (!(turns > 0.0) || !std::isfinite(turns)) throw ValidationError("turns must be positive");
  const std::size_t half = n / 2;
  RngStream rng(seed, "spirals");
  std::vector<double> x;
  std::vector<std::size_t> y;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < half; ++i) {
      const double t = static_cast<double>(i + 1) / static_cast<double>(half);
      const double angle = 2.0 * std::numbers::pi * turns * t + std::numbers::pi * static_cast<double>(k);
      double px = t * std::cos(angle), py = t * std::sin(angle);
      if (noise_sd > 0.0) {
        px += noise_sd * rng.normal();
        py += noise_sd * rng.normal();
      }
      x.push_back(px);
      x.push_back(py);
      y.push_back(k);
    }
  }
  Dataset d = from_rows(std::move(x), 2, y, 2, "spirals", {"0", "1"});
  standardize(d);
  return d;
}

Dataset parse_csv(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) throw ValidationError("CSV '" + name + "' is empty");
  if (header.size() < 2) throw ValidationError("CSV '" + name + "' needs at least one feature and a label column");

  std::size_t label_col = header.size() - 1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "label") label_col = c;

  std::vector<double> features;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;
  std::map<std::string, std::size_t> class_index;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    const std::string where = "CSV '" + name + "' row " + std::to_string(row);
    if (cells.size() != header.size())
      throw ValidationError(where + " has " + std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string col = "column '" + header[c] + "'";
      if (cells[c].empty()) throw ValidationError(where + " " + col + ": missing value");
      if (c == label_col) {
        auto [it, inserted] = class_index.emplace(cells[c], class_names.size());
        if (inserted) class_names.push_back(cells[c]);
        labels.push_back(it->second);
        continue;
      }
      double v = 0.0;
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw ValidationError(where + " " + col + ": not a number '" + cells[c] + "'");
      features.push_back(v);
    }
  }
  if (row == 0) throw ValidationError("CSV '" + name + "' has no data rows");
  const std::size_t classes = class_names.size();
  return from_rows(std::move(features), header.size() - 1, labels, classes, name, std::move(class_names));
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CSV file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.filename().string());
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ValidationError("empty dataset subset");
  const std::size_t d = data.width(), c = data.classes();
  std::vector<double> x, y;
  x.reserve(rows.size() * d);
  y.reserve(rows.size() * c);
  for (std::size_t r : rows) {
    if (r >= data.size()) throw ValidationError("subset row out of range");
    for (std::size_t j = 0; j < d; ++j) x.push_back(data.features.at(r, j));
    for (std::size_t j = 0; j < c; ++j) y.push_back(data.labels.at(r, j));
  }
  return Dataset{Tensor({rows.size(), d}, std::move(x)), Tensor({rows.size(), c}, std::move(y)), data.name,
                 data.class_names};
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.width() != b.width() || a.classes() != b.classes()) throw ValidationError("cannot concatenate datasets");
  std::vector<double> x(a.features.data()), y(a.labels.data());
  x.insert(x.end(), b.features.data().begin(), b.features.data().end());
  y.insert(y.end(), b.labels.data().begin(), b.labels.data().end());
  const std::size_t n = a.size() + b.size();
  return Dataset{Tensor({n, a.width()}, std::move(x)), Tensor({n, a.classes()}, std::move(y)), a.name, a.class_names};
}

DataSplit split(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");

  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[0]));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[1]));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw ValidationError("split leaves an empty part for " + std::to_string(n) + " rows");

  RngStream rng(seed, "split");
  const std::vector<std::size_t> perm = rng.permutation(n);
  DataSplit s;
  s.train_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                    perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  s.train = subset(data, s.train_rows);
  s.val = subset(data, s.val_rows);
  s.test = subset(data, s.test_rows);
  return s;
}

Batch as_batch(const Dataset& data) { return Batch{data.features, data.labels}; }

Batch sample_batch(const Dataset& data, std::size_t size, RngStream& rng) {
  if (size == 0) throw ValidationError("batch size must be positive");
  if (size >= data.size()) return as_batch(data);
  // Partial Fisher-Yates.
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < size; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(size);
  return as_batch(subset(data, idx));
}

}  // namespace autohas
