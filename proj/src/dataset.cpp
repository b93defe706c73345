#include "qnewton/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "qnewton/error.hpp"

namespace qnewton {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& what) {
  if (buf.size() < offset + 4) throw TruncatedFile(what + ": header is truncated");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

// Length of [lo, hi) intersected with [a, b).
double overlap(double lo, double hi, double a, double b) { return std::max(0.0, std::min(hi, b) - std::max(lo, a)); }

}  // namespace

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch b;
  b.in_dim = in_dim;
  b.inputs.reserve(indices.size() * in_dim);
  b.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    const auto first = inputs.begin() + static_cast<std::ptrdiff_t>(idx * in_dim);
    b.inputs.insert(b.inputs.end(), first, first + static_cast<std::ptrdiff_t>(in_dim));
    b.labels.push_back(labels[idx]);
  }
  return b;
}

std::vector<double> downsample_image(std::span<const double> image, std::size_t rows, std::size_t cols,
                                     std::size_t side) {
  if (side == 0 || image.size() != rows * cols) throw InvalidArgument("downsample_image: bad dimensions");
  const double fr = static_cast<double>(rows) / static_cast<double>(side);
  const double fc = static_cast<double>(cols) / static_cast<double>(side);
  std::vector<double> out(side * side, 0.0);
  for (std::size_t r = 0; r < side; ++r) {
    const double r0 = static_cast<double>(r) * fr, r1 = r0 + fr;
    for (std::size_t c = 0; c < side; ++c) {
      const double c0 = static_cast<double>(c) * fc, c1 = c0 + fc;
      double acc = 0.0;
      for (std::size_t i = static_cast<std::size_t>(r0); i < rows && static_cast<double>(i) < r1; ++i) {
        const double wr = overlap(static_cast<double>(i), static_cast<double>(i) + 1.0, r0, r1);
        for (std::size_t j = static_cast<std::size_t>(c0); j < cols && static_cast<double>(j) < c1; ++j) {
          acc += wr * overlap(static_cast<double>(j), static_cast<double>(j) + 1.0, c0, c1) * image[i * cols + j];
        }
      }
      out[r * side + c] = acc / (fr * fc);
    }
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t downsample_side) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  if (read_be32(img, 0, "image file") != kIdxImageMagic) throw BadMagic("image file: expected magic 0x00000803");
  if (read_be32(lab, 0, "label file") != kIdxLabelMagic) throw BadMagic("label file: expected magic 0x00000801");
  const std::size_t count = read_be32(img, 4, "image file");
  const std::size_t rows = read_be32(img, 8, "image file");
  const std::size_t cols = read_be32(img, 12, "image file");
  const std::size_t label_count = read_be32(lab, 4, "label file");
  if (count != label_count) throw DimensionMismatch("IDX: image and label counts differ");
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw TruncatedFile("image file: pixel data is truncated");
  if (lab.size() < 8 + count) throw TruncatedFile("label file: label data is truncated");

  Dataset d;
  d.name = images.filename().string();
  d.in_dim = downsample_side == 0 ? pixels : downsample_side * downsample_side;
  d.inputs.reserve(count * d.in_dim);
  std::vector<double> image(pixels);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t p = 0; p < pixels; ++p) image[p] = img[16 + s * pixels + p] / 255.0;
    if (downsample_side == 0) {
      d.inputs.insert(d.inputs.end(), image.begin(), image.end());
    } else {
      const auto small = downsample_image(image, rows, cols, downsample_side);
      d.inputs.insert(d.inputs.end(), small.begin(), small.end());
    }
    d.labels.push_back(lab[8 + s]);
  }
  int max_label = -1;
  for (int y : d.labels) max_label = std::max(max_label, y);
  d.num_classes = static_cast<std::size_t>(max_label + 1);
  d.train_indices.resize(count);
  std::iota(d.train_indices.begin(), d.train_indices.end(), std::size_t{0});
  return d;
}

void split_dataset(Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidArgument("split: test_fraction must be in [0, 1)");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(all.size())));
  data.test_indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
  data.train_indices.assign(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
  std::sort(data.test_indices.begin(), data.test_indices.end());
  std::sort(data.train_indices.begin(), data.train_indices.end());
}

Dataset make_gaussian_blobs(const GaussianBlobsParams& p, std::uint64_t seed) {
  if (p.samples == 0 || p.in_dim == 0 || p.classes < 2) throw InvalidArgument("GaussianBlobs: bad parameters");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> means(p.classes * p.in_dim);
  for (double& m : means) m = p.separation * gauss(rng);

  Dataset d;
  d.name = "gaussian_blobs";
  d.in_dim = p.in_dim;
  d.num_classes = p.classes;
  d.inputs.resize(p.samples * p.in_dim);
  d.labels.resize(p.samples);
  for (std::size_t s = 0; s < p.samples; ++s) {
    const std::size_t c = s % p.classes;
    d.labels[s] = static_cast<int>(c);
    for (std::size_t k = 0; k < p.in_dim; ++k) d.inputs[s * p.in_dim + k] = means[c * p.in_dim + k] + p.noise * gauss(rng);
  }
  const auto [lo, hi] = std::minmax_element(d.inputs.begin(), d.inputs.end());
  const double min = *lo, range = *hi - *lo;
  for (double& v : d.inputs) v = range > 0.0 ? (v - min) / range : 0.0;
  split_dataset(d, p.test_fraction, seed ^ 0x9e3779b97f4a7c15ULL);
  return d;
}

QuadraticProblem make_quadratic_bowl(std::size_t n, double kappa, std::uint64_t seed) {
  if (n == 0 || !(kappa >= 1.0)) throw InvalidArgument("QuadraticBowl: need n >= 1 and kappa >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Rows of q: Gram-Schmidt (applied twice) on a Gaussian matrix.
  std::vector<double> q(n * n);
  for (double& v : q) v = gauss(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double* qi = &q[i * n];
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < i; ++k) {
        const double* qk = &q[k * n];
        double proj = 0.0;
        for (std::size_t j = 0; j < n; ++j) proj += qi[j] * qk[j];
        for (std::size_t j = 0; j < n; ++j) qi[j] -= proj * qk[j];
      }
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) norm += qi[j] * qi[j];
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < n; ++j) qi[j] /= norm;
  }

  std::vector<double> diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : static_cast<double>(n - 1 - k) / static_cast<double>(n - 1);
    diag[k] = std::pow(kappa, t);
  }
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q[k * n + i] * diag[k] * q[k * n + j];
      a[i * n + j] = s;
    }
  QuadraticProblem prob{SymMatrix::symmetrized(n, a), std::vector<double>(n)};
  for (double& v : prob.b) v = gauss(rng);
  return prob;
}

std::variant<Dataset, QuadraticProblem> make_synthetic(SyntheticKind kind, const SyntheticParams& params,
                                                       std::uint64_t seed) {
  if (kind == SyntheticKind::QuadraticBowl) return make_quadratic_bowl(params.dimension, params.kappa, seed);
  return make_gaussian_blobs(params.blobs, seed);
}

}  // namespace qnewton
