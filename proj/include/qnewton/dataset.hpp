#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qnewton/model.hpp"
#include "qnewton/sym_matrix.hpp"

namespace qnewton {

/// Labelled inputs in [0, 1] with a disjoint train/test split.
struct Dataset {
  std::string name;
  std::size_t in_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> inputs;  // size() x in_dim, row-major
  std::vector<int> labels;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;

  std::size_t size() const noexcept { return labels.size(); }
  Batch gather(std::span<const std::size_t> indices) const;
  Batch train_batch() const { return gather(train_indices); }
  Batch test_batch() const { return gather(test_indices); }

  bool operator==(const Dataset&) const = default;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads big-endian IDX image/label files. Pixels are scaled by 1/255. When
/// `downsample_side` is non-zero, images are area-averaged to
/// downsample_side x downsample_side. Every sample lands in the train split.
/// Throws BadMagic, DimensionMismatch or TruncatedFile.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t downsample_side = 0);

/// Area-weighted average pooling of a rows x cols image to side x side.
std::vector<double> downsample_image(std::span<const double> image, std::size_t rows, std::size_t cols,
                                     std::size_t side);

/// Shuffles all indices with `seed` and moves floor(test_fraction * N) of
/// them into the test split.
void split_dataset(Dataset& data, double test_fraction, std::uint64_t seed);

struct GaussianBlobsParams {
  std::size_t samples = 1200;
  std::size_t in_dim = 64;
  std::size_t classes = 10;
  double separation = 3.0;  // std-dev of the class means
  double noise = 1.0;       // std-dev around each mean
  double test_fraction = 0.2;

  bool operator==(const GaussianBlobsParams&) const = default;
};

/// k-class Gaussian clusters, balanced, min-max scaled to [0, 1].
Dataset make_gaussian_blobs(const GaussianBlobsParams& params, std::uint64_t seed);

struct QuadraticProblem {
  SymMatrix a;
  std::vector<double> b;
};

/// A = Q^T D Q with a seeded random rotation Q and a log-spaced diagonal D
/// from kappa down to 1, so cond(A) = kappa; b is standard normal.
QuadraticProblem make_quadratic_bowl(std::size_t n, double kappa, std::uint64_t seed);

enum class SyntheticKind { QuadraticBowl, GaussianBlobs };

struct SyntheticParams {
  std::size_t dimension = 8;  // QuadraticBowl
  double kappa = 10.0;        // QuadraticBowl
  GaussianBlobsParams blobs;  // GaussianBlobs
};

std::variant<Dataset, QuadraticProblem> make_synthetic(SyntheticKind kind, const SyntheticParams& params,
                                                       std::uint64_t seed);

}  // namespace qnewton
