#pragma once

#include <filesystem>
#include <vector>

#include "stressfield/dataset.hpp"
#include "stressfield/field_grid.hpp"
#include "stressfield/losses.hpp"

namespace stressfield {

/// A container plus its manifest, with splits resolved.
struct DatasetView {
  std::filesystem::path path;
  ContainerHeader header;
  Manifest manifest;
  NormalizationSpec norm;
  SplitSpec split;
  Material material;
  std::vector<SampleKey> keys;
  SplitSpec::Indices indices;

  std::vector<SampleRecord> load(Split which) const;
  SampleRecord load_sample(std::size_t index) const;
};

DatasetView open_dataset(const std::filesystem::path& container);

/// Training bundles for `samples`; `grid == nullptr` skips the residual cache.
std::vector<TrainingSample<float>> prepare_samples(const std::vector<SampleRecord>& samples,
                                                   const DatasetView& data,
                                                   const GridOptions* grid, int threads = 0);

/// Grid used for L_PDE during training. The full 200 x 200 operator costs
/// ~50 MB per cached sample, so training defaults to a coarser raster.
inline constexpr int kTrainingGridSize = 40;

}  // namespace stressfield
