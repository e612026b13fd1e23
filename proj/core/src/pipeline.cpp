#include "stressfield/pipeline.hpp"

#include "stressfield/errors.hpp"
#include "stressfield/threads.hpp"

namespace stressfield {

DatasetView open_dataset(const std::filesystem::path& container) {
  if (!std::filesystem::exists(container)) {
    throw FormatError("dataset " + container.string() + " does not exist");
  }
  DatasetView d;
  d.path = container;
  d.header = read_container_header(container);
  d.manifest = read_manifest(manifest_path(container));
  d.norm = d.manifest.normalization();
  d.split = d.manifest.split();
  d.material = d.manifest.material();
  for (const auto& h : d.header.samples) {
    d.keys.push_back({static_cast<int>(h.geometry_id), h.bc_case, h.load_case});
  }
  d.indices = d.split.resolve(d.keys);
  return d;
}

SampleRecord DatasetView::load_sample(std::size_t index) const {
  if (index >= header.samples.size()) {
    throw ConfigurationError("sample " + std::to_string(index) + " out of range (container holds " +
                             std::to_string(header.samples.size()) + ")");
  }
  return read_container_sample(path, index);
}

std::vector<SampleRecord> DatasetView::load(Split which) const {
  std::vector<SampleRecord> out;
  for (std::size_t i : indices[which]) out.push_back(load_sample(i));
  return out;
}

std::vector<TrainingSample<float>> prepare_samples(const std::vector<SampleRecord>& samples,
                                                   const DatasetView& data,
                                                   const GridOptions* grid, int threads) {
  std::vector<TrainingSample<float>> out(samples.size());
  parallel_for(
      samples.size(),
      [&](std::size_t i) {
        out[i] = make_training_sample<float>(samples[i], data.norm, data.material, grid);
      },
      threads);
  return out;
}

}  // namespace stressfield
