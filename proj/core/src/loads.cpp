#include <cmath>
#include <numbers>
#include <string>

#include "stressfield/dataset.hpp"
#include "stressfield/errors.hpp"
#include "stressfield/rng.hpp"

namespace stressfield {

namespace {

LoadHistory draw_history(const CounterRng& rng, Direction direction) {
  const std::uint64_t base = direction == Direction::X ? 0 : 8;
  LoadHistory h;
  h.direction = direction;
  h.waveform = rng.below(base, 2) == 0 ? Waveform::Sine : Waveform::Cosine;
  h.frequency = rng.uniform(base + 1, 1.0, 3.0);
  h.amplitude = kAmplitudes[rng.below(base + 2, kAmplitudes.size())];
  h.values.resize(kFrames);
  const double omega = 2.0 * std::numbers::pi * h.frequency;
  for (int k = 0; k < kFrames; ++k) {
    const double t = k * kTimeStep;
    h.values[k] = h.amplitude *
                  (h.waveform == Waveform::Sine ? std::sin(omega * t) : std::cos(omega * t));
  }
  return h;
}

// Rows follow the boundary-condition/load-position pairing of the data set.
constexpr std::array<BoundaryCase, kBoundaryCases> kBoundaryCaseTable{{
    {1, label_bit(EdgeLabel::E2), label_bit(EdgeLabel::E4) | label_bit(EdgeLabel::E5)},
    {2, label_bit(EdgeLabel::E2) | label_bit(EdgeLabel::E3), label_bit(EdgeLabel::E5)},
    {3, label_bit(EdgeLabel::E1) | label_bit(EdgeLabel::E2), label_bit(EdgeLabel::E4)},
    {4, label_bit(EdgeLabel::E3), label_bit(EdgeLabel::E2) | label_bit(EdgeLabel::E4)},
    {5, label_bit(EdgeLabel::E1) | label_bit(EdgeLabel::E5), label_bit(EdgeLabel::E2)},
}};

}  // namespace

std::pair<LoadHistory, LoadHistory> gen_load_history(int case_id, std::uint64_t rng_seed) {
  if (case_id < 1 || case_id > kLoadCases) {
    throw ConfigurationError("load case must be in 1.." + std::to_string(kLoadCases) +
                             ", got " + std::to_string(case_id));
  }
  const CounterRng rng(rng_seed, static_cast<std::uint64_t>(case_id));
  return {draw_history(rng, Direction::X), draw_history(rng, Direction::Y)};
}

const BoundaryCase& boundary_case(int id) {
  if (id < 1 || id > kBoundaryCases) {
    throw ConfigurationError("boundary case must be in 1.." + std::to_string(kBoundaryCases) +
                             ", got " + std::to_string(id));
  }
  return kBoundaryCaseTable[id - 1];
}

std::string mask_name(LabelMask mask) {
  std::string out;
  for (int e = 0; e < 8; ++e) {
    if (mask & (1u << e)) out += "E" + std::to_string(e + 1);
  }
  return out;
}

}  // namespace stressfield
