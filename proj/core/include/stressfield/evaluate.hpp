#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "stressfield/dataset.hpp"
#include "stressfield/nn.hpp"

namespace stressfield {

/// Physical stress prediction (3N x T, row 3n + c) for a sample.
using Predictor = std::function<Eigen::MatrixXd(const SampleRecord&)>;

Predictor model_predictor(const Model<float>& model, const NormalizationSpec& norm);
/// Returns the stored ground truth.
Predictor oracle_predictor();
Predictor zero_predictor();

/// N x T von Mises field of a 3N x T stress history.
Eigen::MatrixXd von_mises_field(const Eigen::MatrixXd& stress);

struct ChannelMetrics {
  double mae = 0.0;   // Pa
  double mrpe = 0.0;  // %
};

inline constexpr std::array<const char*, 4> kReportChannels{"sxx", "syy", "sxy", "svm"};

/// Metrics averaged over samples; each sample's MRPE uses that sample's
/// global maximum.
struct EvalReport {
  std::string split;
  std::size_t samples = 0;
  std::array<ChannelMetrics, 4> channels{};
  double seconds_per_sample = 0.0;

  const ChannelMetrics& svm() const { return channels[3]; }

  /// `key=value` lines.
  std::string to_text() const;
  static EvalReport parse(const std::string& text);
};

EvalReport evaluate(const Predictor& predict, std::span<const SampleRecord> samples,
                    const std::string& split);

/// `node,t,sxx,syy,sxy,svm` rows for every node and frame.
void write_stress_csv(std::ostream& out, const Eigen::MatrixXd& stress);

}  // namespace stressfield
