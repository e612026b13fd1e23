#include "stressfield/evaluate.hpp"

#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "stressfield/errors.hpp"
#include "stressfield/fem.hpp"
#include "stressfield/losses.hpp"

namespace stressfield {

Predictor model_predictor(const Model<float>& model, const NormalizationSpec& norm) {
  norm.validate();
  return [&model, norm](const SampleRecord& s) {
    const int n = static_cast<int>(s.num_nodes());
    const int t = static_cast<int>(s.input.num_frames());
    const Mat<float> y = model.forward_sample(model_input<float>(s), n, t);
    Eigen::MatrixXd out = to_stress_rows(y.cast<double>(), n, t);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const int c = static_cast<int>(r % kStressChannels);
      for (Eigen::Index k = 0; k < out.cols(); ++k) out(r, k) = norm.invert(out(r, k), c);
    }
    return out;
  };
}

Predictor oracle_predictor() {
  return [](const SampleRecord& s) { return s.stress; };
}

Predictor zero_predictor() {
  return [](const SampleRecord& s) {
    return Eigen::MatrixXd::Zero(s.stress.rows(), s.stress.cols()).eval();
  };
}

Eigen::MatrixXd von_mises_field(const Eigen::MatrixXd& stress) {
  const Eigen::Index n = stress.rows() / kStressChannels;
  if (n * kStressChannels != stress.rows()) throw ContractError("stress must have 3N rows");
  Eigen::MatrixXd out(n, stress.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < stress.cols(); ++t) {
      out(i, t) = von_mises(stress(3 * i, t), stress(3 * i + 1, t), stress(3 * i + 2, t));
    }
  }
  return out;
}

EvalReport evaluate(const Predictor& predict, std::span<const SampleRecord> samples,
                    const std::string& split) {
  if (samples.empty()) throw ConfigurationError("no samples to evaluate in split " + split);
  EvalReport report;
  report.split = split;
  report.samples = samples.size();
  double seconds = 0.0;
  const double k = 1.0 / static_cast<double>(samples.size());
  for (const SampleRecord& s : samples) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::MatrixXd pred = predict(s);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (pred.rows() != s.stress.rows() || pred.cols() != s.stress.cols()) {
      throw ContractError("predictor returned the wrong shape");
    }
    const Eigen::Index n = s.num_nodes();
    for (int c = 0; c < kStressChannels; ++c) {
      Eigen::MatrixXd p(n, pred.cols()), t(n, pred.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        p.row(i) = pred.row(3 * i + c);
        t.row(i) = s.stress.row(3 * i + c);
      }
      report.channels[static_cast<std::size_t>(c)].mae += k * mae(p, t);
      report.channels[static_cast<std::size_t>(c)].mrpe += k * mrpe(p, t);
    }
    const Eigen::MatrixXd vp = von_mises_field(pred), vt = von_mises_field(s.stress);
    report.channels[3].mae += k * mae(vp, vt);
    report.channels[3].mrpe += k * mrpe(vp, vt);
  }
  report.seconds_per_sample = seconds * k;
  return report;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "split=" << split << '\n' << "samples=" << samples << '\n';
  for (std::size_t c = 0; c < channels.size(); ++c) {
    out << kReportChannels[c] << ".mae=" << channels[c].mae << '\n';
    out << kReportChannels[c] << ".mrpe=" << channels[c].mrpe << '\n';
  }
  out << "seconds_per_sample=" << seconds_per_sample << '\n';
  return out.str();
}

EvalReport EvalReport::parse(const std::string& text) {
  EvalReport r;
  std::istringstream in(text);
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed report line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    ++seen;
    if (key == "split") {
      r.split = value;
    } else if (key == "samples") {
      r.samples = std::stoull(value);
    } else if (key == "seconds_per_sample") {
      r.seconds_per_sample = std::stod(value);
    } else {
      bool matched = false;
      for (std::size_t c = 0; c < kReportChannels.size(); ++c) {
        const std::string base = kReportChannels[c];
        if (key == base + ".mae") {
          r.channels[c].mae = std::stod(value);
          matched = true;
        } else if (key == base + ".mrpe") {
          r.channels[c].mrpe = std::stod(value);
          matched = true;
        }
      }
      if (!matched) throw FormatError("unknown report key '" + key + "'");
    }
  }
  if (seen != 3 + 2 * static_cast<int>(kReportChannels.size())) {
    throw FormatError("report is missing fields");
  }
  return r;
}

void write_stress_csv(std::ostream& out, const Eigen::MatrixXd& stress) {
  const Eigen::MatrixXd vm = von_mises_field(stress);
  out << "node,t,sxx,syy,sxy,svm\n" << std::setprecision(9);
  for (Eigen::Index n = 0; n < vm.rows(); ++n) {
    for (Eigen::Index t = 0; t < vm.cols(); ++t) {
      out << n << ',' << t << ',' << stress(3 * n, t) << ',' << stress(3 * n + 1, t) << ','
          << stress(3 * n + 2, t) << ',' << vm(n, t) << '\n';
    }
  }
}

}  // namespace stressfield
