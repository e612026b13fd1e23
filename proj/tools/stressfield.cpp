// Command-line front end: generate, train, eval, predict, render, inspect.
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "stressfield/bitmap.hpp"
#include "stressfield/checkpoint.hpp"
#include "stressfield/dataset.hpp"
#include "stressfield/errors.hpp"
#include "stressfield/evaluate.hpp"
#include "stressfield/field_grid.hpp"
#include "stressfield/pipeline.hpp"
#include "stressfield/threads.hpp"
#include "stressfield/trainer.hpp"

namespace fs = std::filesystem;
using namespace stressfield;

namespace {

struct InputError : Error {
  using Error::Error;
};

struct GenerateArgs {
  fs::path out;
  std::string scale = "desk";
  std::uint64_t seed = 2023;
  std::string preset = "load";
  int threads = 0;
};

struct TrainArgs {
  fs::path data;
  std::string variant = "spatiotempo-lstm";
  std::string weights = "1,auto,auto";
  int epochs = 60;
  fs::path out;
  int d = 64;
  int batch = 10;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  bool constant_lr = false;
  std::uint64_t seed = 0;
  std::uint64_t model_seed = 0;
  int grid = kTrainingGridSize;
  int threads = 0;
  fs::path resume;
};

struct EvalArgs {
  fs::path data;
  fs::path ckpt;
  std::string split = "test";
  bool oracle = false;
  bool zero = false;
  fs::path report;
};

struct PredictArgs {
  fs::path data;
  fs::path ckpt;
  std::size_t sample = 0;
  fs::path out;
};

struct RenderArgs {
  fs::path data;
  std::size_t sample = 0;
  int frame = 0;
  fs::path ckpt;
  fs::path out = ".";
  int grid = 200;
};

int run_generate(const GenerateArgs& a) {
  GenerationConfig config;
  config.scale = parse_scale(a.scale);
  config.preset = parse_split_preset(a.preset);
  config.master_seed = a.seed;
  config.threads = a.threads;
  if (a.out.has_parent_path() && !fs::exists(a.out.parent_path())) {
    throw InputError("output directory " + a.out.parent_path().string() + " does not exist");
  }
  const std::size_t n = generate_dataset(a.out, config);
  std::cout << "wrote " << n << " samples to " << a.out.string() << " (manifest "
            << manifest_path(a.out).string() << ")\n";
  return 0;
}

int run_train(const TrainArgs& a) {
  const DatasetView data = open_dataset(a.data);
  ModelConfig mc;
  mc.variant = parse_variant(a.variant);
  mc.d = a.d;
  mc.seed = a.model_seed;
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.learning_rate = a.lr;
  tc.weight_decay = a.weight_decay;
  tc.cosine_schedule = !a.constant_lr;
  tc.seed = a.seed;
  tc.threads = a.threads;
  tc.validate();
  const LossWeightSpec spec = LossWeightSpec::parse(a.weights);

  std::optional<Checkpoint> resumed;
  if (!a.resume.empty()) {
    resumed = read_checkpoint(a.resume);
    if (!resumed->state) throw InputError(a.resume.string() + " carries no optimizer state");
    mc = resumed->config;
  }
  Model<float> model = resumed ? load_model(*resumed) : Model<float>(mc);

  GridOptions grid;
  grid.size = a.grid;
  const bool physics = !(spec.pde && *spec.pde == 0.0);
  const auto train_records = data.load(Split::Train);
  const auto val_records = data.load(Split::Val);
  const auto train_set = prepare_samples(train_records, data, physics ? &grid : nullptr, a.threads);
  const auto val_set = prepare_samples(val_records, data, physics ? &grid : nullptr, a.threads);
  std::cout << "model " << to_string(mc.variant) << " with " << param_count(mc)
            << " parameters; " << train_set.size() << " train / " << val_set.size()
            << " val samples\n";

  TrainOutputs outputs;
  outputs.best = a.out;
  outputs.last = a.out.string() + ".last";
  outputs.log = a.out.string() + ".log";
  outputs.echo = &std::cout;
  const TrainResult r = train(model, train_set, val_set, tc, spec, outputs,
                              resumed ? &*resumed->state : nullptr);
  std::cout << "weights " << r.weights.data << ',' << r.weights.pde << ',' << r.weights.bc
            << "; best epoch " << r.best_epoch << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  if (a.oracle + a.zero + !a.ckpt.empty() != 1) {
    throw InputError("eval needs exactly one of --ckpt, --oracle or --zero");
  }
  const DatasetView data = open_dataset(a.data);
  const auto samples = data.load(parse_split(a.split));
  std::optional<Model<float>> model;
  Predictor predict;
  if (a.oracle) {
    predict = oracle_predictor();
  } else if (a.zero) {
    predict = zero_predictor();
  } else {
    model = load_model(read_checkpoint(a.ckpt));
    predict = model_predictor(*model, data.norm);
  }
  const EvalReport report = evaluate(predict, samples, a.split);
  const std::string text = report.to_text();
  std::cout << text;
  if (!a.report.empty()) {
    std::ofstream out(a.report, std::ios::trunc);
    if (!out) throw InputError("cannot write report " + a.report.string());
    out << text;
  }
  return 0;
}

int run_predict(const PredictArgs& a) {
  const DatasetView data = open_dataset(a.data);
  const SampleRecord s = data.load_sample(a.sample);
  const Model<float> model = load_model(read_checkpoint(a.ckpt));
  const Eigen::MatrixXd pred = model_predictor(model, data.norm)(s);
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw InputError("cannot write " + a.out.string());
  write_stress_csv(out, pred);
  std::cout << "wrote " << pred.rows() / 3 * pred.cols() << " rows to " << a.out.string() << "\n";
  return 0;
}

void render_frame(const fs::path& dir, const std::string& stem, const Eigen::MatrixXd& stress,
                  int frame, const GridOperator& op) {
  const Eigen::Index n = stress.rows() / 3;
  Eigen::MatrixXd nodal(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    nodal(i, 0) = stress(3 * i, frame);
    nodal(i, 1) = stress(3 * i + 1, frame);
    nodal(i, 2) = stress(3 * i + 2, frame);
    nodal(i, 3) = von_mises(nodal(i, 0), nodal(i, 1), nodal(i, 2));
  }
  const Eigen::MatrixXd grid = op.lift(nodal);
  for (int c = 0; c < 4; ++c) {
    const Eigen::VectorXd field = grid.col(c);
    write_bmp(dir / (stem + "_" + kReportChannels[static_cast<std::size_t>(c)] + ".bmp"),
              std::span<const double>(field.data(), static_cast<std::size_t>(field.size())),
              op.size(), op.mask());
  }
}

int run_render(const RenderArgs& a) {
  const DatasetView data = open_dataset(a.data);
  const SampleRecord s = data.load_sample(a.sample);
  if (a.frame < 0 || a.frame >= s.input.num_frames()) {
    throw InputError("frame " + std::to_string(a.frame) + " out of range [0, " +
                     std::to_string(s.input.num_frames() - 1) + "]");
  }
  fs::create_directories(a.out);
  GridOptions grid;
  grid.size = a.grid;
  const GridOperator op = build_grid_operator(s.mesh, grid);
  const std::string base = "sample" + std::to_string(a.sample);
  const std::string stem = base + "_f" + std::to_string(a.frame);

  render_frame(a.out, stem + "_truth", s.stress, a.frame, op);
  {
    std::ofstream csv(a.out / (base + "_truth.csv"), std::ios::trunc);
    write_stress_csv(csv, s.stress);
  }
  if (!a.ckpt.empty()) {
    const Model<float> model = load_model(read_checkpoint(a.ckpt));
    const Eigen::MatrixXd pred = model_predictor(model, data.norm)(s);
    render_frame(a.out, stem + "_pred", pred, a.frame, op);
    std::ofstream csv(a.out / (base + "_pred.csv"), std::ios::trunc);
    write_stress_csv(csv, pred);
  }
  std::cout << "rendered sample " << a.sample << " frame " << a.frame << " into "
            << a.out.string() << "\n";
  return 0;
}

int run_inspect(const fs::path& path) {
  const ContainerHeader h = read_container_header(path);
  std::cout << "version=" << h.version << "\n"
            << "sample_count=" << h.sample_count << "\n";
  for (std::size_t i = 0; i < h.samples.size(); ++i) {
    const SampleHeader& s = h.samples[i];
    std::cout << "sample " << i << " geometry=" << s.geometry_id
              << " bc=" << static_cast<int>(s.bc_case) << " load=" << static_cast<int>(s.load_case)
              << " nodes=" << s.num_nodes << " triangles=" << s.num_triangles
              << " offset=" << s.offset << "\n";
  }
  const fs::path mpath = manifest_path(path);
  if (fs::exists(mpath)) {
    for (const auto& [k, v] : read_manifest(mpath).entries) std::cout << "manifest." << k << "=" << v << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Synthetic gusset-plate stress datasets and spatiotemporal surrogate models"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Simulate a dataset container and manifest");
  g->add_option("--out", gen.out, "Container path")->required();
  g->add_option("--scale", gen.scale, "desk or full")->check(CLI::IsMember({"desk", "full"}));
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--preset", gen.preset, "Split preset")
      ->check(CLI::IsMember({"baseline", "geometry", "load", "bc"}));
  g->add_option("--threads", gen.threads, "Worker threads (0: STRESSFIELD_THREADS or all cores)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a container's train split");
  t->add_option("--data", tr.data, "Container path")->required();
  t->add_option("--variant", tr.variant, "spatiotempo-lstm, tempo-lstm or spatio-mlp");
  t->add_option("--weights", tr.weights, "w_data,w_pde,w_bc; 'auto' calibrates a weight");
  t->add_option("--epochs", tr.epochs, "Epochs (0 writes the initialized model)");
  t->add_option("--out", tr.out, "Best checkpoint path")->required();
  t->add_option("--d", tr.d, "Hidden width");
  t->add_option("--batch", tr.batch, "Batch size");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--weight-decay", tr.weight_decay, "Decoupled weight decay");
  t->add_flag("--constant-lr", tr.constant_lr, "Disable cosine learning-rate decay");
  t->add_option("--seed", tr.seed, "Shuffle seed");
  t->add_option("--model-seed", tr.model_seed, "Initialization seed");
  t->add_option("--grid", tr.grid, "Residual grid size for L_PDE");
  t->add_option("--threads", tr.threads, "Worker threads");
  t->add_option("--resume", tr.resume, "Continue from a '.last' checkpoint");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Report MAE and MRPE on a split");
  e->add_option("--data", ev.data, "Container path")->required();
  e->add_option("--ckpt", ev.ckpt, "Checkpoint");
  e->add_option("--split", ev.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  e->add_flag("--oracle", ev.oracle, "Score the ground truth itself");
  e->add_flag("--zero", ev.zero, "Score the all-zero predictor");
  e->add_option("--report", ev.report, "Write the report to this file as well");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Write one sample's predicted stresses as CSV");
  p->add_option("--data", pr.data, "Container path")->required();
  p->add_option("--ckpt", pr.ckpt, "Checkpoint")->required();
  p->add_option("--sample", pr.sample, "Sample index in the container");
  p->add_option("--out", pr.out, "CSV path")->required();

  RenderArgs rn;
  auto* r = app.add_subcommand("render", "Bitmaps of one frame plus full-sample CSVs");
  r->add_option("--data", rn.data, "Container path")->required();
  r->add_option("--sample", rn.sample, "Sample index in the container");
  r->add_option("--frame", rn.frame, "Frame index");
  r->add_option("--ckpt", rn.ckpt, "Optional checkpoint for prediction images");
  r->add_option("--out", rn.out, "Output directory");
  r->add_option("--grid", rn.grid, "Raster size");

  fs::path inspect_path;
  auto* in = app.add_subcommand("inspect", "Print container header fields");
  in->add_option("path", inspect_path, "Container path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (t->parsed()) return run_train(tr);
    if (e->parsed()) return run_eval(ev);
    if (p->parsed()) return run_predict(pr);
    if (r->parsed()) return run_render(rn);
    if (in->parsed()) return run_inspect(inspect_path);
  } catch (const InputError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const ConfigurationError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const FormatError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const ContractError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
