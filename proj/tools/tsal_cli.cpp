// tsal: experiment driver for the two-stream active-learning workbench.
//
//   tsal generate --out data.jsonl [--preset lusms-synth-v1 | --config synth.json] [--seed N]
//   tsal run      --data data.jsonl --report series.jsonl [--strategy mlm] [--k-max 25] ...
//   tsal baseline --data data.jsonl --report baseline.jsonl [--epochs 50]
//   tsal serve    --data data.jsonl [--port 8080]
//   tsal report   --in series.jsonl [--out series.csv]

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tsal/dataset.hpp"
#include "tsal/driver.hpp"
#include "tsal/report.hpp"
#include "tsal/service.hpp"
#include "tsal/synthetic.hpp"

namespace {

struct LoopOptions {
  std::string data;
  std::string report;
  std::string strategy = "mlm";
  std::size_t k_max = 25;
  std::size_t iterations = 20;
  double threshold = 0.5;
  bool strict = false;
  bool no_validation = false;
  double max_distance = -1.0;
  double target = -1.0;
  std::uint64_t seed = 42;
  std::string scope = "cumulative";
  double lr = 2e-3;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::size_t epochs = 5;
  std::size_t hidden = 0;
  std::size_t projection = 0;
  double noise = 0.0;
  std::string checkpoint;
};

void add_loop_options(CLI::App* cmd, LoopOptions& o) {
  cmd->add_option("--data", o.data, "Dataset file (JSON lines)")->required();
  cmd->add_option("--strategy", o.strategy, "Selection strategy")
      ->check(CLI::IsMember({"mlm", "lc", "mle", "random"}));
  cmd->add_option("--k-max", o.k_max, "Annotation budget per iteration");
  cmd->add_option("--iterations", o.iterations, "Maximum number of iterations");
  cmd->add_option("--threshold", o.threshold, "Pseudo-label threshold");
  cmd->add_flag("--strict-threshold", o.strict, "Positive only when strictly above the threshold");
  cmd->add_flag("--no-validation", o.no_validation, "Disable correlation-table refinement");
  cmd->add_option("--max-distance", o.max_distance, "Skip refinement beyond this Manhattan distance");
  cmd->add_option("--target", o.target, "Stop once macro-accuracy (fraction) reaches this value");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--finetune-scope", o.scope, "Fine-tune on the new batch or the cumulative labeled set")
      ->check(CLI::IsMember({"batch", "cumulative"}));
  cmd->add_option("--lr", o.lr, "SGD learning rate");
  cmd->add_option("--momentum", o.momentum, "SGD momentum");
  cmd->add_option("--batch-size", o.batch, "SGD mini-batch size");
  cmd->add_option("--epochs", o.epochs, "Epochs per fine-tuning round");
  cmd->add_option("--hidden", o.hidden, "Hidden units in the head (0: linear)");
  cmd->add_option("--projection", o.projection, "Frozen random projection width (0: identity)");
  cmd->add_option("--oracle-noise", o.noise, "Bit-flip rate of the simulated annotator");
}

tsal::ALConfig to_config(const LoopOptions& o) {
  tsal::ALConfig c;
  c.k_max = o.k_max;
  c.max_iterations = o.iterations;
  c.strategy.kind = tsal::parse_strategy(o.strategy);
  c.threshold = {o.threshold, o.strict};
  c.validation = !o.no_validation;
  if (o.max_distance >= 0.0) c.max_refine_distance = o.max_distance;
  if (o.target >= 0.0) c.target_metric = o.target;
  c.seed = o.seed;
  c.finetune_scope = tsal::parse_finetune_scope(o.scope);
  c.train.learning_rate = o.lr;
  c.train.momentum = o.momentum;
  c.train.batch_size = o.batch;
  c.train.epochs = o.epochs;
  c.head.hidden_units = o.hidden;
  c.head.projection_dim = o.projection;
  c.oracle_noise = o.noise;
  c.validate();
  return c;
}

void print_iteration(const tsal::IterationReport& r) {
  std::printf("iter %2d  labeled %5zu (%5.1f%%)  corrected %5.1f%%  macro-acc %6.2f%%\n", r.iteration,
              r.labeled_count, 100.0 * r.labeled_fraction, 100.0 * r.corrected_fraction,
              100.0 * r.eval.macro_accuracy);
}

tsal::HttpServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream active learning workbench"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic benchmark dataset");
  std::string gen_out, gen_preset = "lusms-synth-v1", gen_config, gen_dump;
  std::uint64_t gen_seed = 42;
  gen->add_option("--out", gen_out, "Output dataset file")->required();
  gen->add_option("--preset", gen_preset, "Built-in configuration")->check(CLI::IsMember({"lusms-synth-v1"}));
  gen->add_option("--config", gen_config, "SynthConfig JSON file (overrides --preset)");
  gen->add_option("--seed", gen_seed, "Seed (preset only)");
  gen->add_option("--dump-config", gen_dump, "Also write the effective SynthConfig JSON here");

  // run
  auto* run = app.add_subcommand("run", "Headless active learning with a simulated annotator");
  LoopOptions run_opts;
  add_loop_options(run, run_opts);
  run->add_option("--report", run_opts.report, "Report series output (JSON lines)");
  run->add_option("--checkpoint", run_opts.checkpoint, "Write the final model here");

  // baseline
  auto* base = app.add_subcommand("baseline", "Train on the full labeled pool");
  LoopOptions base_opts;
  base_opts.epochs = 50;
  add_loop_options(base, base_opts);
  base->add_option("--report", base_opts.report, "Report output (JSON lines)");
  base->add_option("--checkpoint", base_opts.checkpoint, "Write the trained model here");

  // serve
  auto* serve = app.add_subcommand("serve", "Human-in-the-loop annotation service");
  LoopOptions serve_opts;
  add_loop_options(serve, serve_opts);
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  // report
  auto* rep = app.add_subcommand("report", "Convert a report series to CSV");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "Report series file")->required();
  rep->add_option("--out", rep_out, "CSV output (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      tsal::SynthConfig cfg;
      if (!gen_config.empty()) {
        std::ifstream in(gen_config);
        if (!in) throw tsal::Error(tsal::ErrorCode::io_error, "cannot read " + gen_config);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = tsal::synth_config_from_json(ss.str());
      } else {
        cfg = tsal::lusms_synth_v1(gen_seed);
      }
      const auto data = tsal::generate_synthetic(cfg);
      tsal::save_dataset(data, gen_out);
      if (!gen_dump.empty()) std::ofstream(gen_dump) << tsal::synth_config_to_json(cfg) << '\n';
      std::printf("wrote %zu samples (%zu pool, %zu test) to %s, hash %s\n", data.size(),
                  data.ids(tsal::Split::pool).size(), data.ids(tsal::Split::test).size(), gen_out.c_str(),
                  tsal::dataset_hash(data).c_str());
    } else if (*run) {
      const auto cfg = to_config(run_opts);
      const auto data = tsal::load_dataset(run_opts.data);
      const auto result = tsal::run(data, cfg);
      for (const auto& r : result.series) print_iteration(r);
      std::printf("stopped: %s\n", std::string(tsal::to_string(result.stop)).c_str());
      if (!run_opts.report.empty()) {
        tsal::write_report(run_opts.report, tsal::make_metadata("active", cfg, data), data.schema(),
                           result.series, result.stop);
      }
      if (!run_opts.checkpoint.empty()) tsal::save_checkpoint(result.model, run_opts.checkpoint);
    } else if (*base) {
      const auto cfg = to_config(base_opts);
      const auto data = tsal::load_dataset(base_opts.data);
      const auto result = tsal::run_baseline(data, cfg, base_opts.epochs);
      print_iteration(result.report);
      if (!base_opts.report.empty()) {
        auto meta = tsal::make_metadata("baseline", cfg, data);
        meta.baseline_epochs = base_opts.epochs;
        const std::vector<tsal::IterationReport> series{result.report};
        tsal::write_report(base_opts.report, meta, data.schema(), series);
      }
      if (!base_opts.checkpoint.empty()) tsal::save_checkpoint(result.model, base_opts.checkpoint);
    } else if (*serve) {
      const auto cfg = to_config(serve_opts);
      tsal::AnnotationService service(tsal::load_dataset(serve_opts.data), cfg);
      tsal::HttpServer server(service);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      std::printf("serving on http://%s:%d/api\n", host.c_str(), bound);
      std::fflush(stdout);
      server.run();
    } else if (*rep) {
      std::ifstream in(rep_in);
      if (!in) throw tsal::Error(tsal::ErrorCode::io_error, "cannot read " + rep_in);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto csv = tsal::report_to_csv(ss.str());
      if (rep_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(rep_out) << csv;
      }
    }
  } catch (const tsal::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(tsal::to_string(e.code())).c_str(), e.what());
    return 1;
  }
  return 0;
}
