// Command-line front end; talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pidon/pidon.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string kind;
  std::string message;
};

void check(pidon_status s) {
  if (s != PIDON_OK) throw Failure{pidon_status_name(s), pidon_last_error()};
}

struct Str {
  char* p = nullptr;
  ~Str() { pidon_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
};
using Config = Handle<pidon_config, pidon_config_free>;
using Solution = Handle<pidon_solution, pidon_solution_free>;
using Model = Handle<pidon_model, pidon_model_free>;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure{"io", "cannot open " + path.string() + " for writing"};
  f << text;
  if (!f) throw Failure{"io", "write failed for " + path.string()};
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Failure{"io", "cannot read " + path.string()};
  return std::string(std::istreambuf_iterator<char>(f), {});
}

struct Common {
  std::string config;
  std::string out_dir = "pidon_out";
  std::int64_t seed = -1;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "run configuration (JSON); built-in defaults when omitted");
  sub->add_option("--seed", c.seed, "override the run seed");
  sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  sub->add_flag("--quiet", c.quiet, "suppress progress output");
}

void load_config(const Common& c, Config& cfg) {
  check(pidon_config_load(c.config.empty() ? nullptr : c.config.c_str(), &cfg.p));
  if (c.seed >= 0) check(pidon_config_set_seed(cfg.p, static_cast<std::uint64_t>(c.seed)));
}

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out_dir);
  return c.out_dir;
}

void log(const Common& c, const std::string& line) {
  if (!c.quiet) std::cerr << line << "\n";
}

void on_warning(const char* msg, void*) { std::cerr << "pidon: warning: " << msg << "\n"; }

int on_epoch(int epoch, const char* phase, double total, void* user) {
  if (!*static_cast<bool*>(user)) std::fprintf(stderr, "epoch %d phase %s loss %.6e\n", epoch, phase, total);
  return 0;
}

void set_design(const std::vector<std::string>& sets, Config& cfg) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Failure{"invalid_input", "--design expects name=value, got '" + s + "'"};
    double v = 0;
    try {
      v = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw Failure{"invalid_input", "--design value is not a number: '" + s + "'"};
    }
    check(pidon_config_set_design_variable(cfg.p, s.substr(0, eq).c_str(), v));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pidon: physics-informed operator learning for autoclave curing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pidon_version());

  Common common;
  std::string model_path, designs_path, resume_path, kind;
  std::vector<std::string> design_sets;
  std::string which = "both";

  auto* simulate = app.add_subcommand("simulate", "reference finite-difference solve for the config design");
  add_common(simulate, common);
  simulate->add_option("--design", design_sets, "override a design variable, name=value (repeatable)");

  auto* sample = app.add_subcommand("sample", "draw training and test design sets");
  add_common(sample, common);
  sample->add_option("--set", which, "train, test or both")->check(CLI::IsMember({"train", "test", "both"}));

  auto* train = app.add_subcommand("train", "train the operator triplet");
  add_common(train, common);
  train->add_option("--resume", resume_path, "checkpoint to continue from");

  auto* evaluate = app.add_subcommand("evaluate", "metrics against the reference solver");
  add_common(evaluate, common);
  evaluate->add_option("--model", model_path, "trained checkpoint")->required();
  evaluate->add_option("--designs", designs_path, "design CSV (default: the config's test set)");

  auto* predict = app.add_subcommand("predict", "predicted fields for one design");
  add_common(predict, common);
  predict->add_option("--model", model_path, "trained checkpoint")->required();
  predict->add_option("--design", design_sets, "override a design variable, name=value (repeatable)");

  auto* ablate = app.add_subcommand("ablate", "matched-budget ablation study");
  add_common(ablate, common);
  ablate->add_option("--kind", kind, "decoder, curriculum or domain_decomp")
      ->required()
      ->check(CLI::IsMember({"decoder", "curriculum", "domain_decomp"}));

  auto* plot = app.add_subcommand("export-plot-data", "mid-point traces of prediction and reference");
  add_common(plot, common);
  plot->add_option("--model", model_path, "trained checkpoint")->required();
  plot->add_option("--design", design_sets, "override a design variable, name=value (repeatable)");

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const CLI::App* sub : app.get_subcommands({})) known = known || sub->get_name() == argv[1];
    if (!known) {
      std::cerr << "pidon: error: usage: unknown subcommand '" << argv[1] << "'\n" << app.help();
      return 2;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "pidon: error: usage: " << e.what() << "\n" << app.help();
    return 2;
  }

  pidon_set_warning_callback(on_warning, nullptr);
  try {
    Config cfg;
    load_config(common, cfg);

    if (*simulate) {
      set_design(design_sets, cfg);
      Solution sol;
      check(pidon_simulate(cfg.p, &sol.p));
      const fs::path dir = out_dir(common);
      Str csv, manifest;
      check(pidon_solution_csv(sol.p, &csv.p));
      check(pidon_solution_manifest(sol.p, &manifest.p));
      write_file(dir / "solution.csv", csv.str());
      write_file(dir / "manifest.json", manifest.str());
      double T = 0, t = 0, x = 0;
      check(pidon_solution_exotherm(sol.p, &T, &t, &x));
      std::printf("exotherm T_max_C=%.6f t_s=%.3f x_local=%.4f\n", T, t, x);
    } else if (*sample) {
      if (common.seed >= 0)
        check(pidon_config_set_design_seeds(cfg.p, static_cast<std::uint64_t>(common.seed),
                                            static_cast<std::uint64_t>(common.seed) + 1));
      const fs::path dir = out_dir(common);
      for (auto [name, set] : {std::pair{"train", PIDON_DESIGNS_TRAIN}, std::pair{"test", PIDON_DESIGNS_TEST}}) {
        if (which != "both" && which != name) continue;
        Str csv;
        check(pidon_sample_designs(cfg.p, set, &csv.p));
        write_file(dir / (std::string("designs_") + name + ".csv"), csv.str());
      }
    } else if (*train) {
      Model resume;
      if (!resume_path.empty()) check(pidon_model_load(resume_path.c_str(), &resume.p));
      const fs::path dir = out_dir(common);
      const std::string ckpt = (dir / "model.ckpt").string();
      Model m;
      check(pidon_train(cfg.p, resume.p, ckpt.c_str(), on_epoch, &common.quiet, &m.p));
      check(pidon_model_save(m.p, ckpt.c_str()));
      Str hist, summary, resolved;
      check(pidon_model_history_csv(m.p, &hist.p));
      check(pidon_model_summary_json(m.p, &summary.p));
      check(pidon_config_to_json(cfg.p, &resolved.p));
      write_file(dir / "history.csv", hist.str());
      write_file(dir / "summary.json", summary.str());
      write_file(dir / "config.resolved.json", resolved.str());
      if (pidon_model_diverged(m.p))
        throw Failure{"diverged", "training diverged; last good state saved to " + ckpt};
      std::printf("trained epochs=%d checkpoint=%s\n", pidon_model_epochs_done(m.p), ckpt.c_str());
    } else if (*evaluate) {
      Model m;
      check(pidon_model_load(model_path.c_str(), &m.p));
      std::string designs;
      if (!designs_path.empty()) designs = read_file(designs_path);
      Str metrics;
      check(pidon_evaluate(m.p, cfg.p, designs_path.empty() ? nullptr : designs.c_str(), &metrics.p));
      write_file(out_dir(common) / "metrics.json", metrics.str());
      std::printf("%s", metrics.str().c_str());
    } else if (*predict) {
      set_design(design_sets, cfg);
      Model m;
      check(pidon_model_load(model_path.c_str(), &m.p));
      Solution sol;
      check(pidon_predict(m.p, cfg.p, &sol.p));
      Str csv;
      check(pidon_solution_csv(sol.p, &csv.p));
      write_file(out_dir(common) / "prediction.csv", csv.str());
    } else if (*ablate) {
      Str report;
      check(pidon_ablate(cfg.p, kind.c_str(), &report.p));
      write_file(out_dir(common) / ("ablation_" + kind + ".json"), report.str());
      log(common, "wrote " + (fs::path(common.out_dir) / ("ablation_" + kind + ".json")).string());
    } else if (*plot) {
      set_design(design_sets, cfg);
      Model m;
      check(pidon_model_load(model_path.c_str(), &m.p));
      Str csv;
      check(pidon_plot_data(m.p, cfg.p, &csv.p));
      write_file(out_dir(common) / "plot_data.csv", csv.str());
    }
  } catch (const Failure& f) {
    std::string msg = f.message;
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "pidon: error: " << f.kind << ": " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pidon: error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
