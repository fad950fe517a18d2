// fqk: run one configured experiment.

#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"

#include "experiments.hpp"
#include "fqk/init.hpp"
#include "fqk/parallel.hpp"
#include "fqk/readout.hpp"
#include "fqk/twotone.hpp"

namespace {

// Appends the config line of the first quoted key named in `msg`.
std::string with_line(const std::string& msg, const std::string& path) {
  std::ifstream in(path);
  if (!in) return msg;
  std::smatch m;
  std::vector<std::string> keys;
  static const std::regex quoted("'([^']+)'");
  for (auto it = std::sregex_iterator(msg.begin(), msg.end(), quoted); it != std::sregex_iterator(); ++it) {
    keys.push_back((*it)[1]);
  }
  static const std::regex dotted(R"(config((\.[A-Za-z0-9_]+)+))");
  if (std::regex_search(msg, m, dotted)) {
    std::string p = m[1];
    keys.push_back(p.substr(p.rfind('.') + 1));
  }
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  for (const auto& k : keys) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].find('"' + k + '"') != std::string::npos) {
        return msg + " (" + path + ":" + std::to_string(i + 1) + ")";
      }
    }
  }
  return msg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fqk::cli;
  CLI::App app{"fqk: Floquet qubit experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::size_t workers = 0;
  long long seed = -1;
  bool quiet = false;
  for (const char* name : {"run", "bench", "validate"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "run"        ? "run the configured experiment"
                                         : std::string(name) == "bench"    ? "time quasiphase points per numerator"
                                                                           : "check the config and exit");
    sub->add_option("config", config_path, "JSON config file")->required();
  }
  app.add_option("--out-dir", out_dir, "output directory (overrides the config)");
  app.add_option("--workers", workers, "worker threads, 0 = all cores");
  app.add_option("--seed", seed, "seed for synthetic generators")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", quiet, "no summary on stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (app.count("--workers")) cfg.workers = workers;
    if (cfg.workers == 0) cfg.workers = fqk::default_workers();
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    Context ctx(std::move(cfg), cmd == "validate", cmd == "bench");
    nlohmann::json summary;
    try {
      summary = run_experiment(ctx);
    } catch (const ValidateOnly&) {
      if (!quiet) std::cout << "config ok: " << ctx.cfg.experiment << '\n';
      return 0;
    }
    if (ctx.out) ctx.out->write_manifest();
    if (!quiet) std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << with_line(e.what(), config_path) << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fqk::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << " (estimated error " << e.est_error() << ", " << e.steps()
              << " steps)\n";
    return 3;
  } catch (const fqk::LindbladError& e) {
    std::cerr << "master equation error: " << e.what() << " (t = " << e.time() << " ns, step " << e.step()
              << " ns)\n";
    return 3;
  } catch (const fqk::AnticrossingNotFound& e) {
    std::cerr << "extraction error: " << e.what() << '\n';
    for (const auto& a : e.audit()) {
      std::cerr << "  p=" << a.p << " found=" << a.found.size() << " survivors=" << a.survivors.size()
                << (a.skipped ? " skipped" : "") << (a.note.empty() ? "" : " " + a.note) << '\n';
    }
    return 3;
  } catch (const fqk::BoundaryNotFound& e) {
    std::cerr << "boundary error: " << e.what() << " (F at range ends " << e.f_low() << ", " << e.f_high() << ")\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "physics error: " << e.what() << '\n';
    return 3;
  } catch (const fqk::LabelingAmbiguity& e) {
    std::cerr << "physics error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
