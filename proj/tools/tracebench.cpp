// Batch runner: simulate, compare, replay, validate-config.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid config or usage.

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tracebench/config.hpp"
#include "tracebench/core.hpp"
#include "tracebench/event_log.hpp"
#include "tracebench/log.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/simulation.hpp"

namespace fs = std::filesystem;
using namespace tracebench;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw UsageError("--seeds expects a..b, got '" + s + "'");
  try {
    std::size_t used = 0;
    const std::uint64_t a = std::stoull(s.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(s);
    const std::string rest = s.substr(dots + 2);
    const std::uint64_t b = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    if (b < a) throw UsageError("--seeds range is empty: " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("--seeds expects a..b, got '" + s + "'");
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw std::runtime_error("cannot write " + p.string());
}

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out_dir;
  std::string protocol;
};

int cmd_simulate(const SimulateArgs& args) {
  ScenarioConfig base = load_config(args.config);
  std::vector<ProtocolKind> protocols = {base.protocol.kind};
  if (args.protocol == "all") {
    protocols = all_protocols();
  } else if (!args.protocol.empty()) {
    try {
      protocols = {protocol_from_string(args.protocol)};
    } catch (const std::exception& e) {
      throw UsageError(std::string("--protocol: ") + e.what());
    }
  }
  std::vector<std::uint64_t> seeds = {args.seed.value_or(base.seed)};
  if (!args.seeds.empty()) {
    if (args.seed) throw UsageError("--seed and --seeds are mutually exclusive");
    const auto [a, b] = parse_seed_range(args.seeds);
    seeds.clear();
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  }
  const fs::path root = args.out_dir.empty() ? fs::path(base.output.dir) : fs::path(args.out_dir);

  struct Job {
    ScenarioConfig config;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : seeds) {
    for (ProtocolKind p : protocols) {
      Job j{base, root};
      j.config.seed = seed;
      j.config.protocol.kind = p;
      if (seeds.size() > 1) j.dir /= "seed-" + std::to_string(seed);
      if (protocols.size() > 1) j.dir /= to_string(p);
      validate(j.config);
      jobs.push_back(std::move(j));
    }
  }

  // Runs are fully isolated, so a sweep fans out across workers.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  std::mutex out_mu;
  auto work = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        RunPaths paths;
        simulate_to_dir(jobs[k].config, jobs[k].dir, &paths);
        std::lock_guard lock(out_mu);
        std::cout << paths.report.string() << '\n';
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(jobs.size(), std::max(1U, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return 0;
}

struct CompareArgs {
  std::vector<std::string> reports;
  bool force = false;
  std::string format = "markdown";
  std::string output;
};

int cmd_compare(const CompareArgs& args) {
  std::vector<nlohmann::json> reports;
  for (const std::string& p : args.reports) {
    try {
      reports.push_back(nlohmann::json::parse(read_file(p)));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(p + ": not a report: " + e.what());
    }
  }
  CompareTable table;
  try {
    table = compare_reports(reports, args.force);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  const std::string text = args.format == "csv" ? to_csv(table) : to_markdown(table);
  if (args.output.empty()) {
    std::cout << text;
  } else {
    write_file(args.output, text);
  }
  return 0;
}

struct ReplayArgs {
  std::string log;
  std::string output;
  std::string check;
};

int cmd_replay(const ReplayArgs& args) {
  std::ifstream in(args.log, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + args.log);
  const std::string text = render_report(report_from_log(in, fs::path(args.log).filename().string()));
  if (!args.check.empty()) {
    if (read_file(args.check) != text) {
      std::cerr << "tracebench: replayed report differs from " << args.check << '\n';
      return kExitRuntime;
    }
    std::cout << "report matches " << args.check << '\n';
    return 0;
  }
  if (args.output.empty()) {
    std::cout << text;
  } else {
    write_file(args.output, text);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const ScenarioConfig c = load_config(path);
  validate(c);
  std::cout << "ok " << config_hash(c) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tracebench: contact tracing protocol simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a scenario and write its event log and report");
  simulate->add_option("--config", sim.config, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "override the scenario seed");
  simulate->add_option("--seeds", sim.seeds, "seed sweep a..b (inclusive); one subdirectory per seed");
  simulate->add_option("--out-dir", sim.out_dir, "output directory (default: output.dir from the config)");
  simulate->add_option("--protocol", sim.protocol, "override the protocol, or 'all'");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "tabulate reports from runs on the same world");
  compare->add_option("reports", cmp.reports, "report files")->required()->check(CLI::ExistingFile);
  compare->add_flag("--force", cmp.force, "compare even when the worlds differ");
  compare->add_option("--format", cmp.format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
  compare->add_option("--output", cmp.output, "write the table here instead of stdout");

  ReplayArgs rep;
  auto* replay = app.add_subcommand("replay", "regenerate a report from an event log");
  replay->add_option("log", rep.log, "event log (JSON Lines)")->required();
  replay->add_option("--output", rep.output, "write the report here instead of stdout");
  replay->add_option("--check", rep.check, "compare against an existing report; exit 1 on difference");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate-config", "check a scenario config");
  validate_cmd->add_option("config", validate_path, "scenario config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*compare) return cmd_compare(cmp);
    if (*replay) return cmd_replay(rep);
    if (*validate_cmd) return cmd_validate(validate_path);
  } catch (const ConfigError& e) {
    std::cerr << "tracebench: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "tracebench: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "tracebench: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
