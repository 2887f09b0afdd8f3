#include "dhl_cli/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dhl/errors.hpp"
#include "dhl_cli/output.hpp"

namespace dhl::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

double to_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + text + "'");
  }
  if (used != text.size()) throw UsageError("not a number: '" + text + "'");
  return value;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

ExperimentOptions RunConfig::experiment_options() const {
  ExperimentOptions o;
  o.threads = threads;
  o.chunks = chunks;
  o.seed = parse_seed_kind(seed_spec);
  o.depth = depth;
  o.population_size = size;
  o.leaf_population_size = leaf_size;
  o.mode = parse_kernel_mode(mode);
  return o;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("grid must be start:step:stop");
    const double start = to_double(parts[0]);
    const double step = to_double(parts[1]);
    const double stop = to_double(parts[2]);
    if (step == 0.0) {
      if (start != stop) throw UsageError("grid step is zero");
      return {start};
    }
    if ((stop - start) / step < 0.0) throw UsageError("grid step points away from stop");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) grid.push_back(start + step * static_cast<double>(i));
    return grid;
  }
  for (const auto& part : split(text, ',')) grid.push_back(to_double(part));
  if (grid.empty()) throw UsageError("empty grid");
  return grid;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    const double v = to_double(part);
    if (v != std::floor(v)) throw UsageError("not an integer: '" + part + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& console, std::ostream& errors) {
  RunConfig config;
  CLI::App app{"Critical diamond hierarchical lattice: variance profile, correlation measure, cascades and chaos"};
  app.option_defaults()->always_capture_default();
  app.add_option("command", config.command, "rfunc | correlation | simulate | gmc | fixed-point")
      ->required()
      ->check(CLI::IsMember({"rfunc", "correlation", "simulate", "gmc", "fixed-point"}));
  app.add_option("--b", config.b, "branching number")->check(CLI::Range(2, 16));
  app.add_option("--s", config.s, "segmenting number (0: equal to b)")->check(CLI::Range(0, 16));
  app.add_option("--r", config.r, "parameter r");
  app.add_option("--a", config.a, "parameter shift a >= 0");
  app.add_option("--n", config.n, "generation")->check(CLI::Range(0, 64));
  app.add_option("--depth", config.depth, "population depth m")->check(CLI::Range(1, 4096));
  app.add_option("--size", config.size, "population size");
  app.add_option("--seed", config.seed, "master seed");
  app.add_option("--seed-spec", config.seed_spec, "deterministic-one | lognormal | two-point");
  app.add_option("--mode", config.mode, "kernel mode: exact-discrete | asymptotic");
  app.add_option("--grid", config.grid, "r grid as start:step:stop or a comma list");
  app.add_option("--out", config.out, "output directory");
  app.add_option("--threads", config.threads, "worker threads (0: hardware)");
  app.add_option("--chunks", config.chunks, "RNG chunk count")->check(CLI::Range(1u, 1u << 20));
  app.add_flag("--allow-flagged", config.allow_flagged, "exit 0 when checks are only flagged");
  app.add_option("--realizations", config.realizations, "measure realizations (0: command default)");
  app.add_option("--draws", config.draws, "GMC draws per realization (0: command default)");
  app.add_option("--leaf-size", config.leaf_size, "leaf population size for measure samples");
  app.add_option("--k-max", config.k_max, "highest moment order in tables")->check(CLI::Range(2, kMomentOrderBudget));
  app.add_option("--check", config.check, "gmc: shift | mean | kahane | conditional | renormalization | strong-disorder | all");
  app.add_option("--orders", config.orders, "Kahane moment orders, comma separated");
  app.set_config("--config", "", "key=value file; flags on the command line override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, console, errors) == 0 ? 0 : 2;
  }

  const std::filesystem::path out = config.out;
  const auto started = std::chrono::steady_clock::now();
  CommandResult result;
  try {
    std::filesystem::create_directories(out);
    if (config.command == "rfunc") result = cmd_rfunc(config, out);
    if (config.command == "correlation") result = cmd_correlation(config, out);
    if (config.command == "simulate") result = cmd_simulate(config, out);
    if (config.command == "gmc") result = cmd_gmc(config, out);
    if (config.command == "fixed-point") result = cmd_fixed_point(config, out, console);
  } catch (const UsageError& e) {
    errors << "dhl " << config.command << ": " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    errors << "dhl " << config.command << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    errors << "dhl " << config.command << ": " << e.what() << '\n';
    return 3;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  // Resolved configuration, re-runnable as --config.
  std::string snapshot = app.config_to_str(true, false);
  {
    std::ofstream file(out / "config.ini", std::ios::binary | std::ios::trunc);
    file << snapshot;
  }
  nlohmann::json config_json = nlohmann::json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    const std::string key = opt->get_single_name();
    config_json[key] = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
  }

  bool failed = false;
  bool flagged = false;
  nlohmann::json checks = nlohmann::json::array();
  nlohmann::json notes = result.notes;
  for (const auto& report : result.reports) {
    failed = failed || report.any(Verdict::kFail);
    flagged = flagged || report.any(Verdict::kFlagged);
    for (const auto& c : report.checks) {
      auto j = to_json(c);
      j["report"] = report.name;
      checks.push_back(j);
    }
    for (const auto& note : report.notes) {
      if (std::find(notes.begin(), notes.end(), note) == notes.end()) notes.push_back(note);
    }
  }
  const bool ok = !failed && (config.allow_flagged || !flagged);
  nlohmann::json manifest = {{"tool", "dhl"},
                             {"version", DHL_VERSION},
                             {"command", config.command},
                             {"config", config_json},
                             {"started_utc", utc_timestamp()},
                             {"wall_clock_seconds", seconds},
                             {"checks", checks},
                             {"notes", notes},
                             {"files", result.files},
                             {"status", ok ? "pass" : (failed ? "fail" : "flagged")}};
  write_json(out / "manifest.json", manifest);

  for (const auto& report : result.reports) {
    for (const auto& c : report.checks) {
      console << '[' << to_string(c.verdict) << "] " << report.name << '/' << c.name << "  estimate "
              << format_number(c.estimate) << "  target " << format_number(c.target);
      if (c.se > 0.0) console << "  se " << format_number(c.se);
      if (!c.note.empty()) console << "  (" << c.note << ')';
      console << '\n';
    }
  }
  console << "status: " << (ok ? "pass" : (failed ? "fail" : "flagged")) << "  (" << out.string() << "/manifest.json)\n";
  return ok ? 0 : 1;
}

}  // namespace dhl::cli
